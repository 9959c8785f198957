use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::ResultGrid;
use crate::dataset::{Task, N_CLASSES};
use crate::dsp::BandName;
use crate::error::{Error, Result};
use crate::segmentation::LobeName;
use crate::training::Confusion;

pub const CSV_CORNER: &str = "Part/Band";

/// Which cells get a confusion-matrix figure. `None` selects everything.
#[derive(Debug, Clone, Default)]
pub struct CellFilter {
    pub lobes: Option<Vec<LobeName>>,
    pub bands: Option<Vec<BandName>>,
}

impl CellFilter {
    pub fn matches(&self, lobe: LobeName, band: BandName) -> bool {
        self.lobes.as_ref().is_none_or(|l| l.contains(&lobe)) && self.bands.as_ref().is_none_or(|b| b.contains(&band))
    }
}

pub fn format_accuracy(acc: f64) -> String {
    format!("{acc:.4}")
}

/// The accuracy table: lobes as rows, bands as columns, in table order.
/// Failed cells read `NA`.
pub fn results_csv(grid: &ResultGrid) -> Result<String> {
    let cells = grid.metadata.config.cells();
    let mut lobes: Vec<LobeName> = cells.iter().map(|c| c.0).collect();
    lobes.dedup();
    let mut bands: Vec<BandName> = cells.iter().map(|c| c.1).collect();
    bands.sort();
    bands.dedup();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Usage(format!("csv: {e}"));
    let mut header = vec![CSV_CORNER.to_string()];
    header.extend(bands.iter().map(|b| b.label().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for &lobe in &lobes {
        let mut row = vec![lobe.label().to_string()];
        for &band in &bands {
            row.push(
                grid.cell(lobe, band)
                    .and_then(|c| c.accuracy)
                    .map_or_else(|| "NA".to_string(), format_accuracy),
            );
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("utf-8 labels"))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Heatmap with true classes as rows and predictions as columns. Shading is
/// row-normalized; every cell carries its raw count in `data-count`.
pub fn render_confusion_svg(task: Task, lobe: LobeName, band: BandName, confusion: &Confusion) -> String {
    const CELL: usize = 44;
    const LEFT: usize = 96;
    const TOP: usize = 84;
    let names = task.class_names();
    let side = CELL * N_CLASSES;
    let (width, height) = (LEFT + side + 20, TOP + side + 56);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{} task, {} lobe, {} band</text>"#,
        LEFT + side / 2,
        escape(task.name()),
        escape(lobe.label()),
        escape(band.label())
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">Predicted</text>"#,
        LEFT + side / 2,
        TOP + side + 44
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">True</text>"#,
        TOP + side / 2,
        TOP + side / 2
    );
    for (j, name) in names.iter().enumerate() {
        let x = LEFT + j * CELL + CELL / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="end" font-size="11" transform="rotate(-45 {x} {})">{}</text>"#,
            TOP - 6,
            TOP - 6,
            escape(name)
        );
    }
    for (i, row) in confusion.iter().enumerate() {
        let total: u64 = row.iter().sum();
        let y = TOP + i * CELL;
        let _ = writeln!(
            s,
            r#"<g class="row" data-class="{}" data-row-total="{total}">"#,
            escape(names[i])
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#,
            LEFT - 6,
            y + CELL / 2 + 4,
            escape(names[i])
        );
        for (j, &count) in row.iter().enumerate() {
            let frac = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            let shade = |full: f64| (255.0 - frac * (255.0 - full)).round() as u8;
            let fill = format!("#{:02x}{:02x}{:02x}", shade(33.0), shade(102.0), shade(172.0));
            let ink = if frac > 0.5 { "#ffffff" } else { "#000000" };
            let x = LEFT + j * CELL;
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#cccccc" data-row="{i}" data-col="{j}" data-count="{count}"/>"##
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle" font-size="11" fill="{ink}">{count}</text>"#,
                x + CELL / 2,
                y + CELL / 2 + 4
            );
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

fn write(path: PathBuf, contents: &[u8]) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `results_<task>.csv`, `results_<task>.json` and one
/// `confusion_<task>_<lobe>_<band>.svg` per selected successful cell.
pub fn emit_reports(grid: &ResultGrid, out_dir: &Path, figures: &CellFilter) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let task = grid.task.name();
    let mut written = vec![
        write(
            out_dir.join(format!("results_{task}.csv")),
            results_csv(grid)?.as_bytes(),
        )?,
        write(
            out_dir.join(format!("results_{task}.json")),
            serde_json::to_string_pretty(grid)?.as_bytes(),
        )?,
    ];
    for cell in &grid.cells {
        let Some(confusion) = &cell.confusion else { continue };
        if !figures.matches(cell.lobe, cell.band) {
            continue;
        }
        let name = format!("confusion_{task}_{}_{}.svg", cell.lobe.key(), cell.band.key());
        let svg = render_confusion_svg(grid.task, cell.lobe, cell.band, confusion);
        written.push(write(out_dir.join(name), svg.as_bytes())?);
    }
    Ok(written)
}

/// Reads a grid previously written as `results_<task>.json`.
pub fn load_grid(path: &Path) -> Result<ResultGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
