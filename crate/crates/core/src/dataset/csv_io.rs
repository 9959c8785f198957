//! Canonical recording file: UTF-8 CSV, a header of the 14 channel names,
//! then one row per sample.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{ChannelId, Recording, Task, MIN_SAMPLES, N_CHANNELS};
use crate::error::{Error, Result};

/// Reads a recording file and attaches the given metadata.
pub fn import_recording(path: &Path, subject: u32, task: Task, label: u8) -> Result<Recording> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_recording_csv(file, path, subject, task, label)
}

/// Parses CSV from any reader; `path` is only used in error messages.
///
/// Columns are mapped to channel order by header name, so files written with
/// a permuted header are accepted.
pub fn read_recording_csv<R: Read>(reader: R, path: &Path, subject: u32, task: Task, label: u8) -> Result<Recording> {
    let fmt_err = |line: u64, message: String| Error::Format {
        path: path.to_path_buf(),
        line: line as usize,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| fmt_err(1, format!("unreadable header: {e}")))?
        .clone();
    if headers.len() != N_CHANNELS {
        return Err(fmt_err(
            1,
            format!("header has {} columns, expected {N_CHANNELS}", headers.len()),
        ));
    }
    // column -> channel row
    let mut column_to_row = [0usize; N_CHANNELS];
    let mut seen = [false; N_CHANNELS];
    for (col, name) in headers.iter().enumerate() {
        let ch = ChannelId::from_name(name).ok_or_else(|| fmt_err(1, format!("unknown channel name '{name}'")))?;
        if seen[ch.index()] {
            return Err(fmt_err(1, format!("duplicate channel '{name}'")));
        }
        seen[ch.index()] = true;
        column_to_row[col] = ch.index();
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); N_CHANNELS];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            fmt_err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != N_CHANNELS {
            return Err(fmt_err(
                line,
                format!("row has {} columns, expected {N_CHANNELS}", record.len()),
            ));
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell
                .parse()
                .map_err(|_| fmt_err(line, format!("non-numeric cell '{cell}' in column {}", col + 1)))?;
            if !value.is_finite() {
                return Err(fmt_err(line, format!("non-finite value in column {}", col + 1)));
            }
            columns[column_to_row[col]].push(value);
        }
    }

    let n = columns[0].len();
    if n < MIN_SAMPLES {
        return Err(fmt_err(
            n as u64 + 1,
            format!("{n} sample rows, need at least {MIN_SAMPLES}"),
        ));
    }
    let flat: Vec<f64> = columns.into_iter().flatten().collect();
    let samples = Array2::from_shape_vec((N_CHANNELS, n), flat).map_err(|e| Error::Shape(e.to_string()))?;
    Recording::new(samples, subject, task, label)
}

/// Writes the canonical CSV. Values use the shortest round-trip representation.
pub fn write_recording_csv(recording: &Recording, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header: Vec<&str> = ChannelId::ALL.iter().map(|c| c.name()).collect();
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", header.join(",")).map_err(io)?;
    let samples = recording.samples();
    let mut line = String::new();
    for s in 0..recording.n_samples() {
        line.clear();
        for ch in 0..N_CHANNELS {
            if ch > 0 {
                line.push(',');
            }
            line.push_str(&samples[[ch, s]].to_string());
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        ChannelId::ALL.map(|c| c.name()).join(",")
    }

    fn csv_text(rows: usize, cols: usize) -> String {
        let mut s = header() + "\n";
        for r in 0..rows {
            let row: Vec<String> = (0..cols).map(|c| format!("{}.5", r * 100 + c)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    fn parse(text: &str) -> Result<Recording> {
        read_recording_csv(text.as_bytes(), Path::new("t.csv"), 1, Task::Digit, 3)
    }

    #[test]
    fn full_trial_parses() {
        let rec = parse(&csv_text(1280, 14)).unwrap();
        assert_eq!(rec.n_samples(), 1280);
        assert_eq!(rec.samples().nrows(), 14);
        assert_eq!(rec.samples()[[2, 7]], 702.5);
        assert_eq!(rec.label, 3);
    }

    #[test]
    fn minimum_length_accepted() {
        assert_eq!(parse(&csv_text(32, 14)).unwrap().n_samples(), 32);
        assert!(matches!(parse(&csv_text(31, 14)), Err(Error::Format { .. })));
    }

    #[test]
    fn thirteen_columns_rejected_with_line() {
        let err = parse(&csv_text(40, 13)).unwrap_err();
        match err {
            Error::Format { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("13 columns"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_names_line() {
        let mut text = csv_text(40, 14);
        text = text.replacen("500.5", "abc", 1);
        match parse(&text).unwrap_err() {
            Error::Format { line, message, .. } => {
                assert_eq!(line, 7);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn permuted_header_maps_by_name() {
        let mut names: Vec<&str> = ChannelId::ALL.iter().map(|c| c.name()).collect();
        names.swap(0, 13);
        let mut text = names.join(",") + "\n";
        for r in 0..32 {
            let row: Vec<String> = (0..14).map(|c| (r * 100 + c).to_string()).collect();
            text += &(row.join(",") + "\n");
        }
        let rec = parse(&text).unwrap();
        assert_eq!(rec.samples()[[13, 1]], 100.0);
        assert_eq!(rec.samples()[[0, 1]], 113.0);
    }

    #[test]
    fn write_then_read_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let samples = Array2::from_shape_fn((14, 40), |(c, s)| (c as f64 + 0.1) * (s as f64).sin());
        let rec = Recording::new(samples, 4, Task::Image, 7).unwrap();
        write_recording_csv(&rec, &path).unwrap();
        let back = import_recording(&path, 4, Task::Image, 7).unwrap();
        assert_eq!(back, rec);
    }
}
