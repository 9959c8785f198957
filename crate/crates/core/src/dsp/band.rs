use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandName {
    Delta,
    Theta,
    Alpha,
    Beta,
    Gamma,
    /// δ+β+γ: everything except θ and α.
    Dbg,
    /// Unfiltered signal.
    All,
}

impl BandName {
    /// Column order of the result tables.
    pub const ALL: [BandName; 7] = [
        BandName::Delta,
        BandName::Theta,
        BandName::Alpha,
        BandName::Beta,
        BandName::Gamma,
        BandName::Dbg,
        BandName::All,
    ];

    pub fn key(self) -> &'static str {
        match self {
            BandName::Delta => "delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Beta => "beta",
            BandName::Gamma => "gamma",
            BandName::Dbg => "dbg",
            BandName::All => "all",
        }
    }

    /// Table header label.
    pub fn label(self) -> &'static str {
        match self {
            BandName::Delta => "δ",
            BandName::Theta => "θ",
            BandName::Alpha => "α",
            BandName::Beta => "β",
            BandName::Gamma => "γ",
            BandName::Dbg => "δ+β+γ",
            BandName::All => "All",
        }
    }
}

impl fmt::Display for BandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for BandName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        BandName::ALL
            .iter()
            .copied()
            .find(|b| b.key() == s)
            .or(match s.as_str() {
                "δ+β+γ" | "delta+beta+gamma" | "bandreject" => Some(BandName::Dbg),
                "raw" | "none" => Some(BandName::All),
                _ => None,
            })
            .ok_or_else(|| Error::Usage(format!("unknown band '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Lowpass,
    Bandpass,
    Highpass,
    Bandreject,
    Identity,
}

/// Which set of band edges to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandEdges {
    /// δ <4, θ 4–7, α 7–15, β 15–31, γ >31 Hz.
    #[default]
    Methodology,
    /// δ <4, θ 4–7, α 8–15, β 16–31, γ >32 Hz.
    Introduction,
}

impl fmt::Display for BandEdges {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandEdges::Methodology => "methodology",
            BandEdges::Introduction => "introduction",
        })
    }
}

impl FromStr for BandEdges {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "methodology" => Ok(BandEdges::Methodology),
            "introduction" => Ok(BandEdges::Introduction),
            other => Err(Error::Usage(format!("unknown band-edge preset '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub name: BandName,
    pub kind: FilterKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub low_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub high_hz: Option<f64>,
}

impl BandSpec {
    pub fn new(name: BandName) -> Self {
        Self::with_edges(name, BandEdges::Methodology)
    }

    pub fn with_edges(name: BandName, edges: BandEdges) -> Self {
        use BandName::*;
        use FilterKind::*;
        let (kind, low, high) = match (edges, name) {
            (_, Delta) => (Lowpass, None, Some(4.0)),
            (_, Theta) => (Bandpass, Some(4.0), Some(7.0)),
            (BandEdges::Methodology, Alpha) => (Bandpass, Some(7.0), Some(15.0)),
            (BandEdges::Introduction, Alpha) => (Bandpass, Some(8.0), Some(15.0)),
            (BandEdges::Methodology, Beta) => (Bandpass, Some(15.0), Some(31.0)),
            (BandEdges::Introduction, Beta) => (Bandpass, Some(16.0), Some(31.0)),
            (BandEdges::Methodology, Gamma) => (Highpass, Some(31.0), None),
            (BandEdges::Introduction, Gamma) => (Highpass, Some(32.0), None),
            (_, Dbg) => (Bandreject, Some(4.0), Some(15.0)),
            (_, All) => (Identity, None, None),
        };
        Self {
            name,
            kind,
            low_hz: low,
            high_hz: high,
        }
    }

    /// Cutoff frequencies in ascending order.
    pub fn cutoffs(&self) -> Vec<f64> {
        self.low_hz.into_iter().chain(self.high_hz).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methodology_edges() {
        let b = |n| BandSpec::new(n);
        assert_eq!(b(BandName::Delta).kind, FilterKind::Lowpass);
        assert_eq!(b(BandName::Delta).high_hz, Some(4.0));
        assert_eq!(b(BandName::Theta).cutoffs(), vec![4.0, 7.0]);
        assert_eq!(b(BandName::Alpha).cutoffs(), vec![7.0, 15.0]);
        assert_eq!(b(BandName::Beta).cutoffs(), vec![15.0, 31.0]);
        assert_eq!(b(BandName::Gamma).kind, FilterKind::Highpass);
        assert_eq!(b(BandName::Gamma).low_hz, Some(31.0));
        assert_eq!(b(BandName::Dbg).kind, FilterKind::Bandreject);
        assert_eq!(b(BandName::Dbg).cutoffs(), vec![4.0, 15.0]);
        assert_eq!(b(BandName::All).kind, FilterKind::Identity);
    }

    #[test]
    fn introduction_edges() {
        let b = |n| BandSpec::with_edges(n, BandEdges::Introduction);
        assert_eq!(b(BandName::Alpha).cutoffs(), vec![8.0, 15.0]);
        assert_eq!(b(BandName::Beta).cutoffs(), vec![16.0, 31.0]);
        assert_eq!(b(BandName::Gamma).cutoffs(), vec![32.0]);
    }

    #[test]
    fn parse_names() {
        for b in BandName::ALL {
            assert_eq!(b.key().parse::<BandName>().unwrap(), b);
        }
        assert_eq!("δ+β+γ".parse::<BandName>().unwrap(), BandName::Dbg);
        assert!("kappa".parse::<BandName>().is_err());
    }
}
