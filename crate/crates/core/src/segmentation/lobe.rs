use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ChannelId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LobeName {
    Frontal,
    Temporal,
    Occipital,
    Parietal,
    All,
}

impl LobeName {
    /// Row order of the result tables.
    pub const ALL: [LobeName; 5] = [
        LobeName::Frontal,
        LobeName::Temporal,
        LobeName::Occipital,
        LobeName::Parietal,
        LobeName::All,
    ];

    pub fn key(self) -> &'static str {
        match self {
            LobeName::Frontal => "frontal",
            LobeName::Temporal => "temporal",
            LobeName::Occipital => "occipital",
            LobeName::Parietal => "parietal",
            LobeName::All => "all",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LobeName::Frontal => "Frontal",
            LobeName::Temporal => "Temporal",
            LobeName::Occipital => "Occipital",
            LobeName::Parietal => "Parietal",
            LobeName::All => "All",
        }
    }

    pub fn channels(self) -> &'static [ChannelId] {
        use ChannelId::*;
        match self {
            LobeName::Frontal => &[AF3, AF4, F3, F4, F7, F8, FC5, FC6],
            LobeName::Temporal => &[T7, T8],
            LobeName::Parietal => &[P7, P8],
            LobeName::Occipital => &[O1, O2],
            LobeName::All => &ChannelId::ALL,
        }
    }

    pub fn n_channels(self) -> usize {
        self.channels().len()
    }
}

impl fmt::Display for LobeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for LobeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        LobeName::ALL
            .iter()
            .copied()
            .find(|l| l.key() == s)
            .ok_or_else(|| Error::Usage(format!("unknown lobe '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts() {
        let counts: Vec<usize> = LobeName::ALL.iter().map(|l| l.n_channels()).collect();
        assert_eq!(counts, vec![8, 2, 2, 2, 14]);
    }

    #[test]
    fn lobes_partition_the_montage() {
        let mut all: Vec<ChannelId> = LobeName::ALL[..4]
            .iter()
            .flat_map(|l| l.channels().iter().copied())
            .collect();
        all.sort();
        assert_eq!(all, ChannelId::ALL.to_vec());
    }
}
