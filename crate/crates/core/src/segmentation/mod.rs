//! Lobe channel selection, sliding windows, normalization and partitioning.

mod cache;
mod lobe;
mod windows;
mod windowset;

pub use cache::{read_windowset, write_windowset, CACHE_MAGIC, CACHE_VERSION};
pub use lobe::LobeName;
pub use windows::{extract_windows, window_count, Window, WINDOW_LEN, WINDOW_STRIDE};
pub use windowset::{
    build_windowset, split_sizes, NormStats, Partition, SplitMode, WindowSet, TEST_FRACTION, VAL_FRACTION,
};
