//! Placement correlation and runtime benchmarks.

mod bench;
mod placement;

pub use bench::{bench_constraints, bench_run, write_csv, BenchConfig, BenchRecord};
pub use placement::{pearson, pearson_r, placement_pairs, PlacementPair, Placements};
