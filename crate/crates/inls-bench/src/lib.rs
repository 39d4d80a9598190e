//! Criterion benchmarks for the workbench; see `benches/`.
