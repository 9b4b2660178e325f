//! Criterion benchmarks for the ridgekernel crate; see `benches/`.
