//! Criterion benchmarks for the deepmod link; see `benches/`.
