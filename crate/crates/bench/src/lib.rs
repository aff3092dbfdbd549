//! Criterion benchmarks for the IRT toolkit; see `benches/`.
