//! Criterion benchmarks for the MPPI visual servoing engine live in `benches/`.
