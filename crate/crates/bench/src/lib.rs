//! Criterion benchmarks for the `irs-relay` solvers live in `benches/`.
