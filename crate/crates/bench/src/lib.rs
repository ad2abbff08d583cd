//! Criterion benchmarks for the solver, spectrum and fitting paths; see `benches/`.
