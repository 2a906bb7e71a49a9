//! Criterion benchmarks for the simulation and reconstruction hot paths; see `benches/`.
