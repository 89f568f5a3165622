//! Criterion benchmarks for the MO-DEHB workspace; see `benches/`.
