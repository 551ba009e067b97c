//! Criterion benchmarks for `jointmeas`; see `benches/`.
