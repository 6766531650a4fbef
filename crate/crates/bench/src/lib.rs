//! Benchmarks live in `benches/`, the acceptance run in `tests/acceptance.rs`.
