//! Micro-benchmarks for the hot paths of the detection pipeline; see
//! `benches/pipeline.rs`. This library target is intentionally empty.
