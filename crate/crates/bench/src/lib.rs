// SPDX-License-Identifier: MIT OR Apache-2.0

//! Criterion benchmarks live under `benches/`; run them with
//! `cargo bench -p parcpt-bench`.
