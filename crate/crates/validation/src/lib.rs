//! Acceptance harness for `objnav-core`. The checks live in
//! `tests/acceptance.rs` and run with `cargo test -p objnav-validation`;
//! they share fixtures and oracles with the core integration tests.
