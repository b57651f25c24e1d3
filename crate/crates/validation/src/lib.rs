//! Holds the acceptance suite in `tests/acceptance.rs`. Run it with
//! `cargo test -p cavity-kit-validation --release -- --nocapture`.
//!
//! It lives in its own package so that `cargo test --workspace` runs it after
//! the unit and integration suites of the other crates.
