//! Holds the `acceptance` test target, which checks the simulator against
//! its twelve acceptance criteria and prints one PASS/FAIL line for each.
//!
//! The runner lives in its own package so that it executes after every
//! module test in a plain `cargo test --workspace` run.
