//! Holds the acceptance target in `tests/acceptance.rs`. It lives in its own crate
//! so that `cargo test --workspace` runs it after every other test binary.
