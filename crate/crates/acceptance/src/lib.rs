//! Holds no code; the acceptance suite lives in `tests/acceptance.rs` and
//! runs with `cargo test -p agrmc-validation --test acceptance`.
