//! Acceptance suite for `stccpm`; see `tests/acceptance.rs`.
