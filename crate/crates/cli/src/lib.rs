//! Text codecs for the bnsl command-line tool.
//!
//! The binary lives in `main.rs`; everything here is reusable parsing and
//! writing of the on-disk formats, kept as a library so the integration
//! tests can round-trip artifacts without spawning processes.

pub mod codec;
