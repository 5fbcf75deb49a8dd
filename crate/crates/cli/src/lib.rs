//! Library surface of the `jamguard` command-line tool.
//!
//! The binary in `main.rs` is a thin argument-parsing shell; everything it
//! does lives here so integration tests can drive the same code paths.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod pipeline;
