//! Library side of the `tldr-corpus` binary: configuration, stage
//! runners, run manifest and the argument parser.

pub mod app;
pub mod config;
pub mod manifest;
pub mod stages;
