//! Command-line plumbing: configuration, caches, CSV output and reports.

pub mod cache;
pub mod commands;
pub mod config;
pub mod csv;
pub mod report;
