//! Reproducible workflows over `fliplab_core`: flip graphs, certificates,
//! the product construction and the acceptance suites.

pub mod acceptance;
pub mod commands;
pub mod manifest;
pub mod oracle;
