//! Library surface of the batch driver; the `qdmet` binary is a thin shell
//! over [`config`] and [`runner`].

pub mod config;
pub mod runner;
