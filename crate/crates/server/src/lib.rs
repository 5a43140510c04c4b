//! HTTP API, background jobs and command-line tooling for the banking core.

pub mod api;
pub mod cli;
pub mod config;
pub mod jobs;
pub mod seed;

pub use api::router;
pub use config::ServerConfig;
