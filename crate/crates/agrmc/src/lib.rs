//! Command-line tool and HTTP service around `agrmc-core`.
//!
//! The library half holds everything the binary and the service share:
//! JSON/DOT export, serializable reports and the verification pipeline,
//! the job store, and the request handler behind `/api/*`.

pub mod api;
pub mod export;
pub mod jobs;
pub mod report;
pub mod server;

pub use api::{Api, ApiConfig, Response};
pub use report::{verify, VerifyReport, VerifyRequest};
