//! HTTP session API for the feedscout engine, plus the pieces of the
//! `feedscout` command-line tool.
//!
//! Each live session sits behind its own lock, so calls on one session are
//! handled in arrival order while different sessions proceed in parallel.
//! Triggers and blend confirmations are pushed over server-sent events at
//! `GET /sessions/{id}/events`; see `docs/API.md` for every endpoint.

pub mod cli;
pub mod error;
pub mod routes;
pub mod state;

pub use error::ApiError;
pub use routes::router;
pub use state::{AppState, ServiceConfig};
