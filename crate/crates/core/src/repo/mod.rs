//! Durable log repository and its HTTP front end.

mod service;
mod store;

pub use service::{router, AppState};
pub use store::{
    log_id, parse_payload, system_clock, Clock, IngestOutcome, LogFilter, LogFormat, LogStore, LogSummary,
    ParseStatus, StoreError, UploadMeta,
};
