//! The classgit submission server: accounts and sessions, assignments with
//! invite codes, enrollment by cloning a template, and the fetch/push protocol.

pub mod auth;
pub mod clock;
pub mod config;
mod error;
pub mod http;
mod server;
mod service;
pub mod state;

use std::sync::Arc;

use classgit_core::objstore::{FileStore, MemoryStore};

pub use error::{Result, ServiceError};
pub use server::{serve, BackgroundServer};
pub use service::{Caller, CrawlReport, PushStep, Service, ServiceOptions, DEFAULT_TOKEN_LIFETIME};

impl Service {
    /// Objects and metadata in memory.
    pub fn in_memory(options: ServiceOptions) -> Self {
        Service::new(
            Arc::new(MemoryStore::new()),
            Box::new(state::MemoryPersistence::new()),
            options,
        )
        .expect("empty in-memory state always loads")
    }

    /// Objects under `<dir>/objects`, metadata in `<dir>/state.json`.
    pub fn open_dir(dir: &std::path::Path, options: ServiceOptions) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::Storage(format!("{}: {e}", dir.display())))?;
        let store = FileStore::open(dir.join("objects"))?;
        Service::new(
            Arc::new(store),
            Box::new(state::FilePersistence::new(dir.join("state.json"))),
            options,
        )
    }
}
