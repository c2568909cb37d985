//! Desk-scale benchmarks: storage against a ZIP-per-submission baseline,
//! simultaneous submissions, and teammates racing one branch.

mod concurrency;
mod report;
mod storage;
mod workload;

pub use concurrency::{run_concurrency_bench, run_race_bench, Client, Invocation, Target};
pub use report::{BenchReport, Latency, RaceFigures, StorageFigures};
pub use storage::{run_storage_bench, zip_size};
pub use workload::{Content, Snapshot, Workload};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark setup failed: {0}")]
    SetupFailed(String),
    #[error("{user}: `mgit {command}` exited {code}: {stderr}")]
    Client {
        user: String,
        command: String,
        code: i32,
        stderr: String,
    },
    #[error(transparent)]
    Service(#[from] classgit_service::ServiceError),
    #[error(transparent)]
    Core(#[from] classgit_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;
