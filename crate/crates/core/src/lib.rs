//! Version-control core for classroom assignment submission.
//!
//! - [`objstore`]: content-addressed blob/tree/commit storage with dedup accounting.
//! - [`stage`]: the staging index and working-tree status.
//! - [`history`]: trees, commits, branches, history walks, merge and clone.
//! - [`diff3`]: the line-level three-way merge behind [`history`]'s merges.
//! - [`analytics`]: similarity, contribution, timing and branch-activity reports.
//! - [`wire`]: JSON bodies of the submission server's REST protocol.

pub mod analytics;
pub mod diff3;
mod error;
pub mod history;
pub mod lcs;
pub mod objstore;
mod repo;
pub mod stage;
pub mod wire;

pub use error::{Error, Result};
pub use objstore::{ObjectId, ObjectKind, ObjectStore};
pub use repo::{valid_branch_name, RefSnapshot, Repository, DEFAULT_BRANCH, REMOTE_PREFIX};
