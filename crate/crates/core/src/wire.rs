//! JSON bodies of the REST protocol, shared by the server and the client.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::MergeEvent;
use crate::objstore::{ObjectId, ObjectKind, RawObject};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub username: String,
    pub password: String,
    pub role: Role,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegisterResponse {
    pub user_id: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoginRequest {
    pub username: String,
    pub password: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoginResponse {
    pub token: String,
    pub expires_at: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateAssignmentRequest {
    pub title: String,
    pub deadline: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_repo: Option<String>,
    /// Reject pushes received after the deadline instead of flagging them late.
    #[serde(default)]
    pub hard_cutoff: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreateAssignmentResponse {
    pub assignment_id: String,
    pub invite_code: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JoinRequest {
    pub invite_code: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepoIdResponse {
    pub repo_id: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CreateRepoRequest {
    /// Usernames allowed to push besides the creator.
    #[serde(default)]
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireObject {
    pub id: ObjectId,
    pub kind: ObjectKind,
    pub payload_b64: String,
}

impl WireObject {
    pub fn new(id: ObjectId, raw: &RawObject) -> Self {
        WireObject {
            id,
            kind: raw.kind,
            payload_b64: STANDARD.encode(&raw.payload),
        }
    }

    pub fn payload(&self) -> Result<Vec<u8>> {
        STANDARD.decode(&self.payload_b64).map_err(|e| Error::Format {
            what: format!("payload of {}", self.id),
            reason: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRef {
    pub name: String,
    pub target: ObjectId,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FetchResponse {
    pub refs: Vec<WireRef>,
    pub head: String,
    pub objects: Vec<WireObject>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushRequest {
    pub branch: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_old: Option<ObjectId>,
    pub new_target: ObjectId,
    pub objects: Vec<WireObject>,
    /// Merges performed locally since the last push, for branch-activity analytics.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merge_events: Vec<MergeEvent>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PushResponse {
    pub received_at: i64,
    pub late: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PushRecord {
    pub repo_id: String,
    pub pusher: String,
    pub branch: String,
    pub new_target: ObjectId,
    /// Server clock, unix seconds.
    pub received_at: i64,
    pub late: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmissionRow {
    pub username: String,
    pub student_id: String,
    pub repo_id: String,
    pub submitted: bool,
    pub latest_push_at: Option<i64>,
    pub late: bool,
    pub head_commit: Option<ObjectId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}
