//! Blocking JSON client for the server's REST API.

use std::time::Duration;

use classgit_core::wire::ErrorBody;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub struct Api {
    agent: ureq::Agent,
    base: String,
    token: Option<String>,
}

impl Api {
    pub fn new(base: &str, token: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Api {
            agent,
            base: base.trim_end_matches('/').to_owned(),
            token,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn auth(&self) -> Option<String> {
        self.token.as_ref().map(|t| format!("Bearer {t}"))
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let mut req = self.agent.get(self.url(path));
        if let Some(a) = self.auth() {
            req = req.header("Authorization", a);
        }
        self.finish(path, req.call())
    }

    pub fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let mut req = self.agent.post(self.url(path));
        if let Some(a) = self.auth() {
            req = req.header("Authorization", a);
        }
        self.finish(path, req.send_json(body))
    }

    fn finish<T: DeserializeOwned>(
        &self,
        path: &str,
        sent: std::result::Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<T> {
        let mut resp = sent.map_err(|e| CliError::fatal(format!("cannot reach {}: {e}", self.base)))?;
        let status = resp.status().as_u16();
        let body = resp.body_mut().with_config().limit(1 << 30).read_to_vec();
        let body = body.map_err(|e| CliError::fatal(format!("{path}: reading response: {e}")))?;
        if (200..300).contains(&status) {
            return serde_json::from_slice(&body)
                .map_err(|e| CliError::fatal(format!("{path}: unexpected response: {e}")));
        }
        let envelope: Option<ErrorBody> = serde_json::from_slice(&body).ok();
        match (status, envelope) {
            (400..=499, Some(e)) => Err(CliError::Rejected {
                status,
                code: e.error,
                detail: e.detail,
            }),
            (_, Some(e)) => Err(CliError::fatal(format!("server error: {} ({})", e.detail, e.error))),
            _ => Err(CliError::fatal(format!("{path}: HTTP {status}"))),
        }
    }
}
