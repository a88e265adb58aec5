//! Blocking JSON-over-HTTP client for external model services.
//!
//! Both the pair scorer ([`crate::ranker::HttpPairScorer`]) and the
//! generation service ([`crate::genpipe::HttpModelService`]) talk to the
//! same kind of endpoint; this module only owns transport and error
//! reporting. Every failure carries the endpoint URL.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub base_url: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: f64,
    /// Upper bound on concurrent requests issued by one client.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_timeout_secs() -> f64 {
    30.0
}

fn default_in_flight() -> usize {
    4
}

impl ServiceConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        ServiceConfig {
            base_url: base_url.into(),
            timeout_secs: default_timeout_secs(),
            max_in_flight: default_in_flight(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceClient {
    config: ServiceConfig,
    agent: ureq::Agent,
}

/// Outcome of a request that reached the server.
pub(crate) enum Reply<T> {
    Ok(T),
    Status(u16, String),
}

impl ServiceClient {
    pub fn new(config: ServiceConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs.max(0.001))))
            .http_status_as_error(false)
            .build()
            .into();
        ServiceClient { config, agent }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn endpoint(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    /// POSTs `body` and decodes a 2xx JSON reply; any other status is an error.
    pub fn post_json<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        match self.post_json_status(path, body)? {
            Reply::Ok(v) => Ok(v),
            Reply::Status(code, text) => Err(Error::Service {
                endpoint: self.endpoint(path),
                message: format!("http status {code}: {}", truncate(&text, 200)),
            }),
        }
    }

    pub(crate) fn post_json_status<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<Reply<T>> {
        let endpoint = self.endpoint(path);
        let service_err = |message: String| Error::Service {
            endpoint: endpoint.clone(),
            message,
        };
        let mut resp = self
            .agent
            .post(&endpoint)
            .send_json(body)
            .map_err(|e| service_err(format!("request failed: {e}")))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            return Ok(Reply::Status(status, text));
        }
        resp.body_mut()
            .read_json::<T>()
            .map(Reply::Ok)
            .map_err(|e| service_err(format!("malformed reply: {e}")))
    }
}

fn truncate(s: &str, max: usize) -> &str {
    match s.char_indices().nth(max) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}
