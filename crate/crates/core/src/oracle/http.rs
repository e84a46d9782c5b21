use std::time::Duration;

use reqwest::blocking::Client;
use serde::Deserialize;

use super::{check_response, AttributeOracle, OracleError, ScoreRequest, ScoreResponse};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_ATTEMPTS: u32 = 2;

/// Client for a scoring service speaking `POST /score` and `GET /health`.
///
/// Transport failures and 5xx responses are retried up to the attempt limit.
/// 4xx responses and malformed bodies fail immediately.
#[derive(Debug, Clone)]
pub struct HttpOracle {
    base: String,
    client: Client,
    attempts: u32,
}

#[derive(Deserialize)]
struct Health {
    status: String,
}

impl HttpOracle {
    pub fn new(base_url: &str) -> Result<Self, OracleError> {
        Self::with_config(base_url, DEFAULT_TIMEOUT, DEFAULT_ATTEMPTS)
    }

    pub fn with_config(base_url: &str, timeout: Duration, attempts: u32) -> Result<Self, OracleError> {
        if !(base_url.starts_with("http://") || base_url.starts_with("https://")) {
            return Err(OracleError::InvalidRequest(format!("not an http url: {base_url}")));
        }
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        Ok(Self {
            base: base_url.trim_end_matches('/').to_string(),
            client,
            attempts: attempts.max(1),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn health(&self) -> Result<(), OracleError> {
        let resp = self
            .client
            .get(format!("{}/health", self.base))
            .send()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(OracleError::Server {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            });
        }
        let h: Health = resp.json().map_err(|e| OracleError::Malformed(e.to_string()))?;
        if h.status == "ok" {
            Ok(())
        } else {
            Err(OracleError::Malformed(format!("health status {}", h.status)))
        }
    }

    fn attempt(&self, req: &ScoreRequest) -> Result<ScoreResponse, (OracleError, bool)> {
        let resp = self
            .client
            .post(format!("{}/score", self.base))
            .json(req)
            .send()
            .map_err(|e| (OracleError::Transport(e.to_string()), true))?;
        let status = resp.status();
        if !status.is_success() {
            let err = OracleError::Server {
                status: status.as_u16(),
                body: resp.text().unwrap_or_default(),
            };
            return Err((err, status.is_server_error()));
        }
        let body = resp.bytes().map_err(|e| (OracleError::Transport(e.to_string()), true))?;
        serde_json::from_slice(&body).map_err(|e| (OracleError::Malformed(e.to_string()), false))
    }
}

impl AttributeOracle for HttpOracle {
    fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, OracleError> {
        req.validate()?;
        let mut last = None;
        for n in 0..self.attempts {
            match self.attempt(req) {
                Ok(resp) => {
                    check_response(req, &resp)?;
                    return Ok(resp);
                }
                Err((e, retry)) => {
                    log::warn!("score attempt {} against {} failed: {e}", n + 1, self.base);
                    if !retry {
                        return Err(e);
                    }
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}
