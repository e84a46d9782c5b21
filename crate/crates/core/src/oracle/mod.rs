//! Attribute scoring behind a single interface: a ground-truth mock and an
//! HTTP client for an external scoring service.

mod dictionary;
mod http;
mod mock;

pub use dictionary::{AttributeDictionary, AttributeType, DEFAULT_TEMPLATE};
pub use http::{HttpOracle, DEFAULT_ATTEMPTS, DEFAULT_TIMEOUT};
pub use mock::MockOracle;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown image {0}")]
    UnknownImage(String),
    #[error("no object matches box {0:?}")]
    UnknownObject([f64; 4]),
    #[error("unknown attribute type {0}")]
    UnknownAttributeType(String),
    #[error("invalid attribute dictionary: {0}")]
    Dictionary(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned status {status}: {body}")]
    Server { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// Request body of `POST /score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    /// Image path or identifier.
    pub image: String,
    /// Pixel box `[x, y, w, h]` of the object of interest, absent for
    /// whole-image queries.
    pub bbox: Option<[f64; 4]>,
    pub sentences: Vec<String>,
}

impl ScoreRequest {
    pub fn validate(&self) -> Result<(), OracleError> {
        if self.sentences.is_empty() {
            return Err(OracleError::InvalidRequest("no sentences".into()));
        }
        if let Some(b) = self.bbox {
            if b.iter().any(|v| !v.is_finite()) || b[2] < 0.0 || b[3] < 0.0 {
                return Err(OracleError::InvalidRequest(format!("bad bbox {b:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

impl ScoreResponse {
    /// Index of the highest score, lowest index on ties.
    pub fn argmax(&self) -> Option<usize> {
        argmax(&self.scores)
    }
}

/// Index of the highest value, lowest index on ties.
pub fn argmax(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub trait AttributeOracle: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, OracleError>;
}

impl<T: AttributeOracle + ?Sized> AttributeOracle for &T {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, OracleError> {
        (**self).score(request)
    }
}

impl<T: AttributeOracle + ?Sized> AttributeOracle for Box<T> {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, OracleError> {
        (**self).score(request)
    }
}

impl<T: AttributeOracle + ?Sized> AttributeOracle for std::sync::Arc<T> {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, OracleError> {
        (**self).score(request)
    }
}

/// Checks a response against its request.
pub(crate) fn check_response(req: &ScoreRequest, resp: &ScoreResponse) -> Result<(), OracleError> {
    if resp.scores.len() != req.sentences.len() {
        return Err(OracleError::Malformed(format!(
            "{} scores for {} sentences",
            resp.scores.len(),
            req.sentences.len()
        )));
    }
    if resp.scores.iter().any(|s| !s.is_finite()) {
        return Err(OracleError::Malformed("non-finite score".into()));
    }
    Ok(())
}
