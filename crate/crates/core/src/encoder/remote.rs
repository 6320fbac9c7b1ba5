//! Client for HTTP embedding services.
//!
//! Wire protocol: `GET /info` returns `{"dim": n, "model_name": .., "version": ..}`;
//! `POST /embed` with `{"texts": [...]}` returns `{"vectors": [[...]], "dim": n}`.

use super::{Embedder, EmbeddingVector, EncoderError};
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoResponse {
    pub dim: usize,
    #[serde(default)]
    pub model_name: String,
    #[serde(default)]
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
}

#[derive(Debug, Deserialize)]
struct ErrorBody {
    error: String,
}

/// A connected embedding service. The same service embeds both queries and
/// candidates.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    agent: ureq::Agent,
    info: InfoResponse,
}

impl RemoteEmbedder {
    /// Connects and reads the service's `/info`.
    pub fn connect(endpoint: &str) -> Result<Self, EncoderError> {
        let endpoint = endpoint.trim_end_matches('/').to_owned();
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .new_agent();
        let mut this = Self {
            endpoint,
            agent,
            info: InfoResponse {
                dim: 0,
                model_name: String::new(),
                version: String::new(),
            },
        };
        let resp = this
            .agent
            .get(format!("{}/info", this.endpoint))
            .call()
            .map_err(|e| this.unreachable(e))?;
        this.info = this.read_json(resp)?;
        if this.info.dim == 0 {
            return Err(EncoderError::ServiceError {
                status: 200,
                message: "service announced dim 0".into(),
            });
        }
        Ok(this)
    }

    pub fn info(&self) -> &InfoResponse {
        &self.info
    }

    pub fn dim(&self) -> usize {
        self.info.dim
    }

    fn unreachable(&self, e: ureq::Error) -> EncoderError {
        EncoderError::ServiceUnreachable {
            endpoint: self.endpoint.clone(),
            reason: e.to_string(),
        }
    }

    fn read_json<T: for<'de> Deserialize<'de>>(
        &self,
        resp: ureq::http::Response<ureq::Body>,
    ) -> Result<T, EncoderError> {
        let status = resp.status().as_u16();
        let body = resp
            .into_body()
            .read_to_string()
            .map_err(|e| self.unreachable(e))?;
        if !(200..300).contains(&status) {
            let message = serde_json::from_str::<ErrorBody>(&body).map_or(body, |b| b.error);
            return Err(EncoderError::ServiceError { status, message });
        }
        serde_json::from_str(&body).map_err(|e| EncoderError::ServiceError {
            status,
            message: format!("malformed response: {e}"),
        })
    }

    /// One vector per text, in input order.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
        if texts.is_empty() {
            return Err(EncoderError::InvalidInput("no texts to embed".into()));
        }
        if texts.iter().any(|t| t.is_empty()) {
            return Err(EncoderError::EmptyText);
        }
        let request = EmbedRequest {
            texts: texts.iter().map(|t| (*t).to_owned()).collect(),
        };
        let resp = self
            .agent
            .post(format!("{}/embed", self.endpoint))
            .send_json(&request)
            .map_err(|e| self.unreachable(e))?;
        let body: EmbedResponse = self.read_json(resp)?;
        if body.vectors.len() != texts.len() {
            return Err(EncoderError::ServiceError {
                status: 200,
                message: format!("expected {} vectors, got {}", texts.len(), body.vectors.len()),
            });
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.info.dim {
                    return Err(EncoderError::DimensionMismatch {
                        expected: self.info.dim,
                        got: v.len(),
                    });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl Embedder for RemoteEmbedder {
    fn embed_queries(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
        self.embed(texts)
    }

    fn embed_candidates(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
        self.embed(texts)
    }
}

/// Connects to `endpoint` and embeds `texts` in one request.
pub fn remote_embed(endpoint: &str, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EncoderError> {
    if texts.is_empty() {
        return Err(EncoderError::InvalidInput("no texts to embed".into()));
    }
    RemoteEmbedder::connect(endpoint)?.embed(texts)
}
