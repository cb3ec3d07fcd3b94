use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use verbacode::session::SessionError;
use verbacode::Error;

/// An error answered with a status code and `{"error": message}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::Invalid(_) => StatusCode::BAD_REQUEST,
            SessionError::Incompatible(_) | SessionError::Conflict(_) => StatusCode::CONFLICT,
            SessionError::Gone(_) => StatusCode::GONE,
            SessionError::Engine(Error::DimensionMismatch { .. } | Error::IncompatibleFeatureSpace(_)) => {
                StatusCode::CONFLICT
            }
            SessionError::Engine(Error::Config(_) | Error::UnknownCode(_)) => StatusCode::BAD_REQUEST,
            SessionError::Engine(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        Self::internal(format!("event log: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

/// Failure to start the service.
#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error("corpus {path}: {source}")]
    Corpus { path: String, source: Error },
    #[error("two corpora are named `{0}`")]
    DuplicateCorpus(String),
    #[error("model {path}: {message}")]
    Model { path: String, message: String },
    #[error("data directory: {0}")]
    DataDir(#[from] std::io::Error),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}
