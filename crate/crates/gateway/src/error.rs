use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use crate::sources::SourceError;

/// An HTTP error rendered as `{"error": {"code", "message", "detail"}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>, detail: Value) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            detail,
        }
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "session_not_found",
            format!("no session {id:?}"),
            json!({"session_id": id}),
        )
    }

    pub fn conflict(id: &str) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "concurrent_mutation",
            format!("session {id:?} is busy with another request"),
            json!({"session_id": id}),
        )
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message, Value::Null)
    }

    pub fn unprocessable(code: impl Into<String>, message: impl Into<String>, detail: Value) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message, detail)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message, Value::Null)
    }

    pub fn body(&self) -> Value {
        json!({"error": {"code": self.code, "message": self.message, "detail": self.detail}})
    }
}

impl From<SourceError> for ApiError {
    fn from(err: SourceError) -> Self {
        let status = match err {
            SourceError::Backend(_) => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, err.code(), err.to_string(), json!({"code": err.code()}))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body())).into_response()
    }
}
