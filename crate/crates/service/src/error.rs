use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use etma_core::{Error, ValidationReport};
use serde_json::json;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub report: Option<ValidationReport>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            report: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    pub fn invalid(message: impl Into<String>, report: ValidationReport) -> Self {
        Self {
            report: Some(report),
            ..Self::unprocessable(message)
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::Format { .. } => StatusCode::BAD_REQUEST,
            Error::DirectiveConflict { .. } => StatusCode::CONFLICT,
            Error::Csv(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.report {
            Some(report) => json!({ "error": self.message, "violations": report.violations }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}
