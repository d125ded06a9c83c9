use accessgov_client::ApiError;
use accessgov_core::catalog::CatalogError;
use accessgov_core::request::{FieldError, RequestValidationError};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;

/// An error response: status plus an [`ApiError`] body.
#[derive(Debug)]
pub struct AppError {
    pub status: StatusCode,
    pub body: ApiError,
}

impl AppError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ApiError::new(message),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn forbidden() -> Self {
        Self::new(StatusCode::FORBIDDEN, "admin role required")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }

    /// A JSON body that failed to deserialize, located by field path.
    pub fn body<E: std::fmt::Display>(what: &str, err: serde_path_to_error::Error<E>) -> Self {
        let path = err.path().to_string();
        let mut e = Self::bad_request(format!("invalid {what}"));
        e.body.fields.push(FieldError {
            field: if path == "." { "(body)".into() } else { path },
            message: err.into_inner().to_string(),
        });
        e
    }
}

impl From<RequestValidationError> for AppError {
    fn from(err: RequestValidationError) -> Self {
        let mut e = Self::bad_request("invalid access request");
        e.body.fields = err.0;
        e
    }
}

impl From<CatalogError> for AppError {
    fn from(err: CatalogError) -> Self {
        let mut e = Self::bad_request(err.to_string());
        e.body.records = err.records().to_vec();
        if !e.body.records.is_empty() {
            e.body.error = format!("{} invalid record(s)", e.body.records.len());
        }
        e
    }
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Parses `bytes` as JSON, reporting the failing path on error.
pub fn parse_json<T: serde::de::DeserializeOwned>(what: &str, bytes: &[u8]) -> Result<T, AppError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| AppError::body(what, e))?;
    de.end().map_err(|e| AppError::bad_request(format!("invalid {what}: {e}")))?;
    Ok(value)
}
