use axum::extract::Request;
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use geomedia::{CodecError, QueryError, StoreError};
use serde_json::json;

/// Error codes carried in every error body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    NotFound,
    BadQuery,
    BadBody,
    KindMismatch,
    Conflict,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::NotFound => "NotFound",
            ErrorCode::BadQuery => "BadQuery",
            ErrorCode::BadBody => "BadBody",
            ErrorCode::KindMismatch => "KindMismatch",
            ErrorCode::Conflict => "Conflict",
            ErrorCode::Internal => "Internal",
        }
    }
}

/// A failed request. Rendered as
/// `{"httpStatus", "code", "message", "path"}` by [`attach_path`], which
/// knows the request path.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, ErrorCode::NotFound, message)
    }

    pub fn bad_query(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, ErrorCode::BadQuery, message)
    }

    pub fn bad_body(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, ErrorCode::BadBody, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, message)
    }

    /// Store errors raised while applying a request body.
    pub fn from_body_store(e: StoreError) -> Self {
        match e {
            StoreError::BadId(_) | StoreError::BadAnnotation(_) | StoreError::BadQuery(_) => {
                Self::bad_body(e.to_string())
            }
            other => other.into(),
        }
    }

    fn render(&self, path: &str) -> Response {
        let body = json!({
            "httpStatus": self.status.as_u16(),
            "code": self.code.as_str(),
            "message": self.message,
            "path": path,
        });
        (self.status, axum::Json(body)).into_response()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = self.status.into_response();
        resp.extensions_mut().insert(self);
        resp
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let msg = e.to_string();
        match e {
            StoreError::DuplicateId(_) => Self::new(StatusCode::CONFLICT, ErrorCode::Conflict, msg),
            StoreError::NotFound(_) => Self::not_found(msg),
            StoreError::KindMismatch { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, ErrorCode::KindMismatch, msg)
            }
            StoreError::BadId(_) | StoreError::BadQuery(_) => Self::bad_query(msg),
            StoreError::BadAnnotation(_) => Self::bad_body(msg),
            StoreError::Io { .. } | StoreError::CorruptStore(_) => Self::internal(msg),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Store(s) => s.into(),
            QueryError::WrongKind { .. } => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                ErrorCode::KindMismatch,
                e.to_string(),
            ),
            other => Self::bad_query(other.to_string()),
        }
    }
}

impl From<CodecError> for ApiError {
    fn from(e: CodecError) -> Self {
        Self::bad_body(format!("{} (at {})", e, display_pointer(e.path())))
    }
}

fn display_pointer(p: &str) -> &str {
    if p.is_empty() {
        "document root"
    } else {
        p
    }
}

/// Middleware: turns every error response, including the router's own 404
/// and 405, into an error body naming the request path.
pub async fn attach_path(req: Request, next: Next) -> Response {
    let path = req.uri().path().to_string();
    let resp = next.run(req).await;
    if let Some(err) = resp.extensions().get::<ApiError>() {
        return err.render(&path);
    }
    let status = resp.status();
    if !(status.is_client_error() || status.is_server_error()) {
        return resp;
    }
    let err = match status {
        StatusCode::NOT_FOUND => ApiError::not_found("no such resource"),
        StatusCode::METHOD_NOT_ALLOWED => {
            ApiError::new(status, ErrorCode::BadQuery, "method not allowed on this resource")
        }
        StatusCode::PAYLOAD_TOO_LARGE => ApiError::new(status, ErrorCode::BadBody, "request body too large"),
        s if s.is_client_error() => ApiError::new(s, ErrorCode::BadQuery, s.canonical_reason().unwrap_or("bad request")),
        s => ApiError::new(s, ErrorCode::Internal, s.canonical_reason().unwrap_or("internal error")),
    };
    let mut rendered = err.render(&path);
    if let Some(allow) = resp.headers().get(header::ALLOW) {
        rendered.headers_mut().insert(header::ALLOW, allow.clone());
    }
    rendered
        .headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    rendered
}
