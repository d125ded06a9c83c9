//! Async client for the access governance service.
//!
//! ```no_run
//! # async fn demo(request: accessgov_core::AccessRequest) -> Result<(), accessgov_client::ClientError> {
//! let client = accessgov_client::Client::new("http://127.0.0.1:8080")?;
//! let outcome = client.decide(&request).await?;
//! println!("{}", outcome.label);
//! # Ok(())
//! # }
//! ```

pub mod api;

use accessgov_core::{AccessRequest, AuditQuery, DecisionOutcome, Org};
use accessgov_eval::{MetricsReport, RunConfig};
use reqwest::{Method, RequestBuilder, Response, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub use api::{ApiError, AuditPage, CatalogCounts, CatalogSection, Health};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("invalid base url `{0}`")]
    BaseUrl(String),
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    /// The service answered with an error document.
    #[error("{status}: {body}")]
    Api { status: StatusCode, body: ApiError },
    #[error("unexpected {status} response: {text}")]
    Unexpected { status: StatusCode, text: String },
    #[error("decoding response: {0}")]
    Decode(#[from] serde_json::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            Self::Api { status, .. } | Self::Unexpected { status, .. } => Some(*status),
            Self::Transport(e) => e.status(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    token: Option<String>,
    http: reqwest::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Result<Self, ClientError> {
        let base = base_url.into().trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::BaseUrl(base));
        }
        Ok(Self {
            base,
            token: None,
            http: reqwest::Client::new(),
        })
    }

    /// Admin token sent as a bearer credential on every call.
    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let rb = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    async fn checked(rb: RequestBuilder) -> Result<Response, ClientError> {
        let resp = rb.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        match serde_json::from_str::<ApiError>(&text) {
            Ok(body) => Err(ClientError::Api { status, body }),
            Err(_) => Err(ClientError::Unexpected { status, text }),
        }
    }

    async fn json<T: DeserializeOwned>(rb: RequestBuilder) -> Result<T, ClientError> {
        let text = Self::checked(rb).await?.text().await?;
        Ok(serde_json::from_str(&text)?)
    }

    async fn text(rb: RequestBuilder) -> Result<String, ClientError> {
        Ok(Self::checked(rb).await?.text().await?)
    }

    pub async fn decide(&self, request: &AccessRequest) -> Result<DecisionOutcome, ClientError> {
        Self::json(self.request(Method::POST, "/decisions").json(request)).await
    }

    /// Raw decision document, exactly as served.
    pub async fn decide_raw(&self, body: &str) -> Result<String, ClientError> {
        Self::text(
            self.request(Method::POST, "/decisions")
                .header(reqwest::header::CONTENT_TYPE, "application/json")
                .body(body.to_string()),
        )
        .await
    }

    pub async fn audit(&self, query: &AuditQuery) -> Result<AuditPage, ClientError> {
        Self::json(self.request(Method::GET, "/audit").query(&QueryParams(query))).await
    }

    pub async fn export_csv(&self, query: &AuditQuery) -> Result<String, ClientError> {
        Self::text(self.request(Method::GET, "/audit/export").query(&QueryParams(query))).await
    }

    pub async fn catalog(&self) -> Result<Org, ClientError> {
        Self::json(self.request(Method::GET, "/catalog")).await
    }

    pub async fn catalog_section(&self, section: CatalogSection) -> Result<serde_json::Value, ClientError> {
        Self::json(self.request(Method::GET, &format!("/catalog/{section}"))).await
    }

    /// Replaces the whole org; returns the new snapshot.
    pub async fn put_catalog(&self, org: &Org) -> Result<Org, ClientError> {
        Self::json(self.request(Method::POST, "/catalog").json(org)).await
    }

    /// Replaces one section; returns the new snapshot.
    pub async fn put_catalog_section<T: Serialize + ?Sized>(
        &self,
        section: CatalogSection,
        body: &T,
    ) -> Result<Org, ClientError> {
        Self::json(self.request(Method::POST, &format!("/catalog/{section}")).json(body)).await
    }

    pub async fn eval(&self, config: &RunConfig) -> Result<MetricsReport, ClientError> {
        Ok(serde_json::from_str(&self.eval_raw(config).await?)?)
    }

    /// Report document exactly as served.
    pub async fn eval_raw(&self, config: &RunConfig) -> Result<String, ClientError> {
        Self::text(self.request(Method::POST, "/eval/runs").json(config)).await
    }

    pub async fn healthz(&self) -> Result<Health, ClientError> {
        Self::json(self.request(Method::GET, "/healthz")).await
    }
}

/// Serializes only the filters that are set, as flat query parameters.
struct QueryParams<'a>(&'a AuditQuery);

impl Serialize for QueryParams<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let value = serde_json::to_value(self.0).map_err(serde::ser::Error::custom)?;
        let mut map = s.serialize_map(None)?;
        if let serde_json::Value::Object(fields) = value {
            for (k, v) in fields {
                match v {
                    serde_json::Value::Null => {}
                    serde_json::Value::String(s) => map.serialize_entry(&k, &s)?,
                    other => map.serialize_entry(&k, &other.to_string())?,
                }
            }
        }
        map.end()
    }
}
