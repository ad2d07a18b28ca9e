//! Stateless request/response analysis service.
//!
//! Endpoints (JSON bodies shaped like scenario documents):
//!
//! - `POST /analyze` returns an [`AnalyzeReport`]
//! - `POST /sweep` returns a [`SweepReport`] with an `on_frontier` flag per point
//! - `POST /simulate` returns a [`SimulateReport`]; `sim.seed` is mandatory
//! - `GET /health` returns the build and schema versions
//!
//! Handlers share no mutable state. Invalid input yields a 4xx response with
//! an `error` object naming the offending field.

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use bar_core::report::{self, AnalyzeReport, ReportError, SimulateReport, SweepReport, REPORT_SCHEMA_VERSION};
use bar_core::scenario::{parse_scenario_json, Scenario, ScenarioError, SCENARIO_VERSION};
use serde::Serialize;
use tokio::net::TcpListener;
use tracing::debug;

/// Largest sweep grid accepted, in cells.
pub const MAX_SWEEP_CELLS: u128 = 100_000;

/// Largest simulation accepted, in events.
pub const MAX_SIM_EVENTS: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Parse,
    Validation,
    MissingSection,
    TooLarge,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub kind: ErrorKind,
    pub field: String,
    pub message: String,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self.kind {
            ErrorKind::Parse => StatusCode::BAD_REQUEST,
            ErrorKind::Validation | ErrorKind::MissingSection => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::TooLarge => StatusCode::PAYLOAD_TOO_LARGE,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(err: ScenarioError) -> Self {
        let message = err.to_string();
        match err {
            ScenarioError::Parse { path, .. } => ApiError { kind: ErrorKind::Parse, field: path, message },
            ScenarioError::Invalid(e) => ApiError { kind: ErrorKind::Validation, field: e.field, message },
            ScenarioError::MissingSection(section) => {
                ApiError { kind: ErrorKind::MissingSection, field: section.to_string(), message }
            }
        }
    }
}

impl From<ReportError> for ApiError {
    fn from(err: ReportError) -> Self {
        match err {
            ReportError::Scenario(e) => e.into(),
            other => ApiError { kind: ErrorKind::Internal, field: String::new(), message: other.to_string() },
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a ApiError,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status(), &ErrorBody { error: &self })
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    match serde_json::to_vec(value) {
        Ok(body) => (status, [(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn parse_body(body: &[u8]) -> Result<Scenario, ApiError> {
    let text = std::str::from_utf8(body).map_err(|e| ApiError {
        kind: ErrorKind::Parse,
        field: ".".into(),
        message: format!("request body is not UTF-8: {e}"),
    })?;
    Ok(parse_scenario_json(text)?)
}

pub fn handle_analyze(body: &[u8]) -> Result<AnalyzeReport, ApiError> {
    let scenario = parse_body(body)?;
    Ok(report::analyze(&scenario, scenario.mode))
}

pub fn handle_sweep(body: &[u8]) -> Result<SweepReport, ApiError> {
    let scenario = parse_body(body)?;
    let spec = scenario.sweep_spec(scenario.mode)?;
    let cells = spec.cell_count();
    if cells > MAX_SWEEP_CELLS {
        return Err(ApiError {
            kind: ErrorKind::TooLarge,
            field: "sweep".into(),
            message: format!("sweep has {cells} cells; the limit is {MAX_SWEEP_CELLS}"),
        });
    }
    Ok(report::sweep(&scenario, scenario.mode)?)
}

pub fn handle_simulate(body: &[u8]) -> Result<SimulateReport, ApiError> {
    let scenario = parse_body(body)?;
    scenario.sim_config()?;
    let design = scenario.design_or_minimal();
    let events = 1 + design.cot_tokens as u128 + design.retrieval_calls as u128 + design.tool_latencies.len() as u128;
    if events > MAX_SIM_EVENTS {
        return Err(ApiError {
            kind: ErrorKind::TooLarge,
            field: "design".into(),
            message: format!("simulation would emit {events} events; the limit is {MAX_SIM_EVENTS}"),
        });
    }
    Ok(report::simulate_scenario(&scenario, None)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Health {
    pub status: &'static str,
    pub version: &'static str,
    pub scenario_schema_version: u32,
    pub report_schema_version: u32,
}

pub fn health() -> Health {
    Health {
        status: "ok",
        version: env!("CARGO_PKG_VERSION"),
        scenario_schema_version: SCENARIO_VERSION,
        report_schema_version: REPORT_SCHEMA_VERSION,
    }
}

async fn run_blocking<T, F>(endpoint: &'static str, body: Result<Bytes, BytesRejection>, f: F) -> Response
where
    T: Serialize + Send + 'static,
    F: FnOnce(&[u8]) -> Result<T, ApiError> + Send + 'static,
{
    let body = match body {
        Ok(b) => b,
        Err(rejection) => {
            return ApiError { kind: ErrorKind::Parse, field: ".".into(), message: rejection.body_text() }
                .into_response()
        }
    };
    debug!(endpoint, bytes = body.len(), "request");
    match tokio::task::spawn_blocking(move || f(&body)).await {
        Ok(Ok(value)) => json_response(StatusCode::OK, &value),
        Ok(Err(err)) => {
            debug!(endpoint, field = %err.field, "rejected: {}", err.message);
            err.into_response()
        }
        Err(join) => {
            ApiError { kind: ErrorKind::Internal, field: String::new(), message: join.to_string() }.into_response()
        }
    }
}

pub fn router() -> Router {
    Router::new()
        .route("/health", get(|| async { json_response(StatusCode::OK, &health()) }))
        .route("/analyze", post(|body| run_blocking("analyze", body, handle_analyze)))
        .route("/sweep", post(|body| run_blocking("sweep", body, handle_sweep)))
        .route("/simulate", post(|body| run_blocking("simulate", body, handle_simulate)))
}

/// Serves the router on `listener` until ctrl-c.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
