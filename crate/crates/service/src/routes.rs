use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::Response;
use axum::routing::{get, post};
use axum::Router;
use epiforecast_core::ingest::{self, Aggregation, IngestOptions, MissingValues};
use epiforecast_core::report::{
    self, build_fit_report, build_forecast_report, rolling_json, RollingTarget, SCHEMA_VERSION,
};
use epiforecast_core::{
    Dataset, FitOptions, ModelRequest, MonthDate, MonthlySeries, RollingConfig, RollingMode,
};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::ApiError;
use crate::sessions::{Lookup, Session};
use crate::{json_response, AppState};

pub fn router(state: AppState) -> Router {
    let limit = state.config().max_upload_bytes;
    Router::new()
        .route("/healthz", get(healthz))
        .route("/api/datasets", post(upload))
        .route("/api/sessions/{id}/regions", get(regions))
        .route("/api/sessions/{id}/fit", post(fit))
        .route("/api/sessions/{id}/forecast", post(forecast))
        .route("/api/sessions/{id}/rolling", post(rolling))
        .route("/api/jobs/{id}", get(job_status))
        .route("/api/jobs/{id}/result", get(job_result))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

fn ok_json<T: Serialize>(value: &T) -> Response {
    json_response(StatusCode::OK, report::to_json(value))
}

fn parse_body<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(format!("request body: {e}")))
}

async fn blocking<F>(f: F) -> Result<String, ApiError>
where
    F: FnOnce() -> Result<String, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("computation aborted: {e}")))?
}

impl AppState {
    fn session(&self, id: &str) -> Result<Session, ApiError> {
        match self.0.sessions.get(id) {
            Lookup::Live(s) => Ok(s),
            Lookup::Expired => Err(ApiError::SessionExpired(id.to_string())),
            Lookup::Unknown => Err(ApiError::SessionNotFound(id.to_string())),
        }
    }

    fn series(&self, id: &str, region: &str) -> Result<MonthlySeries, ApiError> {
        let session = self.session(id)?;
        session
            .dataset
            .region(region)
            .cloned()
            .ok_or_else(|| ApiError::RegionNotFound {
                region: region.to_string(),
                available: session.dataset.region_names().iter().map(|s| s.to_string()).collect(),
            })
    }
}

#[derive(Serialize)]
struct Health {
    schema_version: &'static str,
    status: &'static str,
    sessions: usize,
    jobs: usize,
}

async fn healthz(State(state): State<AppState>) -> Response {
    ok_json(&Health {
        schema_version: SCHEMA_VERSION,
        status: "ok",
        sessions: state.0.sessions.len(),
        jobs: state.0.jobs.len(),
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct UploadQuery {
    /// Long-format rows aggregated with `sum` or `mean`.
    aggregate: Option<String>,
    forward_fill: bool,
}

#[derive(Serialize)]
struct DateSpan {
    start: MonthDate,
    end: MonthDate,
}

#[derive(Serialize)]
struct DatasetSummary<'a> {
    schema_version: &'static str,
    session_id: &'a str,
    regions: Vec<&'a str>,
    date_span: DateSpan,
    n_months: usize,
    source_rows: usize,
    expires_at_unix_ms: u64,
}

fn summary<'a>(id: &'a str, session: &'a Session) -> DatasetSummary<'a> {
    let d: &Dataset = &session.dataset;
    let (start, end) = d.date_span();
    DatasetSummary {
        schema_version: SCHEMA_VERSION,
        session_id: id,
        regions: d.region_names(),
        date_span: DateSpan { start, end },
        n_months: d.n_months(),
        source_rows: d.source_rows(),
        expires_at_unix_ms: session.expires_at_unix_ms(),
    }
}

async fn read_upload(state: &AppState, req: Request) -> Result<Bytes, ApiError> {
    let too_large = |status: StatusCode, msg: String| {
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::PayloadTooLarge(format!(
                "upload exceeds the {} byte limit",
                state.config().max_upload_bytes
            ))
        } else {
            ApiError::BadRequest(msg)
        }
    };
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        return Bytes::from_request(req, state)
            .await
            .map_err(|e| too_large(e.status(), e.body_text()));
    }
    let mut form = Multipart::from_request(req, state)
        .await
        .map_err(|e| too_large(e.status(), e.body_text()))?;
    let mut first = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| too_large(e.status(), e.body_text()))?
    {
        let named_file = field.name() == Some("file");
        let bytes = field
            .bytes()
            .await
            .map_err(|e| too_large(e.status(), e.body_text()))?;
        if named_file {
            return Ok(bytes);
        }
        first.get_or_insert(bytes);
    }
    first.ok_or_else(|| ApiError::BadRequest("multipart body has no file field".into()))
}

async fn upload(
    State(state): State<AppState>,
    Query(query): Query<UploadQuery>,
    req: Request,
) -> Result<Response, ApiError> {
    let aggregate = query
        .aggregate
        .as_deref()
        .map(str::parse::<Aggregation>)
        .transpose()?;
    let bytes = read_upload(&state, req).await?;
    let dataset = match aggregate {
        Some(policy) => ingest::parse_long_csv(bytes.as_ref(), policy)?,
        None => {
            let options = IngestOptions {
                missing: if query.forward_fill {
                    MissingValues::ForwardFill
                } else {
                    MissingValues::Reject
                },
            };
            ingest::parse_csv_with(bytes.as_ref(), &options)?
        }
    };
    let (id, session) = state
        .0
        .sessions
        .create(dataset)
        .map_err(|e| ApiError::Internal(format!("could not store session: {e}")))?;
    log::info!("session {id}: {} region(s)", session.dataset.region_names().len());
    Ok(ok_json(&summary(&id, &session)))
}

async fn regions(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    Ok(ok_json(&summary(&id, &session)))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvalOptions {
    min_train: Option<usize>,
    horizon: Option<usize>,
    mode: Option<RollingMode>,
    log_offset: Option<f64>,
    ar_max_order: Option<usize>,
}

impl EvalOptions {
    fn config(&self, state: &AppState) -> Result<RollingConfig, ApiError> {
        let d = RollingConfig::default();
        let f = FitOptions::default();
        let config = RollingConfig {
            min_train: self.min_train.unwrap_or(d.min_train),
            horizon: self.horizon.unwrap_or(d.horizon),
            mode: self.mode.unwrap_or(d.mode),
            fit: FitOptions {
                log_offset: self.log_offset.unwrap_or(f.log_offset),
                ar_max_order: self.ar_max_order.or(f.ar_max_order),
            },
            execution: state.config().execution,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitBody {
    region: String,
    model: ModelRequest,
    #[serde(default)]
    options: EvalOptions,
}

async fn fit(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let req: FitBody = parse_body(&body)?;
    let series = state.series(&id, &req.region)?;
    let config = req.options.config(&state)?;
    let json = blocking(move || Ok(report::to_json(&build_fit_report(&series, req.model, &config)?))).await?;
    Ok(json_response(StatusCode::OK, json))
}

fn default_steps() -> usize {
    12
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForecastBody {
    region: String,
    model: ModelRequest,
    #[serde(default = "default_steps")]
    steps: usize,
    #[serde(default)]
    options: EvalOptions,
}

async fn forecast(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: ForecastBody = parse_body(&body)?;
    if req.steps < 1 {
        return Err(ApiError::BadRequest("steps must be at least 1".into()));
    }
    let series = state.series(&id, &req.region)?;
    let config = req.options.config(&state)?;
    let json = blocking(move || {
        Ok(report::to_json(&build_forecast_report(&series, req.model, req.steps, &config)?))
    })
    .await?;
    Ok(json_response(StatusCode::OK, json))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RollingBody {
    region: String,
    model: RollingTarget,
    #[serde(flatten)]
    options: EvalOptions,
}

/// Model fits a rolling request will perform.
fn estimated_fits(target: RollingTarget, n: usize, config: &RollingConfig) -> usize {
    let models = match target {
        RollingTarget::Model(ModelRequest::Kind(_)) => 1,
        RollingTarget::Model(ModelRequest::AutoArCorrected) | RollingTarget::All => 5,
    };
    config.windows(n).len() * models
}

#[derive(Serialize)]
struct JobAccepted<'a> {
    schema_version: &'static str,
    job_id: &'a str,
    status_url: String,
    estimated_fits: usize,
}

async fn rolling(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    // flatten and deny_unknown_fields do not combine in serde, so check keys by hand
    let raw: serde_json::Map<String, serde_json::Value> = parse_body(&body)?;
    const KEYS: [&str; 7] = ["region", "model", "min_train", "horizon", "mode", "log_offset", "ar_max_order"];
    if let Some(k) = raw.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ApiError::BadRequest(format!("request body: unknown field `{k}`")));
    }
    let req: RollingBody = parse_body(&body)?;
    let series = state.series(&id, &req.region)?;
    let config = req.options.config(&state)?;
    let fits = estimated_fits(req.model, series.len(), &config);
    let target = req.model;
    if fits > state.config().job_threshold {
        let region = series.region().to_string();
        let job_id = state
            .0
            .jobs
            .spawn(fits, move || Ok(rolling_json(&series, target, &config)?));
        log::info!("job {job_id}: rolling {target} on {region} ({fits} fits)");
        let accepted = JobAccepted {
            schema_version: SCHEMA_VERSION,
            status_url: format!("/api/jobs/{job_id}"),
            job_id: &job_id,
            estimated_fits: fits,
        };
        return Ok(json_response(StatusCode::ACCEPTED, report::to_json(&accepted)));
    }
    let json = blocking(move || Ok(rolling_json(&series, target, &config)?)).await?;
    Ok(json_response(StatusCode::OK, json))
}

#[derive(Serialize)]
struct JobError {
    status: u16,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct JobStatus<'a> {
    schema_version: &'static str,
    job_id: &'a str,
    state: &'static str,
    completed: usize,
    total: usize,
    estimated_fits: usize,
    elapsed_ms: u64,
    result: Option<Box<RawValue>>,
    error: Option<JobError>,
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state.0.jobs.get(&id).ok_or_else(|| ApiError::JobNotFound(id.clone()))?;
    let (job_state, result, error) = match job.outcome() {
        None => ("running", None, None),
        Some(Ok(json)) => (
            "done",
            Some(
                RawValue::from_string(json.trim_end().to_string())
                    .map_err(|e| ApiError::Internal(format!("job result: {e}")))?,
            ),
            None,
        ),
        Some(Err(e)) => (
            "failed",
            None,
            Some(JobError {
                status: e.status().as_u16(),
                code: e.code(),
                message: e.to_string(),
            }),
        ),
    };
    Ok(ok_json(&JobStatus {
        schema_version: SCHEMA_VERSION,
        job_id: &id,
        state: job_state,
        completed: job.completed(),
        total: 1,
        estimated_fits: job.estimated_fits,
        elapsed_ms: job.elapsed().as_millis() as u64,
        result,
        error,
    }))
}

/// The finished report exactly as a synchronous request would have returned it.
async fn job_result(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = state.0.jobs.get(&id).ok_or_else(|| ApiError::JobNotFound(id.clone()))?;
    match job.outcome() {
        None => Err(ApiError::JobRunning(id)),
        Some(Ok(json)) => Ok(json_response(StatusCode::OK, json.clone())),
        Some(Err(e)) => Err(e.clone()),
    }
}
