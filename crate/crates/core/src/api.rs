//! Local HTTP service for the browser viewer.
//!
//! `GET /document` lists the loaded document's operations and their
//! criterion candidates; `POST /slice` returns the same JSON as
//! `vdmslice slice --format json`. Handlers are plain functions over
//! [`AppState`] so they can be exercised without a socket.

use std::sync::Arc;

use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::{json, Value as Json};

use crate::report::{slice_json, span_json, target_from_parts};
use crate::slicer::{conjuncts, Criterion, UpdateMode};
use crate::{LoadError, Specification};

/// The one document a server instance exposes.
pub struct AppState {
    file: String,
    source: String,
    spec: Result<Specification, LoadError>,
}

impl AppState {
    pub fn new(file: String, source: String) -> Self {
        let spec = Specification::parse(&source);
        AppState { file, source, spec }
    }
}

fn json_body(value: &Json) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json values serialize");
    text.push('\n');
    text
}

fn load_errors(e: &LoadError) -> (u16, String) {
    let errors: Vec<Json> = e
        .diagnostics()
        .into_iter()
        .map(|(span, message)| {
            let mut j = span_json(span);
            j["message"] = json!(message);
            j
        })
        .collect();
    (422, json_body(&json!({ "errors": errors })))
}

pub fn document_response(state: &AppState) -> (u16, String) {
    let spec = match &state.spec {
        Ok(s) => s,
        Err(e) => return load_errors(e),
    };
    let doc = &spec.document;
    let state_variables = doc.state_field_names();
    let operations: Vec<Json> = doc
        .operations
        .iter()
        .map(|op| {
            json!({
                "name": op.name.name,
                "span": span_json(op.span),
                "hasPost": op.post.is_some(),
                "postConjunctCount": op.post.as_ref().map_or(0, |p| conjuncts(p).len()),
                "stateVariables": state_variables,
            })
        })
        .collect();
    (
        200,
        json_body(&json!({ "source": state.source, "operations": operations })),
    )
}

#[derive(Deserialize)]
struct TargetRequest {
    kind: String,
    #[serde(default)]
    detail: Option<Json>,
}

#[derive(Deserialize)]
struct SliceRequest {
    operation: String,
    target: TargetRequest,
    #[serde(default)]
    mode: Option<String>,
}

fn bad_request(message: String) -> (u16, String) {
    (400, json_body(&json!({ "error": message })))
}

pub fn slice_response(state: &AppState, body: &str) -> (u16, String) {
    let spec = match &state.spec {
        Ok(s) => s,
        Err(e) => return load_errors(e),
    };
    let req: SliceRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return bad_request(format!("invalid request: {e}")),
    };
    let mode = match req.mode.as_deref() {
        None | Some("weak") => UpdateMode::Weak,
        Some("strong") => UpdateMode::StrongLiteral,
        Some(other) => return bad_request(format!("mode: unknown update mode `{other}`")),
    };
    let target = match target_from_parts(&req.target.kind, req.target.detail.as_ref()) {
        Ok(t) => t,
        Err(m) => return bad_request(m),
    };
    let criterion = Criterion::new(req.operation, target);
    match spec.slice(&criterion, mode) {
        Ok(result) => (
            200,
            slice_json(&state.file, &spec.document, &criterion, mode, &result),
        ),
        Err(e) => bad_request(format!("{}: {e}", crate::report::target_kind(&criterion.target))),
    }
}

fn respond((status, body): (u16, String)) -> Response {
    let status = StatusCode::from_u16(status).expect("handlers use valid codes");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route(
            "/document",
            get(|State(s): State<Arc<AppState>>| async move { respond(document_response(&s)) }),
        )
        .route(
            "/slice",
            post(|State(s): State<Arc<AppState>>, body: String| async move {
                respond(slice_response(&s, &body))
            }),
        )
        .fallback(|| async { respond((404, json_body(&json!({ "error": "not found" })))) })
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(src: &str) -> AppState {
        AppState::new("t.vdmsl".into(), src.into())
    }

    #[test]
    fn empty_operations_section() {
        let (code, body) = document_response(&state("operations"));
        assert_eq!(code, 200);
        let v: Json = serde_json::from_str(&body).unwrap();
        assert_eq!(v["operations"], json!([]));
    }

    #[test]
    fn invalid_document_is_422() {
        let s = state("operations op : () ==> nat op() == return x");
        assert_eq!(document_response(&s).0, 422);
        assert_eq!(slice_response(&s, "{}").0, 422);
    }

    #[test]
    fn bad_requests() {
        let s = state("operations op : () ==> nat op() == return 1");
        assert_eq!(slice_response(&s, "not json").0, 400);
        let (code, body) = slice_response(
            &s,
            r#"{"operation":"nope","target":{"kind":"return"}}"#,
        );
        assert_eq!(code, 400);
        assert!(body.contains("nope"));
        let (code, _) = slice_response(
            &s,
            r#"{"operation":"op","target":{"kind":"return"},"mode":"fast"}"#,
        );
        assert_eq!(code, 400);
        let (code, _) = slice_response(&s, r#"{"operation":"op","target":{"kind":"return"}}"#);
        assert_eq!(code, 200);
    }
}
