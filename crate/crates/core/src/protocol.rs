//! Line-delimited JSON selection service.
//!
//! Each request is one JSON object on one line:
//!
//! ```text
//! {"id": "r1", "candidates": [[[0.0]], [[0.1]]], "config": {"tau": 0.5}}
//! ```
//!
//! and gets exactly one response line, either
//!
//! ```text
//! {"id":"r1","selected_index":0,"selected_chunk":[[0.0]],"diagnostics":{...}}
//! ```
//!
//! or `{"id": ..., "error": {"code": ..., "message": ...}}`. Responses on a
//! connection come back in request order.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::batch::validate_batch;
use crate::geometry::Metric;
use crate::selector::{select, SelectError, SelectionPath, SelectionResult, SelectorConfig};

/// Per-request overrides of the server's selector defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_clusters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Metric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ConfigOverrides {
    pub fn apply(&self, base: &SelectorConfig) -> SelectorConfig {
        SelectorConfig {
            num_clusters: self.num_clusters.unwrap_or(base.num_clusters),
            tau: self.tau.unwrap_or(base.tau),
            eps: self.eps.unwrap_or(base.eps),
            metric: self.metric.unwrap_or(base.metric),
            seed: self.seed.unwrap_or(base.seed),
            ..*base
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: String,
    pub candidates: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigOverrides>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub guard_score: f64,
    pub unimodal: bool,
    pub cluster_sizes: Vec<usize>,
    pub global_medoid: usize,
    pub path: SelectionPath,
}

impl From<&SelectionResult> for Diagnostics {
    fn from(r: &SelectionResult) -> Self {
        Self {
            guard_score: r.guard_score,
            unimodal: r.unimodal,
            cluster_sizes: r.cluster_sizes.clone(),
            global_medoid: r.global_medoid,
            path: r.path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// The line was not a well-formed request record.
    ParseError,
    InvalidRequest,
    InvalidBatch,
    InvalidConfig,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

/// Exactly one of `selected_index` (with chunk and diagnostics) or `error`
/// is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_chunk: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    pub fn success(
        id: Option<String>,
        selected_chunk: Vec<Vec<f64>>,
        result: &SelectionResult,
    ) -> Self {
        Self {
            id,
            selected_index: Some(result.selected_index),
            selected_chunk: Some(selected_chunk),
            diagnostics: Some(result.into()),
            error: None,
        }
    }

    pub fn error(id: Option<String>, code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            id,
            selected_index: None,
            selected_chunk: None,
            diagnostics: None,
            error: Some(ErrorBody {
                code,
                message: message.into(),
            }),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses contain only finite floats")
    }
}

/// Stateless request handler holding the server-side selector defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Service {
    pub defaults: SelectorConfig,
}

impl Service {
    pub fn new(defaults: SelectorConfig) -> Self {
        Self { defaults }
    }

    pub fn handle(&self, request: &Request) -> Response {
        let id = Some(request.id.clone());
        if request.id.is_empty() {
            return Response::error(id, ErrorCode::InvalidRequest, "request id must be nonempty");
        }
        let config = request.config.unwrap_or_default().apply(&self.defaults);
        let batch = match validate_batch(&request.candidates) {
            Ok(b) => b,
            Err(e) => return Response::error(id, ErrorCode::InvalidBatch, e.to_string()),
        };
        match select(&batch, &config) {
            Ok(result) => {
                Response::success(id, batch.chunk(result.selected_index).to_rows(), &result)
            }
            Err(e @ SelectError::Config(_)) => {
                Response::error(id, ErrorCode::InvalidConfig, e.to_string())
            }
            Err(e) => Response::error(id, ErrorCode::Internal, e.to_string()),
        }
    }

    /// Handle one request line and return one response line (no trailing
    /// newline). Never panics on bad input.
    pub fn handle_line(&self, line: &str) -> String {
        let response = match serde_json::from_str::<Request>(line) {
            Ok(request) => self.handle(&request),
            Err(e) => Response::error(salvage_id(line), ErrorCode::ParseError, e.to_string()),
        };
        response.to_line()
    }

    fn handle_bytes(&self, bytes: &[u8]) -> String {
        match std::str::from_utf8(bytes) {
            Ok(line) => self.handle_line(line),
            Err(e) => Response::error(
                None,
                ErrorCode::ParseError,
                format!("request is not utf-8: {e}"),
            )
            .to_line(),
        }
    }

    /// Answer every nonblank line of `input` in order until end of input.
    /// Returns the number of requests answered.
    pub fn serve<R: BufRead, W: Write>(&self, mut input: R, mut output: W) -> io::Result<usize> {
        let mut buf = Vec::new();
        let mut answered = 0;
        loop {
            buf.clear();
            if input.read_until(b'\n', &mut buf)? == 0 {
                return Ok(answered);
            }
            if buf.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let mut line = self.handle_bytes(trim_newline(&buf));
            line.push('\n');
            // One write per response keeps lines whole.
            output.write_all(line.as_bytes())?;
            output.flush()?;
            answered += 1;
        }
    }

    pub fn serve_stdio(&self) -> io::Result<usize> {
        let stdin = io::stdin();
        let stdout = io::stdout();
        self.serve(stdin.lock(), stdout.lock())
    }

    /// Accept connections forever, one thread per connection.
    pub fn serve_tcp(self: Arc<Self>, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            let service = Arc::clone(&self);
            thread::spawn(move || {
                let _ = service.serve_connection(stream);
            });
        }
        Ok(())
    }

    pub fn serve_connection(&self, stream: TcpStream) -> io::Result<usize> {
        let reader = BufReader::new(stream.try_clone()?);
        self.serve(reader, stream)
    }
}

fn trim_newline(buf: &[u8]) -> &[u8] {
    let buf = buf.strip_suffix(b"\n").unwrap_or(buf);
    buf.strip_suffix(b"\r").unwrap_or(buf)
}

/// Best-effort recovery of a string `id` from a line that did not parse as a
/// request.
fn salvage_id(line: &str) -> Option<String> {
    // Other fields are skipped without being decoded, so an out-of-range
    // number elsewhere does not hide the id.
    #[derive(Deserialize)]
    struct IdOnly {
        id: Option<String>,
    }
    serde_json::from_str::<IdOnly>(line).ok()?.id
}
