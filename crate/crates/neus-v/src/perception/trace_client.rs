//! Deterministic perception client replaying confidences from a trace file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::formats::TraceFile;
use crate::tl::Proposition;

use super::{ClientIdentity, FrameWindow, PerceptionClient, PerceptionError};

/// Serves stored confidences keyed by (proposition id, window index).
/// Referentially transparent: identical queries return identical values
/// across process runs.
pub struct TraceClient {
    identity: ClientIdentity,
    scores: BTreeMap<(String, usize), f64>,
    window_count: usize,
}

impl TraceClient {
    pub fn from_trace_file(trace: &TraceFile, source_name: &str) -> Self {
        let mut scores = BTreeMap::new();
        for (w, row) in trace.windows.iter().enumerate() {
            for (p, &c) in row.iter().enumerate() {
                scores.insert((trace.propositions[p].clone(), w), c);
            }
        }
        TraceClient {
            identity: ClientIdentity {
                name: "trace-file".into(),
                model: source_name.into(),
            },
            scores,
            window_count: trace.windows.len(),
        }
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }
}

impl PerceptionClient for TraceClient {
    fn identity(&self) -> &ClientIdentity {
        &self.identity
    }

    fn confidence(
        &self,
        prop: &Proposition,
        window: &FrameWindow<'_>,
    ) -> Result<f64, PerceptionError> {
        self.scores
            .get(&(prop.id().to_string(), window.index))
            .copied()
            .ok_or_else(|| PerceptionError::MissingKey {
                prop: prop.id().to_string(),
                window: window.index,
            })
    }
}

/// Loads a trace file and wraps it as a perception client.
pub fn load_trace_client(path: &Path) -> Result<TraceClient, crate::formats::FormatError> {
    let trace = TraceFile::load(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trace".into());
    Ok(TraceClient::from_trace_file(&trace, &name))
}
