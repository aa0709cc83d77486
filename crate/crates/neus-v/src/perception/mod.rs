//! Semantic confidence acquisition: perception clients answer "is this
//! proposition present in this window of frames" with a probability.
//!
//! Two clients ship here: a token-probability client speaking the generic
//! chat-completions wire shape (see [`vlm`]) and a deterministic client
//! replaying stored trace files for offline runs (see [`trace_client`]).

mod calibration;
mod trace_client;
mod vlm;

pub use calibration::{
    find_optimal_threshold, load_samples_csv, roc_auc, roc_curve, write_roc_csv, CalibrationSample,
    ThresholdResult,
};
pub use trace_client::{load_trace_client, TraceClient};
pub use vlm::{VlmClient, VlmConfig};

use std::path::PathBuf;
use std::sync::Mutex;

use thiserror::Error;

use crate::tl::Proposition;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("response {raw:?} does not reduce to Yes or No")]
    MalformedAnswer { raw: String },
    #[error("response carried no token log-probabilities")]
    MissingLogprobs,
    #[error("token probability {value} is outside (0, 1]")]
    TokenProbabilityOutOfRange { value: f64 },
    #[error("confidence {value} from client {client} is outside [0, 1]")]
    ConfidenceOutOfRange { client: String, value: f64 },
    #[error("no stored confidence for proposition {prop:?} at window {window}")]
    MissingKey { prop: String, window: usize },
    #[error("window of {got} frames exceeds the client's context limit of {limit}")]
    ContextLimit { got: usize, limit: usize },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("could not read frame {path}: {source}")]
    FrameRead {
        path: String,
        source: std::io::Error,
    },
    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("calibration requires samples from both classes")]
    SingleClass,
    #[error("calibration requires at least two samples")]
    TooFewSamples,
    #[error("{0}")]
    Csv(String),
}

/// Identifies a client in report provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientIdentity {
    pub name: String,
    pub model: String,
}

/// One window of frames, oldest first. Trace-backed clients only look at the
/// index; image-backed clients only look at the frames.
#[derive(Debug, Clone)]
pub struct FrameWindow<'a> {
    pub index: usize,
    pub frames: &'a [PathBuf],
}

/// Contract: given a proposition and a frame window, return the raw
/// confidence that the proposition holds there.
pub trait PerceptionClient: Send + Sync {
    fn identity(&self) -> &ClientIdentity;
    fn confidence(
        &self,
        prop: &Proposition,
        window: &FrameWindow<'_>,
    ) -> Result<f64, PerceptionError>;
}

/// Queries the client and bound-checks the returned confidence.
pub fn score_proposition(
    client: &dyn PerceptionClient,
    prop: &Proposition,
    window: &FrameWindow<'_>,
) -> Result<f64, PerceptionError> {
    let c = client.confidence(prop, window)?;
    if !(0.0..=1.0).contains(&c) || c.is_nan() {
        return Err(PerceptionError::ConfidenceOutOfRange {
            client: client.identity().name.clone(),
            value: c,
        });
    }
    Ok(c)
}

/// (window index, proposition index) task key.
type CellKey = (usize, usize);

/// Scores every (window, proposition) pair, issuing up to `parallelism`
/// requests concurrently. Results are joined deterministically by
/// (window, proposition) position regardless of completion order.
pub fn score_matrix(
    client: &dyn PerceptionClient,
    props: &[Proposition],
    windows: &[Vec<PathBuf>],
    parallelism: usize,
) -> Result<Vec<Vec<f64>>, PerceptionError> {
    let workers = parallelism.max(1);
    let tasks: Vec<CellKey> = (0..windows.len())
        .flat_map(|w| (0..props.len()).map(move |p| (w, p)))
        .collect();
    let queue = Mutex::new(tasks.into_iter());
    let results: Mutex<Vec<(CellKey, Result<f64, PerceptionError>)>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let task = queue.lock().unwrap().next();
                let Some((w, p)) = task else { break };
                let window = FrameWindow {
                    index: w,
                    frames: &windows[w],
                };
                let outcome = score_proposition(client, &props[p], &window);
                results.lock().unwrap().push(((w, p), outcome));
            });
        }
    });

    let mut collected = results.into_inner().unwrap();
    collected.sort_by_key(|(key, _)| *key);
    let mut matrix = vec![vec![0.0; props.len()]; windows.len()];
    for ((w, p), outcome) in collected {
        matrix[w][p] = outcome?;
    }
    Ok(matrix)
}

/// Per-token score from a completion: the sampled token, its log-probability,
/// and the top-k alternatives at that position.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenScore {
    pub token: String,
    pub logprob: f64,
    pub alternatives: Vec<(String, f64)>,
}

impl TokenScore {
    pub fn new(token: impl Into<String>, logprob: f64) -> Self {
        TokenScore {
            token: token.into(),
            logprob,
            alternatives: Vec::new(),
        }
    }

    /// Builds a token score by applying a softmax over raw logits. The chosen
    /// token must appear among the alternatives.
    pub fn from_logits(token: &str, logits: &[(&str, f64)]) -> Result<Self, PerceptionError> {
        let max = logits
            .iter()
            .map(|&(_, l)| l)
            .fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|&(_, l)| (l - max).exp()).sum();
        let mut chosen = None;
        let mut alternatives = Vec::with_capacity(logits.len());
        for &(t, l) in logits {
            let p = (l - max).exp() / denom;
            alternatives.push((t.to_string(), p.ln()));
            if t == token {
                chosen = Some(p.ln());
            }
        }
        let logprob = chosen.ok_or(PerceptionError::MissingLogprobs)?;
        Ok(TokenScore {
            token: token.to_string(),
            logprob,
            alternatives,
        })
    }

    /// Softmax probability of this token.
    pub fn probability(&self) -> f64 {
        self.logprob.exp()
    }
}

/// Reduces a completion to Yes/No and maps its token probabilities onto a
/// proposition confidence: the product of per-position probabilities for a
/// Yes, one minus that product for a No.
pub fn confidence_from_answer(tokens: &[TokenScore]) -> Result<f64, PerceptionError> {
    if tokens.is_empty() {
        return Err(PerceptionError::MissingLogprobs);
    }
    let mut product = 1.0f64;
    for token in tokens {
        let p = token.probability();
        if !(p > 0.0 && p <= 1.0 + 1e-12) {
            return Err(PerceptionError::TokenProbabilityOutOfRange { value: p });
        }
        product *= p.min(1.0);
    }
    let text: String = tokens.iter().map(|t| t.token.as_str()).collect();
    match parse_yes_no(&text) {
        Some(true) => Ok(product.clamp(0.0, 1.0)),
        Some(false) => Ok((1.0 - product).clamp(0.0, 1.0)),
        None => Err(PerceptionError::MalformedAnswer { raw: text }),
    }
}

/// Trims surrounding whitespace/punctuation and decides Yes vs No,
/// case-insensitively. Anything else is malformed.
pub fn parse_yes_no(text: &str) -> Option<bool> {
    let trimmed = text
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_ascii_lowercase();
    match trimmed.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// The question template sent to the semantic detector, with the proposition
/// display phrase substituted for `{proposition}`.
pub const DETECTOR_PROMPT_TEMPLATE: &str = "Is there {proposition} present in the sequence of frames?\n\n[PARSING RULE] 1. You must only return a Yes or No, and not both, to any question asked.\n\n2. You must not include any other symbols, information, text, or justification in your answer or repeat Yes or No multiple times.\n\n3. For example, if the question is 'Is there a cat present in the Image?', the answer must only be 'Yes' or 'No'.";

/// Renders the detector question for one proposition.
pub fn detector_prompt(prop: &Proposition) -> String {
    DETECTOR_PROMPT_TEMPLATE.replace("{proposition}", prop.display())
}
