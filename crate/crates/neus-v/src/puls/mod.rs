//! Prompt understanding: LLM-backed translation of a natural-language prompt
//! into atomic propositions and a temporal-logic specification, once per
//! evaluation mode.
//!
//! Each mode runs two stages with its own few-shot store: propositions first,
//! then the specification over those propositions. Outputs are validated
//! against the formula grammar; a specification that fails to parse earns one
//! corrective retry before the mode is recorded as failed.

mod fewshot;
mod llm;

pub use fewshot::{FewShotExample, FewShotStore, ModeStores, PulsStores};
pub use llm::{ChatMessage, HttpTextGenClient, LlmConfig, ReplayClient, TextGenClient};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formats::{SpecFile, SpecFileMode, SpecProposition};
use crate::scoring::EvaluationMode;
use crate::tl::{normalize_proposition, parse_formula, Formula, PropositionSet};

#[derive(Debug, Error)]
pub enum PulsError {
    #[error("few-shot store {path}: {message}")]
    Store { path: String, message: String },
    #[error("no few-shot store loaded for mode {mode}")]
    StoreMissing { mode: EvaluationMode },
    #[error("could not extract a bracketed proposition list from: {raw:?}")]
    UnparseableList { raw: String },
    #[error("proposition list is empty in: {raw:?}")]
    EmptyPropositionSet { raw: String },
    #[error(
        "specification failed to parse after a corrective retry: {error} (raw output: {raw:?})"
    )]
    ParseFailureAfterRetry { error: String, raw: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("replay client has no responses left")]
    ReplayExhausted,
    #[error("all modes failed: {summary}")]
    AllModesFailed { summary: String },
}

/// Compiled specification for one evaluation mode, with the raw model
/// outputs retained for audit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub mode: EvaluationMode,
    pub propositions: PropositionSet,
    pub formula: Formula,
    pub raw_t2p: String,
    pub raw_t2tl: String,
}

const RESPOND_T2P: &str = "Respond with the corresponding output fields, starting with the field `reasoning`, then `output_propositions`.";
const RESPOND_T2TL: &str = "Respond with the corresponding output fields, starting with the field `reasoning`, then `output_specification`.";
const DEFAULT_REASONING: &str = "Not supplied for this particular example.";

fn render_proposition_list(propositions: &[String]) -> String {
    let quoted: Vec<String> = propositions.iter().map(|p| format!("'{p}'")).collect();
    format!("[{}]", quoted.join(", "))
}

fn t2p_messages(store: &FewShotStore, prompt: &str) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(&store.system_template)];
    for example in &store.examples {
        messages.push(ChatMessage::user(format!(
            "Input Prompt: {}\n\n{RESPOND_T2P}",
            example.prompt
        )));
        messages.push(ChatMessage::assistant(format!(
            "Reasoning: {}\n\nOutput Propositions: {}",
            example.reasoning.as_deref().unwrap_or(DEFAULT_REASONING),
            render_proposition_list(&example.propositions)
        )));
    }
    messages.push(ChatMessage::user(format!(
        "Input Prompt: {prompt}\n\n{RESPOND_T2P}"
    )));
    messages
}

fn t2tl_messages(store: &FewShotStore, prompt: &str, props: &PropositionSet) -> Vec<ChatMessage> {
    let mut messages = vec![ChatMessage::system(&store.system_template)];
    for example in &store.examples {
        let Some(spec) = &example.specification else {
            continue;
        };
        messages.push(ChatMessage::user(format!(
            "Input Prompt: {}\n\nInput Propositions: {}\n\n{RESPOND_T2TL}",
            example.prompt,
            render_proposition_list(&example.propositions)
        )));
        messages.push(ChatMessage::assistant(format!(
            "Reasoning: {}\n\nOutput Specification: {}",
            example.reasoning.as_deref().unwrap_or(DEFAULT_REASONING),
            spec
        )));
    }
    let displays: Vec<String> = props.iter().map(|p| p.display().to_string()).collect();
    messages.push(ChatMessage::user(format!(
        "Input Prompt: {prompt}\n\nInput Propositions: {}\n\n{RESPOND_T2TL}",
        render_proposition_list(&displays)
    )));
    messages
}

/// Extracts the last complete bracketed list from a response and splits it
/// into trimmed, unquoted items.
fn last_bracketed_list(text: &str) -> Option<Vec<String>> {
    let close = text.rfind(']')?;
    let open = text[..close].rfind('[')?;
    let inner = &text[open + 1..close];
    let items: Vec<String> = inner
        .split(',')
        .map(|item| {
            item.trim()
                .trim_matches(|c| c == '\'' || c == '"' || c == '`')
                .trim()
                .to_string()
        })
        .filter(|item| !item.is_empty())
        .collect();
    Some(items)
}

/// Words and symbols that mark a line as containing a specification.
fn line_has_operator(line: &str) -> bool {
    if line.contains("->") || line.contains('&') || line.contains('|') || line.contains('!') {
        return true;
    }
    line.split(|c: char| c.is_whitespace() || c == '(' || c == ')')
        .any(|word| {
            matches!(
                word,
                "AND"
                    | "OR"
                    | "NOT"
                    | "UNTIL"
                    | "ALWAYS"
                    | "EVENTUALLY"
                    | "NEXT"
                    | "IMPLIES"
                    | "U"
                    | "G"
                    | "F"
                    | "X"
            )
        })
}

/// Picks the specification line out of a chatty response: the last line with
/// a temporal-logic operator, falling back to the last non-empty line. Field
/// prefixes like `Output Specification:` are stripped.
fn extract_specification(text: &str) -> Option<String> {
    let cleaned: Vec<String> = text
        .lines()
        .map(|line| {
            let lower = line.to_ascii_lowercase();
            for prefix in [
                "output specification:",
                "output_specification:",
                "specification:",
            ] {
                if let Some(pos) = lower.find(prefix) {
                    return line[pos + prefix.len()..].trim().to_string();
                }
            }
            line.trim().to_string()
        })
        .filter(|line| !line.is_empty())
        .collect();
    cleaned
        .iter()
        .rev()
        .find(|line| line_has_operator(line))
        .or_else(|| cleaned.last())
        .cloned()
}

/// Translates a prompt into the mode's proposition set: renders the stage
/// template with the mode's few-shot turns, extracts the last bracketed list,
/// and normalizes each phrase.
pub fn translate_t2p(
    llm: &dyn TextGenClient,
    stores: &PulsStores,
    prompt: &str,
    mode: EvaluationMode,
) -> Result<(PropositionSet, String), PulsError> {
    let store = &stores.require(mode)?.t2p;
    let raw = llm.complete(&t2p_messages(store, prompt))?;
    let items =
        last_bracketed_list(&raw).ok_or_else(|| PulsError::UnparseableList { raw: raw.clone() })?;
    let mut props = PropositionSet::empty();
    for item in items {
        if let Ok(prop) = normalize_proposition(&item) {
            props.push_dedup(prop);
        }
    }
    if props.is_empty() {
        return Err(PulsError::EmptyPropositionSet { raw });
    }
    Ok((props, raw))
}

/// Translates a prompt plus propositions into the mode's formula, retrying
/// once with a corrective message if the first answer does not parse.
pub fn translate_t2tl(
    llm: &dyn TextGenClient,
    stores: &PulsStores,
    prompt: &str,
    props: &PropositionSet,
    mode: EvaluationMode,
) -> Result<(Formula, String), PulsError> {
    let store = &stores.require(mode)?.t2tl;
    let mut messages = t2tl_messages(store, prompt, props);
    let raw = llm.complete(&messages)?;

    let first_error = match extract_specification(&raw)
        .ok_or_else(|| "empty response".to_string())
        .and_then(|text| parse_formula(&text, props).map_err(|e| e.to_string()))
    {
        Ok(formula) => return Ok((formula, raw)),
        Err(e) => e,
    };

    messages.push(ChatMessage::assistant(&raw));
    messages.push(ChatMessage::user(format!(
        "That specification does not parse: {first_error}. Respond again with only the \
         `output_specification` field. Use only the given propositions, combined with the \
         operators AND, OR, NOT, UNTIL, ALWAYS, EVENTUALLY, and parentheses."
    )));
    let retry_raw = llm.complete(&messages)?;
    match extract_specification(&retry_raw)
        .ok_or_else(|| "empty response".to_string())
        .and_then(|text| parse_formula(&text, props).map_err(|e| e.to_string()))
    {
        Ok(formula) => Ok((formula, format!("{raw}\n---\n{retry_raw}"))),
        Err(error) => Err(PulsError::ParseFailureAfterRetry {
            error,
            raw: format!("{raw}\n---\n{retry_raw}"),
        }),
    }
}

/// Outcome of translating all requested modes: successful specs plus
/// recorded per-mode failures. Failed modes are never fabricated.
#[derive(Debug)]
pub struct TranslationOutcome {
    pub specs: BTreeMap<EvaluationMode, ModeSpec>,
    pub failures: BTreeMap<EvaluationMode, String>,
}

impl TranslationOutcome {
    /// Converts the successful modes into a specification file.
    pub fn to_spec_file(&self, prompt: &str) -> SpecFile {
        let modes = self
            .specs
            .iter()
            .map(|(&mode, spec)| {
                (
                    mode,
                    SpecFileMode {
                        propositions: spec
                            .propositions
                            .iter()
                            .map(SpecProposition::from_proposition)
                            .collect(),
                        formula: spec.formula.to_string(),
                    },
                )
            })
            .collect();
        SpecFile {
            prompt: prompt.to_string(),
            modes,
        }
    }
}

/// Runs proposition extraction and specification translation for every mode.
/// Fails only when every mode fails.
pub fn translate_all_modes(
    llm: &dyn TextGenClient,
    stores: &PulsStores,
    prompt: &str,
    modes: &[EvaluationMode],
) -> Result<TranslationOutcome, PulsError> {
    let mut specs = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for &mode in modes {
        match translate_mode(llm, stores, prompt, mode) {
            Ok(spec) => {
                specs.insert(mode, spec);
            }
            Err(e) => {
                failures.insert(mode, e.to_string());
            }
        }
    }
    if specs.is_empty() {
        let summary = failures
            .iter()
            .map(|(mode, error)| format!("{mode}: {error}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(PulsError::AllModesFailed { summary });
    }
    Ok(TranslationOutcome { specs, failures })
}

fn translate_mode(
    llm: &dyn TextGenClient,
    stores: &PulsStores,
    prompt: &str,
    mode: EvaluationMode,
) -> Result<ModeSpec, PulsError> {
    let (propositions, raw_t2p) = translate_t2p(llm, stores, prompt, mode)?;
    let (formula, raw_t2tl) = translate_t2tl(llm, stores, prompt, &propositions, mode)?;
    Ok(ModeSpec {
        mode,
        propositions,
        formula,
        raw_t2p,
        raw_t2tl,
    })
}
