//! Confidence calibration and construction of the layered video automaton.
//!
//! A video becomes a discrete-time Markov chain: one layer of states per
//! frame window, where each state is a truth-value assignment to the
//! propositions and its incoming probability is the independent product of
//! the per-proposition calibrated confidences. The chain starts in a
//! sentinel initial state and drains into a sentinel terminal state.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::tl::{PropositionSet, Valuation};

/// Products below this value are treated as zero when pruning states, so
/// floating-point dust cannot inflate the state space. Exact zeros (some
/// calibrated confidence is 0 or 1) are the intended pruning case.
pub const PRUNE_EPSILON: f64 = 1e-12;

/// Tolerance for per-state outgoing-probability sums.
pub const STOCHASTICITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("confidence {value} at window {window}, proposition {prop} is outside [0, 1]")]
    ConfidenceOutOfRange {
        window: usize,
        prop: usize,
        value: f64,
    },
    #[error("confidence trace must contain at least one window")]
    EmptyTrace,
    #[error("window {window} has {got} confidences, expected {expected}")]
    RowWidthMismatch {
        window: usize,
        got: usize,
        expected: usize,
    },
    #[error("window size must be at least 1")]
    ZeroWindowSize,
    #[error("confidence {value} is outside [0, 1]")]
    RawConfidenceOutOfRange { value: f64 },
    #[error("false-positive threshold {value} must lie strictly inside (0, 1)")]
    InvalidThreshold { value: f64 },
    #[error("automaton construction requires a calibrated confidence trace")]
    Uncalibrated,
}

/// A matrix of per-window, per-proposition confidences.
///
/// Rows are frame windows in temporal order; columns follow the proposition
/// set's order. The `calibrated` flag records whether the false-positive
/// threshold map has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceTrace {
    props: PropositionSet,
    window_size: usize,
    windows: Vec<Vec<f64>>,
    calibrated: bool,
}

impl ConfidenceTrace {
    pub fn new(
        props: PropositionSet,
        window_size: usize,
        windows: Vec<Vec<f64>>,
        calibrated: bool,
    ) -> Result<Self, AutomatonError> {
        if window_size == 0 {
            return Err(AutomatonError::ZeroWindowSize);
        }
        if windows.is_empty() {
            return Err(AutomatonError::EmptyTrace);
        }
        for (j, row) in windows.iter().enumerate() {
            if row.len() != props.len() {
                return Err(AutomatonError::RowWidthMismatch {
                    window: j,
                    got: row.len(),
                    expected: props.len(),
                });
            }
            for (i, &c) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&c) || c.is_nan() {
                    return Err(AutomatonError::ConfidenceOutOfRange {
                        window: j,
                        prop: i,
                        value: c,
                    });
                }
            }
        }
        Ok(ConfidenceTrace {
            props,
            window_size,
            windows,
            calibrated,
        })
    }

    pub fn props(&self) -> &PropositionSet {
        &self.props
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Number of windows (layers).
    pub fn window_count(&self) -> usize {
        self.windows.len()
    }

    pub fn windows(&self) -> &[Vec<f64>] {
        &self.windows
    }

    pub fn confidence(&self, window: usize, prop: usize) -> f64 {
        self.windows[window][prop]
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    /// Applies [`calibrate_confidence`] to every entry.
    pub fn calibrate(&self, gamma_fp: f64) -> Result<ConfidenceTrace, AutomatonError> {
        let windows = self
            .windows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| calibrate_confidence(c, gamma_fp))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        ConfidenceTrace::new(self.props.clone(), self.window_size, windows, true)
    }

    /// Marks an already-calibrated matrix as such without remapping.
    pub fn assume_calibrated(mut self) -> ConfidenceTrace {
        self.calibrated = true;
        self
    }
}

/// Piecewise-linear confidence calibration anchored at the false-positive
/// threshold: the classifier's decision boundary `gamma_fp` maps to 0.5, the
/// endpoints stay fixed, and the map is monotone, so threshold decisions and
/// score orderings survive calibration.
pub fn calibrate_confidence(c: f64, gamma_fp: f64) -> Result<f64, AutomatonError> {
    if !(0.0..=1.0).contains(&c) || c.is_nan() {
        return Err(AutomatonError::RawConfidenceOutOfRange { value: c });
    }
    if !(gamma_fp > 0.0 && gamma_fp < 1.0) {
        return Err(AutomatonError::InvalidThreshold { value: gamma_fp });
    }
    Ok(if c < gamma_fp {
        0.5 * c / gamma_fp
    } else {
        0.5 + 0.5 * (c - gamma_fp) / (1.0 - gamma_fp)
    })
}

/// Identifies a state inside a [`VideoAutomaton`].
pub type StateId = usize;

/// Which layer of the chain a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Initial,
    /// 1-based window index.
    Window(usize),
    Terminal,
}

/// State label: a valuation for window states, sentinels otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateLabel {
    Initial,
    Valuation(Valuation),
    Terminal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub layer: Layer,
    pub label: StateLabel,
}

/// Layered DTMC representation of a video: initial state, one layer of
/// valuation-labeled states per window, terminal state, and transition
/// probabilities keyed by (from, to).
#[derive(Debug, Clone, PartialEq)]
pub struct VideoAutomaton {
    props: PropositionSet,
    states: Vec<State>,
    initial: StateId,
    terminal: StateId,
    transitions: BTreeMap<(StateId, StateId), f64>,
}

impl VideoAutomaton {
    /// Assembles an automaton from raw parts without invariant checking.
    /// Use [`validate_automaton`] to diagnose a hand-built instance.
    pub fn from_parts(
        props: PropositionSet,
        states: Vec<State>,
        initial: StateId,
        terminal: StateId,
        transitions: BTreeMap<(StateId, StateId), f64>,
    ) -> Self {
        VideoAutomaton {
            props,
            states,
            initial,
            terminal,
            transitions,
        }
    }

    pub fn props(&self) -> &PropositionSet {
        &self.props
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id]
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn terminal(&self) -> StateId {
        self.terminal
    }

    pub fn transitions(&self) -> &BTreeMap<(StateId, StateId), f64> {
        &self.transitions
    }

    pub fn transition(&self, from: StateId, to: StateId) -> Option<f64> {
        self.transitions.get(&(from, to)).copied()
    }

    /// Successor states of `from` with transition probabilities, in state-id order.
    pub fn successors(&self, from: StateId) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.transitions
            .range((from, 0)..=(from, StateId::MAX))
            .map(|(&(_, to), &p)| (to, p))
    }

    /// Number of window layers.
    pub fn layer_count(&self) -> usize {
        self.states
            .iter()
            .filter_map(|s| match s.layer {
                Layer::Window(j) => Some(j),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// States belonging to window layer `j` (1-based), in id order.
    pub fn layer_states(&self, j: usize) -> Vec<StateId> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.layer == Layer::Window(j))
            .map(|(id, _)| id)
            .collect()
    }

    /// Serializes the automaton to a PRISM-style plain-text DTMC listing:
    /// a header, one `state` line per state with its layer and label, and
    /// one `trans` line per positive-probability transition.
    pub fn export_dtmc(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dtmc");
        let _ = writeln!(out, "states {}", self.states.len());
        let _ = writeln!(out, "transitions {}", self.transitions.len());
        let _ = writeln!(out, "initial {}", self.initial);
        let _ = writeln!(out, "terminal {}", self.terminal);
        let _ = writeln!(
            out,
            "props {}",
            self.props.ids().collect::<Vec<_>>().join(",")
        );
        for (id, state) in self.states.iter().enumerate() {
            match (&state.layer, &state.label) {
                (Layer::Initial, _) => {
                    let _ = writeln!(out, "state {id} initial");
                }
                (Layer::Terminal, _) => {
                    let _ = writeln!(out, "state {id} terminal");
                }
                (Layer::Window(j), StateLabel::Valuation(v)) => {
                    let _ = writeln!(out, "state {id} window {j} label {v}");
                }
                (Layer::Window(j), label) => {
                    // Unreachable for constructor-built automata; keep the
                    // dump total for hand-built ones.
                    let _ = writeln!(out, "state {id} window {j} label {label:?}");
                }
            }
        }
        for (&(from, to), &p) in &self.transitions {
            let _ = writeln!(out, "trans {from} {to} {p}");
        }
        out
    }
}

/// Builds the layered video automaton from a calibrated confidence trace.
///
/// For each window `j` and each valuation `e` over the propositions, the
/// incoming probability is `pr(j, e) = prod_i C*[i,j]^e_i (1-C*[i,j])^(1-e_i)`.
/// States with `pr > 0` survive; every state of the previous layer gets an
/// edge to each survivor with that probability, and the last layer drains
/// into the terminal state with probability 1.
pub fn build_automaton(trace: &ConfidenceTrace) -> Result<VideoAutomaton, AutomatonError> {
    if !trace.is_calibrated() {
        return Err(AutomatonError::Uncalibrated);
    }
    if trace.window_count() == 0 {
        return Err(AutomatonError::EmptyTrace);
    }
    let width = trace.props().len();

    let mut states = vec![State {
        layer: Layer::Initial,
        label: StateLabel::Initial,
    }];
    let initial: StateId = 0;
    let mut transitions = BTreeMap::new();
    let mut previous: Vec<StateId> = vec![initial];

    for (j0, row) in trace.windows().iter().enumerate() {
        let layer = j0 + 1;
        let mut current = Vec::new();
        for mask in 0u64..(1u64 << width) {
            let mut pr = 1.0;
            for (i, &c) in row.iter().enumerate() {
                pr *= if mask >> i & 1 == 1 { c } else { 1.0 - c };
            }
            if pr > PRUNE_EPSILON {
                let id = states.len();
                states.push(State {
                    layer: Layer::Window(layer),
                    label: StateLabel::Valuation(Valuation::from_mask(mask, width)),
                });
                for &prev in &previous {
                    transitions.insert((prev, id), pr);
                }
                current.push(id);
            }
        }
        previous = current;
    }

    let terminal = states.len();
    states.push(State {
        layer: Layer::Terminal,
        label: StateLabel::Terminal,
    });
    for &prev in &previous {
        transitions.insert((prev, terminal), 1.0);
    }

    Ok(VideoAutomaton::from_parts(
        trace.props().clone(),
        states,
        initial,
        terminal,
        transitions,
    ))
}

/// A single invariant violation found by [`validate_automaton`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Outgoing probabilities of a non-terminal state do not sum to 1.
    Stochasticity { state: StateId, sum: f64 },
    /// An edge does not go from one layer to the next.
    Layering { from: StateId, to: StateId },
    /// A stored transition probability is not positive (or not finite).
    NonPositiveProbability {
        from: StateId,
        to: StateId,
        probability: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Stochasticity { state, sum } => {
                write!(
                    f,
                    "state {state}: outgoing probabilities sum to {sum}, expected 1"
                )
            }
            Violation::Layering { from, to } => {
                write!(f, "transition {from} -> {to} does not advance one layer")
            }
            Violation::NonPositiveProbability {
                from,
                to,
                probability,
            } => write!(
                f,
                "transition {from} -> {to} has non-positive probability {probability}"
            ),
        }
    }
}

/// Diagnoses the type invariants: stochasticity of every non-terminal state,
/// strict layer-to-next-layer edges, and positivity of stored probabilities.
/// An empty report means the automaton is valid.
pub fn validate_automaton(automaton: &VideoAutomaton) -> Vec<Violation> {
    let mut violations = Vec::new();
    let layers = automaton.layer_count();

    for (&(from, to), &p) in automaton.transitions() {
        let positive = p.is_finite() && p > 0.0;
        if !positive {
            violations.push(Violation::NonPositiveProbability {
                from,
                to,
                probability: p,
            });
        }
        let from_layer = automaton.state(from).layer;
        let to_layer = automaton.state(to).layer;
        let advances = match (from_layer, to_layer) {
            (Layer::Initial, Layer::Window(1)) => true,
            // A zero-window automaton would connect initial directly to
            // terminal; build_automaton never produces one, but a hand-built
            // instance may.
            (Layer::Initial, Layer::Terminal) => layers == 0,
            (Layer::Window(a), Layer::Window(b)) => b == a + 1,
            (Layer::Window(a), Layer::Terminal) => a == layers,
            _ => false,
        };
        if !advances {
            violations.push(Violation::Layering { from, to });
        }
    }

    for (id, state) in automaton.states().iter().enumerate() {
        if state.layer == Layer::Terminal {
            continue;
        }
        let sum: f64 = automaton.successors(id).map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > STOCHASTICITY_TOLERANCE {
            violations.push(Violation::Stochasticity { state: id, sum });
        }
    }

    violations
}
