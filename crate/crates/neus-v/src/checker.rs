//! Satisfaction probability of a video automaton against a formula.
//!
//! The checker compiles the formula into residual obligations by progression
//! and sweeps a product distribution forward through the automaton layers.
//! On a layered DAG with a terminal state this computes the exact probability
//! mass of label traces satisfying the formula. A path-enumeration oracle
//! built on the boolean trace semantics ships alongside for cross-checking.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::automaton::{StateLabel, VideoAutomaton};
use crate::tl::{evaluate_trace, BooleanTrace, Formula, PropositionSet, TlError, Valuation};

/// Default cap on distinct residual formulas per check.
pub const DEFAULT_RESIDUAL_CAP: usize = 100_000;

/// Hard ceiling for the path-enumeration oracle.
pub const BRUTE_FORCE_PATH_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("formula atom {id:?} is not among the automaton's propositions")]
    PropositionMismatch { id: String },
    #[error("distinct residual formulas exceeded the cap of {cap}")]
    StateExplosion { cap: usize },
    #[error("instance has {paths} paths, above the enumeration cap of {cap}")]
    InstanceTooLarge { paths: usize, cap: usize },
    #[error("automaton has no window layers to evaluate")]
    NoWindows,
    #[error(transparent)]
    Tl(#[from] TlError),
}

/// How a [`SatisfactionResult`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dp,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionResult {
    /// Probability that a trace drawn from the automaton satisfies the formula.
    pub probability: f64,
    /// Distinct (state, residual) product pairs explored.
    pub state_count: usize,
    pub method: Method,
}

/// Rewrites a formula into its canonical form: constants folded, `Implies`
/// desugared to `Or(Not(..), ..)`, double negation removed, commutative
/// operands flattened, deduplicated, and sorted structurally.
///
/// Temporal constant folds are restricted to the ones that are valid on every
/// suffix *including the empty one* (`Always TRUE`, `Eventually FALSE`,
/// `Next FALSE`, `Until(_, FALSE)`), so canonical residuals keep their
/// end-of-trace meaning.
pub fn canonicalize(phi: &Formula) -> Formula {
    match phi {
        Formula::True | Formula::False | Formula::Atom(_) => phi.clone(),
        Formula::Not(f) => match canonicalize(f) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            canonical => canonical.not(),
        },
        Formula::And(..) => {
            let mut operands = BTreeSet::new();
            if collect_and(phi, &mut operands) {
                rebuild(operands, Formula::True, |a, b| a.and(b))
            } else {
                Formula::False
            }
        }
        Formula::Or(..) => {
            let mut operands = BTreeSet::new();
            if collect_or(phi, &mut operands) {
                rebuild(operands, Formula::False, |a, b| a.or(b))
            } else {
                Formula::True
            }
        }
        Formula::Implies(f, g) => canonicalize(&f.clone().not().or((**g).clone())),
        Formula::Always(f) => match canonicalize(f) {
            Formula::True => Formula::True,
            canonical => canonical.always(),
        },
        Formula::Eventually(f) => match canonicalize(f) {
            Formula::False => Formula::False,
            canonical => canonical.eventually(),
        },
        Formula::Next(f) => match canonicalize(f) {
            Formula::False => Formula::False,
            canonical => canonical.next(),
        },
        Formula::Until(f, g) => match (canonicalize(f), canonicalize(g)) {
            (_, Formula::False) => Formula::False,
            (cf, cg) => cf.until(cg),
        },
    }
}

/// Flattens an And-chain into canonical operands. Returns false if the
/// conjunction folds to FALSE.
fn collect_and(phi: &Formula, operands: &mut BTreeSet<Formula>) -> bool {
    match phi {
        Formula::And(a, b) => collect_and(a, operands) && collect_and(b, operands),
        other => match canonicalize(other) {
            Formula::True => true,
            Formula::False => false,
            Formula::And(a, b) => {
                // Canonicalizing an operand (e.g. Implies) may expose a fresh
                // chain of the same connective.
                collect_and(&a, operands) && collect_and(&b, operands)
            }
            canonical => {
                operands.insert(canonical);
                true
            }
        },
    }
}

fn collect_or(phi: &Formula, operands: &mut BTreeSet<Formula>) -> bool {
    match phi {
        Formula::Or(a, b) => collect_or(a, operands) && collect_or(b, operands),
        other => match canonicalize(other) {
            Formula::False => true,
            Formula::True => false,
            Formula::Or(a, b) => collect_or(&a, operands) && collect_or(&b, operands),
            canonical => {
                operands.insert(canonical);
                true
            }
        },
    }
}

fn rebuild(
    operands: BTreeSet<Formula>,
    identity: Formula,
    join: impl Fn(Formula, Formula) -> Formula,
) -> Formula {
    let mut iter = operands.into_iter();
    match iter.next() {
        None => identity,
        Some(first) => iter.fold(first, join),
    }
}

/// The nonempty-suffix guard: `EVENTUALLY TRUE` holds exactly on traces with
/// at least one remaining position. Progressing a strong `Next` attaches it
/// so the residual still fails if the trace ends.
fn nonempty_guard() -> Formula {
    Formula::True.eventually()
}

/// Progresses `phi` through one valuation: the result is the canonical
/// obligation the remaining suffix must satisfy.
pub fn progress(
    phi: &Formula,
    props: &PropositionSet,
    sigma: &Valuation,
) -> Result<Formula, CheckError> {
    Ok(canonicalize(&progress_raw(phi, props, sigma)?))
}

fn progress_raw(
    phi: &Formula,
    props: &PropositionSet,
    sigma: &Valuation,
) -> Result<Formula, CheckError> {
    Ok(match phi {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom(id) => {
            let index = props
                .index_of(id)
                .ok_or_else(|| CheckError::PropositionMismatch { id: id.clone() })?;
            let bit = sigma.bit(index).ok_or_else(|| {
                CheckError::Tl(TlError::WidthMismatch {
                    id: id.clone(),
                    index,
                    width: sigma.width(),
                })
            })?;
            if bit {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::Not(f) => progress_raw(f, props, sigma)?.not(),
        Formula::And(f, g) => progress_raw(f, props, sigma)?.and(progress_raw(g, props, sigma)?),
        Formula::Or(f, g) => progress_raw(f, props, sigma)?.or(progress_raw(g, props, sigma)?),
        Formula::Implies(f, g) => {
            progress_raw(f, props, sigma)?.implies(progress_raw(g, props, sigma)?)
        }
        // Strong next: the obligation moves to the next position, which must
        // exist, hence the guard.
        Formula::Next(f) => (**f).clone().and(nonempty_guard()),
        Formula::Always(f) => progress_raw(f, props, sigma)?.and(phi.clone()),
        Formula::Eventually(f) => progress_raw(f, props, sigma)?.or(phi.clone()),
        Formula::Until(f, g) => {
            progress_raw(g, props, sigma)?.or(progress_raw(f, props, sigma)?.and(phi.clone()))
        }
    })
}

/// Evaluates a fully progressed residual at the end of the trace.
///
/// `Always` is vacuously true on the empty suffix; `Eventually`, `Next`, and
/// strong `Until` demand a position that no longer exists and are false. A
/// residual atom is an unmet obligation deferred past the final position by a
/// strong `Next`, so it is false as well.
pub fn finalize(phi: &Formula) -> bool {
    match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(_) => false,
        Formula::Not(f) => !finalize(f),
        Formula::And(f, g) => finalize(f) && finalize(g),
        Formula::Or(f, g) => finalize(f) || finalize(g),
        Formula::Implies(f, g) => !finalize(f) || finalize(g),
        Formula::Always(_) => true,
        Formula::Eventually(_) | Formula::Next(_) | Formula::Until(..) => false,
    }
}

fn check_atoms(phi: &Formula, props: &PropositionSet) -> Result<(), CheckError> {
    for prop in phi.collect_atoms().iter() {
        if !props.contains(prop.id()) {
            return Err(CheckError::PropositionMismatch {
                id: prop.id().to_string(),
            });
        }
    }
    Ok(())
}

/// Computes `P[automaton |= phi]` by forward progression DP with the default
/// residual cap.
pub fn satisfaction_probability(
    automaton: &VideoAutomaton,
    phi: &Formula,
) -> Result<SatisfactionResult, CheckError> {
    satisfaction_probability_with_cap(automaton, phi, DEFAULT_RESIDUAL_CAP)
}

/// Forward product sweep: a distribution over (state, canonical residual)
/// pairs is pushed layer by layer; valuation-labeled states progress the
/// residual, the terminal state finalizes it. Deterministic: all maps are
/// ordered, so accumulation order is fixed.
pub fn satisfaction_probability_with_cap(
    automaton: &VideoAutomaton,
    phi: &Formula,
    residual_cap: usize,
) -> Result<SatisfactionResult, CheckError> {
    check_atoms(phi, automaton.props())?;
    let root = canonicalize(phi);

    let mut order: Vec<usize> = (0..automaton.states().len()).collect();
    order.sort_by_key(|&id| (automaton.state(id).layer, id));

    let mut mass: BTreeMap<usize, BTreeMap<Formula, f64>> = BTreeMap::new();
    mass.entry(automaton.initial())
        .or_default()
        .insert(root.clone(), 1.0);

    let mut residuals: BTreeSet<Formula> = BTreeSet::new();
    residuals.insert(root);
    let mut product_states = 1usize;
    let mut accepted = 0.0f64;

    for state_id in order {
        let Some(entries) = mass.remove(&state_id) else {
            continue;
        };
        if state_id == automaton.terminal() {
            for (residual, p) in entries {
                if finalize(&residual) {
                    accepted += p;
                }
            }
            continue;
        }
        for (residual, p) in entries {
            for (succ, edge_p) in automaton.successors(state_id) {
                let next_residual = match &automaton.state(succ).label {
                    StateLabel::Valuation(v) => progress(&residual, automaton.props(), v)?,
                    // Sentinel labels do not participate in evaluation.
                    StateLabel::Initial | StateLabel::Terminal => residual.clone(),
                };
                if residuals.insert(next_residual.clone()) && residuals.len() > residual_cap {
                    return Err(CheckError::StateExplosion { cap: residual_cap });
                }
                let bucket = mass.entry(succ).or_default();
                if !bucket.contains_key(&next_residual) {
                    product_states += 1;
                }
                *bucket.entry(next_residual).or_insert(0.0) += p * edge_p;
            }
        }
    }

    Ok(SatisfactionResult {
        probability: accepted.clamp(0.0, 1.0),
        state_count: product_states,
        method: Method::Dp,
    })
}

/// Definitional oracle: enumerates every root-to-terminal path, evaluates its
/// label trace with the boolean semantics, and sums the probabilities of the
/// satisfying paths.
pub fn brute_force_probability(
    automaton: &VideoAutomaton,
    phi: &Formula,
) -> Result<SatisfactionResult, CheckError> {
    check_atoms(phi, automaton.props())?;

    let layers = automaton.layer_count();
    if layers == 0 {
        return Err(CheckError::NoWindows);
    }
    let mut paths = 1usize;
    for j in 1..=layers {
        paths = paths.saturating_mul(automaton.layer_states(j).len().max(1));
        if paths > BRUTE_FORCE_PATH_CAP {
            return Err(CheckError::InstanceTooLarge {
                paths,
                cap: BRUTE_FORCE_PATH_CAP,
            });
        }
    }

    let mut accepted = 0.0f64;
    let mut explored = 0usize;
    let mut stack: Vec<Valuation> = Vec::with_capacity(layers);
    walk(
        automaton,
        phi,
        automaton.initial(),
        1.0,
        &mut stack,
        &mut accepted,
        &mut explored,
    )?;

    Ok(SatisfactionResult {
        probability: accepted.clamp(0.0, 1.0),
        state_count: explored,
        method: Method::BruteForce,
    })
}

fn walk(
    automaton: &VideoAutomaton,
    phi: &Formula,
    state: usize,
    p: f64,
    stack: &mut Vec<Valuation>,
    accepted: &mut f64,
    explored: &mut usize,
) -> Result<(), CheckError> {
    *explored += 1;
    if state == automaton.terminal() {
        let trace = BooleanTrace::new(stack.clone())?;
        if evaluate_trace(phi, automaton.props(), &trace, 0)? {
            *accepted += p;
        }
        return Ok(());
    }
    for (succ, edge_p) in automaton.successors(state) {
        let pushed = match &automaton.state(succ).label {
            StateLabel::Valuation(v) => {
                stack.push(v.clone());
                true
            }
            StateLabel::Initial | StateLabel::Terminal => false,
        };
        walk(automaton, phi, succ, p * edge_p, stack, accepted, explored)?;
        if pushed {
            stack.pop();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::{build_automaton, ConfidenceTrace};
    use crate::tl::Proposition;

    fn props(ids: &[&str]) -> PropositionSet {
        PropositionSet::new(
            ids.iter()
                .map(|id| Proposition::from_id(id).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn automaton(ids: &[&str], rows: Vec<Vec<f64>>) -> VideoAutomaton {
        let trace = ConfidenceTrace::new(props(ids), 1, rows, true).unwrap();
        build_automaton(&trace).unwrap()
    }

    fn val(bits: &[bool]) -> Valuation {
        Valuation::new(bits.to_vec())
    }

    #[test]
    fn progress_discharges_eventually_on_hit() {
        let ps = props(&["a"]);
        let phi = Formula::atom("a").eventually();
        assert_eq!(progress(&phi, &ps, &val(&[true])).unwrap(), Formula::True);
        assert_eq!(progress(&phi, &ps, &val(&[false])).unwrap(), phi);
    }

    #[test]
    fn progress_keeps_always_obligation() {
        let ps = props(&["a"]);
        let phi = Formula::atom("a").always();
        assert_eq!(progress(&phi, &ps, &val(&[true])).unwrap(), phi);
        assert_eq!(progress(&phi, &ps, &val(&[false])).unwrap(), Formula::False);
    }

    #[test]
    fn progress_until_matches_expansion() {
        let ps = props(&["a", "b"]);
        let phi = Formula::atom("a").until(Formula::atom("b"));
        assert_eq!(progress(&phi, &ps, &val(&[true, false])).unwrap(), phi);
        assert_eq!(
            progress(&phi, &ps, &val(&[false, true])).unwrap(),
            Formula::True
        );
        assert_eq!(
            progress(&phi, &ps, &val(&[false, false])).unwrap(),
            Formula::False
        );
    }

    #[test]
    fn finalize_constants_and_temporal_operators() {
        assert!(finalize(&Formula::atom("a").always()));
        assert!(!finalize(&Formula::atom("a").eventually()));
        assert!(!finalize(&Formula::atom("a").next()));
        assert!(!finalize(&Formula::atom("a").until(Formula::atom("b"))));
        assert!(!finalize(
            &Formula::atom("a")
                .always()
                .and(Formula::atom("b").eventually())
        ));
    }

    #[test]
    fn canonicalize_sorts_dedups_and_folds() {
        let a = Formula::atom("a");
        let b = Formula::atom("b");
        // (b AND a) AND (a AND TRUE) -> a AND b, operands sorted.
        let messy = b.clone().and(a.clone()).and(a.clone().and(Formula::True));
        let canonical = canonicalize(&messy);
        assert_eq!(canonical, canonicalize(&a.clone().and(b.clone())));
        // Implies desugars.
        assert_eq!(
            canonicalize(&a.clone().implies(b.clone())),
            canonicalize(&a.clone().not().or(b.clone()))
        );
        // Idempotent.
        assert_eq!(canonicalize(&canonical), canonical);
        // Or with TRUE collapses.
        assert_eq!(canonicalize(&a.clone().or(Formula::True)), Formula::True);
        // Suffix-safe temporal folds only.
        assert_eq!(canonicalize(&Formula::True.always()), Formula::True);
        assert_eq!(canonicalize(&Formula::False.eventually()), Formula::False);
        assert_eq!(canonicalize(&Formula::False.next()), Formula::False);
        assert_eq!(
            canonicalize(&a.clone().until(Formula::False)),
            Formula::False
        );
        // These must NOT fold: their value depends on suffix emptiness.
        assert_eq!(
            canonicalize(&Formula::True.eventually()),
            Formula::True.eventually()
        );
        assert_eq!(canonicalize(&Formula::True.next()), Formula::True.next());
        assert_eq!(
            canonicalize(&Formula::False.always()),
            Formula::False.always()
        );
    }

    #[test]
    fn forced_path_satisfies_always() {
        let a = automaton(&["a"], vec![vec![1.0]]);
        let phi = Formula::atom("a").always();
        let result = satisfaction_probability(&a, &phi).unwrap();
        assert_eq!(result.probability, 1.0);
        assert_eq!(result.method, Method::Dp);
    }

    #[test]
    fn eventually_two_windows_closed_form() {
        // P(F a) = 1 - (1 - 0.6)(1 - 0.5) = 0.8
        let a = automaton(&["a"], vec![vec![0.6], vec![0.5]]);
        let phi = Formula::atom("a").eventually();
        let dp = satisfaction_probability(&a, &phi).unwrap();
        assert!((dp.probability - 0.8).abs() < 1e-12, "{}", dp.probability);
        let bf = brute_force_probability(&a, &phi).unwrap();
        assert!((dp.probability - bf.probability).abs() < 1e-12);
    }

    #[test]
    fn until_two_windows_closed_form() {
        // P(a U b) = P(b@1) + P(!b@1) P(a@1) P(b@2) = 0.2 + 0.8 * 0.9 * 0.5 = 0.56
        let a = automaton(&["a", "b"], vec![vec![0.9, 0.2], vec![0.9, 0.5]]);
        let phi = Formula::atom("a").until(Formula::atom("b"));
        let dp = satisfaction_probability(&a, &phi).unwrap();
        assert!((dp.probability - 0.56).abs() < 1e-12, "{}", dp.probability);
        let bf = brute_force_probability(&a, &phi).unwrap();
        assert!((dp.probability - bf.probability).abs() < 1e-12);
    }

    #[test]
    fn constants_on_any_automaton() {
        let a = automaton(&["a", "b"], vec![vec![0.3, 0.7], vec![0.5, 0.5]]);
        let all = brute_force_probability(&a, &Formula::True)
            .unwrap()
            .probability;
        assert!((all - 1.0).abs() < 1e-12, "got {all}");
        assert_eq!(
            brute_force_probability(&a, &Formula::False)
                .unwrap()
                .probability,
            0.0
        );
        let dp = satisfaction_probability(&a, &Formula::True)
            .unwrap()
            .probability;
        assert!((dp - 1.0).abs() < 1e-12, "got {dp}");
    }

    #[test]
    fn strong_next_at_final_window_fails_even_for_always() {
        // One window: X (G a) must be 0 regardless of confidences.
        let a = automaton(&["a"], vec![vec![1.0]]);
        let phi = Formula::atom("a").always().next();
        let dp = satisfaction_probability(&a, &phi).unwrap();
        assert_eq!(dp.probability, 0.0);
        let bf = brute_force_probability(&a, &phi).unwrap();
        assert_eq!(bf.probability, 0.0);
    }

    #[test]
    fn unknown_atom_is_a_proposition_mismatch() {
        let a = automaton(&["a"], vec![vec![0.5]]);
        let err = satisfaction_probability(&a, &Formula::atom("zzz")).unwrap_err();
        assert!(matches!(err, CheckError::PropositionMismatch { id } if id == "zzz"));
    }

    #[test]
    fn residual_cap_triggers_state_explosion() {
        let a = automaton(&["a", "b"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let phi = Formula::atom("a").until(Formula::atom("b"));
        let err = satisfaction_probability_with_cap(&a, &phi, 1).unwrap_err();
        assert!(matches!(err, CheckError::StateExplosion { cap: 1 }));
    }

    #[test]
    fn complementation_sums_to_one() {
        let a = automaton(
            &["a", "b"],
            vec![vec![0.35, 0.6], vec![0.8, 0.15], vec![0.5, 0.5]],
        );
        let phi = Formula::atom("a")
            .until(Formula::atom("b"))
            .or(Formula::atom("a").always().next());
        let p = satisfaction_probability(&a, &phi).unwrap().probability;
        let not_p = satisfaction_probability(&a, &phi.clone().not())
            .unwrap()
            .probability;
        assert!((p + not_p - 1.0).abs() < 1e-12);
    }
}
