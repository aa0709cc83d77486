//! Finite-trace boolean semantics. This is the ground-truth oracle the
//! probabilistic checker is tested against.

use super::ast::{BooleanTrace, Formula, PropositionSet};
use super::TlError;

/// Evaluates `phi` on `trace` starting at position `pos`.
///
/// Semantics over a finite trace of length `n`:
/// - `Always f` holds iff `f` holds at every remaining position;
/// - `Eventually f` iff `f` holds at some remaining position;
/// - `Next f` (strong) iff `pos + 1 < n` and `f` holds there;
/// - `f Until g` (strong) iff some `j >= pos` has `g` at `j` and `f` at every
///   `k` in `[pos, j)`.
pub fn evaluate_trace(
    phi: &Formula,
    props: &PropositionSet,
    trace: &BooleanTrace,
    pos: usize,
) -> Result<bool, TlError> {
    if pos >= trace.len() {
        return Err(TlError::PositionOutOfRange {
            pos,
            len: trace.len(),
        });
    }
    eval(phi, props, trace, pos)
}

fn eval(
    phi: &Formula,
    props: &PropositionSet,
    trace: &BooleanTrace,
    pos: usize,
) -> Result<bool, TlError> {
    let n = trace.len();
    Ok(match phi {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(id) => {
            let index = props
                .index_of(id)
                .ok_or_else(|| TlError::UnknownAtom { phrase: id.clone() })?;
            trace
                .step(pos)
                .and_then(|v| v.bit(index))
                .ok_or_else(|| TlError::WidthMismatch {
                    id: id.clone(),
                    index,
                    width: trace.width(),
                })?
        }
        Formula::Not(f) => !eval(f, props, trace, pos)?,
        Formula::And(f, g) => eval(f, props, trace, pos)? && eval(g, props, trace, pos)?,
        Formula::Or(f, g) => eval(f, props, trace, pos)? || eval(g, props, trace, pos)?,
        Formula::Implies(f, g) => !eval(f, props, trace, pos)? || eval(g, props, trace, pos)?,
        Formula::Always(f) => {
            let mut holds = true;
            for k in pos..n {
                if !eval(f, props, trace, k)? {
                    holds = false;
                    break;
                }
            }
            holds
        }
        Formula::Eventually(f) => {
            let mut holds = false;
            for k in pos..n {
                if eval(f, props, trace, k)? {
                    holds = true;
                    break;
                }
            }
            holds
        }
        Formula::Next(f) => pos + 1 < n && eval(f, props, trace, pos + 1)?,
        Formula::Until(f, g) => {
            let mut holds = false;
            for j in pos..n {
                if eval(g, props, trace, j)? {
                    holds = true;
                    break;
                }
                if !eval(f, props, trace, j)? {
                    break;
                }
            }
            holds
        }
    })
}
