//! Temporal-logic core: AST, concrete-syntax parser, and finite-trace
//! boolean semantics.
//!
//! Everything here is immutable after construction and the operations are
//! pure, so values can be shared freely across threads.

mod ast;
mod parser;
mod semantics;

pub use ast::{
    collect_atoms, normalize_proposition, BooleanTrace, Formula, Proposition, PropositionSet,
    Valuation,
};
pub use parser::{parse_formula, parse_formula_collecting};
pub use semantics::evaluate_trace;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TlError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown atomic proposition {phrase:?}")]
    UnknownAtom { phrase: String },
    #[error("empty formula")]
    EmptyFormula,
    #[error("proposition {phrase:?} is empty after normalization")]
    EmptyProposition { phrase: String },
    #[error("duplicate proposition id {id:?}")]
    DuplicateProposition { id: String },
    #[error("atom {id:?} (index {index}) exceeds valuation width {width}")]
    WidthMismatch {
        id: String,
        index: usize,
        width: usize,
    },
    #[error("position {pos} out of range for trace of length {len}")]
    PositionOutOfRange { pos: usize, len: usize },
    #[error("trace must contain at least one step")]
    EmptyTrace,
    #[error("valuation widths differ within one trace: {first} vs {other}")]
    MixedWidths { first: usize, other: usize },
}
