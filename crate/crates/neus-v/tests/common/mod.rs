//! Shared generators for the integration and acceptance suites.

use neus_v::automaton::ConfidenceTrace;
use neus_v::tl::{Formula, Proposition, PropositionSet};
use rand::prelude::*;

pub fn props(n: usize) -> PropositionSet {
    PropositionSet::new(
        (0..n)
            .map(|i| Proposition::from_id(&format!("p{i}")).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Random formula over `props` with all operator kinds, depth-bounded.
pub fn random_formula(rng: &mut impl Rng, props: &PropositionSet, depth: usize) -> Formula {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        match rng.random_range(0..8) {
            0 => Formula::True,
            1 => Formula::False,
            _ => {
                let i = rng.random_range(0..props.len());
                Formula::atom(props.get(i).unwrap().id())
            }
        }
    } else {
        let a = random_formula(rng, props, depth - 1);
        match rng.random_range(0..8) {
            0 => a.not(),
            1 => a.and(random_formula(rng, props, depth - 1)),
            2 => a.or(random_formula(rng, props, depth - 1)),
            3 => a.implies(random_formula(rng, props, depth - 1)),
            4 => a.always(),
            5 => a.eventually(),
            6 => a.next(),
            _ => a.until(random_formula(rng, props, depth - 1)),
        }
    }
}

/// Random calibrated confidence trace with entries on a 0.05 grid.
pub fn random_grid_trace(rng: &mut impl Rng, prop_count: usize, windows: usize) -> ConfidenceTrace {
    let rows: Vec<Vec<f64>> = (0..windows)
        .map(|_| {
            (0..prop_count)
                .map(|_| rng.random_range(0..=20) as f64 * 0.05)
                .collect()
        })
        .collect();
    ConfidenceTrace::new(props(prop_count), 1, rows, true).unwrap()
}
