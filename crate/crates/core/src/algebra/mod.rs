//! Exact Heisenberg-picture algebra for the gate set and its decryption
//! corrections.
//!
//! Every gate acts on the quadrature operators as a polynomial map, so
//! equality of two words (up to a global phase) reduces to equality of
//! their polynomial images. Words are stored in time order.

mod correction;
mod map;
mod poly;
mod word;

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

pub use correction::{
    compose_program_correction, encryption_word, identity_catalogue, slide, table_correction,
    table_rows, verify_correction, verify_program_correction, verify_with, Displacement, Identity,
    ProgramCorrection, Slide, Verification, MAP_TOL,
};
pub use map::{heisenberg, heisenberg_on, PolyMap};
pub use poly::{Monomial, Poly, Var};
pub use word::{Gate, GateWord};

use crate::error::Result;

/// Largest total degree in (q, p) allowed in any image.
pub const MAX_DEGREE: u32 = 6;

/// Pass/fail tally for one table row under random numeric parameters.
#[derive(Debug, Clone, Serialize)]
pub struct FuzzOutcome {
    pub gate: String,
    pub cases: usize,
    pub failures: usize,
    /// First failing parameter set, if any.
    pub first_failure: Option<BTreeMap<String, f64>>,
}

/// Names of the free symbols in a table row, in first-seen order.
pub fn row_symbols(g: &Gate, enc: &[Displacement]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    let mut collect = |p: &Poly| {
        for (m, _) in p.terms() {
            for (v, _) in m.factors() {
                if let Var::Sym(s) = v {
                    if !names.contains(s) {
                        names.push(s.clone());
                    }
                }
            }
        }
    };
    match g {
        Gate::X { s, .. } | Gate::Z { s, .. } => collect(s),
        Gate::U2 { t, .. } | Gate::U3 { t, .. } => collect(t),
        _ => {}
    }
    for d in enc {
        collect(&d.q);
        collect(&d.p);
    }
    names
}

/// Substitutes numeric values for the symbols in a gate parameter.
pub fn bind_gate(g: &Gate, vals: &BTreeMap<String, f64>) -> Gate {
    match g {
        Gate::X { mode, s } => Gate::X {
            mode: *mode,
            s: s.bind(vals),
        },
        Gate::Z { mode, s } => Gate::Z {
            mode: *mode,
            s: s.bind(vals),
        },
        Gate::U2 { mode, t } => Gate::U2 {
            mode: *mode,
            t: t.bind(vals),
        },
        Gate::U3 { mode, t } => Gate::U3 {
            mode: *mode,
            t: t.bind(vals),
        },
        other => other.clone(),
    }
}

/// Negates the argument of every Z element of a correction word.
pub fn flip_z_signs(word: &mut GateWord) {
    for e in word.0.iter_mut() {
        if let Gate::Z { s, .. } = e {
            *s = s.neg();
        }
    }
}

/// Verifies every table row at `cases` random numeric parameter sets drawn
/// uniformly from `[-range, range]`. With `flip_row`, the Z arguments of
/// the correction for the row of that gate name are negated, which must
/// make that row fail.
pub fn fuzz_table<R: Rng>(
    cases: usize,
    range: f64,
    flip_row: Option<&str>,
    rng: &mut R,
) -> Result<Vec<FuzzOutcome>> {
    let mut out = Vec::new();
    for (g, enc) in table_rows() {
        let names = row_symbols(&g, &enc);
        let flip = flip_row == Some(g.name());
        let mut outcome = FuzzOutcome {
            gate: g.name().to_string(),
            cases,
            failures: 0,
            first_failure: None,
        };
        for _ in 0..cases {
            let vals: BTreeMap<String, f64> = names
                .iter()
                .map(|n| (n.clone(), rng.random_range(-range..=range)))
                .collect();
            let gate = bind_gate(&g, &vals);
            let enc: Vec<Displacement> = enc
                .iter()
                .map(|d| Displacement {
                    q: d.q.bind(&vals),
                    p: d.p.bind(&vals),
                })
                .collect();
            let mut c = table_correction(&gate, &enc)?;
            if flip {
                flip_z_signs(&mut c);
            }
            if !verify_with(&gate, &enc, &c)?.holds {
                outcome.failures += 1;
                outcome.first_failure.get_or_insert(vals);
            }
        }
        out.push(outcome);
    }
    Ok(out)
}
