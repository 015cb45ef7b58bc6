//! Gates with symbolic parameters and words built from them.

use std::fmt;

use serde::Serialize;

use super::poly::Poly;
use crate::error::{Error, Result};
use crate::gaussian::GaussianGate;

/// A gate whose displacement-like parameters may be symbolic.
///
/// `Squeeze` and `Rotate` take numeric parameters only, since their
/// Heisenberg action is transcendental in the parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    /// `exp(-i s p)`: shifts q by `s`.
    X {
        mode: usize,
        s: Poly,
    },
    /// `exp(i s q)`: shifts p by `s`.
    Z {
        mode: usize,
        s: Poly,
    },
    U2 {
        mode: usize,
        t: Poly,
    },
    U3 {
        mode: usize,
        t: Poly,
    },
    F {
        mode: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    Squeeze {
        mode: usize,
        r: f64,
    },
    Rotate {
        mode: usize,
        theta: f64,
    },
    /// Global phase; acts trivially on operators.
    Phase {
        phi: Poly,
    },
}

impl Gate {
    pub fn x(mode: usize, s: impl Into<Poly>) -> Self {
        Gate::X { mode, s: s.into() }
    }

    pub fn z(mode: usize, s: impl Into<Poly>) -> Self {
        Gate::Z { mode, s: s.into() }
    }

    pub fn u2(mode: usize, t: impl Into<Poly>) -> Self {
        Gate::U2 { mode, t: t.into() }
    }

    pub fn u3(mode: usize, t: impl Into<Poly>) -> Self {
        Gate::U3 { mode, t: t.into() }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Gate::X { mode, .. }
            | Gate::Z { mode, .. }
            | Gate::U2 { mode, .. }
            | Gate::U3 { mode, .. }
            | Gate::F { mode }
            | Gate::Squeeze { mode, .. }
            | Gate::Rotate { mode, .. } => vec![*mode],
            Gate::Cz { a, b } => vec![*a, *b],
            Gate::Phase { .. } => vec![],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::X { .. } => "X",
            Gate::Z { .. } => "Z",
            Gate::U2 { .. } => "U2",
            Gate::U3 { .. } => "U3",
            Gate::F { .. } => "F",
            Gate::Cz { .. } => "CZ",
            Gate::Squeeze { .. } => "S",
            Gate::Rotate { .. } => "R",
            Gate::Phase { .. } => "phase",
        }
    }

    /// Gates whose generator is a polynomial in q alone.
    pub fn is_q_diagonal(&self) -> bool {
        matches!(
            self,
            Gate::Z { .. }
                | Gate::U2 { .. }
                | Gate::U3 { .. }
                | Gate::Cz { .. }
                | Gate::Phase { .. }
        )
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, Gate::U3 { .. })
    }

    /// Time-ordered word equal to the inverse, up to a global phase.
    pub fn inverse(&self) -> GateWord {
        let g = match self {
            Gate::X { mode, s } => Gate::X {
                mode: *mode,
                s: s.neg(),
            },
            Gate::Z { mode, s } => Gate::Z {
                mode: *mode,
                s: s.neg(),
            },
            Gate::U2 { mode, t } => Gate::U2 {
                mode: *mode,
                t: t.neg(),
            },
            Gate::U3 { mode, t } => Gate::U3 {
                mode: *mode,
                t: t.neg(),
            },
            Gate::F { mode } => {
                return GateWord(vec![Gate::F { mode: *mode }; 3]);
            }
            Gate::Cz { a, b } => {
                // Conjugating by the parity F² on one mode flips the sign of q_a q_b.
                let f = Gate::F { mode: *a };
                return GateWord(vec![
                    f.clone(),
                    f.clone(),
                    Gate::Cz { a: *a, b: *b },
                    f.clone(),
                    f,
                ]);
            }
            Gate::Squeeze { mode, r } => Gate::Squeeze { mode: *mode, r: -r },
            Gate::Rotate { mode, theta } => Gate::Rotate {
                mode: *mode,
                theta: -theta,
            },
            Gate::Phase { phi } => Gate::Phase { phi: phi.neg() },
        };
        GateWord(vec![g])
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X { mode, s } => write!(f, "X{}({s})", mode + 1),
            Gate::Z { mode, s } => write!(f, "Z{}({s})", mode + 1),
            Gate::U2 { mode, t } => write!(f, "U2_{}({t})", mode + 1),
            Gate::U3 { mode, t } => write!(f, "U3_{}({t})", mode + 1),
            Gate::F { mode } => write!(f, "F{}", mode + 1),
            Gate::Cz { a, b } => write!(f, "CZ{}{}", a + 1, b + 1),
            Gate::Squeeze { mode, r } => write!(f, "S{}({r})", mode + 1),
            Gate::Rotate { mode, theta } => write!(f, "R{}({theta})", mode + 1),
            Gate::Phase { phi } => write!(f, "e^(i·{phi})"),
        }
    }
}

/// A sequence of gates in time order: element 0 acts first.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct GateWord(pub Vec<Gate>);

impl GateWord {
    pub fn new(gates: Vec<Gate>) -> Self {
        GateWord(gates)
    }

    pub fn empty() -> Self {
        GateWord(Vec::new())
    }

    /// Builds a word from an operator product written left to right,
    /// so the rightmost factor acts first.
    pub fn operator_product(factors: Vec<Gate>) -> Self {
        let mut v = factors;
        v.reverse();
        GateWord(v)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, g: Gate) {
        self.0.push(g);
    }

    /// This word followed in time by `later`.
    pub fn then(&self, later: &GateWord) -> GateWord {
        let mut v = self.0.clone();
        v.extend(later.0.iter().cloned());
        GateWord(v)
    }

    /// Number of modes touched, i.e. one more than the largest mode index.
    pub fn n_modes(&self) -> usize {
        self.0
            .iter()
            .flat_map(Gate::modes)
            .map(|m| m + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn inverse(&self) -> GateWord {
        let mut out = GateWord::empty();
        for g in self.0.iter().rev() {
            out = out.then(&g.inverse());
        }
        out
    }

    pub fn check_modes(&self, n_modes: usize) -> Result<()> {
        for g in &self.0 {
            if let Gate::Cz { a, b } = g {
                if a == b {
                    return Err(Error::Invalid(format!(
                        "CZ needs two distinct modes, got {a}"
                    )));
                }
            }
            for m in g.modes() {
                if m >= n_modes {
                    return Err(Error::InvalidMode { mode: m, n_modes });
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GateWord {
    /// Printed as an operator product, latest gate leftmost.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        let parts: Vec<String> = self.0.iter().rev().map(|g| g.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

impl From<Vec<Gate>> for GateWord {
    fn from(v: Vec<Gate>) -> Self {
        GateWord(v)
    }
}

impl From<&GaussianGate> for Gate {
    fn from(g: &GaussianGate) -> Self {
        match *g {
            GaussianGate::X { mode, q } => Gate::x(mode, q),
            GaussianGate::Z { mode, p } => Gate::z(mode, p),
            GaussianGate::U2 { mode, t } => Gate::u2(mode, t),
            GaussianGate::F { mode } => Gate::F { mode },
            GaussianGate::Cz { a, b } => Gate::Cz { a, b },
            GaussianGate::Squeeze { mode, r } => Gate::Squeeze { mode, r },
            GaussianGate::Rotate { mode, theta } => Gate::Rotate { mode, theta },
        }
    }
}
