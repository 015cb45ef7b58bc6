use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{Gate, GateWord};
use crate::fock::FockGate;
use crate::gaussian::GaussianGate;

/// A server gate with numeric parameters, including the cubic phase gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProgramGate {
    X { mode: usize, q: f64 },
    Z { mode: usize, p: f64 },
    U2 { mode: usize, t: f64 },
    U3 { mode: usize, t: f64 },
    F { mode: usize },
    Cz { a: usize, b: usize },
    Squeeze { mode: usize, r: f64 },
    Rotate { mode: usize, theta: f64 },
}

impl ProgramGate {
    /// The Gaussian gate, or `None` for `U3`.
    pub fn gaussian(&self) -> Option<GaussianGate> {
        Some(match *self {
            ProgramGate::X { mode, q } => GaussianGate::X { mode, q },
            ProgramGate::Z { mode, p } => GaussianGate::Z { mode, p },
            ProgramGate::U2 { mode, t } => GaussianGate::U2 { mode, t },
            ProgramGate::F { mode } => GaussianGate::F { mode },
            ProgramGate::Cz { a, b } => GaussianGate::Cz { a, b },
            ProgramGate::Squeeze { mode, r } => GaussianGate::Squeeze { mode, r },
            ProgramGate::Rotate { mode, theta } => GaussianGate::Rotate { mode, theta },
            ProgramGate::U3 { .. } => return None,
        })
    }

    pub fn is_cubic(&self) -> bool {
        matches!(self, ProgramGate::U3 { .. })
    }

    pub fn modes(&self) -> Vec<usize> {
        match *self {
            ProgramGate::U3 { mode, .. } => vec![mode],
            g => g.gaussian().expect("Gaussian").modes(),
        }
    }

    pub fn to_algebra(&self) -> Gate {
        match *self {
            ProgramGate::U3 { mode, t } => Gate::u3(mode, t),
            g => Gate::from(&g.gaussian().expect("Gaussian")),
        }
    }

    pub fn to_fock(&self) -> (FockGate, Vec<usize>) {
        match *self {
            ProgramGate::U3 { mode, t } => (FockGate::U3(t), vec![mode]),
            g => FockGate::from_gaussian(&g.gaussian().expect("Gaussian")),
        }
    }
}

impl From<GaussianGate> for ProgramGate {
    fn from(g: GaussianGate) -> Self {
        match g {
            GaussianGate::X { mode, q } => ProgramGate::X { mode, q },
            GaussianGate::Z { mode, p } => ProgramGate::Z { mode, p },
            GaussianGate::U2 { mode, t } => ProgramGate::U2 { mode, t },
            GaussianGate::F { mode } => ProgramGate::F { mode },
            GaussianGate::Cz { a, b } => ProgramGate::Cz { a, b },
            GaussianGate::Squeeze { mode, r } => ProgramGate::Squeeze { mode, r },
            GaussianGate::Rotate { mode, theta } => ProgramGate::Rotate { mode, theta },
        }
    }
}

impl fmt::Display for ProgramGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_algebra())
    }
}

/// The program as a time-ordered word for the correction algebra.
pub fn algebra_word(program: &[ProgramGate]) -> GateWord {
    GateWord::new(program.iter().map(ProgramGate::to_algebra).collect())
}
