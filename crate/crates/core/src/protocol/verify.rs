use num_complex::Complex64;
use serde::Serialize;

use super::session::bound_value;
use crate::algebra::{table_correction, Displacement, Gate, GateWord};
use crate::error::{Error, Result};
use crate::fock::{apply_ket, build_gate, FockGate, FockKet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockTableCheck {
    pub gate: String,
    /// `|⟨G ψ | C G D ψ⟩|²` for normalized states.
    pub fidelity: f64,
    /// Largest norm lost to truncation by either branch.
    pub leak: f64,
}

fn fock_gate(g: &Gate) -> Result<Option<(FockGate, Vec<usize>)>> {
    let no_bind = Default::default();
    let num = |p| bound_value(p, &no_bind);
    Ok(Some(match g {
        Gate::X { mode, s } => (FockGate::X(num(s)?), vec![*mode]),
        Gate::Z { mode, s } => (FockGate::Z(num(s)?), vec![*mode]),
        Gate::U2 { mode, t } => (FockGate::U2(num(t)?), vec![*mode]),
        Gate::U3 { mode, t } => (FockGate::U3(num(t)?), vec![*mode]),
        Gate::F { mode } => (FockGate::F, vec![*mode]),
        Gate::Cz { a, b } => (FockGate::Cz, vec![*a, *b]),
        Gate::Squeeze { mode, r } => (FockGate::Squeeze(*r), vec![*mode]),
        Gate::Rotate { mode, theta } => (FockGate::Rotate(*theta), vec![*mode]),
        Gate::Phase { .. } => return Ok(None),
    }))
}

fn run_word(word: &GateWord, ket: &FockKet) -> Result<FockKet> {
    let mut out = ket.clone();
    for g in word.gates() {
        if let Some((kind, modes)) = fock_gate(g)? {
            out = apply_ket(&build_gate(kind, ket.dim)?, &out, &modes)?;
        }
    }
    Ok(out)
}

/// Checks one row of the correction table on the number-basis backend:
/// the coherent product state `ψ` with amplitudes `alpha` is encrypted with
/// `enc`, sent through `gate` and decrypted with the tabulated correction,
/// then compared with `gate` applied to `ψ` directly. The comparison is
/// between kets, so relative phases the table leaves implicit are tested.
pub fn fock_table_check(
    gate: &Gate,
    enc: &[(f64, f64)],
    alpha: &[Complex64],
    dim: usize,
) -> Result<FockTableCheck> {
    let n = gate.modes().into_iter().max().map_or(1, |m| m + 1);
    if enc.len() != n || alpha.len() != n {
        return Err(Error::ModeMismatch(enc.len().min(alpha.len()), n));
    }
    let mut psi = FockKet::coherent(dim, alpha[0])?;
    for &a in &alpha[1..] {
        psi = psi.tensor(&FockKet::coherent(dim, a)?)?;
    }
    let enc_d: Vec<Displacement> = enc.iter().map(|&(q, p)| Displacement::new(q, p)).collect();
    let gate_word = GateWord::new(vec![gate.clone()]);
    let mut enc_word = GateWord::empty();
    for (mode, &(q, p)) in enc.iter().enumerate() {
        enc_word.push(Gate::x(mode, q));
        enc_word.push(Gate::z(mode, p));
    }
    let corr = table_correction(gate, &enc_d)?;
    let reference = run_word(&gate_word, &psi)?;
    let decrypted = run_word(&enc_word.then(&gate_word).then(&corr), &psi)?;
    let overlap = reference.amps.dotc(&decrypted.amps);
    let fidelity = overlap.norm_sqr() / (reference.norm_sqr() * decrypted.norm_sqr());
    Ok(FockTableCheck {
        gate: gate.to_string(),
        fidelity,
        leak: reference.leak().max(decrypted.leak()),
    })
}
