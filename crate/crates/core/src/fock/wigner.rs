use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::FockDensity;
use crate::error::{Error, Result};
use crate::phase_space::{PhaseSpaceGrid, WignerGrid};

/// Largest probability the grid may miss before the evaluation is refused.
const ESCAPE_TOL: f64 = 1e-3;

/// Wigner function of a single-mode state via the Laguerre-polynomial
/// expansion `W = Σ ρ_mn W_mn`, with the `W_mn` generated by a stable
/// three-term recursion at each point.
pub fn wigner_fock(state: &FockDensity, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    if state.n_modes != 1 {
        return Err(Error::SingleModeOnly(state.n_modes));
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); state.dim];
    let values = grid
        .points()
        .map(|(q, p)| laguerre_sum(state, q, p, &mut scratch))
        .collect();
    let out = WignerGrid {
        grid: grid.clone(),
        values,
    };
    let missing = state.trace() - out.total_mass();
    if missing > ESCAPE_TOL {
        return Err(Error::GridEscape(missing));
    }
    Ok(out)
}

/// Wigner function of a single-mode state at one phase-space point.
pub fn wigner_fock_at(state: &FockDensity, q: f64, p: f64) -> Result<f64> {
    if state.n_modes != 1 {
        return Err(Error::SingleModeOnly(state.n_modes));
    }
    let mut scratch = vec![Complex64::new(0.0, 0.0); state.dim];
    Ok(laguerre_sum(state, q, p, &mut scratch))
}

fn laguerre_sum(state: &FockDensity, q: f64, p: f64, w: &mut [Complex64]) -> f64 {
    let n = state.dim;
    let rho = &state.matrix;
    let a = Complex64::new(q, p) * FRAC_1_SQRT_2;
    let a2 = 2.0 * a;
    w[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
    let mut acc = rho[(0, 0)].re * w[0].re;
    for k in 1..n {
        w[k] = a2 * w[k - 1] / (k as f64).sqrt();
        acc += 2.0 * (rho[(0, k)] * w[k]).re;
    }
    for m in 1..n {
        let sm = (m as f64).sqrt();
        let mut temp = w[m];
        w[m] = (a2.conj() * temp - sm * w[m - 1]) / sm;
        acc += (rho[(m, m)] * w[m]).re;
        for k in m + 1..n {
            let next = (a2 * w[k - 1] - sm * temp) / (k as f64).sqrt();
            temp = w[k];
            w[k] = next;
            acc += 2.0 * (rho[(m, k)] * w[k]).re;
        }
    }
    acc
}
