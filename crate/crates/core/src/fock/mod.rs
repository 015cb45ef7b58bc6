//! Truncated number-basis simulator.
//!
//! States live in the span of `|0⟩..|N−1⟩` per mode (one or two modes).
//! Gates are built in a padded space of dimension `N + pad` and cropped,
//! so matrix elements between low-lying levels are exact up to the
//! population a gate pushes beyond the padding. Probability that leaves
//! the truncated space is never renormalized away; it is reported as leak.

mod gates;
mod homodyne;
mod state;
mod wigner;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use gates::{
    apply, apply_ket, apply_loss, build_gate, build_gate_padded, fock_fidelity, q_multiplier,
    FockGate, OperatorMatrix, TruncationBudget,
};
pub use homodyne::{
    homodyne_p, homodyne_p_ket, momentum_eigenstate_approx, p_marginal, q_marginal,
    sample_p_outcomes, sample_q_outcomes, HomodyneGrid, HomodyneOutcome,
};
pub use state::{FockDensity, FockKet};
pub use wigner::{wigner_fock, wigner_fock_at};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const DEFAULT_DIM: usize = 64;

/// Leak tolerated at the end of a simulated circuit.
pub const LEAK_BUDGET: f64 = 1e-4;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Annihilation operator on `dim` levels.
pub fn ladder(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// Truncated position operator as a real symmetric matrix.
pub(crate) fn q_real(dim: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        let v = (n as f64 / 2.0).sqrt();
        q[(n - 1, n)] = v;
        q[(n, n - 1)] = v;
    }
    q
}

/// Eigenvalues and orthonormal eigenvectors of the truncated `q` on `dim`
/// levels (Gauss–Hermite nodes and their discrete wavefunctions).
pub(crate) fn q_eigen(dim: usize) -> (DVector<f64>, DMatrix<f64>) {
    let e = q_real(dim).symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

/// `q`, `p` on `dim` levels plus `q²`, `p²` and `(qp + pq)/2` cropped from a
/// slightly larger space so their low-level elements are exact.
pub(crate) fn quadratures_padded(dim: usize) -> (CMat, CMat, CMat, CMat, CMat) {
    let m = dim + 2;
    let a = ladder(m);
    let ad = a.adjoint();
    let s2 = std::f64::consts::SQRT_2;
    let q = (&a + &ad) / c(s2);
    let p = (&ad - &a) * Complex64::new(0.0, 1.0 / s2);
    let crop = |x: &CMat| x.view((0, 0), (dim, dim)).into_owned();
    let qq = &q * &q;
    let pp = &p * &p;
    let qp = (&q * &p + &p * &q) / c(2.0);
    (crop(&q), crop(&p), crop(&qq), crop(&pp), crop(&qp))
}

/// Normalized Hermite functions `ψ_n(x)` for `n < dim` at each point;
/// rows are points, columns are levels.
pub(crate) fn hermite_functions(dim: usize, xs: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(xs.len(), dim);
    let norm = std::f64::consts::PI.powf(-0.25);
    for (i, &x) in xs.iter().enumerate() {
        let mut prev = 0.0;
        let mut cur = norm * (-x * x / 2.0).exp();
        out[(i, 0)] = cur;
        for n in 1..dim {
            let next =
                (2.0 / n as f64).sqrt() * x * cur - ((n - 1) as f64 / n as f64).sqrt() * prev;
            prev = cur;
            cur = next;
            out[(i, n)] = cur;
        }
    }
    out
}
