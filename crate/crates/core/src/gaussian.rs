//! Exact Gaussian phase-space engine.
//!
//! States are stored as a mean vector and covariance matrix over the
//! quadratures ordered `(q1, p1, q2, p2, ...)`, in units where `[q, p] = i`
//! and the vacuum has quadrature variance 1/2. Shot-noise units (vacuum
//! variance 1) only appear at reporting boundaries through [`Convention`].
//!
//! Gates act through their Heisenberg affine map `x -> S x + d`: the mean
//! becomes `S m + d` and the covariance `S V Sᵀ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::phase_space::{PhaseSpaceGrid, WignerGrid};

/// Quadrature variance of the vacuum in internal units.
pub const VACUUM_VARIANCE: f64 = 0.5;

pub const SYMPLECTIC_TOL: f64 = 1e-12;
pub const PHYSICALITY_FLOOR: f64 = -1e-10;

/// Unit convention: internal `[q, p] = i` versus shot-noise units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convention;

impl Convention {
    /// Variance multiplier taking internal units to SNU.
    pub const SNU_FACTOR: f64 = 2.0;

    pub fn variance_to_snu(v: f64) -> f64 {
        v * Self::SNU_FACTOR
    }

    pub fn variance_from_snu(v_snu: f64) -> f64 {
        v_snu / Self::SNU_FACTOR
    }
}

/// Per-quadrature shift variance for a displacement whose complex amplitude
/// has variance `delta_sq_alpha` in each of its real and imaginary parts.
pub fn alpha_plane_to_quadrature(delta_sq_alpha: f64) -> f64 {
    2.0 * delta_sq_alpha
}

/// The standard symplectic form for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

pub fn is_symplectic(s: &DMatrix<f64>, tol: f64) -> bool {
    if !s.is_square() || !s.nrows().is_multiple_of(2) {
        return false;
    }
    let omega = symplectic_form(s.nrows() / 2);
    (s * &omega * s.transpose() - &omega).amax() <= tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state and checks symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if !mean.len().is_multiple_of(2) || mean.is_empty() {
            return Err(Error::Invalid(format!(
                "mean must have even positive length (q1, p1, ...), got {}",
                mean.len()
            )));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch(mean.len(), cov.nrows()));
        }
        let state = Self { mean, cov };
        state.validate()?;
        Ok(state)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes >= 1, "a state needs at least one mode");
        Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * VACUUM_VARIANCE,
        }
    }

    /// Coherent state `|alpha>` with `a = (q + ip)/√2`.
    pub fn coherent(alpha: Complex64) -> Self {
        let mut s = Self::vacuum(1);
        s.mean[0] = std::f64::consts::SQRT_2 * alpha.re;
        s.mean[1] = std::f64::consts::SQRT_2 * alpha.im;
        s
    }

    /// `S(r)|0>`: q variance `e^{-2r}/2`, p variance `e^{2r}/2`.
    pub fn squeezed_vacuum(r: f64) -> Self {
        let mut s = Self::vacuum(1);
        s.cov[(0, 0)] = 0.5 * (-2.0 * r).exp();
        s.cov[(1, 1)] = 0.5 * (2.0 * r).exp();
        s
    }

    pub fn thermal(nbar: f64) -> Self {
        let mut s = Self::vacuum(1);
        s.cov *= 1.0 + 2.0 * nbar;
        s
    }

    /// Two-mode squeezed vacuum on modes (A, B) with squeezing `r`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let c = 0.5 * (2.0 * r).cosh();
        let s = 0.5 * (2.0 * r).sinh();
        let mut state = Self::vacuum(2);
        for k in 0..4 {
            state.cov[(k, k)] = c;
        }
        state.cov[(0, 2)] = s;
        state.cov[(2, 0)] = s;
        state.cov[(1, 3)] = -s;
        state.cov[(3, 1)] = -s;
        state
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes() {
            Ok(())
        } else {
            Err(Error::InvalidMode {
                mode,
                n_modes: self.n_modes(),
            })
        }
    }

    pub fn mode_mean(&self, mode: usize) -> (f64, f64) {
        (self.mean[2 * mode], self.mean[2 * mode + 1])
    }

    pub fn mode_cov(&self, mode: usize) -> Matrix2<f64> {
        let i = 2 * mode;
        Matrix2::new(
            self.cov[(i, i)],
            self.cov[(i, i + 1)],
            self.cov[(i + 1, i)],
            self.cov[(i + 1, i + 1)],
        )
    }

    /// Reduced state of a single mode.
    pub fn reduce(&self, mode: usize) -> Result<GaussianState> {
        self.check_mode(mode)?;
        let (q, p) = self.mode_mean(mode);
        let c = self.mode_cov(mode);
        Ok(GaussianState {
            mean: DVector::from_vec(vec![q, p]),
            cov: DMatrix::from_row_slice(2, 2, &[c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]]),
        })
    }

    /// Tensor product `self ⊗ other`.
    pub fn append(&self, other: &GaussianState) -> GaussianState {
        let n = self.mean.len();
        let m = other.mean.len();
        let mut mean = DVector::zeros(n + m);
        mean.rows_mut(0, n).copy_from(&self.mean);
        mean.rows_mut(n, m).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov.view_mut((n, n), (m, m)).copy_from(&other.cov);
        GaussianState { mean, cov }
    }

    /// Symmetry (1e-12 relative) and `V + iΩ/2 ≥ 0` (eigenvalue floor −1e-10).
    pub fn validate(&self) -> Result<()> {
        let scale = self.cov.amax().max(1.0);
        if (&self.cov - self.cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Invalid("covariance matrix is not symmetric".into()));
        }
        let min = self.min_uncertainty_eigenvalue();
        if min < PHYSICALITY_FLOOR * scale {
            return Err(Error::Unphysical(min));
        }
        Ok(())
    }

    pub fn min_uncertainty_eigenvalue(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        let herm = DMatrix::from_fn(self.cov.nrows(), self.cov.ncols(), |i, j| {
            Complex64::new(self.cov[(i, j)], 0.5 * omega[(i, j)])
        });
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Applies `x -> S x + d` to the whole state.
    pub fn apply_affine(&self, s: &DMatrix<f64>, d: &DVector<f64>) -> Result<GaussianState> {
        if s.nrows() != self.mean.len() || d.len() != self.mean.len() {
            return Err(Error::DimensionMismatch(self.mean.len(), s.nrows()));
        }
        Ok(GaussianState {
            mean: s * &self.mean + d,
            cov: s * &self.cov * s.transpose(),
        })
    }

    /// Moments in shot-noise units (variances doubled, means scaled by √2).
    pub fn to_snu(&self) -> (DVector<f64>, DMatrix<f64>) {
        (
            &self.mean * Convention::SNU_FACTOR.sqrt(),
            &self.cov * Convention::SNU_FACTOR,
        )
    }

    pub fn max_moment_distance(&self, other: &GaussianState) -> f64 {
        (&self.mean - &other.mean)
            .amax()
            .max((&self.cov - &other.cov).amax())
    }
}

/// Gates with a Gaussian (affine symplectic) Heisenberg action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GaussianGate {
    /// `X(Q) = exp(-iQp)`: q -> q + Q.
    X { mode: usize, q: f64 },
    /// `Z(P) = exp(iPq)`: p -> p + P.
    Z { mode: usize, p: f64 },
    /// `U2(T) = exp(iTq²)`: p -> p + 2Tq.
    U2 { mode: usize, t: f64 },
    /// `F = exp(iπ/4 (q² + p²))`: (q, p) -> (−p, q).
    F { mode: usize },
    /// `CZ = exp(i q_a q_b)`: p_a -> p_a + q_b, p_b -> p_b + q_a.
    Cz { a: usize, b: usize },
    /// `S(r) = exp(r(a² − a†²)/2)`: (q, p) -> (e^{−r} q, e^{r} p).
    Squeeze { mode: usize, r: f64 },
    /// `R(θ) = exp(iθ a†a)`.
    Rotate { mode: usize, theta: f64 },
}

impl GaussianGate {
    pub fn modes(&self) -> Vec<usize> {
        match *self {
            GaussianGate::X { mode, .. }
            | GaussianGate::Z { mode, .. }
            | GaussianGate::U2 { mode, .. }
            | GaussianGate::F { mode }
            | GaussianGate::Squeeze { mode, .. }
            | GaussianGate::Rotate { mode, .. } => vec![mode],
            GaussianGate::Cz { a, b } => vec![a, b],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GaussianGate::X { .. } => "X",
            GaussianGate::Z { .. } => "Z",
            GaussianGate::U2 { .. } => "U2",
            GaussianGate::F { .. } => "F",
            GaussianGate::Cz { .. } => "CZ",
            GaussianGate::Squeeze { .. } => "Squeeze",
            GaussianGate::Rotate { .. } => "Rotate",
        }
    }

    /// The inverse gate.
    pub fn inverse(&self) -> Vec<GaussianGate> {
        match *self {
            GaussianGate::X { mode, q } => vec![GaussianGate::X { mode, q: -q }],
            GaussianGate::Z { mode, p } => vec![GaussianGate::Z { mode, p: -p }],
            GaussianGate::U2 { mode, t } => vec![GaussianGate::U2 { mode, t: -t }],
            GaussianGate::F { mode } => vec![GaussianGate::Rotate {
                mode,
                theta: -PI / 2.0,
            }],
            GaussianGate::Cz { a, b } => vec![
                GaussianGate::F { mode: a },
                GaussianGate::F { mode: a },
                GaussianGate::Cz { a, b },
                GaussianGate::F { mode: a },
                GaussianGate::F { mode: a },
            ],
            GaussianGate::Squeeze { mode, r } => vec![GaussianGate::Squeeze { mode, r: -r }],
            GaussianGate::Rotate { mode, theta } => vec![GaussianGate::Rotate {
                mode,
                theta: -theta,
            }],
        }
    }

    fn check(&self, n_modes: usize) -> Result<()> {
        for m in self.modes() {
            if m >= n_modes {
                return Err(Error::InvalidMode { mode: m, n_modes });
            }
        }
        if let GaussianGate::Cz { a, b } = *self {
            if a == b {
                return Err(Error::Invalid("CZ needs two distinct modes".into()));
            }
        }
        Ok(())
    }

    /// Heisenberg affine action `(S, d)` on an `n_modes`-mode phase space.
    pub fn affine(&self, n_modes: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        self.check(n_modes)?;
        let dim = 2 * n_modes;
        let mut s = DMatrix::identity(dim, dim);
        let mut d = DVector::zeros(dim);
        match *self {
            GaussianGate::X { mode, q } => d[2 * mode] = q,
            GaussianGate::Z { mode, p } => d[2 * mode + 1] = p,
            GaussianGate::U2 { mode, t } => s[(2 * mode + 1, 2 * mode)] = 2.0 * t,
            GaussianGate::F { mode } => {
                let (i, j) = (2 * mode, 2 * mode + 1);
                s[(i, i)] = 0.0;
                s[(j, j)] = 0.0;
                s[(i, j)] = -1.0;
                s[(j, i)] = 1.0;
            }
            GaussianGate::Cz { a, b } => {
                s[(2 * a + 1, 2 * b)] = 1.0;
                s[(2 * b + 1, 2 * a)] = 1.0;
            }
            GaussianGate::Squeeze { mode, r } => {
                s[(2 * mode, 2 * mode)] = (-r).exp();
                s[(2 * mode + 1, 2 * mode + 1)] = r.exp();
            }
            GaussianGate::Rotate { mode, theta } => {
                let (i, j) = (2 * mode, 2 * mode + 1);
                let (sin, cos) = theta.sin_cos();
                s[(i, i)] = cos;
                s[(i, j)] = -sin;
                s[(j, i)] = sin;
                s[(j, j)] = cos;
            }
        }
        Ok((s, d))
    }
}

/// Composite affine action of a gate sequence applied in order.
pub fn program_affine(
    program: &[GaussianGate],
    n_modes: usize,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let dim = 2 * n_modes;
    let mut s_tot = DMatrix::identity(dim, dim);
    let mut d_tot = DVector::zeros(dim);
    for gate in program {
        let (s, d) = gate.affine(n_modes)?;
        d_tot = &s * d_tot + d;
        s_tot = s * s_tot;
    }
    Ok((s_tot, d_tot))
}

pub fn apply_gate(state: &GaussianState, gate: &GaussianGate) -> Result<GaussianState> {
    let (s, d) = gate.affine(state.n_modes())?;
    state.apply_affine(&s, &d)
}

pub fn apply_program(state: &GaussianState, program: &[GaussianGate]) -> Result<GaussianState> {
    program
        .iter()
        .try_fold(state.clone(), |s, g| apply_gate(&s, g))
}

/// Pure-loss beamsplitter of amplitude transmission `t` on one mode.
pub fn apply_loss(state: &GaussianState, t: f64, mode: usize) -> Result<GaussianState> {
    apply_noisy_loss(state, t, 0.0, mode)
}

/// Loss with an additional `excess_noise` per-quadrature variance injected
/// after the beamsplitter. `excess_noise = 0` is the pure-loss channel.
pub fn apply_noisy_loss(
    state: &GaussianState,
    t: f64,
    excess_noise: f64,
    mode: usize,
) -> Result<GaussianState> {
    check_range("t", t, 0.0, 1.0)?;
    check_range("excess_noise", excess_noise, 0.0, f64::MAX)?;
    state.check_mode(mode)?;
    let mut out = state.clone();
    let (i, j) = (2 * mode, 2 * mode + 1);
    for k in [i, j] {
        out.mean[k] *= t;
        for c in 0..out.cov.ncols() {
            out.cov[(k, c)] *= t;
        }
        for r in 0..out.cov.nrows() {
            out.cov[(r, k)] *= t;
        }
        out.cov[(k, k)] += (1.0 - t * t) * VACUUM_VARIANCE + excess_noise;
    }
    Ok(out)
}

/// Adds classical Gaussian noise of per-quadrature variance
/// `v_enc_quadrature` to one mode: the ensemble view of a random displacement.
pub fn encrypt_ensemble(
    state: &GaussianState,
    v_enc_quadrature: f64,
    mode: usize,
) -> Result<GaussianState> {
    check_range("v_enc_quadrature", v_enc_quadrature, 0.0, f64::MAX)?;
    state.check_mode(mode)?;
    let mut out = state.clone();
    out.cov[(2 * mode, 2 * mode)] += v_enc_quadrature;
    out.cov[(2 * mode + 1, 2 * mode + 1)] += v_enc_quadrature;
    Ok(out)
}

/// `Tr ρ² = 1 / (2ⁿ √det V)`.
pub fn purity(state: &GaussianState) -> Result<f64> {
    let det = state.cov.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::SingularCovariance(det));
    }
    Ok(1.0 / (2f64.powi(state.n_modes() as i32) * det.sqrt()))
}

/// Single-mode Gaussian fidelity in the squared-overlap convention,
/// `(Tr √(√ρ₀ ρ₁ √ρ₀))²`, which reduces to `|<α|β>|² = e^{−|α−β|²}` for
/// coherent states.
pub fn gaussian_fidelity(s1: &GaussianState, s2: &GaussianState) -> Result<f64> {
    if s1.n_modes() != s2.n_modes() {
        return Err(Error::ModeMismatch(s1.n_modes(), s2.n_modes()));
    }
    if s1.n_modes() != 1 {
        return Err(Error::SingleModeOnly(s1.n_modes()));
    }
    let sum = &s1.cov + &s2.cov;
    let big_delta = sum.determinant();
    if big_delta <= 0.0 {
        return Err(Error::SingularCovariance(big_delta));
    }
    let small_delta =
        (4.0 * (s1.cov.determinant() - 0.25) * (s2.cov.determinant() - 0.25)).max(0.0);
    let u = &s1.mean - &s2.mean;
    let inv = sum
        .try_inverse()
        .ok_or(Error::SingularCovariance(big_delta))?;
    let exponent = -0.5 * (u.transpose() * inv * &u)[(0, 0)];
    let f = exponent.exp() / ((big_delta + small_delta).sqrt() - small_delta.sqrt());
    Ok(f.min(1.0))
}

/// Uhlmann fidelity `Tr √(√ρ₀ ρ₁ √ρ₀)`, the square root of [`gaussian_fidelity`].
pub fn gaussian_fidelity_root(s1: &GaussianState, s2: &GaussianState) -> Result<f64> {
    gaussian_fidelity(s1, s2).map(f64::sqrt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Q,
    P,
}

/// One homodyne outcome of `quadrature` on `mode`, drawn from the state's
/// Gaussian marginal.
pub fn sample_homodyne<R: Rng>(
    state: &GaussianState,
    mode: usize,
    quadrature: Quadrature,
    rng: &mut R,
) -> Result<f64> {
    state.check_mode(mode)?;
    let k = 2 * mode + usize::from(quadrature == Quadrature::P);
    let var = state.cov[(k, k)];
    let normal = Normal::new(state.mean[k], var.max(0.0).sqrt())
        .map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(normal.sample(rng))
}

pub fn wigner_gaussian_at(state: &GaussianState, q: f64, p: f64) -> Result<f64> {
    let grid = PhaseSpaceGrid {
        q: vec![q],
        p: vec![p],
    };
    Ok(wigner_gaussian(state, &grid)?.values[0])
}

/// `W(x) = exp(−½ δᵀ V⁻¹ δ) / (2π √det V)` sampled on a grid.
pub fn wigner_gaussian(state: &GaussianState, grid: &PhaseSpaceGrid) -> Result<WignerGrid> {
    if state.n_modes() != 1 {
        return Err(Error::SingleModeOnly(state.n_modes()));
    }
    let det = state.cov.determinant();
    if det <= 0.0 {
        return Err(Error::SingularCovariance(det));
    }
    let inv = state
        .cov
        .clone()
        .try_inverse()
        .ok_or(Error::SingularCovariance(det))?;
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let (mq, mp) = state.mode_mean(0);
    let values = grid
        .points()
        .map(|(q, p)| {
            let dq = q - mq;
            let dp = p - mp;
            let quad = inv[(0, 0)] * dq * dq + 2.0 * inv[(0, 1)] * dq * dp + inv[(1, 1)] * dp * dp;
            norm * (-0.5 * quad).exp()
        })
        .collect();
    Ok(WignerGrid {
        grid: grid.clone(),
        values,
    })
}
