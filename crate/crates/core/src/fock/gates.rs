use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{c, ladder, q_eigen, CMat, CVec, FockDensity, FockKet};
use crate::error::{check_range, Error, Result};
use crate::gaussian::GaussianGate;

type KetAction<'a> = Box<dyn Fn(&CVec) -> CVec + 'a>;

/// Gates with numeric parameters, in the same conventions as the Gaussian
/// engine: `X(s) = exp(−isp)`, `Z(s) = exp(isq)`, `U_k(t) = exp(itq^k)`,
/// `F = exp(iπ/4 (q² + p²))`, `CZ = exp(i q₁q₂)`,
/// `S(r) = exp(r(a² − a†²)/2)`, `R(θ) = exp(iθ a†a)`, `D(α) = exp(αa† − α*a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FockGate {
    Identity,
    X(f64),
    Z(f64),
    U2(f64),
    U3(f64),
    F,
    Cz,
    Squeeze(f64),
    Rotate(f64),
    Displace(Complex64),
}

impl FockGate {
    pub fn n_modes(&self) -> usize {
        if matches!(self, FockGate::Cz) {
            2
        } else {
            1
        }
    }

    pub fn label(&self) -> String {
        match self {
            FockGate::Identity => "I".into(),
            FockGate::X(s) => format!("X({s})"),
            FockGate::Z(s) => format!("Z({s})"),
            FockGate::U2(t) => format!("U2({t})"),
            FockGate::U3(t) => format!("U3({t})"),
            FockGate::F => "F".into(),
            FockGate::Cz => "CZ".into(),
            FockGate::Squeeze(r) => format!("S({r})"),
            FockGate::Rotate(th) => format!("R({th})"),
            FockGate::Displace(a) => format!("D({a})"),
        }
    }

    /// The equivalent gate and the modes it acts on.
    pub fn from_gaussian(g: &GaussianGate) -> (FockGate, Vec<usize>) {
        let kind = match *g {
            GaussianGate::X { q, .. } => FockGate::X(q),
            GaussianGate::Z { p, .. } => FockGate::Z(p),
            GaussianGate::U2 { t, .. } => FockGate::U2(t),
            GaussianGate::F { .. } => FockGate::F,
            GaussianGate::Cz { .. } => FockGate::Cz,
            GaussianGate::Squeeze { r, .. } => FockGate::Squeeze(r),
            GaussianGate::Rotate { theta, .. } => FockGate::Rotate(theta),
        };
        (kind, g.modes())
    }
}

/// Parameter ranges for which a gate acting on low-lying states stays well
/// inside a given truncation. Calibrated at `N = 64` (|α| ≤ 2, |r| ≤ 1.2,
/// |T| ≤ 0.3) and scaled with the quadrature extent `√N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationBudget {
    pub max_alpha: f64,
    pub max_r: f64,
    pub max_t: f64,
}

impl TruncationBudget {
    pub fn for_dim(dim: usize) -> Self {
        let s = (dim as f64 / 64.0).sqrt();
        TruncationBudget {
            max_alpha: 2.0 * s,
            max_r: 1.2 + s.ln(),
            max_t: 0.3 * s.min(1.0),
        }
    }

    pub fn admits(&self, g: &FockGate) -> bool {
        match *g {
            FockGate::X(s) | FockGate::Z(s) => s.abs() <= self.max_alpha * SQRT_2,
            FockGate::Displace(a) => a.norm() <= self.max_alpha,
            FockGate::Squeeze(r) => r.abs() <= self.max_r,
            FockGate::U2(t) | FockGate::U3(t) => t.abs() <= self.max_t,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Dense(CMat),
    /// `exp(i q₁ q₂)` via the padded q eigenbasis.
    Cz {
        x: DVector<f64>,
        v: DMatrix<f64>,
    },
}

/// A gate on the truncated space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub n_modes: usize,
    pub label: String,
    repr: Repr,
}

fn diag_op(dim: usize, f: impl Fn(usize) -> Complex64) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(dim, |n, _| f(n)))
}

/// `V diag(g(x)) Vᵀ` cropped to `dim`.
fn q_function(
    dim: usize,
    x: &DVector<f64>,
    v: &DMatrix<f64>,
    g: impl Fn(f64) -> Complex64,
) -> CMat {
    let m = x.len();
    let vc = v.view((0, 0), (dim, m)).map(c);
    let scaled = CMat::from_fn(dim, m, |i, j| vc[(i, j)] * g(x[j]));
    scaled * vc.transpose()
}

fn rotation(dim: usize, theta: f64) -> CMat {
    diag_op(dim, |n| Complex64::from_polar(1.0, theta * n as f64))
}

pub fn build_gate(gate: FockGate, dim: usize) -> Result<OperatorMatrix> {
    build_gate_padded(gate, dim, dim)
}

/// Builds a gate on `dim` levels from generators on `dim + pad` levels.
pub fn build_gate_padded(gate: FockGate, dim: usize, pad: usize) -> Result<OperatorMatrix> {
    if dim < 4 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let budget = TruncationBudget::for_dim(dim);
    if !budget.admits(&gate) {
        log::warn!(
            "{} exceeds the truncation budget for N = {dim}",
            gate.label()
        );
    }
    let m = dim + pad;
    let dense = |mat: CMat| OperatorMatrix {
        dim,
        n_modes: 1,
        label: gate.label(),
        repr: Repr::Dense(mat),
    };
    let op = match gate {
        FockGate::Identity => dense(CMat::identity(dim, dim)),
        FockGate::Rotate(theta) => dense(rotation(dim, theta)),
        FockGate::F => dense(diag_op(dim, |n| {
            Complex64::from_polar(1.0, FRAC_PI_4 + std::f64::consts::FRAC_PI_2 * n as f64)
        })),
        FockGate::Z(s) => {
            let (x, v) = q_eigen(m);
            dense(q_function(dim, &x, &v, |y| {
                Complex64::from_polar(1.0, s * y)
            }))
        }
        FockGate::U2(t) => {
            let (x, v) = q_eigen(m);
            dense(q_function(dim, &x, &v, |y| {
                Complex64::from_polar(1.0, t * y * y)
            }))
        }
        FockGate::U3(t) => {
            let (x, v) = q_eigen(m);
            dense(q_function(dim, &x, &v, |y| {
                Complex64::from_polar(1.0, t * y * y * y)
            }))
        }
        FockGate::X(s) => dense(x_shift(dim, m, s)),
        FockGate::Displace(alpha) => {
            let phi = alpha.arg();
            let x = x_shift(dim, m, SQRT_2 * alpha.norm());
            dense(rotation(dim, phi) * x * rotation(dim, -phi))
        }
        FockGate::Squeeze(r) => {
            let a = ladder(m);
            let a2 = &a * &a;
            let ad2 = a2.adjoint();
            // S = exp(iH) with H = −i r (a² − a†²)/2
            let h = (a2 - ad2) * Complex64::new(0.0, -r / 2.0);
            let e = h.symmetric_eigen();
            let v = e.eigenvectors.view((0, 0), (dim, m)).into_owned();
            let ph = CVec::from_fn(m, |j, _| Complex64::from_polar(1.0, e.eigenvalues[j]));
            let scaled = CMat::from_fn(dim, m, |i, j| v[(i, j)] * ph[j]);
            dense(scaled * v.adjoint())
        }
        FockGate::Cz => {
            let (x, v) = q_eigen(m);
            OperatorMatrix {
                dim,
                n_modes: 2,
                label: gate.label(),
                repr: Repr::Cz { x, v },
            }
        }
    };
    Ok(op)
}

/// The multiplication operator `f(q)` on `dim` levels, built in the padded
/// q eigenbasis. `f` need not be unimodular, so this also serves for
/// measurement back-action such as Gaussian envelopes.
pub fn q_multiplier(
    dim: usize,
    pad: usize,
    f: impl Fn(f64) -> Complex64,
) -> Result<OperatorMatrix> {
    if dim < 4 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let (x, v) = q_eigen(dim + pad);
    Ok(OperatorMatrix {
        dim,
        n_modes: 1,
        label: "f(q)".into(),
        repr: Repr::Dense(q_function(dim, &x, &v, f)),
    })
}

/// `exp(−isp)`, using `p = R(π/2) q R(π/2)†`.
fn x_shift(dim: usize, m: usize, s: f64) -> CMat {
    let (x, v) = q_eigen(m);
    let r = rotation(dim, std::f64::consts::FRAC_PI_2);
    let inner = q_function(dim, &x, &v, |y| Complex64::from_polar(1.0, -s * y));
    &r * inner * r.adjoint()
}

impl OperatorMatrix {
    /// Dense matrix on the full truncated space (`N^n × N^n`).
    pub fn matrix(&self) -> CMat {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Cz { .. } => {
                let n = self.dim;
                let mut out = CMat::zeros(n * n, n * n);
                for k in 0..n * n {
                    let mut e = CVec::zeros(n * n);
                    e[k] = c(1.0);
                    let ket = FockKet {
                        dim: n,
                        n_modes: 2,
                        amps: e,
                    };
                    let col = self.act_two_mode(&ket.as_matrix());
                    out.set_column(k, &FockKet::from_matrix(&col).amps);
                }
                out
            }
        }
    }

    /// `max |(U†U − I)_{ij}|` over the lowest `levels` levels of each mode.
    pub fn unitarity_defect(&self, levels: usize) -> f64 {
        let u = self.matrix();
        let g = u.adjoint() * &u;
        let n = self.dim;
        let b = levels.min(n);
        let idx: Vec<usize> = if self.n_modes == 1 {
            (0..b).collect()
        } else {
            (0..n * n).filter(|k| k / n < b && k % n < b).collect()
        };
        let mut worst: f64 = 0.0;
        for &i in &idx {
            for &j in &idx {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c(target)).norm());
            }
        }
        worst
    }

    fn dense(&self) -> Option<&CMat> {
        match &self.repr {
            Repr::Dense(m) => Some(m),
            Repr::Cz { .. } => None,
        }
    }

    /// Applies a two-mode gate to amplitudes `Ψ[n1, n2]`.
    fn act_two_mode(&self, psi: &CMat) -> CMat {
        match &self.repr {
            Repr::Dense(u) => u * psi,
            Repr::Cz { x, v } => {
                let n = self.dim;
                let vc = v.view((0, 0), (n, x.len())).map(c);
                let mut coef = vc.transpose() * psi * &vc;
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        coef[(i, j)] *= Complex64::from_polar(1.0, x[i] * x[j]);
                    }
                }
                &vc * coef * vc.transpose()
            }
        }
    }

    /// The action on a ket, as a function usable column by column.
    fn ket_action(&self, n_modes: usize, modes: &[usize]) -> Result<KetAction<'_>> {
        let n = self.dim;
        match (self.n_modes, n_modes) {
            (1, 1) => {
                if modes.first().copied().unwrap_or(0) != 0 {
                    return Err(Error::InvalidMode {
                        mode: modes[0],
                        n_modes,
                    });
                }
                let u = self
                    .dense()
                    .ok_or(Error::ModeMismatch(self.n_modes, n_modes))?;
                Ok(Box::new(move |v: &CVec| u * v))
            }
            (1, 2) => {
                let mode = *modes
                    .first()
                    .ok_or(Error::Invalid("mode required".into()))?;
                if mode > 1 {
                    return Err(Error::InvalidMode { mode, n_modes });
                }
                let u = self
                    .dense()
                    .ok_or(Error::ModeMismatch(self.n_modes, n_modes))?;
                Ok(Box::new(move |v: &CVec| {
                    let psi = CMat::from_fn(n, n, |i, j| v[i * n + j]);
                    let out = if mode == 0 {
                        u * psi
                    } else {
                        psi * u.transpose()
                    };
                    CVec::from_fn(n * n, |k, _| out[(k / n, k % n)])
                }))
            }
            (2, 2) => {
                if modes.len() == 2 && modes[0] == modes[1] {
                    return Err(Error::Invalid("two-mode gate needs distinct modes".into()));
                }
                if modes.iter().any(|&m| m > 1) {
                    return Err(Error::InvalidMode { mode: 2, n_modes });
                }
                // CZ is symmetric in its modes, so the order is immaterial.
                Ok(Box::new(move |v: &CVec| {
                    let psi = CMat::from_fn(n, n, |i, j| v[i * n + j]);
                    let out = self.act_two_mode(&psi);
                    CVec::from_fn(n * n, |k, _| out[(k / n, k % n)])
                }))
            }
            _ => Err(Error::ModeMismatch(self.n_modes, n_modes)),
        }
    }
}

pub fn apply_ket(op: &OperatorMatrix, ket: &FockKet, modes: &[usize]) -> Result<FockKet> {
    if op.dim != ket.dim {
        return Err(Error::DimensionMismatch(op.dim, ket.dim));
    }
    let f = op.ket_action(ket.n_modes, modes)?;
    Ok(FockKet {
        amps: f(&ket.amps),
        ..ket.clone()
    })
}

/// `A ρ A†` where `f` computes `A v` for a column `v`.
fn conjugate_by(rho: &CMat, f: &dyn Fn(&CVec) -> CVec) -> CMat {
    let half = columns(rho, f);
    columns(&half.adjoint(), f)
}

fn columns(m: &CMat, f: &dyn Fn(&CVec) -> CVec) -> CMat {
    let mut out = CMat::zeros(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        out.set_column(j, &f(&m.column(j).into_owned()));
    }
    out
}

/// `ρ → U ρ U†` on the given modes. Leak grows by whatever the cropped
/// operator pushes out of the truncation.
pub fn apply(op: &OperatorMatrix, state: &FockDensity, modes: &[usize]) -> Result<FockDensity> {
    if op.dim != state.dim {
        return Err(Error::DimensionMismatch(op.dim, state.dim));
    }
    if op.n_modes == 1 && state.n_modes == 1 {
        let u = op.dense().ok_or(Error::ModeMismatch(2, 1))?;
        if modes.first().copied().unwrap_or(0) != 0 {
            return Err(Error::InvalidMode {
                mode: modes[0],
                n_modes: 1,
            });
        }
        return Ok(FockDensity {
            matrix: u * &state.matrix * u.adjoint(),
            ..state.clone()
        });
    }
    let f = op.ket_action(state.n_modes, modes)?;
    Ok(FockDensity {
        matrix: conjugate_by(&state.matrix, &*f),
        ..state.clone()
    })
}

/// Pure-loss beamsplitter with amplitude transmissivity `t` on `mode`,
/// through its Kraus operators.
pub fn apply_loss(state: &FockDensity, t: f64, mode: usize) -> Result<FockDensity> {
    check_range("t", t, 0.0, 1.0)?;
    if mode >= state.n_modes {
        return Err(Error::InvalidMode {
            mode,
            n_modes: state.n_modes,
        });
    }
    let n = state.dim;
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let refl = (1.0 - t * t).max(0.0).sqrt();
    let mut out = CMat::zeros(state.matrix.nrows(), state.matrix.ncols());
    for k in 0..n {
        let mut kraus = CMat::zeros(n, n);
        for m in k..n {
            let ln_binom = ln_fact[m] - ln_fact[k] - ln_fact[m - k];
            let amp = (0.5 * ln_binom).exp() * t.powi((m - k) as i32) * refl.powi(k as i32);
            kraus[(m - k, m)] = c(amp);
        }
        if kraus.iter().all(|z| z.norm() == 0.0) {
            continue;
        }
        if state.n_modes == 1 {
            out += &kraus * &state.matrix * kraus.adjoint();
        } else {
            let op = OperatorMatrix {
                dim: n,
                n_modes: 1,
                label: "K".into(),
                repr: Repr::Dense(kraus),
            };
            let f = op.ket_action(2, &[mode])?;
            out += conjugate_by(&state.matrix, &*f);
        }
    }
    Ok(FockDensity {
        matrix: out,
        ..state.clone()
    })
}

const EIGEN_FLOOR: f64 = 1e-14;

fn hermitian_sqrt(m: &CMat) -> (CMat, f64) {
    let e = m.clone().symmetric_eigen();
    let min = e.eigenvalues.min();
    let floor = EIGEN_FLOOR * e.eigenvalues.max().max(1.0);
    let d = CVec::from_fn(m.nrows(), |i, _| {
        let l = e.eigenvalues[i];
        c(if l > floor { l.sqrt() } else { 0.0 })
    });
    let v = &e.eigenvectors;
    (v * CMat::from_diagonal(&d) * v.adjoint(), min)
}

/// Uhlmann fidelity `Tr √(√ρ₀ ρ₁ √ρ₀)` of the trace-normalized states.
pub fn fock_fidelity(rho0: &FockDensity, rho1: &FockDensity) -> Result<f64> {
    if rho0.matrix.shape() != rho1.matrix.shape() {
        return Err(Error::DimensionMismatch(
            rho0.matrix.nrows(),
            rho1.matrix.nrows(),
        ));
    }
    for r in [rho0, rho1] {
        let tr = r.trace();
        if tr < 0.99 {
            return Err(Error::TruncationLeak {
                leak: 1.0 - tr,
                budget: 0.01,
                context: "fidelity input".into(),
            });
        }
    }
    let a = rho0.normalized().matrix;
    let b = rho1.normalized().matrix;
    let (sa, min_a) = hermitian_sqrt(&a);
    if min_a < -1e-6 {
        return Err(Error::Unphysical(min_a));
    }
    let inner = &sa * b * &sa;
    let inner = (&inner + inner.adjoint()) / c(2.0);
    let e = inner.symmetric_eigen();
    if e.eigenvalues.min() < -1e-6 {
        return Err(Error::Unphysical(e.eigenvalues.min()));
    }
    // Rank-deficient products carry eigenvalues at rounding level whose
    // square roots would otherwise bias the sum upward.
    let floor = EIGEN_FLOOR * e.eigenvalues.max().max(1.0);
    Ok(e.eigenvalues
        .iter()
        .filter(|&&l| l > floor)
        .map(|l| l.sqrt())
        .sum())
}
