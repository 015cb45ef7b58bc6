use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::gates::{apply, build_gate, FockGate};
use super::{ladder, quadratures_padded, CMat, CVec};
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;

const C0: Complex64 = Complex64::new(0.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    if dim < 4 {
        return Err(Error::DimensionTooSmall(dim));
    }
    Ok(())
}

fn check_modes(n_modes: usize) -> Result<()> {
    if !(1..=2).contains(&n_modes) {
        return Err(Error::Unsupported(format!(
            "Fock states support one or two modes, not {n_modes}"
        )));
    }
    Ok(())
}

/// Pure state on one or two truncated modes. Two-mode amplitudes are
/// indexed `n1 * dim + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockKet {
    pub dim: usize,
    pub n_modes: usize,
    pub amps: CVec,
}

impl FockKet {
    pub fn new(dim: usize, n_modes: usize, amps: CVec) -> Result<Self> {
        check_dim(dim)?;
        check_modes(n_modes)?;
        if amps.len() != dim.pow(n_modes as u32) {
            return Err(Error::DimensionMismatch(
                amps.len(),
                dim.pow(n_modes as u32),
            ));
        }
        Ok(FockKet { dim, n_modes, amps })
    }

    pub fn number(dim: usize, n: usize) -> Result<Self> {
        check_dim(dim)?;
        if n >= dim {
            return Err(Error::OutOfRange {
                name: "n",
                value: n as f64,
                min: 0.0,
                max: (dim - 1) as f64,
            });
        }
        let mut amps = CVec::zeros(dim);
        amps[n] = Complex64::new(1.0, 0.0);
        Ok(FockKet {
            dim,
            n_modes: 1,
            amps,
        })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::number(dim, 0)
    }

    /// Coherent state `D(α)|0⟩` from its number-basis amplitudes; the
    /// population beyond the truncation shows up as leak.
    pub fn coherent(dim: usize, alpha: Complex64) -> Result<Self> {
        check_dim(dim)?;
        let mut amps = CVec::zeros(dim);
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..dim {
            amps[n] = c;
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        Ok(FockKet {
            dim,
            n_modes: 1,
            amps,
        })
    }

    /// Squeezed vacuum `S(r)|0⟩` with `S(r) = exp(r(a² − a†²)/2)`, which has
    /// q-variance `e^{-2r}/2`.
    pub fn squeezed_vacuum(dim: usize, r: f64) -> Result<Self> {
        check_dim(dim)?;
        let mut amps = CVec::zeros(dim);
        let th = -r.tanh();
        let mut c = 1.0 / r.cosh().sqrt();
        let mut n = 0usize;
        while 2 * n < dim {
            amps[2 * n] = Complex64::new(c, 0.0);
            // ratio of √((2n)!)/(2ⁿ n!) between consecutive n
            c *= th * ((2 * n + 1) as f64 * (2 * n + 2) as f64).sqrt() / (2.0 * (n + 1) as f64);
            n += 1;
        }
        Ok(FockKet {
            dim,
            n_modes: 1,
            amps,
        })
    }

    pub fn tensor(&self, other: &FockKet) -> Result<FockKet> {
        if self.n_modes != 1 || other.n_modes != 1 {
            return Err(Error::SingleModeOnly(self.n_modes.max(other.n_modes)));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        let n = self.dim;
        let mut amps = CVec::zeros(n * n);
        for i in 0..n {
            for j in 0..n {
                amps[i * n + j] = self.amps[i] * other.amps[j];
            }
        }
        Ok(FockKet {
            dim: n,
            n_modes: 2,
            amps,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    /// Probability missing from the truncated space.
    pub fn leak(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn normalized(&self) -> FockKet {
        let n = self.norm_sqr().sqrt();
        FockKet {
            amps: &self.amps / Complex64::new(n, 0.0),
            ..self.clone()
        }
    }

    /// Two-mode amplitudes as a `dim × dim` matrix `Ψ[n1, n2]`.
    pub fn as_matrix(&self) -> CMat {
        let n = self.dim;
        CMat::from_fn(n, n, |i, j| self.amps[i * n + j])
    }

    pub fn from_matrix(m: &CMat) -> FockKet {
        let n = m.nrows();
        let amps = CVec::from_fn(n * n, |k, _| m[(k / n, k % n)]);
        FockKet {
            dim: n,
            n_modes: 2,
            amps,
        }
    }

    pub fn to_density(&self) -> FockDensity {
        FockDensity {
            dim: self.dim,
            n_modes: self.n_modes,
            matrix: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Density matrix on one or two truncated modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensity {
    pub dim: usize,
    pub n_modes: usize,
    pub matrix: CMat,
}

impl FockDensity {
    pub fn new(dim: usize, n_modes: usize, matrix: CMat) -> Result<Self> {
        check_dim(dim)?;
        check_modes(n_modes)?;
        let size = dim.pow(n_modes as u32);
        if matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::DimensionMismatch(matrix.nrows(), size));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > 1e-10 {
            return Err(Error::Invalid(format!(
                "density matrix not Hermitian ({herm:.2e})"
            )));
        }
        Ok(FockDensity {
            dim,
            n_modes,
            matrix,
        })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Ok(FockKet::vacuum(dim)?.to_density())
    }

    /// Thermal state with mean photon number `nbar`.
    pub fn thermal(dim: usize, nbar: f64) -> Result<Self> {
        check_dim(dim)?;
        if nbar < 0.0 {
            return Err(Error::NotPositive(nbar));
        }
        let x = nbar / (1.0 + nbar);
        let diag = DVector::from_fn(dim, |n, _| {
            Complex64::new(x.powi(n as i32) / (1.0 + nbar), 0.0)
        });
        Ok(FockDensity {
            dim,
            n_modes: 1,
            matrix: CMat::from_diagonal(&diag),
        })
    }

    /// Convex combination `Σ wᵢ ρᵢ`; weights need not be normalized.
    pub fn mixture(parts: &[(f64, FockDensity)]) -> Result<Self> {
        let first = &parts
            .first()
            .ok_or(Error::Invalid("empty mixture".into()))?
            .1;
        let mut m = CMat::zeros(first.matrix.nrows(), first.matrix.ncols());
        for (w, s) in parts {
            if s.matrix.shape() != first.matrix.shape() {
                return Err(Error::DimensionMismatch(
                    s.matrix.nrows(),
                    first.matrix.nrows(),
                ));
            }
            m += &s.matrix * Complex64::new(*w, 0.0);
        }
        Ok(FockDensity {
            dim: first.dim,
            n_modes: first.n_modes,
            matrix: m,
        })
    }

    /// Number-basis image of a Gaussian state whose modes are uncorrelated,
    /// built as a displaced, rotated, squeezed thermal state.
    pub fn from_gaussian(state: &GaussianState, dim: usize) -> Result<Self> {
        match state.n_modes() {
            1 => single_mode_from_gaussian(state, dim),
            2 => {
                let cross = state.cov.view((0, 2), (2, 2)).amax();
                if cross > 1e-12 {
                    return Err(Error::Unsupported(
                        "correlated two-mode Gaussian input".into(),
                    ));
                }
                let a = single_mode_from_gaussian(&state.reduce(0)?, dim)?;
                let b = single_mode_from_gaussian(&state.reduce(1)?, dim)?;
                a.tensor(&b)
            }
            n => Err(Error::Unsupported(format!("{n}-mode Gaussian input"))),
        }
    }

    pub fn tensor(&self, other: &FockDensity) -> Result<FockDensity> {
        if self.n_modes != 1 || other.n_modes != 1 {
            return Err(Error::SingleModeOnly(self.n_modes.max(other.n_modes)));
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(FockDensity {
            dim: self.dim,
            n_modes: 2,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Probability lost to truncation, `1 − Tr ρ`.
    pub fn leak(&self) -> f64 {
        (1.0 - self.trace()).max(0.0)
    }

    pub fn check_leak(&self, budget: f64, context: &str) -> Result<()> {
        let leak = self.leak();
        if leak > budget {
            return Err(Error::TruncationLeak {
                leak,
                budget,
                context: context.to_string(),
            });
        }
        Ok(())
    }

    pub fn normalized(&self) -> FockDensity {
        let t = self.trace();
        FockDensity {
            matrix: &self.matrix / Complex64::new(t, 0.0),
            ..self.clone()
        }
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.clone().symmetric_eigen().eigenvalues.min()
    }

    /// Reduced state of `mode` for a two-mode state; a clone for one mode.
    pub fn reduce(&self, mode: usize) -> Result<FockDensity> {
        if mode >= self.n_modes {
            return Err(Error::InvalidMode {
                mode,
                n_modes: self.n_modes,
            });
        }
        if self.n_modes == 1 {
            return Ok(self.clone());
        }
        let n = self.dim;
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C0;
                for k in 0..n {
                    acc += if mode == 0 {
                        self.matrix[(i * n + k, j * n + k)]
                    } else {
                        self.matrix[(k * n + i, k * n + j)]
                    };
                }
                out[(i, j)] = acc;
            }
        }
        Ok(FockDensity {
            dim: n,
            n_modes: 1,
            matrix: out,
        })
    }

    /// `Tr(ρ A)` for an operator on the full space.
    pub fn expect(&self, op: &CMat) -> Complex64 {
        (&self.matrix * op).trace()
    }

    /// Mean `(⟨q⟩, ⟨p⟩)` per mode and the symmetrized covariance matrix,
    /// ordered `(q1, p1, q2, p2)`, normalized by the trace.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.dim;
        let (q, p, qq, pp, qp) = quadratures_padded(n);
        let id = CMat::identity(n, n);
        let embed = |a: &CMat, mode: usize| -> CMat {
            match (self.n_modes, mode) {
                (1, _) => a.clone(),
                (_, 0) => a.kronecker(&id),
                _ => id.kronecker(a),
            }
        };
        let tr = self.trace();
        let m = self.n_modes;
        let mut ops: Vec<CMat> = Vec::new();
        for k in 0..m {
            ops.push(embed(&q, k));
            ops.push(embed(&p, k));
        }
        let mean = DVector::from_fn(2 * m, |i, _| self.expect(&ops[i]).re / tr);
        let mut cov = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..2 * m {
            for j in i..2 * m {
                let second = if i / 2 == j / 2 {
                    // same mode: use squared quadratures from the padded space
                    let local = match (i % 2, j % 2) {
                        (0, 0) => qq.clone(),
                        (1, 1) => pp.clone(),
                        _ => qp.clone(),
                    };
                    self.expect(&embed(&local, i / 2)).re / tr
                } else {
                    let prod = &ops[i] * &ops[j];
                    self.expect(&prod).re / tr
                };
                cov[(i, j)] = second - mean[i] * mean[j];
                cov[(j, i)] = cov[(i, j)];
            }
        }
        (mean, cov)
    }

    /// Mean photon number of `mode`.
    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let r = self.reduce(mode)?;
        let a = ladder(self.dim);
        Ok(r.expect(&(a.adjoint() * &a)).re / r.trace())
    }
}

fn single_mode_from_gaussian(state: &GaussianState, dim: usize) -> Result<FockDensity> {
    let cov = state.mode_cov(0);
    let nu = cov.determinant().sqrt();
    if !nu.is_finite() || nu < 0.5 - 1e-10 {
        return Err(Error::Unphysical(nu - 0.5));
    }
    let e = (cov / nu).symmetric_eigen();
    let k = e.eigenvalues.imin();
    let r = -0.5 * e.eigenvalues[k].ln();
    let v = e.eigenvectors.column(k);
    let theta = v[1].atan2(v[0]);
    let (q, p) = state.mode_mean(0);
    let mut rho = FockDensity::thermal(dim, (nu - 0.5).max(0.0))?;
    for g in [
        FockGate::Squeeze(r),
        FockGate::Rotate(theta),
        FockGate::X(q),
        FockGate::Z(p),
    ] {
        rho = apply(&build_gate(g, dim)?, &rho, &[0])?;
    }
    Ok(rho)
}
