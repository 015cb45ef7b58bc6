use num_complex::Complex64;
use rand::Rng;

use super::{hermite_functions, CMat, CVec, FockDensity, FockKet, LEAK_BUDGET};
use crate::error::{Error, Result};
use crate::phase_space::linspace;

/// Quadrature grid on which homodyne marginals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneGrid {
    pub half_width: f64,
    pub points: usize,
}

impl Default for HomodyneGrid {
    fn default() -> Self {
        HomodyneGrid {
            half_width: 10.0,
            points: 2001,
        }
    }
}

/// Minimum fraction of the state's trace the grid must capture.
const GRID_MASS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneOutcome {
    pub m: f64,
    /// Post-measurement state of the unmeasured mode, if any.
    pub conditional: Option<FockDensity>,
}

/// Momentum-space wavefunctions `⟨p|n⟩ = (−i)^n ψ_n(p)` on the grid.
fn momentum_basis(dim: usize, ps: &[f64]) -> CMat {
    let h = hermite_functions(dim, ps);
    let phase = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    CMat::from_fn(ps.len(), dim, |i, n| phase[n % 4] * h[(i, n)])
}

fn momentum_row(dim: usize, p: f64) -> CVec {
    momentum_basis(dim, &[p]).row(0).transpose()
}

/// Marginal density of `p` for a single-mode state on the grid.
pub fn p_marginal(state: &FockDensity, grid: HomodyneGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if state.n_modes != 1 {
        return Err(Error::SingleModeOnly(state.n_modes));
    }
    let ps = linspace(-grid.half_width, grid.half_width, grid.points);
    let phi = momentum_basis(state.dim, &ps);
    let a = &phi * &state.matrix;
    let dens = (0..ps.len())
        .map(|i| (a.row(i) * phi.row(i).adjoint())[(0, 0)].re.max(0.0))
        .collect();
    Ok((ps, dens))
}

/// Marginal density of `q` for a single-mode state on the grid.
pub fn q_marginal(state: &FockDensity, grid: HomodyneGrid) -> Result<(Vec<f64>, Vec<f64>)> {
    if state.n_modes != 1 {
        return Err(Error::SingleModeOnly(state.n_modes));
    }
    let qs = linspace(-grid.half_width, grid.half_width, grid.points);
    let h = hermite_functions(state.dim, &qs).map(|x| Complex64::new(x, 0.0));
    let a = &h * &state.matrix;
    let dens = (0..qs.len())
        .map(|i| (a.row(i) * h.row(i).transpose())[(0, 0)].re.max(0.0))
        .collect();
    Ok((qs, dens))
}

/// Draws `shots` independent q-homodyne outcomes on `mode`.
pub fn sample_q_outcomes<R: Rng>(
    state: &FockDensity,
    mode: usize,
    shots: usize,
    rng: &mut R,
    grid: HomodyneGrid,
) -> Result<Vec<f64>> {
    let reduced = state.reduce(mode)?;
    let (qs, dens) = q_marginal(&reduced, grid)?;
    let cdf = TabulatedCdf::new(&qs, &dens, reduced.trace())?;
    Ok((0..shots).map(|_| cdf.draw(rng)).collect())
}

/// Cumulative distribution of a density tabulated on an increasing grid.
struct TabulatedCdf<'a> {
    xs: &'a [f64],
    cdf: Vec<f64>,
}

impl<'a> TabulatedCdf<'a> {
    fn new(xs: &'a [f64], dens: &[f64], expected_mass: f64) -> Result<Self> {
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (dens[i] + dens[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = cdf[xs.len() - 1];
        if total < GRID_MASS * expected_mass {
            return Err(Error::GridTooCoarse(total / expected_mass));
        }
        Ok(TabulatedCdf { xs, cdf })
    }

    /// Inverse-CDF draw, linear within each grid cell.
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let (xs, cdf) = (self.xs, &self.cdf);
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        let i = cdf.partition_point(|&v| v <= u).clamp(1, xs.len() - 1);
        let width = cdf[i] - cdf[i - 1];
        let frac = if width > 0.0 {
            (u - cdf[i - 1]) / width
        } else {
            0.5
        };
        xs[i - 1] + frac * (xs[i] - xs[i - 1])
    }
}

/// Draws `shots` independent p-homodyne outcomes on `mode` without
/// computing post-measurement states.
pub fn sample_p_outcomes<R: Rng>(
    state: &FockDensity,
    mode: usize,
    shots: usize,
    rng: &mut R,
    grid: HomodyneGrid,
) -> Result<Vec<f64>> {
    let reduced = state.reduce(mode)?;
    let (ps, dens) = p_marginal(&reduced, grid)?;
    let cdf = TabulatedCdf::new(&ps, &dens, reduced.trace())?;
    Ok((0..shots).map(|_| cdf.draw(rng)).collect())
}

/// Samples a p-homodyne outcome on `mode` and returns the normalized state
/// of the other mode (for two-mode input).
pub fn homodyne_p<R: Rng>(
    state: &FockDensity,
    mode: usize,
    rng: &mut R,
    grid: HomodyneGrid,
) -> Result<HomodyneOutcome> {
    let reduced = state.reduce(mode)?;
    let (ps, dens) = p_marginal(&reduced, grid)?;
    let m = TabulatedCdf::new(&ps, &dens, reduced.trace())?.draw(rng);
    if state.n_modes == 1 {
        return Ok(HomodyneOutcome {
            m,
            conditional: None,
        });
    }
    let n = state.dim;
    let w = momentum_row(n, m);
    let mut out = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                for l in 0..n {
                    let (i, j) = if mode == 0 {
                        (k * n + a, l * n + b)
                    } else {
                        (a * n + k, b * n + l)
                    };
                    acc += w[k] * state.matrix[(i, j)] * w[l].conj();
                }
            }
            out[(a, b)] = acc;
        }
    }
    let cond = FockDensity {
        dim: n,
        n_modes: 1,
        matrix: out,
    }
    .normalized();
    Ok(HomodyneOutcome {
        m,
        conditional: Some(cond),
    })
}

/// Pure-state version of [`homodyne_p`].
pub fn homodyne_p_ket<R: Rng>(
    ket: &FockKet,
    mode: usize,
    rng: &mut R,
    grid: HomodyneGrid,
) -> Result<(f64, Option<FockKet>)> {
    if ket.n_modes == 1 {
        let out = homodyne_p(&ket.to_density(), 0, rng, grid)?;
        return Ok((out.m, None));
    }
    if mode > 1 {
        return Err(Error::InvalidMode { mode, n_modes: 2 });
    }
    let n = ket.dim;
    let psi = ket.as_matrix();
    let ps = linspace(-grid.half_width, grid.half_width, grid.points);
    let phi = momentum_basis(n, &ps);
    // amplitude of (p on measured mode, n on the other)
    let amp = if mode == 0 {
        &phi * &psi
    } else {
        &phi * psi.transpose()
    };
    let dens: Vec<f64> = (0..ps.len()).map(|i| amp.row(i).norm_squared()).collect();
    let m = TabulatedCdf::new(&ps, &dens, ket.norm_sqr())?.draw(rng);
    let w = momentum_row(n, m);
    let cond = if mode == 0 {
        psi.transpose() * &w
    } else {
        &psi * &w
    };
    let cond = FockKet {
        dim: n,
        n_modes: 1,
        amps: cond,
    }
    .normalized();
    Ok((m, Some(cond)))
}

/// Finitely squeezed approximation to `|0⟩_p`: vacuum squeezed so the
/// p-variance is `e^{−2 r_anc}/2`.
pub fn momentum_eigenstate_approx(r_anc: f64, dim: usize) -> Result<FockDensity> {
    if r_anc < 0.0 {
        return Err(Error::OutOfRange {
            name: "r_anc",
            value: r_anc,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let ket = FockKet::squeezed_vacuum(dim, -r_anc)?;
    let leak = ket.leak();
    if leak > LEAK_BUDGET {
        return Err(Error::TruncationLeak {
            leak,
            budget: LEAK_BUDGET,
            context: "momentum eigenstate".into(),
        });
    }
    Ok(ket.to_density())
}
