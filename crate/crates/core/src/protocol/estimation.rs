use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::channel::ChannelModel;
use crate::error::{check_range, Error, Result};
use crate::gaussian::{
    apply_gate, apply_noisy_loss, sample_homodyne, GaussianGate, GaussianState, Quadrature,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelEstimate {
    pub t_hat: f64,
    pub std_err: f64,
    pub n_probes: usize,
    /// Residual variance of the fit; the shot noise for a pure-loss channel.
    pub residual_variance: f64,
}

/// Estimates a symmetric channel transmission from probe round trips.
///
/// Probe `i` is a coherent state whose quadrature means are drawn from
/// `N(0, probe_variance)`; the server adds a known displacement drawn the
/// same way, and the client homodynes q on even probes and p on odd ones.
/// The outcomes follow `t² a + t b` plus shot noise, and `t̂` is the least
/// squares fit of that model.
pub fn estimate_channel<R: Rng>(
    n_probes: usize,
    channel: &ChannelModel,
    probe_variance: f64,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    if n_probes < 10 {
        return Err(Error::OutOfRange {
            name: "n_probes",
            value: n_probes as f64,
            min: 10.0,
            max: f64::INFINITY,
        });
    }
    channel.validate()?;
    check_range("probe_variance", probe_variance, 0.0, f64::MAX)?;
    let normal =
        Normal::new(0.0, probe_variance.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(n_probes);
    for i in 0..n_probes {
        let (aq, ap, bq, bp) = (
            normal.sample(rng),
            normal.sample(rng),
            normal.sample(rng),
            normal.sample(rng),
        );
        let mut s = GaussianState::vacuum(1);
        s = apply_gate(&s, &GaussianGate::X { mode: 0, q: aq })?;
        s = apply_gate(&s, &GaussianGate::Z { mode: 0, p: ap })?;
        s = apply_noisy_loss(&s, channel.t_forward, channel.excess_noise, 0)?;
        s = apply_gate(&s, &GaussianGate::X { mode: 0, q: bq })?;
        s = apply_gate(&s, &GaussianGate::Z { mode: 0, p: bp })?;
        s = apply_noisy_loss(&s, channel.t_backward, channel.excess_noise, 0)?;
        let (quad, a, b) = if i % 2 == 0 {
            (Quadrature::Q, aq, bq)
        } else {
            (Quadrature::P, ap, bp)
        };
        data.push((a, b, sample_homodyne(&s, 0, quad, rng)?));
    }
    fit_symmetric(&data)
}

/// Least squares for `y = t² a + t b`, by Newton iteration on the normal
/// equation from the unconstrained linear fit.
fn fit_symmetric(data: &[(f64, f64, f64)]) -> Result<ChannelEstimate> {
    let sse = |t: f64| {
        data.iter()
            .map(|&(a, b, y)| (y - t * t * a - t * b).powi(2))
            .sum::<f64>()
    };
    let (mut saa, mut sab, mut sbb, mut say, mut sby) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(a, b, y) in data {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        say += a * y;
        sby += b * y;
    }
    let det = saa * sbb - sab * sab;
    if det.abs() < 1e-12 * (saa * sbb).max(1e-300) || saa + sbb == 0.0 {
        return Err(Error::Degenerate(
            "probe amplitudes carry no information".into(),
        ));
    }
    let w = (saa * sby - sab * say) / det;
    let mut t = w.clamp(0.0, 1.5);
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for &(a, b, y) in data {
            let r = y - t * t * a - t * b;
            let d = 2.0 * t * a + b;
            g += r * d;
            h += -d * d + 2.0 * a * r;
        }
        if h == 0.0 {
            break;
        }
        let step = g / h;
        t -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    let n = data.len();
    let jac: f64 = data
        .iter()
        .map(|&(a, b, _)| (2.0 * t * a + b).powi(2))
        .sum();
    if jac <= 0.0 {
        return Err(Error::Degenerate("zero sensitivity to t".into()));
    }
    let residual_variance = sse(t) / (n - 1) as f64;
    Ok(ChannelEstimate {
        t_hat: t,
        std_err: (residual_variance / jac).sqrt(),
        n_probes: n,
        residual_variance,
    })
}
