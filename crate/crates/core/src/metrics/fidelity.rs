use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{check_grid, Series, SweepMetadata, SweepResult};
use crate::error::{check_range, Error, Result};
use crate::protocol::{estimate_channel, ChannelModel};
use crate::rng::substream;

/// `|⟨α|β⟩|² = exp(−|α − β|²)`.
pub fn coherent_overlap_sq(alpha: Complex64, beta: Complex64) -> f64 {
    (-(alpha - beta).norm_sqr()).exp()
}

/// How the client scales its key removal for a channel of transmission `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decryption {
    /// Assumes a lossless channel.
    Naive,
    /// Knows `t` exactly.
    Exact,
    /// Uses `t̂` from probe-based estimation, one estimate per grid point.
    Estimated {
        n_probes: usize,
        probe_variance: f64,
    },
}

impl Decryption {
    pub fn label(&self) -> &'static str {
        match self {
            Decryption::Naive => "naive",
            Decryption::Exact => "exact",
            Decryption::Estimated { .. } => "estimated",
        }
    }
}

/// Coefficients of `α`, `β` and the key `γ` in `δ`, and the `t̂` used.
fn coefficients<R: Rng>(t: f64, mode: Decryption, rng: &mut R) -> Result<([f64; 3], f64)> {
    let t_hat = match mode {
        Decryption::Naive => 1.0,
        Decryption::Exact => t,
        Decryption::Estimated {
            n_probes,
            probe_variance,
        } => estimate_channel(n_probes, &ChannelModel::symmetric(t)?, probe_variance, rng)?.t_hat,
    };
    Ok(([t * t - 1.0, t - 1.0, t * t - t_hat * t_hat], t_hat))
}

/// Average of `|⟨α + β | t²α + tβ + (t² − t̂²)γ⟩|²` over input amplitude
/// `α`, server displacement `β` and key `γ`, each complex Gaussian with
/// variance `delta_sq` per component (alpha-plane convention).
///
/// Series: `fidelity_mc` (Monte Carlo, with standard error),
/// `fidelity_closed_form` = `1/(1 + 2 Δ² Σ c²)` for the coefficients
/// `c` of `δ = Σ c_i x_i`, and `t_hat`.
pub fn avg_fidelity_vs_t(
    delta_sq: f64,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
    mode: Decryption,
) -> Result<SweepResult> {
    check_grid(t_grid)?;
    for &t in t_grid {
        check_range("t", t, 0.0, 1.0)?;
    }
    check_range("delta_sq", delta_sq, 0.0, f64::MAX)?;
    if n_samples < 2 {
        return Err(Error::Invalid("need at least two samples".into()));
    }
    let normal = Normal::new(0.0, delta_sq.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
    let points = t_grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = substream(seed, i as u64);
            let (c, t_hat) = coefficients(t, mode, &mut rng)?;
            let mut draw = || Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..n_samples {
                let (alpha, beta, gamma) = (draw(), draw(), draw());
                let sent = alpha + beta;
                let got = t * t * alpha + t * beta + c[2] * gamma;
                let f = coherent_overlap_sq(sent, got);
                sum += f;
                sum_sq += f * f;
            }
            let n = n_samples as f64;
            let mean = sum / n;
            let var = ((sum_sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
            let closed = 1.0 / (1.0 + 2.0 * delta_sq * c.iter().map(|x| x * x).sum::<f64>());
            Ok((mean, (var / n).sqrt(), closed, t_hat))
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |k: usize| -> Vec<f64> { points.iter().map(|p| [p.0, p.1, p.2, p.3][k]).collect() };
    let mut metadata = SweepMetadata {
        seed: Some(seed),
        n_samples: Some(n_samples),
        backend: "monte-carlo".into(),
        ..Default::default()
    };
    metadata
        .conventions
        .insert("fidelity".into(), "squared overlap |<a|b>|^2".into());
    metadata
        .conventions
        .insert("delta_sq".into(), "alpha-plane, per component".into());
    metadata
        .conventions
        .insert("decryption".into(), mode.label().into());
    metadata.params.insert("delta_sq".into(), delta_sq);
    if let Decryption::Estimated {
        n_probes,
        probe_variance,
    } = mode
    {
        metadata.params.insert("n_probes".into(), n_probes as f64);
        metadata
            .params
            .insert("probe_variance".into(), probe_variance);
    }
    Ok(SweepResult {
        param: "t".into(),
        grid: t_grid.to_vec(),
        series: vec![
            Series::sampled("fidelity_mc", col(0), col(1)),
            Series::exact("fidelity_closed_form", col(2)),
            Series::exact("t_hat", col(3)),
        ],
        metadata,
    })
}
