use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::{check_grid, Series, SweepMetadata, SweepResult};
use crate::error::{check_range, Error, Result};
use crate::gaussian::VACUUM_VARIANCE;
use crate::rng::substream;

/// `½ ln(1 + v_in/v_enc)` in nats.
pub fn mutual_info_analytic(v_in: f64, v_enc: f64) -> Result<f64> {
    check_range("v_in", v_in, 0.0, f64::MAX)?;
    if !(v_enc.is_finite() && v_enc > 0.0) {
        return Err(Error::OutOfRange {
            name: "v_enc",
            value: v_enc,
            min: f64::MIN_POSITIVE,
            max: f64::MAX,
        });
    }
    Ok(0.5 * (v_in / v_enc).ln_1p())
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MutualInfoEstimate {
    pub bits: f64,
    pub n_samples: usize,
    pub v_in: f64,
    pub v_signal: f64,
    pub covariance: f64,
    /// The sample moments gave a non-positive residual variance and the
    /// estimate was set to zero.
    pub clamped: bool,
}

/// Covariance estimator `½ log₂(V_in / (V_in − C²/V))` from paired samples
/// of the client's alphabet and the server's measurement.
pub fn mutual_info_estimate(alphabet: &[f64], signal: &[f64]) -> Result<MutualInfoEstimate> {
    if alphabet.len() != signal.len() {
        return Err(Error::Invalid(format!(
            "{} alphabet values vs {} signals",
            alphabet.len(),
            signal.len()
        )));
    }
    let n = alphabet.len();
    if n < 1000 {
        return Err(Error::Invalid(format!("{n} samples; need at least 1000")));
    }
    let nf = n as f64;
    let mx = alphabet.iter().sum::<f64>() / nf;
    let my = signal.iter().sum::<f64>() / nf;
    let (mut vx, mut vy, mut c) = (0.0, 0.0, 0.0);
    for (&x, &y) in alphabet.iter().zip(signal) {
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
        c += (x - mx) * (y - my);
    }
    let (vx, vy, c) = (vx / (nf - 1.0), vy / (nf - 1.0), c / (nf - 1.0));
    let residual = vx - c * c / vy;
    let (bits, clamped) = if residual > 0.0 && vx > 0.0 && vy > 0.0 {
        (0.5 * (vx / residual).log2(), false)
    } else {
        log::warn!("non-positive residual variance {residual:e}; mutual information clamped to 0");
        (0.0, true)
    };
    Ok(MutualInfoEstimate {
        bits: bits.max(0.0),
        n_samples: n,
        v_in: vx,
        v_signal: vy,
        covariance: c,
        clamped,
    })
}

/// Simulated data for the estimator: alphabet values `x ~ N(0, v_in)` and
/// the server's q-homodyne outcomes on the encrypted coherent state, which
/// add the key `N(0, v_enc)` and vacuum noise.
pub fn homodyne_mi_samples<R: Rng>(
    v_in: f64,
    v_enc: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_range("v_in", v_in, 0.0, f64::MAX)?;
    check_range("v_enc", v_enc, 0.0, f64::MAX)?;
    let bad = |e: rand_distr::NormalError| Error::Invalid(e.to_string());
    let a = Normal::new(0.0, v_in.sqrt()).map_err(bad)?;
    let k = Normal::new(0.0, v_enc.sqrt()).map_err(bad)?;
    let shot = Normal::new(0.0, VACUUM_VARIANCE.sqrt()).map_err(bad)?;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = a.sample(rng);
        xs.push(x);
        ys.push(x + k.sample(rng) + shot.sample(rng));
    }
    Ok((xs, ys))
}

const BATCHES: usize = 10;

/// Mutual information over a grid of key variances (internal units).
///
/// Series: `mi_nats` and `mi_bits` from the analytic formula; with
/// `n_samples`, also `mi_estimate_bits` from simulated homodyne data and
/// `mi_channel_bits`, the analytic value for that data (key plus vacuum
/// noise). The estimate's error bar is the spread over ten batches.
pub fn mutual_info_sweep(
    v_in: f64,
    v_enc_grid: &[f64],
    n_samples: Option<usize>,
    seed: u64,
) -> Result<SweepResult> {
    check_grid(v_enc_grid)?;
    let nats = v_enc_grid
        .iter()
        .map(|&v| mutual_info_analytic(v_in, v))
        .collect::<Result<Vec<_>>>()?;
    let mut series = vec![
        Series::exact("mi_nats", nats.clone()),
        Series::exact("mi_bits", nats.iter().map(|&x| nats_to_bits(x)).collect()),
    ];
    if let Some(n) = n_samples {
        let per_batch = n / BATCHES;
        let est = v_enc_grid
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut rng = substream(seed, i as u64);
                let (xs, ys) = homodyne_mi_samples(v_in, v, per_batch * BATCHES, &mut rng)?;
                let whole = mutual_info_estimate(&xs, &ys)?.bits;
                let parts = xs
                    .chunks(per_batch)
                    .zip(ys.chunks(per_batch))
                    .map(|(x, y)| mutual_info_estimate(x, y).map(|e| e.bits))
                    .collect::<Result<Vec<_>>>()?;
                let m = parts.iter().sum::<f64>() / BATCHES as f64;
                let var = parts.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
                Ok((whole, (var / BATCHES as f64).sqrt()))
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(Series::sampled(
            "mi_estimate_bits",
            est.iter().map(|e| e.0).collect(),
            est.iter().map(|e| e.1).collect(),
        ));
        let channel = v_enc_grid
            .iter()
            .map(|&v| mutual_info_analytic(v_in, v + VACUUM_VARIANCE).map(nats_to_bits))
            .collect::<Result<Vec<_>>>()?;
        series.push(Series::exact("mi_channel_bits", channel));
    }
    let mut metadata = SweepMetadata {
        seed: n_samples.map(|_| seed),
        n_samples: n_samples.map(|n| n / BATCHES * BATCHES),
        backend: if n_samples.is_some() {
            "analytic+monte-carlo"
        } else {
            "analytic"
        }
        .into(),
        ..Default::default()
    };
    metadata
        .conventions
        .insert("variance_units".into(), "internal (vacuum 1/2)".into());
    metadata.params.insert("v_in".into(), v_in);
    Ok(SweepResult {
        param: "v_enc".into(),
        grid: v_enc_grid.to_vec(),
        series,
        metadata,
    })
}
