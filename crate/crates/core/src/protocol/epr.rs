use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::gaussian::{purity, GaussianState};

/// Statistics of the displacement ensemble prepared on mode B by
/// heterodyning mode A of a two-mode squeezed vacuum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EprEnsemble {
    pub r_epr: f64,
    pub n_samples: usize,
    /// Covariance of B given the outcome; independent of the outcome.
    pub conditional_cov: Matrix2<f64>,
    pub conditional_purity: f64,
    /// Empirical covariance of the conditional means of B.
    pub ensemble_cov: Matrix2<f64>,
    /// Matching prepare-and-measure key variance `sinh² r`.
    pub v_enc: f64,
    /// Empirical per-quadrature variance of the unit-gain key estimate
    /// about the conditional mean.
    pub excess_noise: f64,
    /// `e^{−2r}`, the value `excess_noise` estimates.
    pub excess_noise_analytic: f64,
}

/// Simulates heterodyne detection on mode A of a two-mode squeezed vacuum
/// with squeezing `r_epr` and collects the conditional states of mode B.
///
/// The client's unit-gain key estimate is the phase-conjugated outcome
/// `(x, −y)`; its spread about the actual conditional displacement is the
/// noise an equivalent prepare-and-measure client would not have.
pub fn epr_encryption_ensemble<R: Rng>(
    r_epr: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<EprEnsemble> {
    check_range("r_epr", r_epr, 0.0, 20.0)?;
    if n_samples < 2 {
        return Err(Error::Invalid("need at least two samples".into()));
    }
    let tmsv = GaussianState::two_mode_squeezed(r_epr);
    let cov = &tmsv.cov;
    let va = cov.fixed_view::<2, 2>(0, 0).into_owned();
    let vb = cov.fixed_view::<2, 2>(2, 2).into_owned();
    let c = cov.fixed_view::<2, 2>(2, 0).into_owned();
    let het = va + Matrix2::identity() * 0.5;
    let het_inv = het
        .try_inverse()
        .ok_or(Error::SingularCovariance(het.determinant()))?;
    let gain = c * het_inv;
    let conditional_cov = vb - gain * c.transpose();
    let conditional = GaussianState::new(
        nalgebra::DVector::zeros(2),
        nalgebra::DMatrix::from_iterator(2, 2, conditional_cov.iter().copied()),
    )?;
    let chol = het
        .cholesky()
        .ok_or(Error::SingularCovariance(het.determinant()))?;
    let l = chol.l();

    let mut means = Vec::with_capacity(n_samples);
    let mut err_sq = 0.0;
    for _ in 0..n_samples {
        let z = Vector2::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let x = l * z;
        let m = gain * x;
        let estimate = Vector2::new(x[0], -x[1]);
        err_sq += (estimate - m).norm_squared() / 2.0;
        means.push(m);
    }
    let n = n_samples as f64;
    let mean = means.iter().fold(Vector2::zeros(), |a, m| a + m) / n;
    let ensemble_cov = means.iter().fold(Matrix2::zeros(), |a, m| {
        let d = m - mean;
        a + d * d.transpose()
    }) / (n - 1.0);

    Ok(EprEnsemble {
        r_epr,
        n_samples,
        conditional_cov,
        conditional_purity: purity(&conditional)?,
        ensemble_cov,
        v_enc: r_epr.sinh().powi(2),
        excess_noise: err_sq / n,
        excess_noise_analytic: (-2.0 * r_epr).exp(),
    })
}
