use serde::{Deserialize, Serialize};

use super::{check_grid, Series, SweepMetadata, SweepResult};
use crate::error::{check_range, Result};
use crate::gaussian::{alpha_plane_to_quadrature, encrypt_ensemble, purity, GaussianState};

/// How an encryption spread `Δ` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaConvention {
    /// `Δ²` is the variance of each component of the complex amplitude, so
    /// each quadrature shifts with variance `2Δ²`.
    AlphaPlane,
    /// `Δ²` is the shift variance of each quadrature (internal units).
    PerQuadrature,
}

impl DeltaConvention {
    pub fn quadrature_variance(&self, delta: f64) -> f64 {
        match self {
            DeltaConvention::AlphaPlane => alpha_plane_to_quadrature(delta * delta),
            DeltaConvention::PerQuadrature => delta * delta,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DeltaConvention::AlphaPlane => "alpha-plane",
            DeltaConvention::PerQuadrature => "per-quadrature",
        }
    }
}

/// Purity of the key-averaged encrypted state over a grid of spreads `Δ`.
pub fn purity_sweep(
    state: &GaussianState,
    state_label: &str,
    deltas: &[f64],
    convention: DeltaConvention,
) -> Result<SweepResult> {
    check_grid(deltas)?;
    let values = deltas
        .iter()
        .map(|&d| {
            check_range("delta", d, 0.0, f64::MAX)?;
            let v = convention.quadrature_variance(d);
            let enc =
                (0..state.n_modes()).try_fold(state.clone(), |s, k| encrypt_ensemble(&s, v, k))?;
            purity(&enc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut metadata = SweepMetadata {
        backend: "gaussian".into(),
        ..Default::default()
    };
    metadata
        .conventions
        .insert("delta".into(), convention.label().into());
    metadata
        .conventions
        .insert("state".into(), state_label.into());
    Ok(SweepResult {
        param: "delta".into(),
        grid: deltas.to_vec(),
        series: vec![Series::exact("purity", values)],
        metadata,
    })
}
