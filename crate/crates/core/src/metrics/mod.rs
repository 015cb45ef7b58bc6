//! Figures of merit and the sweeps that tabulate them.
//!
//! Every sweep returns a [`SweepResult`] whose metadata (seed, sample
//! count, conventions and parameters) is enough to regenerate it bit for
//! bit. Grid points run in parallel, each on its own RNG substream, so the
//! output does not depend on scheduling.

mod fidelity;
mod mutual_info;
mod purity;
mod snr;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

pub use fidelity::{avg_fidelity_vs_t, coherent_overlap_sq, Decryption};
pub use mutual_info::{
    homodyne_mi_samples, mutual_info_analytic, mutual_info_estimate, mutual_info_sweep,
    nats_to_bits, MutualInfoEstimate,
};
pub use purity::{purity_sweep, DeltaConvention};
pub use snr::{snr_stage_report, SnrReport, SnrRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub metric: String,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl Series {
    pub fn exact(metric: &str, values: Vec<f64>) -> Self {
        Series {
            metric: metric.into(),
            values,
            stderr: None,
        }
    }

    pub fn sampled(metric: &str, values: Vec<f64>, stderr: Vec<f64>) -> Self {
        Series {
            metric: metric.into(),
            values,
            stderr: Some(stderr),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub backend: String,
    pub conventions: BTreeMap<String, String>,
    pub params: BTreeMap<String, f64>,
}

/// Metric values over a one-dimensional parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub param: String,
    pub grid: Vec<f64>,
    pub series: Vec<Series>,
    pub metadata: SweepMetadata,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty grid".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(
            "grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

impl SweepResult {
    pub fn validate(&self) -> Result<()> {
        check_grid(&self.grid)?;
        for s in &self.series {
            let n = self.grid.len();
            let err_len = s.stderr.as_ref().map_or(n, Vec::len);
            if s.values.len() != n || err_len != n {
                return Err(Error::Invalid(format!(
                    "series {} does not match the grid",
                    s.metric
                )));
            }
            let errs = s.stderr.iter().flatten();
            if s.values.iter().chain(errs).any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "series {} has non-finite values",
                    s.metric
                )));
            }
        }
        if self.metadata.backend.is_empty() {
            return Err(Error::Invalid("metadata lacks a backend".into()));
        }
        Ok(())
    }

    pub fn series(&self, metric: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.metric == metric)
    }

    /// Long-format CSV, one row per grid point and metric. `stderr` is
    /// empty for exact values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("param,metric,value,stderr\n");
        for s in &self.series {
            for (i, (x, v)) in self.grid.iter().zip(&s.values).enumerate() {
                let err = s
                    .stderr
                    .as_ref()
                    .map(|e| e[i].to_string())
                    .unwrap_or_default();
                out.push_str(&format!("{x},{},{v},{err}\n", s.metric));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep results serialize")
    }
}
