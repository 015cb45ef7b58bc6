//! `cvqce sweep`: metric curves over a parameter grid.

use std::path::{Path, PathBuf};

use cvqce_core::metrics::{
    avg_fidelity_vs_t, mutual_info_sweep, purity_sweep, Decryption, DeltaConvention, SweepResult,
};

use crate::config::Units;
use crate::error::{CliError, CliResult};
use crate::grid::StateSpec;
use crate::output::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DecryptionArg {
    Naive,
    Exact,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ConventionArg {
    PerQuadrature,
    AlphaPlane,
}

impl From<ConventionArg> for DeltaConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::PerQuadrature => DeltaConvention::PerQuadrature,
            ConventionArg::AlphaPlane => DeltaConvention::AlphaPlane,
        }
    }
}

/// Mutual information per homodyne use versus key variance. `v_in` and
/// the grid are in `units`; the output grid stays in those units.
pub fn mutual_info(
    v_in: f64,
    v_enc: &[f64],
    units: Units,
    samples: Option<usize>,
    seed: Option<u64>,
) -> CliResult<SweepResult> {
    let seed = match (samples, seed) {
        (Some(_), None) => return Err(CliError::config("--seed is required with --samples")),
        (_, s) => s.unwrap_or(0),
    };
    let grid: Vec<f64> = v_enc
        .iter()
        .map(|&v| units.variance_to_internal(v))
        .collect();
    let mut res = mutual_info_sweep(units.variance_to_internal(v_in), &grid, samples, seed)?;
    res.grid = v_enc.to_vec();
    res.metadata.seed = samples.map(|_| seed);
    res.metadata.params.insert("v_in".into(), v_in);
    res.metadata
        .conventions
        .insert("variance_units".into(), units.label().into());
    Ok(res)
}

pub fn fidelity_vs_t(
    delta_sq: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
    decryption: DecryptionArg,
    probes: usize,
    probe_variance: f64,
) -> CliResult<SweepResult> {
    let mode = match decryption {
        DecryptionArg::Naive => Decryption::Naive,
        DecryptionArg::Exact => Decryption::Exact,
        DecryptionArg::Estimated => Decryption::Estimated {
            n_probes: probes,
            probe_variance,
        },
    };
    Ok(avg_fidelity_vs_t(delta_sq, t_grid, samples, seed, mode)?)
}

pub fn purity(
    state: StateSpec,
    deltas: &[f64],
    convention: ConventionArg,
) -> CliResult<SweepResult> {
    Ok(purity_sweep(
        &state.state(),
        &state.to_string(),
        deltas,
        convention.into(),
    )?)
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn write_sweep(dir: &Path, stem: &str, res: &SweepResult) -> CliResult<Vec<PathBuf>> {
    Ok(vec![
        write_file(dir, &format!("{stem}.csv"), &res.to_csv())?,
        write_file(dir, &format!("{stem}.json"), &(res.to_json() + "\n"))?,
    ])
}

/// Wide table of every series, one row per grid point.
pub fn table_text(res: &SweepResult) -> String {
    let mut s = format!("{:>12}", res.param);
    for series in &res.series {
        s.push_str(&format!(" {:>22}", series.metric));
    }
    s.push('\n');
    for (i, x) in res.grid.iter().enumerate() {
        s.push_str(&format!("{x:>12.6}"));
        for series in &res.series {
            s.push_str(&format!(" {:>22.10e}", series.values[i]));
        }
        s.push('\n');
    }
    s
}
