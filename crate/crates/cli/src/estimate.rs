//! `cvqce estimate`: probe-based channel estimation and its effect on
//! decryption fidelity.

use serde::Serialize;

use cvqce_core::metrics::{avg_fidelity_vs_t, Decryption, SweepResult};
use cvqce_core::protocol::{estimate_channel, ChannelEstimate, ChannelModel};
use cvqce_core::rng::substream;

use crate::error::{CliError, CliResult};

/// Default per-quadrature variance of the probe means. Strong probes keep
/// the standard error of `t̂` well inside 0.01 at 1000 probes.
pub const DEFAULT_PROBE_VARIANCE: f64 = 25.0;

#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub t: f64,
    pub probes: usize,
    pub seed: u64,
    pub probe_variance: f64,
    /// Fidelity comparison over this `t` grid, if set.
    pub compare: Option<Vec<f64>>,
    pub delta_sq: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub t: f64,
    pub t_hat: f64,
    pub naive: f64,
    pub estimated: f64,
    pub naive_mc: f64,
    pub estimated_mc: f64,
    /// `estimated >= naive`, required for `t < 1`.
    pub ordered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub t: f64,
    pub seed: u64,
    pub probe_variance: f64,
    pub estimate: ChannelEstimate,
    pub delta_sq: Option<f64>,
    pub compare: Vec<CompareRow>,
}

pub fn cmd_estimate(opts: &EstimateOptions) -> CliResult<EstimateReport> {
    if opts.probes < 10 {
        return Err(CliError::config(format!(
            "--probes {} is below the minimum of 10",
            opts.probes
        )));
    }
    let channel = ChannelModel::symmetric(opts.t)?;
    let estimate = estimate_channel(
        opts.probes,
        &channel,
        opts.probe_variance,
        &mut substream(opts.seed, 0),
    )?;
    let mut compare = Vec::new();
    if let Some(grid) = &opts.compare {
        let est = Decryption::Estimated {
            n_probes: opts.probes,
            probe_variance: opts.probe_variance,
        };
        let naive = avg_fidelity_vs_t(
            opts.delta_sq,
            grid,
            opts.samples,
            opts.seed,
            Decryption::Naive,
        )?;
        let aware = avg_fidelity_vs_t(opts.delta_sq, grid, opts.samples, opts.seed, est)?;
        let col = |r: &SweepResult, m: &str| r.series(m).expect("series present").values.clone();
        let (nc, ec) = (
            col(&naive, "fidelity_closed_form"),
            col(&aware, "fidelity_closed_form"),
        );
        let (nm, em) = (col(&naive, "fidelity_mc"), col(&aware, "fidelity_mc"));
        let t_hat = col(&aware, "t_hat");
        for (i, &t) in grid.iter().enumerate() {
            compare.push(CompareRow {
                t,
                t_hat: t_hat[i],
                naive: nc[i],
                estimated: ec[i],
                naive_mc: nm[i],
                estimated_mc: em[i],
                ordered: ec[i] >= nc[i],
            });
        }
    }
    Ok(EstimateReport {
        t: opts.t,
        seed: opts.seed,
        probe_variance: opts.probe_variance,
        estimate,
        delta_sq: opts.compare.as_ref().map(|_| opts.delta_sq),
        compare,
    })
}

impl EstimateReport {
    pub fn text(&self) -> String {
        let e = &self.estimate;
        let mut s = format!(
            "t_hat = {:.4} ± {:.4}  (true t = {}, {} probes, probe variance {})\n",
            e.t_hat, e.std_err, self.t, e.n_probes, self.probe_variance
        );
        if !self.compare.is_empty() {
            s.push_str(&format!(
                "{:>6} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
                "t", "t_hat", "naive", "estimated", "naive_mc", "est_mc"
            ));
            for r in &self.compare {
                s.push_str(&format!(
                    "{:>6.3} {:>8.4} {:>10.6} {:>10.6} {:>10.6} {:>10.6}{}\n",
                    r.t,
                    r.t_hat,
                    r.naive,
                    r.estimated,
                    r.naive_mc,
                    r.estimated_mc,
                    if r.ordered || r.t >= 1.0 {
                        ""
                    } else {
                        "  <- estimated below naive"
                    }
                ));
            }
        }
        s
    }

    /// Comparison rows as CSV.
    pub fn compare_csv(&self) -> String {
        let mut s = String::from("t,t_hat,naive,estimated,naive_mc,estimated_mc\n");
        for r in &self.compare {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.t, r.t_hat, r.naive, r.estimated, r.naive_mc, r.estimated_mc
            ));
        }
        s
    }

    /// Rows with `t < 1` where estimation did not help.
    pub fn misordered(&self) -> Vec<f64> {
        self.compare
            .iter()
            .filter(|r| r.t < 1.0 && !r.ordered)
            .map(|r| r.t)
            .collect()
    }
}
