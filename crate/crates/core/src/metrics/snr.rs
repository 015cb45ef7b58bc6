use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{check_range, Result};
use crate::gaussian::{program_affine, GaussianGate};
use crate::protocol::{ChannelModel, StageStates};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrRow {
    pub stage: String,
    pub mode: usize,
    pub snr_q: f64,
    pub snr_p: f64,
    /// The same stage for a lossless, unencrypted run of the program.
    pub ideal_q: f64,
    pub ideal_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrReport {
    pub v_in: f64,
    pub rows: Vec<SnrRow>,
}

impl SnrReport {
    pub fn row(&self, stage: &str, mode: usize) -> Option<&SnrRow> {
        self.rows
            .iter()
            .find(|r| r.stage == stage && r.mode == mode)
    }
}

/// Signal-to-noise ratios per quadrature behind each protocol stage.
///
/// The signal is an ensemble of input displacements with variance `v_in`
/// per quadrature, carried through the channel and program; the noise is
/// the covariance of the stage's key-averaged state for a fixed input.
/// Both are in the same units, so the ratio is unit-free.
pub fn snr_stage_report(
    stages: &StageStates,
    v_in: f64,
    program: &[GaussianGate],
    channel: &ChannelModel,
) -> Result<SnrReport> {
    check_range("v_in", v_in, 0.0, f64::MAX)?;
    let n = stages.input.n_modes();
    let (s, _) = program_affine(program, n)?;
    let signal_in = DMatrix::identity(2 * n, 2 * n) * v_in;
    let signal_gate = &s * &signal_in * s.transpose();
    let (tf, t) = (channel.t_forward, channel.round_trip());
    let ideal_noise = &s * &stages.input.cov * s.transpose();
    let entries = [
        (
            "input",
            signal_in.clone(),
            &stages.input.cov,
            signal_in.clone(),
            stages.input.cov.clone(),
        ),
        (
            "encrypted",
            signal_in.clone(),
            &stages.encrypted.cov,
            signal_in.clone(),
            stages.input.cov.clone(),
        ),
        (
            "gate",
            &signal_gate * (tf * tf),
            &stages.post_gate.cov,
            signal_gate.clone(),
            ideal_noise.clone(),
        ),
        (
            "decrypted",
            &signal_gate * (t * t),
            &stages.decrypted.cov,
            signal_gate.clone(),
            ideal_noise.clone(),
        ),
    ];
    let mut rows = Vec::new();
    for (stage, sig, noise, ideal_sig, ideal_noise) in entries {
        for mode in 0..n {
            let (q, p) = (2 * mode, 2 * mode + 1);
            rows.push(SnrRow {
                stage: stage.into(),
                mode,
                snr_q: sig[(q, q)] / noise[(q, q)],
                snr_p: sig[(p, p)] / noise[(p, p)],
                ideal_q: ideal_sig[(q, q)] / ideal_noise[(q, q)],
                ideal_p: ideal_sig[(p, p)] / ideal_noise[(p, p)],
            });
        }
    }
    Ok(SnrReport { v_in, rows })
}
