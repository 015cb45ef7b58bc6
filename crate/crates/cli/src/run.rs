//! `cvqce run`: one protocol session from a scenario config.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};

use cvqce_core::fock::{apply, apply_loss, build_gate, fock_fidelity, wigner_fock, FockDensity};
use cvqce_core::gaussian::{program_affine, purity, wigner_gaussian, GaussianGate, GaussianState};
use cvqce_core::metrics::snr_stage_report;
use cvqce_core::phase_space::{PhaseSpaceGrid, WignerGrid};
use cvqce_core::protocol::{
    run_gaussian_program, run_gaussian_program_fock, run_with_gadget, ProgramGate,
    SessionTranscript,
};
use cvqce_core::rng::substream;

use crate::config::{BackendKind, Format, GateSpec, Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::output::{resolve_out_dir, to_json, write_file};

/// Substream indices derived from the scenario seed.
const SESSION_STREAM: u64 = 0;
const GATE_STREAM: u64 = 1;
const ENSEMBLE_STREAM: u64 = 2;

/// Largest Fock truncation for two-mode scenarios.
pub const MAX_TWO_MODE_TRUNCATION: usize = 32;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: PathBuf,
    pub backend: Option<BackendKind>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// The program with random displacements drawn, plus the draw-free
/// version and where each random displacement sat in it.
struct Realized {
    concrete: Vec<ProgramGate>,
    mean: Vec<ProgramGate>,
    /// `(index into mean, mode, variance)`.
    random: Vec<(usize, usize, f64)>,
}

fn realize<R: Rng>(program: &[GateSpec], rng: &mut R) -> CliResult<Realized> {
    let mut out = Realized {
        concrete: Vec::new(),
        mean: Vec::new(),
        random: Vec::new(),
    };
    for g in program {
        match (*g, g.fixed()) {
            (_, Some(fixed)) => {
                out.concrete.push(fixed);
                out.mean.push(fixed);
            }
            (GateSpec::RandomDisplacement { mode, v_gate }, None) => {
                let normal =
                    Normal::new(0.0, v_gate.sqrt()).map_err(|e| CliError::config(e.to_string()))?;
                let (q, p) = (normal.sample(rng), normal.sample(rng));
                out.concrete.push(ProgramGate::X { mode, q });
                out.concrete.push(ProgramGate::Z { mode, p });
                out.random.push((out.mean.len(), mode, v_gate));
            }
            _ => unreachable!("only random displacements lack a fixed gate"),
        }
    }
    Ok(out)
}

fn gaussian_gates(program: &[ProgramGate]) -> Vec<GaussianGate> {
    program
        .iter()
        .map(|g| g.gaussian().expect("no cubic gate on this path"))
        .collect()
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.iter().copied().collect::<Vec<_>>())
}

fn mat_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn moments_json(mean: &DVector<f64>, cov: &DMatrix<f64>) -> Value {
    let excess: Vec<f64> = (0..cov.nrows()).map(|i| 2.0 * cov[(i, i)] - 1.0).collect();
    json!({ "mean": vec_json(mean), "cov": mat_json(cov), "excess_variance_snu": excess })
}

fn push_moments(csv: &mut String, state: &str, mean: &DVector<f64>, cov: &DMatrix<f64>) {
    let s2 = std::f64::consts::SQRT_2;
    for i in 0..mean.len() {
        csv.push_str(&format!(
            "{state},mean,{i},,{:.15e},{:.15e}\n",
            mean[i],
            mean[i] * s2
        ));
    }
    for i in 0..cov.nrows() {
        for j in 0..cov.ncols() {
            csv.push_str(&format!(
                "{state},cov,{i},{j},{:.15e},{:.15e}\n",
                cov[(i, j)],
                2.0 * cov[(i, j)]
            ));
        }
    }
}

/// Largest absolute moment difference over the larger of 1 and the
/// reference's largest moment.
pub fn relative_moment_deviation(
    a: (&DVector<f64>, &DMatrix<f64>),
    reference: (&DVector<f64>, &DMatrix<f64>),
) -> f64 {
    let diff = (a.0 - reference.0).amax().max((a.1 - reference.1).amax());
    diff / reference.0.amax().max(reference.1.amax()).max(1.0)
}

fn window(sc: &Scenario, states: &[(f64, f64, f64, f64)]) -> CliResult<PhaseSpaceGrid> {
    let half = match sc.outputs.wigner_half_width {
        Some(h) => h,
        None => {
            let reach = states
                .iter()
                .map(|&(mq, mp, vq, vp)| {
                    (mq.abs() + 5.0 * vq.sqrt()).max(mp.abs() + 5.0 * vp.sqrt())
                })
                .fold(4.0, f64::max);
            (reach * 2.0).ceil() / 2.0
        }
    };
    let spacing = 2.0 * half / (sc.outputs.wigner_points - 1) as f64;
    Ok(PhaseSpaceGrid::square(half, spacing)?)
}

struct Session {
    transcript: SessionTranscript,
    summary: Value,
    moments_csv: String,
    /// `(file stem, grid)` pairs.
    wigner: Vec<(String, WignerGrid)>,
}

fn run_gaussian_path(sc: &Scenario) -> CliResult<Session> {
    let n = sc.input.n_modes();
    let realized = realize(&sc.program, &mut substream(sc.seed, GATE_STREAM))?;
    let gates = gaussian_gates(&realized.concrete);
    let mean_gates = gaussian_gates(&realized.mean);
    let input = sc.input_ensemble();
    let run = run_gaussian_program(
        &input,
        &gates,
        &sc.opts,
        &mut substream(sc.seed, SESSION_STREAM),
    )?;

    let mut stages = run_gaussian_program(
        &input,
        &mean_gates,
        &sc.opts,
        &mut substream(sc.seed, ENSEMBLE_STREAM),
    )?
    .stages;
    let tb2 = sc.opts.channel.t_backward.powi(2);
    for &(k, mode, v) in &realized.random {
        let (s, _) = program_affine(&mean_gates[k..], n)?;
        let mut inj = DMatrix::zeros(2 * n, 2 * n);
        inj[(2 * mode, 2 * mode)] = v;
        inj[(2 * mode + 1, 2 * mode + 1)] = v;
        let added = &s * inj * s.transpose();
        stages.post_gate.cov += &added;
        stages.decrypted.cov += added * tb2;
    }
    let named: [(&str, &GaussianState); 4] = [
        ("input", &stages.input),
        ("encrypted", &stages.encrypted),
        ("post_gate", &stages.post_gate),
        ("decrypted", &stages.decrypted),
    ];

    let (session_mean, session_cov, backend_extra) = match sc.backend {
        BackendKind::Gaussian => (
            run.decrypted.mean.clone(),
            run.decrypted.cov.clone(),
            json!({}),
        ),
        BackendKind::Fock => {
            let f_in = FockDensity::from_gaussian(&input, sc.truncation)?;
            let frun = run_gaussian_program_fock(
                &f_in,
                &gates,
                &sc.opts,
                &mut substream(sc.seed, SESSION_STREAM),
                true,
            )?;
            let (m, c) = frun.decrypted.moments();
            let dev =
                relative_moment_deviation((&m, &c), (&run.decrypted.mean, &run.decrypted.cov));
            (
                m,
                c,
                json!({ "truncation": sc.truncation, "leak": frun.decrypted.leak(), "gaussian_relative_deviation": dev }),
            )
        }
    };

    let mut moments_csv = String::from("state,quantity,i,j,internal,snu\n");
    push_moments(
        &mut moments_csv,
        "session_decrypted",
        &session_mean,
        &session_cov,
    );
    push_moments(
        &mut moments_csv,
        "plaintext",
        &run.plaintext.mean,
        &run.plaintext.cov,
    );
    for (label, s) in named {
        push_moments(
            &mut moments_csv,
            &format!("ensemble_{label}"),
            &s.mean,
            &s.cov,
        );
    }

    let mut stage_json = serde_json::Map::new();
    for (label, s) in named {
        let mut v = moments_json(&s.mean, &s.cov);
        v["purity"] = json!(purity(s)?);
        stage_json.insert(label.to_string(), v);
    }

    let mut wigner = Vec::new();
    let mut wigner_purity = serde_json::Map::new();
    if sc.outputs.wigner {
        let mut extents = Vec::new();
        for (_, s) in named {
            for k in 0..n {
                extents.push((
                    s.mean[2 * k],
                    s.mean[2 * k + 1],
                    s.cov[(2 * k, 2 * k)],
                    s.cov[(2 * k + 1, 2 * k + 1)],
                ));
            }
        }
        let grid = window(sc, &extents)?;
        for (label, s) in named {
            for k in 0..n {
                let w = wigner_gaussian(&s.reduce(k)?, &grid)?;
                let stem = if n == 1 {
                    label.to_string()
                } else {
                    format!("{label}.mode{k}")
                };
                wigner_purity.insert(stem.clone(), json!(w.purity()));
                wigner.push((stem, w));
            }
        }
    }

    let snr = snr_stage_report(&stages, sc.v_in, &mean_gates, &sc.opts.channel)?;
    let summary = json!({
        "scenario": sc.name,
        "seed": sc.seed,
        "backend": format!("{:?}", sc.backend).to_lowercase(),
        "config_units": sc.units.label(),
        "parameters_internal": params_json(sc),
        "program": realized.concrete,
        "stages": stage_json,
        "wigner_purity": wigner_purity,
        "snr": snr,
        "session": {
            "decrypted": moments_json(&session_mean, &session_cov),
            "plaintext": moments_json(&run.plaintext.mean, &run.plaintext.cov),
            "relative_deviation_from_plaintext":
                relative_moment_deviation((&session_mean, &session_cov), (&run.plaintext.mean, &run.plaintext.cov)),
            "fock": backend_extra,
        },
        "quantum_uses": run.transcript.quantum_uses(),
        "classical_outcomes": run.transcript.outcomes().len(),
    });
    Ok(Session {
        transcript: run.transcript,
        summary,
        moments_csv,
        wigner,
    })
}

fn params_json(sc: &Scenario) -> Value {
    let ch = sc.opts.channel;
    json!({
        "v_in": sc.v_in,
        "v_enc": sc.opts.v_enc,
        "key_correlation": sc.opts.key_correlation,
        "t_forward": ch.t_forward,
        "t_backward": ch.t_backward,
        "excess_noise": ch.excess_noise,
        "naive_decryption": sc.opts.assumed_channel.is_some(),
    })
}

fn run_gadget_path(sc: &Scenario) -> CliResult<Session> {
    let realized = realize(&sc.program, &mut substream(sc.seed, GATE_STREAM))?;
    let input = FockDensity::from_gaussian(&sc.input_ensemble(), sc.truncation)?;
    let run = run_with_gadget(
        &input,
        &realized.concrete,
        &sc.gadget,
        &sc.opts,
        &mut substream(sc.seed, SESSION_STREAM),
    )?;

    let mut plain = input.clone();
    for g in &realized.concrete {
        let (kind, modes) = g.to_fock();
        plain = apply(&build_gate(kind, sc.truncation)?, &plain, &modes)?;
    }
    plain = apply_loss(&plain, sc.opts.channel.t_backward, 0)?;
    let fidelity = fock_fidelity(&plain, &run.decrypted)?;

    let (dm, dc) = run.decrypted.moments();
    let (pm, pc) = plain.moments();
    let mut moments_csv = String::from("state,quantity,i,j,internal,snu\n");
    push_moments(&mut moments_csv, "session_decrypted", &dm, &dc);
    push_moments(&mut moments_csv, "plaintext", &pm, &pc);

    let named = [
        ("input", &input),
        ("decrypted", &run.decrypted),
        ("plaintext", &plain),
    ];
    let mut wigner = Vec::new();
    let mut wigner_purity = serde_json::Map::new();
    if sc.outputs.wigner {
        let extents: Vec<_> = named
            .iter()
            .map(|(_, s)| {
                let (m, c) = s.moments();
                (m[0], m[1], c[(0, 0)], c[(1, 1)])
            })
            .collect();
        let grid = window(sc, &extents)?;
        for (label, s) in named {
            let w = wigner_fock(s, &grid)?;
            wigner_purity.insert(label.to_string(), json!(w.purity()));
            wigner.push((label.to_string(), w));
        }
    }

    let summary = json!({
        "scenario": sc.name,
        "seed": sc.seed,
        "backend": "fock",
        "config_units": sc.units.label(),
        "parameters_internal": params_json(sc),
        "program": realized.concrete,
        "gadget": { "r_anc": sc.gadget.r_anc, "v_share": sc.gadget.v_share, "v_anc_offset": sc.gadget.v_anc_offset },
        "wigner_purity": wigner_purity,
        "session": {
            "decrypted": moments_json(&dm, &dc),
            "plaintext": moments_json(&pm, &pc),
            "fidelity_to_plaintext": fidelity,
            "purity": run.decrypted.purity() / run.decrypted.trace().powi(2),
            "leak": run.leak,
            "truncation": sc.truncation,
        },
        "quantum_uses": run.transcript.quantum_uses(),
        "classical_outcomes": run.transcript.outcomes().len(),
    });
    Ok(Session {
        transcript: run.transcript,
        summary,
        moments_csv,
        wigner,
    })
}

/// Loads, validates and runs a scenario, writing its artifacts.
pub fn cmd_run(opts: &RunOptions) -> CliResult<RunArtifacts> {
    let cfg = ScenarioConfig::load(&opts.config)?;
    let stem = opts
        .config
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    let mut cfg = cfg;
    if let Some(b) = opts.backend {
        cfg.backend.kind = b;
    }
    let sc = cfg.resolve(stem)?;
    if sc.backend == BackendKind::Fock
        && sc.input.n_modes() == 2
        && sc.truncation > MAX_TWO_MODE_TRUNCATION
    {
        return Err(CliError::config(format!(
            "`backend.truncation`: two-mode Fock scenarios are limited to {MAX_TWO_MODE_TRUNCATION} levels"
        )));
    }
    let dir = resolve_out_dir(opts.out.as_deref(), sc.outputs.dir.as_deref());
    let session = if sc.has_cubic() {
        run_gadget_path(&sc)?
    } else {
        run_gaussian_path(&sc)?
    };
    write_artifacts(&sc, &dir, session)
}

fn write_artifacts(sc: &Scenario, dir: &Path, s: Session) -> CliResult<RunArtifacts> {
    let name = &sc.name;
    let mut files = vec![
        write_file(
            dir,
            &format!("{name}.transcript.json"),
            &(s.transcript.to_json() + "\n"),
        )?,
        write_file(dir, &format!("{name}.moments.csv"), &s.moments_csv)?,
        write_file(dir, &format!("{name}.summary.json"), &to_json(&s.summary))?,
    ];
    for (stem, grid) in &s.wigner {
        for f in &sc.outputs.formats {
            files.push(match f {
                Format::Csv => {
                    write_file(dir, &format!("{name}.wigner.{stem}.csv"), &grid.to_csv())?
                }
                Format::Json => write_file(
                    dir,
                    &format!("{name}.wigner.{stem}.json"),
                    &to_json(&grid.to_json()),
                )?,
            });
        }
    }
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        files,
        summary: s.summary,
    })
}
