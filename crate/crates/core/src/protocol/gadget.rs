use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::framed::FramedState;
use super::key::EncryptionKey;
use super::program::{algebra_word, ProgramGate};
use super::session::{bound_value, word_displacements, SessionOptions, SESSION_LEAK_BUDGET};
use super::transcript::{digest_f64s, Direction, Payload, SessionTranscript};
use crate::algebra::{compose_program_correction, Gate};
use crate::error::{check_range, Error, Result};
use crate::fock::{
    apply, build_gate, q_multiplier, sample_q_outcomes, FockDensity, FockGate, HomodyneGrid,
};
use crate::gaussian::{apply_gate, program_affine, GaussianGate, GaussianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetConfig {
    /// Squeezing of the ancilla's approximate `|0⟩_p`.
    pub r_anc: f64,
    /// Variance of the client's share `A`.
    #[serde(default = "default_v_share")]
    pub v_share: f64,
    /// Variance of the ancilla's `Z(Q′)` offset.
    #[serde(default = "default_v_anc_offset")]
    pub v_anc_offset: f64,
}

fn default_v_share() -> f64 {
    100.0
}

fn default_v_anc_offset() -> f64 {
    1e3
}

impl Default for GadgetConfig {
    fn default() -> Self {
        GadgetConfig {
            r_anc: 3.0,
            v_share: default_v_share(),
            v_anc_offset: default_v_anc_offset(),
        }
    }
}

impl GadgetConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("r_anc", self.r_anc, 0.0, 10.0)?;
        check_range("v_share", self.v_share, 0.0, f64::MAX)?;
        check_range("v_anc_offset", self.v_anc_offset, 0.0, f64::MAX)
    }
}

/// Classical side of one gadget round. Only `b` and `m1` cross the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GadgetRecord {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub q_prime: f64,
    pub m1: f64,
    pub r_anc: f64,
}

#[derive(Debug, Clone)]
pub struct GadgetRun {
    pub decrypted: FockDensity,
    pub record: GadgetRecord,
    pub transcript: SessionTranscript,
    pub key: EncryptionKey,
    pub leak: f64,
}

/// q-space envelope of the ancilla wavefunction, `exp(−y²/(4σ²))` with
/// `σ² = e^{2 r}/2`.
fn ancilla_envelope(r_anc: f64) -> impl Fn(f64) -> f64 {
    let s2 = 0.5 * (2.0 * r_anc).exp();
    move |y| (-y * y / (4.0 * s2)).exp()
}

fn single_mode_check(program: &[ProgramGate]) -> Result<(usize, f64)> {
    let mut cubic = None;
    for (i, g) in program.iter().enumerate() {
        if g.modes().iter().any(|&m| m != 0) {
            return Err(Error::Unsupported("gadget sessions are single-mode".into()));
        }
        if let ProgramGate::U3 { t, .. } = *g {
            if cubic.replace((i, t)).is_some() {
                return Err(Error::Unsupported("one cubic gate per session".into()));
            }
        }
    }
    cubic.ok_or_else(|| Error::Invalid("program has no cubic gate".into()))
}

fn symplectic_2(gates: &[ProgramGate]) -> Result<Matrix2<f64>> {
    let gs: Vec<GaussianGate> = gates.iter().filter_map(ProgramGate::gaussian).collect();
    let (s, _) = program_affine(&gs, 1)?;
    Ok(Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]))
}

/// Runs a single-mode program containing one cubic gate through the
/// interactive gadget.
///
/// The server's measurement acts on the data mode as the Gaussian Kraus
/// operator `g(q + y)` of the ancilla wavefunction, followed by a known
/// momentum kick; the client removes the kick with `Q′ + 2A m1`. The
/// encrypted state is carried as a frame around a truncated core, so the
/// key and the ancilla offsets are exact at any size. Loss on the way in
/// would make the ancilla noisy and is not supported.
pub fn run_with_gadget<R: Rng>(
    input: &FockDensity,
    program: &[ProgramGate],
    cfg: &GadgetConfig,
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<GadgetRun> {
    opts.validate()?;
    cfg.validate()?;
    if input.n_modes != 1 {
        return Err(Error::SingleModeOnly(input.n_modes));
    }
    let (idx, t) = single_mode_check(program)?;
    if opts.channel.t_forward != 1.0 || opts.channel.excess_noise != 0.0 {
        return Err(Error::Unsupported(
            "the gadget needs a lossless forward channel".into(),
        ));
    }
    let assumed = opts.assumed();
    let key = EncryptionKey::draw(1, opts.v_enc, rng)?;
    let client_key = key.client_copy(opts.key_correlation, rng)?;

    let pc = compose_program_correction(&algebra_word(program), &EncryptionKey::symbols(1))?;
    let bind_fwd = client_key.bindings(assumed.t_forward);
    let mut u2_total = 0.0;
    for (_, word) in &pc.gadget_u2 {
        for g in word.gates() {
            if let Gate::U2 { t, .. } = g {
                u2_total += bound_value(t, &bind_fwd)?;
            }
        }
    }
    let a = Normal::new(0.0, cfg.v_share.sqrt())
        .map_err(|e| Error::Invalid(e.to_string()))?
        .sample(rng);
    let q_prime = Normal::new(0.0, cfg.v_anc_offset.sqrt())
        .map_err(|e| Error::Invalid(e.to_string()))?
        .sample(rng);
    let b = u2_total - a;

    let mut transcript = SessionTranscript::new();
    let mut state = FramedState::new(input.clone(), false);
    let (q0, p0) = key.displacements[0];
    state.displace(0, q0, p0)?;
    transcript.push(
        Direction::ClientToServer,
        Payload::Quantum {
            modes: vec![0],
            role: "encrypted input".into(),
            backend: "fock".into(),
            digest: state.digest(),
        },
    );
    transcript.push(
        Direction::ClientToServer,
        Payload::Program {
            gates: program.to_vec(),
        },
    );
    let mut ancilla = GaussianState::squeezed_vacuum(-cfg.r_anc);
    ancilla = apply_gate(
        &ancilla,
        &GaussianGate::Z {
            mode: 0,
            p: q_prime,
        },
    )?;
    ancilla = apply_gate(&ancilla, &GaussianGate::U2 { mode: 0, t: a })?;
    transcript.push(
        Direction::ClientToServer,
        Payload::Quantum {
            modes: vec![1],
            role: "ancilla".into(),
            backend: "gaussian".into(),
            digest: digest_f64s(ancilla.mean.iter().chain(ancilla.cov.iter()).copied()),
        },
    );
    transcript.push(Direction::ClientToServer, Payload::Share { b });

    for g in &program[..idx] {
        state.gate(g)?;
    }
    let (qe, pe) = (state.frame[0], state.frame[1]);
    let dim = state.dim();
    let q_core = sample_q_outcomes(&state.core, 0, 1, rng, HomodyneGrid::default())?[0];
    let s2 = 0.5 * (2.0 * cfg.r_anc).exp();
    let y = s2.sqrt() * rng.sample::<f64, _>(StandardNormal);
    let y0 = y - q_core;
    let m1 = y0 - qe;
    transcript.push(Direction::ServerToClient, Payload::Outcome { m1 });

    let trace_before = state.core.trace();
    let mut core = apply(&build_gate(FockGate::U3(t), dim)?, &state.core, &[0])?;
    let env = ancilla_envelope(cfg.r_anc);
    let kraus = q_multiplier(dim, dim, |x| Complex64::new(env(x + y0), 0.0))?;
    core = apply(&kraus, &core, &[0])?;
    let tr = core.trace();
    if tr <= 0.0 {
        return Err(Error::Degenerate(
            "measurement outcome outside the truncation".into(),
        ));
    }
    core.matrix *= Complex64::new(trace_before / tr, 0.0);
    let eps = a + b + 3.0 * qe * t;
    if eps != 0.0 {
        core = apply(&build_gate(FockGate::U2(eps), dim)?, &core, &[0])?;
    }
    state.core = core;
    state.frame[1] = q_prime + 2.0 * a * m1 + pe + 2.0 * eps * qe - 3.0 * qe * qe * t;

    for g in &program[idx + 1..] {
        state.gate(g)?;
    }
    state.loss(opts.channel.t_backward, 0.0, 0)?;
    transcript.push(
        Direction::ServerToClient,
        Payload::Quantum {
            modes: vec![0],
            role: "output".into(),
            backend: "fock".into(),
            digest: state.digest(),
        },
    );

    let tb = assumed.t_backward;
    let base = word_displacements(&pc.correction, &bind_fwd, 1)?[0];
    let kick = symplectic_2(&program[idx + 1..])? * Vector2::new(0.0, q_prime + 2.0 * a * m1);
    state.displace(0, tb * (base.0 - kick[0]), tb * (base.1 - kick[1]))?;
    let decrypted = state.materialize()?;
    let leak = decrypted.leak();
    decrypted.check_leak(SESSION_LEAK_BUDGET, "gadget output")?;
    Ok(GadgetRun {
        decrypted,
        record: GadgetRecord {
            t,
            a,
            b,
            q_prime,
            m1,
            r_anc: cfg.r_anc,
        },
        transcript,
        key,
        leak,
    })
}

/// Output of the gadget averaged over the measurement outcome, for a
/// single-mode state entering the cubic gate with the key removed:
/// `U3(t)` followed by momentum dephasing
/// `ρ(q, q′) → ρ(q, q′) exp(−v (q − q′)²/2)` with `v = e^{−2 r_anc}/2`.
pub fn gadget_average_output(input: &FockDensity, t: f64, r_anc: f64) -> Result<FockDensity> {
    if input.n_modes != 1 {
        return Err(Error::SingleModeOnly(input.n_modes));
    }
    check_range("r_anc", r_anc, 0.0, 10.0)?;
    let dim = input.dim;
    let rho = apply(&build_gate(FockGate::U3(t), dim)?, input, &[0])?;
    Ok(q_dephase(&rho, 0.5 * (-2.0 * r_anc).exp()))
}

/// `ρ(q, q′) exp(−v (q − q′)²/2)` in the padded q eigenbasis.
pub(super) fn q_dephase(rho: &FockDensity, v: f64) -> FockDensity {
    let dim = rho.dim;
    let (x, vecs) = crate::fock::q_eigen(2 * dim);
    let vd: DMatrix<Complex64> = vecs
        .view((0, 0), (dim, 2 * dim))
        .map(|e| Complex64::new(e, 0.0));
    let mut inner = vd.transpose() * &rho.matrix * &vd;
    for i in 0..2 * dim {
        for j in 0..2 * dim {
            inner[(i, j)] *= (-0.5 * v * (x[i] - x[j]).powi(2)).exp();
        }
    }
    FockDensity {
        matrix: &vd * inner * vd.transpose(),
        ..rho.clone()
    }
}

/// Fisher information `9T²/v_in` that the server's share
/// `B = −3QT − A`, `A ~ N(0, v_in)`, carries about `Q`.
pub fn gadget_split_fisher(t: f64, v_in: f64) -> Result<f64> {
    if !(v_in.is_finite() && v_in > 0.0) {
        return Err(Error::OutOfRange {
            name: "v_in",
            value: v_in,
            min: f64::MIN_POSITIVE,
            max: f64::MAX,
        });
    }
    Ok(9.0 * t * t / v_in)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

/// Monte-Carlo Fisher information: the mean squared score at `q0`, with
/// the score taken as a central finite difference of the log-likelihood
/// of sampled shares.
pub fn gadget_split_fisher_numeric<R: Rng>(
    t: f64,
    v_in: f64,
    q0: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<FisherEstimate> {
    gadget_split_fisher(t, v_in)?;
    if n_samples < 2 {
        return Err(Error::Invalid("need at least two samples".into()));
    }
    let sd = v_in.sqrt();
    let log_lik = |b: f64, q: f64| {
        let z = (b + 3.0 * q * t) / sd;
        -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    };
    let h = 1e-4 * sd.max(1.0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let a = sd * rng.sample::<f64, _>(StandardNormal);
        let b = -3.0 * q0 * t - a;
        let score = (log_lik(b, q0 + h) - log_lik(b, q0 - h)) / (2.0 * h);
        let s2 = score * score;
        sum += s2;
        sum_sq += s2 * s2;
    }
    let n = n_samples as f64;
    let value = sum / n;
    let var = ((sum_sq / n - value * value) * n / (n - 1.0)).max(0.0);
    Ok(FisherEstimate {
        value,
        std_err: (var / n).sqrt(),
        n_samples,
    })
}
