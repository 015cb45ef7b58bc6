use std::collections::BTreeMap;

use rand::Rng;

use super::channel::ChannelModel;
use super::framed::FramedState;
use super::key::EncryptionKey;
use super::program::{algebra_word, ProgramGate};
use super::transcript::{digest_f64s, Direction, Payload, SessionTranscript};
use crate::algebra::{compose_program_correction, Gate, GateWord, Poly};
use crate::error::{check_range, Error, Result};
use crate::fock::FockDensity;
use crate::gaussian::{
    apply_gate, apply_noisy_loss, apply_program, encrypt_ensemble, program_affine, GaussianGate,
    GaussianState,
};

/// Largest truncation leak a Fock-backend session tolerates.
pub const SESSION_LEAK_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionOptions {
    /// Per-quadrature key variance, internal units.
    pub v_enc: f64,
    pub channel: ChannelModel,
    /// Correlation between the client's record of the key and the applied
    /// key. Below 1 the decrypted state keeps residual noise
    /// `2(1 − ρ) v_enc` per quadrature on a lossless channel.
    pub key_correlation: f64,
    /// Channel the client assumes when scaling its correction; the true
    /// channel when `None`.
    pub assumed_channel: Option<ChannelModel>,
}

impl SessionOptions {
    pub fn new(v_enc: f64, channel: ChannelModel) -> Self {
        SessionOptions {
            v_enc,
            channel,
            key_correlation: 1.0,
            assumed_channel: None,
        }
    }

    pub fn assumed(&self) -> ChannelModel {
        self.assumed_channel.unwrap_or(self.channel)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("v_enc", self.v_enc, 0.0, f64::MAX)?;
        check_range("key_correlation", self.key_correlation, 0.0, 1.0)?;
        self.channel.validate()?;
        self.assumed().validate()
    }
}

/// Key-averaged states at each protocol stage, as a server or client
/// observing many sessions would see them.
#[derive(Debug, Clone, PartialEq)]
pub struct StageStates {
    pub input: GaussianState,
    pub encrypted: GaussianState,
    pub post_gate: GaussianState,
    pub decrypted: GaussianState,
}

#[derive(Debug, Clone)]
pub struct GaussianRun {
    /// This session's output after the client's correction.
    pub decrypted: GaussianState,
    /// The same program and channel without encryption.
    pub plaintext: GaussianState,
    /// Key-averaged state arriving at the server.
    pub server_view: GaussianState,
    pub stages: StageStates,
    /// Displacement `(q, p)` the client applied to each mode.
    pub correction: Vec<(f64, f64)>,
    pub key: EncryptionKey,
    pub transcript: SessionTranscript,
}

#[derive(Debug, Clone)]
pub struct FockRun {
    pub decrypted: FockDensity,
    pub correction: Vec<(f64, f64)>,
    pub key: EncryptionKey,
    pub transcript: SessionTranscript,
}

pub(super) fn bound_value(p: &Poly, bindings: &BTreeMap<String, f64>) -> Result<f64> {
    p.bind(bindings)
        .as_constant()
        .ok_or_else(|| Error::Invalid(format!("unbound parameter in {p}")))
}

/// Net displacement of a word made of X, Z and phase elements.
pub(super) fn word_displacements(
    word: &GateWord,
    bindings: &BTreeMap<String, f64>,
    n_modes: usize,
) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(0.0, 0.0); n_modes];
    for g in word.gates() {
        match g {
            Gate::X { mode, s } => out[*mode].0 += bound_value(s, bindings)?,
            Gate::Z { mode, s } => out[*mode].1 += bound_value(s, bindings)?,
            Gate::Phase { .. } => {}
            other => {
                return Err(Error::Unsupported(format!(
                    "correction element {other} is not a displacement"
                )))
            }
        }
    }
    Ok(out)
}

/// The client's correction displacements for a Gaussian program: the
/// symbolic program correction bound to the key scaled by the assumed
/// forward transmission, then scaled by the assumed return transmission.
pub fn correction_displacements(
    program: &[ProgramGate],
    key: &EncryptionKey,
    assumed: &ChannelModel,
) -> Result<Vec<(f64, f64)>> {
    let n = key.n_modes();
    let pc = compose_program_correction(&algebra_word(program), &EncryptionKey::symbols(n))?;
    if !pc.gadget_u2.is_empty() {
        return Err(Error::Unsupported("program needs the cubic gadget".into()));
    }
    let out = word_displacements(&pc.correction, &key.bindings(assumed.t_forward), n)?;
    Ok(out
        .into_iter()
        .map(|(q, p)| (assumed.t_backward * q, assumed.t_backward * p))
        .collect())
}

fn displace(state: &GaussianState, d: &[(f64, f64)]) -> Result<GaussianState> {
    let mut s = state.clone();
    for (mode, &(q, p)) in d.iter().enumerate() {
        s = apply_gate(&s, &GaussianGate::X { mode, q })?;
        s = apply_gate(&s, &GaussianGate::Z { mode, p })?;
    }
    Ok(s)
}

fn channel_pass(state: &GaussianState, t: f64, excess: f64) -> Result<GaussianState> {
    (0..state.n_modes()).try_fold(state.clone(), |s, k| apply_noisy_loss(&s, t, excess, k))
}

fn gaussian_digest(s: &GaussianState) -> String {
    digest_f64s(s.mean.iter().chain(s.cov.iter()).copied())
}

fn quantum(n_modes: usize, role: &str, backend: &str, digest: String) -> Payload {
    Payload::Quantum {
        modes: (0..n_modes).collect(),
        role: role.into(),
        backend: backend.into(),
        digest,
    }
}

/// Encrypt, send through the forward channel, run `program` on the server,
/// return through the backward channel and decrypt.
pub fn run_gaussian_program<R: Rng>(
    input: &GaussianState,
    program: &[GaussianGate],
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<GaussianRun> {
    opts.validate()?;
    let n = input.n_modes();
    program_affine(program, n)?;
    let key = EncryptionKey::draw(n, opts.v_enc, rng)?;
    let client_key = key.client_copy(opts.key_correlation, rng)?;
    let ch = opts.channel;
    let gates: Vec<ProgramGate> = program.iter().map(|&g| g.into()).collect();
    let mut transcript = SessionTranscript::new();

    let encrypted = displace(input, &key.displacements)?;
    transcript.push(
        Direction::ClientToServer,
        quantum(
            n,
            "encrypted input",
            "gaussian",
            gaussian_digest(&encrypted),
        ),
    );
    transcript.push(
        Direction::ClientToServer,
        Payload::Program {
            gates: gates.clone(),
        },
    );
    let arrived = channel_pass(&encrypted, ch.t_forward, ch.excess_noise)?;
    let computed = apply_program(&arrived, program)?;
    transcript.push(
        Direction::ServerToClient,
        quantum(n, "output", "gaussian", gaussian_digest(&computed)),
    );
    let returned = channel_pass(&computed, ch.t_backward, ch.excess_noise)?;
    let correction = correction_displacements(&gates, &client_key, &opts.assumed())?;
    let decrypted = displace(&returned, &correction)?;

    let plaintext = channel_pass(
        &apply_program(
            &channel_pass(input, ch.t_forward, ch.excess_noise)?,
            program,
        )?,
        ch.t_backward,
        ch.excess_noise,
    )?;
    let encrypted_ens =
        (0..n).try_fold(input.clone(), |s, k| encrypt_ensemble(&s, opts.v_enc, k))?;
    let server_view = channel_pass(&encrypted_ens, ch.t_forward, ch.excess_noise)?;
    let post_gate = apply_program(&server_view, program)?;
    let (s_lin, _) = program_affine(program, n)?;
    let (t, th) = (ch.round_trip(), opts.assumed().round_trip());
    let v_res = (opts.v_enc * (t * t + th * th - 2.0 * t * th * opts.key_correlation)).max(0.0);
    let decrypted_ens = GaussianState::new(
        plaintext.mean.clone(),
        &plaintext.cov + (&s_lin * s_lin.transpose()) * v_res,
    )?;

    Ok(GaussianRun {
        decrypted,
        plaintext,
        server_view,
        stages: StageStates {
            input: input.clone(),
            encrypted: encrypted_ens,
            post_gate,
            decrypted: decrypted_ens,
        },
        correction,
        key,
        transcript,
    })
}

/// [`run_gaussian_program`] on the truncated number-basis backend. Draws
/// the same key as the Gaussian run for the same RNG state. With
/// `frame_key` the key is carried as an exact frame, so large keys need
/// no extra truncation; otherwise every displacement acts on the truncated
/// state.
pub fn run_gaussian_program_fock<R: Rng>(
    input: &FockDensity,
    program: &[GaussianGate],
    opts: &SessionOptions,
    rng: &mut R,
    frame_key: bool,
) -> Result<FockRun> {
    opts.validate()?;
    let n = input.n_modes;
    program_affine(program, n)?;
    let key = EncryptionKey::draw(n, opts.v_enc, rng)?;
    let client_key = key.client_copy(opts.key_correlation, rng)?;
    let ch = opts.channel;
    let gates: Vec<ProgramGate> = program.iter().map(|&g| g.into()).collect();
    let mut transcript = SessionTranscript::new();

    let mut state = FramedState::new(input.clone(), !frame_key);
    for (mode, &(q, p)) in key.displacements.iter().enumerate() {
        state.displace(mode, q, p)?;
    }
    transcript.push(
        Direction::ClientToServer,
        quantum(n, "encrypted input", "fock", state.digest()),
    );
    transcript.push(
        Direction::ClientToServer,
        Payload::Program {
            gates: gates.clone(),
        },
    );
    for mode in 0..n {
        state.loss(ch.t_forward, ch.excess_noise, mode)?;
    }
    for g in program {
        state.gaussian_gate(g)?;
    }
    transcript.push(
        Direction::ServerToClient,
        quantum(n, "output", "fock", state.digest()),
    );
    for mode in 0..n {
        state.loss(ch.t_backward, ch.excess_noise, mode)?;
    }
    let correction = correction_displacements(&gates, &client_key, &opts.assumed())?;
    for (mode, &(q, p)) in correction.iter().enumerate() {
        state.displace(mode, q, p)?;
    }
    let decrypted = state.materialize()?;
    decrypted.check_leak(SESSION_LEAK_BUDGET, "Fock session output")?;
    Ok(FockRun {
        decrypted,
        correction,
        key,
        transcript,
    })
}
