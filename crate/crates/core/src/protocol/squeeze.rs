use nalgebra::{DVector, Matrix2};
use rand::Rng;

use super::key::EncryptionKey;
use super::program::ProgramGate;
use super::session::SessionOptions;
use super::transcript::{digest_f64s, Direction, Payload, SessionTranscript};
use crate::error::{Error, Result};
use crate::gaussian::{apply_gate, apply_noisy_loss, GaussianGate, GaussianState};

#[derive(Debug, Clone)]
pub struct SqueezeRun {
    pub decrypted: GaussianState,
    pub plaintext: GaussianState,
    /// Gains `(g1, g2)` applied to the key's `(Q, P)` in the correction.
    pub gains: (f64, f64),
    /// `t_f t_b diag(e^{−r}, e^{r}) μ_in`.
    pub expected_mean: DVector<f64>,
    /// Largest deviation of the decrypted mean from `expected_mean`.
    pub mean_error: f64,
    pub key: EncryptionKey,
    pub transcript: SessionTranscript,
}

fn digest(s: &GaussianState) -> String {
    digest_f64s(s.mean.iter().chain(s.cov.iter()).copied())
}

/// Encrypted squeezing gate on one mode. The client removes the key with
/// quadrature gains `(g1, g2) = (t e^{−r}, t e^{r})`, `t` the assumed
/// round-trip transmission.
pub fn run_squeeze_gate<R: Rng>(
    input: &GaussianState,
    r: f64,
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<SqueezeRun> {
    opts.validate()?;
    if input.n_modes() != 1 {
        return Err(Error::SingleModeOnly(input.n_modes()));
    }
    let key = EncryptionKey::draw(1, opts.v_enc, rng)?;
    let client = key.client_copy(opts.key_correlation, rng)?;
    let ch = opts.channel;
    let squeeze = GaussianGate::Squeeze { mode: 0, r };
    let mut transcript = SessionTranscript::new();

    let (q, p) = key.displacements[0];
    let enc = apply_gate(
        &apply_gate(input, &GaussianGate::X { mode: 0, q })?,
        &GaussianGate::Z { mode: 0, p },
    )?;
    transcript.push(
        Direction::ClientToServer,
        Payload::Quantum {
            modes: vec![0],
            role: "encrypted input".into(),
            backend: "gaussian".into(),
            digest: digest(&enc),
        },
    );
    transcript.push(
        Direction::ClientToServer,
        Payload::Program {
            gates: vec![ProgramGate::from(squeeze)],
        },
    );
    let out = apply_gate(
        &apply_noisy_loss(&enc, ch.t_forward, ch.excess_noise, 0)?,
        &squeeze,
    )?;
    transcript.push(
        Direction::ServerToClient,
        Payload::Quantum {
            modes: vec![0],
            role: "output".into(),
            backend: "gaussian".into(),
            digest: digest(&out),
        },
    );
    let back = apply_noisy_loss(&out, ch.t_backward, ch.excess_noise, 0)?;

    let t_hat = opts.assumed().round_trip();
    let gains = (t_hat * (-r).exp(), t_hat * r.exp());
    let (cq, cp) = client.displacements[0];
    let decrypted = apply_gate(
        &apply_gate(
            &back,
            &GaussianGate::X {
                mode: 0,
                q: -gains.0 * cq,
            },
        )?,
        &GaussianGate::Z {
            mode: 0,
            p: -gains.1 * cp,
        },
    )?;
    let plaintext = apply_noisy_loss(
        &apply_gate(
            &apply_noisy_loss(input, ch.t_forward, ch.excess_noise, 0)?,
            &squeeze,
        )?,
        ch.t_backward,
        ch.excess_noise,
        0,
    )?;
    let t = ch.round_trip();
    let expected_mean = DVector::from_vec(vec![
        t * (-r).exp() * input.mean[0],
        t * r.exp() * input.mean[1],
    ]);
    let mean_error = (&decrypted.mean - &expected_mean).amax();
    Ok(SqueezeRun {
        decrypted,
        plaintext,
        gains,
        expected_mean,
        mean_error,
        key,
        transcript,
    })
}

/// `U2(T) = R(θ) S(r) R(φ)` as an operator product (`R(φ)` acts first).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerDecomposition {
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
}

fn rot(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

impl EulerDecomposition {
    pub fn symplectic(&self) -> Matrix2<f64> {
        rot(self.theta) * Matrix2::new((-self.r).exp(), 0.0, 0.0, self.r.exp()) * rot(self.phi)
    }

    /// The three gates in time order.
    pub fn gates(&self, mode: usize) -> [GaussianGate; 3] {
        [
            GaussianGate::Rotate {
                mode,
                theta: self.phi,
            },
            GaussianGate::Squeeze { mode, r: self.r },
            GaussianGate::Rotate {
                mode,
                theta: self.theta,
            },
        ]
    }
}

/// Rotation–squeeze–rotation form of the shear `U2(T)`, from the singular
/// value decomposition of its symplectic matrix.
pub fn u2_squeeze_equivalence(t: f64) -> EulerDecomposition {
    let m = Matrix2::new(1.0, 0.0, 2.0 * t, 1.0);
    let svd = m.svd(true, true);
    let mut u = svd.u.expect("u requested");
    let mut vt = svd.v_t.expect("v_t requested");
    let mut sv = svd.singular_values;
    if sv[0] > sv[1] {
        u.swap_columns(0, 1);
        vt.swap_rows(0, 1);
        sv.swap_rows(0, 1);
    }
    if u.determinant() < 0.0 {
        u.column_mut(1).neg_mut();
        vt.row_mut(1).neg_mut();
    }
    EulerDecomposition {
        theta: u[(1, 0)].atan2(u[(0, 0)]),
        r: -sv[0].ln(),
        phi: vt[(1, 0)].atan2(vt[(0, 0)]),
    }
}

/// `U2(T)` on encrypted data using only the server's squeezer: the client
/// rotates its phase reference by `φ` before encrypting and by `θ` after
/// decrypting. Returns the final state and the underlying squeeze run.
pub fn run_u2_via_squeeze<R: Rng>(
    input: &GaussianState,
    t: f64,
    opts: &SessionOptions,
    rng: &mut R,
) -> Result<(GaussianState, SqueezeRun)> {
    let e = u2_squeeze_equivalence(t);
    let rotated = apply_gate(
        input,
        &GaussianGate::Rotate {
            mode: 0,
            theta: e.phi,
        },
    )?;
    let run = run_squeeze_gate(&rotated, e.r, opts, rng)?;
    let out = apply_gate(
        &run.decrypted,
        &GaussianGate::Rotate {
            mode: 0,
            theta: e.theta,
        },
    )?;
    Ok((out, run))
}
