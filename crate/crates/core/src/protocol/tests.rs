use std::collections::BTreeSet;
use std::f64::consts::{LN_2, PI};

use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use super::gadget::q_dephase;
use super::*;
use crate::algebra::table_rows;
use crate::fock::{apply, apply_loss, build_gate, q_multiplier, FockDensity, FockGate, FockKet};
use crate::gaussian::{
    apply_gate, apply_program, gaussian_fidelity, program_affine, GaussianGate, GaussianState,
};
use crate::rng::seeded;

fn coherent(re: f64, im: f64) -> GaussianState {
    GaussianState::coherent(Complex64::new(re, im))
}

fn lossless(v_enc: f64) -> SessionOptions {
    SessionOptions::new(v_enc, ChannelModel::lossless())
}

fn random_gate<R: Rng>(rng: &mut R, n_modes: usize) -> GaussianGate {
    let mode = rng.random_range(0..n_modes);
    let x: f64 = rng.random_range(-1.0..1.0);
    match rng.random_range(0..7) {
        0 => GaussianGate::X { mode, q: x },
        1 => GaussianGate::Z { mode, p: x },
        2 => GaussianGate::U2 { mode, t: 0.5 * x },
        3 => GaussianGate::F { mode },
        4 if n_modes > 1 => GaussianGate::Cz { a: 0, b: 1 },
        5 => GaussianGate::Squeeze { mode, r: 0.4 * x },
        _ => GaussianGate::Rotate {
            mode,
            theta: PI * x,
        },
    }
}

fn random_program<R: Rng>(rng: &mut R, n_modes: usize) -> Vec<GaussianGate> {
    let len = rng.random_range(0..=6);
    (0..len).map(|_| random_gate(rng, n_modes)).collect()
}

// Every field name a transcript may contain.
const TRANSCRIPT_FIELDS: &[&str] = &[
    "messages",
    "step",
    "direction",
    "payload",
    "type",
    "modes",
    "role",
    "backend",
    "digest",
    "gates",
    "gate",
    "mode",
    "q",
    "p",
    "t",
    "a",
    "b",
    "r",
    "theta",
    "m1",
];

fn collect_keys(v: &serde_json::Value, out: &mut BTreeSet<String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                out.insert(k.clone());
                collect_keys(x, out);
            }
        }
        serde_json::Value::Array(xs) => xs.iter().for_each(|x| collect_keys(x, out)),
        _ => {}
    }
}

fn numbers(v: &serde_json::Value, out: &mut Vec<f64>) {
    match v {
        serde_json::Value::Number(n) => out.push(n.as_f64().unwrap()),
        serde_json::Value::Object(m) => m.values().for_each(|x| numbers(x, out)),
        serde_json::Value::Array(xs) => xs.iter().for_each(|x| numbers(x, out)),
        _ => {}
    }
}

fn assert_no_key(transcript: &SessionTranscript, key: &EncryptionKey) {
    let v: serde_json::Value = serde_json::from_str(&transcript.to_json()).unwrap();
    let mut keys = BTreeSet::new();
    collect_keys(&v, &mut keys);
    for k in &keys {
        assert!(
            TRANSCRIPT_FIELDS.contains(&k.as_str()),
            "unexpected field {k}"
        );
    }
    let mut nums = Vec::new();
    numbers(&v, &mut nums);
    for &(q, p) in &key.displacements {
        for x in [q, p] {
            assert!(
                nums.iter().all(|&n| n != x),
                "key component {x} in transcript"
            );
        }
    }
}

#[test]
fn gaussian_transcript_has_two_quantum_uses_and_no_key() {
    let mut rng = seeded(1);
    let prog = vec![GaussianGate::F { mode: 0 }, GaussianGate::Cz { a: 0, b: 1 }];
    let input = coherent(0.3, -0.2).append(&GaussianState::vacuum(1));
    let run = run_gaussian_program(&input, &prog, &lossless(5.0), &mut rng).unwrap();
    assert_eq!(run.transcript.quantum_uses(), 2);
    assert!(run.transcript.outcomes().is_empty());
    assert_no_key(&run.transcript, &run.key);
    let back = SessionTranscript::from_json(&run.transcript.to_json()).unwrap();
    assert_eq!(back, run.transcript);
}

#[test]
fn transcript_rejects_unknown_fields() {
    let bad = r#"{"messages":[{"step":0,"direction":"client_to_server","payload":{"type":"share","b":1.0,"q":2.0}}]}"#;
    assert!(SessionTranscript::from_json(bad).is_err());
}

#[test]
fn identity_program_is_transparent_without_loss() {
    let mut rng = seeded(2);
    let input = GaussianState::squeezed_vacuum(0.3);
    let run = run_gaussian_program(&input, &[], &lossless(10.0), &mut rng).unwrap();
    assert!(run.decrypted.max_moment_distance(&input) < 1e-12);
}

#[test]
fn server_view_adds_key_variance() {
    let mut rng = seeded(3);
    let input = coherent(0.5, 0.1).append(&GaussianState::squeezed_vacuum(0.4));
    let v = 7.5;
    let run = run_gaussian_program(&input, &[], &lossless(v), &mut rng).unwrap();
    let expected = &input.cov + nalgebra::DMatrix::identity(4, 4) * v;
    assert_eq!(run.server_view.cov, expected);
    assert_eq!(run.server_view.mean, input.mean);
}

#[test]
fn fuzzed_programs_round_trip_exactly() {
    let mut rng = seeded(4);
    for _ in 0..200 {
        let prog = random_program(&mut rng, 2);
        let input = coherent(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            .append(&GaussianState::squeezed_vacuum(rng.random_range(-0.5..0.5)));
        let run = run_gaussian_program(&input, &prog, &lossless(4.0), &mut rng).unwrap();
        let d = run.decrypted.max_moment_distance(&run.plaintext);
        assert!(d < 1e-10, "{prog:?}: {d:e}");
    }
}

#[test]
fn lossy_identity_gives_t_squared_alpha_plus_t_beta() {
    let mut rng = seeded(5);
    for &t in &[0.3, 0.6, 0.9] {
        let (alpha, beta) = (Complex64::new(0.7, -0.4), Complex64::new(-0.2, 0.5));
        let input = GaussianState::coherent(alpha);
        let b = GaussianState::coherent(beta).mean;
        let prog = [
            GaussianGate::X { mode: 0, q: b[0] },
            GaussianGate::Z { mode: 0, p: b[1] },
        ];
        let opts = SessionOptions::new(3.0, ChannelModel::symmetric(t).unwrap());
        let run = run_gaussian_program(&input, &prog, &opts, &mut rng).unwrap();
        let expect = GaussianState::coherent(t * t * alpha + t * beta).mean;
        assert!((&run.decrypted.mean - expect).amax() < 1e-12);
        assert!((run.decrypted.cov[(0, 0)] - 0.5).abs() < 1e-12);
    }
}

#[test]
fn displacement_gate_uses_first_table_row() {
    let key = EncryptionKey::explicit(vec![(1.5, -0.25)]);
    let prog = [ProgramGate::Z { mode: 0, p: 0.8 }];
    let c = correction_displacements(&prog, &key, &ChannelModel::lossless()).unwrap();
    assert_eq!(c, vec![(-1.5, 0.25)]);
    let mut rng = seeded(6);
    let input = coherent(0.2, 0.2);
    let run = run_gaussian_program(
        &input,
        &[GaussianGate::Z { mode: 0, p: 0.8 }],
        &lossless(2.0),
        &mut rng,
    )
    .unwrap();
    let direct = apply_gate(&input, &GaussianGate::Z { mode: 0, p: 0.8 }).unwrap();
    assert!(run.decrypted.max_moment_distance(&direct) < 1e-12);
}

#[test]
fn cubic_program_is_refused_by_the_gaussian_path() {
    let key = EncryptionKey::explicit(vec![(1.0, 0.0)]);
    let prog = [ProgramGate::U3 { mode: 0, t: 0.1 }];
    assert!(correction_displacements(&prog, &key, &ChannelModel::lossless()).is_err());
}

#[test]
fn decryption_fidelity_falls_with_loss() {
    let input = coherent(0.6, 0.3);
    let mut last = f64::INFINITY;
    for i in 0..=10 {
        let t = 1.0 - 0.08 * i as f64;
        let opts = SessionOptions::new(2.0, ChannelModel::symmetric(t).unwrap());
        let run = run_gaussian_program(&input, &[], &opts, &mut seeded(7)).unwrap();
        let f = gaussian_fidelity(&run.stages.decrypted, &input).unwrap();
        assert!(f <= last + 1e-15, "t = {t}");
        last = f;
    }
}

#[test]
fn decorrelated_key_leaves_residual_noise() {
    let (v, rho) = (3.0, 0.9);
    let input = coherent(0.0, 0.0);
    let mut opts = lossless(v);
    opts.key_correlation = rho;
    let mut rng = seeded(8);
    let n = 20_000;
    let mut sq = 0.0;
    let mut ens = None;
    for _ in 0..n {
        let run = run_gaussian_program(&input, &[], &opts, &mut rng).unwrap();
        sq += run.decrypted.mean[0].powi(2);
        ens = Some(run.stages.decrypted);
    }
    let expected = 2.0 * (1.0 - rho) * v;
    assert!((ens.unwrap().cov[(0, 0)] - 0.5 - expected).abs() < 1e-12);
    assert!((sq / n as f64 / expected - 1.0).abs() < 0.05);
}

#[test]
fn squeeze_gate_examples() {
    let input = coherent(0.4, -0.3);
    let plain = run_gaussian_program(&input, &[], &lossless(5.0), &mut seeded(9)).unwrap();
    let zero = run_squeeze_gate(&input, 0.0, &lossless(5.0), &mut seeded(9)).unwrap();
    assert!(zero.decrypted.max_moment_distance(&plain.decrypted) < 1e-12);

    let run = run_squeeze_gate(&input, LN_2, &lossless(5.0), &mut seeded(10)).unwrap();
    assert!(run.mean_error < 1e-12);
    assert_eq!(run.transcript.quantum_uses(), 2);

    let t = 10f64.powf(-0.25);
    let opts = SessionOptions::new(5.0, ChannelModel::symmetric(t).unwrap());
    let run = run_squeeze_gate(&input, LN_2, &opts, &mut seeded(11)).unwrap();
    assert!((&run.decrypted.cov - &run.plaintext.cov).amax() < 1e-12);
    assert!(run.mean_error < 1e-12);
    assert!((run.gains.0 - t * t / 2.0).abs() < 1e-15 && (run.gains.1 - 2.0 * t * t).abs() < 1e-12);
}

fn u2_symplectic(t: f64) -> nalgebra::DMatrix<f64> {
    program_affine(&[GaussianGate::U2 { mode: 0, t }], 1)
        .unwrap()
        .0
}

#[test]
fn u2_euler_decomposition() {
    let e = u2_squeeze_equivalence(0.0);
    assert!(e.r.abs() < 1e-12);
    let s = (e.theta + e.phi).rem_euclid(2.0 * PI);
    assert!(s.min(2.0 * PI - s) < 1e-12);
    let mut rng = seeded(12);
    for _ in 0..50 {
        let t = rng.random_range(-3.0..3.0);
        let e = u2_squeeze_equivalence(t);
        let (s, _) = program_affine(&e.gates(0), 1).unwrap();
        assert!((s - u2_symplectic(t)).amax() < 1e-12, "T = {t}");
    }
}

#[test]
fn u2_through_squeezer_matches_plain_u2() {
    let mut rng = seeded(13);
    for _ in 0..20 {
        let t = rng.random_range(-1.0..1.0);
        let input = coherent(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (out, _) = run_u2_via_squeeze(&input, t, &lossless(8.0), &mut rng).unwrap();
        let direct = apply_gate(&input, &GaussianGate::U2 { mode: 0, t }).unwrap();
        assert!((&out.mean - &direct.mean).amax() < 1e-10);
        assert!((&out.cov - &direct.cov).amax() < 1e-10);
    }
}

#[test]
fn channel_estimate_is_consistent() {
    let mut rng = seeded(14);
    for &t in &[1.0, 0.8] {
        let est =
            estimate_channel(1000, &ChannelModel::symmetric(t).unwrap(), 1.0, &mut rng).unwrap();
        assert!(est.std_err < 0.013, "{est:?}");
        assert!((est.t_hat - t).abs() < 4.0 * est.std_err, "{est:?}");
        assert!((est.residual_variance - 0.5).abs() < 0.06);
    }
}

#[test]
fn channel_estimate_error_bar_is_calibrated() {
    let mut rng = seeded(15);
    let ch = ChannelModel::symmetric(0.7).unwrap();
    let ests: Vec<_> = (0..200)
        .map(|_| estimate_channel(200, &ch, 4.0, &mut rng).unwrap())
        .collect();
    let mean = ests.iter().map(|e| e.t_hat).sum::<f64>() / 200.0;
    let sd = (ests.iter().map(|e| (e.t_hat - mean).powi(2)).sum::<f64>() / 199.0).sqrt();
    let se = ests.iter().map(|e| e.std_err).sum::<f64>() / 200.0;
    assert!((sd / se - 1.0).abs() < 0.15, "sd {sd} se {se}");
    assert!((mean - 0.7).abs() < 3.0 * sd / 200f64.sqrt());
}

#[test]
fn channel_estimate_rejects_bad_designs() {
    let ch = ChannelModel::lossless();
    assert!(estimate_channel(9, &ch, 1.0, &mut seeded(0)).is_err());
    assert!(matches!(
        estimate_channel(50, &ch, 0.0, &mut seeded(0)),
        Err(crate::Error::Degenerate(_))
    ));
}

#[test]
fn epr_without_squeezing_carries_no_key() {
    let e = epr_encryption_ensemble(0.0, 1000, &mut seeded(16)).unwrap();
    assert!(e.ensemble_cov.amax() < 1e-15);
    assert!((e.conditional_purity - 1.0).abs() < 1e-12);
}

#[test]
fn epr_ensemble_matches_prepare_and_measure() {
    let e = epr_encryption_ensemble(2.5, 200_000, &mut seeded(17)).unwrap();
    assert!(e.conditional_purity >= 0.99);
    assert!((e.conditional_cov - nalgebra::Matrix2::identity() * 0.5).amax() < 1e-9);
    for k in 0..2 {
        assert!((e.ensemble_cov[(k, k)] / e.v_enc - 1.0).abs() < 0.02);
    }
    assert!(e.ensemble_cov[(0, 1)].abs() < 0.02 * e.v_enc);
    assert!(e.excess_noise <= 0.01 * e.v_enc);
    assert!((e.excess_noise / e.excess_noise_analytic - 1.0).abs() < 0.02);
}

#[test]
fn epr_excess_noise_decreases() {
    let mut last = f64::INFINITY;
    for i in 0..8 {
        let e = epr_encryption_ensemble(0.4 * i as f64, 50_000, &mut seeded(18)).unwrap();
        assert!(e.excess_noise < last);
        last = e.excess_noise;
    }
}

#[test]
fn fisher_information_of_the_share() {
    assert_eq!(gadget_split_fisher(0.0, 2.0).unwrap(), 0.0);
    assert!(gadget_split_fisher(0.1, 0.0).is_err());
    let f1 = gadget_split_fisher(0.2, 1.5).unwrap();
    assert!((f1 - 9.0 * 0.04 / 1.5).abs() < 1e-15);
    assert!((gadget_split_fisher(0.2, 3.0).unwrap() / f1 - 0.5).abs() < 1e-15);
    let num = gadget_split_fisher_numeric(0.2, 1.5, 0.7, 100_000, &mut seeded(19)).unwrap();
    assert!((num.value / f1 - 1.0).abs() < 0.01, "{num:?} vs {f1}");
    assert!((num.std_err / f1 - 2f64.sqrt() / 100_000f64.sqrt()).abs() < 1e-3);
    let zero = gadget_split_fisher_numeric(0.0, 1.5, 0.7, 1000, &mut seeded(19)).unwrap();
    assert_eq!(zero.value, 0.0);
}

fn coherent_ket(dim: usize, re: f64, im: f64) -> FockKet {
    FockKet::coherent(dim, Complex64::new(re, im)).unwrap()
}

/// `⟨ψ|ρ|ψ⟩` for a normalized ket.
fn overlap(psi: &FockKet, rho: &FockDensity) -> f64 {
    let v = psi.normalized().amps;
    (v.adjoint() * &rho.matrix * &v)[(0, 0)].re / rho.trace()
}

fn apply_plain(program: &[ProgramGate], rho: &FockDensity) -> FockDensity {
    program.iter().fold(rho.clone(), |s, g| {
        let (kind, modes) = g.to_fock();
        apply(&build_gate(kind, s.dim).unwrap(), &s, &modes).unwrap()
    })
}

#[test]
fn gadget_transcript_shape() {
    let input = coherent_ket(48, 0.3, 0.1).to_density();
    let prog = [ProgramGate::U3 { mode: 0, t: 0.05 }];
    let run = run_with_gadget(
        &input,
        &prog,
        &GadgetConfig::default(),
        &lossless(20.0),
        &mut seeded(20),
    )
    .unwrap();
    assert_eq!(run.transcript.quantum_uses(), 3);
    assert_eq!(run.transcript.outcomes(), vec![run.record.m1]);
    assert_eq!(run.transcript.shares(), vec![run.record.b]);
    let q = run.key.displacements[0].0;
    let lhs = run.record.a + run.record.b;
    assert!((lhs + 3.0 * q * 0.05).abs() <= 1e-12 * (1.0 + run.record.a.abs()));
    assert_no_key(&run.transcript, &run.key);
}

#[test]
fn gadget_reproduces_the_cubic_gate() {
    let dim = 64;
    let mut rng = seeded(21);
    for &(t, re, im) in &[
        (0.05, 0.5, 0.0),
        (0.03, -0.2, 0.4),
        (0.0, 0.35, -0.35),
        (-0.05, 0.0, -0.5),
    ] {
        let psi = coherent_ket(dim, re, im);
        let prog = [ProgramGate::U3 { mode: 0, t }];
        let target = apply_ket_u3(&psi, t);
        for _ in 0..5 {
            let run = run_with_gadget(
                &psi.to_density(),
                &prog,
                &GadgetConfig::default(),
                &lossless(25.0),
                &mut rng,
            )
            .unwrap();
            let f = overlap(&target, &run.decrypted);
            assert!(f >= 0.98, "T = {t}: {f}");
        }
    }
}

fn apply_ket_u3(psi: &FockKet, t: f64) -> FockKet {
    crate::fock::apply_ket(&build_gate(FockGate::U3(t), psi.dim).unwrap(), psi, &[0]).unwrap()
}

#[test]
fn gadget_inside_a_longer_program_with_return_loss() {
    let dim = 56;
    let psi = coherent_ket(dim, 0.2, -0.3).to_density();
    let prog = [
        ProgramGate::F { mode: 0 },
        ProgramGate::X { mode: 0, q: 0.3 },
        ProgramGate::U3 { mode: 0, t: 0.04 },
        ProgramGate::U2 { mode: 0, t: -0.1 },
        ProgramGate::Rotate {
            mode: 0,
            theta: 0.7,
        },
    ];
    let mut opts = lossless(16.0);
    opts.channel = ChannelModel::new(1.0, 0.9, 0.0).unwrap();
    let cfg = GadgetConfig {
        r_anc: 3.0,
        ..Default::default()
    };
    let target = apply_loss(&apply_plain(&prog, &psi), 0.9, 0).unwrap();
    let mut rng = seeded(22);
    for _ in 0..5 {
        let run = run_with_gadget(&psi, &prog, &cfg, &opts, &mut rng).unwrap();
        let f = crate::fock::fock_fidelity(&target, &run.decrypted).unwrap();
        assert!(f > 0.99, "{f}");
    }
}

#[test]
fn gadget_refuses_unsupported_setups() {
    let psi = FockDensity::vacuum(16).unwrap();
    let cfg = GadgetConfig::default();
    let u3 = ProgramGate::U3 { mode: 0, t: 0.1 };
    let rng = &mut seeded(0);
    assert!(run_with_gadget(
        &psi,
        &[ProgramGate::F { mode: 0 }],
        &cfg,
        &lossless(1.0),
        rng
    )
    .is_err());
    assert!(run_with_gadget(&psi, &[u3, u3], &cfg, &lossless(1.0), rng).is_err());
    let lossy = SessionOptions::new(1.0, ChannelModel::symmetric(0.9).unwrap());
    assert!(matches!(
        run_with_gadget(&psi, &[u3], &cfg, &lossy, rng),
        Err(crate::Error::Unsupported(_))
    ));
}

#[test]
fn gadget_average_matches_the_kraus_integral() {
    let dim = 40;
    let r_anc = 1.0;
    let psi = coherent_ket(dim, 0.4, 0.2).to_density();
    let avg = gadget_average_output(&psi, 0.05, r_anc).unwrap();
    let rho = apply(&build_gate(FockGate::U3(0.05), dim).unwrap(), &psi, &[0]).unwrap();
    let s2 = 0.5 * (2.0 * r_anc).exp();
    let norm = (2.0 * PI * s2).powf(-0.25);
    let (lo, hi, n) = (-12.0 * s2.sqrt(), 12.0 * s2.sqrt(), 1201);
    let h = (hi - lo) / (n - 1) as f64;
    let mut acc = crate::fock::CMat::zeros(dim, dim);
    for i in 0..n {
        let y = lo + h * i as f64;
        let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        let k = q_multiplier(dim, dim, |x| {
            Complex64::new(norm * (-(x + y).powi(2) / (4.0 * s2)).exp(), 0.0)
        })
        .unwrap();
        acc += apply(&k, &rho, &[0]).unwrap().matrix * Complex64::new(w, 0.0);
    }
    assert!((acc - &avg.matrix).camax() < 1e-9);
}

#[test]
fn dephasing_adds_momentum_variance() {
    let dim = 48;
    let psi = coherent_ket(dim, 0.5, -0.3).to_density();
    let v = 0.3;
    let out = q_dephase(&psi, v);
    let (m0, c0) = psi.moments();
    let (m1, c1) = out.moments();
    assert!((&m1 - &m0).amax() < 1e-9);
    assert!((c1[(0, 0)] - c0[(0, 0)]).abs() < 1e-9);
    assert!((c1[(1, 1)] - c0[(1, 1)] - v).abs() < 1e-9);
}

#[test]
fn gadget_fidelity_grows_with_ancilla_squeezing() {
    let dim = 64;
    let psi = coherent_ket(dim, 0.5, 0.0);
    let target = apply_ket_u3(&psi, 0.05);
    let mut last = 0.0;
    for &r in &[1.0, 1.5, 2.0, 2.5, 3.0] {
        let f = overlap(
            &target,
            &gadget_average_output(&psi.to_density(), 0.05, r).unwrap(),
        );
        assert!(f >= last - 0.002, "r = {r}: {f} < {last}");
        last = f;
    }
    assert!(last >= 0.999);
}

#[test]
fn trivial_gadget_fidelity_is_set_by_finite_squeezing() {
    let dim = 64;
    let psi = coherent_ket(dim, 0.3, 0.2);
    let f = overlap(
        &psi,
        &gadget_average_output(&psi.to_density(), 0.0, 2.0).unwrap(),
    );
    let v = 0.5 * (-4.0f64).exp();
    assert!((f - 1.0 / (1.0 + v).sqrt()).abs() < 1e-9, "{f}");
    let f3 = overlap(
        &psi,
        &gadget_average_output(&psi.to_density(), 0.0, 3.0).unwrap(),
    );
    assert!(f3 > 0.999);
}

#[test]
fn imperfect_key_record_still_runs_the_gadget() {
    let psi = coherent_ket(48, 0.2, 0.0).to_density();
    let mut opts = lossless(4.0);
    opts.key_correlation = 0.999;
    let prog = [ProgramGate::U3 { mode: 0, t: 0.02 }];
    let run = run_with_gadget(
        &psi,
        &prog,
        &GadgetConfig::default(),
        &opts,
        &mut seeded(23),
    )
    .unwrap();
    let q = run.key.displacements[0].0;
    assert!((run.record.a + run.record.b + 3.0 * q * 0.02).abs() > 0.0);
    assert!(run.leak < 1e-3);
}

#[test]
fn cross_backend_moments_agree() {
    let mut rng = seeded(24);
    for i in 0..6 {
        let prog: Vec<GaussianGate> = (0..3)
            .map(|_| match random_gate(&mut rng, 1) {
                GaussianGate::Squeeze { mode, r } => GaussianGate::Squeeze { mode, r: 0.5 * r },
                g => g,
            })
            .collect();
        let g_in = coherent(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let f_in = FockDensity::from_gaussian(&g_in, 64).unwrap();
        let t = rng.random_range(0.7..1.0);
        let opts = SessionOptions::new(0.05, ChannelModel::symmetric(t).unwrap());
        let g = run_gaussian_program(&g_in, &prog, &opts, &mut seeded(100 + i)).unwrap();
        for frame in [true, false] {
            let f = run_gaussian_program_fock(&f_in, &prog, &opts, &mut seeded(100 + i), frame)
                .unwrap();
            assert_eq!(f.key, g.key);
            let (m, c) = f.decrypted.moments();
            let scale = 1.0 + g.decrypted.mean.amax();
            assert!((&m - &g.decrypted.mean).amax() < 1e-4 * scale, "{prog:?}");
            assert!((&c - &g.decrypted.cov).amax() < 1e-4 * (1.0 + g.decrypted.cov.amax()));
        }
    }
}

#[test]
fn framed_key_handles_large_displacements() {
    let dim = 32;
    let g_in = coherent(0.2, 0.1);
    let f_in = FockDensity::from_gaussian(&g_in, dim).unwrap();
    let prog = [
        GaussianGate::F { mode: 0 },
        GaussianGate::U2 { mode: 0, t: 0.2 },
    ];
    let opts = lossless(400.0);
    let g = run_gaussian_program(&g_in, &prog, &opts, &mut seeded(25)).unwrap();
    let f = run_gaussian_program_fock(&f_in, &prog, &opts, &mut seeded(25), true).unwrap();
    let (m, _) = f.decrypted.moments();
    assert!((&m - &g.decrypted.mean).amax() < 1e-6);
}

#[test]
fn table_rows_hold_on_the_fock_backend() {
    let mut rng = seeded(26);
    for _ in 0..3 {
        for (gate, enc) in table_rows() {
            let n = enc.len();
            let mut bind = std::collections::BTreeMap::new();
            let mut r = || rng.random_range(-0.3..0.3);
            bind.insert("S".to_string(), r());
            bind.insert("T".to_string(), r());
            let numeric = match &gate {
                crate::algebra::Gate::X { mode, s } => {
                    crate::algebra::Gate::x(*mode, s.bind(&bind))
                }
                crate::algebra::Gate::Z { mode, s } => {
                    crate::algebra::Gate::z(*mode, s.bind(&bind))
                }
                crate::algebra::Gate::U2 { mode, t } => {
                    crate::algebra::Gate::u2(*mode, t.bind(&bind))
                }
                crate::algebra::Gate::U3 { mode, t } => {
                    crate::algebra::Gate::u3(*mode, t.bind(&bind))
                }
                g => g.clone(),
            };
            let keys: Vec<(f64, f64)> = (0..n).map(|_| (r(), r())).collect();
            let alpha: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(r() * 2.0, r() * 2.0))
                .collect();
            let check =
                fock_table_check(&numeric, &keys, &alpha, if n == 2 { 40 } else { 64 }).unwrap();
            assert!(check.fidelity >= 0.999, "{check:?}");
        }
    }
}

#[test]
fn wrong_correction_fails_the_fock_check() {
    let psi = coherent_ket(48, 0.5, 0.0);
    let g = apply_ket_u3(&psi, 0.2);
    let mut bad =
        crate::fock::apply_ket(&build_gate(FockGate::X(0.3), 48).unwrap(), &psi, &[0]).unwrap();
    bad = apply_ket_u3(&bad, 0.2);
    bad = crate::fock::apply_ket(&build_gate(FockGate::X(-0.3), 48).unwrap(), &bad, &[0]).unwrap();
    let f = g.amps.dotc(&bad.amps).norm_sqr();
    assert!(f < 0.99);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_lossless_round_trip(seed in any::<u64>(), v in 0.1f64..20.0) {
        let mut rng = seeded(seed);
        let prog = random_program(&mut rng, 2);
        let input = coherent(0.1, 0.2).append(&GaussianState::thermal(0.3));
        let run = run_gaussian_program(&input, &prog, &lossless(v), &mut rng).unwrap();
        let plain = apply_program(&input, &prog).unwrap();
        prop_assert!(run.decrypted.max_moment_distance(&plain) < 1e-9);
        prop_assert_eq!(run.transcript.quantum_uses(), 2);
    }

    #[test]
    fn prop_share_sums_to_shear(seed in any::<u64>(), t in -0.05f64..0.05, v in 1.0f64..50.0) {
        let psi = FockDensity::vacuum(24).unwrap();
        let prog = [ProgramGate::U3 { mode: 0, t }];
        let cfg = GadgetConfig { r_anc: 1.0, ..Default::default() };
        let run = run_with_gadget(&psi, &prog, &cfg, &lossless(v), &mut seeded(seed)).unwrap();
        let q = run.key.displacements[0].0;
        let scale = 1.0 + run.record.a.abs() + run.record.b.abs();
        prop_assert!((run.record.a + run.record.b + 3.0 * q * t).abs() <= 1e-13 * scale);
    }

    #[test]
    fn prop_encrypted_mean_is_input_mean(seed in any::<u64>(), v in 0.0f64..10.0) {
        let input = coherent(0.3, -0.1);
        let run = run_gaussian_program(&input, &[], &lossless(v), &mut seeded(seed)).unwrap();
        prop_assert_eq!(&run.stages.encrypted.mean, &input.mean);
        prop_assert_eq!(run.stages.encrypted.cov.clone(), &input.cov + nalgebra::DMatrix::identity(2, 2) * v);
        let _ = DVector::<f64>::zeros(0);
    }
}

#[test]
fn gadget_model_matches_the_two_mode_circuit() {
    // Data mode 0, ancilla mode 1; no key, so the frame is zero and m1 = y0.
    let dim = 40;
    let (t, a, q_prime, r_anc) = (0.05, 0.1, 0.2, 0.8);
    let gate = |g: FockGate| build_gate(g, dim).unwrap();
    let psi = coherent_ket(dim, 0.3, -0.2);
    let chi = apply_ket_u3(&psi, t);
    let data = crate::fock::apply_ket(&gate(FockGate::Rotate(-PI / 2.0)), &chi, &[0]).unwrap();
    let mut anc = FockKet::squeezed_vacuum(dim, -r_anc).unwrap();
    anc = crate::fock::apply_ket(&gate(FockGate::Z(q_prime)), &anc, &[0]).unwrap();
    anc = crate::fock::apply_ket(&gate(FockGate::U2(a)), &anc, &[0]).unwrap();
    let joint =
        crate::fock::apply_ket(&gate(FockGate::Cz), &data.tensor(&anc).unwrap(), &[0, 1]).unwrap();
    let env = {
        let s2 = 0.5 * (2.0 * r_anc).exp();
        move |y: f64| (-y * y / (4.0 * s2)).exp()
    };
    let mut rng = seeded(27);
    for _ in 0..4 {
        let (m, cond) =
            crate::fock::homodyne_p_ket(&joint, 0, &mut rng, Default::default()).unwrap();
        let mut out = crate::fock::apply_ket(&gate(FockGate::X(-m)), &cond.unwrap(), &[0]).unwrap();
        out = crate::fock::apply_ket(&gate(FockGate::U2(-a)), &out, &[0]).unwrap();

        let k = q_multiplier(dim, dim, |x| Complex64::new(env(x + m), 0.0)).unwrap();
        let mut model = crate::fock::apply_ket(&k, &chi, &[0]).unwrap().normalized();
        model = crate::fock::apply_ket(&gate(FockGate::Z(q_prime + 2.0 * a * m)), &model, &[0])
            .unwrap();
        let f = out.amps.dotc(&model.amps).norm_sqr() / (out.norm_sqr() * model.norm_sqr());
        assert!(f > 0.999, "m = {m}: {f}");
    }
}
