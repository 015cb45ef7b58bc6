//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs as a plain binary (no libtest harness) so every line is printed
//! even when all criteria pass.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use cvqce_cli::run::relative_moment_deviation;
use cvqce_cli::verify::fock_rows;
use cvqce_core::algebra::{fuzz_table, table_rows, verify_correction};
use cvqce_core::fock::{apply, build_gate, fock_fidelity, FockDensity, FockGate, FockKet};
use cvqce_core::gaussian::{GaussianGate, GaussianState};
use cvqce_core::metrics::{
    avg_fidelity_vs_t, homodyne_mi_samples, mutual_info_analytic, mutual_info_estimate,
    purity_sweep, Decryption, DeltaConvention,
};
use cvqce_core::protocol::{
    epr_encryption_ensemble, estimate_channel, gadget_average_output, gadget_split_fisher,
    gadget_split_fisher_numeric, run_gaussian_program, run_gaussian_program_fock, run_with_gadget,
    ChannelModel, GadgetConfig, ProgramGate, SessionOptions,
};
use cvqce_core::rng::{seeded, substream};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Criterion 1: symbolic rows, 1000 fuzzed parameter sets per row, and
/// number-basis fidelity at N = 64.
fn table_verification() -> Outcome {
    let start = Instant::now();
    let symbolic = table_rows()
        .iter()
        .all(|(g, enc)| verify_correction(g, enc).unwrap().holds);
    let fuzz = fuzz_table(1000, 2.0, None, &mut seeded(101)).unwrap();
    let fuzz_failures: usize = fuzz.iter().map(|f| f.failures).sum();
    let fock = fock_rows(5, 64, &mut seeded(102)).unwrap();
    let min_f = fock.iter().map(|f| f.min_fidelity).fold(1.0, f64::min);
    let max_leak = fock.iter().map(|f| f.max_leak).fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        symbolic && fuzz.len() == 6 && fuzz_failures == 0 && min_f >= 0.999 && secs < 60.0,
        format!(
            "6 rows symbolic={symbolic}, fuzz failures {fuzz_failures}/6000, min Fock fidelity {min_f:.6} \
             (leak {max_leak:.1e}), {secs:.1} s"
        ),
    )
}

/// Criterion 2: analytic value, paper figure, sampled estimator.
fn mutual_information() -> Outcome {
    let i = mutual_info_analytic(0.28, 31.0).unwrap();
    // Independent route: atanh form of ln((a + b)/a).
    let (a, b) = (31.0f64, 0.28f64);
    let oracle = ((b / (2.0 * a + b)).atanh() * 2.0) / 2.0;
    let analytic_ok = (i - oracle).abs() <= 1e-12 && (i - 4.50e-3).abs() < 5e-6;
    // One significant figure: within half a unit of the last digit of 0.005.
    let paper_ok = (i - 0.005).abs() <= 0.001;

    let start = Instant::now();
    // Internal units: SNU variances halved, vacuum 1/2.
    let (v_in, v_enc) = (0.14, 15.5);
    let (xs, ys) = homodyne_mi_samples(v_in, v_enc, 1_000_000, &mut seeded(202)).unwrap();
    let est = mutual_info_estimate(&xs, &ys).unwrap().bits;
    let channel = 0.5 * (1.0 + v_in / (v_enc + 0.5)).log2();
    let rel = (est - channel).abs() / channel;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        analytic_ok && paper_ok && rel <= 0.05 && secs < 10.0,
        format!(
            "I = {i:.7e} nats (oracle diff {:.1e}), ~0.005 at 1 s.f.: {paper_ok}; estimator {est:.5e} vs \
             {channel:.5e} bits ({:.2}%), {secs:.2} s",
            (i - oracle).abs(),
            100.0 * rel
        ),
    )
}

/// Criterion 3: squeezed-state ladder and the thermal vacuum case.
fn purity_ladder() -> Outcome {
    let r = 2f64.ln();
    let sq = purity_sweep(
        &GaussianState::squeezed_vacuum(r),
        "squeezed",
        &[1.0, 2.0, 3.0],
        DeltaConvention::PerQuadrature,
    )
    .unwrap();
    let got = &sq.series("purity").unwrap().values;
    let paper = [0.27, 0.10, 0.05];
    // Oracle: 1/(2 sqrt(det)) with diagonal covariance.
    let oracle: Vec<f64> = [1.0f64, 4.0, 9.0]
        .iter()
        .map(|v| 1.0 / (2.0 * ((0.5 * (-2.0 * r).exp() + v) * (0.5 * (2.0 * r).exp() + v)).sqrt()))
        .collect();
    let ladder_ok = got.iter().zip(&paper).all(|(g, p)| (g - p).abs() <= 0.005)
        && got.iter().zip(&oracle).all(|(g, o)| (g - o).abs() < 1e-12);
    let vac = purity_sweep(
        &GaussianState::vacuum(1),
        "vacuum",
        &[2.0],
        DeltaConvention::AlphaPlane,
    )
    .unwrap();
    let p17 = vac.series("purity").unwrap().values[0];
    let thermal_ok = (p17 - 1.0 / 17.0).abs() <= 1e-10;
    outcome(
        ladder_ok && thermal_ok,
        format!(
            "squeezed {:.4}/{:.4}/{:.4}, vacuum alpha-plane Δ=2 {p17:.12} (1/17)",
            got[0], got[1], got[2]
        ),
    )
}

/// Criterion 4: lossy-channel fidelity, endpoint and estimation ordering.
fn loss_fidelity() -> Outcome {
    let grid = [0.25, 0.5, 0.75, 1.0];
    let delta_sq = 1.0;
    let exact = avg_fidelity_vs_t(delta_sq, &grid, 100_000, 404, Decryption::Exact).unwrap();
    let mc = exact.series("fidelity_mc").unwrap();
    let se = mc.stderr.clone().unwrap();
    let oracle: Vec<f64> = grid
        .iter()
        .map(|&t: &f64| 1.0 / (1.0 + 2.0 * delta_sq * ((t * t - 1.0).powi(2) + (t - 1.0).powi(2))))
        .collect();
    let mut worst_abs: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for i in 0..grid.len() {
        let d = (mc.values[i] - oracle[i]).abs();
        worst_abs = worst_abs.max(d);
        worst_rel = worst_rel.max(d / oracle[i]);
        if se[i] > 0.0 {
            worst_sigma = worst_sigma.max(d / se[i]);
        }
    }
    let endpoint =
        mc.values[3] == 1.0 && exact.series("fidelity_closed_form").unwrap().values[3] == 1.0;

    let lossy = [0.25, 0.5, 0.75, 0.9];
    let naive = avg_fidelity_vs_t(delta_sq, &lossy, 100_000, 405, Decryption::Naive).unwrap();
    let est = avg_fidelity_vs_t(
        delta_sq,
        &lossy,
        100_000,
        405,
        Decryption::Estimated {
            n_probes: 1000,
            probe_variance: 25.0,
        },
    )
    .unwrap();
    let ordered = ["fidelity_mc", "fidelity_closed_form"].iter().all(|m| {
        let (n, e) = (
            &naive.series(m).unwrap().values,
            &est.series(m).unwrap().values,
        );
        n.iter().zip(e).all(|(a, b)| b >= a)
    });
    outcome(
        worst_abs <= 0.005 && endpoint && ordered,
        format!(
            "max |MC - closed| {worst_abs:.2e} (rel {:.3}%, {worst_sigma:.1}σ), F(1) = {}, estimated ≥ naive: {ordered}",
            100.0 * worst_rel,
            mc.values[3]
        ),
    )
}

/// Criterion 5: gadget fidelity, monotonicity in r_anc, transcript shape.
fn cubic_gadget() -> Outcome {
    let dim = 64;
    let cfg = GadgetConfig {
        r_anc: 3.0,
        ..GadgetConfig::default()
    };
    let opts = SessionOptions::new(2.0, ChannelModel::lossless());
    let mut min_f: f64 = 1.0;
    let mut shape_ok = true;
    let alphas = [
        Complex64::new(0.5, 0.0),
        Complex64::new(0.0, 0.5),
        Complex64::new(-0.35, 0.35),
        Complex64::new(0.1, -0.2),
    ];
    for (k, &alpha) in alphas.iter().enumerate() {
        for (j, &t) in [0.01, 0.03, 0.05, -0.05].iter().enumerate() {
            let input = FockKet::coherent(dim, alpha).unwrap().to_density();
            let run = run_with_gadget(
                &input,
                &[ProgramGate::U3 { mode: 0, t }],
                &cfg,
                &opts,
                &mut substream(505, (4 * k + j) as u64),
            )
            .unwrap();
            let target: FockDensity =
                apply(&build_gate(FockGate::U3(t), dim).unwrap(), &input, &[0]).unwrap();
            min_f = min_f.min(fock_fidelity(&target, &run.decrypted).unwrap());
            shape_ok &= run.transcript.outcomes().len() == 1 && run.transcript.quantum_uses() == 3;
        }
    }
    let psi = FockKet::coherent(dim, Complex64::new(0.5, 0.0))
        .unwrap()
        .to_density();
    let target = apply(&build_gate(FockGate::U3(0.05), dim).unwrap(), &psi, &[0]).unwrap();
    let mut last = 0.0;
    let mut monotone = true;
    let mut curve = Vec::new();
    for r in [1.0, 1.5, 2.0, 2.5, 3.0] {
        let f = fock_fidelity(&target, &gadget_average_output(&psi, 0.05, r).unwrap()).unwrap();
        monotone &= f >= last - 0.002;
        last = f;
        curve.push(format!("{f:.4}"));
    }
    outcome(
        min_f >= 0.98 && monotone && shape_ok,
        format!(
            "min fidelity {min_f:.5} over 16 sessions, averaged fidelity vs r_anc [{}], one m1 and three quantum uses: {shape_ok}",
            curve.join(", ")
        ),
    )
}

fn random_program<R: Rng>(rng: &mut R) -> Vec<GaussianGate> {
    let len = rng.random_range(1..=6);
    (0..len)
        .map(|_| {
            let mode = rng.random_range(0..2);
            match rng.random_range(0..7) {
                0 => GaussianGate::X {
                    mode,
                    q: rng.random_range(-2.0..2.0),
                },
                1 => GaussianGate::Z {
                    mode,
                    p: rng.random_range(-2.0..2.0),
                },
                2 => GaussianGate::U2 {
                    mode,
                    t: rng.random_range(-1.0..1.0),
                },
                3 => GaussianGate::F { mode },
                4 => GaussianGate::Cz {
                    a: mode,
                    b: 1 - mode,
                },
                5 => GaussianGate::Squeeze {
                    mode,
                    r: rng.random_range(-0.8..0.8),
                },
                _ => GaussianGate::Rotate {
                    mode,
                    theta: rng.random_range(-3.0..3.0),
                },
            }
        })
        .collect()
}

/// Criterion 6: lossless round trips and the lossy identity program.
fn gaussian_round_trip() -> Outcome {
    let mut rng = seeded(606);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let prog = random_program(&mut rng);
        let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let input =
            GaussianState::coherent(a).append(&GaussianState::thermal(rng.random_range(0.0..1.0)));
        let opts = SessionOptions::new(rng.random_range(0.5..10.0), ChannelModel::lossless());
        let run = run_gaussian_program(&input, &prog, &opts, &mut rng).unwrap();
        worst = worst.max(run.decrypted.max_moment_distance(&run.plaintext));
    }
    let mut worst_lossy: f64 = 0.0;
    for k in 0..20 {
        let t = 0.3 + 0.035 * k as f64;
        let alpha = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (bq, bp) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let prog = [
            GaussianGate::X { mode: 0, q: bq },
            GaussianGate::Z { mode: 0, p: bp },
        ];
        let opts = SessionOptions::new(5.0, ChannelModel::symmetric(t).unwrap());
        let run =
            run_gaussian_program(&GaussianState::coherent(alpha), &prog, &opts, &mut rng).unwrap();
        let s2 = std::f64::consts::SQRT_2;
        let expected = DVector::from_vec(vec![
            t * t * s2 * alpha.re + t * bq,
            t * t * s2 * alpha.im + t * bp,
        ]);
        worst_lossy = worst_lossy.max((&run.decrypted.mean - expected).amax());
    }
    outcome(
        worst <= 1e-10 && worst_lossy <= 1e-12,
        format!("200 programs: max moment error {worst:.1e}; lossy identity: max mean error {worst_lossy:.1e}"),
    )
}

/// Criterion 7: 20 repetitions per transmission.
fn channel_estimation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_3se: f64 = 0.0;
    for (k, t) in [0.6, 0.8, 1.0].into_iter().enumerate() {
        let ch = ChannelModel::symmetric(t).unwrap();
        for rep in 0..20 {
            let e = estimate_channel(1000, &ch, 25.0, &mut substream(707 + k as u64, rep)).unwrap();
            worst = worst.max((e.t_hat - t).abs());
            worst_3se = worst_3se.max(3.0 * e.std_err);
        }
    }
    outcome(
        worst <= 0.01 && worst_3se <= 0.01,
        format!("max |t̂ - t| {worst:.4}, max 3σ {worst_3se:.4} over 60 estimates"),
    )
}

/// Criterion 8: finite-difference Fisher information of the revealed share.
fn fisher_information() -> Outcome {
    let t = 0.1;
    let f1 = gadget_split_fisher_numeric(t, 1.0, 0.4, 100_000, &mut seeded(808)).unwrap();
    let f2 = gadget_split_fisher_numeric(t, 2.0, 0.4, 100_000, &mut seeded(809)).unwrap();
    let target = |v: f64| 9.0 * t * t / v;
    let rel1 = (f1.value - target(1.0)).abs() / target(1.0);
    let rel2 = (f2.value - target(2.0)).abs() / target(2.0);
    let ratio = f2.value / f1.value;
    let ratio_se =
        ratio * ((f1.std_err / f1.value).powi(2) + (f2.std_err / f2.value).powi(2)).sqrt();
    let exact_half =
        (gadget_split_fisher(t, 2.0).unwrap() / gadget_split_fisher(t, 1.0).unwrap() - 0.5).abs()
            < 1e-12;
    outcome(
        rel1 <= 0.01 && rel2 <= 0.01 && (ratio - 0.5).abs() <= 3.0 * ratio_se && exact_half,
        format!(
            "V_in=1: {:.5} vs {:.5} ({:.2}%), V_in=2: {:.5} ({:.2}%), ratio {ratio:.4} ± {ratio_se:.4}",
            f1.value,
            target(1.0),
            100.0 * rel1,
            f2.value,
            100.0 * rel2
        ),
    )
}

/// Criterion 9: EPR-based encryption.
fn epr_analogy() -> Outcome {
    let e = epr_encryption_ensemble(2.5, 200_000, &mut seeded(909)).unwrap();
    let ok = e.conditional_purity >= 0.99 && e.excess_noise <= 0.01 * e.v_enc;
    let rs = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let sampled: Vec<f64> = rs
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            epr_encryption_ensemble(r, 200_000, &mut substream(910, k as u64))
                .unwrap()
                .excess_noise
        })
        .collect();
    let analytic: Vec<f64> = rs
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            epr_encryption_ensemble(r, 10, &mut substream(911, k as u64))
                .unwrap()
                .excess_noise_analytic
        })
        .collect();
    let monotone =
        sampled.windows(2).all(|w| w[1] < w[0]) && analytic.windows(2).all(|w| w[1] < w[0]);
    outcome(
        ok && monotone,
        format!(
            "r=2.5: purity {:.6}, excess {:.3e} = {:.4}% of v_enc {:.2}; decreasing in r: {monotone}",
            e.conditional_purity,
            e.excess_noise,
            100.0 * e.excess_noise / e.v_enc,
            e.v_enc
        ),
    )
}

/// Criterion 10: number-basis sessions against the Gaussian engine.
fn cross_backend() -> Outcome {
    let mut rng = seeded(1010);
    let dim = 64;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let len = rng.random_range(1..=4);
        let prog: Vec<GaussianGate> = (0..len)
            .map(|_| match rng.random_range(0..6) {
                0 => GaussianGate::X {
                    mode: 0,
                    q: rng.random_range(-1.0..1.0),
                },
                1 => GaussianGate::Z {
                    mode: 0,
                    p: rng.random_range(-1.0..1.0),
                },
                2 => GaussianGate::U2 {
                    mode: 0,
                    t: rng.random_range(-0.3..0.3),
                },
                3 => GaussianGate::F { mode: 0 },
                4 => GaussianGate::Squeeze {
                    mode: 0,
                    r: rng.random_range(-0.3..0.3),
                },
                _ => GaussianGate::Rotate {
                    mode: 0,
                    theta: rng.random_range(-3.0..3.0),
                },
            })
            .collect();
        let input = match rng.random_range(0..3) {
            0 => GaussianState::coherent(Complex64::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )),
            1 => GaussianState::squeezed_vacuum(rng.random_range(-0.4..0.4)),
            _ => GaussianState::thermal(rng.random_range(0.0..0.5)),
        };
        let channel =
            ChannelModel::new(rng.random_range(0.7..1.0), rng.random_range(0.7..1.0), 0.0).unwrap();
        let opts = SessionOptions::new(rng.random_range(0.0..10.0), channel);
        let seed: u64 = rng.random();
        let g = run_gaussian_program(&input, &prog, &opts, &mut seeded(seed)).unwrap();
        let f_in = FockDensity::from_gaussian(&input, dim).unwrap();
        let f = run_gaussian_program_fock(&f_in, &prog, &opts, &mut seeded(seed), true).unwrap();
        let (m, c) = f.decrypted.moments();
        worst = worst.max(relative_moment_deviation(
            (&m, &c),
            (&g.decrypted.mean, &g.decrypted.cov),
        ));
    }
    outcome(
        worst <= 1e-4,
        format!("20 scenarios at N={dim}: max relative moment deviation {worst:.2e}"),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        out.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&p).unwrap(),
        );
    }
    out
}

/// Criterion 11: every command twice with the same seed.
fn reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cvqce");
    let examples = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
    let ex = |name: &str| examples.join(name).to_string_lossy().into_owned();
    let commands: Vec<Vec<String>> = vec![
        vec![
            "verify".into(),
            "--fuzz".into(),
            "50".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec!["run".into(), ex("displacement_gate.cfg")],
        vec![
            "run".into(),
            ex("displacement_gate.cfg"),
            "--backend".into(),
            "fock".into(),
        ],
        vec!["run".into(), ex("squeeze_gate.cfg")],
        vec!["run".into(), ex("cubic_gate.cfg")],
        "sweep mutual-info --v-in 0.6 --v-enc 1:100:25 --samples 20000 --seed 4"
            .split(' ')
            .map(String::from)
            .collect(),
        "sweep fidelity-vs-t --delta-sq 1 --grid 0:1:21 --samples 100000 --seed 7"
            .split(' ')
            .map(String::from)
            .collect(),
        "sweep purity --state squeezed:ln2 --convention per-quadrature --delta 1,2,3"
            .split(' ')
            .map(String::from)
            .collect(),
        "estimate --t 0.8 --probes 1000 --seed 3 --compare --delta-sq 1"
            .split(' ')
            .map(String::from)
            .collect(),
    ];
    let mut mismatches = Vec::new();
    let mut files = 0;
    for args in &commands {
        let mut snaps = Vec::new();
        for _ in 0..2 {
            let tmp = tempfile::tempdir().unwrap();
            let out = Command::new(bin)
                .args(args)
                .arg("--out")
                .arg(tmp.path())
                .output()
                .unwrap();
            let stdout = String::from_utf8_lossy(&out.stdout)
                .replace(&tmp.path().display().to_string(), "<out>");
            snaps.push((out.status.code(), stdout, snapshot(tmp.path())));
        }
        files += snaps[0].2.len();
        if snaps[0] != snaps[1] || snaps[0].0 != Some(0) || snaps[0].2.is_empty() {
            mismatches.push(args.join(" "));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} commands, {files} files byte-identical; mismatches: {mismatches:?}",
            commands.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("table verification", table_verification),
        ("mutual information", mutual_information),
        ("purity ladder", purity_ladder),
        ("loss fidelity curve", loss_fidelity),
        ("cubic gadget", cubic_gadget),
        ("Gaussian round trip", gaussian_round_trip),
        ("channel estimation", channel_estimation),
        ("Fisher information", fisher_information),
        ("EPR analogy", epr_analogy),
        ("cross-backend oracle", cross_backend),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {mark} {name}: {}", i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!(
        "{}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
