//! `cvqce verify`: the correction table, the sliding identities, the
//! number-basis cross-check and a cubic-gadget smoke test.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use cvqce_core::algebra::{
    bind_gate, flip_z_signs, fuzz_table, identity_catalogue, row_symbols, table_correction,
    table_rows, verify_with, FuzzOutcome,
};
use cvqce_core::fock::{apply, build_gate, fock_fidelity, FockDensity, FockGate};
use cvqce_core::protocol::{
    fock_table_check, run_with_gadget, ChannelModel, GadgetConfig, ProgramGate, SessionOptions,
};
use cvqce_core::rng::substream;

use crate::error::CliResult;

pub const ROW_NAMES: [&str; 6] = ["X", "Z", "U2", "U3", "F", "CZ"];

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Random parameter sets per table row.
    pub fuzz: usize,
    /// Parameters are drawn from `[-range, range]`.
    pub range: f64,
    pub seed: u64,
    /// Table row whose correction gets its Z arguments negated.
    pub flip_row: Option<String>,
    /// Number-basis draws per row.
    pub fock_cases: usize,
    pub fock_dim: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            fuzz: 100,
            range: 2.0,
            seed: 0,
            flip_row: None,
            fock_cases: 3,
            fock_dim: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FockRowResult {
    pub gate: String,
    pub cases: usize,
    pub min_fidelity: f64,
    pub max_leak: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GadgetSmoke {
    pub t: f64,
    pub alpha: f64,
    pub r_anc: f64,
    pub fidelity: f64,
    pub quantum_uses: usize,
    pub outcomes: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub seed: u64,
    pub flipped_row: Option<String>,
    pub table: Vec<CheckResult>,
    pub fuzz: Vec<FuzzOutcome>,
    pub identities: Vec<CheckResult>,
    pub fock: Vec<FockRowResult>,
    pub gadget: GadgetSmoke,
    /// One line per failed check, naming it.
    pub failures: Vec<String>,
}

/// Minimum number-basis fidelity for a table row.
pub const FOCK_THRESHOLD: f64 = 0.999;
/// Minimum fidelity of the gadget smoke test.
pub const GADGET_THRESHOLD: f64 = 0.98;

fn symbolic_table(flip_row: Option<&str>) -> CliResult<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (gate, enc) in table_rows() {
        let mut c = table_correction(&gate, &enc)?;
        if flip_row == Some(gate.name()) {
            flip_z_signs(&mut c);
        }
        let v = verify_with(&gate, &enc, &c)?;
        let detail = if v.holds {
            format!("C = {}", v.correction)
        } else {
            format!("residual {}", v.residual)
        };
        out.push(CheckResult {
            name: format!("{} row", gate.name()),
            passed: v.holds,
            detail,
        });
    }
    Ok(out)
}

fn identities() -> CliResult<Vec<CheckResult>> {
    identity_catalogue()
        .into_iter()
        .map(|id| {
            let v = id.check()?;
            let detail = if v.holds {
                String::new()
            } else {
                format!("residual {}", v.residual)
            };
            Ok(CheckResult {
                name: id.name.clone(),
                passed: v.holds,
                detail,
            })
        })
        .collect()
}

/// Number-basis check of every table row with keys, gate parameters and
/// coherent amplitudes drawn from `[-0.3, 0.3]` and `|α| ≤ 1`.
pub fn fock_rows<R: Rng>(cases: usize, dim: usize, rng: &mut R) -> CliResult<Vec<FockRowResult>> {
    let mut out = Vec::new();
    for (gate, enc) in table_rows() {
        let n = enc.len();
        let mut min_f = f64::INFINITY;
        let mut max_leak: f64 = 0.0;
        for _ in 0..cases {
            let vals: BTreeMap<String, f64> = row_symbols(&gate, &enc)
                .into_iter()
                .map(|s| (s, rng.random_range(-0.3..=0.3)))
                .collect();
            let numeric = bind_gate(&gate, &vals);
            let keys: Vec<(f64, f64)> = enc
                .iter()
                .map(|d| {
                    (
                        d.q.bind(&vals).as_constant().unwrap_or(0.0),
                        d.p.bind(&vals).as_constant().unwrap_or(0.0),
                    )
                })
                .collect();
            let alpha: Vec<Complex64> = (0..n)
                .map(|_| {
                    Complex64::from_polar(
                        rng.random_range(0.0..=1.0),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let check = fock_table_check(&numeric, &keys, &alpha, dim)?;
            min_f = min_f.min(check.fidelity);
            max_leak = max_leak.max(check.leak);
        }
        out.push(FockRowResult {
            gate: gate.name().to_string(),
            cases,
            min_fidelity: min_f,
            max_leak,
            passed: min_f >= FOCK_THRESHOLD,
        });
    }
    Ok(out)
}

/// One gadget session on `|α = 0.5⟩` with `U3(0.05)` at `r_anc = 3`.
pub fn gadget_smoke(seed: u64) -> CliResult<GadgetSmoke> {
    let (dim, t, alpha, r_anc) = (64, 0.05, 0.5, 3.0);
    let input = cvqce_core::fock::FockKet::coherent(dim, Complex64::new(alpha, 0.0))?.to_density();
    let cfg = GadgetConfig {
        r_anc,
        ..GadgetConfig::default()
    };
    let opts = SessionOptions::new(2.0, ChannelModel::lossless());
    let run = run_with_gadget(
        &input,
        &[ProgramGate::U3 { mode: 0, t }],
        &cfg,
        &opts,
        &mut substream(seed, 3),
    )?;
    let target: FockDensity = apply(&build_gate(FockGate::U3(t), dim)?, &input, &[0])?;
    let fidelity = fock_fidelity(&target, &run.decrypted)?;
    let (quantum_uses, outcomes) = (
        run.transcript.quantum_uses(),
        run.transcript.outcomes().len(),
    );
    Ok(GadgetSmoke {
        t,
        alpha,
        r_anc,
        fidelity,
        quantum_uses,
        outcomes,
        passed: fidelity >= GADGET_THRESHOLD && quantum_uses == 3 && outcomes == 1,
    })
}

pub fn cmd_verify(opts: &VerifyOptions) -> CliResult<VerifyReport> {
    let flip = opts.flip_row.as_deref();
    let table = symbolic_table(flip)?;
    let fuzz = fuzz_table(opts.fuzz, opts.range, flip, &mut substream(opts.seed, 1))?;
    let identities = identities()?;
    let fock = fock_rows(opts.fock_cases, opts.fock_dim, &mut substream(opts.seed, 2))?;
    let gadget = gadget_smoke(opts.seed)?;

    let mut failures = Vec::new();
    for c in table.iter().chain(&identities).filter(|c| !c.passed) {
        failures.push(format!("{}: {}", c.name, c.detail));
    }
    for f in fuzz.iter().filter(|f| f.failures > 0) {
        failures.push(format!(
            "{} row: {}/{} fuzzed parameter sets failed",
            f.gate, f.failures, f.cases
        ));
    }
    for f in fock.iter().filter(|f| !f.passed) {
        failures.push(format!(
            "{} row (fock): fidelity {:.6} < {FOCK_THRESHOLD}",
            f.gate, f.min_fidelity
        ));
    }
    if !gadget.passed {
        failures.push(format!(
            "U3 gadget: fidelity {:.6}, {} quantum uses, {} outcomes",
            gadget.fidelity, gadget.quantum_uses, gadget.outcomes
        ));
    }
    Ok(VerifyReport {
        passed: failures.is_empty(),
        seed: opts.seed,
        flipped_row: opts.flip_row.clone(),
        table,
        fuzz,
        identities,
        fock,
        gadget,
        failures,
    })
}

impl VerifyReport {
    /// Human-readable pass/fail table.
    pub fn table_text(&self) -> String {
        let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut s = String::new();
        for c in &self.table {
            s.push_str(&format!(
                "{:<6} {:<40} {}\n",
                mark(c.passed),
                c.name,
                c.detail
            ));
        }
        for f in &self.fuzz {
            s.push_str(&format!(
                "{:<6} {:<40} {}/{} parameter sets\n",
                mark(f.failures == 0),
                format!("{} row, fuzzed", f.gate),
                f.cases - f.failures,
                f.cases
            ));
        }
        for c in &self.identities {
            s.push_str(&format!(
                "{:<6} {:<40} {}\n",
                mark(c.passed),
                c.name,
                c.detail
            ));
        }
        for f in &self.fock {
            s.push_str(&format!(
                "{:<6} {:<40} min fidelity {:.6}, leak {:.1e}\n",
                mark(f.passed),
                format!("{} row, number basis", f.gate),
                f.min_fidelity,
                f.max_leak
            ));
        }
        let g = &self.gadget;
        s.push_str(&format!(
            "{:<6} {:<40} fidelity {:.6}, {} quantum uses, {} outcome\n",
            mark(g.passed),
            "U3 gadget",
            g.fidelity,
            g.quantum_uses,
            g.outcomes
        ));
        let rows = self.table.iter().filter(|c| c.passed).count();
        s.push_str(&format!("{rows}/{} table rows pass\n", self.table.len()));
        s
    }
}
