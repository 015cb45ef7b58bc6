use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cvqce_cli::config::{BackendKind, Units};
use cvqce_cli::estimate::{cmd_estimate, EstimateOptions, DEFAULT_PROBE_VARIANCE};
use cvqce_cli::grid::{Grid, StateSpec};
use cvqce_cli::output::{resolve_out_dir, to_json, write_file};
use cvqce_cli::run::{cmd_run, RunOptions};
use cvqce_cli::sweep::{self, ConventionArg, DecryptionArg};
use cvqce_cli::verify::{cmd_verify, VerifyOptions, ROW_NAMES};
use cvqce_cli::{CliError, CliResult};

/// Simulator for delegated continuous-variable computing on encrypted
/// quantum states.
///
/// Exit codes: 0 success, 1 verification failure, 2 configuration or
/// runtime error. Output files go to --out, else $CVQCE_OUT_DIR, else
/// ./cvqce-out.
#[derive(Debug, Parser)]
#[command(name = "cvqce", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the correction table, sliding identities, number-basis
    /// cross-checks and the cubic gadget; writes verify_report.json.
    Verify {
        /// Random parameter sets per table row.
        #[arg(long, default_value_t = 100)]
        fuzz: usize,
        /// Half width of the symbolic fuzzing range.
        #[arg(long, default_value_t = 2.0)]
        range: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number-basis draws per table row.
        #[arg(long, default_value_t = 3)]
        fock_cases: usize,
        /// Mutation test: negate the Z arguments of one row's correction.
        #[arg(long, value_name = "ROW", num_args = 0..=1, default_missing_value = "U2",
              value_parser = clap::builder::PossibleValuesParser::new(ROW_NAMES))]
        inject_sign_flip: Option<String>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run one protocol session from a scenario config (TOML).
    Run {
        config: PathBuf,
        /// Override the config's backend.
        #[arg(long, value_enum)]
        backend: Option<BackendKind>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Tabulate a metric over a parameter grid (CSV and JSON).
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Estimate the channel transmission from probe states.
    Estimate {
        /// True amplitude transmission of each channel pass.
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        #[arg(long)]
        seed: u64,
        /// Per-quadrature variance of the probe means (internal units).
        #[arg(long, default_value_t = DEFAULT_PROBE_VARIANCE)]
        probe_variance: f64,
        /// Also compare naive and estimation-aware decryption fidelity.
        #[arg(long)]
        compare: bool,
        /// Alpha-plane variance of inputs, server shifts and keys.
        #[arg(long, default_value_t = 1.0)]
        delta_sq: f64,
        /// Transmission grid for the comparison.
        #[arg(long, default_value = "0.1:0.9:9")]
        grid: Grid,
        /// Monte Carlo samples per comparison row.
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[command(flatten)]
        out: OutArg,
    },
}

#[derive(Debug, Subcommand)]
enum SweepKind {
    /// Information one homodyne use reveals about the input versus key
    /// variance.
    MutualInfo {
        /// Input alphabet variance.
        #[arg(long)]
        v_in: f64,
        /// Key variance grid, `start:stop:n` or a comma list.
        #[arg(long)]
        v_enc: Grid,
        /// Units of --v-in and --v-enc.
        #[arg(long, value_enum, default_value_t = Units::Snu)]
        units: Units,
        /// Add a sampled estimate with this many samples per point.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Average decryption fidelity versus channel transmission.
    FidelityVsT {
        /// Alpha-plane variance of inputs, server shifts and keys.
        #[arg(long)]
        delta_sq: f64,
        #[arg(long, default_value = "0:1:21")]
        grid: Grid,
        #[arg(long, default_value_t = 100000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = DecryptionArg::Exact)]
        decryption: DecryptionArg,
        /// Probes per estimate with --decryption estimated.
        #[arg(long, default_value_t = 1000)]
        probes: usize,
        #[arg(long, default_value_t = DEFAULT_PROBE_VARIANCE)]
        probe_variance: f64,
        #[command(flatten)]
        common: SweepCommon,
    },
    /// Purity of a key-averaged encrypted state versus key spread.
    Purity {
        /// vacuum, coherent:RE[,IM], squeezed:R or thermal:NBAR; numbers
        /// may be written lnX.
        #[arg(long)]
        state: StateSpec,
        #[arg(long, value_enum, default_value_t = ConventionArg::PerQuadrature)]
        convention: ConventionArg,
        /// Key spreads Δ, `start:stop:n` or a comma list.
        #[arg(long)]
        delta: Grid,
        #[command(flatten)]
        common: SweepCommon,
    },
}

#[derive(Debug, Args)]
struct SweepCommon {
    /// Keep only these metrics (repeatable).
    #[arg(long = "metric")]
    metrics: Vec<String>,
    /// Output file stem.
    #[arg(long)]
    name: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

fn out_dir(out: &OutArg) -> PathBuf {
    resolve_out_dir(out.out.as_deref(), None)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Verify {
            fuzz,
            range,
            seed,
            fock_cases,
            inject_sign_flip,
            out,
        } => {
            let opts = VerifyOptions {
                fuzz,
                range,
                seed,
                flip_row: inject_sign_flip,
                fock_cases,
                ..Default::default()
            };
            let report = cmd_verify(&opts)?;
            print!("{}", report.table_text());
            let path = write_file(&out_dir(&out), "verify_report.json", &to_json(&report))?;
            println!("report: {}", path.display());
            if !report.passed {
                return Err(CliError::Verification(report.failures.join("; ")));
            }
        }
        Command::Run {
            config,
            backend,
            out,
        } => {
            let art = cmd_run(&RunOptions {
                config,
                backend,
                out: out.out,
            })?;
            for f in &art.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { kind } => {
            let (mut res, common, stem) = match kind {
                SweepKind::MutualInfo {
                    v_in,
                    v_enc,
                    units,
                    samples,
                    seed,
                    common,
                } => (
                    sweep::mutual_info(v_in, &v_enc.0, units, samples, seed)?,
                    common,
                    "mutual_info",
                ),
                SweepKind::FidelityVsT {
                    delta_sq,
                    grid,
                    samples,
                    seed,
                    decryption,
                    probes,
                    probe_variance,
                    common,
                } => (
                    sweep::fidelity_vs_t(
                        delta_sq,
                        &grid.0,
                        samples,
                        seed,
                        decryption,
                        probes,
                        probe_variance,
                    )?,
                    common,
                    "fidelity_vs_t",
                ),
                SweepKind::Purity {
                    state,
                    convention,
                    delta,
                    common,
                } => (
                    sweep::purity(state, &delta.0, convention)?,
                    common,
                    "purity",
                ),
            };
            if !common.metrics.is_empty() {
                for m in &common.metrics {
                    if res.series(m).is_none() {
                        let known: Vec<_> = res.series.iter().map(|s| s.metric.as_str()).collect();
                        return Err(CliError::config(format!(
                            "unknown metric `{m}`; available: {}",
                            known.join(", ")
                        )));
                    }
                }
                res.series.retain(|s| common.metrics.contains(&s.metric));
            }
            print!("{}", sweep::table_text(&res));
            let stem = common.name.as_deref().unwrap_or(stem);
            for f in sweep::write_sweep(&out_dir(&common.out), stem, &res)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Estimate {
            t,
            probes,
            seed,
            probe_variance,
            compare,
            delta_sq,
            grid,
            samples,
            out,
        } => {
            let opts = EstimateOptions {
                t,
                probes,
                seed,
                probe_variance,
                compare: compare.then_some(grid.0),
                delta_sq,
                samples,
            };
            let report = cmd_estimate(&opts)?;
            print!("{}", report.text());
            let dir = out_dir(&out);
            println!(
                "wrote {}",
                write_file(&dir, "estimate.json", &to_json(&report))?.display()
            );
            if compare {
                println!(
                    "wrote {}",
                    write_file(&dir, "estimate_compare.csv", &report.compare_csv())?.display()
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
