//! Scenario config files (TOML), parsed strictly and converted to
//! internal units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cvqce_core::gaussian::{Convention, GaussianState};
use cvqce_core::protocol::{ChannelModel, GadgetConfig, ProgramGate, SessionOptions};

use crate::error::{CliError, CliResult};
use crate::grid::StateSpec;

/// Largest Fock truncation a config may request.
pub const MAX_TRUNCATION: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Shot-noise units: vacuum variance 1.
    #[default]
    Snu,
    /// Library convention: `[q, p] = i`, vacuum variance 1/2.
    Internal,
}

impl Units {
    pub fn variance_to_internal(self, v: f64) -> f64 {
        match self {
            Units::Snu => Convention::variance_from_snu(v),
            Units::Internal => v,
        }
    }

    pub fn variance_from_internal(self, v: f64) -> f64 {
        match self {
            Units::Snu => Convention::variance_to_snu(v),
            Units::Internal => v,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Units::Snu => "snu",
            Units::Internal => "internal",
        }
    }
}

/// How the key spread `v_enc` is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KeyConvention {
    /// Variance of each quadrature shift, in the file's units.
    #[default]
    PerQuadrature,
    /// Variance of the real and imaginary parts of the complex key
    /// amplitude; unit-free.
    AlphaPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Gaussian,
    Fock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Vacuum,
    Coherent,
    Squeezed,
    Thermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    /// Units of every variance in the file: `v_in`, `v_enc`, `v_gate`,
    /// `excess_noise`. Gate parameters and amplitudes are always in the
    /// internal convention.
    #[serde(default)]
    pub units: Units,
    pub kind: StateKind,
    /// Coherent amplitude `[re, im]`.
    pub alpha: Option<[f64; 2]>,
    /// Squeezing parameter.
    pub r: Option<f64>,
    /// Thermal occupation.
    pub nbar: Option<f64>,
    /// Number of modes, each prepared in the same state.
    #[serde(default = "one")]
    pub modes: usize,
    /// Per-quadrature variance of the Gaussian alphabet the input is drawn
    /// from; the recorded stages are averages over it.
    #[serde(default)]
    pub v_in: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncryptionSection {
    pub v_enc: f64,
    #[serde(default)]
    pub convention: KeyConvention,
    /// Correlation between the client's key record and the applied key.
    #[serde(default = "unit")]
    pub key_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Amplitude transmission client to server.
    #[serde(default = "unit")]
    pub t_forward: f64,
    #[serde(default = "unit")]
    pub t_backward: f64,
    #[serde(default)]
    pub excess_noise: f64,
    /// Decrypt as if the channel were lossless.
    #[serde(default)]
    pub naive_decryption: bool,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            t_forward: 1.0,
            t_backward: 1.0,
            excess_noise: 0.0,
            naive_decryption: false,
        }
    }
}

/// One program step. `random_displacement` is a displacement whose
/// quadrature shifts the server draws from `N(0, v_gate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSpec {
    X {
        #[serde(default)]
        mode: usize,
        q: f64,
    },
    Z {
        #[serde(default)]
        mode: usize,
        p: f64,
    },
    U2 {
        #[serde(default)]
        mode: usize,
        t: f64,
    },
    U3 {
        #[serde(default)]
        mode: usize,
        t: f64,
    },
    F {
        #[serde(default)]
        mode: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    Squeeze {
        #[serde(default)]
        mode: usize,
        r: f64,
    },
    Rotate {
        #[serde(default)]
        mode: usize,
        theta: f64,
    },
    RandomDisplacement {
        #[serde(default)]
        mode: usize,
        v_gate: f64,
    },
}

impl GateSpec {
    /// The fixed gate, or `None` for a random displacement.
    pub fn fixed(&self) -> Option<ProgramGate> {
        Some(match *self {
            GateSpec::X { mode, q } => ProgramGate::X { mode, q },
            GateSpec::Z { mode, p } => ProgramGate::Z { mode, p },
            GateSpec::U2 { mode, t } => ProgramGate::U2 { mode, t },
            GateSpec::U3 { mode, t } => ProgramGate::U3 { mode, t },
            GateSpec::F { mode } => ProgramGate::F { mode },
            GateSpec::Cz { a, b } => ProgramGate::Cz { a, b },
            GateSpec::Squeeze { mode, r } => ProgramGate::Squeeze { mode, r },
            GateSpec::Rotate { mode, theta } => ProgramGate::Rotate { mode, theta },
            GateSpec::RandomDisplacement { .. } => return None,
        })
    }

    fn modes(&self) -> Vec<usize> {
        match *self {
            GateSpec::RandomDisplacement { mode, .. } => vec![mode],
            g => g.fixed().expect("fixed gate").modes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    #[serde(default)]
    pub kind: BackendKind,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
}

impl Default for BackendSection {
    fn default() -> Self {
        BackendSection {
            kind: BackendKind::Gaussian,
            truncation: default_truncation(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetSection {
    #[serde(default = "default_r_anc")]
    pub r_anc: f64,
    #[serde(default = "default_v_share")]
    pub v_share: f64,
    #[serde(default = "default_v_anc_offset")]
    pub v_anc_offset: f64,
}

impl Default for GadgetSection {
    fn default() -> Self {
        let d = GadgetConfig::default();
        GadgetSection {
            r_anc: d.r_anc,
            v_share: d.v_share,
            v_anc_offset: d.v_anc_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    /// Output directory; the command-line flag wins over this.
    pub dir: Option<PathBuf>,
    /// File name prefix; defaults to the config file's stem.
    pub prefix: Option<String>,
    /// Write Wigner grids for each protocol stage.
    #[serde(default = "yes")]
    pub wigner: bool,
    /// Formats for the Wigner grids.
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Half width of the square phase-space window; chosen from the
    /// widest stage when absent.
    pub wigner_half_width: Option<f64>,
    /// Lattice points per axis.
    #[serde(default = "default_wigner_points")]
    pub wigner_points: usize,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection {
            dir: None,
            prefix: None,
            wigner: true,
            formats: default_formats(),
            wigner_half_width: None,
            wigner_points: default_wigner_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    pub input: InputSection,
    pub encryption: EncryptionSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub program: Vec<GateSpec>,
    #[serde(default)]
    pub backend: BackendSection,
    pub gadget: Option<GadgetSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
}

fn one() -> usize {
    1
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_truncation() -> usize {
    cvqce_core::fock::DEFAULT_DIM
}
fn default_r_anc() -> f64 {
    GadgetConfig::default().r_anc
}
fn default_v_share() -> f64 {
    GadgetConfig::default().v_share
}
fn default_v_anc_offset() -> f64 {
    GadgetConfig::default().v_anc_offset
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}
fn default_wigner_points() -> usize {
    121
}

/// A validated scenario with every quantity in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub units: Units,
    /// Input state per mode, before averaging over the alphabet.
    pub input: GaussianState,
    pub v_in: f64,
    pub opts: SessionOptions,
    pub program: Vec<GateSpec>,
    pub backend: BackendKind,
    pub truncation: usize,
    pub gadget: GadgetConfig,
    pub outputs: OutputsSection,
}

impl Scenario {
    /// Input averaged over the alphabet.
    pub fn input_ensemble(&self) -> GaussianState {
        let mut s = self.input.clone();
        for k in 0..s.cov.nrows() {
            s.cov[(k, k)] += self.v_in;
        }
        s
    }

    pub fn has_cubic(&self) -> bool {
        self.program
            .iter()
            .any(|g| matches!(g, GateSpec::U3 { .. }))
    }
}

impl InputSection {
    pub fn state_spec(&self) -> CliResult<StateSpec> {
        let given = [
            ("alpha", self.alpha.is_some()),
            ("r", self.r.is_some()),
            ("nbar", self.nbar.is_some()),
        ];
        let (spec, wanted) = match self.kind {
            StateKind::Vacuum => (Some(StateSpec::Vacuum), None),
            StateKind::Coherent => (
                self.alpha.map(|alpha| StateSpec::Coherent { alpha }),
                Some("alpha"),
            ),
            StateKind::Squeezed => (self.r.map(|r| StateSpec::Squeezed { r }), Some("r")),
            StateKind::Thermal => (
                self.nbar.map(|nbar| StateSpec::Thermal { nbar }),
                Some("nbar"),
            ),
        };
        for (key, present) in given {
            if present && Some(key) != wanted {
                return Err(CliError::config(format!(
                    "`input.{key}` does not apply to kind {:?}",
                    self.kind
                )));
            }
        }
        let spec = spec.ok_or_else(|| {
            CliError::config(format!("`input.{}` is required", wanted.unwrap_or("")))
        })?;
        spec.validate()
            .map_err(|m| CliError::config(format!("`input`: {m}")))?;
        Ok(spec)
    }
}

fn check(ok: bool, key: &str, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!("`{key}`: {}", msg())))
    }
}

fn finite_nonneg(key: &str, v: f64) -> CliResult<()> {
    check(v.is_finite() && v >= 0.0, key, || {
        format!("{v} must be finite and non-negative")
    })
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Bounds-checks every physical parameter and converts to internal
    /// units. `name` is used when `outputs.prefix` is absent.
    pub fn resolve(&self, name: &str) -> CliResult<Scenario> {
        let units = self.input.units;
        let inp = &self.input;
        let state = inp.state_spec()?;
        check((1..=2).contains(&inp.modes), "input.modes", || {
            format!("{} is not 1 or 2", inp.modes)
        })?;
        finite_nonneg("input.v_in", inp.v_in)?;

        let enc = &self.encryption;
        finite_nonneg("encryption.v_enc", enc.v_enc)?;
        check(
            (0.0..=1.0).contains(&enc.key_correlation),
            "encryption.key_correlation",
            || format!("{} is outside [0, 1]", enc.key_correlation),
        )?;
        let v_enc = match enc.convention {
            KeyConvention::PerQuadrature => units.variance_to_internal(enc.v_enc),
            KeyConvention::AlphaPlane => cvqce_core::gaussian::alpha_plane_to_quadrature(enc.v_enc),
        };

        let ch = &self.channel;
        for (key, t) in [
            ("channel.t_forward", ch.t_forward),
            ("channel.t_backward", ch.t_backward),
        ] {
            check((0.0..=1.0).contains(&t), key, || {
                format!("{t} is outside [0, 1]")
            })?;
        }
        finite_nonneg("channel.excess_noise", ch.excess_noise)?;
        let channel = ChannelModel::new(
            ch.t_forward,
            ch.t_backward,
            units.variance_to_internal(ch.excess_noise),
        )?;
        let mut opts = SessionOptions::new(v_enc, channel);
        opts.key_correlation = enc.key_correlation;
        if ch.naive_decryption {
            opts.assumed_channel = Some(ChannelModel::lossless());
        }
        opts.validate()?;

        let mut program = Vec::with_capacity(self.program.len());
        for (i, g) in self.program.iter().enumerate() {
            let key = format!("program[{i}]");
            for m in g.modes() {
                check(m < inp.modes, &key, || {
                    format!("mode {m} out of range for {} mode(s)", inp.modes)
                })?;
            }
            match *g {
                GateSpec::Cz { a, b } => {
                    check(a != b, &key, || "cz needs two distinct modes".into())?
                }
                GateSpec::RandomDisplacement { v_gate, .. } => {
                    finite_nonneg(&format!("{key}.v_gate"), v_gate)?
                }
                GateSpec::Squeeze { r, .. } => {
                    check(r.is_finite() && r.abs() <= 5.0, &key, || {
                        format!("squeezing r = {r} is outside [-5, 5]")
                    })?
                }
                GateSpec::X { q: x, .. } | GateSpec::Z { p: x, .. } => {
                    check(x.is_finite(), &key, || "shift must be finite".into())?
                }
                GateSpec::U2 { t, .. } | GateSpec::U3 { t, .. } => {
                    check(t.is_finite(), &key, || "strength must be finite".into())?
                }
                GateSpec::Rotate { theta, .. } => {
                    check(theta.is_finite(), &key, || "angle must be finite".into())?
                }
                GateSpec::F { .. } => {}
            }
            program.push(match *g {
                GateSpec::RandomDisplacement { mode, v_gate } => GateSpec::RandomDisplacement {
                    mode,
                    v_gate: units.variance_to_internal(v_gate),
                },
                other => other,
            });
        }

        let b = &self.backend;
        check(
            (4..=MAX_TRUNCATION).contains(&b.truncation),
            "backend.truncation",
            || format!("{} is outside [4, {MAX_TRUNCATION}]", b.truncation),
        )?;

        let cubic = self
            .program
            .iter()
            .filter(|g| matches!(g, GateSpec::U3 { .. }))
            .count();
        if cubic > 0 {
            check(b.kind == BackendKind::Fock, "backend.kind", || {
                "programs with u3 need the fock backend".into()
            })?;
            check(cubic == 1, "program", || {
                "at most one u3 per session".into()
            })?;
            check(inp.modes == 1, "input.modes", || {
                "u3 sessions are single-mode".into()
            })?;
        } else {
            check(self.gadget.is_none(), "gadget", || {
                "only meaningful for programs with u3".into()
            })?;
        }
        let g = self.gadget.clone().unwrap_or_default();
        let gadget = GadgetConfig {
            r_anc: g.r_anc,
            v_share: g.v_share,
            v_anc_offset: g.v_anc_offset,
        };
        gadget.validate()?;

        let o = &self.outputs;
        check(
            o.wigner_points >= 2 && o.wigner_points <= 2001,
            "outputs.wigner_points",
            || format!("{} is outside [2, 2001]", o.wigner_points),
        )?;
        if let Some(h) = o.wigner_half_width {
            check(
                h.is_finite() && h > 0.0,
                "outputs.wigner_half_width",
                || format!("{h} must be positive"),
            )?;
        }
        check(
            !o.formats.is_empty() || !o.wigner,
            "outputs.formats",
            || "empty format list".into(),
        )?;

        let stochastic = v_enc > 0.0
            || program
                .iter()
                .any(|g| matches!(g, GateSpec::RandomDisplacement { .. }))
            || cubic > 0;
        let seed = match (self.seed, stochastic) {
            (Some(s), _) => s,
            (None, false) => 0,
            (None, true) => {
                return Err(CliError::config(
                    "`seed` is required for a stochastic scenario",
                ))
            }
        };

        let single = state.state();
        let input = (1..inp.modes).fold(single.clone(), |s, _| s.append(&single));
        Ok(Scenario {
            name: o.prefix.clone().unwrap_or_else(|| name.to_string()),
            seed,
            units,
            input,
            v_in: units.variance_to_internal(inp.v_in),
            opts,
            program,
            backend: b.kind,
            truncation: b.truncation,
            gadget,
            outputs: o.clone(),
        })
    }
}
