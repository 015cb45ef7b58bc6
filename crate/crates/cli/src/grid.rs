//! Parsing of numeric grids and state specs given on the command line.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use cvqce_core::gaussian::GaussianState;

/// A number, or `ln<x>` for the natural log of `x` (so `ln2` is `ln 2`).
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("ln") {
        Some(rest) => {
            let x: f64 = rest
                .trim_matches(|c| c == '(' || c == ')')
                .parse()
                .map_err(|_| format!("bad number `{s}`"))?;
            x.ln()
        }
        None => s.parse().map_err(|_| format!("bad number `{s}`"))?,
    };
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

/// Parameter grid: `start:stop:n` for `n` evenly spaced points including
/// both ends, or a comma-separated list. Must be strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.len() {
            1 => s
                .split(',')
                .map(parse_number)
                .collect::<Result<Vec<_>, _>>()?,
            3 => {
                let a = parse_number(parts[0])?;
                let b = parse_number(parts[1])?;
                let n: usize = parts[2]
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad point count `{}`", parts[2]))?;
                match n {
                    0 => return Err("grid needs at least one point".into()),
                    1 => vec![a],
                    _ => cvqce_core::phase_space::linspace(a, b, n),
                }
            }
            _ => {
                return Err(format!(
                    "grid `{s}` is neither `start:stop:n` nor a comma list"
                ))
            }
        };
        if values.is_empty() {
            return Err("empty grid".into());
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("grid `{s}` is not strictly increasing"));
        }
        Ok(Grid(values))
    }
}

/// Single-mode input state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Vacuum,
    /// `alpha = [re, im]` with `a = (q + ip)/√2`.
    Coherent {
        alpha: [f64; 2],
    },
    /// Squeezing `r`; the q quadrature is squeezed for `r > 0`.
    Squeezed {
        r: f64,
    },
    Thermal {
        nbar: f64,
    },
}

impl StateSpec {
    pub fn state(&self) -> GaussianState {
        match *self {
            StateSpec::Vacuum => GaussianState::vacuum(1),
            StateSpec::Coherent { alpha } => {
                GaussianState::coherent(Complex64::new(alpha[0], alpha[1]))
            }
            StateSpec::Squeezed { r } => GaussianState::squeezed_vacuum(r),
            StateSpec::Thermal { nbar } => GaussianState::thermal(nbar),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            StateSpec::Coherent { alpha } if alpha.iter().any(|a| !a.is_finite()) => {
                Err("coherent amplitude must be finite".into())
            }
            StateSpec::Squeezed { r } if !r.is_finite() || r.abs() > 5.0 => {
                Err(format!("squeezing r = {r} is outside [-5, 5]"))
            }
            StateSpec::Thermal { nbar } if !nbar.is_finite() || nbar < 0.0 => {
                Err(format!("thermal nbar = {nbar} must be non-negative"))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for StateSpec {
    type Err = String;

    /// `vacuum`, `coherent:re[,im]`, `squeezed:r`, `thermal:nbar`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let need =
            |what: &str| arg.ok_or_else(|| format!("`{kind}` needs a parameter: {kind}:{what}"));
        let spec = match kind {
            "vacuum" => StateSpec::Vacuum,
            "coherent" => {
                let parts: Vec<f64> = need("re,im")?
                    .split(',')
                    .map(parse_number)
                    .collect::<Result<_, _>>()?;
                match parts.as_slice() {
                    [re] => StateSpec::Coherent { alpha: [*re, 0.0] },
                    [re, im] => StateSpec::Coherent { alpha: [*re, *im] },
                    _ => return Err("coherent takes one or two numbers".into()),
                }
            }
            "squeezed" => StateSpec::Squeezed {
                r: parse_number(need("r")?)?,
            },
            "thermal" => StateSpec::Thermal {
                nbar: parse_number(need("nbar")?)?,
            },
            other => return Err(format!("unknown state kind `{other}`")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StateSpec::Vacuum => write!(f, "vacuum"),
            StateSpec::Coherent { alpha } => write!(f, "coherent:{},{}", alpha[0], alpha[1]),
            StateSpec::Squeezed { r } => write!(f, "squeezed:{r}"),
            StateSpec::Thermal { nbar } => write!(f, "thermal:{nbar}"),
        }
    }
}
