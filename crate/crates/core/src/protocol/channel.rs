use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};

/// Amplitude transmissions of the two channel passes, plus optional
/// per-quadrature excess noise added after each pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub t_forward: f64,
    pub t_backward: f64,
    #[serde(default)]
    pub excess_noise: f64,
}

impl ChannelModel {
    pub fn new(t_forward: f64, t_backward: f64, excess_noise: f64) -> Result<Self> {
        let c = ChannelModel {
            t_forward,
            t_backward,
            excess_noise,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn lossless() -> Self {
        ChannelModel {
            t_forward: 1.0,
            t_backward: 1.0,
            excess_noise: 0.0,
        }
    }

    /// Same pure-loss transmission both ways.
    pub fn symmetric(t: f64) -> Result<Self> {
        Self::new(t, t, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("t_forward", self.t_forward, 0.0, 1.0)?;
        check_range("t_backward", self.t_backward, 0.0, 1.0)?;
        check_range("excess_noise", self.excess_noise, 0.0, f64::MAX)
    }

    /// Round-trip amplitude factor `t_f · t_b`.
    pub fn round_trip(&self) -> f64 {
        self.t_forward * self.t_backward
    }
}
