//! Rectangular (q, p) lattices and sampled phase-space functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rectangular lattice over the (q, p) plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseSpaceGrid {
    /// Square lattice on `[-half_width, half_width]²` with the given spacing.
    pub fn square(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0 && spacing > 0.0) {
            return Err(Error::Invalid(format!(
                "grid needs positive half-width and spacing, got {half_width}, {spacing}"
            )));
        }
        let n = (2.0 * half_width / spacing).round() as usize + 1;
        let axis = linspace(-half_width, half_width, n);
        Ok(Self {
            q: axis.clone(),
            p: axis,
        })
    }

    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let increasing = |v: &[f64]| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&q) || !increasing(&p) {
            return Err(Error::Invalid(
                "grid axes need at least two strictly increasing points".into(),
            ));
        }
        Ok(Self { q, p })
    }

    /// Area of one lattice cell, assuming uniform spacing.
    pub fn cell_area(&self) -> f64 {
        let dq = (self.q[self.q.len() - 1] - self.q[0]) / (self.q.len() - 1) as f64;
        let dp = (self.p[self.p.len() - 1] - self.p[0]) / (self.p.len() - 1) as f64;
        dq * dp
    }

    pub fn len(&self) -> usize {
        self.q.len() * self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Iterates lattice points in row-major order (q outer, p inner).
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.q
            .iter()
            .flat_map(move |&q| self.p.iter().map(move |&p| (q, p)))
    }
}

pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Values of a Wigner function sampled on a [`PhaseSpaceGrid`], row-major
/// with q as the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.grid.p.len() + ip]
    }

    /// Riemann sum of W over the lattice.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Purity estimate `2π ∫ W²`.
    pub fn purity(&self) -> f64 {
        2.0 * std::f64::consts::PI
            * self.values.iter().map(|w| w * w).sum::<f64>()
            * self.grid.cell_area()
    }

    pub fn sup_distance(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `q,p,W`, one lattice point per row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,p,W\n");
        for ((q, p), w) in self.grid.points().zip(&self.values) {
            out.push_str(&format!("{q:.6},{p:.6},{w:.12e}\n"));
        }
        out
    }

    /// JSON document with grid metadata and row-major values.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q_min": self.grid.q[0],
            "q_max": self.grid.q[self.grid.q.len() - 1],
            "n_q": self.grid.q.len(),
            "p_min": self.grid.p[0],
            "p_max": self.grid.p[self.grid.p.len() - 1],
            "n_p": self.grid.p.len(),
            "order": "row-major, q outer",
            "values": self.values,
        })
    }
}
