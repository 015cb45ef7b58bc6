use nalgebra::DVector;

use super::program::ProgramGate;
use super::transcript::digest_f64s;
use crate::error::{Error, Result};
use crate::fock::{apply, apply_loss, build_gate, FockDensity, FockGate};
use crate::gaussian::GaussianGate;

/// A state `D(f) σ D(f)†` held as a classical phase-space frame `f`
/// (ordered `(q1, p1, q2, p2)`) around a truncated core `σ`.
///
/// Gaussian gates and pure loss act on the pair exactly: a gate with
/// linear part `S` maps `f → S f` and acts on `σ` as itself, and loss `t`
/// maps `f → t f` while the loss channel acts on `σ`. With `absorb` set,
/// displacements go straight into the core and the frame stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedState {
    pub frame: DVector<f64>,
    pub core: FockDensity,
    pub absorb: bool,
}

impl FramedState {
    pub fn new(core: FockDensity, absorb: bool) -> Self {
        let frame = DVector::zeros(2 * core.n_modes);
        FramedState {
            frame,
            core,
            absorb,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.core.n_modes
    }

    pub fn dim(&self) -> usize {
        self.core.dim
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::InvalidMode {
                mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    fn core_gate(&mut self, gate: FockGate, modes: &[usize]) -> Result<()> {
        let op = build_gate(gate, self.dim())?;
        self.core = apply(&op, &self.core, modes)?;
        Ok(())
    }

    /// `D(q, p)` on `mode`.
    pub fn displace(&mut self, mode: usize, q: f64, p: f64) -> Result<()> {
        self.check_mode(mode)?;
        if self.absorb {
            if q != 0.0 {
                self.core_gate(FockGate::X(q), &[mode])?;
            }
            if p != 0.0 {
                self.core_gate(FockGate::Z(p), &[mode])?;
            }
        } else {
            self.frame[2 * mode] += q;
            self.frame[2 * mode + 1] += p;
        }
        Ok(())
    }

    pub fn gaussian_gate(&mut self, g: &GaussianGate) -> Result<()> {
        let (s, _) = g.affine(self.n_modes())?;
        let (kind, modes) = FockGate::from_gaussian(g);
        self.core_gate(kind, &modes)?;
        self.frame = s * &self.frame;
        Ok(())
    }

    /// Applies a program gate. A cubic gate is only exact here when its
    /// mode carries no frame; otherwise it needs the gadget.
    pub fn gate(&mut self, g: &ProgramGate) -> Result<()> {
        match g.gaussian() {
            Some(gg) => self.gaussian_gate(&gg),
            None => {
                let (kind, modes) = g.to_fock();
                let m = modes[0];
                self.check_mode(m)?;
                if self.frame[2 * m] != 0.0 || self.frame[2 * m + 1] != 0.0 {
                    return Err(Error::Unsupported(
                        "cubic gate on a displaced frame; use the gadget".into(),
                    ));
                }
                self.core_gate(kind, &modes)
            }
        }
    }

    pub fn loss(&mut self, t: f64, excess_noise: f64, mode: usize) -> Result<()> {
        self.check_mode(mode)?;
        if excess_noise != 0.0 {
            return Err(Error::Unsupported(
                "excess noise on the Fock backend".into(),
            ));
        }
        self.core = apply_loss(&self.core, t, mode)?;
        self.frame[2 * mode] *= t;
        self.frame[2 * mode + 1] *= t;
        Ok(())
    }

    /// The full state `D(f) σ D(f)†` on the truncated space.
    pub fn materialize(&self) -> Result<FockDensity> {
        let mut out = self.clone();
        out.absorb = true;
        for mode in 0..self.n_modes() {
            out.displace(mode, self.frame[2 * mode], self.frame[2 * mode + 1])?;
        }
        Ok(out.core)
    }

    pub fn digest(&self) -> String {
        let core = self.core.matrix.iter().flat_map(|z| [z.re, z.im]);
        digest_f64s(self.frame.iter().copied().chain(core))
    }
}
