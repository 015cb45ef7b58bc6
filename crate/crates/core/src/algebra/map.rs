//! Heisenberg-picture polynomial maps on phase space.

use std::fmt;

use serde::Serialize;

use super::poly::{Poly, Var};
use super::word::{Gate, GateWord};
use super::MAX_DEGREE;
use crate::error::{Error, Result};

/// Images of every `q_k` and `p_k` under conjugation by a unitary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyMap {
    n_modes: usize,
    images: Vec<(Poly, Poly)>,
}

impl PolyMap {
    pub fn identity(n_modes: usize) -> Self {
        PolyMap {
            n_modes,
            images: (0..n_modes).map(|k| (Poly::q(k), Poly::p(k))).collect(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn image_q(&self, mode: usize) -> &Poly {
        &self.images[mode].0
    }

    pub fn image_p(&self, mode: usize) -> &Poly {
        &self.images[mode].1
    }

    pub fn image(&self, var: &Var) -> Poly {
        match var {
            Var::Q(k) if *k < self.n_modes => self.images[*k].0.clone(),
            Var::P(k) if *k < self.n_modes => self.images[*k].1.clone(),
            other => Poly::var(other.clone()),
        }
    }

    pub fn degree(&self) -> u32 {
        self.images
            .iter()
            .map(|(a, b)| a.phase_degree().max(b.phase_degree()))
            .max()
            .unwrap_or(0)
    }

    /// Single-gate action on `n_modes` modes.
    pub fn of_gate(gate: &Gate, n_modes: usize) -> Result<Self> {
        GateWord(vec![gate.clone()]).check_modes(n_modes)?;
        let mut m = PolyMap::identity(n_modes);
        match gate {
            Gate::X { mode, s } => m.images[*mode].0 = Poly::q(*mode).add(s),
            Gate::Z { mode, s } => m.images[*mode].1 = Poly::p(*mode).add(s),
            Gate::U2 { mode, t } => {
                m.images[*mode].1 = Poly::p(*mode).add(&Poly::q(*mode).mul(t).scale(2.0))
            }
            Gate::U3 { mode, t } => {
                m.images[*mode].1 = Poly::p(*mode).add(&Poly::q(*mode).pow(2).mul(t).scale(3.0))
            }
            Gate::F { mode } => m.images[*mode] = (Poly::p(*mode).neg(), Poly::q(*mode)),
            Gate::Cz { a, b } => {
                m.images[*a].1 = Poly::p(*a).add(&Poly::q(*b));
                m.images[*b].1 = Poly::p(*b).add(&Poly::q(*a));
            }
            Gate::Squeeze { mode, r } => {
                m.images[*mode] = (
                    Poly::q(*mode).scale((-r).exp()),
                    Poly::p(*mode).scale(r.exp()),
                )
            }
            Gate::Rotate { mode, theta } => {
                let (s, c) = theta.sin_cos();
                let q = Poly::q(*mode);
                let p = Poly::p(*mode);
                m.images[*mode] = (q.scale(c).sub(&p.scale(s)), q.scale(s).add(&p.scale(c)));
            }
            Gate::Phase { .. } => {}
        }
        Ok(m)
    }

    /// Action of `later` applied after `self`: the later map evaluated at
    /// the images of the earlier one.
    pub fn then(&self, later: &PolyMap) -> Result<PolyMap> {
        if later.n_modes != self.n_modes {
            return Err(Error::ModeMismatch(self.n_modes, later.n_modes));
        }
        let images = later
            .images
            .iter()
            .map(|(a, b)| {
                (
                    a.substitute(|v| self.image(v)),
                    b.substitute(|v| self.image(v)),
                )
            })
            .collect();
        let out = PolyMap {
            n_modes: self.n_modes,
            images,
        };
        let d = out.degree();
        if d > MAX_DEGREE {
            return Err(Error::DegreeCap(d));
        }
        Ok(out)
    }

    /// Image-wise difference `self - other`.
    pub fn difference(&self, other: &PolyMap) -> Result<PolyMap> {
        if other.n_modes != self.n_modes {
            return Err(Error::ModeMismatch(self.n_modes, other.n_modes));
        }
        Ok(PolyMap {
            n_modes: self.n_modes,
            images: self
                .images
                .iter()
                .zip(&other.images)
                .map(|((a, b), (c, d))| (a.sub(c), b.sub(d)))
                .collect(),
        })
    }

    /// Equal up to coefficient noise of relative size `tol`.
    pub fn approx_eq(&self, other: &PolyMap, tol: f64) -> bool {
        let Ok(diff) = self.difference(other) else {
            return false;
        };
        let scale = self
            .images
            .iter()
            .chain(&other.images)
            .map(|(a, b)| a.max_abs_coefficient().max(b.max_abs_coefficient()))
            .fold(1.0, f64::max);
        diff.images
            .iter()
            .all(|(a, b)| a.is_negligible(tol * scale) && b.is_negligible(tol * scale))
    }

    pub fn is_zero(&self) -> bool {
        self.images.iter().all(|(a, b)| a.is_zero() && b.is_zero())
    }

    /// Poisson bracket `{f, g}` over all modes.
    pub fn poisson_bracket(f: &Poly, g: &Poly, n_modes: usize) -> Poly {
        let mut out = Poly::zero();
        for k in 0..n_modes {
            let (q, p) = (Var::Q(k), Var::P(k));
            out = out
                .add(&f.derivative(&q).mul(&g.derivative(&p)))
                .sub(&f.derivative(&p).mul(&g.derivative(&q)));
        }
        out
    }

    /// Checks that the images satisfy the canonical brackets
    /// `{Q_i, P_j} = δ_ij`, `{Q_i, Q_j} = {P_i, P_j} = 0`.
    pub fn is_canonical(&self, tol: f64) -> bool {
        let n = self.n_modes;
        for i in 0..n {
            for j in 0..n {
                let qp = PolyMap::poisson_bracket(&self.images[i].0, &self.images[j].1, n);
                let expected = if i == j {
                    Poly::constant(1.0)
                } else {
                    Poly::zero()
                };
                if !qp.sub(&expected).is_negligible(tol) {
                    return false;
                }
                if j > i {
                    let qq = PolyMap::poisson_bracket(&self.images[i].0, &self.images[j].0, n);
                    let pp = PolyMap::poisson_bracket(&self.images[i].1, &self.images[j].1, n);
                    if !qq.is_negligible(tol) || !pp.is_negligible(tol) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

impl fmt::Display for PolyMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (a, b)) in self.images.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "q{0} -> {a}, p{0} -> {b}", k + 1)?;
        }
        Ok(())
    }
}

/// Heisenberg action of a time-ordered word on its own mode count.
pub fn heisenberg(word: &GateWord) -> Result<PolyMap> {
    heisenberg_on(word, word.n_modes())
}

/// Heisenberg action of a time-ordered word on `n_modes` modes.
pub fn heisenberg_on(word: &GateWord, n_modes: usize) -> Result<PolyMap> {
    word.check_modes(n_modes)?;
    let mut m = PolyMap::identity(n_modes);
    for g in word.gates() {
        m = m.then(&PolyMap::of_gate(g, n_modes)?)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(name: &str) -> Poly {
        Poly::sym(name)
    }

    #[test]
    fn displacements_commute_in_heisenberg_picture() {
        let a = heisenberg(&GateWord::operator_product(vec![
            Gate::x(0, s("Q")),
            Gate::z(0, s("S")),
        ]))
        .unwrap();
        let b = heisenberg(&GateWord::operator_product(vec![
            Gate::z(0, s("S")),
            Gate::x(0, s("Q")),
        ]))
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fourier_has_order_four() {
        let w = GateWord(vec![Gate::F { mode: 0 }; 4]);
        assert_eq!(heisenberg(&w).unwrap(), PolyMap::identity(1));
        let two = heisenberg(&GateWord(vec![Gate::F { mode: 0 }; 2])).unwrap();
        assert_eq!(two.image_q(0), &Poly::q(0).neg());
    }

    #[test]
    fn cubic_phase_action() {
        let m = heisenberg(&GateWord(vec![Gate::u3(0, s("T"))])).unwrap();
        assert_eq!(m.image_q(0), &Poly::q(0));
        assert_eq!(
            m.image_p(0),
            &Poly::p(0).add(&s("T").mul(&Poly::q(0).pow(2)).scale(3.0))
        );
    }

    #[test]
    fn later_gate_sees_earlier_images() {
        // X(Q) then U2(T): p -> p + 2T(q + Q)
        let m = heisenberg(&GateWord(vec![Gate::x(0, s("Q")), Gate::u2(0, s("T"))])).unwrap();
        let expected = Poly::p(0).add(&s("T").mul(&Poly::q(0).add(&s("Q"))).scale(2.0));
        assert_eq!(m.image_p(0), &expected);
    }

    #[test]
    fn inverses_cancel() {
        let gates = vec![
            Gate::x(0, s("Q")),
            Gate::u3(0, s("T")),
            Gate::F { mode: 1 },
            Gate::Cz { a: 0, b: 1 },
            Gate::Cz { a: 1, b: 0 },
            Gate::Squeeze { mode: 0, r: 0.4 },
            Gate::Rotate {
                mode: 1,
                theta: 0.9,
            },
        ];
        for g in gates {
            let w = GateWord(vec![g.clone()]).then(&g.inverse());
            assert!(
                heisenberg_on(&w, 2)
                    .unwrap()
                    .approx_eq(&PolyMap::identity(2), 1e-13),
                "{g}"
            );
        }
    }

    #[test]
    fn brackets_preserved() {
        let w = GateWord(vec![
            Gate::u3(0, s("T")),
            Gate::F { mode: 0 },
            Gate::Cz { a: 0, b: 1 },
            Gate::u2(1, s("A")),
            Gate::Rotate {
                mode: 1,
                theta: 0.3,
            },
        ]);
        assert!(heisenberg(&w).unwrap().is_canonical(1e-12));
    }

    #[test]
    fn degree_cap_enforced() {
        let t = s("T");
        let mut gates = Vec::new();
        for _ in 0..3 {
            gates.push(Gate::u3(0, t.clone()));
            gates.push(Gate::F { mode: 0 });
        }
        assert!(matches!(
            heisenberg(&GateWord(gates)),
            Err(Error::DegreeCap(_))
        ));
    }

    #[test]
    fn bad_modes_rejected() {
        assert!(heisenberg_on(&GateWord(vec![Gate::F { mode: 2 }]), 2).is_err());
        assert!(heisenberg(&GateWord(vec![Gate::Cz { a: 0, b: 0 }])).is_err());
    }
}
