//! Decryption corrections: the per-gate table, sliding corrections through
//! gates, and whole-program composition.

use serde::Serialize;

use super::map::{heisenberg_on, PolyMap};
use super::poly::{Poly, Var};
use super::word::{Gate, GateWord};
use crate::error::{Error, Result};

/// Coefficient tolerance for Heisenberg-map equality, relative to the
/// largest coefficient involved.
pub const MAP_TOL: f64 = 1e-12;

/// Encryption displacement `D(Q, P)` of one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Displacement {
    pub q: Poly,
    pub p: Poly,
}

impl Displacement {
    pub fn new(q: impl Into<Poly>, p: impl Into<Poly>) -> Self {
        Displacement {
            q: q.into(),
            p: p.into(),
        }
    }

    /// Symbolic `(Q, P)` for one mode, or `(Qk, Pk)` with a suffix.
    pub fn symbolic(suffix: &str) -> Self {
        Displacement::new(
            Poly::sym(&format!("Q{suffix}")),
            Poly::sym(&format!("P{suffix}")),
        )
    }
}

/// `D(Q,P) = e^{-iQP/2} Z(P) X(Q)` on every listed mode, as a time-ordered word.
pub fn encryption_word(enc: &[Displacement]) -> GateWord {
    let mut w = GateWord::empty();
    for (k, d) in enc.iter().enumerate() {
        w.push(Gate::X {
            mode: k,
            s: d.q.clone(),
        });
        w.push(Gate::Z {
            mode: k,
            s: d.p.clone(),
        });
    }
    w
}

fn enc_for(enc: &[Displacement], mode: usize) -> Result<&Displacement> {
    enc.get(mode).ok_or(Error::InvalidMode {
        mode,
        n_modes: enc.len(),
    })
}

/// The tabulated decryption for a single gate of the universal set, as a
/// time-ordered word. Squeeze, Rotate and phase are not in the table.
pub fn table_correction(gate: &Gate, enc: &[Displacement]) -> Result<GateWord> {
    let word = match gate {
        Gate::X { mode, .. } | Gate::Z { mode, .. } => {
            let d = enc_for(enc, *mode)?;
            GateWord::operator_product(vec![
                Gate::X {
                    mode: *mode,
                    s: d.q.neg(),
                },
                Gate::Z {
                    mode: *mode,
                    s: d.p.neg(),
                },
            ])
        }
        Gate::U2 { mode, t } => {
            let d = enc_for(enc, *mode)?;
            GateWord::operator_product(vec![
                Gate::X {
                    mode: *mode,
                    s: d.q.neg(),
                },
                Gate::Z {
                    mode: *mode,
                    s: d.q.mul(t).scale(-2.0).sub(&d.p),
                },
            ])
        }
        Gate::U3 { mode, t } => {
            let d = enc_for(enc, *mode)?;
            GateWord::operator_product(vec![
                Gate::X {
                    mode: *mode,
                    s: d.q.neg(),
                },
                Gate::Z {
                    mode: *mode,
                    s: d.q.pow(2).mul(t).scale(3.0).sub(&d.p),
                },
                Gate::U2 {
                    mode: *mode,
                    t: d.q.mul(t).scale(-3.0),
                },
            ])
        }
        Gate::F { mode } => {
            let d = enc_for(enc, *mode)?;
            GateWord::operator_product(vec![
                Gate::X {
                    mode: *mode,
                    s: d.p.clone(),
                },
                Gate::Z {
                    mode: *mode,
                    s: d.q.neg(),
                },
            ])
        }
        Gate::Cz { a, b } => {
            let (d1, d2) = (enc_for(enc, *a)?, enc_for(enc, *b)?);
            GateWord::operator_product(vec![
                Gate::X {
                    mode: *a,
                    s: d1.q.neg(),
                },
                Gate::Z {
                    mode: *a,
                    s: d2.q.neg().sub(&d1.p),
                },
                Gate::X {
                    mode: *b,
                    s: d2.q.neg(),
                },
                Gate::Z {
                    mode: *b,
                    s: d1.q.neg().sub(&d2.p),
                },
            ])
        }
        other => {
            return Err(Error::Unsupported(format!(
                "no tabulated correction for {}",
                other.name()
            )))
        }
    };
    Ok(word)
}

/// Outcome of checking `C G D(enc)` against `G` in the Heisenberg picture.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub holds: bool,
    pub correction: String,
    /// `heisenberg(C G D) - heisenberg(G)`; zero when the identity holds.
    pub residual: PolyMap,
}

/// Checks the tabulated correction for `gate` under encryption `enc`.
pub fn verify_correction(gate: &Gate, enc: &[Displacement]) -> Result<Verification> {
    let c = table_correction(gate, enc)?;
    verify_with(gate, enc, &c)
}

/// Checks an arbitrary correction word for `gate` under encryption `enc`.
pub fn verify_with(
    gate: &Gate,
    enc: &[Displacement],
    correction: &GateWord,
) -> Result<Verification> {
    let n = enc.len();
    let g = GateWord(vec![gate.clone()]);
    let lhs = heisenberg_on(&encryption_word(enc).then(&g).then(correction), n)?;
    let rhs = heisenberg_on(&g, n)?;
    let residual = lhs.difference(&rhs)?;
    Ok(Verification {
        holds: lhs.approx_eq(&rhs, MAP_TOL),
        correction: correction.to_string(),
        residual,
    })
}

/// Result of moving a correction from before a gate to after it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slide {
    pub word: GateWord,
    /// The slid correction contains a U2 element.
    pub emits_u2: bool,
}

/// Finds `C'` with `C' G = G C` (operator order), i.e. the word that, applied
/// after `gate`, has the same effect as `correction` applied before it.
///
/// The correction must have a Heisenberg action of the form
/// `q_k -> q_k + a_k`, `p_k -> p_k + b_k + c_k q_k`; the result is written
/// as U2, Z, X elements per mode.
pub fn slide(correction: &GateWord, gate: &Gate) -> Result<Slide> {
    let n = correction
        .n_modes()
        .max(GateWord(vec![gate.clone()]).n_modes());
    let conj = gate
        .inverse()
        .then(correction)
        .then(&GateWord(vec![gate.clone()]));
    let map = heisenberg_on(&conj, n)?;
    let word = decompose_shear(&map)?;
    let emits_u2 = word.gates().iter().any(|g| matches!(g, Gate::U2 { .. }));
    let check = heisenberg_on(&word, n)?;
    if !check.approx_eq(&map, MAP_TOL) {
        return Err(Error::Degenerate(format!(
            "slid correction {word} does not reproduce {map}"
        )));
    }
    Ok(Slide { word, emits_u2 })
}

fn scalar(p: Poly, what: &str) -> Result<Poly> {
    if p.is_scalar() {
        Ok(p)
    } else {
        Err(Error::Unsupported(format!(
            "correction is not a displacement/shear: {what} depends on phase space ({p})"
        )))
    }
}

/// Writes a map `(q + a, p + b + c q)` per mode as a time-ordered word
/// `U2(c/2), Z(b), X(a)`, dropping trivial elements.
fn decompose_shear(map: &PolyMap) -> Result<GateWord> {
    let n = map.n_modes();
    let mut u2s = Vec::new();
    let mut zs = Vec::new();
    let mut xs = Vec::new();
    // rounding residue from numeric rotations and squeezes
    let tol = MAP_TOL
        * (0..n)
            .map(|k| {
                map.image_q(k)
                    .max_abs_coefficient()
                    .max(map.image_p(k).max_abs_coefficient())
            })
            .fold(1.0, f64::max);
    for k in 0..n {
        let a = scalar(map.image_q(k).sub(&Poly::q(k)).chop(tol), "q shift")?;
        let rest = map.image_p(k).sub(&Poly::p(k)).chop(tol);
        let c = scalar(rest.coefficient_of(&Var::Q(k), 1).scalar_part(), "shear")?;
        let b = rest.sub(&c.mul(&Poly::q(k)));
        let b = scalar(b, "p shift")?;
        if !c.is_zero() {
            u2s.push(Gate::U2 {
                mode: k,
                t: c.scale(0.5),
            });
        }
        if !b.is_zero() {
            zs.push(Gate::Z { mode: k, s: b });
        }
        if !a.is_zero() {
            xs.push(Gate::X { mode: k, s: a });
        }
    }
    let mut gates = u2s;
    gates.extend(zs);
    gates.extend(xs);
    Ok(GateWord(gates))
}

/// The decryption for a whole program, built by sliding the inverse
/// encryption through each gate in turn.
#[derive(Debug, Clone, Serialize)]
pub struct ProgramCorrection {
    /// Client-side correction, applied after the program.
    pub correction: GateWord,
    /// One flag per program gate: true for U3 gates that need the gadget.
    pub needs_gadget: Vec<bool>,
    /// Server-side U2 corrections, keyed by the index of the U3 gate they
    /// must immediately follow.
    pub gadget_u2: Vec<(usize, GateWord)>,
}

impl ProgramCorrection {
    /// The program with each gadget U2 correction inserted after its U3.
    pub fn program_with_gadget(&self, program: &GateWord) -> GateWord {
        let mut out = GateWord::empty();
        for (i, g) in program.gates().iter().enumerate() {
            out.push(g.clone());
            for (_, w) in self.gadget_u2.iter().filter(|(j, _)| *j == i) {
                out = out.then(w);
            }
        }
        out
    }
}

pub fn compose_program_correction(
    program: &GateWord,
    enc: &[Displacement],
) -> Result<ProgramCorrection> {
    let n = enc.len();
    program.check_modes(n)?;
    let mut c = GateWord::empty();
    for (k, d) in enc.iter().enumerate() {
        c.push(Gate::X {
            mode: k,
            s: d.q.neg(),
        });
        c.push(Gate::Z {
            mode: k,
            s: d.p.neg(),
        });
    }
    let mut needs_gadget = Vec::with_capacity(program.len());
    let mut gadget_u2 = Vec::new();
    for (i, g) in program.gates().iter().enumerate() {
        let s = slide(&c, g)?;
        needs_gadget.push(matches!(g, Gate::U3 { .. }));
        if s.emits_u2 {
            if !matches!(g, Gate::U3 { .. }) {
                return Err(Error::Degenerate(format!(
                    "Gaussian gate {g} produced a shear"
                )));
            }
            let (u2, rest): (Vec<Gate>, Vec<Gate>) = s
                .word
                .0
                .into_iter()
                .partition(|e| matches!(e, Gate::U2 { .. }));
            gadget_u2.push((i, GateWord(u2)));
            c = GateWord(rest);
        } else {
            c = s.word;
        }
    }
    Ok(ProgramCorrection {
        correction: c,
        needs_gadget,
        gadget_u2,
    })
}

/// Checks `heisenberg(C P' D) = heisenberg(P)` where `P'` is the program
/// with its gadget corrections inserted.
pub fn verify_program_correction(
    program: &GateWord,
    enc: &[Displacement],
    pc: &ProgramCorrection,
) -> Result<Verification> {
    let n = enc.len();
    let lhs = heisenberg_on(
        &encryption_word(enc)
            .then(&pc.program_with_gadget(program))
            .then(&pc.correction),
        n,
    )?;
    let rhs = heisenberg_on(program, n)?;
    Ok(Verification {
        holds: lhs.approx_eq(&rhs, MAP_TOL),
        correction: pc.correction.to_string(),
        residual: lhs.difference(&rhs)?,
    })
}

/// An operator identity `lhs = rhs` up to a global phase, both sides
/// written as operator products.
#[derive(Debug, Clone, Serialize)]
pub struct Identity {
    pub name: String,
    pub lhs: GateWord,
    pub rhs: GateWord,
}

impl Identity {
    fn new(name: &str, lhs: Vec<Gate>, rhs: Vec<Gate>) -> Self {
        Identity {
            name: name.to_string(),
            lhs: GateWord::operator_product(lhs),
            rhs: GateWord::operator_product(rhs),
        }
    }

    pub fn check(&self) -> Result<Verification> {
        let n = self.lhs.n_modes().max(self.rhs.n_modes());
        let l = heisenberg_on(&self.lhs, n)?;
        let r = heisenberg_on(&self.rhs, n)?;
        Ok(Verification {
            holds: l.approx_eq(&r, MAP_TOL),
            correction: format!("{} = {}", self.lhs, self.rhs),
            residual: l.difference(&r)?,
        })
    }
}

/// Commutation identities used to derive the correction table.
pub fn identity_catalogue() -> Vec<Identity> {
    let s = Poly::sym;
    let (q, p, t, sv) = (s("Q"), s("P"), s("T"), s("S"));
    let (q1, q2) = (s("Q1"), s("Q2"));
    vec![
        Identity::new(
            "X(Q)Z(S) = Z(S)X(Q)",
            vec![Gate::x(0, q.clone()), Gate::z(0, sv.clone())],
            vec![Gate::z(0, sv.clone()), Gate::x(0, q.clone())],
        ),
        Identity::new(
            "X(Q)U2(T) = Z(-2QT)U2(T)X(Q)",
            vec![Gate::x(0, q.clone()), Gate::u2(0, t.clone())],
            vec![
                Gate::z(0, q.mul(&t).scale(-2.0)),
                Gate::u2(0, t.clone()),
                Gate::x(0, q.clone()),
            ],
        ),
        Identity::new(
            "X(Q)U3(T) = Z(3Q²T)U2(-3QT)U3(T)X(Q)",
            vec![Gate::x(0, q.clone()), Gate::u3(0, t.clone())],
            vec![
                Gate::z(0, q.pow(2).mul(&t).scale(3.0)),
                Gate::u2(0, q.mul(&t).scale(-3.0)),
                Gate::u3(0, t.clone()),
                Gate::x(0, q.clone()),
            ],
        ),
        Identity::new(
            "U3(T)D(Q,P) = U2(3QT)Z(P-3Q²T)X(Q)U3(T)",
            vec![
                Gate::u3(0, t.clone()),
                Gate::z(0, p.clone()),
                Gate::x(0, q.clone()),
            ],
            vec![
                Gate::u2(0, q.mul(&t).scale(3.0)),
                Gate::z(0, p.sub(&q.pow(2).mul(&t).scale(3.0))),
                Gate::x(0, q.clone()),
                Gate::u3(0, t.clone()),
            ],
        ),
        Identity::new(
            "CZ X1(Q1)X2(Q2) = X1(Q1)Z1(Q2)Z2(Q1)X2(Q2) CZ",
            vec![
                Gate::Cz { a: 0, b: 1 },
                Gate::x(0, q1.clone()),
                Gate::x(1, q2.clone()),
            ],
            vec![
                Gate::x(0, q1.clone()),
                Gate::z(0, q2.clone()),
                Gate::z(1, q1.clone()),
                Gate::x(1, q2.clone()),
                Gate::Cz { a: 0, b: 1 },
            ],
        ),
        Identity::new(
            "F Z(P) = X(-P) F",
            vec![Gate::F { mode: 0 }, Gate::z(0, p.clone())],
            vec![Gate::x(0, p.neg()), Gate::F { mode: 0 }],
        ),
        Identity::new(
            "F X(Q) = Z(Q) F",
            vec![Gate::F { mode: 0 }, Gate::x(0, q.clone())],
            vec![Gate::z(0, q.clone()), Gate::F { mode: 0 }],
        ),
    ]
}

/// The six rows of the correction table with symbolic parameters.
pub fn table_rows() -> Vec<(Gate, Vec<Displacement>)> {
    let one = vec![Displacement::symbolic("")];
    let two = vec![Displacement::symbolic("1"), Displacement::symbolic("2")];
    vec![
        (Gate::z(0, Poly::sym("S")), one.clone()),
        (Gate::x(0, Poly::sym("S")), one.clone()),
        (Gate::u2(0, Poly::sym("T")), one.clone()),
        (Gate::u3(0, Poly::sym("T")), one.clone()),
        (Gate::F { mode: 0 }, one),
        (Gate::Cz { a: 0, b: 1 }, two),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_table_row_verifies_symbolically() {
        for (g, enc) in table_rows() {
            let v = verify_correction(&g, &enc).unwrap();
            assert!(v.holds, "{g}: residual {}", v.residual);
            assert!(v.residual.is_zero(), "{g}");
        }
    }

    #[test]
    fn zero_key_needs_no_correction() {
        let enc = vec![Displacement::new(0.0, 0.0)];
        for g in [Gate::u2(0, 0.7), Gate::u3(0, -0.2), Gate::F { mode: 0 }] {
            assert!(verify_with(&g, &enc, &GateWord::empty()).unwrap().holds);
        }
    }

    #[test]
    fn sign_flip_in_u2_row_is_caught() {
        let enc = vec![Displacement::symbolic("")];
        let (q, p, t) = (Poly::sym("Q"), Poly::sym("P"), Poly::sym("T"));
        let bad = GateWord::operator_product(vec![
            Gate::x(0, q.neg()),
            Gate::z(0, q.mul(&t).scale(2.0).sub(&p)),
        ]);
        let v = verify_with(&Gate::u2(0, t.clone()), &enc, &bad).unwrap();
        assert!(!v.holds);
        assert_eq!(v.residual.image_q(0), &Poly::zero());
        assert_eq!(v.residual.image_p(0), &q.mul(&t).scale(4.0));
    }

    #[test]
    fn catalogue_holds() {
        for id in identity_catalogue() {
            let v = id.check().unwrap();
            assert!(v.holds, "{}: {}", id.name, v.residual);
        }
    }

    #[test]
    fn slide_examples() {
        let (q, s, t) = (Poly::sym("Q"), Poly::sym("S"), Poly::sym("T"));
        let x = GateWord(vec![Gate::x(0, q.clone())]);
        let out = slide(&x, &Gate::z(0, s)).unwrap();
        assert_eq!(out.word, x);
        assert!(!out.emits_u2);

        // X(Q) before U2(T) equals U2(T) followed by X(Q) and Z(2QT).
        let out = slide(&x, &Gate::u2(0, t.clone())).unwrap();
        assert_eq!(
            out.word,
            GateWord(vec![
                Gate::z(0, q.mul(&t).scale(2.0)),
                Gate::x(0, q.clone())
            ])
        );

        let z = GateWord(vec![Gate::z(0, Poly::sym("P"))]);
        for g in [
            Gate::u2(0, t.clone()),
            Gate::u3(0, t.clone()),
            Gate::Cz { a: 0, b: 1 },
        ] {
            assert_eq!(slide(&z, &g).unwrap().word, z, "{g}");
        }

        let out = slide(&x, &Gate::u3(0, t)).unwrap();
        assert!(out.emits_u2);
    }

    #[test]
    fn slide_rejects_non_affine_corrections() {
        let c = GateWord(vec![Gate::u3(0, Poly::sym("T"))]);
        assert!(matches!(
            slide(&c, &Gate::F { mode: 0 }),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn composed_gaussian_program_has_displacement_correction() {
        let enc = vec![Displacement::symbolic("1"), Displacement::symbolic("2")];
        let program = GateWord(vec![
            Gate::F { mode: 0 },
            Gate::u2(0, Poly::sym("T")),
            Gate::Cz { a: 0, b: 1 },
        ]);
        let pc = compose_program_correction(&program, &enc).unwrap();
        assert!(pc
            .correction
            .gates()
            .iter()
            .all(|g| matches!(g, Gate::X { .. } | Gate::Z { .. })));
        assert!(pc.gadget_u2.is_empty());
        assert!(
            verify_program_correction(&program, &enc, &pc)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn composed_cubic_program_discharges_u2_on_server() {
        let enc = vec![Displacement::symbolic("")];
        let t = Poly::sym("T");
        let program = GateWord(vec![
            Gate::u3(0, t.clone()),
            Gate::F { mode: 0 },
            Gate::u3(0, t.scale(0.5)),
            Gate::Squeeze { mode: 0, r: 0.3 },
        ]);
        let pc = compose_program_correction(&program, &enc).unwrap();
        assert_eq!(pc.needs_gadget, vec![true, false, true, false]);
        assert_eq!(pc.gadget_u2.len(), 2);
        assert_eq!(
            pc.gadget_u2[0].1,
            GateWord(vec![Gate::u2(0, Poly::sym("Q").mul(&t).scale(-3.0))])
        );
        assert!(
            verify_program_correction(&program, &enc, &pc)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn empty_program_inverts_encryption() {
        let enc = vec![Displacement::symbolic("")];
        let pc = compose_program_correction(&GateWord::empty(), &enc).unwrap();
        assert_eq!(
            pc.correction,
            GateWord(vec![
                Gate::x(0, Poly::sym("Q").neg()),
                Gate::z(0, Poly::sym("P").neg())
            ])
        );
    }

    #[test]
    fn squeeze_scales_the_key() {
        let enc = vec![Displacement::new(1.5, -0.5)];
        let r: f64 = 2f64.ln();
        let pc = compose_program_correction(&GateWord(vec![Gate::Squeeze { mode: 0, r }]), &enc)
            .unwrap();
        let m = heisenberg_on(&pc.correction, 1).unwrap();
        let dq = m.image_q(0).sub(&Poly::q(0)).as_constant().unwrap();
        let dp = m.image_p(0).sub(&Poly::p(0)).as_constant().unwrap();
        assert!((dq + 1.5 * (-r).exp()).abs() < 1e-14);
        assert!((dp - 0.5 * r.exp()).abs() < 1e-14);
    }
}
