use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::algebra::Displacement;
use crate::error::{check_range, Error, Result};
use crate::rng::seeded;

/// Per-mode encryption displacements `(Q, P)`, each component drawn from
/// `N(0, v_enc)` in internal units.
///
/// There is intentionally no `Serialize` impl: nothing that reaches a
/// transcript can carry a key.
#[derive(Debug, Clone, PartialEq)]
pub struct EncryptionKey {
    pub displacements: Vec<(f64, f64)>,
    pub v_enc: f64,
    /// Seed the key was drawn from, when drawn with [`EncryptionKey::from_seed`].
    pub seed: Option<u64>,
}

impl EncryptionKey {
    pub fn draw<R: Rng>(n_modes: usize, v_enc: f64, rng: &mut R) -> Result<Self> {
        check_range("v_enc", v_enc, 0.0, f64::MAX)?;
        let normal = Normal::new(0.0, v_enc.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
        let displacements = (0..n_modes)
            .map(|_| (normal.sample(rng), normal.sample(rng)))
            .collect();
        Ok(EncryptionKey {
            displacements,
            v_enc,
            seed: None,
        })
    }

    pub fn from_seed(n_modes: usize, v_enc: f64, seed: u64) -> Result<Self> {
        let mut key = Self::draw(n_modes, v_enc, &mut seeded(seed))?;
        key.seed = Some(seed);
        Ok(key)
    }

    pub fn explicit(displacements: Vec<(f64, f64)>) -> Self {
        EncryptionKey {
            displacements,
            v_enc: 0.0,
            seed: None,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.displacements.len()
    }

    /// The client's working record of the key when it is only correlated
    /// with the applied key (coefficient `rho`), with the same variance.
    /// `rho = 1` returns an exact copy without touching the RNG.
    pub fn client_copy<R: Rng>(&self, rho: f64, rng: &mut R) -> Result<EncryptionKey> {
        check_range("key_correlation", rho, 0.0, 1.0)?;
        if rho == 1.0 {
            return Ok(self.clone());
        }
        let normal =
            Normal::new(0.0, self.v_enc.sqrt()).map_err(|e| Error::Invalid(e.to_string()))?;
        let w = (1.0 - rho * rho).sqrt();
        let displacements = self
            .displacements
            .iter()
            .map(|&(q, p)| {
                (
                    rho * q + w * normal.sample(rng),
                    rho * p + w * normal.sample(rng),
                )
            })
            .collect();
        Ok(EncryptionKey {
            displacements,
            ..self.clone()
        })
    }

    /// Symbolic key `(Qk, Pk)` for each of `n_modes` modes.
    pub fn symbols(n_modes: usize) -> Vec<Displacement> {
        (0..n_modes)
            .map(|k| Displacement::symbolic(&k.to_string()))
            .collect()
    }

    /// Values for [`EncryptionKey::symbols`], every component multiplied by `scale`.
    pub fn bindings(&self, scale: f64) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (k, &(q, p)) in self.displacements.iter().enumerate() {
            out.insert(format!("Q{k}"), scale * q);
            out.insert(format!("P{k}"), scale * p);
        }
        out
    }
}
