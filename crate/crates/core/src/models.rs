//! Reference Hamiltonians `H₀` used by the verification campaigns and the
//! command-line driver.
//!
//! The Hubbard ring depends on the statistics and orbital count:
//! fermions with an even orbital count are spin-1/2 particles on `nb/2`
//! sites (orbital `2s` is spin up on site `s`, `2s+1` spin down) with on-site
//! repulsion `U n↑ n↓`; fermions with an odd orbital count are spinless on
//! `nb` sites with nearest-neighbour repulsion `U n_s n_{s+1}`; bosons live on
//! `nb` sites with on-site `(U/2) n (n-1)`. Hopping is `-t` on every ring bond.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{lift_one_body, lift_two_body, ConfigurationBasis, OneBodyOperator, Statistics, TwoBodyOperator};
use crate::functional::System;
use crate::linalg::{self, frobenius, CMat, C64, ZERO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Zero,
    RandomOnebody {
        seed: u64,
        #[serde(default = "one")]
        norm: f64,
    },
    RandomFull {
        seed: u64,
        #[serde(default = "one")]
        norm: f64,
        #[serde(default = "one")]
        w_norm: f64,
    },
    HubbardRing {
        #[serde(default = "one")]
        t: f64,
        u: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Largest two-body norm accepted for random interactions.
pub const MAX_RANDOM_W_NORM: f64 = 2.0;

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::Zero => "zero".into(),
            ModelSpec::RandomOnebody { .. } => "random_onebody".into(),
            ModelSpec::RandomFull { .. } => "random_full".into(),
            ModelSpec::HubbardRing { u, .. } => format!("hubbard_ring_u{u}"),
        }
    }

    /// Same model with a different random seed (no-op for deterministic models).
    pub fn reseeded(&self, new_seed: u64) -> ModelSpec {
        match self.clone() {
            ModelSpec::RandomOnebody { norm, .. } => ModelSpec::RandomOnebody { seed: new_seed, norm },
            ModelSpec::RandomFull { norm, w_norm, .. } => ModelSpec::RandomFull {
                seed: new_seed,
                norm,
                w_norm,
            },
            other => other,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Zero => Ok(()),
            ModelSpec::RandomOnebody { norm, .. } => check_finite_nonneg("norm", norm),
            ModelSpec::RandomFull { norm, w_norm, .. } => {
                check_finite_nonneg("norm", norm)?;
                check_finite_nonneg("w_norm", w_norm)?;
                if w_norm > MAX_RANDOM_W_NORM {
                    return Err(Error::Config(format!("w_norm {w_norm} exceeds {MAX_RANDOM_W_NORM}")));
                }
                Ok(())
            }
            ModelSpec::HubbardRing { t, u } => {
                if !(t.is_finite() && u.is_finite()) {
                    return Err(Error::Config("hubbard parameters must be finite".into()));
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, basis: ConfigurationBasis) -> Result<System> {
        self.validate()?;
        let nb = basis.nb();
        let (h, w) = match *self {
            ModelSpec::Zero => return Ok(System::free(basis)),
            ModelSpec::RandomOnebody { seed, norm } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (random_one_body(nb, norm, &mut rng), None)
            }
            ModelSpec::RandomFull { seed, norm, w_norm } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = random_one_body(nb, norm, &mut rng);
                (h, Some(random_two_body(nb, w_norm, &mut rng)))
            }
            ModelSpec::HubbardRing { t, u } => {
                let (h, w) = hubbard_ring(nb, basis.statistics(), t, u)?;
                (h, Some(w))
            }
        };
        let mut h0 = lift_one_body(&OneBodyOperator::new(h)?, &basis)?;
        if let Some(w) = w {
            h0 = h0.add(&lift_two_body(&w, &basis)?)?;
        }
        System::new(basis, h0)
    }
}

fn check_finite_nonneg(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} must be finite and non-negative, got {x}"
        )))
    }
}

pub fn random_one_body<R: rand::Rng + ?Sized>(nb: usize, norm: f64, rng: &mut R) -> CMat {
    let h = linalg::random_hermitian(nb, rng);
    let len = frobenius(&h);
    if len == 0.0 {
        h
    } else {
        h.scale(norm / len)
    }
}

/// Random interaction tensor with both required symmetries and Frobenius
/// norm `norm`.
pub fn random_two_body<R: rand::Rng + ?Sized>(nb: usize, norm: f64, rng: &mut R) -> TwoBodyOperator {
    use rand_distr::StandardNormal;
    let n4 = nb.pow(4);
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * nb + j) * nb + k) * nb + l;
    let x: Vec<C64> = (0..n4)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let mut data = vec![ZERO; n4];
    for i in 0..nb {
        for j in 0..nb {
            for k in 0..nb {
                for l in 0..nb {
                    data[idx(i, j, k, l)] = (x[idx(i, j, k, l)]
                        + x[idx(j, i, l, k)]
                        + x[idx(k, l, i, j)].conj()
                        + x[idx(l, k, j, i)].conj())
                        * 0.25;
                }
            }
        }
    }
    let len = data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut data {
        *z *= norm / len;
    }
    TwoBodyOperator::new(nb, data).expect("symmetrized tensor")
}

fn ring_bonds(sites: usize) -> Vec<(usize, usize)> {
    match sites {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..sites).map(|s| (s, (s + 1) % sites)).collect(),
    }
}

/// One- and two-body parts of the Hubbard ring (layout in the module docs).
pub fn hubbard_ring(nb: usize, statistics: Statistics, t: f64, u: f64) -> Result<(CMat, TwoBodyOperator)> {
    let mut h = CMat::zeros(nb, nb);
    let mut w = vec![ZERO; nb.pow(4)];
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * nb + j) * nb + k) * nb + l;
    let uc = C64::new(u, 0.0);
    let mut hop = |a: usize, b: usize| {
        h[(a, b)] -= C64::new(t, 0.0);
        h[(b, a)] -= C64::new(t, 0.0);
    };
    match statistics {
        Statistics::Fermion if nb.is_multiple_of(2) => {
            let sites = nb / 2;
            for (a, b) in ring_bonds(sites) {
                for spin in 0..2 {
                    hop(2 * a + spin, 2 * b + spin);
                }
            }
            for s in 0..sites {
                let (up, down) = (2 * s, 2 * s + 1);
                w[idx(up, down, up, down)] = uc;
                w[idx(down, up, down, up)] = uc;
            }
        }
        Statistics::Fermion => {
            let bonds = ring_bonds(nb);
            for &(a, b) in &bonds {
                hop(a, b);
            }
            for (a, b) in bonds {
                w[idx(a, b, a, b)] = uc;
                w[idx(b, a, b, a)] = uc;
            }
        }
        Statistics::Boson => {
            for (a, b) in ring_bonds(nb) {
                hop(a, b);
            }
            for s in 0..nb {
                w[idx(s, s, s, s)] = uc;
            }
        }
    }
    Ok((h, TwoBodyOperator::new(nb, w)?))
}
