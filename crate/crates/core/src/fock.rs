//! Occupation-number bases and second-quantized operators on them.
//!
//! Configurations are occupation vectors stored in descending lexicographic
//! order. A fermionic configuration with occupied orbitals `j1 < j2 < ... < jN`
//! is the state `a†_{j1} a†_{j2} ... a†_{jN} |0>`, so an elementary operator
//! acting on orbital `i` picks up `(-1)^(occupied orbitals below i)`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, hermitian_part, max_abs, CMat, C64, ZERO};

/// Largest Hermiticity defect tolerated on one-body input.
const ONE_BODY_HERMITIAN_TOL: f64 = 1e-13;
/// Largest symmetrization correction tolerated after lifting.
const LIFT_HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

impl Statistics {
    pub fn symbol(self) -> char {
        match self {
            Statistics::Boson => 'B',
            Statistics::Fermion => 'F',
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statistics::Boson => f.write_str("boson"),
            Statistics::Fermion => f.write_str("fermion"),
        }
    }
}

/// Identifies the configuration space an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisTag {
    pub nb: usize,
    pub n: usize,
    pub statistics: Statistics,
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.nb, self.n, self.statistics.symbol())
    }
}

/// One nonzero matrix element `<row| a†_i a_j |col> = amplitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub row: usize,
    pub col: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct ConfigurationBasis {
    nb: usize,
    n: usize,
    statistics: Statistics,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `tables[i * nb + j]` lists the matrix elements of `a†_i a_j`.
    tables: Vec<Vec<Transition>>,
}

impl ConfigurationBasis {
    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag {
            nb: self.nb,
            n: self.n,
            statistics: self.statistics,
        }
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Nonzero elements of `a†_i a_j`.
    pub fn transitions(&self, i: usize, j: usize) -> &[Transition] {
        &self.tables[i * self.nb + j]
    }

    /// Closed-form dimension of the N-particle space.
    pub fn expected_dim(nb: usize, n: usize, statistics: Statistics) -> usize {
        match statistics {
            Statistics::Boson => binomial(nb + n - 1, n),
            Statistics::Fermion => binomial(nb, n),
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Enumerates every occupation vector for `n` particles in `nb` orbitals.
pub fn build_basis(nb: usize, n: usize, statistics: Statistics) -> Result<ConfigurationBasis> {
    if nb == 0 || n == 0 {
        return Err(Error::InvalidArguments(
            "orbital and particle counts must be positive".into(),
        ));
    }
    if statistics == Statistics::Fermion && n >= nb {
        return Err(Error::InvalidArguments(format!(
            "fermions need more orbitals than particles (nb = {nb}, n = {n})"
        )));
    }
    if n > u8::MAX as usize {
        return Err(Error::InvalidArguments(format!("particle count {n} too large")));
    }
    let cap = match statistics {
        Statistics::Boson => n as u8,
        Statistics::Fermion => 1,
    };
    let mut states = Vec::with_capacity(ConfigurationBasis::expected_dim(nb, n, statistics));
    let mut current = vec![0u8; nb];
    enumerate(0, n as u8, cap, &mut current, &mut states);

    let index = states.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
    let mut basis = ConfigurationBasis {
        nb,
        n,
        statistics,
        states,
        index,
        tables: Vec::new(),
    };
    basis.tables = build_tables(&basis);
    Ok(basis)
}

// Fills position `pos` with the largest admissible occupation first, which
// yields descending lexicographic order.
fn enumerate(pos: usize, remaining: u8, cap: u8, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    let nb = current.len();
    if pos == nb - 1 {
        if remaining <= cap {
            current[pos] = remaining;
            out.push(current.clone());
        }
        return;
    }
    for occ in (0..=remaining.min(cap)).rev() {
        current[pos] = occ;
        enumerate(pos + 1, remaining - occ, cap, current, out);
    }
    current[pos] = 0;
}

fn build_tables(basis: &ConfigurationBasis) -> Vec<Vec<Transition>> {
    let nb = basis.nb;
    let mut tables = vec![Vec::new(); nb * nb];
    for (col, state) in basis.states.iter().enumerate() {
        for i in 0..nb {
            for j in 0..nb {
                if let Some((target, amplitude)) = hop(basis.statistics, state, i, j) {
                    let row = basis.index[&target];
                    tables[i * nb + j].push(Transition { row, col, amplitude });
                }
            }
        }
    }
    tables
}

// Elementary operators. They never leave this module: everything public is
// built from particle-number-conserving pairs. Each returns a sign and an
// integer weight; bosonic amplitudes are the square root of the product of
// weights, which keeps number operators exact.

fn annihilate(statistics: Statistics, state: &mut [u8], j: usize) -> Option<(f64, u64)> {
    if state[j] == 0 {
        return None;
    }
    let out = match statistics {
        Statistics::Fermion => (parity(state, j), 1),
        Statistics::Boson => (1.0, state[j] as u64),
    };
    state[j] -= 1;
    Some(out)
}

fn create(statistics: Statistics, state: &mut [u8], i: usize) -> Option<(f64, u64)> {
    let out = match statistics {
        Statistics::Fermion => {
            if state[i] == 1 {
                return None;
            }
            (parity(state, i), 1)
        }
        Statistics::Boson => (1.0, state[i] as u64 + 1),
    };
    state[i] += 1;
    Some(out)
}

fn parity(state: &[u8], below: usize) -> f64 {
    let occupied: u32 = state[..below].iter().map(|&x| x as u32).sum();
    if occupied.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn amplitude(factors: &[(f64, u64)]) -> f64 {
    let sign: f64 = factors.iter().map(|f| f.0).product();
    let weight: u64 = factors.iter().map(|f| f.1).product();
    if weight == 1 {
        sign
    } else {
        sign * (weight as f64).sqrt()
    }
}

/// `a†_i a_j |state>` as (resulting configuration, amplitude).
pub(crate) fn hop(statistics: Statistics, state: &[u8], i: usize, j: usize) -> Option<(Vec<u8>, f64)> {
    let mut s = state.to_vec();
    let a = annihilate(statistics, &mut s, j)?;
    let c = create(statistics, &mut s, i)?;
    Some((s, amplitude(&[a, c])))
}

/// `a†_i a†_j a_l a_k |state>` as (resulting configuration, amplitude).
pub(crate) fn pair_hop(
    statistics: Statistics,
    state: &[u8],
    (i, j, k, l): (usize, usize, usize, usize),
) -> Option<(Vec<u8>, f64)> {
    let mut s = state.to_vec();
    let f1 = annihilate(statistics, &mut s, k)?;
    let f2 = annihilate(statistics, &mut s, l)?;
    let f3 = create(statistics, &mut s, j)?;
    let f4 = create(statistics, &mut s, i)?;
    Some((s, amplitude(&[f1, f2, f3, f4])))
}

/// Hermitian single-particle operator `Σ h_ij a†_i a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyOperator {
    matrix: CMat,
}

impl OneBodyOperator {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > ONE_BODY_HERMITIAN_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NonHermitianInput(dev));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(nb: usize) -> Self {
        Self {
            matrix: CMat::zeros(nb, nb),
        }
    }

    pub fn nb(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }
}

/// Two-body operator `(1/2) Σ W_ijkl a†_i a†_j a_l a_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyOperator {
    nb: usize,
    data: Vec<C64>,
}

impl TwoBodyOperator {
    const SYMMETRY_TOL: f64 = 1e-13;

    /// `data` is `W_ijkl` in row-major `[i][j][k][l]` order.
    pub fn new(nb: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != nb.pow(4) {
            return Err(Error::DimensionMismatch {
                expected: nb.pow(4),
                found: data.len(),
            });
        }
        let w = Self { nb, data };
        let scale = w.data.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        let tol = Self::SYMMETRY_TOL * scale;
        for i in 0..nb {
            for j in 0..nb {
                for k in 0..nb {
                    for l in 0..nb {
                        let x = w.get(i, j, k, l);
                        if (x - w.get(k, l, i, j).conj()).norm() > tol {
                            return Err(Error::SymmetryViolation("Hermiticity"));
                        }
                        if (x - w.get(j, i, l, k)).norm() > tol {
                            return Err(Error::SymmetryViolation("particle-exchange"));
                        }
                    }
                }
            }
        }
        Ok(w)
    }

    pub fn zeros(nb: usize) -> Self {
        Self {
            nb,
            data: vec![ZERO; nb.pow(4)],
        }
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let nb = self.nb;
        self.data[((i * nb + j) * nb + k) * nb + l]
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }
}

/// Hermitian operator on a configuration space.
#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    pub matrix: CMat,
    pub tag: BasisTag,
}

impl ManyBodyOperator {
    pub fn zeros(basis: &ConfigurationBasis) -> Self {
        Self {
            matrix: CMat::zeros(basis.dim(), basis.dim()),
            tag: basis.tag(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Sum of two operators on the same space.
    pub fn add(&self, other: &ManyBodyOperator) -> Result<ManyBodyOperator> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag.to_string(),
                found: other.tag.to_string(),
            });
        }
        Ok(ManyBodyOperator {
            matrix: &self.matrix + &other.matrix,
            tag: self.tag,
        })
    }

    /// Adds `c·𝟙`.
    pub fn shifted(&self, c: f64) -> ManyBodyOperator {
        let mut matrix = self.matrix.clone();
        for k in 0..matrix.nrows() {
            matrix[(k, k)] += C64::new(c, 0.0);
        }
        ManyBodyOperator { matrix, tag: self.tag }
    }
}

fn finish_lift(matrix: CMat, basis: &ConfigurationBasis) -> Result<ManyBodyOperator> {
    let sym = hermitian_part(&matrix);
    let correction = max_abs(&(&sym - &matrix));
    if correction > LIFT_HERMITIAN_TOL * max_abs(&matrix).max(1.0) {
        return Err(Error::NonHermitianInput(correction));
    }
    Ok(ManyBodyOperator {
        matrix: sym,
        tag: basis.tag(),
    })
}

/// Matrix of `Σ h_ij a†_i a_j` in the configuration basis.
pub fn lift_one_body(h: &OneBodyOperator, basis: &ConfigurationBasis) -> Result<ManyBodyOperator> {
    if h.nb() != basis.nb() {
        return Err(Error::DimensionMismatch {
            expected: basis.nb(),
            found: h.nb(),
        });
    }
    finish_lift(lift_unchecked(h.matrix(), basis), basis)
}

/// Lifts any square `nb × nb` matrix without Hermiticity bookkeeping.
pub(crate) fn lift_unchecked(h: &CMat, basis: &ConfigurationBasis) -> CMat {
    let nb = basis.nb();
    let d = basis.dim();
    let mut m = CMat::zeros(d, d);
    for i in 0..nb {
        for j in 0..nb {
            let hij = h[(i, j)];
            if hij == ZERO {
                continue;
            }
            for t in basis.transitions(i, j) {
                m[(t.row, t.col)] += hij * t.amplitude;
            }
        }
    }
    m
}

/// Matrix of `(1/2) Σ W_ijkl a†_i a†_j a_l a_k` in the configuration basis.
pub fn lift_two_body(w: &TwoBodyOperator, basis: &ConfigurationBasis) -> Result<ManyBodyOperator> {
    if w.nb() != basis.nb() {
        return Err(Error::DimensionMismatch {
            expected: basis.nb(),
            found: w.nb(),
        });
    }
    let nb = basis.nb();
    let d = basis.dim();
    let mut m = CMat::zeros(d, d);
    if basis.n() >= 2 && !w.is_zero() {
        for (col, state) in basis.states().iter().enumerate() {
            for i in 0..nb {
                for j in 0..nb {
                    for k in 0..nb {
                        for l in 0..nb {
                            let wijkl = w.get(i, j, k, l);
                            if wijkl == ZERO {
                                continue;
                            }
                            if let Some((target, amp)) = pair_hop(basis.statistics(), state, (i, j, k, l)) {
                                let row = basis.index[&target];
                                m[(row, col)] += wijkl * (0.5 * amp);
                            }
                        }
                    }
                }
            }
        }
    }
    finish_lift(m, basis)
}

/// Which configuration a Slater determinant / permanent occupies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Orbitals {
    /// Occupied orbital indices (fermions), zero-based.
    Indices(Vec<usize>),
    /// Full occupation vector (either statistics).
    Occupation(Vec<u8>),
}

/// Projector onto a single basis configuration.
pub fn slater_state(orbitals: &Orbitals, basis: &ConfigurationBasis) -> Result<DensityOperator> {
    let occupation = match orbitals {
        Orbitals::Indices(idx) => {
            if idx.len() != basis.n() {
                return Err(Error::InvalidConfiguration(format!(
                    "{} orbitals given for {} particles",
                    idx.len(),
                    basis.n()
                )));
            }
            let mut occ = vec![0u8; basis.nb()];
            for &i in idx {
                if i >= basis.nb() {
                    return Err(Error::InvalidConfiguration(format!("orbital {i} out of range")));
                }
                occ[i] += 1;
            }
            occ
        }
        Orbitals::Occupation(occ) => occ.clone(),
    };
    let row = basis
        .index_of(&occupation)
        .ok_or_else(|| Error::InvalidConfiguration(format!("{occupation:?} is not a basis configuration")))?;
    let mut m = CMat::zeros(basis.dim(), basis.dim());
    m[(row, row)] = C64::new(1.0, 0.0);
    DensityOperator::new(m, basis.tag())
}
