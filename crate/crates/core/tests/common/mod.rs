//! First-quantized reference implementation used as an independent oracle.
//!
//! States live in the full tensor space `(C^nb)^{⊗N}`; configurations are
//! (anti)symmetrized products of orbitals in ascending order, operators act
//! particle by particle.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rdmft_core::{ConfigurationBasis, Statistics};

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    if n == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let mut out = Vec::new();
    for (p, sign) in permutations(n - 1) {
        // Insert n-1 at every position; each shift past an element is a transposition.
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            let moves = p.len() - pos;
            out.push((q, if moves % 2 == 0 { sign } else { -sign }));
        }
    }
    out
}

fn tensor_index(orbitals: &[usize], nb: usize) -> usize {
    orbitals.iter().fold(0, |acc, &o| acc * nb + o)
}

fn tensor_orbitals(mut index: usize, nb: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in (0..n).rev() {
        out[slot] = index % nb;
        index /= nb;
    }
    out
}

/// Tensor-space vector of one configuration.
pub fn embed(occupation: &[u8], statistics: Statistics) -> DVector<C64> {
    let nb = occupation.len();
    let orbitals: Vec<usize> = occupation
        .iter()
        .enumerate()
        .flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize))
        .collect();
    let n = orbitals.len();
    let mut v = DVector::zeros(nb.pow(n as u32));
    for (perm, sign) in permutations(n) {
        let permuted: Vec<usize> = perm.iter().map(|&p| orbitals[p]).collect();
        let s = match statistics {
            Statistics::Fermion => sign,
            Statistics::Boson => 1.0,
        };
        v[tensor_index(&permuted, nb)] += C64::new(s, 0.0);
    }
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// `Σ_p h⁽ᵖ⁾` on the tensor space.
pub fn tensor_one_body(h: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let nb = h.nrows();
    let dim = nb.pow(n as u32);
    DMatrix::from_fn(dim, dim, |r, c| {
        let (a, b) = (tensor_orbitals(r, nb, n), tensor_orbitals(c, nb, n));
        let mut sum = C64::new(0.0, 0.0);
        for p in 0..n {
            if (0..n).all(|q| q == p || a[q] == b[q]) {
                sum += h[(a[p], b[p])];
            }
        }
        sum
    })
}

/// `Σ_{p<q} w⁽ᵖᑫ⁾` with `⟨ij|w|kl⟩ = W[i][j][k][l]`.
pub fn tensor_two_body(w: &[C64], nb: usize, n: usize) -> DMatrix<C64> {
    let dim = nb.pow(n as u32);
    let at = |i: usize, j: usize, k: usize, l: usize| w[((i * nb + j) * nb + k) * nb + l];
    DMatrix::from_fn(dim, dim, |r, c| {
        let (a, b) = (tensor_orbitals(r, nb, n), tensor_orbitals(c, nb, n));
        let mut sum = C64::new(0.0, 0.0);
        for p in 0..n {
            for q in p + 1..n {
                if (0..n).all(|s| s == p || s == q || a[s] == b[s]) {
                    sum += at(a[p], a[q], b[p], b[q]);
                }
            }
        }
        sum
    })
}

/// Projects a tensor-space operator onto the configuration basis.
pub fn project(op: &DMatrix<C64>, basis: &ConfigurationBasis) -> DMatrix<C64> {
    let vecs: Vec<DVector<C64>> = basis.states().iter().map(|s| embed(s, basis.statistics())).collect();
    let d = vecs.len();
    DMatrix::from_fn(d, d, |r, c| vecs[r].dotc(&(op * &vecs[c])))
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}
