//! Explicit density operators for admissible 1RDMs and seeded 1RDM samplers.
//!
//! Fermionic 1RDMs are realised as mixtures of Slater determinants built
//! from natural orbitals, with weights from a vertex decomposition of the
//! occupation vector over the polytope `{0 ≤ n_i ≤ 1, Σ n_i = N}`. Bosonic
//! 1RDMs (N ≥ 2) are realised by the pure state
//! `(1/√N) Σ_j √n_j |φ_j⟩^{⊗N}`, and for a single particle `ρ = γ`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    classify_occupations, natural_spectrum, DensityOperator, OneRdm, RdmClass, DEFAULT_CLASSIFY_TOL,
};
use crate::error::{Error, Result};
use crate::fock::{ConfigurationBasis, Statistics};
use crate::linalg::{self, CMat, C64, ZERO};

const FEASIBILITY_TOL: f64 = 1e-10;
const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Margin from every constraint used by interior samples.
pub const INTERIOR_MARGIN: f64 = 0.01;
const MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeTerm {
    pub weight: f64,
    /// Occupied orbitals of the vertex, ascending, zero-based. Simplex
    /// vertices of bosonic decompositions repeat their orbital N times.
    pub vertex: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeDecomposition {
    pub terms: Vec<PolytopeTerm>,
    /// Largest deviation of `Σ μ_I 1_I` from the input occupations.
    pub residual: f64,
}

impl PolytopeDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// `Σ μ_I · (occupation vector of vertex I)`.
    pub fn reconstruct(&self, nb: usize) -> Vec<f64> {
        let mut out = vec![0.0; nb];
        for t in &self.terms {
            for &i in &t.vertex {
                out[i] += t.weight;
            }
        }
        out
    }
}

fn check_occupations(occ: &[f64], n: usize, upper: Option<f64>) -> Result<Vec<f64>> {
    let sum: f64 = occ.iter().sum();
    if (sum - n as f64).abs() > FEASIBILITY_TOL {
        return Err(Error::InfeasibleOccupations(format!(
            "occupations sum to {sum}, expected {n}"
        )));
    }
    let hi = upper.unwrap_or(f64::INFINITY);
    if let Some(&bad) = occ.iter().find(|&&x| x < -FEASIBILITY_TOL || x > hi + FEASIBILITY_TOL) {
        return Err(Error::InfeasibleOccupations(format!(
            "occupation {bad} outside [0, {hi}]"
        )));
    }
    Ok(occ.iter().map(|&x| x.clamp(0.0, hi)).collect())
}

fn finish_decomposition(terms: Vec<PolytopeTerm>, occ: &[f64]) -> Result<PolytopeDecomposition> {
    let mut d = PolytopeDecomposition { terms, residual: 0.0 };
    let back = d.reconstruct(occ.len());
    d.residual = back.iter().zip(occ).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let weight_err = (d.total_weight() - 1.0).abs();
    if d.residual > RECONSTRUCTION_TOL || weight_err > RECONSTRUCTION_TOL {
        return Err(Error::DecompositionFailure(d.residual.max(weight_err)));
    }
    Ok(d)
}

/// Writes a fermionic occupation vector as a convex combination of 0/1
/// vertices with `n` ones by greedy peeling.
pub fn polytope_decompose(occupations: &[f64], n: usize) -> Result<PolytopeDecomposition> {
    let nb = occupations.len();
    if n == 0 || n >= nb {
        return Err(Error::InvalidArguments(format!(
            "need 0 < N < nb, got N = {n}, nb = {nb}"
        )));
    }
    let target = check_occupations(occupations, n, Some(1.0))?;
    let mut rest = target.clone();
    let mut mass = 1.0f64;
    let mut terms = Vec::new();

    for _ in 0..nb * nb {
        if mass <= 1e-14 {
            break;
        }
        // Largest coordinates first; values equal to ~1e-12 tie and fall
        // back to the lowest index.
        let mut order: Vec<usize> = (0..nb).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse((rest[i] * 1e12).round() as i64), i));
        let (chosen, others) = order.split_at(n);
        let min_chosen = chosen.iter().map(|&i| rest[i]).fold(f64::INFINITY, f64::min);
        let max_other = others.iter().map(|&i| rest[i]).fold(0.0, f64::max);
        let mu = min_chosen.min(mass - max_other).min(mass);
        if mu <= 1e-15 {
            break;
        }
        let mut vertex = chosen.to_vec();
        vertex.sort_unstable();
        for &i in &vertex {
            rest[i] = (rest[i] - mu).max(0.0);
        }
        mass -= mu;
        terms.push(PolytopeTerm { weight: mu, vertex });
    }
    finish_decomposition(terms, &target)
}

/// Bosonic occupations as a mixture of the simplex vertices `N e_i`.
pub fn simplex_decompose(occupations: &[f64], n: usize) -> Result<PolytopeDecomposition> {
    if n == 0 {
        return Err(Error::InvalidArguments("particle count must be positive".into()));
    }
    let target = check_occupations(occupations, n, None)?;
    let terms = target
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| PolytopeTerm {
            weight: x / n as f64,
            vertex: vec![i; n],
        })
        .collect();
    finish_decomposition(terms, &target)
}

/// Expansion of the Slater determinant `∏_{k ∈ vertex} a†_{φ_k} |0⟩` over the
/// configuration basis: the coefficient of configuration `J` is the minor
/// `det(U[J, vertex])`.
pub fn slater_vector(orbitals: &CMat, vertex: &[usize], basis: &ConfigurationBasis) -> DVector<C64> {
    let n = vertex.len();
    DVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|state| {
            let rows: Vec<usize> = (0..state.len()).filter(|&j| state[j] == 1).collect();
            DMatrix::from_fn(n, n, |a, b| orbitals[(rows[a], vertex[b])]).determinant()
        }),
    )
}

/// Expansion of the normalized condensate `(a†_φ)^N / √N! |0⟩`:
/// coefficient `√(N!/∏ s_i!) ∏ φ_i^{s_i}` for configuration `s`.
pub fn condensate_vector(orbital: &[C64], basis: &ConfigurationBasis) -> DVector<C64> {
    let log_fact = |k: u8| (1..=k as u32).map(|x| (x as f64).ln()).sum::<f64>();
    let ln_n_fact = log_fact(basis.n() as u8);
    DVector::from_iterator(
        basis.dim(),
        basis.states().iter().map(|state| {
            let ln_den: f64 = state.iter().map(|&s| log_fact(s)).sum();
            let mut c = C64::new((0.5 * (ln_n_fact - ln_den)).exp(), 0.0);
            for (phi, &s) in orbital.iter().zip(state) {
                c *= phi.powu(s as u32);
            }
            c
        }),
    )
}

fn reject_outside(gamma: &OneRdm, basis: &ConfigurationBasis) -> Result<crate::ensemble::NaturalSpectrum> {
    if gamma.nb() != basis.nb() || gamma.n() != basis.n() {
        return Err(Error::BasisMismatch {
            expected: basis.tag().to_string(),
            found: format!("1RDM of size {} with trace {}", gamma.nb(), gamma.n()),
        });
    }
    let ns = natural_spectrum(gamma)?;
    if classify_occupations(&ns.occupations, basis.statistics(), DEFAULT_CLASSIFY_TOL) == RdmClass::Outside {
        return Err(Error::NotRepresentable(format!("occupations {:?}", ns.occupations)));
    }
    Ok(ns)
}

/// Mixture of natural-orbital Slater determinants generating a fermionic 1RDM.
pub fn coleman_fermionic(gamma: &OneRdm, basis: &ConfigurationBasis) -> Result<DensityOperator> {
    if basis.statistics() != Statistics::Fermion {
        return Err(Error::InvalidArguments(
            "fermionic construction needs a fermionic basis".into(),
        ));
    }
    let ns = reject_outside(gamma, basis)?;
    let occ: Vec<f64> = ns.occupations.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let decomposition = polytope_decompose(&occ, basis.n()).map_err(|e| match e {
        Error::InfeasibleOccupations(msg) => Error::NotRepresentable(msg),
        other => other,
    })?;
    let states: Vec<(f64, DVector<C64>)> = decomposition
        .terms
        .iter()
        .map(|t| (t.weight, slater_vector(&ns.orbitals, &t.vertex, basis)))
        .collect();
    DensityOperator::mixture(&states, basis.tag())
}

/// Pure condensate superposition generating a bosonic 1RDM (`ρ = γ` for N = 1).
pub fn coleman_bosonic(gamma: &OneRdm, basis: &ConfigurationBasis) -> Result<DensityOperator> {
    if basis.statistics() != Statistics::Boson {
        return Err(Error::InvalidArguments(
            "bosonic construction needs a bosonic basis".into(),
        ));
    }
    let ns = reject_outside(gamma, basis)?;
    if basis.n() == 1 {
        return DensityOperator::new(gamma.matrix().clone(), basis.tag());
    }
    let n = basis.n() as f64;
    let mut psi = DVector::from_element(basis.dim(), ZERO);
    for (j, &lam) in ns.occupations.iter().enumerate() {
        let lam = lam.max(0.0);
        if lam == 0.0 {
            continue;
        }
        let phi: Vec<C64> = ns.orbitals.column(j).iter().copied().collect();
        psi += condensate_vector(&phi, basis) * C64::new((lam / n).sqrt(), 0.0);
    }
    let norm = psi.norm();
    DensityOperator::mixture(&[(1.0, psi.unscale(norm))], basis.tag())
}

/// Statistics-appropriate construction.
pub fn construct_density(gamma: &OneRdm, basis: &ConfigurationBasis) -> Result<DensityOperator> {
    match basis.statistics() {
        Statistics::Fermion => coleman_fermionic(gamma, basis),
        Statistics::Boson => coleman_bosonic(gamma, basis),
    }
}

/// Uniform point of `{x ≥ 0, Σ x = total}` in `len` dimensions.
fn simplex_point<R: Rng + ?Sized>(len: usize, total: f64, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| total * x / s).collect()
}

/// Uniform point of `{0 ≤ x ≤ 1, Σ x = total}` by rejection, sampling holes
/// instead of particles when that is the smaller simplex.
fn capped_simplex_point<R: Rng + ?Sized>(len: usize, total: f64, rng: &mut R) -> Result<Vec<f64>> {
    let holes = total > len as f64 / 2.0;
    let sum = if holes { len as f64 - total } else { total };
    for _ in 0..MAX_REJECTIONS {
        let x = simplex_point(len, sum, rng);
        if x.iter().all(|&v| v < 1.0) {
            return Ok(if holes {
                x.into_iter().map(|v| 1.0 - v).collect()
            } else {
                x
            });
        }
    }
    Err(Error::InvalidArguments(
        "rejection sampling did not find admissible occupations".into(),
    ))
}

/// Occupations drawn uniformly from the admissible set (shrunk by
/// [`INTERIOR_MARGIN`] when `interior`).
pub fn random_occupations<R: Rng + ?Sized>(
    nb: usize,
    n: usize,
    statistics: Statistics,
    interior: bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let m = if interior { INTERIOR_MARGIN } else { 0.0 };
    let nf = n as f64;
    match statistics {
        Statistics::Boson => {
            let free = nf - nb as f64 * m;
            if free <= 0.0 {
                return Err(Error::InvalidArguments(format!(
                    "cannot keep {nb} occupations above {m}"
                )));
            }
            Ok(simplex_point(nb, free, rng).into_iter().map(|x| x + m).collect())
        }
        Statistics::Fermion => {
            let width = 1.0 - 2.0 * m;
            let total = (nf - nb as f64 * m) / width;
            Ok(capped_simplex_point(nb, total, rng)?
                .into_iter()
                .map(|y| m + width * y)
                .collect())
        }
    }
}

/// Seeded random 1RDM: random occupations rotated by a Haar unitary.
pub fn random_rdm(nb: usize, n: usize, statistics: Statistics, interior: bool, seed: u64) -> Result<OneRdm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rdm_with(nb, n, statistics, interior, &mut rng)
}

pub fn random_rdm_with<R: Rng + ?Sized>(
    nb: usize,
    n: usize,
    statistics: Statistics,
    interior: bool,
    rng: &mut R,
) -> Result<OneRdm> {
    validate_counts(nb, n, statistics)?;
    let occ = random_occupations(nb, n, statistics, interior, rng)?;
    let u = linalg::haar_unitary(nb, rng);
    OneRdm::from_spectrum(&occ, &u, n)
}

fn validate_counts(nb: usize, n: usize, statistics: Statistics) -> Result<()> {
    if nb == 0 || n == 0 || (statistics == Statistics::Fermion && n >= nb) {
        return Err(Error::InvalidArguments(format!(
            "invalid counts nb = {nb}, N = {n} for {statistics}"
        )));
    }
    Ok(())
}

/// Seeded random 1RDM on the boundary of the admissible set: idempotent or
/// with some pinned fermionic occupations, or rank-deficient bosonic ones.
pub fn random_boundary_rdm(nb: usize, n: usize, statistics: Statistics, seed: u64) -> Result<OneRdm> {
    validate_counts(nb, n, statistics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut orbitals: Vec<usize> = (0..nb).collect();
    orbitals.shuffle(&mut rng);
    let mut occ = vec![0.0; nb];
    let kind = rng.random_range(0..3);
    match statistics {
        Statistics::Fermion => {
            if kind == 0 {
                for &i in &orbitals[..n] {
                    occ[i] = 1.0;
                }
            } else {
                // Pin one orbital full or empty and fill the rest freely.
                let pin_full = kind == 1 && n >= 1;
                let rest_n = if pin_full { n - 1 } else { n };
                let rest = &orbitals[1..];
                if pin_full {
                    occ[orbitals[0]] = 1.0;
                }
                if rest_n > 0 {
                    let x = capped_simplex_point(rest.len(), rest_n as f64, &mut rng)?;
                    for (&i, v) in rest.iter().zip(x) {
                        occ[i] = v;
                    }
                }
            }
        }
        Statistics::Boson => {
            if kind == 0 || nb == 1 {
                occ[orbitals[0]] = n as f64;
            } else {
                let zeros = rng.random_range(1..nb);
                let support = &orbitals[zeros..];
                let x = simplex_point(support.len(), n as f64, &mut rng);
                for (&i, v) in support.iter().zip(x) {
                    occ[i] = v;
                }
            }
        }
    }
    let u = linalg::haar_unitary(nb, &mut rng);
    OneRdm::from_spectrum(&occ, &u, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{classify_rdm, one_rdm, RdmClass};
    use crate::fock::build_basis;
    use crate::linalg::{max_abs, real_diag};

    fn term(weight: f64, vertex: &[usize]) -> PolytopeTerm {
        PolytopeTerm {
            weight,
            vertex: vertex.to_vec(),
        }
    }

    fn assert_terms(d: &PolytopeDecomposition, expected: &[PolytopeTerm]) {
        assert_eq!(d.terms.len(), expected.len(), "{:?}", d.terms);
        for (a, b) in d.terms.iter().zip(expected) {
            assert_eq!(a.vertex, b.vertex);
            assert!((a.weight - b.weight).abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_of_half_filled_edge() {
        let d = polytope_decompose(&[1.0, 0.5, 0.5], 2).unwrap();
        assert_terms(&d, &[term(0.5, &[0, 1]), term(0.5, &[0, 2])]);
        // 0.5 (1,1,0) + 0.5 (1,0,1) = (1, 0.5, 0.5)
        assert_eq!(d.reconstruct(3), vec![1.0, 0.5, 0.5]);
    }

    #[test]
    fn decomposition_of_vertex() {
        let d = polytope_decompose(&[1.0, 1.0, 0.0], 2).unwrap();
        assert_terms(&d, &[term(1.0, &[0, 1])]);
    }

    #[test]
    fn decomposition_of_barycenter() {
        let t = 2.0 / 3.0;
        let d = polytope_decompose(&[t, t, t], 2).unwrap();
        let third = 1.0 / 3.0;
        assert_terms(&d, &[term(third, &[0, 1]), term(third, &[0, 2]), term(third, &[1, 2])]);
        assert!(d.residual < 1e-12);
    }

    #[test]
    fn infeasible_occupations() {
        assert!(matches!(
            polytope_decompose(&[1.2, 0.8, 0.0], 2),
            Err(Error::InfeasibleOccupations(_))
        ));
        assert!(matches!(
            polytope_decompose(&[0.5, 0.5, 0.5], 2),
            Err(Error::InfeasibleOccupations(_))
        ));
    }

    #[test]
    fn boson_simplex_vertex() {
        let d = simplex_decompose(&[2.0, 0.0, 0.0], 2).unwrap();
        assert_terms(&d, &[term(1.0, &[0, 0])]);
    }

    #[test]
    fn fermionic_vertex_gives_configuration_projector() {
        let basis = build_basis(3, 2, Statistics::Fermion).unwrap();
        let gamma = OneRdm::new(real_diag(&[1.0, 1.0, 0.0]), 2).unwrap();
        let rho = coleman_fermionic(&gamma, &basis).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(max_abs(&(rho.matrix() - real_diag(&[1.0, 0.0, 0.0]))) < 1e-12);
    }

    #[test]
    fn fermionic_edge_gives_rank_two_state() {
        let basis = build_basis(3, 2, Statistics::Fermion).unwrap();
        let u = linalg::haar_unitary(3, &mut ChaCha8Rng::seed_from_u64(5));
        let gamma = OneRdm::from_spectrum(&[1.0, 0.5, 0.5], &u, 2).unwrap();
        let rho = coleman_fermionic(&gamma, &basis).unwrap();
        let rank = rho.spectrum().unwrap().iter().filter(|&&w| w > 1e-10).count();
        assert_eq!(rank, 2);
        assert!(one_rdm(&rho, &basis).unwrap().distance(&gamma) < 1e-12);
    }

    #[test]
    fn bosonic_two_orbital_example() {
        let basis = build_basis(2, 2, Statistics::Boson).unwrap();
        let gamma = OneRdm::new(real_diag(&[1.5, 0.5]), 2).unwrap();
        let rho = coleman_bosonic(&gamma, &basis).unwrap();
        // ψ = √0.75 |20⟩ + √0.25 |02⟩ up to a global phase
        let m = rho.matrix();
        assert!((m[(0, 0)].re - 0.75).abs() < 1e-12);
        assert!((m[(2, 2)].re - 0.25).abs() < 1e-12);
        assert!((m[(0, 2)].norm() - (0.75f64 * 0.25).sqrt()).abs() < 1e-12);
        assert!(m[(1, 1)].norm() < 1e-12);
        assert!(one_rdm(&rho, &basis).unwrap().distance(&gamma) < 1e-12);
    }

    #[test]
    fn bosonic_single_particle_returns_gamma() {
        let basis = build_basis(3, 1, Statistics::Boson).unwrap();
        let gamma = random_rdm(3, 1, Statistics::Boson, true, 4).unwrap();
        let rho = coleman_bosonic(&gamma, &basis).unwrap();
        assert_eq!(rho.matrix(), gamma.matrix());
    }

    #[test]
    fn pure_condensate() {
        let basis = build_basis(3, 3, Statistics::Boson).unwrap();
        let u = linalg::haar_unitary(3, &mut ChaCha8Rng::seed_from_u64(6));
        let gamma = OneRdm::from_spectrum(&[3.0, 0.0, 0.0], &u, 3).unwrap();
        let rho = coleman_bosonic(&gamma, &basis).unwrap();
        let phi: Vec<C64> = u.column(0).iter().copied().collect();
        let psi = condensate_vector(&phi, &basis);
        let expected = &psi * psi.adjoint();
        // Round-off eigenvalues ~1e-17 enter through √λ.
        assert!(max_abs(&(rho.matrix() - expected)) < 1e-8);
        assert!(one_rdm(&rho, &basis).unwrap().distance(&gamma) < 1e-12);
    }

    #[test]
    fn outside_rdm_rejected() {
        let basis = build_basis(2, 1, Statistics::Fermion).unwrap();
        let gamma = OneRdm::new(real_diag(&[1.2, -0.2]), 1).unwrap();
        assert!(matches!(
            coleman_fermionic(&gamma, &basis),
            Err(Error::NotRepresentable(_))
        ));
        let bb = build_basis(2, 1, Statistics::Boson).unwrap();
        assert!(matches!(coleman_bosonic(&gamma, &bb), Err(Error::NotRepresentable(_))));
    }

    #[test]
    fn sampler_is_deterministic_and_traced() {
        let a = random_rdm(4, 2, Statistics::Fermion, true, 77).unwrap();
        let b = random_rdm(4, 2, Statistics::Fermion, true, 77).unwrap();
        assert_eq!(a, b);
        for seed in 0..50 {
            for (nb, n, st) in [(4, 3, Statistics::Fermion), (3, 2, Statistics::Boson)] {
                let g = random_rdm(nb, n, st, false, seed).unwrap();
                assert!((linalg::trace(g.matrix()).re - n as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interior_samples_classify_interior() {
        for seed in 0..1000 {
            let g = random_rdm(4, 2, Statistics::Fermion, true, seed).unwrap();
            assert_eq!(
                classify_rdm(&g, Statistics::Fermion, DEFAULT_CLASSIFY_TOL).unwrap(),
                RdmClass::Interior
            );
        }
    }

    #[test]
    fn boundary_samples_classify_boundary() {
        for seed in 0..100 {
            for (nb, n, st) in [(4, 2, Statistics::Fermion), (3, 2, Statistics::Boson)] {
                let g = random_boundary_rdm(nb, n, st, seed).unwrap();
                assert_eq!(classify_rdm(&g, st, DEFAULT_CLASSIFY_TOL).unwrap(), RdmClass::Boundary);
            }
        }
    }

    #[test]
    fn sampler_rejects_bad_counts() {
        assert!(matches!(
            random_rdm(2, 2, Statistics::Fermion, false, 0),
            Err(Error::InvalidArguments(_))
        ));
        assert!(matches!(
            random_rdm(0, 1, Statistics::Boson, false, 0),
            Err(Error::InvalidArguments(_))
        ));
    }
}
