//! Gibbs states, entropies, free energies and one-body reduced density
//! matrices on a fixed-N configuration space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{BasisTag, ConfigurationBasis, ManyBodyOperator, Statistics};
use crate::linalg::{self, eigh, hermitian_deviation, max_abs, trace, trace_product, CMat, C64};

/// Default tolerance used by [`classify_rdm`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

const DENSITY_TOL: f64 = 1e-12;
const RDM_TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    beta: f64,
}

impl EnsembleParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidArguments(format!(
                "inverse temperature must be finite and positive, got {beta}"
            )));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// Hermitian, positive semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMat,
    tag: BasisTag,
}

impl DensityOperator {
    pub fn new(matrix: CMat, tag: BasisTag) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > DENSITY_TOL {
            return Err(Error::InvalidDensityOperator(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = trace(&matrix).re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensityOperator(format!("trace {tr} differs from one")));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let min = eigh(&matrix)?.values.first().copied().unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(Error::InvalidDensityOperator(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix, tag })
    }

    /// Convex combination `Σ w_k |ψ_k><ψ_k|` of normalized states.
    pub fn mixture(states: &[(f64, nalgebra::DVector<C64>)], tag: BasisTag) -> Result<Self> {
        let d = states.first().map(|(_, v)| v.len()).unwrap_or(0);
        let mut m = CMat::zeros(d, d);
        for (w, psi) in states {
            m += psi * psi.adjoint() * C64::new(*w, 0.0);
        }
        Self::new(m, tag)
    }

    /// `I/D`.
    pub fn maximally_mixed(basis: &ConfigurationBasis) -> Self {
        let d = basis.dim();
        Self {
            matrix: linalg::identity(d).scale(1.0 / d as f64),
            tag: basis.tag(),
        }
    }

    pub(crate) fn from_trusted(matrix: CMat, tag: BasisTag) -> Self {
        Self { matrix, tag }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `λ self + (1-λ) other`.
    pub fn blend(&self, other: &DensityOperator, lambda: f64) -> Result<DensityOperator> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch {
                expected: self.tag.to_string(),
                found: other.tag.to_string(),
            });
        }
        let matrix = self.matrix.scale(lambda) + other.matrix.scale(1.0 - lambda);
        Ok(DensityOperator { matrix, tag: self.tag })
    }

    /// Eigenvalues clamped into `[0, 1]`; deviations beyond tolerance are errors.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        eigh(&self.matrix)?
            .values
            .into_iter()
            .map(|w| {
                if !(-DENSITY_TOL..=1.0 + DENSITY_TOL).contains(&w) {
                    Err(Error::InvalidDensityOperator(format!(
                        "eigenvalue {w:.3e} outside [0, 1]"
                    )))
                } else {
                    Ok(w.clamp(0.0, 1.0))
                }
            })
            .collect()
    }
}

/// Gibbs state together with the eigendecomposition of the Hamiltonian.
#[derive(Debug, Clone)]
pub struct GibbsSolution {
    pub rho: DensityOperator,
    /// `log Z = -β E_min + log Σ exp(-β(E_m - E_min))`.
    pub log_z: f64,
    /// `-β⁻¹ log Z`.
    pub omega: f64,
    pub beta: f64,
    /// Eigenvalues of the Hamiltonian, ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors of the Hamiltonian as columns.
    pub vectors: CMat,
    /// Boltzmann weights `exp(-β E_m) / Z`.
    pub weights: Vec<f64>,
}

impl GibbsSolution {
    /// Partition function; may overflow to infinity, prefer `log_z`.
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Entropy from the Boltzmann weights.
    pub fn entropy(&self) -> f64 {
        entropy_of_weights(&self.weights)
    }

    /// `Σ_m w_m E_m`.
    pub fn energy(&self) -> f64 {
        self.weights.iter().zip(&self.energies).map(|(w, e)| w * e).sum()
    }
}

/// `ρ = exp(-βH) / Z` through the eigendecomposition of `H`.
pub fn gibbs_state(h: &ManyBodyOperator, params: &EnsembleParams) -> Result<GibbsSolution> {
    let dev = hermitian_deviation(&h.matrix);
    if dev > 1e-12 * max_abs(&h.matrix).max(1.0) {
        return Err(Error::NonHermitianInput(dev));
    }
    let beta = params.beta();
    let eig = eigh(&linalg::hermitian_part(&h.matrix))?;
    let e_min = eig.values[0];
    let boltzmann: Vec<f64> = eig.values.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let sum: f64 = boltzmann.iter().sum();
    let weights: Vec<f64> = boltzmann.iter().map(|b| b / sum).collect();
    let log_z = -beta * e_min + sum.ln();

    let n = weights.len();
    let mut scaled = eig.vectors.clone();
    for (k, &w) in weights.iter().enumerate() {
        for r in 0..n {
            scaled[(r, k)] *= w;
        }
    }
    let rho = linalg::hermitian_part(&(&scaled * eig.vectors.adjoint()));

    Ok(GibbsSolution {
        rho: DensityOperator::from_trusted(rho, h.tag),
        log_z,
        omega: -log_z / beta,
        beta,
        energies: eig.values,
        vectors: eig.vectors,
        weights,
    })
}

pub(crate) fn entropy_of_weights(weights: &[f64]) -> f64 {
    weights.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.ln()).sum()
}

/// Von Neumann entropy `-Tr ρ log ρ` with `0 log 0 = 0`.
pub fn entropy(rho: &DensityOperator) -> Result<f64> {
    Ok(entropy_of_weights(&rho.spectrum()?).max(0.0))
}

/// `Tr(ρH)`.
pub fn energy(rho: &DensityOperator, h: &ManyBodyOperator) -> Result<f64> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    Ok(trace_product(rho.matrix(), &h.matrix))
}

/// Helmholtz free energy `Tr(ρH) - β⁻¹ S[ρ]`.
pub fn helmholtz(rho: &DensityOperator, h: &ManyBodyOperator, params: &EnsembleParams) -> Result<f64> {
    let e = energy(rho, h)?;
    Ok(e - entropy(rho)? / params.beta())
}

/// Hermitian `nb × nb` matrix with fixed trace `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneRdm {
    matrix: CMat,
    n: usize,
}

impl OneRdm {
    pub fn new(matrix: CMat, n: usize) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let scale = max_abs(&matrix).max(1.0);
        let dev = hermitian_deviation(&matrix);
        if dev > 1e-10 * scale {
            return Err(Error::NonHermitianInput(dev));
        }
        let tr = trace(&matrix).re;
        if (tr - n as f64).abs() > RDM_TRACE_TOL * scale {
            return Err(Error::InvalidArguments(format!(
                "1RDM trace {tr} differs from particle number {n}"
            )));
        }
        Ok(Self {
            matrix: linalg::hermitian_part(&matrix),
            n,
        })
    }

    /// `(N/N_b)·𝟙`.
    pub fn uniform(nb: usize, n: usize) -> Self {
        Self {
            matrix: linalg::identity(nb).scale(n as f64 / nb as f64),
            n,
        }
    }

    /// `U diag(occupations) U†`.
    pub fn from_spectrum(occupations: &[f64], orbitals: &CMat, n: usize) -> Result<Self> {
        let d = linalg::real_diag(occupations);
        Self::new(orbitals * d * orbitals.adjoint(), n)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn nb(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `λ self + (1-λ) other`.
    pub fn blend(&self, other: &OneRdm, lambda: f64) -> Result<OneRdm> {
        OneRdm::new(self.matrix.scale(lambda) + other.matrix.scale(1.0 - lambda), self.n)
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &OneRdm) -> f64 {
        linalg::frobenius(&(&self.matrix - &other.matrix))
    }
}

/// `γ_ij = Tr{ρ a†_j a_i}`.
pub fn one_rdm(rho: &DensityOperator, basis: &ConfigurationBasis) -> Result<OneRdm> {
    if rho.tag() != basis.tag() {
        return Err(Error::BasisMismatch {
            expected: basis.tag().to_string(),
            found: rho.tag().to_string(),
        });
    }
    let nb = basis.nb();
    let r = rho.matrix();
    let mut gamma = CMat::zeros(nb, nb);
    for i in 0..nb {
        for j in 0..nb {
            let mut acc = C64::new(0.0, 0.0);
            // Tr(ρ A) = Σ ρ_{col,row} A_{row,col} with A = a†_j a_i
            for t in basis.transitions(j, i) {
                acc += r[(t.col, t.row)] * t.amplitude;
            }
            gamma[(i, j)] = acc;
        }
    }
    OneRdm::new(gamma, basis.n())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpectrum {
    /// Natural occupation numbers, descending.
    pub occupations: Vec<f64>,
    /// Natural orbitals as columns, aligned with `occupations`.
    pub orbitals: CMat,
}

pub fn natural_spectrum(gamma: &OneRdm) -> Result<NaturalSpectrum> {
    let eig = eigh(gamma.matrix())?;
    let nb = eig.values.len();
    let occupations = eig.values.iter().rev().copied().collect();
    let orbitals = CMat::from_fn(nb, nb, |r, c| eig.vectors[(r, nb - 1 - c)]);
    Ok(NaturalSpectrum { occupations, orbitals })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RdmClass {
    Interior,
    Boundary,
    Outside,
}

/// Places occupation numbers relative to the admissible set.
pub fn classify_occupations(occupations: &[f64], statistics: Statistics, tol: f64) -> RdmClass {
    let upper = statistics == Statistics::Fermion;
    if occupations.iter().any(|&x| x < -tol || (upper && x > 1.0 + tol)) {
        return RdmClass::Outside;
    }
    if occupations.iter().all(|&x| x > tol && (!upper || x < 1.0 - tol)) {
        RdmClass::Interior
    } else {
        RdmClass::Boundary
    }
}

pub fn classify_rdm(gamma: &OneRdm, statistics: Statistics, tol: f64) -> Result<RdmClass> {
    Ok(classify_occupations(
        &natural_spectrum(gamma)?.occupations,
        statistics,
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_basis, lift_one_body, slater_state, OneBodyOperator, Orbitals};
    use crate::linalg::{identity, random_hermitian, real_diag};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn op(matrix: CMat, basis: &ConfigurationBasis) -> ManyBodyOperator {
        ManyBodyOperator {
            matrix,
            tag: basis.tag(),
        }
    }

    #[test]
    fn zero_hamiltonian_gives_maximally_mixed_state() {
        let b = build_basis(3, 2, Statistics::Fermion).unwrap();
        let g = gibbs_state(&ManyBodyOperator::zeros(&b), &EnsembleParams::new(1.0).unwrap()).unwrap();
        assert!(max_abs(&(g.rho.matrix() - identity(3).scale(1.0 / 3.0))) < 1e-15);
        assert!((g.log_z - 3f64.ln()).abs() < 1e-15);
        assert!((g.omega + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn large_beta_projects_on_ground_state() {
        let b = build_basis(2, 1, Statistics::Fermion).unwrap();
        let g = gibbs_state(&op(real_diag(&[0.0, 1.0]), &b), &EnsembleParams::new(50.0).unwrap()).unwrap();
        let p = (-50f64).exp();
        assert!((g.rho.matrix()[(1, 1)].re - p / (1.0 + p)).abs() < 1e-30);
        assert!(g.omega.abs() < 1e-20);
    }

    #[test]
    fn gibbs_state_is_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let b = build_basis(4, 2, Statistics::Fermion).unwrap();
        let h = op(random_hermitian(b.dim(), &mut rng), &b);
        let g = gibbs_state(&h, &EnsembleParams::new(1.0).unwrap()).unwrap();
        // β⁻¹ log ρ + H must be a multiple of the identity.
        let log_rho = crate::linalg::eigh(g.rho.matrix()).unwrap().reconstruct_with(f64::ln);
        let m = log_rho + &h.matrix;
        let c = trace(&m).re / b.dim() as f64;
        assert!(max_abs(&(m - identity(b.dim()).scale(c))) < 1e-10);
    }

    #[test]
    fn partition_function_survives_large_energies() {
        let b = build_basis(2, 1, Statistics::Boson).unwrap();
        let g = gibbs_state(
            &op(real_diag(&[-800.0, -799.0]), &b),
            &EnsembleParams::new(10.0).unwrap(),
        )
        .unwrap();
        assert!(g.log_z.is_finite());
        assert!((g.log_z - (8000.0 + (1.0 + (-10f64).exp()).ln())).abs() < 1e-9);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let b = build_basis(2, 1, Statistics::Boson).unwrap();
        let h = op(crate::linalg::from_real_rows(2, &[0.0, 1.0, 0.0, 0.0]), &b);
        assert!(matches!(
            gibbs_state(&h, &EnsembleParams::new(1.0).unwrap()),
            Err(Error::NonHermitianInput(_))
        ));
    }

    #[test]
    fn beta_must_be_positive() {
        assert!(EnsembleParams::new(0.0).is_err());
        assert!(EnsembleParams::new(f64::NAN).is_err());
        assert!(EnsembleParams::new(f64::INFINITY).is_err());
    }

    #[test]
    fn entropy_examples() {
        let b = build_basis(3, 2, Statistics::Fermion).unwrap();
        let pure = slater_state(&Orbitals::Indices(vec![0, 1]), &b).unwrap();
        assert_eq!(entropy(&pure).unwrap(), 0.0);
        let mixed = DensityOperator::maximally_mixed(&b);
        assert!((entropy(&mixed).unwrap() - 3f64.ln()).abs() < 1e-14);
        let rho = DensityOperator::new(real_diag(&[0.5, 0.25, 0.25]), b.tag()).unwrap();
        // -0.5 ln 0.5 - 2·0.25 ln 0.25 = 0.5 ln 2 + ln 2
        assert!((entropy(&rho).unwrap() - 1.5 * 2f64.ln()).abs() < 1e-14);
        assert!((entropy(&rho).unwrap() - 1.0397207708399179).abs() < 1e-12);
    }

    #[test]
    fn invalid_density_operators() {
        let b = build_basis(3, 2, Statistics::Fermion).unwrap();
        assert!(matches!(
            DensityOperator::new(real_diag(&[0.5, 0.25, 0.3]), b.tag()),
            Err(Error::InvalidDensityOperator(_))
        ));
        assert!(matches!(
            DensityOperator::new(real_diag(&[1.2, -0.2, 0.0]), b.tag()),
            Err(Error::InvalidDensityOperator(_))
        ));
    }

    #[test]
    fn helmholtz_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = build_basis(4, 2, Statistics::Fermion).unwrap();
        let params = EnsembleParams::new(0.8).unwrap();
        let h = op(random_hermitian(b.dim(), &mut rng), &b);
        let g = gibbs_state(&h, &params).unwrap();
        assert!((helmholtz(&g.rho, &h, &params).unwrap() - g.omega).abs() < 1e-10);

        let zero = ManyBodyOperator::zeros(&b);
        let mixed = DensityOperator::maximally_mixed(&b);
        let expected = -(b.dim() as f64).ln() / 0.8;
        assert!((helmholtz(&mixed, &zero, &params).unwrap() - expected).abs() < 1e-14);
        let pure = slater_state(&Orbitals::Indices(vec![1, 3]), &b).unwrap();
        assert_eq!(helmholtz(&pure, &zero, &params).unwrap(), 0.0);

        let wrong = build_basis(3, 2, Statistics::Fermion).unwrap();
        assert!(matches!(
            helmholtz(&pure, &ManyBodyOperator::zeros(&wrong), &params),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn one_rdm_examples() {
        let f = build_basis(4, 2, Statistics::Fermion).unwrap();
        let g = one_rdm(&DensityOperator::maximally_mixed(&f), &f).unwrap();
        assert!(max_abs(&(g.matrix() - identity(4).scale(0.5))) < 1e-15);

        let s = slater_state(&Orbitals::Indices(vec![0, 1]), &f).unwrap();
        let g = one_rdm(&s, &f).unwrap();
        assert_eq!(g.matrix(), &real_diag(&[1.0, 1.0, 0.0, 0.0]));

        let bb = build_basis(2, 2, Statistics::Boson).unwrap();
        let c = slater_state(&Orbitals::Occupation(vec![2, 0]), &bb).unwrap();
        assert_eq!(one_rdm(&c, &bb).unwrap().matrix(), &real_diag(&[2.0, 0.0]));

        assert!(matches!(one_rdm(&c, &f), Err(Error::BasisMismatch { .. })));
    }

    #[test]
    fn one_rdm_is_dual_to_lifting() {
        // tr(h γ) = Tr(ρ lift(h)) for any Hermitian h.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (nb, n, s) in [(4, 2, Statistics::Fermion), (3, 2, Statistics::Boson)] {
            let b = build_basis(nb, n, s).unwrap();
            let rho = gibbs_state(
                &op(random_hermitian(b.dim(), &mut rng), &b),
                &EnsembleParams::new(1.0).unwrap(),
            )
            .unwrap()
            .rho;
            let h = random_hermitian(nb, &mut rng);
            let lifted = lift_one_body(&OneBodyOperator::new(h.clone()).unwrap(), &b).unwrap();
            let gamma = one_rdm(&rho, &b).unwrap();
            let lhs = trace_product(&h, gamma.matrix());
            let rhs = trace_product(rho.matrix(), &lifted.matrix);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn natural_spectrum_examples() {
        let g = OneRdm::uniform(4, 3);
        let ns = natural_spectrum(&g).unwrap();
        assert!(ns.occupations.iter().all(|&x| (x - 0.75).abs() < 1e-15));

        let g = OneRdm::new(real_diag(&[0.5, 1.0, 0.5]), 2).unwrap();
        let ns = natural_spectrum(&g).unwrap();
        for (a, b) in ns.occupations.iter().zip([1.0, 0.5, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        let back = OneRdm::from_spectrum(&ns.occupations, &ns.orbitals, 2).unwrap();
        assert!(max_abs(&(back.matrix() - g.matrix())) < 1e-12);
    }

    #[test]
    fn natural_spectrum_of_random_rdm() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u = crate::linalg::haar_unitary(5, &mut rng);
        let occ = [0.9, 0.7, 0.2, 0.15, 0.05];
        let g = OneRdm::from_spectrum(&occ, &u, 2).unwrap();
        let ns = natural_spectrum(&g).unwrap();
        assert!((ns.occupations.iter().sum::<f64>() - 2.0).abs() < 1e-10);
        assert!(max_abs(&(ns.orbitals.adjoint() * &ns.orbitals - identity(5))) < 1e-12);
        let back = OneRdm::from_spectrum(&ns.occupations, &ns.orbitals, 2).unwrap();
        assert!(max_abs(&(back.matrix() - g.matrix())) < 1e-12);
    }

    #[test]
    fn classification_examples() {
        let tol = DEFAULT_CLASSIFY_TOL;
        let class =
            |occ: &[f64], n| classify_rdm(&OneRdm::new(real_diag(occ), n).unwrap(), Statistics::Fermion, tol).unwrap();
        assert_eq!(class(&[1.0, 0.5, 0.5], 2), RdmClass::Boundary);
        assert_eq!(class(&[0.9, 0.6, 0.5], 2), RdmClass::Interior);
        assert_eq!(class(&[1.2, 0.8], 2), RdmClass::Outside);
        assert_eq!(
            classify_occupations(&[2.0, 0.0, 0.0], Statistics::Boson, tol),
            RdmClass::Boundary
        );
        assert_eq!(
            classify_occupations(&[1.5, 0.5], Statistics::Boson, tol),
            RdmClass::Interior
        );
        assert_eq!(
            classify_occupations(&[2.1, -0.1], Statistics::Boson, tol),
            RdmClass::Outside
        );
    }

    #[test]
    fn one_rdm_rejects_wrong_trace() {
        assert!(OneRdm::new(real_diag(&[1.0, 0.5]), 2).is_err());
    }
}
