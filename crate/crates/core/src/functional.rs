//! The universal functional through its concave dual.
//!
//! For a traceless potential `v` the canonical free energy
//! `Ω[v] = -β⁻¹ log Tr exp(-β(H₀ + V̂_v))` is smooth and strictly concave. The
//! universal functional of an interior 1RDM `γ` is the maximum of
//! `g(v) = Ω[v] - tr(vγ)`; the maximizer `v*` generates `γ` and `-v*` is the
//! gradient of the functional. Potentials are handled in coordinates of an
//! orthonormal basis of traceless Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    classify_rdm, gibbs_state, helmholtz, one_rdm, EnsembleParams, GibbsSolution, OneRdm, RdmClass,
    DEFAULT_CLASSIFY_TOL,
};
use crate::error::{Error, Result};
use crate::fock::{lift_unchecked, ConfigurationBasis, ManyBodyOperator, OneBodyOperator};
use crate::linalg::{self, frobenius, hermitian_deviation, max_abs, trace, trace_product, CMat, C64};

/// Hermitian `nb × nb` potential with zero trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TracelessPotential {
    matrix: CMat,
}

impl TracelessPotential {
    const TRACE_TOL: f64 = 1e-12;

    pub fn new(matrix: CMat) -> Result<Self> {
        let scale = max_abs(&matrix).max(1.0);
        let dev = hermitian_deviation(&matrix);
        if dev > 1e-13 * scale {
            return Err(Error::NonHermitianInput(dev));
        }
        let tr = trace(&matrix).re;
        if tr.abs() > Self::TRACE_TOL * scale {
            return Err(Error::NonZeroTrace(tr));
        }
        Ok(Self {
            matrix: linalg::hermitian_part(&matrix),
        })
    }

    /// Removes the trace of a Hermitian matrix.
    pub fn project(matrix: &CMat) -> Result<Self> {
        let nb = matrix.nrows();
        let shift = trace(matrix).re / nb as f64;
        let mut m = linalg::hermitian_part(matrix);
        for k in 0..nb {
            m[(k, k)] -= C64::new(shift, 0.0);
        }
        Self::new(m)
    }

    pub fn zeros(nb: usize) -> Self {
        Self {
            matrix: CMat::zeros(nb, nb),
        }
    }

    pub fn from_coefficients(pbasis: &PotentialBasis, coefficients: &[f64]) -> Self {
        let nb = pbasis.nb();
        let mut m = CMat::zeros(nb, nb);
        for (g, &c) in pbasis.elements().iter().zip(coefficients) {
            m += g.scale(c);
        }
        Self {
            matrix: linalg::hermitian_part(&m),
        }
    }

    pub fn coefficients(&self, pbasis: &PotentialBasis) -> Vec<f64> {
        pbasis.coordinates(&self.matrix)
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn nb(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale(s),
        }
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `t·self + (1-t)·other`.
    pub fn blend(&self, other: &TracelessPotential, t: f64) -> Self {
        Self {
            matrix: self.matrix.scale(t) + other.matrix.scale(1.0 - t),
        }
    }

    pub fn distance(&self, other: &TracelessPotential) -> f64 {
        frobenius(&(&self.matrix - &other.matrix))
    }

    /// Random direction (traceless projection of a GUE sample) scaled to
    /// Frobenius norm `norm`.
    pub fn random<R: rand::Rng + ?Sized>(nb: usize, norm: f64, rng: &mut R) -> Self {
        loop {
            let v = Self::project(&linalg::random_hermitian(nb, rng)).expect("projection is traceless");
            let len = v.norm();
            if len > 1e-8 {
                return v.scaled(norm / len);
            }
        }
    }

    pub fn as_one_body(&self) -> OneBodyOperator {
        OneBodyOperator::new(self.matrix.clone()).expect("traceless potentials are Hermitian")
    }
}

/// Orthonormal basis `{G_α}` of the traceless Hermitian matrices,
/// `tr(G_α G_β) = δ_αβ`.
#[derive(Debug, Clone)]
pub struct PotentialBasis {
    nb: usize,
    elements: Vec<CMat>,
}

impl PotentialBasis {
    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    /// `tr(m G_α)` for every element.
    pub fn coordinates(&self, m: &CMat) -> Vec<f64> {
        self.elements.iter().map(|g| trace_product(m, g)).collect()
    }
}

/// Generalized Gell-Mann matrices normalised to unit Frobenius norm:
/// symmetric pairs, antisymmetric pairs, then the diagonal ladder.
pub fn potential_basis(nb: usize) -> Result<PotentialBasis> {
    if nb < 2 {
        return Err(Error::InvalidArguments(format!(
            "potential basis needs nb >= 2, got {nb}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut elements = Vec::with_capacity(nb * nb - 1);
    for j in 0..nb {
        for k in j + 1..nb {
            let mut m = CMat::zeros(nb, nb);
            m[(j, k)] = C64::new(s, 0.0);
            m[(k, j)] = C64::new(s, 0.0);
            elements.push(m);
        }
    }
    for j in 0..nb {
        for k in j + 1..nb {
            let mut m = CMat::zeros(nb, nb);
            m[(j, k)] = C64::new(0.0, -s);
            m[(k, j)] = C64::new(0.0, s);
            elements.push(m);
        }
    }
    for l in 1..nb {
        let norm = ((l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(nb, nb);
        for k in 0..l {
            m[(k, k)] = C64::new(1.0 / norm, 0.0);
        }
        m[(l, l)] = C64::new(-(l as f64) / norm, 0.0);
        elements.push(m);
    }
    Ok(PotentialBasis { nb, elements })
}

/// Configuration space together with the potential-free Hamiltonian `H₀`.
#[derive(Debug, Clone)]
pub struct System {
    pub basis: ConfigurationBasis,
    pub h0: ManyBodyOperator,
}

impl System {
    pub fn new(basis: ConfigurationBasis, h0: ManyBodyOperator) -> Result<Self> {
        if h0.tag != basis.tag() {
            return Err(Error::BasisMismatch {
                expected: basis.tag().to_string(),
                found: h0.tag.to_string(),
            });
        }
        Ok(Self { basis, h0 })
    }

    /// `H₀ = 0`.
    pub fn free(basis: ConfigurationBasis) -> Self {
        let h0 = ManyBodyOperator::zeros(&basis);
        Self { basis, h0 }
    }

    pub fn nb(&self) -> usize {
        self.basis.nb()
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// `H_v = H₀ + V̂_v`.
    pub fn hamiltonian(&self, v: &TracelessPotential) -> Result<ManyBodyOperator> {
        if v.nb() != self.nb() {
            return Err(Error::DimensionMismatch {
                expected: self.nb(),
                found: v.nb(),
            });
        }
        let lifted = lift_unchecked(v.matrix(), &self.basis);
        Ok(ManyBodyOperator {
            matrix: linalg::hermitian_part(&(&self.h0.matrix + lifted)),
            tag: self.h0.tag,
        })
    }

    pub fn gibbs(&self, v: &TracelessPotential, params: &EnsembleParams) -> Result<GibbsSolution> {
        gibbs_state(&self.hamiltonian(v)?, params)
    }

    /// Adds `c·𝟙` to `H₀`.
    pub fn with_shifted_h0(&self, c: f64) -> Self {
        Self {
            basis: self.basis.clone(),
            h0: self.h0.shifted(c),
        }
    }
}

/// `(Ω[v], γ_v)`.
pub fn omega_of_v(v: &TracelessPotential, system: &System, params: &EnsembleParams) -> Result<(f64, OneRdm)> {
    let g = system.gibbs(v, params)?;
    let gamma = one_rdm(&g.rho, &system.basis)?;
    Ok((g.omega, gamma))
}

/// `Ω₀[ρ_v] = Tr ρ_v (H₀ + β⁻¹ log ρ_v)`, the potential-free Helmholtz
/// functional at the Gibbs state of `v`.
pub fn omega_zero_at_gibbs(v: &TracelessPotential, system: &System, params: &EnsembleParams) -> Result<f64> {
    let g = system.gibbs(v, params)?;
    helmholtz(&g.rho, &system.h0, params)
}

/// Exact `Δ(x, y)/Z` for shifted energies: the divided difference of
/// `exp(-βE)` normalised by the partition function.
fn divided_difference(x: f64, y: f64, e_min: f64, beta: f64, norm: f64, delta: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let base = (-beta * (lo - e_min)).exp() / norm;
    let d = hi - lo;
    if d <= delta {
        -beta * base
    } else {
        base * (-beta * d).exp_m1() / d
    }
}

/// Linear-response matrix `J_αβ = ∂ tr(γ_v G_α) / ∂c_β`, the Hessian of
/// `Ω` in the coordinates of `pbasis`.
pub fn response_jacobian(
    v: &TracelessPotential,
    system: &System,
    params: &EnsembleParams,
    pbasis: &PotentialBasis,
) -> Result<DMatrix<f64>> {
    let g = system.gibbs(v, params)?;
    Ok(jacobian_from_gibbs(&g, system, pbasis))
}

pub(crate) fn jacobian_from_gibbs(g: &GibbsSolution, system: &System, pbasis: &PotentialBasis) -> DMatrix<f64> {
    let d = g.energies.len();
    let beta = g.beta;
    let e_min = g.energies[0];
    let norm: f64 = g.energies.iter().map(|&e| (-beta * (e - e_min)).exp()).sum();
    let scale = g.energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let delta = 1e-9 * scale;

    let kernel = DMatrix::from_fn(d, d, |m, n| {
        divided_difference(g.energies[m], g.energies[n], e_min, beta, norm, delta)
    });

    let vt = g.vectors.adjoint();
    let rotated: Vec<CMat> = pbasis
        .elements()
        .iter()
        .map(|el| &vt * lift_unchecked(el, &system.basis) * &g.vectors)
        .collect();
    let means: Vec<f64> = rotated
        .iter()
        .map(|a| (0..d).map(|m| g.weights[m] * a[(m, m)].re).sum())
        .collect();

    let p = pbasis.len();
    let mut j = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let (ra, rb) = (&rotated[a], &rotated[b]);
            let mut acc = 0.0;
            for m in 0..d {
                for n in 0..d {
                    acc += (ra[(m, n)].conj() * rb[(m, n)]).re * kernel[(m, n)];
                }
            }
            let val = acc + beta * means[a] * means[b];
            j[(a, b)] = val;
            j[(b, a)] = val;
        }
    }
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converged,
    NonRepresentable,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub g_value: f64,
    pub residual: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionReport {
    pub v_star: TracelessPotential,
    /// `g(v*) = Ω[v*] - tr(v* γ)`; equals the universal functional on convergence.
    pub f_value: f64,
    /// `-v*`.
    pub gradient: TracelessPotential,
    /// `‖γ_{v*} - γ‖₂`.
    pub residual: f64,
    pub iterations: usize,
    pub verdict: Verdict,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionOptions {
    /// Convergence threshold on `‖γ_v - γ‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    /// Cap on `‖v‖₂`; `None` means `1e6 / β`.
    pub norm_cap: Option<f64>,
    /// Longest move per iteration; `None` means `10 / β`.
    pub max_step: Option<f64>,
    /// Newton steps below `step_tol · max(1, ‖v‖₂)` count as converged.
    pub step_tol: f64,
    /// Iterations without residual progress before giving up.
    pub stagnation_window: usize,
    /// Reject targets that are not strictly inside the admissible set
    /// before iterating.
    pub precheck: bool,
    pub classify_tol: f64,
    pub initial: Option<TracelessPotential>,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            norm_cap: None,
            max_step: None,
            step_tol: 1e-9,
            stagnation_window: 10,
            precheck: false,
            classify_tol: DEFAULT_CLASSIFY_TOL,
            initial: None,
        }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
const FLOOR_STEP_REL: f64 = 1e-5;

struct Iterate {
    coeffs: Vec<f64>,
    v: TracelessPotential,
    gibbs: GibbsSolution,
    gamma: OneRdm,
    g: f64,
}

fn evaluate(
    coeffs: Vec<f64>,
    pbasis: &PotentialBasis,
    target: &OneRdm,
    system: &System,
    params: &EnsembleParams,
) -> Result<Iterate> {
    let v = TracelessPotential::from_coefficients(pbasis, &coeffs);
    let gibbs = system.gibbs(&v, params)?;
    let gamma = one_rdm(&gibbs.rho, &system.basis)?;
    let g = gibbs.omega - trace_product(v.matrix(), target.matrix());
    Ok(Iterate {
        coeffs,
        v,
        gibbs,
        gamma,
        g,
    })
}

/// Finds the traceless potential whose Gibbs 1RDM is `gamma` by damped
/// Newton ascent on `g(v) = Ω[v] - tr(vγ)`.
pub fn invert_potential(
    gamma: &OneRdm,
    system: &System,
    params: &EnsembleParams,
    opts: &InversionOptions,
) -> Result<InversionReport> {
    if gamma.nb() != system.nb() {
        return Err(Error::DimensionMismatch {
            expected: system.nb(),
            found: gamma.nb(),
        });
    }
    if gamma.n() != system.n() {
        return Err(Error::InvalidArguments(format!(
            "1RDM describes {} particles, system has {}",
            gamma.n(),
            system.n()
        )));
    }
    let pbasis = potential_basis(system.nb())?;
    let norm_cap = opts.norm_cap.unwrap_or(1e6 / params.beta());
    let max_step = opts.max_step.unwrap_or(10.0 / params.beta());
    let start = match &opts.initial {
        Some(v) => v.coefficients(&pbasis),
        None => vec![0.0; pbasis.len()],
    };
    let mut cur = evaluate(start, &pbasis, gamma, system, params)?;

    let finish = |cur: Iterate, residual: f64, iterations, verdict, trace| InversionReport {
        gradient: cur.v.neg(),
        v_star: cur.v,
        f_value: cur.g,
        residual,
        iterations,
        verdict,
        trace,
    };

    if opts.precheck && classify_rdm(gamma, system.basis.statistics(), opts.classify_tol)? != RdmClass::Interior {
        let residual = cur.gamma.distance(gamma);
        return Ok(finish(cur, residual, 0, Verdict::NonRepresentable, Vec::new()));
    }

    let mut trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut best_iter = 0usize;
    let mut prev_step = f64::INFINITY;
    let mut window_start_residual = Vec::new();

    for iter in 0..opts.max_iter {
        let residual = cur.gamma.distance(gamma);
        let r = DVector::from_vec(pbasis.coordinates(&(cur.gamma.matrix() - gamma.matrix())));
        let jac = jacobian_from_gibbs(&cur.gibbs, system, &pbasis);
        // Without a Newton step (J numerically singular) fall back to the
        // gradient, which never certifies convergence.
        let (step, newton) = match linalg::solve_symmetric(&jac, &(-&r)) {
            Some(s) => (s, true),
            None => (r.clone(), false),
        };
        let step_norm = step.norm();
        trace.push(IterationRecord {
            iteration: iter,
            g_value: cur.g,
            residual,
            step_norm,
        });
        window_start_residual.push(residual);

        let v_norm = cur.v.norm();
        let scale = v_norm.max(1.0);
        // A step that stopped shrinking but is tiny means round-off, not a
        // target outside the interior (there steps stay of order 1/β).
        let at_floor = step_norm >= 0.5 * prev_step && step_norm <= FLOOR_STEP_REL * scale;
        if newton && residual <= opts.tol && (step_norm <= opts.step_tol * scale || at_floor) {
            return Ok(finish(cur, residual, iter, Verdict::Converged, trace));
        }
        if v_norm > norm_cap {
            return Ok(finish(cur, residual, iter, Verdict::NonRepresentable, trace));
        }
        if residual < 0.999 * best {
            best = residual;
            best_iter = iter;
        } else if iter - best_iter >= opts.stagnation_window {
            return Ok(finish(cur, residual, iter, Verdict::NonRepresentable, trace));
        }
        prev_step = step_norm;

        // Far from the target J can be nearly singular; cap the move length.
        let step = if step_norm > max_step {
            step * (max_step / step_norm)
        } else {
            step
        };
        let slope = r.dot(&step);
        let slack = 1e-13 * cur.g.abs().max(1.0);
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let coeffs: Vec<f64> = cur.coeffs.iter().zip(step.iter()).map(|(c, d)| c + s * d).collect();
            let trial = evaluate(coeffs, &pbasis, gamma, system, params)?;
            if trial.g >= cur.g + ARMIJO_C1 * s * slope - slack {
                accepted = Some(trial);
                break;
            }
            s *= 0.5;
        }
        match accepted {
            Some(next) => cur = next,
            None => {
                let verdict = if residual <= opts.tol {
                    Verdict::Converged
                } else {
                    Verdict::NonRepresentable
                };
                return Ok(finish(cur, residual, iter, verdict, trace));
            }
        }
    }

    let residual = cur.gamma.distance(gamma);
    let iterations = opts.max_iter;
    trace.push(IterationRecord {
        iteration: iterations,
        g_value: cur.g,
        residual,
        step_norm: 0.0,
    });
    if residual <= opts.tol {
        return Ok(finish(cur, residual, iterations, Verdict::Converged, trace));
    }
    let window = opts.stagnation_window.min(window_start_residual.len());
    let earlier = window_start_residual[window_start_residual.len() - window];
    let verdict = if residual > 0.5 * earlier {
        Verdict::NonRepresentable
    } else {
        Verdict::MaxIterations
    };
    Ok(finish(cur, residual, iterations, verdict, trace))
}

/// `F[γ]` and its gradient `-v*` with default solver options.
pub fn universal_functional(
    gamma: &OneRdm,
    system: &System,
    params: &EnsembleParams,
) -> Result<(f64, TracelessPotential)> {
    universal_functional_with(gamma, system, params, &InversionOptions::default())
}

pub fn universal_functional_with(
    gamma: &OneRdm,
    system: &System,
    params: &EnsembleParams,
    opts: &InversionOptions,
) -> Result<(f64, TracelessPotential)> {
    let report = invert_potential(gamma, system, params, opts)?;
    match report.verdict {
        Verdict::Converged => Ok((report.f_value, report.gradient)),
        Verdict::NonRepresentable => Err(Error::NonRepresentable(format!(
            "residual {:.3e} after {} iterations",
            report.residual, report.iterations
        ))),
        Verdict::MaxIterations => Err(Error::MaxIterations(report.iterations)),
    }
}
