//! Seeded property campaigns with signed margins (positive = satisfied).
//!
//! Each check draws independent trials from a per-trial seed, runs them in
//! parallel and reports them in trial order, so identical configurations
//! produce identical reports.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    entropy, gibbs_state, helmholtz, natural_spectrum, one_rdm, DensityOperator, EnsembleParams, OneRdm,
};
use crate::error::{Error, Result};
use crate::fock::{build_basis, ManyBodyOperator, Statistics};
use crate::functional::{
    invert_potential, omega_of_v, universal_functional, universal_functional_with, InversionOptions, System,
    TracelessPotential, Verdict,
};
use crate::linalg::{self, frobenius, trace_product, CMat};
use crate::models::ModelSpec;
use crate::representability::{construct_density, random_boundary_rdm, random_rdm_with};

pub const REPORT_VERSION: &str = "1";

pub const CHECK_IDS: [&str; 9] = [
    "hamiltonian_injectivity",
    "injectivity",
    "fractional_occupations",
    "omega_concavity",
    "entropy_concavity",
    "gibbs_minimality",
    "f_convexity",
    "gradient",
    "coleman",
];

/// Minimum separation of the two arguments of strict inequalities.
pub const MIN_SEPARATION: f64 = 0.1;
pub const FD_EPSILON: f64 = 1e-4;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const CONVEXITY_SLACK: f64 = 1e-8;
pub const COLEMAN_TOL: f64 = 1e-10;
pub const INJECTIVITY_TOL: f64 = 1e-10;
pub const OCCUPATION_FLOOR: f64 = 1e-12;
pub const FRACTIONAL_BETAS: [f64; 3] = [0.1, 1.0, 10.0];
const GRADIENT_DIRECTIONS: usize = 5;
/// Random potentials are drawn with `‖v‖₂` uniform in this range.
const POTENTIAL_NORMS: (f64, f64) = (0.1, 2.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub nb: usize,
    pub n: usize,
    pub statistics: Statistics,
    pub beta: f64,
    pub seed: u64,
    pub model: ModelSpec,
    pub trials: usize,
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.nb == 0 || self.n == 0 || (self.statistics == Statistics::Fermion && self.n >= self.nb) {
            return Err(Error::Config(format!(
                "need 0 < N < nb for fermions and N > 0 for bosons, got nb = {}, N = {}",
                self.nb, self.n
            )));
        }
        self.model.validate().map_err(|e| Error::Config(e.to_string()))
    }

    fn system(&self) -> Result<System> {
        self.model.build(build_basis(self.nb, self.n, self.statistics)?)
    }

    fn params(&self) -> Result<EnsembleParams> {
        EnsembleParams::new(self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Absent when the inputs were excluded or the evaluation failed.
    pub margin: Option<f64>,
    pub excluded: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub theorem_id: String,
    pub trials: usize,
    pub failures: usize,
    pub excluded: usize,
    pub worst_margin: Option<f64>,
    /// Failures allowed down to `-tolerance`; zero for strict inequalities.
    pub tolerance: f64,
    pub strict: bool,
    pub config: VerifyConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub details: Vec<TrialRecord>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

enum Outcome {
    Margin(f64),
    Excluded(String),
}

/// SplitMix64 finaliser, used to derive independent trial seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn trial_seed(seed: u64, id: &str, trial: usize) -> u64 {
    let salt = id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    });
    mix(mix(seed ^ salt).wrapping_add(trial as u64))
}

fn run_trials<F>(
    id: &str,
    config: &VerifyConfig,
    strict: bool,
    tolerance: f64,
    notes: Vec<String>,
    f: F,
) -> Result<TheoremReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Outcome> + Sync,
{
    config.validate()?;
    let details: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(config.seed, id, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rec = TrialRecord {
                trial,
                seed,
                margin: None,
                excluded: false,
                passed: false,
                note: None,
            };
            match f(&mut rng) {
                Ok(Outcome::Margin(m)) => {
                    rec.margin = Some(m);
                    rec.passed = if strict { m > 0.0 } else { m >= -tolerance };
                }
                Ok(Outcome::Excluded(why)) => {
                    rec.excluded = true;
                    rec.passed = true;
                    rec.note = Some(why);
                }
                Err(e) => rec.note = Some(e.to_string()),
            }
            rec
        })
        .collect();
    let failures = details.iter().filter(|r| !r.passed).count();
    let excluded = details.iter().filter(|r| r.excluded).count();
    let worst_margin = details.iter().filter_map(|r| r.margin).reduce(f64::min);
    Ok(TheoremReport {
        theorem_id: id.to_string(),
        trials: config.trials,
        failures,
        excluded,
        worst_margin,
        tolerance,
        strict,
        config: config.clone(),
        notes,
        details,
    })
}

fn random_potential(nb: usize, rng: &mut ChaCha8Rng) -> TracelessPotential {
    let norm = rng.random_range(POTENTIAL_NORMS.0..POTENTIAL_NORMS.1);
    TracelessPotential::random(nb, norm, rng)
}

fn potential_pair(nb: usize, rng: &mut ChaCha8Rng) -> (TracelessPotential, TracelessPotential) {
    (random_potential(nb, rng), random_potential(nb, rng))
}

/// Mixture of between one and `dim` random pure states.
pub fn random_density<R: Rng + ?Sized>(system: &System, rng: &mut R) -> Result<DensityOperator> {
    let dim = system.basis.dim();
    let k = rng.random_range(1..=dim);
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let states: Vec<(f64, DVector<_>)> = raw
        .iter()
        .map(|w| (w / total, linalg::random_unit_vector(dim, rng)))
        .collect();
    DensityOperator::mixture(&states, system.basis.tag())
}

/// `Ω[t v₁ + (1-t) v₂] - t Ω[v₁] - (1-t) Ω[v₂]`.
pub fn omega_concavity_margin(
    v1: &TracelessPotential,
    v2: &TracelessPotential,
    t: f64,
    system: &System,
    params: &EnsembleParams,
) -> Result<f64> {
    let (o1, _) = omega_of_v(v1, system, params)?;
    let (o2, _) = omega_of_v(v2, system, params)?;
    let (om, _) = omega_of_v(&v1.blend(v2, t), system, params)?;
    Ok(om - t * o1 - (1.0 - t) * o2)
}

/// `S[λρ₀ + (1-λ)ρ₁] - λS[ρ₀] - (1-λ)S[ρ₁]`.
pub fn entropy_concavity_margin(rho0: &DensityOperator, rho1: &DensityOperator, lambda: f64) -> Result<f64> {
    let mix = rho0.blend(rho1, lambda)?;
    Ok(entropy(&mix)? - lambda * entropy(rho0)? - (1.0 - lambda) * entropy(rho1)?)
}

/// Orthonormal traceless Hermitian directions under `Re tr(AB)`.
pub fn random_directions<R: Rng + ?Sized>(nb: usize, count: usize, rng: &mut R) -> Vec<CMat> {
    let mut out: Vec<CMat> = Vec::with_capacity(count);
    while out.len() < count.min(nb * nb - 1) {
        let mut d = linalg::random_hermitian(nb, rng);
        let shift = linalg::trace(&d).re / nb as f64;
        for i in 0..nb {
            d[(i, i)] -= shift;
        }
        for e in &out {
            let c = trace_product(e, &d);
            d -= e * linalg::C64::from(c);
        }
        let len = frobenius(&d);
        if len > 1e-6 {
            out.push(d / linalg::C64::from(len));
        }
    }
    out
}

/// Largest deviation, scaled by `max(1, ‖v*‖₂)`, between central differences
/// of `F` and `tr(-v* Δ)` over `directions`.
pub fn gradient_deviation(
    gamma: &OneRdm,
    system: &System,
    params: &EnsembleParams,
    directions: &[CMat],
    epsilon: f64,
) -> Result<f64> {
    let center = invert_potential(gamma, system, params, &InversionOptions::default())?;
    if center.verdict != Verdict::Converged {
        return Err(Error::NonRepresentable(format!(
            "{:?} at the base point",
            center.verdict
        )));
    }
    let opts = InversionOptions {
        initial: Some(center.v_star.clone()),
        ..InversionOptions::default()
    };
    let scale = center.v_star.norm().max(1.0);
    let mut worst: f64 = 0.0;
    for d in directions {
        let step = d * linalg::C64::from(epsilon);
        let plus = OneRdm::new(gamma.matrix() + &step, gamma.n())?;
        let minus = OneRdm::new(gamma.matrix() - &step, gamma.n())?;
        let fp = universal_functional_with(&plus, system, params, &opts)?.0;
        let fm = universal_functional_with(&minus, system, params, &opts)?.0;
        let fd = (fp - fm) / (2.0 * epsilon);
        let exact = -trace_product(center.v_star.matrix(), d);
        worst = worst.max((fd - exact).abs() / scale);
    }
    Ok(worst)
}

/// `ρ_{H₁} ≠ ρ_{H₂}` whenever `H₁ - H₂` is not a multiple of the identity.
pub fn check_hamiltonian_injectivity(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    let dim = system.basis.dim();
    let tag = system.basis.tag();
    let notes = vec!["random many-body Hamiltonians; margin = ‖ρ₁ - ρ₂‖₂ - 1e-12".into()];
    run_trials("hamiltonian_injectivity", config, true, 0.0, notes, |rng| {
        let h1 = linalg::random_hermitian(dim, rng);
        let h2 = linalg::random_hermitian(dim, rng);
        let mut diff = &h1 - &h2;
        let shift = linalg::trace(&diff).re / dim as f64;
        for i in 0..dim {
            diff[(i, i)] -= shift;
        }
        if frobenius(&diff) < MIN_SEPARATION {
            return Ok(Outcome::Excluded("H₁ - H₂ too close to a multiple of 𝟙".into()));
        }
        let r1 = gibbs_state(&ManyBodyOperator { matrix: h1, tag }, &params)?;
        let r2 = gibbs_state(&ManyBodyOperator { matrix: h2, tag }, &params)?;
        Ok(Outcome::Margin(frobenius(&(r1.rho.matrix() - r2.rho.matrix())) - 1e-12))
    })
}

/// `v ↦ γ_v` is injective on traceless potentials.
pub fn check_injectivity(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    run_trials("injectivity", config, true, 0.0, Vec::new(), |rng| {
        let (v1, v2) = potential_pair(system.nb(), rng);
        if v1.distance(&v2) < MIN_SEPARATION {
            return Ok(Outcome::Excluded(
                "potentials closer than the separation threshold".into(),
            ));
        }
        let (_, g1) = omega_of_v(&v1, &system, &params)?;
        let (_, g2) = omega_of_v(&v2, &system, &params)?;
        Ok(Outcome::Margin(g1.distance(&g2) - INJECTIVITY_TOL))
    })
}

/// Gibbs occupations are strictly inside the admissible range. Trials cycle
/// over [`FRACTIONAL_BETAS`]; the configured β is not used.
pub fn check_fractional_occupations(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let fermions = config.statistics == Statistics::Fermion;
    let notes = vec!["β cycles over 0.1, 1, 10; ‖v‖₂ uniform in (0, 1]".into()];
    run_trials("fractional_occupations", config, true, 0.0, notes, |rng| {
        let beta = FRACTIONAL_BETAS[rng.random_range(0..FRACTIONAL_BETAS.len())];
        let norm = 1.0 - rng.random::<f64>();
        let v = TracelessPotential::random(system.nb(), norm, rng);
        let (_, gamma) = omega_of_v(&v, &system, &EnsembleParams::new(beta)?)?;
        Ok(Outcome::Margin(occupation_margin(
            &natural_spectrum(&gamma)?.occupations,
            fermions,
        )))
    })
}

/// `min_i n_i` and, for fermions, `min_i (1 - n_i)`, minus the 1e-12 floor.
pub fn occupation_margin(occupations: &[f64], fermions: bool) -> f64 {
    occupations
        .iter()
        .map(|&n| if fermions { n.min(1.0 - n) } else { n })
        .fold(f64::INFINITY, f64::min)
        - OCCUPATION_FLOOR
}

pub fn check_omega_concavity(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    run_trials("omega_concavity", config, true, 0.0, Vec::new(), |rng| {
        let (v1, v2) = potential_pair(system.nb(), rng);
        let t = rng.random_range(0.1..0.9);
        if v1.distance(&v2) < MIN_SEPARATION {
            return Ok(Outcome::Excluded(
                "potentials closer than the separation threshold".into(),
            ));
        }
        Ok(Outcome::Margin(omega_concavity_margin(&v1, &v2, t, &system, &params)?))
    })
}

pub fn check_entropy_concavity(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    run_trials("entropy_concavity", config, true, 0.0, Vec::new(), |rng| {
        let r0 = random_density(&system, rng)?;
        let r1 = random_density(&system, rng)?;
        let lambda = rng.random_range(0.1..0.9);
        if frobenius(&(r0.matrix() - r1.matrix())) < MIN_SEPARATION {
            return Ok(Outcome::Excluded(
                "density operators closer than the separation threshold".into(),
            ));
        }
        Ok(Outcome::Margin(entropy_concavity_margin(&r0, &r1, lambda)?))
    })
}

/// `Ω_v[ρ] > Ω_v[ρ_v]` for a 1 % pure-state admixture, the maximally mixed
/// state and a random mixture.
pub fn check_gibbs_minimality(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    run_trials("gibbs_minimality", config, true, 0.0, Vec::new(), |rng| {
        let v = random_potential(system.nb(), rng);
        let h = system.hamiltonian(&v)?;
        let g = gibbs_state(&h, &params)?;
        let tag = system.basis.tag();
        let psi = linalg::random_unit_vector(system.basis.dim(), rng);
        let pure = DensityOperator::mixture(&[(1.0, psi)], tag)?;
        let candidates = [
            g.rho.blend(&pure, 0.99)?,
            DensityOperator::maximally_mixed(&system.basis),
            random_density(&system, rng)?,
        ];
        let reference = g.omega;
        let mut margin = f64::INFINITY;
        for rho in candidates
            .iter()
            .filter(|r| frobenius(&(r.matrix() - g.rho.matrix())) >= 1e-3)
        {
            margin = margin.min(helmholtz(rho, &h, &params)? - reference);
        }
        if margin.is_infinite() {
            return Ok(Outcome::Excluded(
                "all competitors coincide with the Gibbs state".into(),
            ));
        }
        Ok(Outcome::Margin(margin))
    })
}

/// `F(γ_λ) ≤ λF(γ₀) + (1-λ)F(γ₁)` on interior segments.
pub fn check_f_convexity(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    run_trials("f_convexity", config, false, CONVEXITY_SLACK, Vec::new(), |rng| {
        let g0 = random_rdm_with(config.nb, config.n, config.statistics, true, rng)?;
        let g1 = random_rdm_with(config.nb, config.n, config.statistics, true, rng)?;
        let lambda = rng.random_range(0.1..0.9);
        let gl = g0.blend(&g1, lambda)?;
        let f0 = universal_functional(&g0, &system, &params)?.0;
        let f1 = universal_functional(&g1, &system, &params)?.0;
        let fl = universal_functional(&gl, &system, &params)?.0;
        Ok(Outcome::Margin(lambda * f0 + (1.0 - lambda) * f1 - fl))
    })
}

/// Central differences of `F` match `tr(-v* Δ)`; margin is
/// `1e-5 - max deviation`.
pub fn check_gradient(config: &VerifyConfig) -> Result<TheoremReport> {
    let system = config.system()?;
    let params = config.params()?;
    let notes = vec![
        "a unique subgradient on the affine hull is what makes these derivatives well defined; \
         subgradient uniqueness is covered by this check"
            .into(),
    ];
    run_trials("gradient", config, false, 0.0, notes, |rng| {
        let gamma = random_rdm_with(config.nb, config.n, config.statistics, true, rng)?;
        let dirs = random_directions(config.nb, GRADIENT_DIRECTIONS, rng);
        let dev = gradient_deviation(&gamma, &system, &params, &dirs, FD_EPSILON)?;
        Ok(Outcome::Margin(GRADIENT_TOL - dev))
    })
}

/// Explicit ensembles reproduce random 1RDMs, interior and boundary alike.
pub fn check_coleman(config: &VerifyConfig) -> Result<TheoremReport> {
    let basis = build_basis(config.nb, config.n, config.statistics)?;
    run_trials("coleman", config, false, 0.0, Vec::new(), |rng| {
        let gamma = match rng.random_range(0..3) {
            0 => random_rdm_with(config.nb, config.n, config.statistics, true, rng)?,
            1 => random_rdm_with(config.nb, config.n, config.statistics, false, rng)?,
            _ => random_boundary_rdm(config.nb, config.n, config.statistics, rng.random())?,
        };
        let rho = construct_density(&gamma, &basis)?;
        // Re-validate: Hermitian, unit trace, positive semidefinite.
        let rho = DensityOperator::new(rho.matrix().clone(), basis.tag())?;
        let back = one_rdm(&rho, &basis)?;
        Ok(Outcome::Margin(COLEMAN_TOL - back.distance(&gamma)))
    })
}

pub fn run_check(id: &str, config: &VerifyConfig) -> Result<TheoremReport> {
    match id {
        "hamiltonian_injectivity" => check_hamiltonian_injectivity(config),
        "injectivity" => check_injectivity(config),
        "fractional_occupations" => check_fractional_occupations(config),
        "omega_concavity" => check_omega_concavity(config),
        "entropy_concavity" => check_entropy_concavity(config),
        "gibbs_minimality" => check_gibbs_minimality(config),
        "f_convexity" => check_f_convexity(config),
        "gradient" => check_gradient(config),
        "coleman" => check_coleman(config),
        other => Err(Error::Config(format!(
            "unknown theorem id `{other}`; known: {}",
            CHECK_IDS.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub nb: usize,
    pub n: usize,
    pub statistics: Statistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub theorems: Vec<String>,
    pub grid: Vec<GridPoint>,
    pub betas: Vec<f64>,
    pub models: Vec<ModelSpec>,
    pub seed: u64,
    pub trials: usize,
}

impl SuiteConfig {
    pub fn default_grid() -> Vec<GridPoint> {
        use Statistics::{Boson, Fermion};
        [
            (3, 2, Fermion),
            (4, 2, Fermion),
            (4, 3, Fermion),
            (3, 2, Boson),
            (2, 3, Boson),
        ]
        .into_iter()
        .map(|(nb, n, statistics)| GridPoint { nb, n, statistics })
        .collect()
    }

    pub fn default_models(seed: u64) -> Vec<ModelSpec> {
        vec![
            ModelSpec::Zero,
            ModelSpec::RandomOnebody { seed, norm: 1.0 },
            ModelSpec::RandomFull {
                seed: seed ^ 1,
                norm: 1.0,
                w_norm: 1.0,
            },
            ModelSpec::HubbardRing { t: 1.0, u: 4.0 },
        ]
    }

    pub fn with_defaults(theorems: Vec<String>, seed: u64, trials: usize) -> Self {
        Self {
            theorems,
            grid: Self::default_grid(),
            betas: vec![0.5, 1.0, 5.0],
            models: Self::default_models(seed),
            seed,
            trials,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theorems.is_empty() {
            return Err(Error::Config("theorem list is empty".into()));
        }
        if let Some(bad) = self.theorems.iter().find(|t| !CHECK_IDS.contains(&t.as_str())) {
            return Err(Error::Config(format!(
                "unknown theorem id `{bad}`; known: {}",
                CHECK_IDS.join(", ")
            )));
        }
        if self.grid.is_empty() || self.betas.is_empty() || self.models.is_empty() {
            return Err(Error::Config("grid, betas and models must be non-empty".into()));
        }
        for cfg in self.expand() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// One [`VerifyConfig`] per (grid point, β, model), each with its own seed.
    pub fn expand(&self) -> Vec<VerifyConfig> {
        let mut out = Vec::new();
        for p in &self.grid {
            for &beta in &self.betas {
                for model in &self.models {
                    let seed = mix(self.seed.wrapping_add(out.len() as u64));
                    out.push(VerifyConfig {
                        nb: p.nb,
                        n: p.n,
                        statistics: p.statistics,
                        beta,
                        seed,
                        model: model.clone(),
                        trials: self.trials,
                    });
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        crate::io::config_hash(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub config_hash: String,
    pub config: SuiteConfig,
    pub total_failures: usize,
    pub reports: Vec<TheoremReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.total_failures == 0
    }

    /// Rows `(theorem_id, nb, n, statistics, beta, model, trials, failures, worst_margin)`.
    pub fn write_summary_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record([
            "theorem_id",
            "nb",
            "n",
            "statistics",
            "beta",
            "model",
            "trials",
            "failures",
            "worst_margin",
        ])
        .map_err(err)?;
        for r in &self.reports {
            let c = &r.config;
            w.write_record([
                r.theorem_id.clone(),
                c.nb.to_string(),
                c.n.to_string(),
                c.statistics.to_string(),
                c.beta.to_string(),
                c.model.name(),
                r.trials.to_string(),
                r.failures.to_string(),
                r.worst_margin.map(|m| format!("{m:e}")).unwrap_or_default(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let mut reports = Vec::new();
    for id in &config.theorems {
        for cfg in config.expand() {
            reports.push(run_check(id, &cfg)?);
        }
    }
    Ok(SuiteReport {
        version: REPORT_VERSION.into(),
        config_hash: config.hash(),
        config: config.clone(),
        total_failures: reports.iter().map(|r| r.failures).sum(),
        reports,
    })
}
