//! Run configuration: one JSON document per invocation.
//!
//! Relative file paths inside the document are resolved against the
//! directory of the configuration file.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rdmft_core::io::{MatrixRecord, OneRdmRecord};
use rdmft_core::linalg::{real_diag, CMat};
use rdmft_core::representability::random_rdm;
use rdmft_core::verify::{GridPoint, CHECK_IDS};
use rdmft_core::{
    build_basis, one_rdm, EnsembleParams, Error, InversionOptions, ModelSpec, OneRdm, Result, Statistics, SuiteConfig,
    System, TracelessPotential,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistics: Option<Statistics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub seed: u64,
    /// External potentials for `gibbs`; defaults to `[zero]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials: Option<Vec<PotentialSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<SegmentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// Haar-random traceless potential with the given Frobenius norm.
    Random {
        norm: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Explicit matrix; its trace is removed.
    Matrix {
        matrix: MatrixRecord,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// JSON file holding `{"n": N, "matrix": {...}}`.
    File {
        path: PathBuf,
    },
    Matrix {
        matrix: MatrixRecord,
    },
    /// Diagonal 1RDM with these occupations.
    Occupations {
        values: Vec<f64>,
    },
    /// `(N / nb) 𝟙`.
    Uniform,
    /// Gibbs 1RDM of `H₀ + v` at the run's β.
    Gibbs {
        potential: PotentialSpec,
    },
    Random {
        #[serde(default = "yes")]
        interior: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub count: usize,
    #[serde(default = "yes")]
    pub interior: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub from: TargetSpec,
    pub to: TargetSpec,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    11
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precheck: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorems: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<GridPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<ModelSpec>>,
}

pub const DEFAULT_TRIALS: usize = 20;
const DEFAULT_SUITE_BETAS: [f64; 3] = [0.5, 1.0, 5.0];

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Derived stream seed for item `k` of stream `stream`.
pub fn derive_seed(seed: u64, stream: u64, k: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const STREAM_POTENTIAL: u64 = 1;
pub const STREAM_TARGET: u64 = 2;
pub const STREAM_SAMPLE: u64 = 3;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn system_spec(&self) -> Result<(usize, usize, Statistics)> {
        match (self.nb, self.n, self.statistics) {
            (Some(nb), Some(n), Some(s)) => {
                if nb < 2 || n == 0 || (s == Statistics::Fermion && n >= nb) {
                    return Err(config_error(format!(
                        "need nb >= 2 and 0 < N (< nb for fermions), got nb = {nb}, N = {n}"
                    )));
                }
                Ok((nb, n, s))
            }
            _ => Err(config_error("nb, n and statistics are required")),
        }
    }

    pub fn model(&self) -> ModelSpec {
        self.model.clone().unwrap_or(ModelSpec::Zero)
    }

    pub fn system(&self) -> Result<System> {
        let (nb, n, s) = self.system_spec()?;
        let model = self.model();
        model.validate().map_err(|e| config_error(e.to_string()))?;
        build_basis(nb, n, s)
            .and_then(|basis| model.build(basis))
            .map_err(|e| match e {
                Error::Config(_) => e,
                other => config_error(other.to_string()),
            })
    }

    /// β grid; `beta` and `betas` are mutually exclusive.
    pub fn betas(&self) -> Result<Vec<f64>> {
        let betas = match (&self.beta, &self.betas) {
            (Some(_), Some(_)) => return Err(config_error("give either beta or betas, not both")),
            (Some(b), None) => vec![*b],
            (None, Some(bs)) => bs.clone(),
            (None, None) => return Err(config_error("beta or betas is required")),
        };
        if betas.is_empty() {
            return Err(config_error("betas is empty"));
        }
        if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(config_error(format!("beta must be finite and positive, got {b}")));
        }
        Ok(betas)
    }

    pub fn params(&self) -> Result<Vec<EnsembleParams>> {
        self.betas()?.into_iter().map(EnsembleParams::new).collect()
    }

    pub fn inversion_options(&self) -> Result<InversionOptions> {
        let mut opts = InversionOptions::default();
        let Some(spec) = &self.inversion else {
            return Ok(opts);
        };
        for (name, x) in [
            ("tol", spec.tol),
            ("norm_cap", spec.norm_cap),
            ("max_step", spec.max_step),
        ] {
            if let Some(x) = x {
                if !(x.is_finite() && x > 0.0) {
                    return Err(config_error(format!("inversion.{name} must be positive, got {x}")));
                }
            }
        }
        if spec.max_iter == Some(0) {
            return Err(config_error("inversion.max_iter must be positive"));
        }
        if let Some(t) = spec.tol {
            opts.tol = t;
        }
        if let Some(m) = spec.max_iter {
            opts.max_iter = m;
        }
        opts.norm_cap = spec.norm_cap.or(opts.norm_cap);
        opts.max_step = spec.max_step.or(opts.max_step);
        if let Some(p) = spec.precheck {
            opts.precheck = p;
        }
        Ok(opts)
    }

    /// Suite built from the `verify` block, falling back to the top-level
    /// system, β and model, then to the default suite.
    pub fn suite(&self) -> Result<SuiteConfig> {
        let spec = self.verify.clone().unwrap_or_default();
        let theorems = spec
            .theorems
            .unwrap_or_else(|| CHECK_IDS.iter().map(|s| s.to_string()).collect());
        let mut suite = SuiteConfig::with_defaults(theorems, self.seed, spec.trials.unwrap_or(DEFAULT_TRIALS));
        if let Some(grid) = spec.grid {
            suite.grid = grid;
        } else if self.nb.is_some() || self.n.is_some() || self.statistics.is_some() {
            let (nb, n, statistics) = self.system_spec()?;
            suite.grid = vec![GridPoint { nb, n, statistics }];
        }
        if let Some(betas) = spec.betas {
            suite.betas = betas;
        } else if self.beta.is_some() || self.betas.is_some() {
            suite.betas = self.betas()?;
        } else {
            suite.betas = DEFAULT_SUITE_BETAS.to_vec();
        }
        if let Some(models) = spec.models {
            suite.models = models;
        } else if let Some(model) = &self.model {
            suite.models = vec![model.clone()];
        }
        suite.validate()?;
        Ok(suite)
    }
}

impl PotentialSpec {
    pub fn resolve(&self, nb: usize, seed: u64) -> Result<TracelessPotential> {
        match self {
            PotentialSpec::Zero => Ok(TracelessPotential::zeros(nb)),
            PotentialSpec::Random { norm, seed: own } => {
                if !(norm.is_finite() && *norm >= 0.0) {
                    return Err(config_error(format!("potential norm must be non-negative, got {norm}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
                Ok(TracelessPotential::random(nb, *norm, &mut rng))
            }
            PotentialSpec::Matrix { matrix } => {
                let m = CMat::try_from(matrix)?;
                if m.shape() != (nb, nb) {
                    return Err(config_error(format!(
                        "potential has shape {:?}, expected [{nb}, {nb}]",
                        matrix.shape
                    )));
                }
                TracelessPotential::project(&m).map_err(|e| config_error(e.to_string()))
            }
        }
    }
}

impl TargetSpec {
    /// Target 1RDM for `system` at `params`; every failure is a
    /// configuration error.
    pub fn resolve(&self, system: &System, params: &EnsembleParams, base: &Path, seed: u64) -> Result<OneRdm> {
        self.resolve_inner(system, params, base, seed)
            .map_err(|e| match e {
                Error::Config(_) => e,
                other => config_error(format!("target: {other}")),
            })
            .and_then(|g| {
                if g.nb() != system.nb() || g.n() != system.n() {
                    return Err(config_error(format!(
                        "target has nb = {}, N = {}; system has nb = {}, N = {}",
                        g.nb(),
                        g.n(),
                        system.nb(),
                        system.n()
                    )));
                }
                Ok(g)
            })
    }

    fn resolve_inner(&self, system: &System, params: &EnsembleParams, base: &Path, seed: u64) -> Result<OneRdm> {
        let (nb, n) = (system.nb(), system.n());
        match self {
            TargetSpec::File { path } => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
                let rec: OneRdmRecord =
                    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                rec.to_rdm()
            }
            TargetSpec::Matrix { matrix } => OneRdmRecord {
                n,
                matrix: matrix.clone(),
            }
            .to_rdm(),
            TargetSpec::Occupations { values } => {
                if values.len() != nb {
                    return Err(config_error(format!("{} occupations for nb = {nb}", values.len())));
                }
                OneRdm::new(real_diag(values), n)
            }
            TargetSpec::Uniform => Ok(OneRdm::uniform(nb, n)),
            TargetSpec::Gibbs { potential } => {
                let v = potential.resolve(nb, seed)?;
                let g = system.gibbs(&v, params)?;
                one_rdm(&g.rho, &system.basis)
            }
            TargetSpec::Random { interior, seed: own } => {
                random_rdm(nb, n, system.basis.statistics(), *interior, own.unwrap_or(seed))
            }
        }
    }
}
