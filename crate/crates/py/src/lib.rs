//! Python bindings. Matrices cross the boundary as lists of rows of
//! Python `complex`.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rdmft_core::representability::simplex_decompose;
use rdmft_core::{
    build_basis, classify_rdm, construct_density, invert_potential, natural_spectrum, one_rdm, polytope_decompose,
    random_rdm, run_check, CMat, EnsembleParams, Error, InversionOptions, ModelSpec, OneRdm, PolytopeDecomposition,
    Statistics, TracelessPotential, Verdict, VerifyConfig, C64, DEFAULT_CLASSIFY_TOL,
};

create_exception!(rdmft, NonRepresentableError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonRepresentable(_) | Error::NotRepresentable(_) | Error::InfeasibleOccupations(_) => {
            NonRepresentableError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn statistics(s: &str) -> PyResult<Statistics> {
    match s {
        "fermion" | "F" => Ok(Statistics::Fermion),
        "boson" | "B" => Ok(Statistics::Boson),
        _ => Err(PyValueError::new_err(format!(
            "statistics must be 'fermion' or 'boson', got {s:?}"
        ))),
    }
}

fn matrix(rows: Vec<Vec<C64>>) -> PyResult<CMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(CMat::from_fn(r, c, |i, j| rows[i][j]))
}

fn rows(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Converged => "converged",
        Verdict::NonRepresentable => "non_representable",
        Verdict::MaxIterations => "max_iterations",
    }
}

fn model_spec(kind: &str, seed: u64, norm: f64, w_norm: f64, t: f64, u: f64) -> PyResult<ModelSpec> {
    let spec = match kind {
        "zero" => ModelSpec::Zero,
        "random_onebody" => ModelSpec::RandomOnebody { seed, norm },
        "random_full" => ModelSpec::RandomFull { seed, norm, w_norm },
        "hubbard_ring" => ModelSpec::HubbardRing { t, u },
        _ => return Err(PyValueError::new_err(format!("unknown model {kind:?}"))),
    };
    spec.validate().map_err(to_py)?;
    Ok(spec)
}

/// `N` particles in `nb` orbitals with reference Hamiltonian `H₀`.
#[pyclass(name = "System", module = "rdmft")]
pub struct PySystem {
    inner: rdmft_core::System,
    model: ModelSpec,
}

impl PySystem {
    fn rdm(&self, gamma: Vec<Vec<C64>>) -> PyResult<OneRdm> {
        OneRdm::new(matrix(gamma)?, self.inner.n()).map_err(to_py)
    }

    fn potential(&self, v: Option<Vec<Vec<C64>>>) -> PyResult<TracelessPotential> {
        match v {
            None => Ok(TracelessPotential::zeros(self.inner.nb())),
            Some(v) => TracelessPotential::project(&matrix(v)?).map_err(to_py),
        }
    }
}

#[pymethods]
impl PySystem {
    #[new]
    #[pyo3(signature = (nb, n, statistics, model = "zero", seed = 0, norm = 1.0, w_norm = 1.0, t = 1.0, u = 0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        nb: usize,
        n: usize,
        statistics: &str,
        model: &str,
        seed: u64,
        norm: f64,
        w_norm: f64,
        t: f64,
        u: f64,
    ) -> PyResult<Self> {
        let spec = model_spec(model, seed, norm, w_norm, t, u)?;
        let basis = build_basis(nb, n, self::statistics(statistics)?).map_err(to_py)?;
        let inner = spec.build(basis).map_err(to_py)?;
        Ok(Self { inner, model: spec })
    }

    #[getter]
    fn nb(&self) -> usize {
        self.inner.nb()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.basis.dim()
    }

    #[getter]
    fn statistics(&self) -> String {
        self.inner.basis.statistics().to_string()
    }

    /// Configurations as occupation vectors, in basis order.
    fn states(&self) -> Vec<Vec<u8>> {
        self.inner.basis.states().to_vec()
    }

    /// Many-body matrix of `H₀ + v̂`.
    #[pyo3(signature = (v = None))]
    fn hamiltonian(&self, v: Option<Vec<Vec<C64>>>) -> PyResult<Vec<Vec<C64>>> {
        let h = self.inner.hamiltonian(&self.potential(v)?).map_err(to_py)?;
        Ok(rows(&h.matrix))
    }

    /// Gibbs state of `H₀ + v̂` with thermodynamic data and the 1RDM.
    #[pyo3(signature = (beta, v = None))]
    fn gibbs<'py>(&self, py: Python<'py>, beta: f64, v: Option<Vec<Vec<C64>>>) -> PyResult<Bound<'py, PyDict>> {
        let params = EnsembleParams::new(beta).map_err(to_py)?;
        let g = self.inner.gibbs(&self.potential(v)?, &params).map_err(to_py)?;
        let gamma = one_rdm(&g.rho, &self.inner.basis).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("omega", g.omega)?;
        d.set_item("log_z", g.log_z)?;
        d.set_item("energy", g.energy())?;
        d.set_item("entropy", g.entropy())?;
        d.set_item("occupations", natural_spectrum(&gamma).map_err(to_py)?.occupations)?;
        d.set_item("rdm", rows(gamma.matrix()))?;
        d.set_item("rho", rows(g.rho.matrix()))?;
        Ok(d)
    }

    /// Newton inversion of the potential-to-1RDM map.
    #[pyo3(signature = (gamma, beta, tol = 1e-10, max_iter = 200))]
    fn invert<'py>(
        &self,
        py: Python<'py>,
        gamma: Vec<Vec<C64>>,
        beta: f64,
        tol: f64,
        max_iter: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let params = EnsembleParams::new(beta).map_err(to_py)?;
        let opts = InversionOptions {
            tol,
            max_iter,
            ..InversionOptions::default()
        };
        let gamma = self.rdm(gamma)?;
        let r = py
            .detach(|| invert_potential(&gamma, &self.inner, &params, &opts))
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("verdict", verdict_name(r.verdict))?;
        d.set_item("f_value", r.f_value)?;
        d.set_item("residual", r.residual)?;
        d.set_item("iterations", r.iterations)?;
        d.set_item("v_star", rows(r.v_star.matrix()))?;
        d.set_item("gradient", rows(r.gradient.matrix()))?;
        Ok(d)
    }

    /// `(F[γ], ∇F[γ])`; raises `NonRepresentableError` when the inversion
    /// does not converge to an interior potential.
    fn functional(&self, py: Python<'_>, gamma: Vec<Vec<C64>>, beta: f64) -> PyResult<(f64, Vec<Vec<C64>>)> {
        let params = EnsembleParams::new(beta).map_err(to_py)?;
        let gamma = self.rdm(gamma)?;
        let (f, grad) = py
            .detach(|| rdmft_core::universal_functional(&gamma, &self.inner, &params))
            .map_err(to_py)?;
        Ok((f, rows(grad.matrix())))
    }

    /// Density operator on this system's basis with the given 1RDM.
    fn construct_density(&self, gamma: Vec<Vec<C64>>) -> PyResult<Vec<Vec<C64>>> {
        let rho = construct_density(&self.rdm(gamma)?, &self.inner.basis).map_err(to_py)?;
        Ok(rows(rho.matrix()))
    }

    /// `"interior"`, `"boundary"` or `"outside"`.
    fn classify(&self, gamma: Vec<Vec<C64>>) -> PyResult<String> {
        let class =
            classify_rdm(&self.rdm(gamma)?, self.inner.basis.statistics(), DEFAULT_CLASSIFY_TOL).map_err(to_py)?;
        Ok(format!("{class:?}").to_lowercase())
    }

    fn __repr__(&self) -> String {
        format!(
            "System(nb={}, n={}, statistics='{}', model='{}')",
            self.inner.nb(),
            self.inner.n(),
            self.inner.basis.statistics(),
            self.model.name()
        )
    }
}

fn terms(d: PolytopeDecomposition) -> Vec<(f64, Vec<usize>)> {
    d.terms.into_iter().map(|t| (t.weight, t.vertex)).collect()
}

/// Occupations as a convex combination of vertices, `[(weight, vertex)]`.
#[pyfunction]
fn decompose(occupations: Vec<f64>, n: usize, statistics: &str) -> PyResult<Vec<(f64, Vec<usize>)>> {
    let d = match self::statistics(statistics)? {
        Statistics::Fermion => polytope_decompose(&occupations, n),
        Statistics::Boson => simplex_decompose(&occupations, n),
    };
    d.map(terms).map_err(to_py)
}

/// Natural occupation numbers, descending.
#[pyfunction]
fn natural_occupations(gamma: Vec<Vec<C64>>, n: usize) -> PyResult<Vec<f64>> {
    let g = OneRdm::new(matrix(gamma)?, n).map_err(to_py)?;
    Ok(natural_spectrum(&g).map_err(to_py)?.occupations)
}

/// Seeded random admissible 1RDM.
#[pyfunction]
#[pyo3(signature = (nb, n, statistics, seed, interior = true))]
fn random_one_rdm(nb: usize, n: usize, statistics: &str, seed: u64, interior: bool) -> PyResult<Vec<Vec<C64>>> {
    let g = random_rdm(nb, n, self::statistics(statistics)?, interior, seed).map_err(to_py)?;
    Ok(rows(g.matrix()))
}

/// Runs one property check and returns its report as JSON text.
#[pyfunction]
#[pyo3(signature = (check, nb, n, statistics, beta, seed = 0, trials = 20, model = "zero", model_seed = 0, u = 4.0))]
#[allow(clippy::too_many_arguments)]
fn verify(
    py: Python<'_>,
    check: &str,
    nb: usize,
    n: usize,
    statistics: &str,
    beta: f64,
    seed: u64,
    trials: usize,
    model: &str,
    model_seed: u64,
    u: f64,
) -> PyResult<String> {
    let cfg = VerifyConfig {
        nb,
        n,
        statistics: self::statistics(statistics)?,
        beta,
        seed,
        model: model_spec(model, model_seed, 1.0, 1.0, 1.0, u)?,
        trials,
    };
    let report = py.detach(|| run_check(check, &cfg)).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
pub fn rdmft(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(natural_occupations, m)?)?;
    m.add_function(wrap_pyfunction!(random_one_rdm, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("NonRepresentableError", m.py().get_type::<NonRepresentableError>())?;
    Ok(())
}
