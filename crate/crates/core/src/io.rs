//! JSON and CSV exchange formats.
//!
//! Matrices are stored row-major with interleaved real and imaginary parts:
//! `{"shape": [rows, cols], "data": [re00, im00, re01, im01, ...]}`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensemble::{natural_spectrum, GibbsSolution, OneRdm};
use crate::error::{Error, Result};
use crate::fock::{ConfigurationBasis, ManyBodyOperator, Statistics};
use crate::functional::{InversionReport, IterationRecord, TracelessPotential, Verdict};
use crate::linalg::{CMat, C64};
use crate::representability::PolytopeDecomposition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl From<&CMat> for MatrixRecord {
    fn from(m: &CMat) -> Self {
        let (r, c) = m.shape();
        let mut data = Vec::with_capacity(2 * r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)].re);
                data.push(m[(i, j)].im);
            }
        }
        Self { shape: [r, c], data }
    }
}

impl TryFrom<&MatrixRecord> for CMat {
    type Error = Error;

    fn try_from(rec: &MatrixRecord) -> Result<CMat> {
        let [r, c] = rec.shape;
        if rec.data.len() != 2 * r * c {
            return Err(Error::Config(format!(
                "matrix of shape {r}x{c} needs {} numbers, found {}",
                2 * r * c,
                rec.data.len()
            )));
        }
        Ok(CMat::from_fn(r, c, |i, j| {
            let k = 2 * (i * c + j);
            C64::new(rec.data[k], rec.data[k + 1])
        }))
    }
}

/// Basis plus operator matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub nb: usize,
    pub n: usize,
    pub statistics: Statistics,
    pub states: Vec<Vec<u8>>,
    pub matrix: MatrixRecord,
}

impl OperatorRecord {
    pub fn new(basis: &ConfigurationBasis, matrix: &CMat) -> Self {
        Self {
            nb: basis.nb(),
            n: basis.n(),
            statistics: basis.statistics(),
            states: basis.states().to_vec(),
            matrix: matrix.into(),
        }
    }

    pub fn from_operator(basis: &ConfigurationBasis, op: &ManyBodyOperator) -> Self {
        Self::new(basis, &op.matrix)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRdmRecord {
    pub n: usize,
    pub matrix: MatrixRecord,
}

impl From<&OneRdm> for OneRdmRecord {
    fn from(g: &OneRdm) -> Self {
        Self {
            n: g.n(),
            matrix: g.matrix().into(),
        }
    }
}

impl OneRdmRecord {
    pub fn to_rdm(&self) -> Result<OneRdm> {
        let m = CMat::try_from(&self.matrix)?;
        if m.nrows() != m.ncols() {
            return Err(Error::Config(format!(
                "1RDM must be square, got {:?}",
                self.matrix.shape
            )));
        }
        OneRdm::new(m, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsRecord {
    pub nb: usize,
    pub n: usize,
    pub statistics: Statistics,
    pub beta: f64,
    pub log_z: f64,
    pub omega: f64,
    pub energy: f64,
    pub entropy: f64,
    pub occupations: Vec<f64>,
    pub rdm: MatrixRecord,
    pub rho: MatrixRecord,
}

impl GibbsRecord {
    pub fn new(basis: &ConfigurationBasis, g: &GibbsSolution, gamma: &OneRdm) -> Result<Self> {
        Ok(Self {
            nb: basis.nb(),
            n: basis.n(),
            statistics: basis.statistics(),
            beta: g.beta,
            log_z: g.log_z,
            omega: g.omega,
            energy: g.energy(),
            entropy: g.entropy(),
            occupations: natural_spectrum(gamma)?.occupations,
            rdm: gamma.matrix().into(),
            rho: g.rho.matrix().into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionRecord {
    pub verdict: Verdict,
    pub f_value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub v_star: MatrixRecord,
    pub gradient: MatrixRecord,
    pub trace: Vec<IterationRecord>,
}

impl From<&InversionReport> for InversionRecord {
    fn from(r: &InversionReport) -> Self {
        Self {
            verdict: r.verdict,
            f_value: r.f_value,
            residual: r.residual,
            iterations: r.iterations,
            v_star: r.v_star.matrix().into(),
            gradient: r.gradient.matrix().into(),
            trace: r.trace.clone(),
        }
    }
}

pub fn potential_from_record(rec: &MatrixRecord) -> Result<TracelessPotential> {
    TracelessPotential::new(CMat::try_from(rec)?)
}

/// Hex SHA-256 of the compact JSON encoding of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

/// Rows `(run_id, beta, i, n_i)`.
pub fn write_occupations_csv<W: Write>(out: W, rows: &[(String, f64, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run_id", "beta", "i", "n_i"]).map_err(csv_err)?;
    for (run, beta, occ) in rows {
        for (i, n) in occ.iter().enumerate() {
            w.write_record([run.clone(), beta.to_string(), i.to_string(), n.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

/// Rows `(weight, vertex)` with the vertex as space-separated orbital indices.
pub fn write_polytope_csv<W: Write>(out: W, d: &PolytopeDecomposition) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["weight", "vertex"]).map_err(csv_err)?;
    for t in &d.terms {
        let vertex = t.vertex.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([t.weight.to_string(), vertex]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}

/// Rows `(iteration, g_value, residual, step_norm)`.
pub fn write_trace_csv<W: Write>(out: W, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in trace {
        w.serialize(rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Config(e.to_string()))
}
