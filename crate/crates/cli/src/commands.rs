use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use rdmft_core::io::{self, GibbsRecord, InversionRecord, MatrixRecord, OneRdmRecord};
use rdmft_core::representability::simplex_decompose;
use rdmft_core::verify::REPORT_VERSION;
use rdmft_core::{
    invert_potential, natural_spectrum, one_rdm, polytope_decompose, run_suite, EnsembleParams, Error, InversionReport,
    OneRdm, PolytopeDecomposition, Result, Statistics, SuiteReport, System, Verdict,
};

use crate::config::{derive_seed, RunConfig, TargetSpec, STREAM_POTENTIAL, STREAM_SAMPLE, STREAM_TARGET};
use crate::Status;

pub struct Context {
    pub config: RunConfig,
    /// Directory that relative paths in the config refer to.
    pub base: PathBuf,
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Sidecar<'a, T: Serialize> {
    version: &'static str,
    command: &'static str,
    config_hash: String,
    config: &'a RunConfig,
    files: Vec<&'static str>,
    #[serde(flatten)]
    body: T,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidArguments(format!("{}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| io_error(&path, e))
}

fn csv_writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(dir, name)?))
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidArguments(format!("csv: {e}"))
}

fn finish_csv<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::InvalidArguments(e.to_string()))
}

impl Context {
    fn write_sidecar<T: Serialize>(
        &self,
        name: &str,
        command: &'static str,
        files: Vec<&'static str>,
        body: T,
    ) -> Result<()> {
        let sidecar = Sidecar {
            version: REPORT_VERSION,
            command,
            config_hash: io::config_hash(&self.config),
            config: &self.config,
            files,
            body,
        };
        let mut out = create(&self.out, name)?;
        serde_json::to_writer_pretty(&mut out, &sidecar).map_err(|e| Error::InvalidArguments(e.to_string()))?;
        writeln!(out)
            .and_then(|_| out.flush())
            .map_err(|e| io_error(&self.out.join(name), e))
    }

    fn prepare_out(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))
    }
}

fn matrix_rows<W: Write>(w: &mut csv::Writer<W>, run_id: &str, beta: f64, rec: &MatrixRecord) -> Result<()> {
    let [_, cols] = rec.shape;
    for (k, pair) in rec.data.chunks(2).enumerate() {
        w.write_record([
            run_id.to_string(),
            beta.to_string(),
            (k / cols).to_string(),
            (k % cols).to_string(),
            pair[0].to_string(),
            pair[1].to_string(),
        ])
        .map_err(csv_error)?;
    }
    Ok(())
}

// gibbs ------------------------------------------------------------------

#[derive(Serialize)]
struct GibbsRun {
    run_id: String,
    potential: usize,
    v: MatrixRecord,
    #[serde(flatten)]
    record: GibbsRecord,
}

pub fn gibbs(ctx: &Context) -> Result<Status> {
    let cfg = &ctx.config;
    let system = cfg.system()?;
    let params = cfg.params()?;
    let specs = cfg
        .potentials
        .clone()
        .unwrap_or_else(|| vec![crate::config::PotentialSpec::Zero]);
    if specs.is_empty() {
        return Err(Error::Config("potentials is empty".into()));
    }
    let potentials = specs
        .iter()
        .enumerate()
        .map(|(k, p)| p.resolve(system.nb(), derive_seed(cfg.seed, STREAM_POTENTIAL, k as u64)))
        .collect::<Result<Vec<_>>>()?;
    ctx.prepare_out()?;

    let jobs: Vec<(usize, &EnsembleParams, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(bi, p)| (0..potentials.len()).map(move |pi| (bi, p, pi)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(bi, p, pi)| {
            let v = &potentials[pi];
            let g = system.gibbs(v, p)?;
            let gamma = one_rdm(&g.rho, &system.basis)?;
            Ok(GibbsRun {
                run_id: format!("b{bi}_v{pi}"),
                potential: pi,
                v: v.matrix().into(),
                record: GibbsRecord::new(&system.basis, &g, &gamma)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(&ctx.out, "gibbs.csv")?;
    w.write_record(["run_id", "beta", "potential", "log_z", "omega", "energy", "entropy"])
        .map_err(csv_error)?;
    for r in &runs {
        let g = &r.record;
        w.write_record([
            r.run_id.clone(),
            g.beta.to_string(),
            r.potential.to_string(),
            g.log_z.to_string(),
            g.omega.to_string(),
            g.energy.to_string(),
            g.entropy.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w)?;

    let occ: Vec<_> = runs
        .iter()
        .map(|r| (r.run_id.clone(), r.record.beta, r.record.occupations.clone()))
        .collect();
    io::write_occupations_csv(create(&ctx.out, "occupations.csv")?, &occ)?;

    let mut w = csv_writer(&ctx.out, "rdm.csv")?;
    w.write_record(["run_id", "beta", "i", "j", "re", "im"])
        .map_err(csv_error)?;
    for r in &runs {
        matrix_rows(&mut w, &r.run_id, r.record.beta, &r.record.rdm)?;
    }
    finish_csv(w)?;

    #[derive(Serialize)]
    struct Body<'a> {
        runs: &'a [GibbsRun],
    }
    ctx.write_sidecar(
        "gibbs.json",
        "gibbs",
        vec!["gibbs.csv", "occupations.csv", "rdm.csv"],
        Body { runs: &runs },
    )?;
    Ok(Status::Success)
}

// invert -----------------------------------------------------------------

#[derive(Serialize)]
struct InversionRun {
    run_id: String,
    beta: f64,
    target: OneRdmRecord,
    #[serde(flatten)]
    record: InversionRecord,
}

fn resolve_target(
    ctx: &Context,
    spec: &TargetSpec,
    system: &System,
    params: &EnsembleParams,
    k: u64,
) -> Result<OneRdm> {
    spec.resolve(
        system,
        params,
        &ctx.base,
        derive_seed(ctx.config.seed, STREAM_TARGET, k),
    )
}

fn verdict_status(verdicts: impl IntoIterator<Item = Verdict>) -> Status {
    let mut status = Status::Success;
    for v in verdicts {
        match v {
            Verdict::NonRepresentable => return Status::NonRepresentable,
            Verdict::MaxIterations => status = Status::Failures,
            Verdict::Converged => {}
        }
    }
    status
}

fn write_trace<W: Write>(w: &mut csv::Writer<W>, run_id: &str, report: &InversionReport) -> Result<()> {
    for rec in &report.trace {
        w.write_record([
            run_id.to_string(),
            rec.iteration.to_string(),
            rec.g_value.to_string(),
            rec.residual.to_string(),
            rec.step_norm.to_string(),
        ])
        .map_err(csv_error)?;
    }
    Ok(())
}

pub fn invert(ctx: &Context) -> Result<Status> {
    let cfg = &ctx.config;
    let system = cfg.system()?;
    let params = cfg.params()?;
    let opts = cfg.inversion_options()?;
    let spec = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::Config("invert needs a target".into()))?;
    let targets = params
        .iter()
        .map(|p| resolve_target(ctx, spec, &system, p, 0))
        .collect::<Result<Vec<_>>>()?;
    ctx.prepare_out()?;

    let reports = params
        .par_iter()
        .zip(&targets)
        .map(|(p, t)| invert_potential(t, &system, p, &opts))
        .collect::<Result<Vec<_>>>()?;

    let mut w = csv_writer(&ctx.out, "trace.csv")?;
    w.write_record(["run_id", "iteration", "g_value", "residual", "step_norm"])
        .map_err(csv_error)?;
    let mut runs = Vec::new();
    for (bi, ((p, t), r)) in params.iter().zip(&targets).zip(&reports).enumerate() {
        let run_id = format!("b{bi}");
        write_trace(&mut w, &run_id, r)?;
        runs.push(InversionRun {
            run_id,
            beta: p.beta(),
            target: t.into(),
            record: r.into(),
        });
    }
    finish_csv(w)?;

    #[derive(Serialize)]
    struct Body<'a> {
        runs: &'a [InversionRun],
    }
    ctx.write_sidecar("inversion.json", "invert", vec!["trace.csv"], Body { runs: &runs })?;
    Ok(verdict_status(reports.iter().map(|r| r.verdict)))
}

// functional -------------------------------------------------------------

#[derive(Serialize)]
struct FunctionalRun {
    run_id: String,
    beta: f64,
    sample: usize,
    verdict: Verdict,
    f_value: f64,
    residual: f64,
    iterations: usize,
    gradient: MatrixRecord,
}

#[derive(Serialize)]
struct SegmentRow {
    beta: f64,
    lambda: f64,
    verdict: Verdict,
    f_value: f64,
    residual: f64,
}

pub fn functional(ctx: &Context) -> Result<Status> {
    let cfg = &ctx.config;
    let system = cfg.system()?;
    let params = cfg.params()?;
    let opts = cfg.inversion_options()?;
    if cfg.target.is_none() && cfg.sampling.is_none() && cfg.segment.is_none() {
        return Err(Error::Config(
            "functional needs a target, a sampling block or a segment".into(),
        ));
    }
    if let Some(seg) = &cfg.segment {
        if seg.points < 2 {
            return Err(Error::Config("segment.points must be at least 2".into()));
        }
    }
    let (nb, n, statistics) = cfg.system_spec()?;

    // (beta index, sample index, target)
    let mut jobs: Vec<(usize, usize, OneRdm)> = Vec::new();
    let mut segments: Vec<(usize, OneRdm, OneRdm)> = Vec::new();
    for (bi, p) in params.iter().enumerate() {
        let mut k = 0;
        if let Some(spec) = &cfg.target {
            jobs.push((bi, k, resolve_target(ctx, spec, &system, p, 0)?));
            k += 1;
        }
        if let Some(s) = &cfg.sampling {
            for j in 0..s.count {
                let seed = derive_seed(cfg.seed, STREAM_SAMPLE, j as u64);
                let g = rdmft_core::random_rdm(nb, n, statistics, s.interior, seed)
                    .map_err(|e| Error::Config(format!("sampling: {e}")))?;
                jobs.push((bi, k, g));
                k += 1;
            }
        }
        if let Some(seg) = &cfg.segment {
            let a = resolve_target(ctx, &seg.from, &system, p, 1)?;
            let b = resolve_target(ctx, &seg.to, &system, p, 2)?;
            segments.push((bi, a, b));
        }
    }
    ctx.prepare_out()?;

    let runs = jobs
        .par_iter()
        .map(|(bi, k, g)| {
            let p = &params[*bi];
            let r = invert_potential(g, &system, p, &opts)?;
            Ok(FunctionalRun {
                run_id: format!("b{bi}_s{k}"),
                beta: p.beta(),
                sample: *k,
                verdict: r.verdict,
                f_value: r.f_value,
                residual: r.residual,
                iterations: r.iterations,
                gradient: r.gradient.matrix().into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut seg_jobs = Vec::new();
    if let Some(seg) = &cfg.segment {
        for (bi, a, b) in &segments {
            for i in 0..seg.points {
                let lambda = i as f64 / (seg.points - 1) as f64;
                seg_jobs.push((*bi, lambda, a.blend(b, 1.0 - lambda)?));
            }
        }
    }
    let seg_rows = seg_jobs
        .par_iter()
        .map(|(bi, lambda, g)| {
            let p = &params[*bi];
            let r = invert_potential(g, &system, p, &opts)?;
            Ok(SegmentRow {
                beta: p.beta(),
                lambda: *lambda,
                verdict: r.verdict,
                f_value: r.f_value,
                residual: r.residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut files = Vec::new();
    if !runs.is_empty() {
        let mut w = csv_writer(&ctx.out, "functional.csv")?;
        w.write_record([
            "run_id",
            "beta",
            "sample",
            "verdict",
            "f_value",
            "residual",
            "iterations",
        ])
        .map_err(csv_error)?;
        for r in &runs {
            w.write_record([
                r.run_id.clone(),
                r.beta.to_string(),
                r.sample.to_string(),
                format!("{:?}", r.verdict),
                r.f_value.to_string(),
                r.residual.to_string(),
                r.iterations.to_string(),
            ])
            .map_err(csv_error)?;
        }
        finish_csv(w)?;

        let mut w = csv_writer(&ctx.out, "gradient.csv")?;
        w.write_record(["run_id", "beta", "i", "j", "re", "im"])
            .map_err(csv_error)?;
        for r in &runs {
            matrix_rows(&mut w, &r.run_id, r.beta, &r.gradient)?;
        }
        finish_csv(w)?;
        files.extend(["functional.csv", "gradient.csv"]);
    }
    if !seg_rows.is_empty() {
        let mut w = csv_writer(&ctx.out, "segment.csv")?;
        w.write_record(["beta", "lambda", "verdict", "f_value", "residual"])
            .map_err(csv_error)?;
        for r in &seg_rows {
            w.write_record([
                r.beta.to_string(),
                r.lambda.to_string(),
                format!("{:?}", r.verdict),
                r.f_value.to_string(),
                r.residual.to_string(),
            ])
            .map_err(csv_error)?;
        }
        finish_csv(w)?;
        files.push("segment.csv");
    }

    #[derive(Serialize)]
    struct Body<'a> {
        runs: &'a [FunctionalRun],
        segment: &'a [SegmentRow],
    }
    ctx.write_sidecar(
        "functional.json",
        "functional",
        files,
        Body {
            runs: &runs,
            segment: &seg_rows,
        },
    )?;
    Ok(verdict_status(
        runs.iter().map(|r| r.verdict).chain(seg_rows.iter().map(|r| r.verdict)),
    ))
}

// verify -----------------------------------------------------------------

pub fn verify(ctx: &Context) -> Result<Status> {
    let suite = ctx.config.suite()?;
    ctx.prepare_out()?;
    let report = run_suite(&suite)?;

    let mut out = create(&ctx.out, "verify.json")?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Error::InvalidArguments(e.to_string()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|e| io_error(&ctx.out, e))?;
    report.write_summary_csv(create(&ctx.out, "verify_summary.csv")?)?;

    print!("{}", summary_table(&report));
    Ok(if report.passed() {
        Status::Success
    } else {
        Status::Failures
    })
}

pub fn summary_table(report: &SuiteReport) -> String {
    let mut s = format!(
        "{:<24} {:>3} {:>2} {:<7} {:>6} {:<16} {:>6} {:>8} {:>12}  status\n",
        "theorem", "nb", "N", "stats", "beta", "model", "trials", "failures", "worst"
    );
    for r in &report.reports {
        let c = &r.config;
        let worst = r.worst_margin.map_or_else(|| "-".to_string(), |m| format!("{m:.3e}"));
        s += &format!(
            "{:<24} {:>3} {:>2} {:<7} {:>6} {:<16} {:>6} {:>8} {:>12}  {}\n",
            r.theorem_id,
            c.nb,
            c.n,
            c.statistics.to_string(),
            c.beta,
            c.model.name(),
            r.trials,
            r.failures,
            worst,
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    s += &format!(
        "{} checks, {} failures, config {}\n",
        report.reports.len(),
        report.total_failures,
        report.config_hash
    );
    s
}

// polytope ---------------------------------------------------------------

#[derive(Serialize)]
struct PolytopeBody<'a> {
    occupations: &'a [f64],
    /// `given` for explicit occupations, `natural` for the descending
    /// natural occupations of a 1RDM target.
    occupation_basis: &'static str,
    decomposition: &'a PolytopeDecomposition,
    #[serde(skip_serializing_if = "Option::is_none")]
    simplex_vertices: Option<Vec<Vec<usize>>>,
}

/// Barycentric coordinates on the triangle of admissible occupations for
/// three orbitals, and the triangle's vertices as occupied orbital lists.
pub fn barycentric(occ: &[f64], n: usize, statistics: Statistics) -> (Vec<Vec<usize>>, [f64; 3]) {
    match statistics {
        Statistics::Boson => (
            (0..3).map(|i| vec![i; n]).collect(),
            std::array::from_fn(|i| occ[i] / n as f64),
        ),
        Statistics::Fermion if n == 1 => ((0..3).map(|i| vec![i]).collect(), [occ[0], occ[1], occ[2]]),
        Statistics::Fermion => (
            (0..3).map(|i| (0..3).filter(|&j| j != i).collect()).collect(),
            std::array::from_fn(|i| 1.0 - occ[i]),
        ),
    }
}

pub fn polytope(ctx: &Context) -> Result<Status> {
    let cfg = &ctx.config;
    let (nb, n, statistics) = cfg.system_spec()?;
    let spec = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::Config("polytope needs a target".into()))?;
    let (occ, basis_kind) = match spec {
        TargetSpec::Occupations { values } => {
            if values.len() != nb {
                return Err(Error::Config(format!("{} occupations for nb = {nb}", values.len())));
            }
            (values.clone(), "given")
        }
        other => {
            let system = cfg.system()?;
            let params = match other {
                TargetSpec::Gibbs { .. } => {
                    let p = cfg.params()?;
                    if p.len() != 1 {
                        return Err(Error::Config("polytope takes a single beta".into()));
                    }
                    p[0]
                }
                _ => EnsembleParams::new(1.0)?,
            };
            let g = resolve_target(ctx, other, &system, &params, 0)?;
            (natural_spectrum(&g)?.occupations, "natural")
        }
    };
    ctx.prepare_out()?;

    let d = match statistics {
        Statistics::Fermion => polytope_decompose(&occ, n)?,
        Statistics::Boson => simplex_decompose(&occ, n)?,
    };
    io::write_polytope_csv(create(&ctx.out, "polytope.csv")?, &d)?;
    let mut files = vec!["polytope.csv"];
    let mut simplex_vertices = None;
    if nb == 3 {
        let (vertices, b) = barycentric(&occ, n, statistics);
        let mut w = csv_writer(&ctx.out, "barycentric.csv")?;
        w.write_record(["b0", "b1", "b2", "x", "y"]).map_err(csv_error)?;
        let (x, y) = (b[1] + 0.5 * b[2], 0.75f64.sqrt() * b[2]);
        w.write_record([b[0], b[1], b[2], x, y].map(|v| v.to_string()))
            .map_err(csv_error)?;
        finish_csv(w)?;
        files.push("barycentric.csv");
        simplex_vertices = Some(vertices);
    }
    ctx.write_sidecar(
        "polytope.json",
        "polytope",
        files,
        PolytopeBody {
            occupations: &occ,
            occupation_basis: basis_kind,
            decomposition: &d,
            simplex_vertices,
        },
    )?;
    Ok(Status::Success)
}
