//! Batch jobs: a metric plus a list of named checks, read from TOML.
//!
//! ```toml
//! metric = { example = "pure_m2_odd" }   # or { file = "..." } / { inline = "..." }
//! seed = 42
//!
//! [[command]]
//! name = "theorem2_pipeline"
//! samples = 16
//!
//! [[command]]
//! name = "twistor"
//! sigma = "x1/3"
//! ```
//!
//! Parameter precedence: command table, then command-line flags, then
//! job-level keys, then defaults (seed 42, 64 samples, tol 1e-6, step 1e-3).

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog;
use crate::clifford::CliffordRep;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::geometry::{check_integrable, CheckConfig, Distribution, VectorField};
use crate::linalg::{self, RANK_TOL};
use crate::metricfile::{LoadedMetric, MetricFile, MetricSource};
use crate::report::{sample_points, Outcome, Report};
use crate::spintractor::{
    check_parallel_spinor, check_twistor, conformal_rescale_spinor, d_invariant,
    kernel_distribution, twistor_to_tractor,
};
use crate::tractor::{
    build_h_from_l, check_tractor_metricity, holonomy_sample, project_l_from_h,
    verify_invariant_lightlike, HolonomyConfig, TractorField,
};
use crate::walker::validate_ricci_isotropic;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_RK4_STEP: f64 = 1e-3;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum MetricRef {
    File(PathBuf),
    Example(String),
    Inline(String),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Curvature,
    HolonomySample,
    TractorMetricity,
    CertifyParallelSpinor,
    Theorem1Pipeline,
    Theorem2Pipeline,
    Twistor,
}

/// What the `curvature` command compares against zero.
#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureExpect {
    #[default]
    None,
    Flat,
    RicciFlat,
    ScalarFlat,
    Einstein,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    pub name: CommandKind,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    /// RK4 step for `holonomy_sample`.
    pub step: Option<f64>,
    /// Loop size for `holonomy_sample`.
    pub eps: Option<f64>,
    /// Base point for `holonomy_sample`; defaults to the chart centre.
    pub base: Option<Vec<f64>>,
    pub expect: Option<CurvatureExpect>,
    /// Conformal factor for `twistor`: the check runs in the gauge `e^{2 sigma} g`.
    pub sigma: Option<String>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub metric: MetricRef,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub rk4_step: Option<f64>,
    #[serde(default, rename = "command")]
    pub commands: Vec<CommandSpec>,
}

/// Command-line overrides.
#[derive(Clone, Copy, Debug, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub rk4_step: Option<f64>,
    pub fail_fast: bool,
}

/// A validated job, ready to run.
#[derive(Clone, Debug)]
pub struct Job {
    pub spec: JobSpec,
    pub file: MetricFile,
    pub source_name: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandRecord {
    pub command: CommandKind,
    pub parameters: Value,
    pub passed: bool,
    pub reports: Vec<Report>,
    pub error: Option<String>,
    pub singular_points: usize,
    pub timing_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JobReport {
    pub engine: String,
    pub metric: Value,
    pub rep_id: Option<String>,
    pub commands: Vec<CommandRecord>,
    pub passed: bool,
}

fn toml_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start].matches('\n').count() + 1)
        .unwrap_or(1);
    Error::Validation {
        line,
        message: e.message().to_string(),
    }
}

fn invalid(message: impl Into<String>) -> Error {
    Error::Validation {
        line: 0,
        message: message.into(),
    }
}

impl Job {
    /// Parses and validates a job; relative metric paths resolve against `dir`.
    pub fn parse(text: &str, dir: &Path) -> Result<Job> {
        let spec: JobSpec = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
        Job::from_spec(spec, dir)
    }

    pub fn read(path: &Path) -> Result<Job> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Job::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn from_spec(spec: JobSpec, dir: &Path) -> Result<Job> {
        let (file, source_name) = match &spec.metric {
            MetricRef::File(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    dir.join(p)
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let file = MetricFile::parse(&text).map_err(|e| match e {
                    Error::Validation { line, message } => Error::Validation {
                        line,
                        message: format!("{}: {message}", path.display()),
                    },
                    other => other,
                })?;
                (file, format!("file:{}", p.display()))
            }
            MetricRef::Example(name) => (
                catalog::example(name)
                    .map_err(|e| invalid(e.to_string()))?
                    .file()?,
                format!("example:{name}"),
            ),
            MetricRef::Inline(text) => (MetricFile::parse(text)?, "inline".to_string()),
        };
        let job = Job {
            spec,
            file,
            source_name,
        };
        for c in &job.spec.commands {
            job.validate_command(c)?;
        }
        Ok(job)
    }

    fn validate_command(&self, c: &CommandSpec) -> Result<()> {
        let name = serde_json::to_value(c.name).expect("serializes");
        let reject = |what: &str| invalid(format!("`{what}` does not apply to command {name}"));
        if c.name != CommandKind::HolonomySample {
            for (set, what) in [
                (c.step.is_some(), "step"),
                (c.eps.is_some(), "eps"),
                (c.base.is_some(), "base"),
            ] {
                if set {
                    return Err(reject(what));
                }
            }
        }
        if c.name != CommandKind::Curvature && c.expect.is_some() {
            return Err(reject("expect"));
        }
        if c.name != CommandKind::Twistor && c.sigma.is_some() {
            return Err(reject("sigma"));
        }
        if let Some(s) = &c.sigma {
            parse_expr(s, &self.file.bare_chart()?).map_err(|e| invalid(format!("sigma: {e}")))?;
        }
        if let Some(b) = &c.base {
            let n = self.file.bare_chart()?.dim();
            if b.len() != n {
                return Err(invalid(format!(
                    "base has {} coordinates, chart has {n}",
                    b.len()
                )));
            }
        }
        if c.samples == Some(0) {
            return Err(invalid("samples must be positive"));
        }
        let has_l = !matches!(self.file.source, MetricSource::Explicit { .. });
        let has_spinor =
            self.file.spinor.is_some() || matches!(self.file.source, MetricSource::PureWalker(_));
        match c.name {
            CommandKind::Theorem1Pipeline if !has_l => Err(invalid(format!(
                "{name} needs a `walker` or `pure_walker` metric"
            ))),
            CommandKind::CertifyParallelSpinor
            | CommandKind::Theorem2Pipeline
            | CommandKind::Twistor
                if !has_spinor =>
            {
                Err(invalid(format!(
                    "{name} needs a `spinor` or a `pure_walker` metric"
                )))
            }
            _ => Ok(()),
        }
    }

    fn resolve(&self, c: &CommandSpec, g: &Globals) -> (CheckConfig, f64) {
        let s = &self.spec;
        let cfg = CheckConfig {
            samples: c
                .samples
                .or(g.samples)
                .or(s.samples)
                .unwrap_or(DEFAULT_SAMPLES),
            seed: c.seed.or(g.seed).or(s.seed).unwrap_or(DEFAULT_SEED),
            tol: c.tol.or(g.tol).or(s.tol).unwrap_or(DEFAULT_TOL),
        };
        let step = c
            .step
            .or(g.rk4_step)
            .or(s.rk4_step)
            .unwrap_or(DEFAULT_RK4_STEP);
        (cfg, step)
    }

    /// Loads the metric (certifying pure Walker spinors with the job's
    /// first-command settings) and runs every command in order.
    pub fn run(&self, globals: &Globals) -> Result<JobReport> {
        let load_cfg = CheckConfig {
            seed: globals.seed.or(self.spec.seed).unwrap_or(DEFAULT_SEED),
            ..CheckConfig::default()
        };
        let loaded = self.file.load(&load_cfg)?;
        let (p, q) = loaded.metric.signature();
        let rep_id = loaded
            .spinor
            .as_ref()
            .map(|s| s.rep().rep_id())
            .or_else(|| CliffordRep::build(p, q).ok().map(|r| r.rep_id()));
        let mut records = Vec::new();
        for c in &self.spec.commands {
            let (cfg, step) = self.resolve(c, globals);
            let start = Instant::now();
            let outcome = run_command(&loaded, c, &cfg, step);
            let timing_ms = start.elapsed().as_secs_f64() * 1e3;
            let mut params = json!({"samples": cfg.samples, "seed": cfg.seed, "tol": cfg.tol});
            if c.name == CommandKind::HolonomySample {
                params["step"] = json!(step);
                params["eps"] = json!(c.eps.unwrap_or(HolonomyConfig::default().eps));
            }
            if let Some(e) = c.expect {
                params["expect"] = json!(e);
            }
            if let Some(s) = &c.sigma {
                params["sigma"] = json!(s);
            }
            let record = match outcome {
                Ok(reports) => CommandRecord {
                    command: c.name,
                    parameters: params,
                    passed: !reports.is_empty() && reports.iter().all(|r| r.passed),
                    singular_points: reports.iter().map(|r| r.singular_points.len()).sum(),
                    reports,
                    error: None,
                    timing_ms,
                },
                Err(e) => CommandRecord {
                    command: c.name,
                    parameters: params,
                    passed: false,
                    reports: Vec::new(),
                    error: Some(e.to_string()),
                    singular_points: 0,
                    timing_ms,
                },
            };
            let stop = globals.fail_fast && !record.passed;
            records.push(record);
            if stop {
                break;
            }
        }
        Ok(JobReport {
            engine: format!("tractorlab {}", env!("CARGO_PKG_VERSION")),
            metric: json!({
                "source": self.source_name,
                "chart": loaded.metric.chart().names(),
                "signature": [p, q],
            }),
            rep_id,
            passed: records.iter().all(|r| r.passed),
            commands: records,
        })
    }
}

impl JobReport {
    /// JSON document; `timing` false drops the wall-clock fields so equal
    /// jobs give byte-identical output.
    pub fn to_json(&self, timing: bool) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if !timing {
            for c in v["commands"].as_array_mut().expect("array") {
                c.as_object_mut().expect("object").remove("timing_ms");
            }
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} on {} signature {}\n",
            self.engine, self.metric["source"], self.metric["signature"]
        );
        for c in &self.commands {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let name = serde_json::to_value(c.command).expect("serializes");
            let name = name.as_str().unwrap_or("?");
            match &c.error {
                Some(e) => s.push_str(&format!("{verdict} {name}: error: {e}\n")),
                None => {
                    let worst = c.reports.iter().map(|r| r.max_residual).fold(0.0, f64::max);
                    s.push_str(&format!(
                        "{verdict} {name}: max residual {worst:.3e}, {} singular ({:.0} ms)\n",
                        c.singular_points, c.timing_ms
                    ));
                    for r in c.reports.iter().filter(|r| !r.passed) {
                        s.push_str(&format!(
                            "    {} failed: {:.3e} > {:.1e} at {} points\n",
                            r.check,
                            r.max_residual,
                            r.tolerance,
                            r.failures.len()
                        ));
                    }
                }
            }
        }
        s.push_str(if self.passed {
            "all checks passed\n"
        } else {
            "some checks failed\n"
        });
        s
    }
}

fn run_command(
    l: &LoadedMetric,
    c: &CommandSpec,
    cfg: &CheckConfig,
    step: f64,
) -> Result<Vec<Report>> {
    let g = &l.metric;
    let need_l = || {
        l.distribution
            .as_ref()
            .ok_or_else(|| invalid("no Walker distribution"))
    };
    let need_phi = || l.spinor.as_ref().ok_or_else(|| invalid("no spinor"));
    match c.name {
        CommandKind::Curvature => Ok(vec![curvature(l, c.expect.unwrap_or_default(), cfg)?]),
        CommandKind::HolonomySample => {
            let base = c.base.clone().unwrap_or_else(|| g.chart().center());
            let hcfg = HolonomyConfig {
                eps: c.eps.unwrap_or(HolonomyConfig::default().eps),
                step,
                ..HolonomyConfig::default()
            };
            let h = holonomy_sample(g, &base, &hcfg)?;
            Ok(vec![Report::single(
                "holonomy_gram",
                cfg.tol,
                h.max_gram_residual(),
            )
            .with_extra("identity_deviation", h.max_identity_deviation())
            .with_extra("base", base)
            .with_extra(
                "loops",
                serde_json::to_value(&h.loops).expect("serializes"),
            )])
        }
        CommandKind::TractorMetricity => Ok(vec![check_tractor_metricity(
            g,
            &metricity_fields(l)?,
            cfg,
        )?]),
        CommandKind::CertifyParallelSpinor => {
            Ok(vec![check_parallel_spinor(g, &l.frame, need_phi()?, cfg)?])
        }
        CommandKind::Theorem1Pipeline => {
            let dist = need_l()?;
            let ri = validate_ricci_isotropic(g, dist, cfg)?;
            let h = build_h_from_l(g, dist, cfg)?;
            let inv = verify_invariant_lightlike(g, &h, cfg)?;
            let proj = project_l_from_h(g, &h, cfg)?;
            let rec = recovery(l, dist, &proj.distribution, cfg)?;
            Ok(vec![ri, inv, proj.report, rec])
        }
        CommandKind::Theorem2Pipeline => {
            let phi = need_phi()?;
            let tw = check_twistor(g, &l.frame, phi, cfg)?;
            let d = d_invariant(g, &l.frame, phi, cfg)?;
            let psi = twistor_to_tractor(g, &l.frame, phi, cfg)?;
            let (samples, kernel) = kernel_distribution(g, &l.frame, &psi, cfg)?;
            let rank_ok = kernel
                .extra
                .get("constant_rank")
                .is_some_and(|v| !v.is_null());
            let plus = Report::from_outcomes(
                "plus_in_kernel",
                cfg.tol,
                samples
                    .iter()
                    .map(|s| (s.point.clone(), Outcome::Residual(s.plus_residual)))
                    .collect(),
            );
            let tangent = Report::from_outcomes(
                "tangent_part_is_ker_phi",
                cfg.tol,
                samples
                    .iter()
                    .map(|s| {
                        Ok((
                            s.point.clone(),
                            Outcome::Residual(s.tangent_distance(g, &l.frame, phi)?),
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            let rank = Report::single("constant_rank", 0.0, if rank_ok { 0.0 } else { 1.0 })
                .with_extra(
                    "rank",
                    kernel
                        .extra
                        .get("constant_rank")
                        .cloned()
                        .unwrap_or(Value::Null),
                );
            let mut out = vec![tw, d.report, kernel, rank, plus, tangent];
            if let Some(dist) = &l.distribution {
                out.push(check_integrable(g, dist, cfg)?);
            }
            Ok(out)
        }
        CommandKind::Twistor => {
            let phi = need_phi()?;
            match &c.sigma {
                None => Ok(vec![check_twistor(g, &l.frame, phi, cfg)?]),
                Some(s) => {
                    let sigma = parse_expr(s, g.chart())?;
                    let r = conformal_rescale_spinor(g, &l.frame, phi, &sigma)?;
                    Ok(vec![check_twistor(&r.metric, &r.frame, &r.phi, cfg)?
                        .with_extra("sigma", s.as_str())])
                }
            }
        }
    }
}

fn curvature(l: &LoadedMetric, expect: CurvatureExpect, cfg: &CheckConfig) -> Result<Report> {
    let g = &l.metric;
    let n = g.dim();
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let values: Vec<Result<Option<[f64; 4]>>> = points
        .par_iter()
        .map(|p| {
            let geo = match g.geometry_at(p) {
                Ok(x) => x,
                Err(Error::Signature { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let mut riem: f64 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        for d in 0..n {
                            riem = riem.max(geo.riemann(a, b, c, d).abs());
                        }
                    }
                }
            }
            let ric = geo.ricci.abs().max();
            let einstein = (&geo.ricci - &geo.conn.g * (geo.scal / n as f64))
                .abs()
                .max();
            Ok(Some([riem, ric, geo.scal, einstein]))
        })
        .collect();
    let mut outcomes = Vec::new();
    let (mut max_riem, mut max_ric, mut smin, mut smax) =
        (0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (p, v) in points.into_iter().zip(values) {
        match v? {
            None => outcomes.push((p, Outcome::Singular)),
            Some([riem, ric, scal, einstein]) => {
                max_riem = max_riem.max(riem);
                max_ric = max_ric.max(ric);
                smin = smin.min(scal);
                smax = smax.max(scal);
                let r = match expect {
                    CurvatureExpect::None => 0.0,
                    CurvatureExpect::Flat => riem,
                    CurvatureExpect::RicciFlat => ric,
                    CurvatureExpect::ScalarFlat => scal.abs(),
                    CurvatureExpect::Einstein => einstein,
                };
                outcomes.push((p, Outcome::Residual(r)));
            }
        }
    }
    let mut r = Report::from_outcomes("curvature", cfg.tol, outcomes)
        .with_extra("expect", serde_json::to_value(expect).expect("serializes"))
        .with_extra("max_riemann", max_riem)
        .with_extra("max_ricci", max_ric);
    if smin.is_finite() {
        r = r.with_extra("scal_min", smin).with_extra("scal_max", smax);
    }
    r.require_regular()
}

/// `I_+`, `I_-`, the middle coordinate tractors and one polynomial tractor.
fn metricity_fields(l: &LoadedMetric) -> Result<Vec<TractorField>> {
    let g = &l.metric;
    let n = g.dim();
    let mut out = vec![TractorField::plus(g), TractorField::minus(g)];
    for i in 0..n {
        out.push(TractorField::middle(g, VectorField::coordinate(n, i))?);
    }
    let x = Expr::coord;
    let y = VectorField::new(
        (0..n)
            .map(|i| x(i) * x((i + 1) % n) + Expr::constant(i as i64))
            .collect(),
    );
    out.push(TractorField::new(
        g,
        x(0) * x(1 % n),
        y,
        x(n - 1) - Expr::one(),
    )?);
    Ok(out)
}

/// Span distance between `L` and the recovered distribution at samples.
fn recovery(
    l: &LoadedMetric,
    dist: &Distribution,
    got: &Distribution,
    cfg: &CheckConfig,
) -> Result<Report> {
    let g = &l.metric;
    let eval = |d: &Distribution, p: &[f64]| -> Result<DMatrix<f64>> {
        let cols = d
            .generators()
            .iter()
            .map(|v| v.eval(p, g.bindings()))
            .collect::<Result<Vec<_>>>()?;
        Ok(linalg::column_basis(
            &DMatrix::from_columns(&cols),
            RANK_TOL,
        ))
    };
    let mut outcomes = Vec::new();
    for p in sample_points(g.chart(), cfg.samples, cfg.seed, 0.0) {
        let a = eval(dist, &p)?;
        let b = eval(got, &p)?;
        let o = if a.ncols() != dist.rank() || b.ncols() != got.rank() {
            Outcome::Singular
        } else {
            Outcome::Residual(linalg::span_distance(&a, &b))
        };
        outcomes.push((p, o));
    }
    Report::from_outcomes("l_recovery", cfg.tol, outcomes).require_regular()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(text: &str) -> Result<Job> {
        Job::parse(text, Path::new("."))
    }

    #[test]
    fn flat_job_has_trivial_curvature_and_holonomy() {
        let j = job(
            "metric = { example = \"flat22\" }\n[[command]]\nname = \"curvature\"\nexpect = \"flat\"\nsamples = 8\n[[command]]\nname = \"holonomy_sample\"\n",
        )
        .unwrap();
        let r = j.run(&Globals::default()).unwrap();
        assert!(r.passed, "{}", r.to_text());
        let h = &r.commands[1].reports[0];
        assert!(h.extra["identity_deviation"].as_f64().unwrap() < 1e-8);
    }

    #[test]
    fn validation_errors() {
        let e =
            job("metric = { example = \"flat22\" }\n[[command]]\nname = \"theorem1_pipeline\"\n")
                .unwrap_err();
        assert!(matches!(e, Error::Validation { .. }));
        let e = job("metric = { example = \"nope\" }\n").unwrap_err();
        assert!(matches!(e, Error::Validation { .. }));
        let e = job("metric = { example = \"flat22\" }\n\n[[command]]\nname = \"bogus\"\n")
            .unwrap_err();
        assert!(matches!(e, Error::Validation { line: 4, .. }), "{e:?}");
        let e = job("metric = { example = \"flat22\" }\n[[command]]\nname = \"curvature\"\nsigma = \"x1\"\n").unwrap_err();
        assert!(matches!(e, Error::Validation { .. }));
        let e = job("metric = { inline = \"chart x y ;\\nsignature 1 1 ;\\ng 1 1 = ( ;\" }\n")
            .unwrap_err();
        assert!(matches!(e, Error::Validation { line: 3, .. }), "{e:?}");
    }

    #[test]
    fn reports_are_deterministic() {
        let text = "metric = { example = \"pure_m2_odd\" }\nsamples = 6\n[[command]]\nname = \"theorem2_pipeline\"\n[[command]]\nname = \"twistor\"\nsigma = \"x1/3\"\n";
        let a = job(text).unwrap().run(&Globals::default()).unwrap();
        let b = job(text).unwrap().run(&Globals::default()).unwrap();
        assert!(a.passed, "{}", a.to_text());
        assert_eq!(a.to_json(false), b.to_json(false));
    }

    #[test]
    fn fail_fast_stops_the_batch() {
        let text = "metric = { example = \"sphere3\" }\nsamples = 4\n[[command]]\nname = \"curvature\"\nexpect = \"flat\"\n[[command]]\nname = \"curvature\"\nexpect = \"einstein\"\n";
        let j = job(text).unwrap();
        let all = j.run(&Globals::default()).unwrap();
        assert_eq!(all.commands.len(), 2);
        assert!(!all.commands[0].passed && all.commands[1].passed);
        let ff = j
            .run(&Globals {
                fail_fast: true,
                ..Globals::default()
            })
            .unwrap();
        assert_eq!(ff.commands.len(), 1);
    }
}
