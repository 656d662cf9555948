//! Sampled pointwise checks on distributions. Points where the generators
//! drop rank or the metric degenerates are reported as singular and skipped.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::curvature::PointGeometry;
use super::fields::{Distribution, FieldJetValues, FieldJets};
use super::metric::ChartMetric;
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::report::{par_outcomes, sample_points, Outcome, Report};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            samples: 64,
            seed: 42,
            tol: 1e-7,
        }
    }
}

impl CheckConfig {
    pub fn with_tol(self, tol: f64) -> Self {
        CheckConfig { tol, ..self }
    }
}

/// What each check needs at a point.
enum Need {
    Connection,
    Curvature,
}

struct Sampled<'a> {
    g: &'a ChartMetric,
    jets: FieldJets,
    rank: usize,
}

enum Local {
    Conn(super::curvature::PointConnection),
    Geo(Box<PointGeometry>),
}

impl Local {
    fn conn(&self) -> &super::curvature::PointConnection {
        match self {
            Local::Conn(c) => c,
            Local::Geo(g) => &g.conn,
        }
    }
    fn geo(&self) -> &PointGeometry {
        match self {
            Local::Geo(g) => g,
            Local::Conn(_) => unreachable!("curvature was not requested"),
        }
    }
}

impl<'a> Sampled<'a> {
    fn new(g: &'a ChartMetric, l: &Distribution) -> Result<Sampled<'a>> {
        Ok(Sampled {
            g,
            jets: FieldJets::new(l.generators(), g.dim(), g.bindings())?,
            rank: l.rank(),
        })
    }

    /// Evaluate at `p`; `None` marks a singular point.
    fn at(&self, p: &[f64], need: &Need) -> Result<Option<(Local, FieldJetValues, DMatrix<f64>)>> {
        let local = match need {
            Need::Connection => self.g.connection_at(p).map(Local::Conn),
            Need::Curvature => self.g.geometry_at(p).map(|x| Local::Geo(Box::new(x))),
        };
        let local = match local {
            Ok(l) => l,
            Err(Error::Signature { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let jets = self.jets.eval(p)?;
        let m = jets.matrix();
        if self.rank > 0 && linalg::rank(&m, RANK_TOL) < self.rank {
            return Ok(None);
        }
        let basis = if self.rank == 0 {
            DMatrix::zeros(self.g.dim(), 0)
        } else {
            linalg::column_basis(&m, RANK_TOL)
        };
        Ok(Some((local, jets, basis)))
    }
}

fn run<F>(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
    name: &str,
    need: Need,
    f: F,
) -> Result<Report>
where
    F: Fn(&Local, &FieldJetValues, &DMatrix<f64>) -> f64 + Sync,
{
    let s = Sampled::new(g, l)?;
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let outcomes = par_outcomes(&points, |p| {
        Ok(match s.at(p, &need)? {
            None => Outcome::Singular,
            Some((local, jets, basis)) => Outcome::Residual(f(&local, &jets, &basis)),
        })
    })?;
    Report::from_outcomes(name, cfg.tol, outcomes)
        .with_extra("rank", l.rank())
        .require_regular()
}

/// Is `nabla_X K_i` in `span(L)` for all generators and coordinate directions?
pub fn check_distribution_parallel(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
) -> Result<Report> {
    let n = g.dim();
    run(
        g,
        l,
        cfg,
        "distribution_parallel",
        Need::Connection,
        |local, jets, basis| {
            let conn = local.conn();
            let mut worst: f64 = 0.0;
            for (v, dv) in jets.values.iter().zip(&jets.derivs) {
                for m in 0..n {
                    let x = DVector::from_fn(n, |i, _| if i == m { 1.0 } else { 0.0 });
                    let d = conn.covariant(&x, v, dv);
                    worst = worst.max(linalg::span_residual(basis, &d));
                }
            }
            worst
        },
    )
}

fn image_check(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
    name: &str,
    tensor: fn(&PointGeometry) -> &DMatrix<f64>,
) -> Result<Report> {
    let n = g.dim();
    run(g, l, cfg, name, Need::Curvature, |local, _, basis| {
        let geo = local.geo();
        let raised = &geo.conn.ginv * tensor(geo);
        (0..n)
            .map(|i| linalg::span_residual(basis, &raised.column(i).into_owned()))
            .fold(0.0, f64::max)
    })
}

/// Is `Ric(e_i)^#` in `span(L)` for every coordinate direction?
pub fn check_ricci_image(g: &ChartMetric, l: &Distribution, cfg: &CheckConfig) -> Result<Report> {
    image_check(g, l, cfg, "ricci_image", |geo| &geo.ricci)
}

/// Same with the Schouten tensor in place of Ricci.
pub fn check_schouten_image(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
) -> Result<Report> {
    image_check(g, l, cfg, "schouten_image", |geo| &geo.schouten)
}

/// Are all brackets `[K_i, K_j]` in `span(L)`?
pub fn check_integrable(g: &ChartMetric, l: &Distribution, cfg: &CheckConfig) -> Result<Report> {
    run(
        g,
        l,
        cfg,
        "integrable",
        Need::Connection,
        |_, jets, basis| {
            let k = jets.values.len();
            let mut worst: f64 = 0.0;
            for a in 0..k {
                for b in (a + 1)..k {
                    let mut br = DVector::zeros(jets.values[a].len());
                    for (m, (da, db)) in jets.derivs[a].iter().zip(&jets.derivs[b]).enumerate() {
                        br += db * jets.values[a][m] - da * jets.values[b][m];
                    }
                    worst = worst.max(linalg::span_residual(basis, &br));
                }
            }
            worst
        },
    )
}

/// Largest `|g(K_i, K_j)|` relative to the generator sizes.
pub fn check_lightlike(g: &ChartMetric, l: &Distribution, cfg: &CheckConfig) -> Result<Report> {
    run(
        g,
        l,
        cfg,
        "totally_lightlike",
        Need::Connection,
        |local, jets, _| {
            let conn = local.conn();
            let mut worst: f64 = 0.0;
            for a in &jets.values {
                for b in &jets.values {
                    let scale = a.norm().max(1.0) * b.norm().max(1.0);
                    worst = worst.max(conn.inner(a, b).abs() / scale);
                }
            }
            worst
        },
    )
}

/// `|scal|` at the sample points.
pub fn check_scalar_flat(g: &ChartMetric, cfg: &CheckConfig) -> Result<Report> {
    let empty = Distribution::new(Vec::new());
    run(
        g,
        &empty,
        cfg,
        "scalar_flat",
        Need::Curvature,
        |local, _, _| local.geo().scal.abs(),
    )
}
