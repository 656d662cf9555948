//! Shared fixtures and independent oracles for integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tractorlab::expr::{parse_expr, Bindings, Expr};
use tractorlab::geometry::ChartMetric;
use tractorlab::Chart;

/// Random metric with polynomial entries of degree <= 2: constant diagonal
/// `(-2 x p, +2 x q)` plus small random polynomial perturbations.
pub fn random_polynomial_metric(p: usize, q: usize, seed: u64) -> ChartMetric {
    let n = p + q;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chart = Chart::numbered("x", n).with_bounds(-0.5, 0.5).unwrap();
    let mut coef = || Expr::ratio(rng.gen_range(-3..=3), 10);
    let mut entries = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut terms = vec![if i == j {
                Expr::constant(if i < p { -2 } else { 2 })
            } else {
                Expr::zero()
            }];
            for a in 0..n {
                terms.push(coef() * Expr::coord(a));
                for b in a..n {
                    terms.push(coef() * Expr::coord(a) * Expr::coord(b));
                }
            }
            entries.push((i, j, Expr::sum(terms).simplify()));
        }
    }
    ChartMetric::from_entries(chart, (p, q), &entries, Bindings::new()).unwrap()
}

pub fn round_s3() -> ChartMetric {
    let c = Chart::numbered("x", 3).with_bounds(0.3, 2.8).unwrap();
    let e = |s: &str| parse_expr(s, &c).unwrap();
    ChartMetric::from_entries(
        c.clone(),
        (0, 3),
        &[
            (0, 0, e("1")),
            (1, 1, e("sin(x1)^2")),
            (2, 2, e("sin(x1)^2*sin(x2)^2")),
        ],
        Bindings::new(),
    )
    .unwrap()
}

/// Metric matrix by direct evaluation of the components.
pub fn metric_at(g: &ChartMetric, p: &[f64]) -> DMatrix<f64> {
    let n = g.dim();
    DMatrix::from_fn(n, n, |i, j| {
        g.component(i, j).evaluate(p, g.bindings()).unwrap()
    })
}

fn shifted(p: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[k] += h;
    q
}

/// Christoffel symbols from central differences of the metric values only.
pub fn fd_christoffel(g: &ChartMetric, p: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    let n = g.dim();
    let dg: Vec<DMatrix<f64>> = (0..n)
        .map(|k| (metric_at(g, &shifted(p, k, h)) - metric_at(g, &shifted(p, k, -h))) / (2.0 * h))
        .collect();
    let ginv = metric_at(g, p).try_inverse().unwrap();
    (0..n)
        .map(|k| {
            DMatrix::from_fn(n, n, |i, j| {
                (0..n)
                    .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                    .sum()
            })
        })
        .collect()
}

/// Riemann tensor `R^l_{ijk}` from central differences of `gamma_at`.
pub fn fd_riemann<F>(gamma_at: F, p: &[f64], n: usize, h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<DMatrix<f64>>,
{
    let gam = gamma_at(p);
    let dgam: Vec<Vec<DMatrix<f64>>> = (0..n)
        .map(|m| {
            let plus = gamma_at(&shifted(p, m, h));
            let minus = gamma_at(&shifted(p, m, -h));
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        })
        .collect();
    let mut out = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dgam[i][l][(j, k)] - dgam[j][l][(i, k)];
                    for m in 0..n {
                        r += gam[l][(i, m)] * gam[m][(j, k)] - gam[l][(j, m)] * gam[m][(i, k)];
                    }
                    out[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    out
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

use std::sync::Arc;

use tractorlab::catalog;
use tractorlab::clifford::{Chirality, CliffordRep};
use tractorlab::geometry::CheckConfig;
use tractorlab::metricfile::LoadedMetric;
use tractorlab::spintractor::{build_frame, conformal_rescale_spinor, Frame, SpinorField};

/// A corpus example loaded with its frame and spinor.
pub fn corpus(name: &str) -> LoadedMetric {
    let cfg = CheckConfig {
        samples: 16,
        ..CheckConfig::default()
    };
    catalog::example(name)
        .unwrap()
        .file()
        .unwrap()
        .load(&cfg)
        .unwrap()
}

pub const PURE_EXAMPLES: [&str; 4] = ["pure_m1", "pure_m2_odd", "pure_m2_split", "pure_m3_split"];

pub fn flat_with_frame(p: usize, q: usize) -> (ChartMetric, Frame, Arc<CliffordRep>) {
    let g = ChartMetric::flat(p, q);
    let f = build_frame(&g, &vec![0.0; p + q]).unwrap();
    (g, f, Arc::new(CliffordRep::build(p, q).unwrap()))
}

/// `x . v + w` with integer `v`, `w`.
pub fn flat_twistor(rep: &Arc<CliffordRep>, v: &[i64], w: &[i64]) -> SpinorField {
    let xv = SpinorField::position_times(rep.clone(), v).unwrap();
    let c = SpinorField::constant(rep.clone(), w, Chirality::Full).unwrap();
    xv.add(&c, &Bindings::new()).unwrap()
}

/// Spinor fields with a known answer to "is this a twistor spinor?":
/// parallel spinors, their conformal rescalings, flat `x . v + w`, and
/// perturbations of each that break the equation.
pub fn twistor_cases() -> Vec<(String, ChartMetric, Frame, SpinorField, bool)> {
    let mut cases = Vec::new();
    for name in PURE_EXAMPLES {
        let w = corpus(name);
        let phi = w.spinor.clone().unwrap();
        cases.push((
            name.to_string(),
            w.metric.clone(),
            w.frame.clone(),
            phi.clone(),
            true,
        ));
        let sigma = parse_expr("x1*y1/5 + y1^2/4", w.metric.chart()).unwrap();
        let r = conformal_rescale_spinor(&w.metric, &w.frame, &phi, &sigma).unwrap();
        cases.push((format!("{name} rescaled"), r.metric, r.frame, r.phi, true));
        let bump = parse_expr("1 + x1*y1", w.metric.chart()).unwrap();
        let perturbed = phi.scale(&bump, w.metric.bindings()).unwrap();
        cases.push((
            format!("{name} perturbed"),
            w.metric.clone(),
            w.frame.clone(),
            perturbed,
            false,
        ));
    }
    for (p, q, v, c) in [
        (2, 1, vec![1, 2], vec![0, 1]),
        (2, 2, vec![1, 0, 0, -1], vec![0, 0, 0, 0]),
        (
            3,
            3,
            vec![1, 0, 0, 0, 0, 2, 0, 0],
            vec![0, 1, 0, 0, 0, 0, 0, 0],
        ),
    ] {
        let (g, f, rep) = flat_with_frame(p, q);
        cases.push((
            format!("flat({p},{q}) twistor"),
            g.clone(),
            f.clone(),
            flat_twistor(&rep, &v, &c),
            true,
        ));
        let x1 = Expr::coord(0) * Expr::coord(0);
        let bad = flat_twistor(&rep, &v, &c)
            .scale(&x1, &Bindings::new())
            .unwrap();
        cases.push((format!("flat({p},{q}) quadratic"), g, f, bad, false));
    }
    let fl = corpus("flat32");
    cases.push((
        "flat32 corpus".into(),
        fl.metric.clone(),
        fl.frame.clone(),
        fl.spinor.clone().unwrap(),
        true,
    ));
    let g = random_polynomial_metric(2, 2, 9);
    let f = build_frame(&g, &[0.0; 4]).unwrap();
    let rep = Arc::new(CliffordRep::build(2, 2).unwrap());
    let phi = SpinorField::constant(rep, &[1, 0, 1, 0], Chirality::Full).unwrap();
    cases.push(("curved constant".into(), g, f, phi, false));
    cases
}
