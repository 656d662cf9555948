mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use tractorlab::expr::{parse_expr, Bindings, Compiled, Expr};
use tractorlab::geometry::*;
use tractorlab::report::sample_points;
use tractorlab::{Chart, Error};

#[test]
fn pointwise_curvature_matches_finite_difference_oracle() {
    for (k, (p, q)) in [(0, 3), (1, 2), (2, 2), (1, 3), (0, 4)]
        .into_iter()
        .enumerate()
    {
        let g = random_polynomial_metric(p, q, 100 + k as u64);
        let n = g.dim();
        for x in sample_points(g.chart(), 4, k as u64, 0.01) {
            let geo = g.geometry_at(&x).unwrap();
            let gam = fd_christoffel(&g, &x, 1e-5);
            for a in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        assert!(rel_err(geo.conn.gamma[a][(i, j)], gam[a][(i, j)]) < 1e-7);
                    }
                }
            }
            // Riemann from differences of the engine's exact Christoffels
            let riem = fd_riemann(|y| g.connection_at(y).unwrap().gamma, &x, n, 1e-5);
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for kk in 0..n {
                            let fd = riem[((l * n + i) * n + j) * n + kk];
                            assert!(rel_err(geo.riemann(l, i, j, kk), fd) < 1e-6);
                        }
                    }
                }
            }
            for j in 0..n {
                for kk in 0..n {
                    let fd: f64 = (0..n).map(|i| riem[((i * n + i) * n + j) * n + kk]).sum();
                    assert!(rel_err(geo.ricci[(j, kk)], fd) < 1e-6);
                }
            }
        }
    }
}

#[test]
fn riemann_symmetries_and_symmetric_ricci() {
    let g = random_polynomial_metric(1, 3, 7);
    let n = 4;
    for x in sample_points(g.chart(), 5, 3, 0.0) {
        let geo = g.geometry_at(&x).unwrap();
        assert!((&geo.ricci - geo.ricci.transpose()).abs().max() < 1e-10);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let bianchi = geo.riemann(l, i, j, k)
                            + geo.riemann(l, j, k, i)
                            + geo.riemann(l, k, i, j);
                        assert!(bianchi.abs() < 1e-8);
                        assert!((geo.riemann(l, i, j, k) + geo.riemann(l, j, i, k)).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn schouten_trace_is_minus_scal_over_two_n_minus_one() {
    for (seed, (p, q)) in [(1, (0, 3)), (2, (2, 2)), (3, (1, 4))] {
        let g = random_polynomial_metric(p, q, seed);
        let n = g.dim() as f64;
        for x in sample_points(g.chart(), 8, seed, 0.0) {
            let geo = g.geometry_at(&x).unwrap();
            let trace = geo.conn.ginv.component_mul(&geo.schouten).sum();
            assert!((trace + geo.scal / (2.0 * (n - 1.0))).abs() < 1e-8);
        }
    }
}

#[test]
fn round_sphere_is_einstein() {
    let g = round_s3();
    for x in sample_points(g.chart(), 16, 5, 0.0) {
        let geo = g.geometry_at(&x).unwrap();
        let gm = &geo.conn.g;
        assert!((&geo.ricci - gm * 2.0).abs().max() < 1e-10);
        assert!((geo.scal - 6.0).abs() < 1e-10);
        assert!((&geo.schouten + gm * 0.5).abs().max() < 1e-10);
    }
}

#[test]
fn symbolic_bundle_agrees_with_pointwise() {
    for seed in 0..3 {
        let g = random_polynomial_metric(1, 2, 40 + seed);
        let b = CurvatureBundle::new(&g).unwrap();
        let mut exprs = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                exprs.push(b.ricci(i, j).clone());
                exprs.push(b.schouten(i, j).clone());
            }
        }
        exprs.push(b.scal.clone());
        let prog = Compiled::new(&exprs, g.bindings()).unwrap();
        for x in sample_points(g.chart(), 3, seed, 0.0) {
            let geo = g.geometry_at(&x).unwrap();
            let v = prog.eval(&x).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!(rel_err(v[2 * (3 * i + j)], geo.ricci[(i, j)]) < 1e-9);
                    assert!(rel_err(v[2 * (3 * i + j) + 1], geo.schouten[(i, j)]) < 1e-9);
                }
            }
            assert!(rel_err(v[18], geo.scal) < 1e-9);
        }
    }
}

#[test]
fn levi_civita_is_torsion_free_and_metric() {
    let g = random_polynomial_metric(1, 2, 11);
    let b = CurvatureBundle::new(&g).unwrap();
    let c = g.chart();
    let x = VectorField::parse(c, &["x2", "1 + x1*x3", "x1^2"]).unwrap();
    let y = VectorField::parse(c, &["x3", "x1 - x2", "2"]).unwrap();
    let z = VectorField::parse(c, &["1", "x3^2", "x2"]).unwrap();
    let torsion: Vec<Expr> = (0..3)
        .map(|k| {
            covariant_derivative(&b, &x, &y).component(k)
                - covariant_derivative(&b, &y, &x).component(k)
                - x.bracket(&y).component(k).clone()
        })
        .collect();
    let gyz = Expr::sum(
        (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| g.component(i, j) * y.component(i) * z.component(j))
            .collect(),
    );
    let nxy = covariant_derivative(&b, &x, &y);
    let nxz = covariant_derivative(&b, &x, &z);
    let bind = g.bindings();
    for p in sample_points(c, 10, 1, 0.0) {
        for t in &torsion {
            assert!(t.evaluate(&p, bind).unwrap().abs() < 1e-9);
        }
        let gm = g.eval_g(&p).unwrap();
        let lhs = x.apply(&gyz).evaluate(&p, bind).unwrap();
        let a = nxy.eval(&p, bind).unwrap();
        let zz = z.eval(&p, bind).unwrap();
        let yy = y.eval(&p, bind).unwrap();
        let bb = nxz.eval(&p, bind).unwrap();
        let rhs = (a.transpose() * &gm * zz)[(0, 0)] + (yy.transpose() * &gm * bb)[(0, 0)];
        assert!((lhs - rhs).abs() < 1e-9);
    }
}

#[test]
fn flat_constant_fields_have_zero_derivative() {
    let g = ChartMetric::flat(2, 1);
    let b = CurvatureBundle::new(&g).unwrap();
    let x = VectorField::constant(&[1, 2, 3]);
    let y = VectorField::constant(&[0, -1, 5]);
    assert!(covariant_derivative(&b, &x, &y)
        .components()
        .iter()
        .all(Expr::is_zero));
}

#[test]
fn conformal_rescale_identities() {
    let g = random_polynomial_metric(1, 2, 21);
    assert_eq!(
        g.conformal_rescale(&Expr::zero()).unwrap().components(),
        g.components()
    );
    let c = Expr::ratio(3, 10);
    let h = g.conformal_rescale(&c).unwrap();
    let p = [0.1, -0.2, 0.3];
    let (cg, ch) = (g.connection_at(&p).unwrap(), h.connection_at(&p).unwrap());
    assert!((&ch.g - &cg.g * (0.6f64).exp()).abs().max() < 1e-14);
    for k in 0..3 {
        assert!((&ch.gamma[k] - &cg.gamma[k]).abs().max() < 1e-14);
    }
}

#[test]
fn transformation_formula_matches_direct_christoffels() {
    let flat = ChartMetric::flat(1, 2);
    let sigma = Expr::coord(0);
    let cases = [
        (flat.clone(), sigma),
        (
            random_polynomial_metric(1, 2, 5),
            parse_expr("x1*x2 - x3^2/3", &Chart::numbered("x", 3)).unwrap(),
        ),
    ];
    for (g, sigma) in cases {
        let h = g.conformal_rescale(&sigma).unwrap();
        let ds = OneForm::exact(&sigma, 3);
        for p in sample_points(
            &Chart::numbered("x", 3).with_bounds(-0.5, 0.5).unwrap(),
            10,
            2,
            0.0,
        ) {
            let d: Vec<f64> = ds
                .components()
                .iter()
                .map(|e| e.evaluate(&p, g.bindings()).unwrap())
                .collect();
            let formula = rescaled_christoffel(&g.connection_at(&p).unwrap(), &d);
            let direct = h.connection_at(&p).unwrap().gamma;
            for k in 0..3 {
                assert!((&formula[k] - &direct[k]).abs().max() < 1e-9);
            }
        }
    }
}

#[test]
fn lightlike_fields_stay_lightlike_under_rescaling() {
    let g = ChartMetric::flat(1, 2);
    let l = Distribution::new(vec![VectorField::constant(&[1, 1, 0])]);
    let h = g
        .conformal_rescale(&parse_expr("x2*x3", g.chart()).unwrap())
        .unwrap();
    let cfg = CheckConfig::default().with_tol(1e-12);
    assert!(check_lightlike(&g, &l, &cfg).unwrap().passed);
    assert!(check_lightlike(&h, &l, &cfg).unwrap().passed);
}

#[test]
fn flat_closed_loop_transport_is_identity() {
    let g = ChartMetric::flat(2, 2);
    let path = Polyline::new(vec![
        vec![0.0; 4],
        vec![0.3, 0.1, 0.0, 0.0],
        vec![0.3, 0.1, -0.2, 0.4],
        vec![0.0, 0.5, 0.1, 0.2],
        vec![0.0; 4],
    ]);
    let v0 = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let v = parallel_transport_vector_polyline(&g, &path, &v0, DEFAULT_STEP).unwrap();
    assert!((v - v0).amax() < 1e-9);
}

#[test]
fn transport_preserves_norm_on_curved_metrics() {
    let g = round_s3();
    let v0 = DVector::from_vec(vec![0.3, 1.0, -0.7]);
    let start = [1.0, 1.2, 0.4];
    let g0 = g.eval_g(&start).unwrap();
    let n0 = (v0.transpose() * &g0 * &v0)[(0, 0)];
    for end in [[1.3, 1.0, 0.8], [0.7, 1.5, 0.35]] {
        let seg = Segment {
            from: start.to_vec(),
            to: end.to_vec(),
        };
        let v = parallel_transport_vector(&g, &seg, &v0, DEFAULT_STEP).unwrap();
        let g1 = g.eval_g(&end).unwrap();
        let n1 = (v.transpose() * &g1 * &v)[(0, 0)];
        assert!((n0 - n1).abs() < 1e-7);
    }
    // a closed loop on the sphere has nontrivial holonomy
    let loop_ = Polyline::rectangle(&start, 0, 1, 0.3);
    let v = parallel_transport_vector_polyline(&g, &loop_, &v0, DEFAULT_STEP).unwrap();
    assert!((v - v0).norm() > 1e-3);
}

#[test]
fn closed_form_transport_along_curve() {
    // Transport on a unit-speed closure curve
    let g = ChartMetric::flat(0, 2);
    let curve = FnCurve {
        dim: 2,
        position: |t: f64| vec![0.5 * t.cos(), 0.5 * t.sin()],
        velocity: |t: f64| vec![-0.5 * t.sin(), 0.5 * t.cos()],
    };
    let v0 = DVector::from_vec(vec![1.0, 2.0]);
    let v = parallel_transport_vector(&g, &curve, &v0, DEFAULT_STEP).unwrap();
    assert!((v - v0).amax() < 1e-14);
}

fn walker_r1() -> (ChartMetric, Distribution) {
    // g = 2 dx1 dx3 + a(x2,x3) dx2^2, L = span(d/dx1)
    let c = Chart::numbered("x", 3);
    let e = |s: &str| parse_expr(s, &c).unwrap();
    let g = ChartMetric::from_entries(
        c.clone(),
        (1, 2),
        &[(0, 2, e("1")), (1, 1, e("2 + x2*x3^2 + x3"))],
        Bindings::new(),
    )
    .unwrap();
    (g, Distribution::coordinate(3, &[0]))
}

#[test]
fn walker_distribution_is_parallel() {
    let (g, l) = walker_r1();
    let cfg = CheckConfig::default();
    let r = check_distribution_parallel(&g, &l, &cfg).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(check_lightlike(&g, &l, &cfg).unwrap().passed);
    assert!(check_integrable(&g, &l, &cfg).unwrap().passed);
}

#[test]
fn ricci_image_checks() {
    let cfg = CheckConfig::default();
    let s3 = round_s3();
    let l = Distribution::coordinate(3, &[0]);
    assert!(!check_ricci_image(&s3, &l, &cfg).unwrap().passed);
    let flat = ChartMetric::flat(1, 2);
    assert!(check_ricci_image(&flat, &l, &cfg).unwrap().passed);
    // pure-Walker type metric: -dz^2 - 4 dx dy - 4 y^2 dy^2 on (x, y, z)
    let c = Chart::new(&["x1", "y1", "z"]).unwrap();
    let e = |s: &str| parse_expr(s, &c).unwrap();
    let h = ChartMetric::from_entries(
        c.clone(),
        (2, 1),
        &[(0, 1, e("-2")), (1, 1, e("-4*y1^2")), (2, 2, e("-1"))],
        Bindings::new(),
    )
    .unwrap();
    assert!(check_ricci_image(&h, &l, &cfg).unwrap().passed);
    assert!(check_schouten_image(&h, &l, &cfg).unwrap().passed);
    assert!(check_scalar_flat(&h, &cfg).unwrap().passed);
}

#[test]
fn poincare_potentials() {
    let c = Chart::numbered("x", 2);
    let cfg = PoincareConfig::default();
    let theta = OneForm::parse(&c, &["x2", "x1"]).unwrap();
    let base = [0.2, -0.4];
    let pot = poincare_potential(&theta, &c, &base, &[], &Bindings::new(), &cfg).unwrap();
    for p in sample_points(&c, 10, 9, 0.0) {
        let expected = p[0] * p[1] - base[0] * base[1];
        assert!((pot.value(&p).unwrap() - expected).abs() < 1e-12);
        assert_eq!(pot.gradient(&p).unwrap(), vec![p[1], p[0]]);
    }
    let bad = OneForm::parse(&c, &["x2", "0"]).unwrap();
    assert!(matches!(
        poincare_potential(&bad, &c, &base, &[], &Bindings::new(), &cfg),
        Err(Error::NotClosed { .. })
    ));
}

#[test]
fn degenerate_samples_are_reported_as_singular() {
    // g = x1^2 dx1^2 + dx2^2 + dx3^2 degenerates on x1 = 0 only
    let c = Chart::numbered("x", 3).with_bounds(-1.0, 1.0).unwrap();
    let g = ChartMetric::from_entries(
        c.clone(),
        (0, 3),
        &[
            (0, 0, parse_expr("x1^2", &c).unwrap()),
            (1, 1, Expr::one()),
            (2, 2, Expr::one()),
        ],
        Bindings::new(),
    )
    .unwrap();
    let mut cfg = CheckConfig::default();
    cfg.samples = 8;
    let r = check_integrable(&g, &Distribution::coordinate(3, &[1]), &cfg).unwrap();
    assert!(r.passed);
    let singular = g.connection_at(&[0.0, 0.2, 0.3]);
    assert!(matches!(singular, Err(Error::Signature { .. })));
    let _ = DMatrix::<f64>::zeros(1, 1);
}
