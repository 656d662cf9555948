use proptest::prelude::*;
use tractorlab::expr::{parse_expr, Bindings, Expr};
use tractorlab::Chart;

fn chart() -> Chart {
    Chart::new(&["x1", "x2", "x3"]).unwrap()
}

// Smooth trees on the whole box: denominators are kept positive.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(Expr::coord),
        (-4i64..5).prop_map(Expr::constant),
        (-3i64..4, 1i64..4).prop_map(|(a, b)| Expr::ratio(a, b)),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::product),
            (inner.clone(), 0i32..4).prop_map(|(b, n)| b.pow(n)),
            inner.clone().prop_map(|e| -e),
            inner.clone().prop_map(|e| (Expr::ratio(1, 4) * e).exp()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (Expr::constant(2) + b.pow(2))),
        ]
    })
}

fn arb_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 3)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplify_is_idempotent(e in arb_expr()) {
        let once = e.simplify();
        prop_assert_eq!(once.simplify(), once);
    }

    #[test]
    fn simplify_preserves_value(e in arb_expr(), p in arb_point()) {
        let b = Bindings::new();
        let v = e.evaluate(&p, &b).unwrap();
        let s = e.simplify().evaluate(&p, &b).unwrap();
        prop_assert!(close(v, s, 1e-9), "{} vs {}", v, s);
    }

    #[test]
    fn differentiation_is_linear(
        e1 in arb_expr(), e2 in arb_expr(), a in -3i64..4, c in -3i64..4,
        k in 0usize..3, p in arb_point(),
    ) {
        let b = Bindings::new();
        let combo = Expr::constant(a) * &e1 + Expr::constant(c) * &e2;
        let lhs = combo.differentiate(k).evaluate(&p, &b).unwrap();
        let rhs = a as f64 * e1.differentiate(k).evaluate(&p, &b).unwrap()
            + c as f64 * e2.differentiate(k).evaluate(&p, &b).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn mixed_partials_commute(e in arb_expr(), i in 0usize..3, j in 0usize..3, p in arb_point()) {
        let b = Bindings::new();
        let ij = e.differentiate(i).differentiate(j).evaluate(&p, &b).unwrap();
        let ji = e.differentiate(j).differentiate(i).evaluate(&p, &b).unwrap();
        prop_assert!(close(ij, ji, 1e-10), "{} vs {}", ij, ji);
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr(), p in arb_point()) {
        let c = chart();
        for candidate in [e.clone(), e.simplify()] {
            let text = candidate.display(&c).to_string();
            let back = parse_expr(&text, &c).unwrap();
            let b = Bindings::new();
            let v0 = candidate.evaluate(&p, &b).unwrap();
            let v1 = back.evaluate(&p, &b).unwrap();
            prop_assert!(close(v0, v1, 1e-12), "{}: {} vs {}", text, v0, v1);
        }
    }

    #[test]
    fn derivative_matches_central_difference(e in arb_expr(), k in 0usize..3, p in arb_point()) {
        let b = Bindings::new();
        let exact = e.differentiate(k).evaluate(&p, &b).unwrap();
        let h = 1e-5;
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[k] += h;
        minus[k] -= h;
        let fd = (e.evaluate(&plus, &b).unwrap() - e.evaluate(&minus, &b).unwrap()) / (2.0 * h);
        let scale = e.evaluate(&p, &b).unwrap().abs().max(exact.abs()).max(1.0);
        prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{} vs {}", exact, fd);
    }
}

#[test]
fn opaque_functions_round_trip_with_callbacks() {
    let c = Chart::new(&["x1", "y1", "z1"]).unwrap();
    let e = parse_expr("exp(2*s(y1,z1)) * x1 + sin(y1)^2", &c).unwrap();
    let mut b = Bindings::with_builtins();
    b.insert(
        "s",
        std::sync::Arc::new(|a: &[f64], d: &[usize]| match d {
            [] => a[0] * a[1],
            [0] => a[1],
            [1] => a[0],
            [0, 1] => 1.0,
            _ => 0.0,
        }),
    );
    let d = e.differentiate(1).differentiate(2);
    let back = parse_expr(&d.display(&c).to_string(), &c).unwrap();
    let p = [0.3, -0.4, 0.7];
    let v0 = d.evaluate(&p, &b).unwrap();
    let v1 = back.evaluate(&p, &b).unwrap();
    assert!((v0 - v1).abs() < 1e-14);
    // d/dy d/dz [x exp(2 y z)] = x exp(2yz) (2 + 4 y z)
    let (x, y, z) = (p[0], p[1], p[2]);
    let expected = x * (2.0 * y * z).exp() * (2.0 + 4.0 * y * z);
    assert!((v0 - expected).abs() < 1e-12);
}
