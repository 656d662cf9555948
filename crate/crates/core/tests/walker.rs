use tractorlab::geometry::{check_integrable, CheckConfig};
use tractorlab::spintractor::{
    check_ricci_annihilates, check_twistor, d_invariant, kernel_distribution, twistor_to_tractor,
};
use tractorlab::walker::{
    build_pure_walker, build_walker, validate_ricci_isotropic, Block, PureWalkerSpec, WalkerSpec,
};
use tractorlab::Error;

fn pure(m: usize, odd: bool, entries: &[(usize, usize, &str)]) -> PureWalkerSpec {
    let mut s = PureWalkerSpec::zero(m, odd).unwrap();
    for (i, j, e) in entries {
        s.set_str(*i, *j, e).unwrap();
    }
    s
}

fn examples() -> Vec<(&'static str, PureWalkerSpec, usize)> {
    vec![
        ("m1", pure(1, true, &[(0, 0, "y1^2 + z*y1")]), 2),
        (
            "m2 odd",
            pure(
                2,
                true,
                &[(0, 0, "x2*y1 + z^2"), (0, 1, "-x1*y1"), (1, 1, "x2*y1")],
            ),
            3,
        ),
        (
            "m2 split",
            pure(
                2,
                false,
                &[(0, 0, "y2^2"), (0, 1, "y1*y2"), (1, 1, "x1*y1")],
            ),
            3,
        ),
        (
            "m3 split",
            pure(
                3,
                false,
                &[
                    (0, 0, "y2*y3"),
                    (1, 1, "x1*y3 + y1^2"),
                    (2, 2, "x2*y1"),
                    (0, 1, "y3^2"),
                    (1, 2, "y1*y2"),
                ],
            ),
            4,
        ),
    ]
}

#[test]
fn g11_equal_y1_is_certified() {
    let w = build_pure_walker(&pure(1, true, &[(0, 0, "y1")]), &CheckConfig::default()).unwrap();
    assert!(w.certificate.max_residual < 1e-7);
    assert_eq!(w.l.rank(), 1);
}

#[test]
fn pure_walker_examples_are_ricci_isotropic() {
    let cfg = CheckConfig::default();
    for (name, spec, _) in examples() {
        let w = build_pure_walker(&spec, &cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
        let r = validate_ricci_isotropic(&w.metric, &w.l, &cfg).unwrap();
        assert!(r.passed, "{name}: {}", r.max_residual);
        let ra =
            check_ricci_annihilates(&w.metric, &w.frame, &w.spinor, &cfg.with_tol(1e-6)).unwrap();
        assert!(ra.passed, "{name}: {}", ra.max_residual);
    }
}

#[test]
fn theorem_two_pipeline() {
    let cfg = CheckConfig {
        samples: 16,
        ..CheckConfig::default()
    };
    for (name, spec, rank) in examples() {
        let w = build_pure_walker(&spec, &cfg).unwrap();
        let tw = check_twistor(&w.metric, &w.frame, &w.spinor, &cfg.with_tol(1e-6)).unwrap();
        assert!(tw.passed, "{name}: twistor {}", tw.max_residual);
        let d = d_invariant(&w.metric, &w.frame, &w.spinor, &cfg).unwrap();
        assert!(d.min.abs() < 1e-7 && d.max.abs() < 1e-7, "{name}");
        let psi = twistor_to_tractor(&w.metric, &w.frame, &w.spinor, &cfg.with_tol(1e-6)).unwrap();
        let (samples, rep) =
            kernel_distribution(&w.metric, &w.frame, &psi, &cfg.with_tol(1e-6)).unwrap();
        assert!(rep.passed, "{name}: kernel {}", rep.max_residual);
        assert!(
            samples.iter().all(|s| s.rank == rank),
            "{name}: {:?}",
            rep.extra["ranks"]
        );
        assert!(samples.iter().all(|s| s.plus_residual < 1e-8), "{name}");
        for s in &samples {
            let d = s.tangent_distance(&w.metric, &w.frame, &w.spinor).unwrap();
            assert!(d < 1e-8, "{name}: {d}");
        }
        assert!(check_integrable(&w.metric, &w.l, &cfg).unwrap().passed);
    }
}

#[test]
fn divergence_violation_is_rejected() {
    let s = pure(2, true, &[(0, 0, "x2*y1"), (0, 1, "x1*y1")]);
    assert!(matches!(
        build_pure_walker(&s, &CheckConfig::default()),
        Err(Error::Constraint(_))
    ));
}

#[test]
fn ricci_isotropic_walker_blocks() {
    let cfg = CheckConfig::default();
    let mut s = WalkerSpec::zero(6, 2).unwrap();
    s.set_str(Block::A, 0, 0, "-1").unwrap();
    s.set_str(Block::A, 1, 1, "1").unwrap();
    s.set_str(Block::B, 0, 0, "z1^2 + y2").unwrap();
    s.set_str(Block::B, 0, 1, "y1*z2").unwrap();
    s.set_str(Block::B, 1, 1, "z1*z2 + y2^2").unwrap();
    let (g, l) = build_walker(&s).unwrap();
    assert_eq!(g.signature(), (3, 3));
    let r = validate_ricci_isotropic(&g, &l, &cfg).unwrap();
    assert!(r.passed, "{:?}", r);
}
