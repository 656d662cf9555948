use num::{BigInt, BigRational, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tractorlab::clifford::{
    is_pure_exact, kernel_lightlike_defect, spin_element, spinor_kernel_exact, Chirality,
    CliffordRep, IMat, PairingKind,
};

const ALL: [(usize, usize); 7] = [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3), (4, 4)];

fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn rat(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|x| big(*x)).collect()
}

/// Random nonzero integer spinor of the given chirality.
fn random_spinor(rep: &CliffordRep, c: Chirality, rng: &mut ChaCha8Rng) -> Vec<i64> {
    loop {
        let v: Vec<i64> = (0..rep.spinor_dim())
            .map(|_| rng.gen_range(-3..=3))
            .collect();
        let w = rep.half_project_twice(c, &v);
        if w.iter().any(|x| *x != 0) {
            return w;
        }
    }
}

#[test]
fn anticommutation_is_exact() {
    for (p, q) in ALL {
        let r = CliffordRep::build(p, q).unwrap();
        let n = r.spinor_dim();
        let id = IMat::identity(n, n);
        for i in 0..r.dim() {
            for j in 0..r.dim() {
                let ac = r.gamma(i) * r.gamma(j) + r.gamma(j) * r.gamma(i);
                let expect = if i == j {
                    &id * (-2 * r.eps()[i])
                } else {
                    IMat::zeros(n, n)
                };
                assert_eq!(ac, expect, "({p},{q}) {i} {j}");
            }
            assert!(r.gamma(i).iter().all(|x| x.abs() <= 1));
        }
        assert_eq!(r.eps().iter().filter(|e| **e == -1).count(), p);
    }
}

#[test]
fn every_spinor_is_pure_in_low_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (p, q, c, m) in [
        (2, 2, Chirality::Plus, 2),
        (2, 2, Chirality::Minus, 2),
        (3, 2, Chirality::Full, 2),
        (3, 3, Chirality::Plus, 3),
        (3, 3, Chirality::Minus, 3),
    ] {
        let r = CliffordRep::build(p, q).unwrap();
        for _ in 0..1000 {
            let v = rat(&random_spinor(&r, c, &mut rng));
            let k = spinor_kernel_exact(&r, &v).unwrap();
            assert_eq!(k.len(), m, "({p},{q}) {v:?}");
            assert!(kernel_lightlike_defect(&r, &k).is_zero());
        }
    }
}

/// A null vector of the pairing inside the half (or full) module.
fn null_vector(r: &CliffordRep, c: Chirality, rng: &mut ChaCha8Rng) -> Vec<BigRational> {
    loop {
        let n = rat(&random_spinor(r, c, rng));
        if r.pairing_exact(&n, &n).is_zero() {
            return n;
        }
    }
}

#[test]
fn purity_iff_null_in_high_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (p, q, c) in [
        (4, 3, Chirality::Full),
        (4, 4, Chirality::Plus),
        (4, 4, Chirality::Minus),
    ] {
        let r = CliffordRep::build(p, q).unwrap();
        assert_eq!(r.pairing_kind(), PairingKind::Symmetric);
        let n0 = null_vector(&r, c, &mut rng);
        let (mut pure, mut impure) = (0, 0);
        for _ in 0..1000 {
            let u = rat(&random_spinor(&r, c, &mut rng));
            let quad = r.pairing_exact(&u, &u);
            assert_eq!(
                is_pure_exact(&r, &u).unwrap(),
                quad.is_zero(),
                "({p},{q}) {u:?}"
            );
            if !quad.is_zero() {
                impure += 1;
            }
            // u + t n0 with Q(u + t n0) = 0
            let b = r.pairing_exact(&u, &n0);
            if b.is_zero() {
                continue;
            }
            let t = -quad / (big(2) * b);
            let w: Vec<BigRational> = u.iter().zip(&n0).map(|(a, n)| a + &t * n).collect();
            if w.iter().all(Zero::is_zero) {
                continue;
            }
            assert!(r.pairing_exact(&w, &w).is_zero());
            assert!(is_pure_exact(&r, &w).unwrap(), "({p},{q}) {w:?}");
            pure += 1;
        }
        assert!(pure > 500 && impure > 500, "({p},{q}) {pure} {impure}");
    }
}

#[test]
fn kernel_dimension_is_spin_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (p, q) in [(2, 1), (3, 2), (3, 3), (4, 3)] {
        let r = CliffordRep::build(p, q).unwrap();
        for _ in 0..40 {
            let v = rat(&random_spinor(&r, Chirality::Full, &mut rng));
            let before = spinor_kernel_exact(&r, &v).unwrap().len();
            let mut w = v.clone();
            for _ in 0..3 {
                let i = rng.gen_range(0..r.dim());
                let j = (i + rng.gen_range(1..r.dim())) % r.dim();
                let (num, den) = spin_element(&r, i, j, (1, rng.gen_range(2..5)));
                w = (0..w.len())
                    .map(|a| {
                        let s = (0..w.len())
                            .fold(BigRational::zero(), |acc, b| acc + &w[b] * big(num[(a, b)]));
                        s / big(den)
                    })
                    .collect();
            }
            assert_eq!(spinor_kernel_exact(&r, &w).unwrap().len(), before);
            assert_eq!(r.pairing_exact(&w, &w), r.pairing_exact(&v, &v));
        }
    }
}

#[test]
fn chirality_is_flipped_by_vectors() {
    for (p, q) in [(1, 1), (2, 2), (3, 3), (4, 4)] {
        let r = CliffordRep::build(p, q).unwrap();
        assert!(r.has_chirality());
        for i in 0..r.dim() {
            assert_eq!(r.omega() * r.gamma(i), -(r.gamma(i) * r.omega()));
        }
        let v = r.half_project_twice(Chirality::Plus, &vec![1; r.spinor_dim()]);
        let x = r.mul_exact(&[1; 8][..r.dim()], &v);
        assert_eq!(
            r.half_project_twice(Chirality::Plus, &x),
            vec![0; r.spinor_dim()]
        );
    }
    assert!(CliffordRep::build(2, 1)
        .unwrap()
        .half_projector(Chirality::Plus)
        .is_err());
}

#[test]
fn symplectic_pairings_are_alternating() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (p, q) in ALL {
        let r = CliffordRep::build(p, q).unwrap();
        if r.pairing_kind() == PairingKind::Symplectic {
            let v = rat(&random_spinor(&r, Chirality::Full, &mut rng));
            assert!(r.pairing_exact(&v, &v).is_zero());
        }
    }
}

#[test]
fn json_round_trip() {
    for (p, q) in ALL {
        let r = CliffordRep::build(p, q).unwrap();
        let s = serde_json::to_string(&r.to_json()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let g: Vec<Vec<Vec<i64>>> = serde_json::from_value(v["gammas"].clone()).unwrap();
        for (i, m) in g.iter().enumerate() {
            for (a, row) in m.iter().enumerate() {
                for (b, x) in row.iter().enumerate() {
                    assert_eq!(*x, r.gamma(i)[(a, b)]);
                }
            }
        }
        assert_eq!(v["rep_id"], format!("tensor-recursion-EJF/v1:({p},{q})"));
    }
}

fn sig() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(ALL.to_vec())
}

proptest! {
    #[test]
    fn clifford_square_is_minus_norm(s in sig(), xs in prop::collection::vec(-4i64..5, 8), vs in prop::collection::vec(-4i64..5, 16)) {
        let r = CliffordRep::build(s.0, s.1).unwrap();
        let x = &xs[..r.dim()];
        let v = &vs[..r.spinor_dim()];
        let norm: i64 = x.iter().zip(r.eps()).map(|(a, e)| e * a * a).sum();
        let xxv = r.mul_exact(x, &r.mul_exact(x, v));
        let expect: Vec<i64> = v.iter().map(|a| -norm * a).collect();
        prop_assert_eq!(xxv, expect);
    }

    #[test]
    fn pairing_is_invariant(s in sig(), xs in prop::collection::vec(-4i64..5, 8), v in prop::collection::vec(-4i64..5, 16), w in prop::collection::vec(-4i64..5, 16)) {
        let r = CliffordRep::build(s.0, s.1).unwrap();
        let n = r.spinor_dim();
        let x = &xs[..r.dim()];
        let (v, w) = (&v[..n], &w[..n]);
        // <x.v, w> = +-<v, x.w> with a sign fixed by the pairing
        let lhs = r.pairing_exact(&rat(&r.mul_exact(x, v)), &rat(w));
        let rhs = r.pairing_exact(&rat(v), &rat(&r.mul_exact(x, w)));
        prop_assert!(lhs == rhs.clone() || lhs == -rhs);
        prop_assert_eq!(r.invariance_defect(), 0);
    }

    #[test]
    fn kernels_are_lightlike(s in sig(), v in prop::collection::vec(-3i64..4, 16)) {
        let r = CliffordRep::build(s.0, s.1).unwrap();
        let v = &v[..r.spinor_dim()];
        prop_assume!(v.iter().any(|a| *a != 0));
        let k = spinor_kernel_exact(&r, &rat(v)).unwrap();
        prop_assert!(k.len() <= r.m());
        prop_assert!(kernel_lightlike_defect(&r, &k).is_zero());
    }
}
