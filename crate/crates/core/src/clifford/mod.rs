//! Real Clifford algebras and spinor modules in split signatures up to (4,4).
//!
//! Convention `x . x = -|x|^2`: with `eps_i = -1` on the first `p` (timelike)
//! directions, `gamma_i^2 = -eps_i`, so timelike generators square to `+1`
//! and spacelike ones to `-1`. All matrices have entries in `{-1, 0, 1}`.
//!
//! Seeds for `(1,1)`: `E = [[0,1],[1,0]]` (timelike), `J = [[0,-1],[1,0]]`
//! (spacelike), `F = diag(1,-1)`. From a representation of `(m,m)` with
//! generators `G_a` and an integer `W` anticommuting with all of them with
//! `W^2 = 1`, the `(m+1,m+1)` representation is `G_a (x) 1, W (x) E, W (x) J`
//! with `W' = W (x) F`; `(m+1,m)` appends `W` itself as a timelike generator.

use nalgebra::{DMatrix, DVector};
use num::{BigInt, BigRational, Signed, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg;

pub type IMat = DMatrix<i64>;

/// Identifier recorded in reports for reproducibility.
pub const REP_FAMILY: &str = "tensor-recursion-EJF/v1";

const SUPPORTED: [(usize, usize); 7] = [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3), (4, 3), (4, 4)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairingKind {
    Symmetric,
    Symplectic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chirality {
    Full,
    Plus,
    Minus,
}

/// Gamma matrices, pairing and (when `p = q`) chirality of `Delta_{p,q}`.
#[derive(Clone, Debug)]
pub struct CliffordRep {
    p: usize,
    q: usize,
    gammas: Vec<IMat>,
    eps: Vec<i64>,
    /// Anticommutes with every generator and squares to one; defined in all
    /// supported signatures, but only central in the even subalgebra with
    /// half-spinor meaning when `p = q`.
    omega: IMat,
    pairing: IMat,
    pairing_kind: PairingKind,
    gammas_f: Vec<DMatrix<f64>>,
    /// Built by `tractor_extension` rather than the recursion.
    extension: bool,
}

fn kron(a: &IMat, b: &IMat) -> IMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn seed_e() -> IMat {
    IMat::from_row_slice(2, 2, &[0, 1, 1, 0])
}

fn seed_j() -> IMat {
    IMat::from_row_slice(2, 2, &[0, -1, 1, 0])
}

fn seed_f() -> IMat {
    IMat::from_row_slice(2, 2, &[1, 0, 0, -1])
}

fn to_f64(m: &IMat) -> DMatrix<f64> {
    m.map(|x| x as f64)
}

/// `(generators with eps, W)` for `(m, m)`.
fn split_rep(m: usize) -> (Vec<(IMat, i64)>, IMat) {
    let mut gens = vec![(seed_e(), -1), (seed_j(), 1)];
    let mut w = seed_f();
    for _ in 1..m {
        let id2 = IMat::identity(2, 2);
        let mut next: Vec<(IMat, i64)> = gens.iter().map(|(g, e)| (kron(g, &id2), *e)).collect();
        next.push((kron(&w, &seed_e()), -1));
        next.push((kron(&w, &seed_j()), 1));
        w = kron(&w, &seed_f());
        gens = next;
    }
    (gens, w)
}

fn is_invariant(c: &IMat, gammas: &[IMat]) -> bool {
    for i in 0..gammas.len() {
        for j in (i + 1)..gammas.len() {
            let x = &gammas[i] * &gammas[j];
            if x.transpose() * c + c * &x != IMat::zeros(c.nrows(), c.ncols()) {
                return false;
            }
        }
    }
    true
}

fn rational_matrix_rank(m: &IMat) -> usize {
    let rows: Vec<Vec<BigRational>> = m
        .row_iter()
        .map(|r| {
            r.iter()
                .map(|&x| BigRational::from_integer(x.into()))
                .collect()
        })
        .collect();
    linalg::rational_rank(&rows)
}

impl CliffordRep {
    pub fn build(p: usize, q: usize) -> Result<CliffordRep> {
        if !SUPPORTED.contains(&(p, q)) {
            return Err(Error::UnsupportedSignature(p, q));
        }
        let (mut gens, w) = split_rep(q);
        if p == q + 1 {
            gens.push((w.clone(), -1));
        }
        // timelike generators first, stable within each class
        gens.sort_by_key(|(_, e)| *e);
        let (gammas, eps): (Vec<IMat>, Vec<i64>) = gens.into_iter().unzip();
        let (pairing, pairing_kind) = find_pairing(&gammas, &w, p == q)?;
        let gammas_f = gammas.iter().map(to_f64).collect();
        Ok(CliffordRep {
            p,
            q,
            gammas,
            eps,
            omega: w,
            pairing,
            pairing_kind,
            gammas_f,
            extension: false,
        })
    }

    /// The `(p+1, q+1)` module `Delta_{p,q} (x) R^2` with generators
    /// `T = 1 (x) E` (timelike), `S = 1 (x) J` (spacelike) and
    /// `gamma_a (x) F`, in that order. Used for spin tractors.
    pub fn tractor_extension(&self) -> Result<CliffordRep> {
        let n = self.spinor_dim();
        let id = IMat::identity(n, n);
        let mut gammas = vec![kron(&id, &seed_e()), kron(&id, &seed_j())];
        gammas.extend(self.gammas.iter().map(|g| kron(g, &seed_f())));
        let mut eps = vec![-1, 1];
        eps.extend(self.eps.iter().cloned());
        let omega = kron(&self.omega, &seed_f());
        let (pairing, pairing_kind) = find_pairing(&gammas, &omega, self.p == self.q)?;
        let gammas_f = gammas.iter().map(to_f64).collect();
        Ok(CliffordRep {
            p: self.p + 1,
            q: self.q + 1,
            gammas,
            eps,
            omega,
            pairing,
            pairing_kind,
            gammas_f,
            extension: true,
        })
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// `N = dim Delta_{p,q}`.
    pub fn spinor_dim(&self) -> usize {
        self.gammas[0].nrows()
    }

    /// Pure spinors have kernels of dimension `m = min(p, q)`.
    pub fn m(&self) -> usize {
        self.p.min(self.q)
    }

    pub fn gammas(&self) -> &[IMat] {
        &self.gammas
    }

    pub fn gamma(&self, i: usize) -> &IMat {
        &self.gammas[i]
    }

    pub fn gamma_f64(&self, i: usize) -> &DMatrix<f64> {
        &self.gammas_f[i]
    }

    pub fn gammas_f64(&self) -> &[DMatrix<f64>] {
        &self.gammas_f
    }

    pub fn eps(&self) -> &[i64] {
        &self.eps
    }

    pub fn pairing_matrix(&self) -> &IMat {
        &self.pairing
    }

    pub fn pairing_kind(&self) -> PairingKind {
        self.pairing_kind
    }

    pub fn has_chirality(&self) -> bool {
        self.p == self.q
    }

    pub fn omega(&self) -> &IMat {
        &self.omega
    }

    pub fn rep_id(&self) -> String {
        if self.extension {
            format!("{REP_FAMILY}:ext({},{})", self.p - 1, self.q - 1)
        } else {
            format!("{REP_FAMILY}:({},{})", self.p, self.q)
        }
    }

    /// `(1 + W)/2` or `(1 - W)/2`; the identity for `Full`.
    pub fn half_projector(&self, c: Chirality) -> Result<DMatrix<f64>> {
        let n = self.spinor_dim();
        let id = DMatrix::<f64>::identity(n, n);
        let w = to_f64(&self.omega);
        match c {
            Chirality::Full => Ok(id),
            _ if !self.has_chirality() => Err(Error::Inconsistent(format!(
                "no half-spinors in signature ({}, {})",
                self.p, self.q
            ))),
            Chirality::Plus => Ok((id + w) * 0.5),
            Chirality::Minus => Ok((id - w) * 0.5),
        }
    }

    /// Exact projection of an integer vector, scaled by 2 to stay integral.
    pub fn half_project_twice(&self, c: Chirality, v: &[i64]) -> Vec<i64> {
        let x = DVector::from_column_slice(v);
        let wx = &self.omega * &x;
        match c {
            Chirality::Full => v.iter().map(|a| 2 * a).collect(),
            Chirality::Plus => (&x * 2 - (&x - &wx)).iter().cloned().collect(),
            Chirality::Minus => (&x - &wx).iter().cloned().collect(),
        }
    }

    /// Clifford product `x . v = sum x_i gamma_i v`.
    pub fn mul(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (xi, g) in x.iter().zip(&self.gammas_f) {
            if *xi != 0.0 {
                out += g * v * *xi;
            }
        }
        out
    }

    /// Exact Clifford product on integer data.
    pub fn mul_exact(&self, x: &[i64], v: &[i64]) -> Vec<i64> {
        let vv = DVector::from_column_slice(v);
        let mut out = DVector::<i64>::zeros(v.len());
        for (xi, g) in x.iter().zip(&self.gammas) {
            out += g * &vv * *xi;
        }
        out.iter().cloned().collect()
    }

    /// The `N x n` matrix whose columns are `gamma_i v`.
    pub fn action_matrix(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_columns(&self.gammas_f.iter().map(|g| g * v).collect::<Vec<_>>())
    }

    /// `v^T C w`.
    pub fn pairing(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (v.transpose() * to_f64(&self.pairing) * w)[(0, 0)]
    }

    pub fn pairing_exact(&self, v: &[BigRational], w: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (j, wj) in w.iter().enumerate() {
                let c = self.pairing[(i, j)];
                if c != 0 {
                    acc += vi * wj * BigRational::from_integer(c.into());
                }
            }
        }
        acc
    }

    /// `max |(g_i g_j)^T C + C g_i g_j|` over `i != j`; zero by construction.
    pub fn invariance_defect(&self) -> i64 {
        let mut worst = 0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if i != j {
                    let x = &self.gammas[i] * &self.gammas[j];
                    let d = x.transpose() * &self.pairing + &self.pairing * &x;
                    worst = worst.max(d.abs().max());
                }
            }
        }
        worst
    }

    /// Largest `|g_i g_j + g_j g_i + 2 eps_i delta_ij|` entry; zero by construction.
    pub fn relation_defect(&self) -> i64 {
        let n = self.spinor_dim();
        let id = IMat::identity(n, n);
        let mut worst = 0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let mut a = &self.gammas[i] * &self.gammas[j] + &self.gammas[j] * &self.gammas[i];
                if i == j {
                    a += &id * (2 * self.eps[i]);
                }
                worst = worst.max(a.abs().max());
            }
        }
        worst
    }

    /// Gamma matrices as JSON integer arrays (row-major).
    pub fn to_json(&self) -> Value {
        let rows = |m: &IMat| -> Vec<Vec<i64>> {
            m.row_iter().map(|r| r.iter().cloned().collect()).collect()
        };
        json!({
            "rep_id": self.rep_id(),
            "signature": [self.p, self.q],
            "spinor_dim": self.spinor_dim(),
            "eps": self.eps,
            "gammas": self.gammas.iter().map(rows).collect::<Vec<_>>(),
            "pairing": rows(&self.pairing),
            "pairing_kind": self.pairing_kind,
            "chirality": if self.has_chirality() { Value::from(rows(&self.omega)) } else { Value::Null },
        })
    }
}

/// Search products of distinct generators (and their products with `W`) for
/// a nondegenerate invariant form, preferring symmetric ones and, in even
/// signature, forms that stay nondegenerate on each half-spinor module.
fn find_pairing(gammas: &[IMat], w: &IMat, chiral: bool) -> Result<(IMat, PairingKind)> {
    let n = gammas.len();
    let size = gammas[0].nrows();
    let mut candidates: Vec<(u32, usize, IMat, PairingKind)> = Vec::new();
    for mask in 0u32..(1 << n) {
        let mut c = IMat::identity(size, size);
        for (i, g) in gammas.iter().enumerate() {
            if mask & (1 << i) != 0 {
                c *= g;
            }
        }
        for with_w in [false, true] {
            let c = if with_w { &c * w } else { c.clone() };
            if !is_invariant(&c, gammas) {
                continue;
            }
            let kind = if c.transpose() == c {
                PairingKind::Symmetric
            } else if c.transpose() == -&c {
                PairingKind::Symplectic
            } else {
                continue;
            };
            let mut score = if kind == PairingKind::Symmetric { 0 } else { 1 };
            if chiral {
                let plus = (IMat::identity(size, size) + w).transpose()
                    * &c
                    * (IMat::identity(size, size) + w);
                if rational_matrix_rank(&plus) != size / 2 {
                    score += 2;
                }
            }
            candidates.push((mask, score, c, kind));
        }
    }
    candidates.sort_by_key(|(mask, score, _, _)| (*score, mask.count_ones(), *mask));
    candidates
        .into_iter()
        .next()
        .map(|(_, _, c, k)| (c, k))
        .ok_or_else(|| {
            Error::Inconsistent("no invariant spinor pairing among gamma products".into())
        })
}

fn big(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Exact kernel `{x : x . v = 0}` of a rational spinor.
pub fn spinor_kernel_exact(rep: &CliffordRep, v: &[BigRational]) -> Result<Vec<Vec<BigRational>>> {
    if v.iter().all(Zero::is_zero) {
        return Err(Error::ZeroSpinor);
    }
    let n = rep.dim();
    let size = rep.spinor_dim();
    // rows of the N x n matrix with columns gamma_i v
    let rows: Vec<Vec<BigRational>> = (0..size)
        .map(|r| {
            (0..n)
                .map(|i| {
                    let mut acc = BigRational::zero();
                    for (c, vc) in v.iter().enumerate() {
                        let g = rep.gammas[i][(r, c)];
                        if g != 0 && !vc.is_zero() {
                            acc += vc * big(g);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(linalg::rational_nullspace(&rows, n))
}

/// Floating kernel basis (columns) with singular-value cutoff `1e-10`.
pub fn spinor_kernel(rep: &CliffordRep, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    if v.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroSpinor);
    }
    Ok(linalg::nullspace(&rep.action_matrix(v), 1e-10))
}

/// `sum eps_i x_i y_i`, the flat metric of signature `(p, q)`.
pub fn flat_inner_exact(rep: &CliffordRep, x: &[BigRational], y: &[BigRational]) -> BigRational {
    x.iter()
        .zip(y)
        .zip(rep.eps())
        .fold(BigRational::zero(), |acc, ((a, b), e)| {
            acc + a * b * big(*e)
        })
}

/// Largest `|<x, y>|` over pairs of kernel vectors (exact).
pub fn kernel_lightlike_defect(rep: &CliffordRep, kernel: &[Vec<BigRational>]) -> BigRational {
    let mut worst = BigRational::zero();
    for a in kernel {
        for b in kernel {
            let v = flat_inner_exact(rep, a, b).abs();
            if v > worst {
                worst = v;
            }
        }
    }
    worst
}

pub fn is_pure_exact(rep: &CliffordRep, v: &[BigRational]) -> Result<bool> {
    Ok(spinor_kernel_exact(rep, v)?.len() == rep.m())
}

pub fn is_pure(rep: &CliffordRep, v: &DVector<f64>) -> Result<bool> {
    Ok(spinor_kernel(rep, v)?.ncols() == rep.m())
}

/// A spinor value with its chirality tag.
#[derive(Clone, Debug, PartialEq)]
pub struct Spinor {
    pub components: DVector<f64>,
    pub chirality: Chirality,
}

impl Spinor {
    /// Validates that tagged half-spinors lie in the projector image.
    pub fn new(
        rep: &CliffordRep,
        components: DVector<f64>,
        chirality: Chirality,
    ) -> Result<Spinor> {
        if components.len() != rep.spinor_dim() {
            return Err(Error::Dimension {
                expected: rep.spinor_dim(),
                got: components.len(),
            });
        }
        let p = rep.half_projector(chirality)?;
        let r = (&p * &components - &components).norm();
        if r > 1e-12 * components.norm().max(1.0) {
            return Err(Error::Inconsistent(format!(
                "spinor is not of chirality {chirality:?}"
            )));
        }
        Ok(Spinor {
            components,
            chirality,
        })
    }
}

/// Exact rational `Spin` element `cos + sin g_i g_j` (or its hyperbolic
/// analogue) for the rational parameter `t`, as a pair (numerator matrix,
/// denominator): rotations for `(g_i g_j)^2 = -1`, boosts for `+1`.
pub fn spin_element(rep: &CliffordRep, i: usize, j: usize, t: (i64, i64)) -> (IMat, i64) {
    let (a, b) = t;
    let x = &rep.gammas[i] * &rep.gammas[j];
    let n = rep.spinor_dim();
    let id = IMat::identity(n, n);
    let square = (&x * &x)[(0, 0)];
    if square == -1 {
        // cos = (b^2 - a^2)/(b^2 + a^2), sin = 2ab/(b^2 + a^2)
        (id * (b * b - a * a) + x * (2 * a * b), b * b + a * a)
    } else {
        // cosh = (b^2 + a^2)/(b^2 - a^2), sinh = 2ab/(b^2 - a^2), |a| < |b|
        (id * (b * b + a * a) + x * (2 * a * b), b * b - a * a)
    }
}
