//! Spin tractors in a metric gauge.
//!
//! `Delta_{p+1,q+1}` is realised as `Delta_{p,q} (x) R^2` (see
//! [`CliffordRep::tractor_extension`]) with null generators
//! `e_- = S - T` and `e_+ = (S + T)/2`, `<e_-, e_+> = 1`. A spin tractor
//! `(phi, phi')` in the gauge `g` is the vector `phi (x) f_2 - 2 phi' (x) f_1`,
//! so `phi` spans `Ann(e_+)` and the tractor `(alpha, Y, beta)` acts by
//! `alpha e_- + Y + beta e_+`:
//! `(alpha, Y, beta) . (phi, phi') = (-Y.phi - 2 beta phi', Y.phi' + alpha phi)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{check_twistor, covariant_derivative_fd, dirac, Frame, SpinLocal, SpinorField};
use crate::chart::Point;
use crate::clifford::CliffordRep;
use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, CheckConfig, VectorField};
use crate::linalg::{self, RANK_TOL};
use crate::report::{par_outcomes, sample_points, Outcome, Report};
use crate::tractor::{connection_matrices, gram_matrix, invariance_residual};

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (br, bc) = b.shape();
    DMatrix::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

/// The `(p+1, q+1)` Clifford module with its null pair and projections.
#[derive(Clone, Debug)]
pub struct SpinTractorAlgebra {
    rep: Arc<CliffordRep>,
    ext: CliffordRep,
    e_minus: DMatrix<f64>,
    e_plus: DMatrix<f64>,
    f: DMatrix<f64>,
    ann_plus: DMatrix<f64>,
    ann_minus: DMatrix<f64>,
}

impl SpinTractorAlgebra {
    pub fn new(rep: Arc<CliffordRep>) -> Result<SpinTractorAlgebra> {
        let ext = rep.tractor_extension()?;
        let t = ext.gamma_f64(0).clone();
        let s = ext.gamma_f64(1).clone();
        let e_minus = &s - &t;
        let e_plus = (&s + &t) * 0.5;
        let ann_plus = linalg::nullspace(&e_plus, RANK_TOL);
        let ann_minus = linalg::nullspace(&e_minus, RANK_TOL);
        Ok(SpinTractorAlgebra {
            rep,
            ext,
            e_minus,
            e_plus,
            f: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            ann_plus,
            ann_minus,
        })
    }

    pub fn rep(&self) -> &Arc<CliffordRep> {
        &self.rep
    }

    pub fn extension(&self) -> &CliffordRep {
        &self.ext
    }

    pub fn e_minus(&self) -> &DMatrix<f64> {
        &self.e_minus
    }

    pub fn e_plus(&self) -> &DMatrix<f64> {
        &self.e_plus
    }

    /// Orthonormal bases of `Ann(e_+)` and `Ann(e_-)`.
    pub fn annihilators(&self) -> (&DMatrix<f64>, &DMatrix<f64>) {
        (&self.ann_plus, &self.ann_minus)
    }

    /// `proj_+ = -1/2 e_+ e_-`, onto `Ann(e_+)` along `Ann(e_-)`.
    pub fn proj_plus(&self) -> DMatrix<f64> {
        &self.e_plus * &self.e_minus * -0.5
    }

    /// `proj_- = -1/2 e_- e_+`.
    pub fn proj_minus(&self) -> DMatrix<f64> {
        &self.e_minus * &self.e_plus * -0.5
    }

    pub fn embed(&self, phi: &DVector<f64>, phi_prime: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(2 * phi.len(), |k, _| {
            if k % 2 == 0 {
                -2.0 * phi_prime[k / 2]
            } else {
                phi[k / 2]
            }
        })
    }

    pub fn split(&self, psi: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = psi.len() / 2;
        (
            DVector::from_fn(n, |a, _| psi[2 * a + 1]),
            DVector::from_fn(n, |a, _| -0.5 * psi[2 * a]),
        )
    }

    /// Clifford multiplication by a tangent vector, `Y (x) F`, given the
    /// small-module matrix of `Y`.
    pub fn lift(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        kron(y, &self.f)
    }

    /// Columns `t_k . psi` for the splitting basis `(alpha, Y^1..Y^n, beta)`.
    pub fn action_matrix(&self, local: &SpinLocal, psi: &DVector<f64>) -> DMatrix<f64> {
        let mut cols = vec![&self.e_minus * psi];
        cols.extend(local.coord_gammas.iter().map(|g| self.lift(g) * psi));
        cols.push(&self.e_plus * psi);
        DMatrix::from_columns(&cols)
    }
}

/// A spin tractor at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinTractor {
    pub phi: DVector<f64>,
    pub phi_prime: DVector<f64>,
    pub gauge: u64,
}

#[derive(Clone, Debug)]
enum Prime {
    Field(SpinorField),
    /// `-(1/n) D phi`
    Dirac,
}

/// `(phi, phi')` over the chart in the gauge of one metric.
#[derive(Clone, Debug)]
pub struct SpinTractorField {
    phi: SpinorField,
    prime: Prime,
    gauge: u64,
}

impl SpinTractorField {
    pub fn new(
        g: &ChartMetric,
        phi: SpinorField,
        phi_prime: SpinorField,
    ) -> Result<SpinTractorField> {
        if phi.rep().signature() != phi_prime.rep().signature() {
            return Err(Error::Inconsistent(
                "spinor components use different representations".into(),
            ));
        }
        Ok(SpinTractorField {
            phi,
            prime: Prime::Field(phi_prime),
            gauge: g.gauge_id(),
        })
    }

    /// `(phi, -(1/n) D phi)`, without checking the twistor equation.
    pub fn from_twistor_unchecked(g: &ChartMetric, phi: SpinorField) -> SpinTractorField {
        SpinTractorField {
            phi,
            prime: Prime::Dirac,
            gauge: g.gauge_id(),
        }
    }

    pub fn phi(&self) -> &SpinorField {
        &self.phi
    }

    pub fn gauge(&self) -> u64 {
        self.gauge
    }

    fn check_gauge(&self, g: &ChartMetric) -> Result<()> {
        if g.gauge_id() != self.gauge {
            return Err(Error::GaugeMismatch);
        }
        Ok(())
    }

    fn prime_at(&self, g: &ChartMetric, frame: &Frame, p: &[f64]) -> Result<DVector<f64>> {
        match &self.prime {
            Prime::Field(f) => f.eval(p),
            Prime::Dirac => Ok(dirac(g, frame, &self.phi, p)? * (-1.0 / g.dim() as f64)),
        }
    }

    pub fn eval(&self, g: &ChartMetric, frame: &Frame, p: &[f64]) -> Result<SpinTractor> {
        self.check_gauge(g)?;
        Ok(SpinTractor {
            phi: self.phi.eval(p)?,
            phi_prime: self.prime_at(g, frame, p)?,
            gauge: self.gauge,
        })
    }

    /// `proj_+` of the field, i.e. `phi`.
    pub fn proj_plus(&self) -> &SpinorField {
        &self.phi
    }
}

/// `(phi, -(1/n) D phi)` after checking the twistor equation at `cfg`.
pub fn twistor_to_tractor(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    cfg: &CheckConfig,
) -> Result<SpinTractorField> {
    let r = check_twistor(g, frame, phi, cfg)?;
    if !r.passed {
        return Err(Error::NotTwistor(r.max_residual));
    }
    Ok(SpinTractorField::from_twistor_unchecked(g, phi.clone()))
}

/// `nabla^nc_{d_m} psi` for every coordinate direction `m`:
/// `(nabla phi - d_m . phi', 1/2 K(d_m) . phi + nabla phi')`.
fn connection_columns(
    g: &ChartMetric,
    frame: &Frame,
    psi: &SpinTractorField,
    p: &[f64],
) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    psi.check_gauge(g)?;
    let rep = psi.phi.rep().clone();
    let geo = g.geometry_at(p)?;
    let local = SpinLocal::with_connection(geo.conn.clone(), frame, &rep, p)?;
    let (phi, dphi) = psi.phi.jet(p)?;
    let nab = local.nabla(&phi, &dphi);
    let n = g.dim();
    let mut out = Vec::with_capacity(n);
    let prime = psi.prime_at(g, frame, p)?;
    for m in 0..n {
        let nab_prime = match &psi.prime {
            Prime::Field(f) => {
                let (v, dv) = f.jet(p)?;
                dv[m].clone() + &local.spin[m] * v
            }
            Prime::Dirac => covariant_derivative_fd(&local, |q| psi.prime_at(g, frame, q), p, m)?,
        };
        let k = local.clifford(&geo.schouten_sharp(&unit(n, m)));
        let first = &nab[m] - &local.coord_gammas[m] * &prime;
        let second = k * &phi * 0.5 + nab_prime;
        out.push((first, second));
    }
    Ok(out)
}

/// `nabla^nc_X psi` at `p`.
pub fn spin_tractor_connection_apply(
    g: &ChartMetric,
    frame: &Frame,
    psi: &SpinTractorField,
    x: &VectorField,
    p: &[f64],
) -> Result<SpinTractor> {
    let cols = connection_columns(g, frame, psi, p)?;
    let xv = x.eval(p, g.bindings())?;
    let size = cols[0].0.len();
    let mut a = DVector::zeros(size);
    let mut b = DVector::zeros(size);
    for ((c1, c2), xm) in cols.iter().zip(xv.iter()) {
        a += c1 * *xm;
        b += c2 * *xm;
    }
    Ok(SpinTractor {
        phi: a,
        phi_prime: b,
        gauge: psi.gauge,
    })
}

fn singular_on<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::FrameBreakdown { .. }) | Err(Error::Signature { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Largest `|nabla^nc_{d_m} psi|` (both halves, frame components).
pub fn spin_tractor_parallel_residual(
    g: &ChartMetric,
    frame: &Frame,
    psi: &SpinTractorField,
    cfg: &CheckConfig,
) -> Result<Report> {
    psi.check_gauge(g)?;
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 4.0 * super::FD_STEP);
    let outcomes = par_outcomes(&points, |p| {
        Ok(match singular_on(connection_columns(g, frame, psi, p))? {
            None => Outcome::Singular,
            Some(cols) => Outcome::Residual(
                cols.iter()
                    .map(|(a, b)| (a.norm_squared() + b.norm_squared()).sqrt())
                    .fold(0.0, f64::max),
            ),
        })
    })?;
    Ok(
        Report::from_outcomes("spin_tractor_parallel", cfg.tol, outcomes)
            .with_extra("rep_id", psi.phi.rep().rep_id()),
    )
}

/// The kernel of `psi` at one sample point, in the splitting basis.
#[derive(Clone, Debug, Serialize)]
pub struct KernelSample {
    pub point: Point,
    pub rank: usize,
    /// Orthonormal (Euclidean) columns of length `n + 2`.
    #[serde(skip)]
    pub basis: DMatrix<f64>,
    /// Distance of `s_+ = (0, 0, 1)` from the kernel.
    pub plus_residual: f64,
    /// `max |<a, b>|` over kernel basis vectors.
    pub lightlike_defect: f64,
}

fn kernel_at(
    alg: &SpinTractorAlgebra,
    g: &ChartMetric,
    frame: &Frame,
    psi: &SpinTractorField,
    p: &[f64],
) -> Result<(DMatrix<f64>, SpinLocal)> {
    let local = SpinLocal::at(g, frame, alg.rep(), p)?;
    let v = psi.eval(g, frame, p)?;
    let hat = alg.embed(&v.phi, &v.phi_prime);
    if hat.norm() == 0.0 {
        return Err(Error::ZeroSpinor);
    }
    let m = alg.action_matrix(&local, &hat);
    Ok((linalg::nullspace(&m, RANK_TOL), local))
}

/// Pointwise kernels of tractor Clifford multiplication on `psi` at seeded
/// samples, with a report whose residual is the larger of the
/// `nabla^nc`-invariance residual and the lightlike defect.
pub fn kernel_distribution(
    g: &ChartMetric,
    frame: &Frame,
    psi: &SpinTractorField,
    cfg: &CheckConfig,
) -> Result<(Vec<KernelSample>, Report)> {
    psi.check_gauge(g)?;
    let alg = SpinTractorAlgebra::new(psi.phi.rep().clone())?;
    let n = g.dim();
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 8.0 * super::FD_STEP);
    let results: Vec<Result<Option<(KernelSample, f64)>>> = {
        use rayon::prelude::*;
        points
            .par_iter()
            .map(|p| {
                let Some((basis, _)) = singular_on(kernel_at(&alg, g, frame, psi, p))? else {
                    return Ok(None);
                };
                let Some(geo) = singular_on(g.geometry_at(p))? else {
                    return Ok(None);
                };
                let gram = gram_matrix(&geo.conn.g);
                let lightlike_defect = if basis.ncols() == 0 {
                    0.0
                } else {
                    (basis.transpose() * &gram * &basis).abs().max()
                };
                let plus_residual = linalg::span_residual(&basis, &unit(n + 2, n + 1));
                let w = connection_matrices(&geo);
                let inv = invariance_residual(
                    |q| Ok(singular_on(kernel_at(&alg, g, frame, psi, q))?.map(|(b, _)| b)),
                    &w,
                    p,
                )?;
                Ok(inv.map(|r| {
                    (
                        KernelSample {
                            point: p.clone(),
                            rank: basis.ncols(),
                            basis,
                            plus_residual,
                            lightlike_defect,
                        },
                        r.max(lightlike_defect),
                    )
                }))
            })
            .collect()
    };
    let mut samples = Vec::new();
    let mut outcomes = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r? {
            Some((s, res)) => {
                outcomes.push((p.clone(), Outcome::Residual(res)));
                samples.push(s);
            }
            None => outcomes.push((p.clone(), Outcome::Singular)),
        }
    }
    let ranks: Vec<usize> = samples.iter().map(|s| s.rank).collect();
    let constant_rank = ranks
        .first()
        .filter(|r| ranks.iter().all(|x| x == *r))
        .cloned();
    let plus = samples.iter().map(|s| s.plus_residual).fold(0.0, f64::max);
    let report = Report::from_outcomes("kernel_distribution", cfg.tol, outcomes)
        .with_extra("ranks", ranks)
        .with_extra("constant_rank", constant_rank)
        .with_extra("plus_max_residual", plus)
        .with_extra("rep_id", alg.extension().rep_id());
    Ok((samples, report))
}

/// `ker phi = {X : X . phi = 0}` in coordinate components.
pub fn ker_phi(local: &SpinLocal, phi: &DVector<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = local.coord_gammas.iter().map(|g| g * phi).collect();
    linalg::nullspace(&DMatrix::from_columns(&cols), RANK_TOL)
}

/// `pr_TM(K cap I_-^perp)` for a kernel basis `K` in the splitting basis:
/// the `Y`-parts of kernel elements with `beta = 0`.
pub fn tangent_part_of_kernel(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = basis.nrows();
    let n = rows - 2;
    if basis.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let beta_row = basis.rows(rows - 1, 1).into_owned();
    let sub = basis * linalg::nullspace(&beta_row, RANK_TOL);
    linalg::column_basis(&sub.rows(1, n).into_owned(), RANK_TOL)
}

impl KernelSample {
    /// Span distance between `pr_TM(ker psi cap I_-^perp)` and `ker phi`.
    pub fn tangent_distance(
        &self,
        g: &ChartMetric,
        frame: &Frame,
        phi: &SpinorField,
    ) -> Result<f64> {
        let local = SpinLocal::at(g, frame, phi.rep(), &self.point)?;
        let kp = ker_phi(&local, &phi.eval(&self.point)?);
        Ok(linalg::span_distance(
            &tangent_part_of_kernel(&self.basis),
            &kp,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Chirality;
    use crate::spintractor::build_frame;

    fn alg(p: usize, q: usize) -> SpinTractorAlgebra {
        SpinTractorAlgebra::new(Arc::new(CliffordRep::build(p, q).unwrap())).unwrap()
    }

    #[test]
    fn null_pair_and_projections() {
        for (p, q) in [(2, 1), (2, 2), (3, 2), (3, 3)] {
            let a = alg(p, q);
            let size = a.extension().spinor_dim();
            let id = DMatrix::<f64>::identity(size, size);
            assert!((a.e_plus() * a.e_plus()).abs().max() < 1e-15);
            assert!((a.e_minus() * a.e_minus()).abs().max() < 1e-15);
            // e_- e_+ + e_+ e_- = -2 <e_-, e_+>
            assert!(
                (a.e_minus() * a.e_plus() + a.e_plus() * a.e_minus() + &id * 2.0)
                    .abs()
                    .max()
                    < 1e-15
            );
            let (pp, pm) = (a.proj_plus(), a.proj_minus());
            assert!((&pp * &pp - &pp).abs().max() < 1e-15);
            assert!((&pp + &pm - &id).abs().max() < 1e-15);
            let (ap, am) = a.annihilators();
            assert_eq!((ap.ncols(), am.ncols()), (size / 2, size / 2));
            assert!(linalg::span_distance(&linalg::column_basis(&pp, RANK_TOL), ap) < 1e-12);
            assert_eq!(a.extension().relation_defect(), 0);
        }
    }

    #[test]
    fn embedding_matches_pair_formula() {
        let a = alg(2, 2);
        let g = ChartMetric::flat(2, 2);
        let frame = build_frame(&g, &[0.0; 4]).unwrap();
        let local = SpinLocal::at(&g, &frame, a.rep(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let phi = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let phi_p = DVector::from_vec(vec![0.0, 1.5, -1.0, 2.0]);
        let hat = a.embed(&phi, &phi_p);
        let (s1, s2) = a.split(&hat);
        assert_eq!((s1, s2), (phi.clone(), phi_p.clone()));
        let (alpha, beta) = (0.7, -1.3);
        let y = DVector::from_vec(vec![0.2, -0.4, 1.0, 0.3]);
        let yc = local.clifford(&y);
        let act = a.action_matrix(&local, &hat);
        let mut t = DVector::zeros(6);
        t[0] = alpha;
        t.rows_mut(1, 4).copy_from(&y);
        t[5] = beta;
        let (r1, r2) = a.split(&(act * t));
        assert!((r1 - (-(&yc * &phi) - &phi_p * (2.0 * beta))).norm() < 1e-14);
        assert!((r2 - (&yc * &phi_p + &phi * alpha)).norm() < 1e-14);
    }

    #[test]
    fn flat_constant_spin_tractor_is_parallel() {
        let g = ChartMetric::flat(2, 1);
        let frame = build_frame(&g, &[0.0; 3]).unwrap();
        let rep = Arc::new(CliffordRep::build(2, 1).unwrap());
        let phi = SpinorField::constant(rep.clone(), &[1, 2], Chirality::Full).unwrap();
        let zero = SpinorField::constant(rep, &[0, 0], Chirality::Full).unwrap();
        let psi = SpinTractorField::new(&g, phi, zero).unwrap();
        let r = spin_tractor_parallel_residual(&g, &frame, &psi, &CheckConfig::default()).unwrap();
        assert!(r.passed && r.max_residual < 1e-14);
    }
}
