//! Totally lightlike tractor distributions: invariance checks and the
//! passage between a lightlike tangent distribution `L` and
//! `H = (0, L, 0) + span(0, 0, 1)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{apply_with_jets, connection_matrices, gram_matrix, tractor_jets, TractorField};
use crate::chart::Point;
use crate::error::{Error, Result};
use crate::expr::{Compiled, Expr};
use crate::geometry::{check_lightlike, ChartMetric, CheckConfig, Distribution, VectorField};
use crate::linalg::{self, RANK_TOL};
use crate::report::{sample_points, Outcome, Report};

/// Finite-difference step for derivatives of pointwise-defined subspaces.
const STENCIL_STEP: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct TractorDistribution {
    gauge: u64,
    generators: Vec<TractorField>,
}

impl TractorDistribution {
    pub fn new(g: &ChartMetric, generators: Vec<TractorField>) -> Result<TractorDistribution> {
        if generators.iter().any(|t| t.gauge() != g.gauge_id()) {
            return Err(Error::GaugeMismatch);
        }
        if let Some(t) = generators.iter().find(|t| t.dim() != g.dim()) {
            return Err(Error::Dimension {
                expected: g.dim(),
                got: t.dim(),
            });
        }
        Ok(TractorDistribution {
            gauge: g.gauge_id(),
            generators,
        })
    }

    pub fn generators(&self) -> &[TractorField] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn gauge(&self) -> u64 {
        self.gauge
    }
}

/// Failure of a pointwise subspace `V` to be parallel at `p`:
/// `max_m |(I - P)(d_m P + w_m) P|` for the orthogonal projector `P` onto
/// `V`, with `d_m P` from a five-point stencil. `basis_at` returns an
/// orthonormal basis, or `None` where `V` is singular; `None` is returned
/// when any stencil point is singular or the dimension jumps.
pub fn invariance_residual<F>(basis_at: F, w: &[DMatrix<f64>], p: &[f64]) -> Result<Option<f64>>
where
    F: Fn(&[f64]) -> Result<Option<DMatrix<f64>>>,
{
    let Some(b0) = basis_at(p)? else {
        return Ok(None);
    };
    let dim = b0.ncols();
    let size = b0.nrows();
    let proj = linalg::projector(&b0);
    let comp = DMatrix::identity(size, size) - &proj;
    let h = STENCIL_STEP;
    let mut worst: f64 = 0.0;
    for (m, wm) in w.iter().enumerate() {
        let mut dp = DMatrix::zeros(size, size);
        for (offset, weight) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let mut q = p.to_vec();
            q[m] += offset * h;
            let Some(b) = basis_at(&q)? else {
                return Ok(None);
            };
            if b.ncols() != dim {
                return Ok(None);
            }
            dp += linalg::projector(&b) * (weight / (12.0 * h));
        }
        let r = &comp * (dp + wm) * &proj;
        worst = worst.max(r.norm());
    }
    Ok(Some(worst))
}

fn singular_or<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(Error::Signature { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Is `H` parallel for the normal tractor connection and totally lightlike?
/// The residual at a point is the larger of the invariance residual of
/// `nabla_{e_m} h` against `span(H)` and the relative lightlikeness defect.
/// The invariance of `H^perp` is measured too and reported as the extra
/// field `perp_max_residual`.
pub fn verify_invariant_lightlike(
    g: &ChartMetric,
    h: &TractorDistribution,
    cfg: &CheckConfig,
) -> Result<Report> {
    if h.gauge != g.gauge_id() {
        return Err(Error::GaugeMismatch);
    }
    let k = h.rank();
    let n = g.dim();
    let jets = tractor_jets(g, &h.generators)?;
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 4.0 * STENCIL_STEP);
    let frame_at = |q: &[f64]| -> Result<Option<(DMatrix<f64>, DMatrix<f64>)>> {
        let gm = match singular_or(g.check_signature(q))? {
            Some(x) => x,
            None => return Ok(None),
        };
        let m = DMatrix::from_columns(&jets.eval(q)?.values);
        if linalg::rank(&m, RANK_TOL) < k {
            return Ok(None);
        }
        Ok(Some((m, gram_matrix(&gm))))
    };
    let per_point: Vec<Result<(Outcome, Option<f64>)>> = points
        .par_iter()
        .map(|p| {
            let Some(geo) = singular_or(g.geometry_at(p))? else {
                return Ok((Outcome::Singular, None));
            };
            let Some((m, gram)) = frame_at(p)? else {
                return Ok((Outcome::Singular, None));
            };
            let jv = jets.eval(p)?;
            let basis = linalg::column_basis(&m, RANK_TOL);
            let w = connection_matrices(&geo);
            let mut worst: f64 = 0.0;
            for (val, der) in jv.values.iter().zip(&jv.derivs) {
                for mm in 0..n {
                    let x = DVector::from_fn(n, |i, _| if i == mm { 1.0 } else { 0.0 });
                    let d = apply_with_jets(&w, &x, val, der);
                    worst = worst.max(linalg::span_residual(&basis, &d));
                }
            }
            for a in &jv.values {
                for b in &jv.values {
                    let ip = (a.transpose() * &gram * b)[(0, 0)];
                    worst = worst.max(ip.abs() / (a.norm().max(1.0) * b.norm().max(1.0)));
                }
            }
            let perp = invariance_residual(
                |q| {
                    Ok(frame_at(q)?
                        .map(|(m, gram)| linalg::nullspace(&(m.transpose() * gram), RANK_TOL)))
                },
                &w,
                p,
            )?;
            Ok((Outcome::Residual(worst), perp))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(points.len());
    let mut perp_max: f64 = 0.0;
    for (p, r) in points.iter().zip(per_point) {
        let (o, perp) = r?;
        if let Some(x) = perp {
            perp_max = perp_max.max(x);
        }
        outcomes.push((p.clone(), o));
    }
    Report::from_outcomes("invariant_lightlike", cfg.tol, outcomes)
        .with_extra("rank", k)
        .with_extra("perp_max_residual", perp_max)
        .require_regular()
}

/// `H = (0, K_1, 0), ..., (0, K_r, 0), (0, 0, 1)` for `L = span(K_i)`,
/// which must be totally lightlike on the samples.
pub fn build_h_from_l(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
) -> Result<TractorDistribution> {
    if l.rank() > 0 {
        let r = check_lightlike(g, l, cfg)?;
        if !r.passed {
            return Err(Error::NotLightlike(format!(
                "max |g(K_i, K_j)| = {:e}",
                r.max_residual
            )));
        }
    }
    let mut gens = l
        .generators()
        .iter()
        .map(|k| TractorField::middle(g, k.clone()))
        .collect::<Result<Vec<_>>>()?;
    gens.push(TractorField::plus(g));
    TractorDistribution::new(g, gens)
}

/// Output of [`project_l_from_h`].
#[derive(Clone, Debug)]
pub struct Projection {
    /// Smooth generators `b_j Y_i - b_i Y_j` (`i != j`) of `pr_TM(H ∩ I_-^perp)`
    /// for the pivot generator `j`.
    pub distribution: Distribution,
    pub pivot: usize,
    /// Span agreement of the smooth generators with the pointwise
    /// projection; singular points are where either drops below rank `k - 1`.
    pub report: Report,
    /// Pointwise rank of `pr_TM(H ∩ I_-^perp)` at every sample.
    pub ranks: Vec<(Point, usize)>,
}

/// `L = pr_TM(H ∩ I_-^perp)`: the tractors of `H` with vanishing `beta`,
/// projected to the middle slot.
pub fn project_l_from_h(
    g: &ChartMetric,
    h: &TractorDistribution,
    cfg: &CheckConfig,
) -> Result<Projection> {
    if h.gauge != g.gauge_id() {
        return Err(Error::GaugeMismatch);
    }
    let k = h.rank();
    let n = g.dim();
    if k == 0 {
        return Err(Error::Inconsistent("empty tractor distribution".into()));
    }
    let comps: Vec<Vec<Expr>> = h.generators.iter().map(|t| t.components()).collect();
    let all: Vec<Expr> = comps.iter().flatten().cloned().collect();
    let values = Compiled::new(&all, g.bindings())?;
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let eval_m = |p: &[f64]| -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_column_slice(n + 2, k, &values.eval(p)?))
    };
    // pivot: the generator with the largest mean |beta|
    let mut mean = vec![0.0; k];
    for p in &points {
        let m = eval_m(p)?;
        for (j, s) in mean.iter_mut().enumerate() {
            *s += m[(n + 1, j)].abs();
        }
    }
    let pivot = (0..k)
        .max_by(|&a, &b| mean[a].total_cmp(&mean[b]))
        .expect("k > 0");
    if mean[pivot] == 0.0 {
        return Err(Error::Inconsistent(
            "H lies in I_-^perp at every sample; pr_TM(H ∩ I_-^perp) has no constant rank k-1"
                .into(),
        ));
    }
    let bj = &comps[pivot][n + 1];
    let gens: Vec<VectorField> = (0..k)
        .filter(|&i| i != pivot)
        .map(|i| {
            VectorField::new(
                (0..n)
                    .map(|c| {
                        (bj * &comps[i][1 + c] - &comps[i][n + 1] * &comps[pivot][1 + c]).simplify()
                    })
                    .collect(),
            )
        })
        .collect();
    let smooth_exprs: Vec<Expr> = gens
        .iter()
        .flat_map(|v| v.components().iter().cloned())
        .collect();
    let smooth = Compiled::new(&smooth_exprs, g.bindings())?;
    let results: Vec<Result<(Outcome, usize)>> = points
        .par_iter()
        .map(|p| {
            let m = eval_m(p)?;
            let beta_row = m.rows(n + 1, 1).into_owned();
            let scale = m.norm().max(f64::MIN_POSITIVE);
            let rank = if beta_row.norm() <= RANK_TOL * scale {
                // H inside I_-^perp here: the intersection is all of H
                linalg::rank(&m.rows(1, n).into_owned(), RANK_TOL)
            } else {
                let c = linalg::nullspace(&beta_row, RANK_TOL);
                linalg::rank(&(m.rows(1, n) * &c), RANK_TOL)
            };
            if rank != k - 1 || beta_row.norm() <= RANK_TOL * scale {
                return Ok((Outcome::Singular, rank));
            }
            let c = linalg::nullspace(&beta_row, RANK_TOL);
            let pointwise = linalg::column_basis(&(m.rows(1, n) * &c), RANK_TOL);
            let s = DMatrix::from_column_slice(n, k - 1, &smooth.eval(p)?);
            let sb = linalg::column_basis(&s, RANK_TOL);
            if sb.ncols() != k - 1 {
                return Ok((Outcome::Singular, rank));
            }
            Ok((
                Outcome::Residual(linalg::span_distance(&pointwise, &sb)),
                rank,
            ))
        })
        .collect();
    let mut outcomes = Vec::new();
    let mut ranks = Vec::new();
    for (p, r) in points.iter().zip(results) {
        let (o, rank) = r?;
        outcomes.push((p.clone(), o));
        ranks.push((p.clone(), rank));
    }
    let report = Report::from_outcomes("project_l_from_h", cfg.tol, outcomes)
        .with_extra("rank", k - 1)
        .with_extra("pivot", pivot);
    if report.samples > 0 && report.singular_points.len() == report.samples {
        return Err(Error::Inconsistent(
            "pr_TM(H ∩ I_-^perp) drops below rank k-1 at every sample".into(),
        ));
    }
    Ok(Projection {
        distribution: Distribution::new(gens),
        pivot,
        report,
        ranks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_lightlike_pair_is_invariant() {
        let g = ChartMetric::flat(1, 2);
        let k = VectorField::constant(&[1, 1, 0]);
        let h = TractorDistribution::new(
            &g,
            vec![TractorField::middle(&g, k).unwrap(), TractorField::plus(&g)],
        )
        .unwrap();
        let r = verify_invariant_lightlike(&g, &h, &CheckConfig::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.extra["perp_max_residual"].as_f64().unwrap() < 1e-7);
    }

    #[test]
    fn minus_line_is_not_invariant() {
        let g = ChartMetric::flat(1, 2);
        let h = TractorDistribution::new(&g, vec![TractorField::minus(&g)]).unwrap();
        let r = verify_invariant_lightlike(&g, &h, &CheckConfig::default()).unwrap();
        assert!(!r.passed);
        assert!(r.max_residual > 0.1);
    }

    #[test]
    fn build_rejects_non_lightlike() {
        let g = ChartMetric::flat(1, 2);
        let l = Distribution::coordinate(3, &[1]);
        assert!(matches!(
            build_h_from_l(&g, &l, &CheckConfig::default()),
            Err(Error::NotLightlike(_))
        ));
    }

    #[test]
    fn rank_zero_gives_plus_line() {
        let g = ChartMetric::flat(1, 2);
        let h =
            build_h_from_l(&g, &Distribution::new(Vec::new()), &CheckConfig::default()).unwrap();
        assert_eq!(h.rank(), 1);
        let p = project_l_from_h(&g, &h, &CheckConfig::default()).unwrap();
        assert_eq!(p.distribution.rank(), 0);
        assert!(p.report.passed);
    }

    #[test]
    fn projection_of_pre_normalized_shape() {
        // H = span((1, K1, 0), (0, K2, 0), (0, 0, 1)) in R^{2,2}
        let g = ChartMetric::flat(2, 2);
        let h = TractorDistribution::new(
            &g,
            vec![
                TractorField::parse(&g, "1", &["1", "0", "1", "0"], "0").unwrap(),
                TractorField::parse(&g, "0", &["0", "1", "0", "1"], "0").unwrap(),
                TractorField::plus(&g),
            ],
        )
        .unwrap();
        let p = project_l_from_h(&g, &h, &CheckConfig::default()).unwrap();
        assert_eq!(p.pivot, 2);
        assert!(p.report.passed);
        assert!(p.ranks.iter().all(|(_, r)| *r == 2));
    }

    #[test]
    fn h_inside_i_perp_everywhere_is_inconsistent() {
        let g = ChartMetric::flat(1, 2);
        let h = TractorDistribution::new(&g, vec![TractorField::minus(&g)]).unwrap();
        assert!(matches!(
            project_l_from_h(&g, &h, &CheckConfig::default()),
            Err(Error::Inconsistent(_))
        ));
    }
}
