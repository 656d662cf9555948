//! The standard tractor bundle in a metric gauge.
//!
//! A tractor is written as `(alpha, Y, beta)` in the splitting of a fixed
//! metric `g`; as a vector of length `n + 2` the order is
//! `(alpha, Y^1, ..., Y^n, beta)`. Every value carries the gauge id of the
//! metric it is expressed in, and binary operations refuse mixed gauges.

mod holonomy;
mod lightlike;

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Compiled, Expr};
use crate::geometry::{
    transport_linear, transport_polyline, ChartMetric, CheckConfig, Curve, FieldJetValues,
    FieldJets, PointGeometry, Polyline, VectorField,
};
use crate::report::{par_outcomes, sample_points, Outcome, Report};

pub use holonomy::{holonomy_sample, HolonomyConfig, HolonomyLoop, HolonomySample};
pub use lightlike::{
    build_h_from_l, invariance_residual, project_l_from_h, verify_invariant_lightlike, Projection,
    TractorDistribution,
};

/// A tractor value at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Tractor {
    pub alpha: f64,
    pub y: DVector<f64>,
    pub beta: f64,
    pub gauge: u64,
}

impl Tractor {
    pub fn new(g: &ChartMetric, alpha: f64, y: DVector<f64>, beta: f64) -> Result<Tractor> {
        if y.len() != g.dim() {
            return Err(Error::Dimension {
                expected: g.dim(),
                got: y.len(),
            });
        }
        Ok(Tractor {
            alpha,
            y,
            beta,
            gauge: g.gauge_id(),
        })
    }

    pub fn from_vector(gauge: u64, v: &DVector<f64>) -> Tractor {
        let n = v.len() - 2;
        Tractor {
            alpha: v[0],
            y: v.rows(1, n).into_owned(),
            beta: v[n + 1],
            gauge,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.y.len();
        let mut v = DVector::zeros(n + 2);
        v[0] = self.alpha;
        v.rows_mut(1, n).copy_from(&self.y);
        v[n + 1] = self.beta;
        v
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }
}

/// Gram matrix of the tractor metric `a1 b2 + a2 b1 + g(Y1, Y2)` for the
/// metric matrix `g` at a point.
pub fn gram_matrix(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, n + 1)] = 1.0;
    m[(n + 1, 0)] = 1.0;
    m.view_mut((1, 1), (n, n)).copy_from(g);
    m
}

fn same_gauge(g: &ChartMetric, gauges: &[u64]) -> Result<()> {
    if gauges.iter().any(|&x| x != g.gauge_id()) {
        return Err(Error::GaugeMismatch);
    }
    Ok(())
}

/// `<u, v> = a_u b_v + a_v b_u + g(Y_u, Y_v)` at `p`.
pub fn tractor_inner(g: &ChartMetric, p: &[f64], u: &Tractor, v: &Tractor) -> Result<f64> {
    same_gauge(g, &[u.gauge, v.gauge])?;
    let gm = g.eval_g(p)?;
    Ok(u.alpha * v.beta + v.alpha * u.beta + (u.y.transpose() * gm * &v.y)[(0, 0)])
}

/// A symbolic tractor field in the gauge of one metric.
#[derive(Clone, Debug)]
pub struct TractorField {
    alpha: Expr,
    y: VectorField,
    beta: Expr,
    gauge: u64,
}

impl TractorField {
    pub fn new(g: &ChartMetric, alpha: Expr, y: VectorField, beta: Expr) -> Result<TractorField> {
        if y.dim() != g.dim() {
            return Err(Error::Dimension {
                expected: g.dim(),
                got: y.dim(),
            });
        }
        Ok(TractorField {
            alpha,
            y,
            beta,
            gauge: g.gauge_id(),
        })
    }

    pub fn parse(g: &ChartMetric, alpha: &str, y: &[&str], beta: &str) -> Result<TractorField> {
        let c: &Chart = g.chart();
        TractorField::new(
            g,
            parse_expr(alpha, c)?,
            VectorField::parse(c, y)?,
            parse_expr(beta, c)?,
        )
    }

    /// `(0, Y, 0)`.
    pub fn middle(g: &ChartMetric, y: VectorField) -> Result<TractorField> {
        TractorField::new(g, Expr::zero(), y, Expr::zero())
    }

    /// `(0, 0, 1)`, spanning `I_+` in this gauge.
    pub fn plus(g: &ChartMetric) -> TractorField {
        TractorField::new(g, Expr::zero(), VectorField::zero(g.dim()), Expr::one()).expect("arity")
    }

    /// `(1, 0, 0)`, spanning the invariant null line `I_-`.
    pub fn minus(g: &ChartMetric) -> TractorField {
        TractorField::new(g, Expr::one(), VectorField::zero(g.dim()), Expr::zero()).expect("arity")
    }

    pub fn alpha(&self) -> &Expr {
        &self.alpha
    }

    pub fn y(&self) -> &VectorField {
        &self.y
    }

    pub fn beta(&self) -> &Expr {
        &self.beta
    }

    pub fn gauge(&self) -> u64 {
        self.gauge
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    /// The `n + 2` components in splitting order.
    pub fn components(&self) -> Vec<Expr> {
        let mut v = vec![self.alpha.clone()];
        v.extend(self.y.components().iter().cloned());
        v.push(self.beta.clone());
        v
    }

    pub fn eval(&self, g: &ChartMetric, p: &[f64]) -> Result<Tractor> {
        same_gauge(g, &[self.gauge])?;
        let v = Compiled::new(&self.components(), g.bindings())?.eval(p)?;
        Ok(Tractor::from_vector(self.gauge, &DVector::from_vec(v)))
    }
}

/// Values and coordinate derivatives of several tractor fields.
pub(crate) fn tractor_jets(g: &ChartMetric, fields: &[TractorField]) -> Result<FieldJets> {
    same_gauge(g, &fields.iter().map(|f| f.gauge).collect::<Vec<_>>())?;
    let comps: Vec<Vec<Expr>> = fields.iter().map(|f| f.components()).collect();
    let refs: Vec<&[Expr]> = comps.iter().map(|c| c.as_slice()).collect();
    FieldJets::from_components(&refs, g.dim() + 2, g.dim(), g.bindings())
}

/// The matrix `w(X)` with `nabla_X t = X(t) + w(X) t` for the normal tractor
/// connection:
///
/// ```text
/// [ 0   K(X, .)   0        ]
/// [ X   G(X, .)   -K(X)^#  ]
/// [ 0   -g(X, .)  0        ]
/// ```
pub fn connection_matrix(geo: &PointGeometry, x: &DVector<f64>) -> DMatrix<f64> {
    let n = geo.dim();
    let conn = &geo.conn;
    let mut w = DMatrix::zeros(n + 2, n + 2);
    let kx = &geo.schouten * x;
    let gx = &conn.g * x;
    let ksharp = geo.schouten_sharp(x);
    for j in 0..n {
        w[(0, 1 + j)] = kx[j];
        w[(n + 1, 1 + j)] = -gx[j];
        w[(1 + j, 0)] = x[j];
        w[(1 + j, n + 1)] = -ksharp[j];
    }
    w.view_mut((1, 1), (n, n)).copy_from(&conn.gamma_matrix(x));
    w
}

/// `w(e_m)` for every coordinate direction.
pub fn connection_matrices(geo: &PointGeometry) -> Vec<DMatrix<f64>> {
    let n = geo.dim();
    (0..n)
        .map(|m| {
            connection_matrix(
                geo,
                &DVector::from_fn(n, |i, _| if i == m { 1.0 } else { 0.0 }),
            )
        })
        .collect()
}

/// Covariant derivative from precomputed jets of a single field.
pub(crate) fn apply_with_jets(
    w: &[DMatrix<f64>],
    x: &DVector<f64>,
    value: &DVector<f64>,
    derivs: &[DVector<f64>],
) -> DVector<f64> {
    let mut out = DVector::zeros(value.len());
    for (m, (wm, dm)) in w.iter().zip(derivs).enumerate() {
        if x[m] != 0.0 {
            out += (dm + wm * value) * x[m];
        }
    }
    out
}

/// `nabla^nc_X t` at `p`:
/// `(X(a) + K(X, Y), nabla_X Y + a X - b K(X)^#, X(b) - g(X, Y))`.
pub fn tractor_connection_apply(
    g: &ChartMetric,
    x: &VectorField,
    t: &TractorField,
    p: &[f64],
) -> Result<Tractor> {
    let jets = tractor_jets(g, std::slice::from_ref(t))?.eval(p)?;
    let geo = g.geometry_at(p)?;
    let xv = x.eval(p, g.bindings())?;
    let w = connection_matrices(&geo);
    Ok(Tractor::from_vector(
        t.gauge,
        &apply_with_jets(&w, &xv, &jets.values[0], &jets.derivs[0]),
    ))
}

/// Change of gauge from `g` to `e^{2 sigma} g`.
pub struct GaugeChange {
    source: ChartMetric,
    target: ChartMetric,
    sigma: Expr,
    program: Compiled,
}

impl std::fmt::Debug for GaugeChange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GaugeChange")
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl GaugeChange {
    pub fn new(g: &ChartMetric, sigma: &Expr) -> Result<GaugeChange> {
        let n = g.dim();
        let mut exprs = vec![sigma.clone()];
        exprs.extend((0..n).map(|m| sigma.differentiate(m)));
        Ok(GaugeChange {
            source: g.clone(),
            target: g.conformal_rescale(sigma)?,
            sigma: sigma.clone(),
            program: Compiled::new(&exprs, g.bindings())?,
        })
    }

    pub fn source(&self) -> &ChartMetric {
        &self.source
    }

    pub fn target(&self) -> &ChartMetric {
        &self.target
    }

    pub fn sigma(&self) -> &Expr {
        &self.sigma
    }

    /// The matrix of
    /// `(a, Y, b) -> (e^{-s}(a - Y(s) - b |grad s|^2 / 2), e^{-s}(Y + b grad s), e^{s} b)`
    /// at `p`.
    pub fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.program.eval(p)?;
        let gm = self.source.check_signature(p)?;
        let ginv = gm.try_inverse().ok_or(Error::Signature {
            point: p.to_vec(),
            detail: "metric not invertible".into(),
        })?;
        Ok(gauge_matrix(
            &ginv,
            v[0],
            &DVector::from_column_slice(&v[1..]),
        ))
    }

    pub fn apply(&self, t: &Tractor, p: &[f64]) -> Result<Tractor> {
        same_gauge(&self.source, &[t.gauge])?;
        let m = self.matrix_at(p)?;
        Ok(Tractor::from_vector(
            self.target.gauge_id(),
            &(m * t.to_vector()),
        ))
    }
}

/// Gauge-change matrix from the inverse metric, `sigma` and `d sigma` at a point.
pub fn gauge_matrix(ginv: &DMatrix<f64>, sigma: f64, dsigma: &DVector<f64>) -> DMatrix<f64> {
    let n = ginv.nrows();
    let grad = ginv * dsigma;
    let norm2 = dsigma.dot(&grad);
    let (em, ep) = ((-sigma).exp(), sigma.exp());
    let mut m = DMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = em;
    for j in 0..n {
        m[(0, 1 + j)] = -em * dsigma[j];
        m[(1 + j, 1 + j)] = em;
        m[(1 + j, n + 1)] = em * grad[j];
    }
    m[(0, n + 1)] = -0.5 * em * norm2;
    m[(n + 1, n + 1)] = ep;
    m
}

/// One-shot gauge change of a value; returns the target metric with it.
pub fn gauge_transform(
    g: &ChartMetric,
    t: &Tractor,
    sigma: &Expr,
    p: &[f64],
) -> Result<(ChartMetric, Tractor)> {
    let change = GaugeChange::new(g, sigma)?;
    let out = change.apply(t, p)?;
    Ok((change.target, out))
}

fn transport_coef(g: &ChartMetric) -> impl Fn(&[f64], &DVector<f64>) -> Result<DMatrix<f64>> + '_ {
    move |p, vel| Ok(-connection_matrix(&g.geometry_at(p)?, vel))
}

/// Parallel transport of a tractor along `curve` by RK4 with step `h`.
pub fn tractor_parallel_transport(
    g: &ChartMetric,
    curve: &dyn Curve,
    t0: &Tractor,
    h: f64,
) -> Result<Tractor> {
    same_gauge(g, &[t0.gauge])?;
    let v = t0.to_vector();
    let s0 = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    let out = transport_linear(g, curve, h, s0, transport_coef(g))?;
    Ok(Tractor::from_vector(t0.gauge, &out.column(0).into_owned()))
}

/// Transport of the full frame along a curve: `t(end) = M t(start)`.
pub fn tractor_transport_matrix(
    g: &ChartMetric,
    curve: &dyn Curve,
    h: f64,
) -> Result<DMatrix<f64>> {
    let k = g.dim() + 2;
    transport_linear(g, curve, h, DMatrix::identity(k, k), transport_coef(g))
}

pub fn tractor_transport_matrix_polyline(
    g: &ChartMetric,
    path: &Polyline,
    h: f64,
) -> Result<DMatrix<f64>> {
    let k = g.dim() + 2;
    transport_polyline(g, path, h, DMatrix::identity(k, k), transport_coef(g))
}

fn relative(r: f64, scale: f64) -> f64 {
    r.abs() / scale.max(1.0)
}

/// `X<t, s> - <nabla_X t, s> - <t, nabla_X s>` over all pairs of `fields`
/// and coordinate directions, relative to the size of the terms.
pub fn check_tractor_metricity(
    g: &ChartMetric,
    fields: &[TractorField],
    cfg: &CheckConfig,
) -> Result<Report> {
    let jets = tractor_jets(g, fields)?;
    let n = g.dim();
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let outcomes = par_outcomes(&points, |p| {
        let geo = match g.geometry_at(p) {
            Ok(x) => x,
            Err(Error::Signature { .. }) => return Ok(Outcome::Singular),
            Err(e) => return Err(e),
        };
        let FieldJetValues { values, derivs } = jets.eval(p)?;
        let gram = gram_matrix(&geo.conn.g);
        let w = connection_matrices(&geo);
        let mut worst: f64 = 0.0;
        for m in 0..n {
            let mut dgram = DMatrix::zeros(n + 2, n + 2);
            dgram.view_mut((1, 1), (n, n)).copy_from(&geo.conn.dg[m]);
            for a in 0..values.len() {
                let na = &derivs[a][m] + &w[m] * &values[a];
                for b in a..values.len() {
                    let nb = &derivs[b][m] + &w[m] * &values[b];
                    let lhs = (derivs[a][m].transpose() * &gram * &values[b])[(0, 0)]
                        + (values[a].transpose() * &dgram * &values[b])[(0, 0)]
                        + (values[a].transpose() * &gram * &derivs[b][m])[(0, 0)];
                    let r1 = (na.transpose() * &gram * &values[b])[(0, 0)];
                    let r2 = (values[a].transpose() * &gram * &nb)[(0, 0)];
                    let scale = lhs.abs().max(r1.abs()).max(r2.abs());
                    worst = worst.max(relative(lhs - r1 - r2, scale));
                }
            }
        }
        Ok(Outcome::Residual(worst))
    })?;
    Report::from_outcomes("tractor_metricity", cfg.tol, outcomes).require_regular()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn inner_product_examples() {
        let g = ChartMetric::flat(1, 2);
        let p = [0.1, 0.2, 0.3];
        let minus = Tractor::new(&g, 1.0, DVector::zeros(3), 0.0).unwrap();
        let plus = Tractor::new(&g, 0.0, DVector::zeros(3), 1.0).unwrap();
        assert_eq!(tractor_inner(&g, &p, &minus, &plus).unwrap(), 1.0);
        assert_eq!(tractor_inner(&g, &p, &minus, &minus).unwrap(), 0.0);
        let y = Tractor::new(&g, 0.0, DVector::from_vec(vec![1.0, 2.0, 0.0]), 0.0).unwrap();
        assert_eq!(tractor_inner(&g, &p, &y, &y).unwrap(), 3.0);
    }

    #[test]
    fn mixed_gauges_are_rejected() {
        let g = ChartMetric::flat(1, 2);
        let h = g.conformal_rescale(&Expr::coord(0)).unwrap();
        let a = Tractor::new(&g, 1.0, DVector::zeros(3), 0.0).unwrap();
        let b = Tractor::new(&h, 1.0, DVector::zeros(3), 0.0).unwrap();
        assert_eq!(
            tractor_inner(&g, &[0.0; 3], &a, &b),
            Err(Error::GaugeMismatch)
        );
    }

    #[test]
    fn flat_connection_examples() {
        let g = ChartMetric::flat(1, 2);
        let p = [0.3, -0.2, 0.5];
        let x = VectorField::coordinate(3, 0);
        let plus = TractorField::plus(&g);
        let r = tractor_connection_apply(&g, &x, &plus, &p).unwrap();
        assert_eq!(r.to_vector().norm(), 0.0);
        let minus = TractorField::minus(&g);
        let r = tractor_connection_apply(&g, &x, &minus, &p).unwrap();
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.y, e(3, 0));
        assert_eq!(r.beta, 0.0);
    }

    #[test]
    fn constant_gauge_change_scales() {
        let g = ChartMetric::flat(1, 2);
        let c = 0.7;
        let t = Tractor::new(&g, 1.5, DVector::from_vec(vec![1.0, -2.0, 0.5]), -0.25).unwrap();
        let (h, u) = gauge_transform(&g, &t, &Expr::ratio(7, 10), &[0.0; 3]).unwrap();
        assert_eq!(u.gauge, h.gauge_id());
        assert!((u.alpha - (-c as f64).exp() * 1.5).abs() < 1e-15);
        assert!((&u.y - &t.y * (-c as f64).exp()).norm() < 1e-15);
        assert!((u.beta - (c as f64).exp() * -0.25).abs() < 1e-15);
    }

    #[test]
    fn gauge_matrix_is_an_isometry() {
        let gm = DMatrix::from_row_slice(3, 3, &[-1.0, 0.2, 0.0, 0.2, 1.5, 0.1, 0.0, 0.1, 2.0]);
        let sigma = 0.3;
        let ds = DVector::from_vec(vec![0.4, -1.1, 0.25]);
        let m = gauge_matrix(&gm.clone().try_inverse().unwrap(), sigma, &ds);
        let before = gram_matrix(&gm);
        let after = gram_matrix(&(&gm * (2.0 * sigma).exp()));
        let r = m.transpose() * after * m - before;
        assert!(r.abs().max() < 1e-13);
    }

    #[test]
    fn flat_transport_of_minus() {
        // (1, 0, 0) along a unit spacelike line goes to (1, -t T, -t^2/2)
        let g = ChartMetric::flat(1, 2);
        let seg = crate::geometry::Segment {
            from: vec![0.0, -0.3, 0.0],
            to: vec![0.0, 0.5, 0.0],
        };
        let t0 = Tractor::new(&g, 1.0, DVector::zeros(3), 0.0).unwrap();
        let t = tractor_parallel_transport(&g, &seg, &t0, 1e-3).unwrap();
        let len = 0.8;
        assert!((t.alpha - 1.0).abs() < 1e-12);
        assert!((&t.y + e(3, 1) * len).norm() < 1e-12);
        assert!((t.beta + len * len / 2.0).abs() < 1e-12);
    }
}
