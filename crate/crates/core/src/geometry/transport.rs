//! Curves and fixed-step RK4 integration of linear transport equations.

use nalgebra::{DMatrix, DVector};

use super::metric::ChartMetric;
use crate::chart::Point;
use crate::error::{Error, Result};

/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 1e-3;

/// A parametrized curve on `[0, length()]`.
pub trait Curve: Sync {
    fn dim(&self) -> usize;
    fn length(&self) -> f64;
    fn position(&self, t: f64) -> Vec<f64>;
    fn velocity(&self, t: f64) -> Vec<f64>;
}

/// Straight segment at unit Euclidean coordinate speed.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub from: Point,
    pub to: Point,
}

impl Curve for Segment {
    fn dim(&self) -> usize {
        self.from.len()
    }

    fn length(&self) -> f64 {
        self.from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    fn position(&self, t: f64) -> Vec<f64> {
        let len = self.length();
        let s = if len == 0.0 { 0.0 } else { t / len };
        self.from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| a + s * (b - a))
            .collect()
    }

    fn velocity(&self, _t: f64) -> Vec<f64> {
        let len = self.length();
        self.from
            .iter()
            .zip(&self.to)
            .map(|(a, b)| if len == 0.0 { 0.0 } else { (b - a) / len })
            .collect()
    }
}

/// Piecewise-linear curve through `vertices`; each piece is integrated
/// separately so the kinks do not degrade the RK4 order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Point>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point>) -> Polyline {
        Polyline { vertices }
    }

    /// Closed rectangle at `base` spanned by `eps` steps along coordinates
    /// `i` then `j`.
    pub fn rectangle(base: &[f64], i: usize, j: usize, eps: f64) -> Polyline {
        let mut a = base.to_vec();
        a[i] += eps;
        let mut b = a.clone();
        b[j] += eps;
        let mut c = base.to_vec();
        c[j] += eps;
        Polyline::new(vec![base.to_vec(), a, b, c, base.to_vec()])
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.vertices
            .windows(2)
            .map(|w| Segment {
                from: w[0].clone(),
                to: w[1].clone(),
            })
            .collect()
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }
}

/// Curve given by closures on `[0, 1]`.
pub struct FnCurve<P, V> {
    pub dim: usize,
    pub position: P,
    pub velocity: V,
}

impl<P, V> Curve for FnCurve<P, V>
where
    P: Fn(f64) -> Vec<f64> + Sync,
    V: Fn(f64) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn length(&self) -> f64 {
        1.0
    }
    fn position(&self, t: f64) -> Vec<f64> {
        (self.position)(t)
    }
    fn velocity(&self, t: f64) -> Vec<f64> {
        (self.velocity)(t)
    }
}

fn check_inside(g: &ChartMetric, p: &[f64]) -> Result<()> {
    g.chart().check_point(p)
}

/// Integrate `s' = A(t) s` along `curve` with RK4, where `coef(position,
/// velocity)` returns `A`. The step is `h` in the curve parameter, rounded
/// down so that it divides the parameter interval.
pub fn transport_linear<F>(
    g: &ChartMetric,
    curve: &dyn Curve,
    h: f64,
    s0: DMatrix<f64>,
    coef: F,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &DVector<f64>) -> Result<DMatrix<f64>>,
{
    if curve.dim() != g.dim() {
        return Err(Error::Dimension {
            expected: g.dim(),
            got: curve.dim(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::Inconsistent(format!(
            "RK4 step must be positive, got {h}"
        )));
    }
    let length = curve.length();
    if length == 0.0 {
        return Ok(s0);
    }
    let steps = (length / h).ceil().max(1.0) as usize;
    let dt = length / steps as f64;
    let eval = |t: f64| -> Result<DMatrix<f64>> {
        let p = curve.position(t);
        check_inside(g, &p)?;
        coef(&p, &DVector::from_vec(curve.velocity(t)))
    };
    let mut s = s0;
    let mut a0 = eval(0.0)?;
    for k in 0..steps {
        let t = k as f64 * dt;
        let am = eval(t + 0.5 * dt)?;
        let a1 = eval(t + dt)?;
        let k1 = &a0 * &s;
        let k2 = &am * (&s + &k1 * (0.5 * dt));
        let k3 = &am * (&s + &k2 * (0.5 * dt));
        let k4 = &a1 * (&s + &k3 * dt);
        s += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        a0 = a1;
    }
    Ok(s)
}

/// Levi-Civita transport of a vector: `v' + G(gamma', v) = 0`.
pub fn parallel_transport_vector(
    g: &ChartMetric,
    curve: &dyn Curve,
    v0: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let s0 = DMatrix::from_column_slice(v0.len(), 1, v0.as_slice());
    let out = transport_linear(g, curve, h, s0, |p, vel| {
        Ok(-g.connection_at(p)?.gamma_matrix(vel))
    })?;
    Ok(out.column(0).into_owned())
}

/// Transport along each segment of a polyline in turn.
pub fn transport_polyline<F>(
    g: &ChartMetric,
    path: &Polyline,
    h: f64,
    s0: DMatrix<f64>,
    coef: F,
) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &DVector<f64>) -> Result<DMatrix<f64>>,
{
    let mut s = s0;
    for seg in path.segments() {
        s = transport_linear(g, &seg, h, s, &coef)?;
    }
    Ok(s)
}

pub fn parallel_transport_vector_polyline(
    g: &ChartMetric,
    path: &Polyline,
    v0: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let s0 = DMatrix::from_column_slice(v0.len(), 1, v0.as_slice());
    let out = transport_polyline(g, path, h, s0, |p, vel| {
        Ok(-g.connection_at(p)?.gamma_matrix(vel))
    })?;
    Ok(out.column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_transport_is_trivial() {
        let g = ChartMetric::flat(1, 2);
        let v0 = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let seg = Segment {
            from: vec![0.0, 0.0, 0.0],
            to: vec![0.3, -0.2, 0.1],
        };
        let v = parallel_transport_vector(&g, &seg, &v0, DEFAULT_STEP).unwrap();
        assert!((v - v0).norm() < 1e-15);
    }

    #[test]
    fn leaving_the_box_is_an_error() {
        let g = ChartMetric::flat(0, 2);
        let c = g.chart().clone().with_bounds(-1.0, 1.0).unwrap();
        let g = g.with_chart(c).unwrap();
        let seg = Segment {
            from: vec![0.0, 0.0],
            to: vec![2.0, 0.0],
        };
        let r = parallel_transport_vector(&g, &seg, &DVector::from_vec(vec![1.0, 0.0]), 0.01);
        assert!(matches!(r, Err(Error::OutOfBounds { .. })));
    }
}
