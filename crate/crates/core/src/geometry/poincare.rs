//! Potentials of closed one-forms by line integration along axis-parallel
//! polylines from a base point.

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Compiled};
use crate::report::{rng, sample_points};

use super::fields::OneForm;
use rand::Rng;

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoincareConfig {
    pub samples: usize,
    pub seed: u64,
    /// Largest admissible `|d theta|` component at a sample.
    pub closed_tol: f64,
    /// Largest admissible disagreement between two integration orders.
    pub path_tol: f64,
    /// Quadrature panels per unit of coordinate length (at least one per leg).
    pub panels_per_unit: usize,
}

impl Default for PoincareConfig {
    fn default() -> Self {
        PoincareConfig {
            samples: 64,
            seed: 42,
            closed_tol: 1e-8,
            path_tol: 1e-6,
            panels_per_unit: 32,
        }
    }
}

/// Numeric potential `s` with `s(base) = 0` and `ds = theta`.
pub struct Potential {
    chart: Chart,
    base: Point,
    theta: Compiled,
    coords: Vec<usize>,
    panels_per_unit: usize,
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Potential")
            .field("base", &self.base)
            .field("coords", &self.coords)
            .finish()
    }
}

impl Potential {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Value at `p`, integrating the legs in the slice's coordinate order.
    pub fn value(&self, p: &[f64]) -> Result<f64> {
        self.value_along(p, &self.coords)
    }

    /// Value at `p` integrating along the coordinates in `order`.
    pub fn value_along(&self, p: &[f64], order: &[usize]) -> Result<f64> {
        self.chart.check_point(p)?;
        for (i, (a, b)) in p.iter().zip(&self.base).enumerate() {
            if !self.coords.contains(&i) && a != b {
                return Err(Error::Inconsistent(format!(
                    "point leaves the slice: coordinate {} is fixed at {b}",
                    self.chart.name(i)
                )));
            }
        }
        let mut x = self.base.clone();
        let mut total = 0.0;
        let mut buf = vec![0.0; self.theta.len()];
        for &i in order {
            let (a, b) = (x[i], p[i]);
            if a == b {
                continue;
            }
            let panels = ((b - a).abs() * self.panels_per_unit as f64)
                .ceil()
                .max(1.0) as usize;
            let w = (b - a) / panels as f64;
            for k in 0..panels {
                let mid = a + (k as f64 + 0.5) * w;
                for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    x[i] = mid + 0.5 * w * node;
                    self.theta.eval_into(&x, &mut buf)?;
                    total += 0.5 * w * weight * buf[i];
                }
            }
            x[i] = b;
        }
        Ok(total)
    }

    /// `d s = theta` at `p`.
    pub fn gradient(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.theta.eval(p)
    }
}

/// Build the potential of `theta` on the slice through `base` spanned by
/// `coords` (all coordinates when empty). Closedness of the form restricted
/// to the slice and path independence are spot-checked on samples first.
pub fn poincare_potential(
    theta: &OneForm,
    chart: &Chart,
    base: &[f64],
    coords: &[usize],
    bindings: &Bindings,
    cfg: &PoincareConfig,
) -> Result<Potential> {
    let n = chart.dim();
    if theta.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: theta.dim(),
        });
    }
    chart.check_point(base)?;
    let coords: Vec<usize> = if coords.is_empty() {
        (0..n).collect()
    } else {
        coords.to_vec()
    };
    let bindings = Bindings::with_builtins().merged(bindings);
    let d: Vec<_> = theta
        .exterior_derivative()
        .into_iter()
        .filter(|((i, j), _)| coords.contains(i) && coords.contains(j))
        .collect();
    let dprog = Compiled::new(
        &d.iter().map(|(_, e)| e.clone()).collect::<Vec<_>>(),
        &bindings,
    )?;
    let on_slice = |mut p: Point| {
        for i in 0..n {
            if !coords.contains(&i) {
                p[i] = base[i];
            }
        }
        p
    };
    let points: Vec<Point> = sample_points(chart, cfg.samples, cfg.seed, 0.0)
        .into_iter()
        .map(on_slice)
        .collect();
    for p in &points {
        let vals = dprog.eval(p)?;
        if let Some(r) = vals.iter().map(|v| v.abs()).reduce(f64::max) {
            if !(r <= cfg.closed_tol) {
                return Err(Error::NotClosed {
                    point: p.clone(),
                    residual: r,
                });
            }
        }
    }
    let pot = Potential {
        chart: chart.clone(),
        base: base.to_vec(),
        theta: Compiled::new(theta.components(), &bindings)?,
        coords: coords.clone(),
        panels_per_unit: cfg.panels_per_unit,
    };
    let mut r = rng(cfg.seed ^ 0x9e37_79b9);
    for p in points.iter().take(cfg.samples.min(16)) {
        let mut order = coords.clone();
        order.reverse();
        if order.len() > 2 {
            let k = r.gen_range(0..order.len());
            order.rotate_left(k);
        }
        let a = pot.value_along(p, &coords)?;
        let b = pot.value_along(p, &order)?;
        if (a - b).abs() > cfg.path_tol * a.abs().max(1.0) {
            return Err(Error::NotClosed {
                point: p.clone(),
                residual: (a - b).abs(),
            });
        }
    }
    Ok(pot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_coordinate_form() {
        let c = Chart::numbered("x", 2);
        let theta = OneForm::parse(&c, &["1", "0"]).unwrap();
        let base = [0.25, -0.5];
        let pot = poincare_potential(
            &theta,
            &c,
            &base,
            &[],
            &Bindings::new(),
            &PoincareConfig::default(),
        )
        .unwrap();
        let v = pot.value(&[0.75, 0.3]).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn non_closed_form_is_rejected() {
        let c = Chart::numbered("x", 2);
        let theta = OneForm::parse(&c, &["x2", "0"]).unwrap();
        let r = poincare_potential(
            &theta,
            &c,
            &[0.0, 0.0],
            &[],
            &Bindings::new(),
            &PoincareConfig::default(),
        );
        assert!(matches!(r, Err(Error::NotClosed { .. })));
    }

    #[test]
    fn slice_ignores_transverse_non_closedness() {
        // x3 dx1 is not closed in R^3 but is on the slice x3 = const
        let c = Chart::numbered("x", 3);
        let theta = OneForm::parse(&c, &["x3", "0", "0"]).unwrap();
        let base = [0.0, 0.0, 0.5];
        let pot = poincare_potential(
            &theta,
            &c,
            &base,
            &[0, 1],
            &Bindings::new(),
            &PoincareConfig::default(),
        )
        .unwrap();
        assert!((pot.value(&[0.4, 0.1, 0.5]).unwrap() - 0.2).abs() < 1e-14);
        assert!(pot.value(&[0.4, 0.1, 0.6]).is_err());
    }
}
