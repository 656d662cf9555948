//! Pseudo-orthonormal frames over a chart.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{ChartMetric, FieldJets, VectorField};
use crate::report::sample_points;

/// Smallest `|g(v, v)|` accepted as a Gram-Schmidt pivot.
pub const PIVOT_TOL: f64 = 1e-9;
/// Tolerance for `g(e_i, e_j) = eps_i delta_ij`.
pub const FRAME_TOL: f64 = 1e-9;

const FD_STEP: f64 = 1e-3;

/// `n` vector fields `e_i` with `g(e_i, e_j) = eps_i delta_ij`, timelike
/// (`eps = -1`) first.
#[derive(Clone)]
pub struct Frame {
    eps: Vec<i64>,
    source: Source,
}

#[derive(Clone)]
enum Source {
    Symbolic {
        fields: Vec<VectorField>,
        jets: Arc<FieldJets>,
    },
    /// Gram-Schmidt applied pointwise to fixed start vectors; derivatives by
    /// finite differences.
    GramSchmidt {
        metric: ChartMetric,
        start: Vec<DVector<f64>>,
        order: Vec<usize>,
        flip: bool,
    },
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match &self.source {
            Source::Symbolic { .. } => "symbolic",
            Source::GramSchmidt { .. } => "gram-schmidt",
        };
        f.debug_struct("Frame")
            .field("eps", &self.eps)
            .field("kind", &kind)
            .finish()
    }
}

/// Frame matrix (columns `e_i` in coordinate components) and its
/// coordinate derivatives.
#[derive(Clone, Debug)]
pub struct FrameJet {
    pub e: DMatrix<f64>,
    pub de: Vec<DMatrix<f64>>,
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

fn orthonormalize(
    g: &DMatrix<f64>,
    start: &[DVector<f64>],
    p: &[f64],
) -> Result<(Vec<DVector<f64>>, Vec<i64>)> {
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(start.len());
    let mut eps = Vec::with_capacity(start.len());
    for c in start {
        let v = project_out(g, c, &out, &eps);
        let nv = (v.transpose() * g * &v)[(0, 0)];
        if nv.abs() < PIVOT_TOL || !nv.is_finite() {
            return Err(Error::FrameBreakdown {
                point: p.to_vec(),
                pivot: nv.abs(),
            });
        }
        out.push(v / nv.abs().sqrt());
        eps.push(if nv < 0.0 { -1 } else { 1 });
    }
    Ok((out, eps))
}

fn project_out(
    g: &DMatrix<f64>,
    c: &DVector<f64>,
    done: &[DVector<f64>],
    eps: &[i64],
) -> DVector<f64> {
    let mut v = c.clone();
    for (e, s) in done.iter().zip(eps) {
        let coef = (c.transpose() * g * e)[(0, 0)] * *s as f64;
        v -= e * coef;
    }
    v
}

/// Pseudo-Gram-Schmidt frame, smooth near `base`. Start vectors are chosen
/// greedily at `base` among coordinate vectors and their pairwise sums and
/// differences (largest `|g(v, v)|` after projection), so null coordinate
/// directions are handled; the same start vectors are used everywhere.
pub fn build_frame(g: &ChartMetric, base: &[f64]) -> Result<Frame> {
    let n = g.dim();
    if base.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: base.len(),
        });
    }
    let gm = g.check_signature(base)?;
    let mut candidates: Vec<DVector<f64>> = (0..n).map(|i| unit(n, i)).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            candidates.push(unit(n, a) + unit(n, b));
            candidates.push(unit(n, a) - unit(n, b));
        }
    }
    let mut start = Vec::with_capacity(n);
    let mut done: Vec<DVector<f64>> = Vec::new();
    let mut eps: Vec<i64> = Vec::new();
    for _ in 0..n {
        let pivots: Vec<f64> = candidates
            .iter()
            .map(|c| {
                let v = project_out(&gm, c, &done, &eps);
                (v.transpose() * &gm * &v)[(0, 0)].abs()
            })
            .collect();
        // strict comparison keeps the earliest candidate on ties
        let best_in = |range: std::ops::Range<usize>| {
            range.fold(None, |best: Option<(f64, usize)>, k| {
                if best.is_none_or(|(b, _)| pivots[k] > b * (1.0 + 1e-12)) {
                    Some((pivots[k], k))
                } else {
                    best
                }
            })
        };
        let coords = candidates
            .iter()
            .take_while(|c| c.iter().filter(|x| **x != 0.0).count() == 1)
            .count();
        let overall = best_in(0..candidates.len()).expect("candidates are nonempty");
        // coordinate vectors win unless they are nearly null
        let (nv, k) = match best_in(0..coords) {
            Some(c) if c.0 >= 0.25 * overall.0 => c,
            _ => overall,
        };
        if nv < PIVOT_TOL {
            return Err(Error::FrameBreakdown {
                point: base.to_vec(),
                pivot: nv,
            });
        }
        let c = candidates.remove(k);
        let v = project_out(&gm, &c, &done, &eps);
        let s = (v.transpose() * &gm * &v)[(0, 0)];
        done.push(&v / s.abs().sqrt());
        eps.push(if s < 0.0 { -1 } else { 1 });
        start.push(c);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| eps[i]);
    let sorted_eps: Vec<i64> = order.iter().map(|&i| eps[i]).collect();
    let mut frame = Frame {
        eps: sorted_eps,
        source: Source::GramSchmidt {
            metric: g.clone(),
            start,
            order,
            flip: false,
        },
    };
    let e = frame.matrix(base)?;
    if e.determinant() < 0.0 {
        if let Source::GramSchmidt { flip, .. } = &mut frame.source {
            *flip = true;
        }
    }
    Ok(frame)
}

impl Frame {
    /// Frame from explicit vector fields with declared signs; the
    /// pseudo-orthonormality is checked at `samples` seeded points.
    pub fn symbolic(
        g: &ChartMetric,
        fields: Vec<VectorField>,
        eps: Vec<i64>,
        samples: usize,
        seed: u64,
    ) -> Result<Frame> {
        let n = g.dim();
        if fields.len() != n || eps.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: fields.len(),
            });
        }
        if eps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Inconsistent(
                "frame must list timelike vectors first".into(),
            ));
        }
        let jets = FieldJets::new(&fields, n, g.bindings())?;
        let frame = Frame {
            eps,
            source: Source::Symbolic {
                fields,
                jets: Arc::new(jets),
            },
        };
        for p in sample_points(g.chart(), samples, seed, 0.0) {
            let r = frame.orthonormality_residual(g, &p)?;
            if r > FRAME_TOL {
                return Err(Error::Inconsistent(format!(
                    "frame is not pseudo-orthonormal at {p:?} (residual {r:e})"
                )));
            }
        }
        Ok(frame)
    }

    pub fn dim(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[i64] {
        &self.eps
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.source, Source::Symbolic { .. })
    }

    /// Columns `e_i` at `p`.
    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.source {
            Source::Symbolic { jets, .. } => Ok(jets.eval(p)?.matrix()),
            Source::GramSchmidt {
                metric,
                start,
                order,
                flip,
            } => {
                let gm = metric.check_signature(p)?;
                let (vs, eps) = orthonormalize(&gm, start, p)?;
                let mut cols: Vec<DVector<f64>> = order.iter().map(|&i| vs[i].clone()).collect();
                let signs: Vec<i64> = order.iter().map(|&i| eps[i]).collect();
                if signs != self.eps {
                    return Err(Error::FrameBreakdown {
                        point: p.to_vec(),
                        pivot: 0.0,
                    });
                }
                if *flip {
                    let last = cols.len() - 1;
                    cols[last] *= -1.0;
                }
                Ok(DMatrix::from_columns(&cols))
            }
        }
    }

    pub fn jet(&self, p: &[f64]) -> Result<FrameJet> {
        match &self.source {
            Source::Symbolic { jets, .. } => {
                let v = jets.eval(p)?;
                let n = self.dim();
                let de = (0..n)
                    .map(|m| {
                        DMatrix::from_columns(
                            &v.derivs.iter().map(|d| d[m].clone()).collect::<Vec<_>>(),
                        )
                    })
                    .collect();
                Ok(FrameJet { e: v.matrix(), de })
            }
            Source::GramSchmidt { .. } => {
                let e = self.matrix(p)?;
                let n = self.dim();
                let mut de = Vec::with_capacity(n);
                for m in 0..n {
                    let mut d = DMatrix::zeros(n, n);
                    for (offset, weight) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
                        let mut q = p.to_vec();
                        q[m] += offset * FD_STEP;
                        d += self.matrix(&q)? * (weight / (12.0 * FD_STEP));
                    }
                    de.push(d);
                }
                Ok(FrameJet { e, de })
            }
        }
    }

    /// `max |E^T g E - diag(eps)|` at `p`.
    pub fn orthonormality_residual(&self, g: &ChartMetric, p: &[f64]) -> Result<f64> {
        let e = self.matrix(p)?;
        let gm = g.eval_g(p)?;
        let eta = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eps.iter().map(|&s| s as f64),
        ));
        Ok((e.transpose() * gm * e - eta).abs().max())
    }

    /// The frame `e^{-sigma} e_i` of `e^{2 sigma} g`.
    pub fn conformal_rescale(&self, g_new: &ChartMetric, sigma: &Expr) -> Result<Frame> {
        match &self.source {
            Source::Symbolic { fields, .. } => {
                let factor = (-sigma.clone()).exp();
                let scaled: Vec<VectorField> = fields.iter().map(|f| f.scale(&factor)).collect();
                let jets = FieldJets::new(&scaled, self.dim(), g_new.bindings())?;
                Ok(Frame {
                    eps: self.eps.clone(),
                    source: Source::Symbolic {
                        fields: scaled,
                        jets: Arc::new(jets),
                    },
                })
            }
            Source::GramSchmidt {
                start, order, flip, ..
            } => Ok(Frame {
                eps: self.eps.clone(),
                source: Source::GramSchmidt {
                    metric: g_new.clone(),
                    start: start.clone(),
                    order: order.clone(),
                    flip: *flip,
                },
            }),
        }
    }
}
