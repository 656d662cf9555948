use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::expr::{Bindings, Compiled, Expr};
use crate::linalg;

/// Eigenvalue tolerance for the pointwise signature check.
pub const SIGNATURE_TOL: f64 = 1e-9;

/// A pseudo-Riemannian metric on a chart. Signature `(p, q)` counts
/// negative (timelike) and positive (spacelike) directions.
#[derive(Clone)]
pub struct ChartMetric {
    chart: Chart,
    components: Vec<Expr>,
    signature: (usize, usize),
    bindings: Bindings,
    programs: Arc<Programs>,
    gauge_id: u64,
}

struct Programs {
    /// g_ij and d_k g_ij, upper triangles
    first: Compiled,
    /// d_k d_l g_ij for k <= l, upper triangles
    second: Compiled,
}

impl std::fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartMetric")
            .field("chart", &self.chart.names())
            .field("signature", &self.signature)
            .field("components", &self.components)
            .finish()
    }
}

/// Pointwise metric with first derivatives: `dg[k]` is the matrix of `d_k g_ij`.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
}

fn upper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn fill_symmetric(n: usize, values: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for (v, (i, j)) in values.iter().zip(upper_pairs(n)) {
        m[(i, j)] = *v;
        m[(j, i)] = *v;
    }
    m
}

impl ChartMetric {
    /// Build from a full `n x n` matrix of expressions, which must be
    /// symmetric (checked after expansion).
    pub fn new(
        chart: Chart,
        matrix: Vec<Vec<Expr>>,
        signature: (usize, usize),
        bindings: Bindings,
    ) -> Result<ChartMetric> {
        let n = chart.dim();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: matrix.len(),
            });
        }
        if signature.0 + signature.1 != n {
            return Err(Error::Inconsistent(format!(
                "signature ({}, {}) does not add up to dimension {n}",
                signature.0, signature.1
            )));
        }
        if n < 2 {
            return Err(Error::Inconsistent(
                "metrics need at least two coordinates".into(),
            ));
        }
        let mut components = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = matrix[i][j].simplify();
                if j < i && !(&e - &components[j * n + i]).expand().is_zero() {
                    return Err(Error::Inconsistent(format!(
                        "metric components ({}, {}) and ({}, {}) differ",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
                components.push(e);
            }
        }
        let bindings = Bindings::with_builtins().merged(&bindings);
        let pairs = upper_pairs(n);
        let mut first: Vec<Expr> = pairs
            .iter()
            .map(|&(i, j)| components[i * n + j].clone())
            .collect();
        let mut dg = vec![Vec::new(); n];
        for (k, dgk) in dg.iter_mut().enumerate() {
            *dgk = pairs
                .iter()
                .map(|&(i, j)| components[i * n + j].differentiate(k))
                .collect();
            first.extend(dgk.iter().cloned());
        }
        let mut second = Vec::new();
        for (k, l) in upper_pairs(n) {
            second.extend(dg[k].iter().map(|e| e.differentiate(l)));
        }
        let programs = Programs {
            first: Compiled::new(&first, &bindings)?,
            second: Compiled::new(&second, &bindings)?,
        };
        let mut h = DefaultHasher::new();
        chart.names().hash(&mut h);
        signature.hash(&mut h);
        for e in &components {
            e.hash(&mut h);
        }
        Ok(ChartMetric {
            chart,
            components,
            signature,
            bindings,
            programs: Arc::new(programs),
            gauge_id: h.finish(),
        })
    }

    /// Build from upper-triangle entries `(i, j, expr)`; unset entries are zero.
    pub fn from_entries(
        chart: Chart,
        signature: (usize, usize),
        entries: &[(usize, usize, Expr)],
        bindings: Bindings,
    ) -> Result<ChartMetric> {
        let n = chart.dim();
        let mut m = vec![vec![Expr::zero(); n]; n];
        for (i, j, e) in entries {
            if *i >= n || *j >= n {
                return Err(Error::Dimension {
                    expected: n,
                    got: (*i).max(*j) + 1,
                });
            }
            m[*i][*j] = e.clone();
            m[*j][*i] = e.clone();
        }
        ChartMetric::new(chart, m, signature, bindings)
    }

    /// `diag(-1 x p, +1 x q)` on coordinates `x1..xn`.
    pub fn flat(p: usize, q: usize) -> ChartMetric {
        let n = p + q;
        let entries: Vec<_> = (0..n)
            .map(|i| (i, i, Expr::constant(if i < p { -1 } else { 1 })))
            .collect();
        ChartMetric::from_entries(Chart::numbered("x", n), (p, q), &entries, Bindings::new())
            .expect("flat metric is valid")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[i * self.dim() + j]
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    /// Identifies the gauge (metric in its conformal class) for tractor bookkeeping.
    pub fn gauge_id(&self) -> u64 {
        self.gauge_id
    }

    /// Replace the chart (e.g. to change sampling bounds); coordinates must match.
    pub fn with_chart(mut self, chart: Chart) -> Result<ChartMetric> {
        if chart.names() != self.chart.names() {
            return Err(Error::Inconsistent("chart coordinates differ".into()));
        }
        self.chart = chart;
        Ok(self)
    }

    pub fn eval_g(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.jet(p)?.g)
    }

    pub fn jet(&self, p: &[f64]) -> Result<MetricJet> {
        let n = self.dim();
        if p.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        let vals = self.programs.first.eval(p)?;
        let t = n * (n + 1) / 2;
        let g = fill_symmetric(n, &vals[..t]);
        let dg = (0..n)
            .map(|k| fill_symmetric(n, &vals[t * (k + 1)..t * (k + 2)]))
            .collect();
        Ok(MetricJet { g, dg })
    }

    /// Second derivatives: `out[k][l]` is the matrix of `d_k d_l g_ij`.
    pub fn second_derivatives(&self, p: &[f64]) -> Result<Vec<Vec<DMatrix<f64>>>> {
        let n = self.dim();
        let vals = self.programs.second.eval(p)?;
        let t = n * (n + 1) / 2;
        let mut out = vec![vec![DMatrix::zeros(n, n); n]; n];
        for (block, (k, l)) in upper_pairs(n).into_iter().enumerate() {
            let m = fill_symmetric(n, &vals[t * block..t * (block + 1)]);
            out[l][k] = m.clone();
            out[k][l] = m;
        }
        Ok(out)
    }

    /// Verify invertibility and signature at `p` by eigenvalue inertia.
    pub fn check_signature(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.eval_g(p)?;
        check_signature_of(&g, self.signature, p)?;
        Ok(g)
    }

    pub fn inner(&self, p: &[f64], u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        Ok((u.transpose() * self.eval_g(p)? * v)[(0, 0)])
    }

    /// The metric `e^{2 sigma} g` in the same chart.
    pub fn conformal_rescale(&self, sigma: &Expr) -> Result<ChartMetric> {
        let factor = (Expr::constant(2) * sigma).exp();
        let n = self.dim();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| &factor * self.component(i, j)).collect())
            .collect();
        ChartMetric::new(
            self.chart.clone(),
            matrix,
            self.signature,
            self.bindings.clone(),
        )
    }

    /// Same components, extra opaque-function bindings.
    pub fn with_bindings(&self, extra: &Bindings) -> Result<ChartMetric> {
        let n = self.dim();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| self.component(i, j).clone()).collect())
            .collect();
        ChartMetric::new(
            self.chart.clone(),
            matrix,
            self.signature,
            self.bindings.merged(extra),
        )
    }
}

pub(crate) fn check_signature_of(
    g: &DMatrix<f64>,
    signature: (usize, usize),
    p: &[f64],
) -> Result<()> {
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::Signature {
            point: p.to_vec(),
            detail: "non-finite metric entries".into(),
        });
    }
    let (neg, pos, zero) = linalg::inertia(g, SIGNATURE_TOL);
    if zero > 0 || (neg, pos) != signature {
        return Err(Error::Signature {
            point: p.to_vec(),
            detail: format!(
                "inertia ({neg}, {pos}, {zero}) but signature ({}, {}) declared",
                signature.0, signature.1
            ),
        });
    }
    Ok(())
}
