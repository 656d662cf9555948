//! Christoffel symbols, Riemann, Ricci, scalar and Schouten curvature.
//!
//! Conventions: `R^l_{ijk} = d_i G^l_{jk} - d_j G^l_{ik} + G^l_{im} G^m_{jk}
//! - G^l_{jm} G^m_{ik}`, `Ric_{jk} = R^i_{ijk}` (positive on round spheres),
//! and Schouten `K = (scal/(2(n-1)) g - Ric)/(n-2)`, whose trace is
//! `-scal/(2(n-1))`.
//!
//! [`PointGeometry`] evaluates everything numerically from the exact
//! symbolic derivatives of `g`; it is what the sampled checks use.
//! [`CurvatureBundle`] holds fully symbolic tensors.

use nalgebra::{DMatrix, DVector};

use super::metric::{check_signature_of, ChartMetric};
use crate::error::{Error, Result};
use crate::expr::Expr;

/// Levi-Civita data at a point. `gamma[k][(i, j)] = G^k_{ij}`.
#[derive(Clone, Debug)]
pub struct PointConnection {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub gamma: Vec<DMatrix<f64>>,
}

/// Full curvature at a point. `dgamma[m][k][(i, j)] = d_m G^k_{ij}`.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub conn: PointConnection,
    pub dgamma: Vec<Vec<DMatrix<f64>>>,
    pub ricci: DMatrix<f64>,
    pub scal: f64,
    /// Zero-filled when `n < 3`, where the Schouten tensor is undefined.
    pub schouten: DMatrix<f64>,
}

fn lowered_gamma(dg: &[DMatrix<f64>], l: usize, i: usize, j: usize) -> f64 {
    0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)])
}

impl PointConnection {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][(i, j)]
    }

    /// `G(x, v)^k = G^k_{ij} x^i v^j`.
    pub fn gamma_apply(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.gamma.iter().map(|gk| (x.transpose() * gk * v)[(0, 0)]),
        )
    }

    /// The matrix `A^k_j = G^k_{ij} x^i`, so `G(x, v) = A v`.
    pub fn gamma_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for k in 0..n {
            let row = x.transpose() * &self.gamma[k];
            a.set_row(k, &row);
        }
        a
    }

    /// Covariant derivative of a vector field with value `y` and coordinate
    /// derivatives `dy[m] = d_m Y` in direction `x`.
    pub fn covariant(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        dy: &[DVector<f64>],
    ) -> DVector<f64> {
        let mut out = self.gamma_apply(x, y);
        for (m, d) in dy.iter().enumerate() {
            out += d * x[m];
        }
        out
    }

    pub fn inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }
}

impl PointGeometry {
    pub fn dim(&self) -> usize {
        self.conn.dim()
    }

    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let c = &self.conn;
        let mut r = self.dgamma[i][l][(j, k)] - self.dgamma[j][l][(i, k)];
        for m in 0..self.dim() {
            r += c.gamma[l][(i, m)] * c.gamma[m][(j, k)] - c.gamma[l][(j, m)] * c.gamma[m][(i, k)];
        }
        r
    }

    /// `K(x)^# = g^{-1} K x`.
    pub fn schouten_sharp(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.conn.ginv * (&self.schouten * x)
    }

    pub fn ricci_sharp(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.conn.ginv * (&self.ricci * x)
    }
}

impl ChartMetric {
    /// Christoffel symbols at `p`; fails off the declared signature.
    pub fn connection_at(&self, p: &[f64]) -> Result<PointConnection> {
        let n = self.dim();
        let jet = self.jet(p)?;
        check_signature_of(&jet.g, self.signature(), p)?;
        let ginv = jet.g.clone().try_inverse().ok_or(Error::Signature {
            point: p.to_vec(),
            detail: "metric not invertible".into(),
        })?;
        let mut lowered = vec![DMatrix::zeros(n, n); n];
        for (l, low) in lowered.iter_mut().enumerate() {
            for i in 0..n {
                for j in i..n {
                    let v = lowered_gamma(&jet.dg, l, i, j);
                    low[(i, j)] = v;
                    low[(j, i)] = v;
                }
            }
        }
        let gamma = (0..n)
            .map(|k| {
                let mut m = DMatrix::zeros(n, n);
                for (l, low) in lowered.iter().enumerate() {
                    let c = ginv[(k, l)];
                    if c != 0.0 {
                        m += low * c;
                    }
                }
                m
            })
            .collect();
        Ok(PointConnection {
            point: p.to_vec(),
            g: jet.g,
            ginv,
            dg: jet.dg,
            gamma,
        })
    }

    /// Full pointwise curvature at `p`.
    pub fn geometry_at(&self, p: &[f64]) -> Result<PointGeometry> {
        let conn = self.connection_at(p)?;
        let n = self.dim();
        let d2g = self.second_derivatives(p)?;
        let ginv = &conn.ginv;
        // lowered symbols G_{lij} and their derivatives
        let mut lowered = vec![DMatrix::zeros(n, n); n];
        for (l, low) in lowered.iter_mut().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    low[(i, j)] = lowered_gamma(&conn.dg, l, i, j);
                }
            }
        }
        // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
        let dginv: Vec<DMatrix<f64>> = conn.dg.iter().map(|d| -(ginv * d * ginv)).collect();
        let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
        for m in 0..n {
            for k in 0..n {
                let mut acc = DMatrix::zeros(n, n);
                for l in 0..n {
                    let a = dginv[m][(k, l)];
                    let b = ginv[(k, l)];
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        for j in 0..n {
                            let dlow =
                                0.5 * (d2g[m][i][(j, l)] + d2g[m][j][(i, l)] - d2g[m][l][(i, j)]);
                            acc[(i, j)] += a * lowered[l][(i, j)] + b * dlow;
                        }
                    }
                }
                dgamma[m][k] = acc;
            }
        }
        // Ric_{jk} = d_i G^i_{jk} - d_j G^i_{ik} + G^i_{im} G^m_{jk} - G^i_{jm} G^m_{ik}
        let gamma = &conn.gamma;
        let trace: Vec<f64> = (0..n)
            .map(|m| (0..n).map(|i| gamma[i][(i, m)]).sum())
            .collect();
        let mut ricci = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut r = 0.0;
                for i in 0..n {
                    r += dgamma[i][i][(j, k)] - dgamma[j][i][(i, k)];
                }
                for m in 0..n {
                    r += trace[m] * gamma[m][(j, k)];
                    for i in 0..n {
                        r -= gamma[i][(j, m)] * gamma[m][(i, k)];
                    }
                }
                ricci[(j, k)] = r;
            }
        }
        let scal = (ginv.component_mul(&ricci)).sum();
        let schouten = if n >= 3 {
            let nf = n as f64;
            (&conn.g * (scal / (2.0 * (nf - 1.0))) - &ricci) / (nf - 2.0)
        } else {
            DMatrix::zeros(n, n)
        };
        Ok(PointGeometry {
            conn,
            dgamma,
            ricci,
            scal,
            schouten,
        })
    }
}

/// How the symbolic inverse metric was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum InverseKind {
    /// Gauss-Jordan with constant or monomial pivots; entries polynomial in
    /// the atoms, kept expanded.
    Elimination,
    /// Adjugate over a non-monomial determinant; entries are quotients.
    Adjugate,
}

/// Symbolic curvature tensors, flat-indexed:
/// `christoffel[k*n*n + i*n + j] = G^k_{ij}`,
/// `riemann[((l*n + i)*n + j)*n + k] = R^l_{ijk}`.
#[derive(Clone, Debug)]
pub struct CurvatureBundle {
    pub n: usize,
    pub inverse_kind: InverseKind,
    pub inverse: Vec<Expr>,
    pub christoffel: Vec<Expr>,
    pub riemann: Vec<Expr>,
    pub ricci: Vec<Expr>,
    pub scal: Expr,
    pub schouten: Vec<Expr>,
}

/// Largest dimension for which the adjugate fallback is attempted.
const ADJUGATE_MAX_DIM: usize = 4;

fn is_monomial(e: &Expr) -> bool {
    use crate::expr::Node;
    let atom = |f: &Expr| match f.node() {
        Node::Coord(_) | Node::Func(_) | Node::Exp(_) => true,
        Node::Pow(b, _) => matches!(b.node(), Node::Coord(_) | Node::Func(_) | Node::Exp(_)),
        _ => false,
    };
    match e.node() {
        Node::Const(r) => !r.is_zero(),
        Node::Mul(v) => v
            .iter()
            .all(|f| f.as_const().is_some_and(|r| !r.is_zero()) || atom(f)),
        _ => atom(e),
    }
}

/// Gauss-Jordan elimination accepting only constant or monomial pivots.
fn eliminate(m: &[Expr], n: usize) -> Option<Vec<Expr>> {
    let mut a: Vec<Vec<Expr>> = (0..n)
        .map(|i| {
            let mut row: Vec<Expr> = (0..n).map(|j| m[i * n + j].expand()).collect();
            row.extend((0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let pick = (c..n)
            .filter(|&r| is_monomial(&a[r][c]))
            .min_by_key(|&r| (a[r][c].as_const().is_none(), a[r][c].leaf_count()))?;
        a.swap(c, pick);
        let inv = a[c][c].pow(-1).simplify();
        let pivot_row: Vec<Expr> = a[c].iter().map(|e| (&inv * e).expand()).collect();
        a[c] = pivot_row;
        for r in 0..n {
            if r == c || a[r][c].is_zero() {
                continue;
            }
            let f = a[r][c].clone();
            for j in 0..2 * n {
                if a[c][j].is_zero() {
                    continue;
                }
                a[r][j] = (&a[r][j] - &(&f * &a[c][j])).expand();
            }
        }
    }
    Some(
        a.into_iter()
            .flat_map(|row| row.into_iter().skip(n))
            .collect(),
    )
}

fn determinant(m: &[Expr], n: usize, rows: &[usize], cols: &[usize]) -> Expr {
    if rows.len() == 1 {
        return m[rows[0] * n + cols[0]].clone();
    }
    let mut terms = Vec::new();
    for (k, &c) in cols.iter().enumerate() {
        let e = &m[rows[0] * n + c];
        if e.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = determinant(m, n, &rows[1..], &rest);
        let sign = if k % 2 == 0 { 1 } else { -1 };
        terms.push(Expr::constant(sign) * e * minor);
    }
    Expr::sum(terms).expand()
}

fn adjugate_inverse(m: &[Expr], n: usize) -> Result<Vec<Expr>> {
    let all: Vec<usize> = (0..n).collect();
    let det = determinant(m, n, &all, &all);
    if det.is_zero() {
        return Err(Error::SingularMetric);
    }
    let inv_det = det.pow(-1);
    let mut out = vec![Expr::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            // inverse[i][j] = (-1)^{i+j} minor(j, i) / det
            let rows: Vec<usize> = all.iter().copied().filter(|&r| r != j).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&c| c != i).collect();
            let minor = determinant(m, n, &rows, &cols);
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            out[i * n + j] = (Expr::constant(sign) * minor * &inv_det).simplify();
        }
    }
    Ok(out)
}

impl CurvatureBundle {
    /// Symbolic curvature. Fails with [`Error::SingularMetric`] when the
    /// determinant vanishes identically, and with [`Error::Inconsistent`] when
    /// no symbolic inverse is available (then only [`PointGeometry`] applies).
    pub fn new(g: &ChartMetric) -> Result<CurvatureBundle> {
        let n = g.dim();
        if n < 3 {
            return Err(Error::Inconsistent("curvature needs n >= 3".into()));
        }
        let comps = g.components();
        let (inverse, inverse_kind) = match eliminate(comps, n) {
            Some(inv) => (inv, InverseKind::Elimination),
            None if n <= ADJUGATE_MAX_DIM => (adjugate_inverse(comps, n)?, InverseKind::Adjugate),
            None => {
                let all: Vec<usize> = (0..n).collect();
                if determinant(comps, n, &all, &all).is_zero() {
                    return Err(Error::SingularMetric);
                }
                return Err(Error::Inconsistent(
                    "no symbolic inverse (non-monomial pivots); use pointwise curvature".into(),
                ));
            }
        };
        // Quotient entries are left as shared, unsimplified trees: rewriting
        // them copies every shared subtree and dominates the cost.
        let tidy = |e: Expr| match inverse_kind {
            InverseKind::Elimination => e.expand(),
            InverseKind::Adjugate => e,
        };
        let dg: Vec<Vec<Expr>> = (0..n)
            .map(|k| comps.iter().map(|e| e.differentiate(k)).collect())
            .collect();
        let idx3 = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let mut christoffel = vec![Expr::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let terms: Vec<Expr> = (0..n)
                        .filter(|&l| !inverse[k * n + l].is_zero())
                        .map(|l| {
                            let low =
                                &dg[i][j * n + l] + &dg[j][i * n + l] - dg[l][i * n + j].clone();
                            Expr::ratio(1, 2) * &inverse[k * n + l] * low
                        })
                        .collect();
                    let e = match inverse_kind {
                        InverseKind::Elimination => Expr::sum(terms).expand(),
                        InverseKind::Adjugate => Expr::sum(terms).simplify(),
                    };
                    christoffel[idx3(k, i, j)] = e.clone();
                    christoffel[idx3(k, j, i)] = e;
                }
            }
        }
        let dgamma: Vec<Vec<Expr>> = (0..n)
            .map(|m| christoffel.iter().map(|e| e.differentiate(m)).collect())
            .collect();
        let idx4 = |l: usize, i: usize, j: usize, k: usize| ((l * n + i) * n + j) * n + k;
        let mut riemann = vec![Expr::zero(); n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in (i + 1)..n {
                    for k in 0..n {
                        let mut terms = vec![
                            dgamma[i][idx3(l, j, k)].clone(),
                            -dgamma[j][idx3(l, i, k)].clone(),
                        ];
                        for m in 0..n {
                            let a = &christoffel[idx3(l, i, m)];
                            let b = &christoffel[idx3(m, j, k)];
                            if !a.is_zero() && !b.is_zero() {
                                terms.push(a * b);
                            }
                            let c = &christoffel[idx3(l, j, m)];
                            let d = &christoffel[idx3(m, i, k)];
                            if !c.is_zero() && !d.is_zero() {
                                terms.push(-(c * d));
                            }
                        }
                        let r = tidy(Expr::sum(terms));
                        riemann[idx4(l, j, i, k)] = tidy(-r.clone());
                        riemann[idx4(l, i, j, k)] = r;
                    }
                }
            }
        }
        let mut ricci = vec![Expr::zero(); n * n];
        for j in 0..n {
            for k in j..n {
                let e = tidy(Expr::sum(
                    (0..n).map(|i| riemann[idx4(i, i, j, k)].clone()).collect(),
                ));
                ricci[k * n + j] = e.clone();
                ricci[j * n + k] = e;
            }
        }
        let scal = tidy(Expr::sum(
            (0..n * n)
                .filter(|&a| !inverse[a].is_zero() && !ricci[a].is_zero())
                .map(|a| &inverse[a] * &ricci[a])
                .collect(),
        ));
        let nf = n as i64;
        let schouten = (0..n * n)
            .map(|a| {
                let e = Expr::ratio(1, nf - 2)
                    * (Expr::ratio(1, 2 * (nf - 1)) * &scal * &comps[a] - ricci[a].clone());
                tidy(e)
            })
            .collect();
        Ok(CurvatureBundle {
            n,
            inverse_kind,
            inverse,
            christoffel,
            riemann,
            ricci,
            scal,
            schouten,
        })
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> &Expr {
        &self.christoffel[(k * self.n + i) * self.n + j]
    }

    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> &Expr {
        &self.riemann[((l * self.n + i) * self.n + j) * self.n + k]
    }

    pub fn ricci(&self, i: usize, j: usize) -> &Expr {
        &self.ricci[i * self.n + j]
    }

    pub fn schouten(&self, i: usize, j: usize) -> &Expr {
        &self.schouten[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::expr::{parse_expr, Bindings};

    fn round_s3() -> ChartMetric {
        let c = Chart::numbered("x", 3);
        let e = |s: &str| parse_expr(s, &c).unwrap();
        ChartMetric::from_entries(
            c.clone(),
            (0, 3),
            &[
                (0, 0, e("1")),
                (1, 1, e("sin(x1)^2")),
                (2, 2, e("sin(x1)^2*sin(x2)^2")),
            ],
            Bindings::new(),
        )
        .unwrap()
    }

    #[test]
    fn flat_is_flat() {
        let g = ChartMetric::flat(2, 2);
        let geo = g.geometry_at(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(geo.scal, 0.0);
        assert!(geo.ricci.iter().all(|x| *x == 0.0));
        let b = CurvatureBundle::new(&g).unwrap();
        assert!(b.riemann.iter().all(Expr::is_zero));
        assert!(b.schouten.iter().all(Expr::is_zero));
    }

    #[test]
    fn round_sphere_is_einstein() {
        let g = round_s3();
        let p = [1.1, 0.7, 0.3];
        let geo = g.geometry_at(&p).unwrap();
        assert!((geo.scal - 6.0).abs() < 1e-12);
        assert!((&geo.ricci - &geo.conn.g * 2.0).abs().max() < 1e-12);
        assert!((&geo.schouten + &geo.conn.g * 0.5).abs().max() < 1e-12);
        let trace = geo.conn.ginv.component_mul(&geo.schouten).sum();
        assert!((trace + 6.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn round_sphere_symbolic_inverse_uses_monomial_pivots() {
        let g = round_s3();
        let b = CurvatureBundle::new(&g).unwrap();
        assert_eq!(b.inverse_kind, InverseKind::Elimination);
        let v = b.scal.evaluate(&[1.1, 0.7, 0.3], g.bindings()).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn adjugate_fallback() {
        let c = Chart::numbered("x", 3);
        let e = |s: &str| parse_expr(s, &c).unwrap();
        let g = ChartMetric::from_entries(
            c.clone(),
            (0, 3),
            &[
                (0, 0, e("2 + x2^2")),
                (0, 1, e("x3")),
                (1, 1, e("2 + x1^2")),
                (2, 2, e("1 + x1*x2 + 1")),
            ],
            Bindings::new(),
        )
        .unwrap();
        let b = CurvatureBundle::new(&g).unwrap();
        assert_eq!(b.inverse_kind, InverseKind::Adjugate);
        let p = [0.3, -0.2, 0.5];
        let geo = g.geometry_at(&p).unwrap();
        for a in 0..9 {
            let v = b.ricci[a].evaluate(&p, g.bindings()).unwrap();
            assert!((v - geo.ricci[(a / 3, a % 3)]).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let c = Chart::numbered("x", 3);
        let x = Expr::coord(0);
        let g = ChartMetric::new(
            c,
            vec![
                vec![Expr::one(), x.clone(), Expr::zero()],
                vec![x.clone(), x.pow(2), Expr::zero()],
                vec![Expr::zero(), Expr::zero(), Expr::one()],
            ],
            (0, 3),
            Bindings::new(),
        )
        .unwrap();
        assert_eq!(CurvatureBundle::new(&g).unwrap_err(), Error::SingularMetric);
    }
}
