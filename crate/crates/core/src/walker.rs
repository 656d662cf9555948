//! Walker normal forms.
//!
//! A Walker metric with block data `(A, H, B)` on coordinates
//! `(x_1..x_r, z_1..z_{n-2r}, y_1..y_r)` is
//! `g = [[0, 0, Id], [0, A, H], [Id, H^T, B]]` with `A`, `H` free of `x`;
//! `L = span(d/dx_1, .., d/dx_r)` is parallel and totally lightlike.
//!
//! The pure-spinor normal form on `(x_1..x_m, z, y_1..y_m)` is
//! `h = -dz^2 - 4 sum dx_i dy_i - 4 sum g_ij dy_i dy_j` with
//! `sum_i d g_ik / d x_i = 0`; without `z` it has signature `(m, m)`.

use std::sync::Arc;

use nalgebra::DVector;
use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::chart::Chart;
use crate::clifford::{Chirality, CliffordRep};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, Expr};
use crate::geometry::{
    check_distribution_parallel, check_ricci_image, check_scalar_flat, ChartMetric, CheckConfig,
    Distribution, VectorField,
};
use crate::linalg::{self, RANK_TOL};
use crate::report::{sample_points, Report};
use crate::spintractor::{check_parallel_spinor, Frame, SpinLocal, SpinorField};

/// Block data of a Walker metric. Indices are 0-based within each block.
#[derive(Clone, Debug)]
pub struct WalkerSpec {
    pub n: usize,
    pub r: usize,
    /// `(n-2r) x (n-2r)`, symmetric
    pub a: Vec<Vec<Expr>>,
    /// `(n-2r) x r`
    pub h: Vec<Vec<Expr>>,
    /// `r x r`, symmetric
    pub b: Vec<Vec<Expr>>,
    pub bindings: Bindings,
}

/// Which block an entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    A,
    H,
    B,
}

impl WalkerSpec {
    /// Coordinates `x1..xr, z1..z(n-2r), y1..yr`.
    pub fn chart(n: usize, r: usize) -> Result<Chart> {
        if r == 0 || 2 * r > n {
            return Err(Error::Constraint(format!(
                "need 1 <= r <= n/2, got r = {r}, n = {n}"
            )));
        }
        let mut names: Vec<String> = (1..=r).map(|i| format!("x{i}")).collect();
        names.extend((1..=n - 2 * r).map(|i| format!("z{i}")));
        names.extend((1..=r).map(|i| format!("y{i}")));
        Chart::new(&names)
    }

    /// Zero blocks; `A` must be set before building.
    pub fn zero(n: usize, r: usize) -> Result<WalkerSpec> {
        WalkerSpec::chart(n, r)?;
        let k = n - 2 * r;
        Ok(WalkerSpec {
            n,
            r,
            a: vec![vec![Expr::zero(); k]; k],
            h: vec![vec![Expr::zero(); r]; k],
            b: vec![vec![Expr::zero(); r]; r],
            bindings: Bindings::new(),
        })
    }

    /// Set an entry (and its mirror in `A`, `B`).
    pub fn set(&mut self, block: Block, i: usize, j: usize, e: Expr) -> Result<()> {
        let (rows, cols) = self.block_shape(block);
        if i >= rows || j >= cols {
            return Err(Error::Constraint(format!(
                "{block:?} entry ({}, {}) out of range",
                i + 1,
                j + 1
            )));
        }
        match block {
            Block::A => {
                self.a[i][j] = e.clone();
                self.a[j][i] = e;
            }
            Block::H => self.h[i][j] = e,
            Block::B => {
                self.b[i][j] = e.clone();
                self.b[j][i] = e;
            }
        }
        Ok(())
    }

    /// Parse and set an entry in the Walker chart.
    pub fn set_str(&mut self, block: Block, i: usize, j: usize, src: &str) -> Result<()> {
        let e = parse_expr(src, &WalkerSpec::chart(self.n, self.r)?)?;
        self.set(block, i, j, e)
    }

    pub fn block_shape(&self, block: Block) -> (usize, usize) {
        let k = self.n - 2 * self.r;
        match block {
            Block::A => (k, k),
            Block::H => (k, self.r),
            Block::B => (self.r, self.r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n - 2 * self.r;
        let square = |m: &Vec<Vec<Expr>>, rows: usize, cols: usize| {
            m.len() == rows && m.iter().all(|r| r.len() == cols)
        };
        if !square(&self.a, k, k) || !square(&self.h, k, self.r) || !square(&self.b, self.r, self.r)
        {
            return Err(Error::Constraint(
                "block shapes do not match n and r".into(),
            ));
        }
        for (name, m) in [("A", &self.a), ("H", &self.h)] {
            for row in m {
                for e in row {
                    if let Some(i) = (0..self.r).find(|&i| e.depends_on(i)) {
                        return Err(Error::Constraint(format!("{name} depends on x{}", i + 1)));
                    }
                }
            }
        }
        for (name, m) in [("A", &self.a), ("B", &self.b)] {
            for i in 0..m.len() {
                for j in 0..i {
                    if !(&m[i][j] - &m[j][i]).expand().is_zero() {
                        return Err(Error::Constraint(format!(
                            "{name} is not symmetric at ({}, {})",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn matrix(&self) -> Vec<Vec<Expr>> {
        let (n, r) = (self.n, self.r);
        let k = n - 2 * r;
        let mut m = vec![vec![Expr::zero(); n]; n];
        for i in 0..r {
            m[i][k + r + i] = Expr::one();
            m[k + r + i][i] = Expr::one();
        }
        for a in 0..k {
            for b in 0..k {
                m[r + a][r + b] = self.a[a][b].clone();
            }
            for j in 0..r {
                m[r + a][k + r + j] = self.h[a][j].clone();
                m[k + r + j][r + a] = self.h[a][j].clone();
            }
        }
        for i in 0..r {
            for j in 0..r {
                m[k + r + i][k + r + j] = self.b[i][j].clone();
            }
        }
        m
    }
}

/// The metric and `L = span(d/dx_1..d/dx_r)`. The signature is
/// `(r + neg(A), r + pos(A))` with the inertia of `A` read at the chart
/// centre.
pub fn build_walker(spec: &WalkerSpec) -> Result<(ChartMetric, Distribution)> {
    build_walker_in(spec, WalkerSpec::chart(spec.n, spec.r)?)
}

/// As [`build_walker`] on a chart with bounds.
pub fn build_walker_in(spec: &WalkerSpec, chart: Chart) -> Result<(ChartMetric, Distribution)> {
    spec.validate()?;
    if chart.names() != WalkerSpec::chart(spec.n, spec.r)?.names() {
        return Err(Error::Constraint(
            "chart does not use the Walker coordinates".into(),
        ));
    }
    let k = spec.n - 2 * spec.r;
    let centre = chart.center();
    let bindings = Bindings::with_builtins().merged(&spec.bindings);
    let (neg, pos) = if k == 0 {
        (0, 0)
    } else {
        let a = nalgebra::DMatrix::from_fn(k, k, |i, j| {
            spec.a[i][j]
                .evaluate(&centre, &bindings)
                .unwrap_or(f64::NAN)
        });
        let (neg, pos, zero) = linalg::inertia(&a, 1e-12);
        if zero > 0 || a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Constraint(
                "A is degenerate at the chart centre".into(),
            ));
        }
        (neg, pos)
    };
    let g = ChartMetric::new(
        chart,
        spec.matrix(),
        (spec.r + neg, spec.r + pos),
        spec.bindings.clone(),
    )?;
    Ok((
        g,
        Distribution::coordinate(spec.n, &(0..spec.r).collect::<Vec<_>>()),
    ))
}

/// Data of the pure-spinor normal form. `odd` selects signature
/// `(m+1, m)` (with the `z` coordinate) over `(m, m)`.
#[derive(Clone, Debug)]
pub struct PureWalkerSpec {
    pub m: usize,
    pub odd: bool,
    /// symmetric `m x m`
    pub g: Vec<Vec<Expr>>,
    pub bindings: Bindings,
}

impl PureWalkerSpec {
    /// `x1..xm, [z,] y1..ym`.
    pub fn chart(m: usize, odd: bool) -> Result<Chart> {
        if m == 0 {
            return Err(Error::Constraint("m must be positive".into()));
        }
        let mut names: Vec<String> = (1..=m).map(|i| format!("x{i}")).collect();
        if odd {
            names.push("z".into());
        }
        names.extend((1..=m).map(|i| format!("y{i}")));
        Chart::new(&names)
    }

    pub fn zero(m: usize, odd: bool) -> Result<PureWalkerSpec> {
        PureWalkerSpec::chart(m, odd)?;
        Ok(PureWalkerSpec {
            m,
            odd,
            g: vec![vec![Expr::zero(); m]; m],
            bindings: Bindings::new(),
        })
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) -> Result<()> {
        if i >= self.m || j >= self.m {
            return Err(Error::Constraint(format!(
                "g entry ({}, {}) out of range",
                i + 1,
                j + 1
            )));
        }
        self.g[i][j] = e.clone();
        self.g[j][i] = e;
        Ok(())
    }

    pub fn set_str(&mut self, i: usize, j: usize, src: &str) -> Result<()> {
        let e = parse_expr(src, &PureWalkerSpec::chart(self.m, self.odd)?)?;
        self.set(i, j, e)
    }

    pub fn dim(&self) -> usize {
        2 * self.m + usize::from(self.odd)
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.m + usize::from(self.odd), self.m)
    }

    fn y_index(&self, i: usize) -> usize {
        self.m + usize::from(self.odd) + i
    }

    /// Symmetry and `sum_i d g_ik / d x_i = 0`.
    pub fn validate(&self) -> Result<()> {
        let m = self.m;
        if self.g.len() != m || self.g.iter().any(|r| r.len() != m) {
            return Err(Error::Constraint("g must be m x m".into()));
        }
        for i in 0..m {
            for j in 0..i {
                if !(&self.g[i][j] - &self.g[j][i]).expand().is_zero() {
                    return Err(Error::Constraint(format!(
                        "g is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for k in 0..m {
            let div = Expr::sum((0..m).map(|i| self.g[i][k].differentiate(i)).collect());
            if !div.expand().simplify().is_zero() {
                return Err(Error::Constraint(format!(
                    "sum_i d g_i{} / d x_i does not vanish (k = {})",
                    k + 1,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    fn metric(&self, chart: Chart) -> Result<ChartMetric> {
        let n = self.dim();
        let mut h = vec![vec![Expr::zero(); n]; n];
        for i in 0..self.m {
            let yi = self.y_index(i);
            h[i][yi] = Expr::constant(-2);
            h[yi][i] = Expr::constant(-2);
            for j in 0..self.m {
                h[yi][self.y_index(j)] = Expr::constant(-4) * &self.g[i][j];
            }
        }
        if self.odd {
            h[self.m][self.m] = Expr::constant(-1);
        }
        ChartMetric::new(chart, h, self.signature(), self.bindings.clone())
    }

    /// `u_i = (X_i + Y_i)/2`, `[d/dz,]` `v_i = (X_i - Y_i)/2` with
    /// `X_i = d/dx_i` and `Y_i = d/dy_i - sum_j g_ij d/dx_j`; `Y_i` is null
    /// and `h(X_i, Y_j) = -2 delta_ij`.
    fn frame_fields(&self) -> (Vec<VectorField>, Vec<i64>) {
        let n = self.dim();
        let half = Expr::ratio(1, 2);
        let y_field = |i: usize| {
            let mut c = vec![Expr::zero(); n];
            c[self.y_index(i)] = Expr::one();
            for j in 0..self.m {
                c[j] = -self.g[i][j].clone();
            }
            c
        };
        let mut fields = Vec::new();
        let mut eps = Vec::new();
        // timelike first: u_1..u_m, then z, then v_1..v_m
        for sign in [1i64, -1] {
            if sign == -1 && self.odd {
                fields.push(VectorField::coordinate(n, self.m));
                eps.push(-1);
            }
            for i in 0..self.m {
                let mut c: Vec<Expr> = y_field(i)
                    .into_iter()
                    .map(|e| Expr::constant(sign) * e)
                    .collect();
                c[i] = &c[i] + &Expr::one();
                fields.push(VectorField::new(
                    c.iter().map(|e| (&half * e).simplify()).collect(),
                ));
                eps.push(if sign == 1 { -1 } else { 1 });
            }
        }
        (fields, eps)
    }
}

/// A pure-spinor Walker metric with its adapted frame, certified parallel
/// spinor and `L = ker phi = span(d/dx_i)`.
#[derive(Clone, Debug)]
pub struct PureWalker {
    pub spec: PureWalkerSpec,
    pub metric: ChartMetric,
    pub frame: Frame,
    pub rep: Arc<CliffordRep>,
    pub spinor: SpinorField,
    pub l: Distribution,
    pub certificate: Report,
}

/// Parallel-spinor certification tolerance.
pub const CERTIFY_TOL: f64 = 1e-7;

pub fn build_pure_walker(spec: &PureWalkerSpec, cfg: &CheckConfig) -> Result<PureWalker> {
    build_pure_walker_in(spec, PureWalkerSpec::chart(spec.m, spec.odd)?, cfg)
}

/// Builds the metric and searches the constant spinors annihilated by
/// `L = span(d/dx_i)` (exact rational kernel of the integer Clifford
/// constraints) for a parallel one; the result is certified by the
/// covariant-derivative residual at `cfg` samples.
pub fn build_pure_walker_in(
    spec: &PureWalkerSpec,
    chart: Chart,
    cfg: &CheckConfig,
) -> Result<PureWalker> {
    spec.validate()?;
    if chart.names() != PureWalkerSpec::chart(spec.m, spec.odd)?.names() {
        return Err(Error::Constraint(
            "chart does not use the pure Walker coordinates".into(),
        ));
    }
    let metric = spec.metric(chart)?;
    let (p, q) = spec.signature();
    let rep = Arc::new(CliffordRep::build(p, q)?);
    let (fields, eps) = spec.frame_fields();
    let frame = Frame::symbolic(&metric, fields, eps, 8, cfg.seed)?;
    let m = spec.m;
    // X_i = u_i + v_i in frame components
    let first_v = m + usize::from(spec.odd);
    let size = rep.spinor_dim();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for i in 0..m {
        let x = rep.gamma(i) + rep.gamma(first_v + i);
        for r in 0..size {
            rows.push(
                (0..size)
                    .map(|c| BigRational::from_integer(x[(r, c)].into()))
                    .collect(),
            );
        }
    }
    let candidates = linalg::rational_nullspace(&rows, size);
    if candidates.is_empty() {
        return Err(Error::NoParallelSpinor(f64::INFINITY));
    }
    let basis: Vec<Vec<i64>> = candidates
        .iter()
        .map(|v| integral(v))
        .collect::<Result<_>>()?;
    let coeffs = parallel_combination(&metric, &frame, &rep, &basis, cfg)?;
    let mut phi = vec![0i64; size];
    for (c, b) in coeffs.iter().zip(&basis) {
        for (k, x) in b.iter().enumerate() {
            phi[k] += c * x;
        }
    }
    let chirality = if rep.has_chirality() {
        let twice_plus = rep.half_project_twice(Chirality::Plus, &phi);
        if twice_plus.iter().zip(&phi).all(|(a, b)| *a == 2 * b) {
            Chirality::Plus
        } else if twice_plus.iter().all(|a| *a == 0) {
            Chirality::Minus
        } else {
            Chirality::Full
        }
    } else {
        Chirality::Full
    };
    let spinor = SpinorField::constant(rep.clone(), &phi, chirality)?;
    let certificate = check_parallel_spinor(&metric, &frame, &spinor, &cfg.with_tol(CERTIFY_TOL))?;
    if !certificate.passed {
        return Err(Error::NoParallelSpinor(certificate.max_residual));
    }
    let l = Distribution::coordinate(spec.dim(), &(0..m).collect::<Vec<_>>());
    Ok(PureWalker {
        spec: spec.clone(),
        metric,
        frame,
        rep,
        spinor,
        l,
        certificate,
    })
}

/// Scale a rational vector to coprime integers.
fn integral(v: &[BigRational]) -> Result<Vec<i64>> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v
        .iter()
        .map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if gcd.is_zero() { x.clone() } else { x / &gcd };
            i64::try_from(y.abs())
                .map(|a| if y.is_negative() { -a } else { a })
                .map_err(|_| Error::Inconsistent("spinor entries overflow".into()))
        })
        .collect()
}

/// Integer coefficients `c` with `sum c_k basis_k` parallel, from the
/// numerical kernel of the stacked spin connection matrices.
fn parallel_combination(
    g: &ChartMetric,
    frame: &Frame,
    rep: &CliffordRep,
    basis: &[Vec<i64>],
    cfg: &CheckConfig,
) -> Result<Vec<i64>> {
    let b = nalgebra::DMatrix::from_columns(
        &basis
            .iter()
            .map(|v| DVector::from_iterator(v.len(), v.iter().map(|&x| x as f64)))
            .collect::<Vec<_>>(),
    );
    if basis.len() == 1 {
        return Ok(vec![1]);
    }
    let mut blocks = Vec::new();
    for p in sample_points(g.chart(), cfg.samples.min(16), cfg.seed, 0.0) {
        let local = SpinLocal::at(g, frame, rep, &p)?;
        for a in &local.spin {
            blocks.push(a * &b);
        }
    }
    let rows: usize = blocks.iter().map(|m| m.nrows()).sum();
    let mut stacked = nalgebra::DMatrix::zeros(rows, basis.len());
    let mut at = 0;
    for m in blocks {
        stacked.rows_mut(at, m.nrows()).copy_from(&m);
        at += m.nrows();
    }
    let (kernel, _, dropped) = linalg::nullspace_with_gap(&stacked, RANK_TOL);
    if kernel.ncols() == 0 {
        let smallest = stacked
            .singular_values()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        return Err(Error::NoParallelSpinor(smallest.max(dropped)));
    }
    // prefer a combination with small integer coefficients
    let c = kernel.column(0);
    let scale = c
        .iter()
        .cloned()
        .fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    Ok(c.iter().map(|x| (x / scale * 1e6).round() as i64).collect())
}

/// Parallel `L`, `Ric(TM)` inside `L`, and `scal = 0`.
pub fn validate_ricci_isotropic(
    g: &ChartMetric,
    l: &Distribution,
    cfg: &CheckConfig,
) -> Result<Report> {
    let parts = [
        check_distribution_parallel(g, l, cfg)?,
        check_ricci_image(g, l, cfg)?,
        check_scalar_flat(g, cfg)?,
    ];
    Ok(Report::combine("ricci_isotropic", &parts))
}
