//! Spinor fields in a pseudo-orthonormal frame, the spinor covariant
//! derivative, the Dirac and twistor operators, and spin tractors.
//!
//! In a frame `e_i` with signs `eps_i` the spin connection acts by
//! `nabla_X phi = X(phi) + 1/2 sum_{i<j} eps_i eps_j g(nabla_X e_i, e_j) e_i e_j phi`
//! and `D phi = sum_i eps_i e_i . nabla_{e_i} phi`.

mod frame;
mod tractor;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use frame::{build_frame, Frame, FrameJet, FRAME_TOL, PIVOT_TOL};
pub use tractor::{
    ker_phi, kernel_distribution, spin_tractor_connection_apply, spin_tractor_parallel_residual,
    tangent_part_of_kernel, twistor_to_tractor, KernelSample, SpinTractor, SpinTractorAlgebra,
    SpinTractorField,
};

use crate::clifford::{Chirality, CliffordRep};
use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::geometry::{ChartMetric, CheckConfig, FieldJets, PointConnection, VectorField};
use crate::report::{par_outcomes, sample_points, Outcome, Report};

/// Finite-difference step for derivatives of numerically defined spinors.
pub const FD_STEP: f64 = 1e-3;

/// `N` component functions in the frame of some [`Frame`].
#[derive(Clone)]
pub struct SpinorField {
    rep: Arc<CliffordRep>,
    components: Vec<Expr>,
    chirality: Chirality,
    jets: Arc<FieldJets>,
}

impl std::fmt::Debug for SpinorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpinorField")
            .field("rep", &self.rep.rep_id())
            .field("components", &self.components)
            .field("chirality", &self.chirality)
            .finish()
    }
}

impl SpinorField {
    pub fn new(
        rep: Arc<CliffordRep>,
        components: Vec<Expr>,
        chirality: Chirality,
        bindings: &Bindings,
    ) -> Result<SpinorField> {
        if components.len() != rep.spinor_dim() {
            return Err(Error::Dimension {
                expected: rep.spinor_dim(),
                got: components.len(),
            });
        }
        rep.half_projector(chirality)?;
        let jets =
            FieldJets::from_components(&[&components], rep.spinor_dim(), rep.dim(), bindings)?;
        Ok(SpinorField {
            rep,
            components,
            chirality,
            jets: Arc::new(jets),
        })
    }

    /// Constant components.
    pub fn constant(
        rep: Arc<CliffordRep>,
        values: &[i64],
        chirality: Chirality,
    ) -> Result<SpinorField> {
        let comps = values.iter().map(|&v| Expr::constant(v)).collect();
        SpinorField::new(rep, comps, chirality, &Bindings::new())
    }

    /// `x . v` for the position vector `x^i e_i` (frame components equal to
    /// the coordinates) and a constant spinor `v`.
    pub fn position_times(rep: Arc<CliffordRep>, v: &[i64]) -> Result<SpinorField> {
        let n = rep.dim();
        let size = rep.spinor_dim();
        let mut comps = vec![Vec::new(); size];
        for i in 0..n {
            let gv = rep.mul_exact(&unit_i64(n, i), v);
            for (r, c) in gv.iter().enumerate() {
                if *c != 0 {
                    comps[r].push(Expr::constant(*c) * Expr::coord(i));
                }
            }
        }
        let comps = comps.into_iter().map(Expr::sum).collect();
        SpinorField::new(rep, comps, Chirality::Full, &Bindings::new())
    }

    pub fn rep(&self) -> &Arc<CliffordRep> {
        &self.rep
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        Ok(self.jets.eval(p)?.values.remove(0))
    }

    /// Value and coordinate derivatives.
    pub fn jet(&self, p: &[f64]) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        let mut v = self.jets.eval(p)?;
        Ok((v.values.remove(0), v.derivs.remove(0)))
    }

    /// `f . phi` for a scalar expression `f`.
    pub fn scale(&self, f: &Expr, bindings: &Bindings) -> Result<SpinorField> {
        let comps = self.components.iter().map(|c| f * c).collect();
        SpinorField::new(self.rep.clone(), comps, self.chirality, bindings)
    }

    /// Componentwise sum.
    pub fn add(&self, other: &SpinorField, bindings: &Bindings) -> Result<SpinorField> {
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a + b)
            .collect();
        let chirality = if self.chirality == other.chirality {
            self.chirality
        } else {
            Chirality::Full
        };
        SpinorField::new(self.rep.clone(), comps, chirality, bindings)
    }
}

fn unit_i64(n: usize, i: usize) -> Vec<i64> {
    (0..n).map(|k| i64::from(k == i)).collect()
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })
}

/// Frame, connection and spin connection matrices at one point.
pub struct SpinLocal {
    pub conn: PointConnection,
    pub e: DMatrix<f64>,
    pub einv: DMatrix<f64>,
    /// `coord_gammas[m]` is Clifford multiplication by `d/dx^m`.
    pub coord_gammas: Vec<DMatrix<f64>>,
    /// `spin[m]`: `nabla_{d_m} phi = d_m phi + spin[m] phi`.
    pub spin: Vec<DMatrix<f64>>,
}

impl SpinLocal {
    pub fn at(g: &ChartMetric, frame: &Frame, rep: &CliffordRep, p: &[f64]) -> Result<SpinLocal> {
        let conn = g.connection_at(p)?;
        SpinLocal::with_connection(conn, frame, rep, p)
    }

    pub fn with_connection(
        conn: PointConnection,
        frame: &Frame,
        rep: &CliffordRep,
        p: &[f64],
    ) -> Result<SpinLocal> {
        let n = rep.dim();
        if frame.eps() != rep.eps() {
            return Err(Error::Inconsistent(format!(
                "frame signs {:?} do not match the Clifford signs {:?}",
                frame.eps(),
                rep.eps()
            )));
        }
        let jet = frame.jet(p)?;
        let einv = jet
            .e
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::FrameBreakdown {
                point: p.to_vec(),
                pivot: 0.0,
            })?;
        let gammas = rep.gammas_f64();
        let size = rep.spinor_dim();
        let coord_gammas = (0..n)
            .map(|m| {
                let mut out = DMatrix::zeros(size, size);
                for i in 0..n {
                    let c = einv[(i, m)];
                    if c != 0.0 {
                        out += &gammas[i] * c;
                    }
                }
                out
            })
            .collect();
        let eps = rep.eps();
        let mut spin = Vec::with_capacity(n);
        for m in 0..n {
            let x = unit(n, m);
            // nabla_{d_m} e_i as columns
            let cols: Vec<DVector<f64>> = (0..n)
                .map(|i| {
                    jet.de[m].column(i).into_owned()
                        + conn.gamma_apply(&x, &jet.e.column(i).into_owned())
                })
                .collect();
            let mut a = DMatrix::zeros(size, size);
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = conn.inner(&cols[i], &jet.e.column(j).into_owned());
                    if w != 0.0 {
                        a += &gammas[i] * &gammas[j] * (0.5 * (eps[i] * eps[j]) as f64 * w);
                    }
                }
            }
            spin.push(a);
        }
        Ok(SpinLocal {
            conn,
            e: jet.e,
            einv,
            coord_gammas,
            spin,
        })
    }

    /// Clifford multiplication by a vector given in coordinate components.
    pub fn clifford(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let size = self.spin[0].nrows();
        let mut out = DMatrix::zeros(size, size);
        for (m, g) in self.coord_gammas.iter().enumerate() {
            if x[m] != 0.0 {
                out += g * x[m];
            }
        }
        out
    }

    /// `nabla_{d_m} phi` for every coordinate direction.
    pub fn nabla(&self, phi: &DVector<f64>, dphi: &[DVector<f64>]) -> Vec<DVector<f64>> {
        dphi.iter()
            .zip(&self.spin)
            .map(|(d, a)| d + a * phi)
            .collect()
    }

    /// `D phi = sum_i eps_i e_i . nabla_{e_i} phi`, given `nabla_{d_m} phi`.
    pub fn dirac(&self, rep: &CliffordRep, nabla: &[DVector<f64>]) -> DVector<f64> {
        let n = nabla.len();
        let mut out = DVector::zeros(nabla[0].len());
        for i in 0..n {
            let mut along = DVector::zeros(out.len());
            for (m, nm) in nabla.iter().enumerate() {
                let c = self.e[(m, i)];
                if c != 0.0 {
                    along += nm * c;
                }
            }
            out += rep.gamma_f64(i) * along * rep.eps()[i] as f64;
        }
        out
    }
}

/// `nabla_X phi` at `p`.
pub fn spinor_covariant_derivative(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    x: &VectorField,
    p: &[f64],
) -> Result<DVector<f64>> {
    let local = SpinLocal::at(g, frame, &phi.rep, p)?;
    let (v, dv) = phi.jet(p)?;
    let xv = x.eval(p, g.bindings())?;
    let nab = local.nabla(&v, &dv);
    Ok(nab
        .iter()
        .zip(xv.iter())
        .fold(DVector::zeros(v.len()), |acc, (d, c)| acc + d * *c))
}

/// `nabla_{d_m} f` for a spinor-valued function known only pointwise, with
/// `d_m f` from a five-point stencil.
pub fn covariant_derivative_fd<F>(
    local: &SpinLocal,
    f: F,
    p: &[f64],
    m: usize,
) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>>,
{
    let f0 = f(p)?;
    let mut d = DVector::zeros(f0.len());
    for (offset, weight) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
        let mut q = p.to_vec();
        q[m] += offset * FD_STEP;
        d += f(&q)? * (weight / (12.0 * FD_STEP));
    }
    Ok(d + &local.spin[m] * f0)
}

/// `D phi` at `p`.
pub fn dirac(g: &ChartMetric, frame: &Frame, phi: &SpinorField, p: &[f64]) -> Result<DVector<f64>> {
    let local = SpinLocal::at(g, frame, &phi.rep, p)?;
    let (v, dv) = phi.jet(p)?;
    Ok(local.dirac(&phi.rep, &local.nabla(&v, &dv)))
}

/// Largest frame-component norm of `nabla_{d_m} phi + (1/n) d_m . D phi`.
pub fn twistor_residual_at(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    p: &[f64],
) -> Result<f64> {
    let local = SpinLocal::at(g, frame, &phi.rep, p)?;
    let (v, dv) = phi.jet(p)?;
    let nab = local.nabla(&v, &dv);
    let d = local.dirac(&phi.rep, &nab);
    let n = g.dim() as f64;
    Ok(nab
        .iter()
        .zip(&local.coord_gammas)
        .map(|(nm, gm)| (nm + gm * &d / n).norm())
        .fold(0.0, f64::max))
}

fn singular_on_breakdown(r: Result<f64>) -> Result<Outcome> {
    match r {
        Ok(x) => Ok(Outcome::Residual(x)),
        Err(Error::FrameBreakdown { .. }) | Err(Error::Signature { .. }) => Ok(Outcome::Singular),
        Err(e) => Err(e),
    }
}

/// Twistor-equation residual at seeded sample points.
pub fn check_twistor(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    cfg: &CheckConfig,
) -> Result<Report> {
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let outcomes = par_outcomes(&points, |p| {
        singular_on_breakdown(twistor_residual_at(g, frame, phi, p))
    })?;
    Ok(Report::from_outcomes("twistor", cfg.tol, outcomes).with_extra("rep_id", phi.rep.rep_id()))
}

/// Largest `|nabla_{d_m} phi|`; zero for parallel spinors.
pub fn check_parallel_spinor(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    cfg: &CheckConfig,
) -> Result<Report> {
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let outcomes = par_outcomes(&points, |p| {
        singular_on_breakdown((|| {
            let local = SpinLocal::at(g, frame, &phi.rep, p)?;
            let (v, dv) = phi.jet(p)?;
            Ok(local
                .nabla(&v, &dv)
                .iter()
                .map(|x| x.norm())
                .fold(0.0, f64::max))
        })())
    })?;
    Ok(Report::from_outcomes("parallel_spinor", cfg.tol, outcomes)
        .with_extra("rep_id", phi.rep.rep_id()))
}

/// Largest `|Ric(d_m) . phi|`.
pub fn check_ricci_annihilates(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    cfg: &CheckConfig,
) -> Result<Report> {
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let n = g.dim();
    let outcomes = par_outcomes(&points, |p| {
        singular_on_breakdown((|| {
            let geo = g.geometry_at(p)?;
            let local = SpinLocal::with_connection(geo.conn.clone(), frame, &phi.rep, p)?;
            let v = phi.eval(p)?;
            Ok((0..n)
                .map(|m| (local.clifford(&geo.ricci_sharp(&unit(n, m))) * &v).norm())
                .fold(0.0, f64::max))
        })())
    })?;
    Ok(Report::from_outcomes(
        "ricci_annihilates",
        cfg.tol,
        outcomes,
    ))
}

/// Sampled values of `<phi, D phi>`.
#[derive(Clone, Debug, Serialize)]
pub struct DInvariant {
    pub min: f64,
    pub max: f64,
    pub constant: bool,
    pub report: Report,
}

/// Samples `<phi, D phi>`; `constant` when `max - min < 1e-6`. The report's
/// residual is `max |<phi, D phi>|`, so it passes when `d` vanishes within
/// `cfg.tol`.
pub fn d_invariant(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    cfg: &CheckConfig,
) -> Result<DInvariant> {
    let points = sample_points(g.chart(), cfg.samples, cfg.seed, 0.0);
    let values: Vec<(Vec<f64>, Option<f64>)> = par_outcomes(&points, |p| {
        singular_on_breakdown((|| {
            let d = dirac(g, frame, phi, p)?;
            Ok(phi.rep.pairing(&phi.eval(p)?, &d))
        })())
    })?
    .into_iter()
    .map(|(p, o)| match o {
        Outcome::Residual(x) => (p, Some(x)),
        Outcome::Singular => (p, None),
    })
    .collect();
    let vals: Vec<f64> = values.iter().filter_map(|(_, v)| *v).collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let outcomes = values
        .into_iter()
        .map(|(p, v)| {
            (
                p,
                v.map_or(Outcome::Singular, |x| Outcome::Residual(x.abs())),
            )
        })
        .collect();
    let constant = !vals.is_empty() && max - min < 1e-6;
    let report = Report::from_outcomes("d_invariant", cfg.tol, outcomes)
        .with_extra("min", min)
        .with_extra("max", max)
        .with_extra("constant", constant)
        .with_extra(
            "pairing",
            serde_json::to_value(phi.rep.pairing_kind()).expect("serializes"),
        );
    Ok(DInvariant {
        min,
        max,
        constant,
        report,
    })
}

/// A spinor field moved to the gauge `e^{2 sigma} g`.
#[derive(Clone, Debug)]
pub struct RescaledSpinor {
    pub metric: ChartMetric,
    pub frame: Frame,
    pub phi: SpinorField,
}

/// `e^{sigma/2} phi` read in the frame `e^{-sigma} e_i` of `e^{2 sigma} g`.
pub fn conformal_rescale_spinor(
    g: &ChartMetric,
    frame: &Frame,
    phi: &SpinorField,
    sigma: &Expr,
) -> Result<RescaledSpinor> {
    let metric = g.conformal_rescale(sigma)?;
    let frame = frame.conformal_rescale(&metric, sigma)?;
    let factor = (Expr::ratio(1, 2) * sigma).exp();
    let phi = phi.scale(&factor, metric.bindings())?;
    Ok(RescaledSpinor { metric, frame, phi })
}
