//! Curvature engine on a chart.

mod checks;
mod curvature;
mod fields;
mod metric;
mod poincare;
mod transport;

use nalgebra::{DMatrix, DVector};

pub use checks::{
    check_distribution_parallel, check_integrable, check_lightlike, check_ricci_image,
    check_scalar_flat, check_schouten_image, CheckConfig,
};
pub use curvature::{CurvatureBundle, InverseKind, PointConnection, PointGeometry};
pub use fields::{
    covariant_derivative, Distribution, FieldJetValues, FieldJets, OneForm, VectorField,
};
pub use metric::{ChartMetric, MetricJet, SIGNATURE_TOL};
pub use poincare::{poincare_potential, PoincareConfig, Potential};
pub use transport::{
    parallel_transport_vector, parallel_transport_vector_polyline, transport_linear,
    transport_polyline, Curve, FnCurve, Polyline, Segment, DEFAULT_STEP,
};

use crate::error::Result;
use crate::expr::Expr;

/// `e^{2 sigma} g`.
pub fn conformal_rescale(g: &ChartMetric, sigma: &Expr) -> Result<ChartMetric> {
    g.conformal_rescale(sigma)
}

/// Christoffel symbols of `e^{2 sigma} g` from those of `g` via
/// `nabla~_B A = nabla_B A + d sigma(B) A + d sigma(A) B - g(A, B) grad sigma`.
pub fn rescaled_christoffel(conn: &PointConnection, dsigma: &[f64]) -> Vec<DMatrix<f64>> {
    let n = conn.dim();
    let ds = DVector::from_column_slice(dsigma);
    let grad = &conn.ginv * &ds;
    (0..n)
        .map(|k| {
            let mut m = conn.gamma[k].clone();
            for i in 0..n {
                for j in 0..n {
                    let mut extra = -conn.g[(i, j)] * grad[k];
                    if k == j {
                        extra += ds[i];
                    }
                    if k == i {
                        extra += ds[j];
                    }
                    m[(i, j)] += extra;
                }
            }
            m
        })
        .collect()
}
