//! Holonomy samples: transport of the full tractor frame around small loops.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::{gram_matrix, tractor_transport_matrix_polyline};
use crate::chart::Point;
use crate::error::{Error, Result};
use crate::geometry::{ChartMetric, Polyline, DEFAULT_STEP};

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyConfig {
    /// Side of the coordinate-plane rectangles.
    pub eps: f64,
    pub step: f64,
    /// Skip the rectangles and use only `extra` loops.
    pub no_rectangles: bool,
    /// Further closed polylines starting at the base point.
    pub extra: Vec<Polyline>,
}

impl Default for HolonomyConfig {
    fn default() -> Self {
        HolonomyConfig {
            eps: 0.1,
            step: DEFAULT_STEP,
            no_rectangles: false,
            extra: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolonomyLoop {
    pub loop_id: String,
    /// `t(end) = matrix * t(start)` in the splitting `(alpha, Y, beta)` at the base.
    pub matrix: DMatrix<f64>,
    /// `max |M^T G M - G|`.
    pub gram_residual: f64,
}

impl Serialize for HolonomyLoop {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = self
            .matrix
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect();
        let mut st = s.serialize_struct("HolonomyLoop", 3)?;
        st.serialize_field("loop_id", &self.loop_id)?;
        st.serialize_field("matrix", &rows)?;
        st.serialize_field("gram_residual", &self.gram_residual)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomySample {
    pub base: Point,
    pub gauge: u64,
    pub loops: Vec<HolonomyLoop>,
}

impl HolonomySample {
    pub fn max_gram_residual(&self) -> f64 {
        self.loops
            .iter()
            .map(|l| l.gram_residual)
            .fold(0.0, f64::max)
    }

    /// Largest `max |M - I|` over the loops.
    pub fn max_identity_deviation(&self) -> f64 {
        self.loops
            .iter()
            .map(|l| {
                let k = l.matrix.nrows();
                (&l.matrix - DMatrix::identity(k, k)).abs().max()
            })
            .fold(0.0, f64::max)
    }
}

/// Transport the `(n+2)`-frame around every loop of `cfg` based at `base`.
/// Loops run in parallel.
pub fn holonomy_sample(
    g: &ChartMetric,
    base: &[f64],
    cfg: &HolonomyConfig,
) -> Result<HolonomySample> {
    let n = g.dim();
    if base.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: base.len(),
        });
    }
    let mut loops: Vec<(String, Polyline)> = Vec::new();
    if !cfg.no_rectangles {
        for i in 0..n {
            for j in (i + 1)..n {
                let id = format!("rect({},{})", g.chart().name(i), g.chart().name(j));
                loops.push((id, Polyline::rectangle(base, i, j, cfg.eps)));
            }
        }
    }
    for (k, p) in cfg.extra.iter().enumerate() {
        if !p.is_closed() || p.vertices.first().map(|v| v.as_slice()) != Some(base) {
            return Err(Error::Inconsistent(format!(
                "loop {k} is not a closed polyline at the base point"
            )));
        }
        loops.push((format!("poly{k}"), p.clone()));
    }
    let gram = gram_matrix(&g.check_signature(base)?);
    let results: Vec<Result<HolonomyLoop>> = loops
        .par_iter()
        .map(|(id, path)| {
            let m = tractor_transport_matrix_polyline(g, path, cfg.step)?;
            let gram_residual = (m.transpose() * &gram * &m - &gram).abs().max();
            Ok(HolonomyLoop {
                loop_id: id.clone(),
                matrix: m,
                gram_residual,
            })
        })
        .collect();
    Ok(HolonomySample {
        base: base.to_vec(),
        gauge: g.gauge_id(),
        loops: results.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_holonomy_is_trivial() {
        let g = ChartMetric::flat(1, 2);
        let s = holonomy_sample(&g, &[0.1, -0.2, 0.3], &HolonomyConfig::default()).unwrap();
        assert_eq!(s.loops.len(), 3);
        assert!(s.max_identity_deviation() < 1e-8);
        assert!(s.max_gram_residual() < 1e-12);
    }

    #[test]
    fn open_extra_loop_is_rejected() {
        let g = ChartMetric::flat(0, 3);
        let cfg = HolonomyConfig {
            extra: vec![Polyline::new(vec![vec![0.0; 3], vec![0.1, 0.0, 0.0]])],
            ..Default::default()
        };
        assert!(holonomy_sample(&g, &[0.0; 3], &cfg).is_err());
    }

    #[test]
    fn export_is_row_major() {
        let l = HolonomyLoop {
            loop_id: "a".into(),
            matrix: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            gram_residual: 0.0,
        };
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["matrix"], serde_json::json!([[1.0, 2.0], [3.0, 4.0]]));
    }
}
