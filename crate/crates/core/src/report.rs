//! Check reports and sample-point generation shared by all sampled checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Result of a sampled check: `{check, samples, max_residual, failures}` plus
/// the points that were excluded as singular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub tolerance: f64,
    pub max_residual: f64,
    pub failures: Vec<Failure>,
    pub singular_points: Vec<Vec<f64>>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

/// Per-point result of a residual computation.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Residual(f64),
    /// The point lies in the singular set (rank drop, degenerate frame, ...).
    Singular,
}

impl Report {
    pub fn from_outcomes(check: &str, tolerance: f64, outcomes: Vec<(Point, Outcome)>) -> Report {
        let samples = outcomes.len();
        let mut max_residual: f64 = 0.0;
        let mut failures = Vec::new();
        let mut singular_points = Vec::new();
        for (p, o) in outcomes {
            match o {
                Outcome::Residual(r) => {
                    // NaN counts as failure
                    if !(r <= tolerance) {
                        failures.push(Failure {
                            point: p,
                            residual: r,
                        });
                    }
                    max_residual = if r.is_nan() {
                        f64::NAN
                    } else {
                        max_residual.max(r)
                    };
                }
                Outcome::Singular => singular_points.push(p),
            }
        }
        let regular = samples - singular_points.len();
        Report {
            check: check.to_string(),
            samples,
            tolerance,
            max_residual,
            passed: failures.is_empty() && regular > 0,
            failures,
            singular_points,
            extra: Map::new(),
        }
    }

    /// A single-valued report (no sampling).
    pub fn single(check: &str, tolerance: f64, residual: f64) -> Report {
        Report::from_outcomes(
            check,
            tolerance,
            vec![(Vec::new(), Outcome::Residual(residual))],
        )
    }

    pub fn with_extra(mut self, key: &str, value: impl Into<Value>) -> Report {
        self.extra.insert(key.to_string(), value.into());
        self
    }

    /// Conjunction of several reports under a new name.
    pub fn combine(check: &str, parts: &[Report]) -> Report {
        let mut out = Report {
            check: check.to_string(),
            samples: parts.iter().map(|r| r.samples).max().unwrap_or(0),
            tolerance: parts.iter().map(|r| r.tolerance).fold(0.0, f64::max),
            max_residual: parts.iter().map(|r| r.max_residual).fold(0.0, f64::max),
            failures: Vec::new(),
            singular_points: Vec::new(),
            passed: !parts.is_empty() && parts.iter().all(|r| r.passed),
            extra: Map::new(),
        };
        for r in parts {
            out.failures.extend(r.failures.iter().cloned());
            for s in &r.singular_points {
                if !out.singular_points.contains(s) {
                    out.singular_points.push(s.clone());
                }
            }
        }
        out.extra.insert(
            "parts".into(),
            Value::Array(
                parts
                    .iter()
                    .map(|r| serde_json::to_value(r).expect("report serializes"))
                    .collect(),
            ),
        );
        out
    }

    /// Errors if every sample was singular.
    pub fn require_regular(self) -> Result<Report> {
        if self.samples > 0 && self.singular_points.len() == self.samples {
            return Err(Error::RankDeficient {
                point: self.singular_points[0].clone(),
                expected: 1,
                found: 0,
            });
        }
        Ok(self)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `count` points drawn uniformly from the chart's sampling box, shrunk by
/// `margin` on each side so finite-difference stencils stay inside.
pub fn sample_points(chart: &Chart, count: usize, seed: u64, margin: f64) -> Vec<Point> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            (0..chart.dim())
                .map(|i| {
                    let (lo, hi) = chart.sampling_box(i);
                    let pad = margin.min(0.25 * (hi - lo));
                    r.gen_range(lo + pad..=hi - pad)
                })
                .collect()
        })
        .collect()
}

/// Evaluate `f` at every point in parallel, keeping input order. Errors
/// propagate (first in point order).
pub fn par_outcomes<F>(points: &[Point], f: F) -> Result<Vec<(Point, Outcome)>>
where
    F: Fn(&[f64]) -> Result<Outcome> + Sync,
{
    let results: Vec<Result<Outcome>> = points.par_iter().map(|p| f(p)).collect();
    let mut out = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(results) {
        out.push((p.clone(), r?));
    }
    Ok(out)
}
