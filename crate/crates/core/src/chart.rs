//! Coordinate charts and points.

use crate::error::{Error, Result};
use crate::expr::MAX_COORDS;

/// Sampling box used for coordinates without declared bounds.
pub const DEFAULT_BOX: (f64, f64) = (-1.0, 1.0);

/// A point is just its coordinate values, in chart order.
pub type Point = Vec<f64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    bounds: Vec<Option<(f64, f64)>>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Chart> {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        if names.len() > MAX_COORDS {
            return Err(Error::Inconsistent(format!(
                "at most {MAX_COORDS} coordinates are supported"
            )));
        }
        for (i, n) in names.iter().enumerate() {
            if !is_identifier(n) || n == "exp" || n.contains("__") {
                return Err(Error::Inconsistent(format!(
                    "invalid coordinate name `{n}`"
                )));
            }
            if names[..i].contains(n) {
                return Err(Error::Inconsistent(format!("duplicate coordinate `{n}`")));
            }
        }
        let bounds = vec![None; names.len()];
        Ok(Chart { names, bounds })
    }

    /// Chart with coordinates `prefix1 .. prefixN`.
    pub fn numbered(prefix: &str, n: usize) -> Chart {
        let names: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
        Chart::new(&names).expect("numbered names are valid")
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coord_index(&self, name: &str) -> Result<usize> {
        self.index_of(name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    pub fn set_bounds(&mut self, i: usize, lo: f64, hi: f64) -> Result<()> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Inconsistent(format!(
                "bad bounds [{lo}, {hi}] for `{}`",
                self.names[i]
            )));
        }
        self.bounds[i] = Some((lo, hi));
        Ok(())
    }

    pub fn with_bounds(mut self, lo: f64, hi: f64) -> Result<Chart> {
        for i in 0..self.dim() {
            self.set_bounds(i, lo, hi)?;
        }
        Ok(self)
    }

    pub fn bounds(&self, i: usize) -> Option<(f64, f64)> {
        self.bounds[i]
    }

    /// Declared bounds, or [`DEFAULT_BOX`].
    pub fn sampling_box(&self, i: usize) -> (f64, f64) {
        self.bounds[i].unwrap_or(DEFAULT_BOX)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.bounds).all(|(x, b)| match b {
                Some((lo, hi)) => *lo <= *x && *x <= *hi,
                None => x.is_finite(),
            })
    }

    pub fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutOfBounds { point: p.to_vec() });
        }
        Ok(())
    }

    /// Center of the sampling box.
    pub fn center(&self) -> Point {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.sampling_box(i);
                0.5 * (lo + hi)
            })
            .collect()
    }
}
