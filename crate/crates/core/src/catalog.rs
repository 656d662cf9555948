//! The shipped example corpus (`corpus/*.metric`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metricfile::{MetricFile, MetricSource};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Example {
    pub name: &'static str,
    pub signature: (usize, usize),
    pub description: &'static str,
    /// Which results the example witnesses.
    pub witnesses: &'static [&'static str],
    #[serde(skip)]
    pub source: &'static str,
}

const T1: &[&str] = &["Theorem 1", "scal = 0 lemma"];
const T12: &[&str] = &["Theorem 1", "scal = 0 lemma", "Theorem 2"];

pub const EXAMPLES: &[Example] = &[
    Example {
        name: "flat22",
        signature: (2, 2),
        description: "flat R^{2,2}",
        witnesses: &["trivial holonomy"],
        source: include_str!("../corpus/flat22.metric"),
    },
    Example {
        name: "flat32",
        signature: (3, 2),
        description: "flat R^{3,2} with a non-parallel twistor spinor",
        witnesses: &["twistor equation"],
        source: include_str!("../corpus/flat32.metric"),
    },
    Example {
        name: "sphere3",
        signature: (0, 3),
        description: "round S^3, Einstein with Ric = 2g",
        witnesses: &["curvature"],
        source: include_str!("../corpus/sphere3.metric"),
    },
    Example {
        name: "ppwave3",
        signature: (1, 2),
        description: "pp-wave, Walker r = 1",
        witnesses: T1,
        source: include_str!("../corpus/ppwave3.metric"),
    },
    Example {
        name: "walker_r1",
        signature: (2, 2),
        description: "Ricci-isotropic Walker metric, r = 1",
        witnesses: T1,
        source: include_str!("../corpus/walker_r1.metric"),
    },
    Example {
        name: "walker_r2",
        signature: (3, 3),
        description: "Ricci-isotropic Walker metric, r = 2",
        witnesses: T1,
        source: include_str!("../corpus/walker_r2.metric"),
    },
    Example {
        name: "walker_r2_h",
        signature: (2, 3),
        description: "Ricci-isotropic Walker metric with H block, r = 2",
        witnesses: T1,
        source: include_str!("../corpus/walker_r2_h.metric"),
    },
    Example {
        name: "walker_r3",
        signature: (3, 3),
        description: "Ricci-isotropic Walker metric, r = 3, n = 6",
        witnesses: T1,
        source: include_str!("../corpus/walker_r3.metric"),
    },
    Example {
        name: "walker_r3_odd",
        signature: (3, 4),
        description: "Ricci-isotropic Walker metric, r = 3, n = 7",
        witnesses: T1,
        source: include_str!("../corpus/walker_r3_odd.metric"),
    },
    Example {
        name: "pure_m1",
        signature: (2, 1),
        description: "pure-spinor Walker metric, m = 1",
        witnesses: T1,
        source: include_str!("../corpus/pure_m1.metric"),
    },
    Example {
        name: "pure_m2_odd",
        signature: (3, 2),
        description: "pure-spinor Walker metric, m = 2, kernel rank 3",
        witnesses: T12,
        source: include_str!("../corpus/pure_m2_odd.metric"),
    },
    Example {
        name: "pure_m2_split",
        signature: (2, 2),
        description: "pure-spinor Walker metric, m = 2 without z, kernel rank 3",
        witnesses: T12,
        source: include_str!("../corpus/pure_m2_split.metric"),
    },
    Example {
        name: "pure_m3_split",
        signature: (3, 3),
        description: "pure-spinor Walker metric, m = 3 without z, kernel rank 4",
        witnesses: T12,
        source: include_str!("../corpus/pure_m3_split.metric"),
    },
];

pub fn example(name: &str) -> Result<&'static Example> {
    EXAMPLES
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Inconsistent(format!("unknown example `{name}`")))
}

impl Example {
    pub fn file(&self) -> Result<MetricFile> {
        MetricFile::parse(self.source)
    }

    /// Walker rank `r` (or `m` for pure Walker metrics).
    pub fn walker_rank(&self) -> Option<usize> {
        match self.file().ok()?.source {
            MetricSource::Walker(w) => Some(w.r),
            MetricSource::PureWalker(w) => Some(w.m),
            MetricSource::Explicit { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CheckConfig;

    #[test]
    fn entries_load_with_their_signatures() {
        let cfg = CheckConfig {
            samples: 8,
            ..CheckConfig::default()
        };
        for e in EXAMPLES {
            let f = e.file().unwrap();
            let again = MetricFile::parse(&f.to_text().unwrap()).unwrap();
            assert_eq!(again.to_text().unwrap(), f.to_text().unwrap(), "{}", e.name);
            let l = again
                .load(&cfg)
                .unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(l.metric.signature(), e.signature, "{}", e.name);
        }
    }

    #[test]
    fn corpus_covers_the_theorems() {
        for s in [(2, 2), (3, 2), (3, 3)] {
            assert!(EXAMPLES
                .iter()
                .any(|e| e.signature == s && e.witnesses.contains(&"Theorem 2")));
        }
        for r in 1..=3 {
            assert!(EXAMPLES.iter().any(|e| e.walker_rank() == Some(r)));
        }
    }
}
