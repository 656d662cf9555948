//! The line-oriented metric file format.
//!
//! Statements end with `;` and may span lines; `#` starts a comment.
//!
//! ```text
//! chart x1 x2 x3 ;
//! signature 1 2 ;
//! g 1 3 = 1 ;                  # indices or coordinate names
//! g x2 x2 = 1 + x1^2 ;
//! walker 4 1 A(1,1) = 1, A(2,2) = 1, B(1,1) = z1^2 - z2^2 ;
//! pure_walker 2 odd g(1,1) = x2*y1 + z^2, g(1,2) = -x1*y1 ;
//! spinor plus 1, 0, x1, 0 ;
//! bounds x1 -0.5 0.5 ;
//! ```
//!
//! Unset metric entries are zero and `g i j` fills `g j i`. A file has
//! exactly one of a `chart`/`signature`/`g` block, a `walker` stanza or a
//! `pure_walker` stanza. Errors carry the line the statement starts on.

use std::fmt::Write;
use std::sync::Arc;

use crate::chart::Chart;
use crate::clifford::{Chirality, CliffordRep};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Bindings, Expr};
use crate::geometry::{ChartMetric, CheckConfig, Distribution};
use crate::spintractor::{build_frame, Frame, SpinorField};
use crate::walker::{
    build_pure_walker_in, build_walker_in, Block, PureWalker, PureWalkerSpec, WalkerSpec,
};

#[derive(Clone, Debug)]
pub enum MetricSource {
    Explicit {
        chart: Chart,
        signature: (usize, usize),
        /// upper triangle, 0-based
        entries: Vec<(usize, usize, Expr)>,
    },
    Walker(WalkerSpec),
    PureWalker(PureWalkerSpec),
}

#[derive(Clone, Debug)]
pub struct SpinorSpec {
    pub chirality: Chirality,
    pub components: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct MetricFile {
    pub source: MetricSource,
    pub bounds: Vec<(String, f64, f64)>,
    pub spinor: Option<SpinorSpec>,
}

/// A loaded metric with whatever structure its source provides.
#[derive(Clone, Debug)]
pub struct LoadedMetric {
    pub metric: ChartMetric,
    pub frame: Frame,
    /// `L` for Walker sources.
    pub distribution: Option<Distribution>,
    /// The file's spinor, else the certified one of a pure Walker source.
    pub spinor: Option<SpinorField>,
    pub pure: Option<Box<PureWalker>>,
}

struct Statement {
    line: usize,
    text: String,
}

fn invalid(line: usize, message: impl Into<String>) -> Error {
    Error::Validation {
        line,
        message: message.into(),
    }
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Validation { .. } => e,
        other => invalid(line, other.to_string()),
    }
}

fn statements(text: &str) -> Result<Vec<Statement>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut start = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut rest = line;
        while let Some(pos) = rest.find(';') {
            let piece = &rest[..pos];
            if cur.trim().is_empty() && !piece.trim().is_empty() {
                start = k + 1;
            }
            cur.push_str(piece);
            if cur.trim().is_empty() {
                return Err(invalid(k + 1, "empty statement"));
            }
            out.push(Statement {
                line: start,
                text: cur.trim().to_string(),
            });
            cur.clear();
            rest = &rest[pos + 1..];
        }
        if cur.trim().is_empty() && !rest.trim().is_empty() {
            start = k + 1;
        }
        cur.push_str(rest);
        cur.push(' ');
    }
    if !cur.trim().is_empty() {
        return Err(invalid(start, "statement is missing its terminating `;`"));
    }
    Ok(out)
}

/// Split at commas outside parentheses.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[last..i]);
                last = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[last..]);
    parts
}

fn parse_usize(word: Option<&str>, what: &str, line: usize) -> Result<usize> {
    let w = word.ok_or_else(|| invalid(line, format!("missing {what}")))?;
    w.parse()
        .map_err(|_| invalid(line, format!("bad {what} `{w}`")))
}

fn parse_f64(word: Option<&str>, what: &str, line: usize) -> Result<f64> {
    let w = word.ok_or_else(|| invalid(line, format!("missing {what}")))?;
    w.parse()
        .map_err(|_| invalid(line, format!("bad {what} `{w}`")))
}

/// A 1-based index or a coordinate name.
fn parse_index(word: &str, chart: &Chart, line: usize) -> Result<usize> {
    if let Ok(k) = word.parse::<usize>() {
        if k == 0 || k > chart.dim() {
            return Err(invalid(
                line,
                format!("index {k} out of range 1..{}", chart.dim()),
            ));
        }
        return Ok(k - 1);
    }
    chart.coord_index(word).map_err(at_line(line))
}

/// `NAME(i,j) = expr` with 1-based indices.
fn parse_entry(s: &str, line: usize) -> Result<(&str, usize, usize, &str)> {
    let (lhs, rhs) = s.split_once('=').ok_or_else(|| {
        invalid(
            line,
            format!("expected `NAME(i,j) = expr`, got `{}`", s.trim()),
        )
    })?;
    let lhs = lhs.trim();
    let bad = || invalid(line, format!("bad entry `{lhs}`"));
    let open = lhs.find('(').ok_or_else(bad)?;
    let inner = lhs[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let (i, j) = inner.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    let j: usize = j.trim().parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(invalid(line, "entry indices are 1-based"));
    }
    Ok((lhs[..open].trim(), i - 1, j - 1, rhs.trim()))
}

fn is_blank(s: &str) -> bool {
    s.trim().is_empty()
}

#[derive(Default)]
struct Draft {
    chart: Option<(Chart, usize)>,
    signature: Option<(usize, usize)>,
    entries: Vec<(usize, usize, Expr)>,
    walker: Option<(MetricSource, usize)>,
    bounds: Vec<(String, f64, f64, usize)>,
    spinor: Option<(Vec<String>, Chirality, usize)>,
}

impl MetricFile {
    pub fn parse(text: &str) -> Result<MetricFile> {
        let mut d = Draft::default();
        for st in statements(text)? {
            let line = st.line;
            let (kw, rest) = st
                .text
                .split_once(char::is_whitespace)
                .unwrap_or((st.text.as_str(), ""));
            match kw {
                "chart" => {
                    if d.chart.is_some() {
                        return Err(invalid(line, "duplicate `chart`"));
                    }
                    let names: Vec<&str> = rest.split_whitespace().collect();
                    let chart = Chart::new(&names).map_err(at_line(line))?;
                    d.chart = Some((chart, line));
                }
                "signature" => {
                    let mut w = rest.split_whitespace();
                    let p = parse_usize(w.next(), "p", line)?;
                    let q = parse_usize(w.next(), "q", line)?;
                    if w.next().is_some() {
                        return Err(invalid(line, "`signature` takes two numbers"));
                    }
                    d.signature = Some((p, q));
                }
                "g" => {
                    let (chart, _) = d
                        .chart
                        .as_ref()
                        .ok_or_else(|| invalid(line, "`g` before `chart`"))?;
                    let (lhs, rhs) = rest
                        .split_once('=')
                        .ok_or_else(|| invalid(line, "expected `g i j = expr`"))?;
                    let idx: Vec<&str> = lhs.split_whitespace().collect();
                    if idx.len() != 2 {
                        return Err(invalid(line, "expected two indices"));
                    }
                    let i = parse_index(idx[0], chart, line)?;
                    let j = parse_index(idx[1], chart, line)?;
                    if is_blank(rhs) {
                        return Err(invalid(line, "empty expression"));
                    }
                    let e = parse_expr(rhs.trim(), chart).map_err(at_line(line))?;
                    let (i, j) = (i.min(j), i.max(j));
                    if d.entries.iter().any(|(a, b, _)| (*a, *b) == (i, j)) {
                        return Err(invalid(
                            line,
                            format!("entry ({}, {}) set twice", i + 1, j + 1),
                        ));
                    }
                    d.entries.push((i, j, e));
                }
                "walker" => {
                    if d.walker.is_some() {
                        return Err(invalid(line, "duplicate Walker stanza"));
                    }
                    d.walker = Some((parse_walker(rest, line)?, line));
                }
                "pure_walker" => {
                    if d.walker.is_some() {
                        return Err(invalid(line, "duplicate Walker stanza"));
                    }
                    d.walker = Some((parse_pure_walker(rest, line)?, line));
                }
                "spinor" => {
                    let (chirality, body) = match rest.split_once(char::is_whitespace) {
                        Some(("plus", b)) => (Chirality::Plus, b),
                        Some(("minus", b)) => (Chirality::Minus, b),
                        Some(("full", b)) => (Chirality::Full, b),
                        _ => (Chirality::Full, rest),
                    };
                    let comps: Vec<String> = split_top(body)
                        .iter()
                        .map(|s| s.trim().to_string())
                        .collect();
                    if comps.iter().any(|c| c.is_empty()) {
                        return Err(invalid(line, "empty spinor component"));
                    }
                    d.spinor = Some((comps, chirality, line));
                }
                "bounds" => {
                    let mut w = rest.split_whitespace();
                    let name = w
                        .next()
                        .ok_or_else(|| invalid(line, "missing coordinate"))?
                        .to_string();
                    let lo = parse_f64(w.next(), "lower bound", line)?;
                    let hi = parse_f64(w.next(), "upper bound", line)?;
                    if !(lo < hi) {
                        return Err(invalid(line, format!("empty interval [{lo}, {hi}]")));
                    }
                    d.bounds.push((name, lo, hi, line));
                }
                other => return Err(invalid(line, format!("unknown statement `{other}`"))),
            }
        }
        d.finish()
    }

    pub fn read(path: &std::path::Path) -> Result<MetricFile> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        MetricFile::parse(&text)
    }

    /// The coordinate chart without bounds.
    pub fn bare_chart(&self) -> Result<Chart> {
        match &self.source {
            MetricSource::Explicit { chart, .. } => Ok(chart.clone()),
            MetricSource::Walker(s) => WalkerSpec::chart(s.n, s.r),
            MetricSource::PureWalker(s) => PureWalkerSpec::chart(s.m, s.odd),
        }
    }

    pub fn chart(&self) -> Result<Chart> {
        let mut c = self.bare_chart()?;
        for (name, lo, hi) in &self.bounds {
            let i = c.coord_index(name)?;
            c.set_bounds(i, *lo, *hi)?;
        }
        Ok(c)
    }

    /// Builds the metric, an orthonormal frame and (for pure Walker
    /// sources) certifies the parallel spinor.
    pub fn load(&self, cfg: &CheckConfig) -> Result<LoadedMetric> {
        let chart = self.chart()?;
        let (metric, distribution, pure) = match &self.source {
            MetricSource::Explicit {
                signature, entries, ..
            } => (
                ChartMetric::from_entries(chart, *signature, entries, Bindings::new())?,
                None,
                None,
            ),
            MetricSource::Walker(s) => {
                let (g, l) = build_walker_in(s, chart)?;
                (g, Some(l), None)
            }
            MetricSource::PureWalker(s) => {
                let w = build_pure_walker_in(s, chart, cfg)?;
                (w.metric.clone(), Some(w.l.clone()), Some(Box::new(w)))
            }
        };
        let frame = match &pure {
            Some(w) => w.frame.clone(),
            None => build_frame(&metric, &metric.chart().center())?,
        };
        let spinor = match (&self.spinor, &pure) {
            (Some(s), _) => {
                let (p, q) = metric.signature();
                let rep = match &pure {
                    Some(w) => w.rep.clone(),
                    None => Arc::new(CliffordRep::build(p, q)?),
                };
                Some(SpinorField::new(
                    rep,
                    s.components.clone(),
                    s.chirality,
                    metric.bindings(),
                )?)
            }
            (None, Some(w)) => Some(w.spinor.clone()),
            (None, None) => None,
        };
        Ok(LoadedMetric {
            metric,
            frame,
            distribution,
            spinor,
            pure,
        })
    }

    /// Prints in the file format; `parse(to_text())` reproduces the file.
    pub fn to_text(&self) -> Result<String> {
        let chart = self.bare_chart()?;
        let mut s = String::new();
        let entry = |e: &Expr| e.display(&chart).to_string();
        match &self.source {
            MetricSource::Explicit {
                signature, entries, ..
            } => {
                let _ = writeln!(s, "chart {} ;", chart.names().join(" "));
                let _ = writeln!(s, "signature {} {} ;", signature.0, signature.1);
                for (i, j, e) in entries {
                    let _ = writeln!(s, "g {} {} = {} ;", i + 1, j + 1, entry(e));
                }
            }
            MetricSource::Walker(w) => {
                let mut parts = Vec::new();
                for (name, block, m) in [
                    ("A", Block::A, &w.a),
                    ("H", Block::H, &w.h),
                    ("B", Block::B, &w.b),
                ] {
                    let (rows, cols) = w.block_shape(block);
                    for i in 0..rows {
                        let from = if block == Block::H { 0 } else { i };
                        for j in from..cols {
                            if !m[i][j].is_zero() {
                                parts.push(format!(
                                    "{name}({},{}) = {}",
                                    i + 1,
                                    j + 1,
                                    entry(&m[i][j])
                                ));
                            }
                        }
                    }
                }
                let _ = writeln!(s, "walker {} {} {} ;", w.n, w.r, parts.join(", "));
            }
            MetricSource::PureWalker(w) => {
                let mut parts = Vec::new();
                for i in 0..w.m {
                    for j in i..w.m {
                        if !w.g[i][j].is_zero() {
                            parts.push(format!("g({},{}) = {}", i + 1, j + 1, entry(&w.g[i][j])));
                        }
                    }
                }
                let kind = if w.odd { "odd" } else { "split" };
                let _ = writeln!(s, "pure_walker {} {kind} {} ;", w.m, parts.join(", "));
            }
        }
        if let Some(sp) = &self.spinor {
            let kind = match sp.chirality {
                Chirality::Full => "full",
                Chirality::Plus => "plus",
                Chirality::Minus => "minus",
            };
            let comps: Vec<String> = sp.components.iter().map(entry).collect();
            let _ = writeln!(s, "spinor {kind} {} ;", comps.join(", "));
        }
        for (name, lo, hi) in &self.bounds {
            let _ = writeln!(s, "bounds {name} {lo:?} {hi:?} ;");
        }
        Ok(s)
    }
}

fn parse_walker(rest: &str, line: usize) -> Result<MetricSource> {
    let mut w = rest.trim_start().splitn(3, char::is_whitespace);
    let n = parse_usize(w.next(), "dimension n", line)?;
    let r = parse_usize(w.next(), "rank r", line)?;
    let mut spec = WalkerSpec::zero(n, r).map_err(at_line(line))?;
    let chart = WalkerSpec::chart(n, r)?;
    let body = w.next().unwrap_or("");
    if !is_blank(body) {
        for part in split_top(body) {
            let (name, i, j, rhs) = parse_entry(part, line)?;
            let block = match name {
                "A" => Block::A,
                "H" => Block::H,
                "B" => Block::B,
                other => return Err(invalid(line, format!("unknown block `{other}`"))),
            };
            let e = parse_expr(rhs, &chart).map_err(at_line(line))?;
            spec.set(block, i, j, e).map_err(at_line(line))?;
        }
    }
    spec.validate().map_err(at_line(line))?;
    Ok(MetricSource::Walker(spec))
}

fn parse_pure_walker(rest: &str, line: usize) -> Result<MetricSource> {
    let mut w = rest.trim_start().splitn(3, char::is_whitespace);
    let m = parse_usize(w.next(), "m", line)?;
    let odd = match w.next() {
        Some("odd") => true,
        Some("split") => false,
        other => {
            return Err(invalid(
                line,
                format!("expected `odd` or `split`, got `{}`", other.unwrap_or("")),
            ))
        }
    };
    let mut spec = PureWalkerSpec::zero(m, odd).map_err(at_line(line))?;
    let chart = PureWalkerSpec::chart(m, odd)?;
    let body = w.next().unwrap_or("");
    if !is_blank(body) {
        for part in split_top(body) {
            let (name, i, j, rhs) = parse_entry(part, line)?;
            if name != "g" {
                return Err(invalid(
                    line,
                    format!("unknown entry `{name}`, expected `g(i,j)`"),
                ));
            }
            let e = parse_expr(rhs, &chart).map_err(at_line(line))?;
            spec.set(i, j, e).map_err(at_line(line))?;
        }
    }
    spec.validate().map_err(at_line(line))?;
    Ok(MetricSource::PureWalker(spec))
}

impl Draft {
    fn finish(self) -> Result<MetricFile> {
        let source = match (self.walker, self.chart) {
            (Some(_), Some((_, line))) => {
                return Err(invalid(
                    line,
                    "`chart` cannot be combined with a Walker stanza",
                ));
            }
            (Some((w, _)), None) => {
                if !self.entries.is_empty() || self.signature.is_some() {
                    return Err(invalid(
                        1,
                        "`g` and `signature` cannot be combined with a Walker stanza",
                    ));
                }
                w
            }
            (None, Some((chart, line))) => {
                let signature = self
                    .signature
                    .ok_or_else(|| invalid(line, "missing `signature`"))?;
                if signature.0 + signature.1 != chart.dim() {
                    return Err(invalid(
                        line,
                        format!(
                            "signature ({}, {}) does not match {} coordinates",
                            signature.0,
                            signature.1,
                            chart.dim()
                        ),
                    ));
                }
                MetricSource::Explicit {
                    chart,
                    signature,
                    entries: self.entries,
                }
            }
            (None, None) => {
                return Err(invalid(1, "no metric: expected `chart` or a Walker stanza"))
            }
        };
        let mut file = MetricFile {
            source,
            bounds: Vec::new(),
            spinor: None,
        };
        let chart = file.bare_chart()?;
        for (name, lo, hi, line) in self.bounds {
            chart.coord_index(&name).map_err(at_line(line))?;
            file.bounds.push((name, lo, hi));
        }
        if let Some((comps, chirality, line)) = self.spinor {
            let components = comps
                .iter()
                .map(|c| parse_expr(c, &chart))
                .collect::<Result<Vec<_>>>()
                .map_err(at_line(line))?;
            file.spinor = Some(SpinorSpec {
                chirality,
                components,
            });
        }
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: Error) -> usize {
        match e {
            Error::Validation { line, .. } => line,
            other => panic!("not a validation error: {other}"),
        }
    }

    #[test]
    fn explicit_metric() {
        let f = MetricFile::parse(
            "# pp-wave\nchart x1 x2 x3 ;\nsignature 1 2 ;\ng 1 3 = 1 ;\ng x2 x2 = 1 ;\ng 3 3 =\n  x2^2 ;\nbounds x1 -0.5 0.5 ;\n",
        )
        .unwrap();
        let l = f.load(&CheckConfig::default()).unwrap();
        assert_eq!(l.metric.signature(), (1, 2));
        assert_eq!(l.metric.chart().bounds(0), Some((-0.5, 0.5)));
        let g = l.metric.eval_g(&[0.0, 0.5, 0.0]).unwrap();
        assert_eq!(g[(2, 0)], 1.0);
        assert_eq!(g[(2, 2)], 0.25);
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(
            line_of(
                MetricFile::parse("chart x y ;\nsignature 1 1 ;\ng 1 2 = x + ;\n").unwrap_err()
            ),
            3
        );
        assert_eq!(
            line_of(MetricFile::parse("chart x y ;\n\nfoo ;\n").unwrap_err()),
            3
        );
        assert_eq!(
            line_of(MetricFile::parse("chart x y ;\nsignature 1 1 ;\ng 1 3 = 1 ;").unwrap_err()),
            3
        );
        assert_eq!(
            line_of(MetricFile::parse("chart x y ;\nsignature 1 1 ;\ng 1 2 = 1\n").unwrap_err()),
            3
        );
        assert_eq!(
            line_of(MetricFile::parse("chart x y ;\nsignature 2 1 ;\n").unwrap_err()),
            1
        );
        assert_eq!(
            line_of(
                MetricFile::parse("\n\npure_walker 2 odd g(1,1) = x2*y1, g(1,2) = x1*y1 ;")
                    .unwrap_err()
            ),
            3
        );
        assert_eq!(
            line_of(MetricFile::parse("walker 4 1 A(1,1) = x1 ;").unwrap_err()),
            1
        );
        assert_eq!(
            line_of(MetricFile::parse("chart x y ;\nsignature 1 1 ;\nbounds w 0 1 ;").unwrap_err()),
            3
        );
    }

    #[test]
    fn walker_round_trip() {
        let src = "walker 6 2 A(1,1) = -1, A(2,2) = 1, B(1,1) = z1^2 + y2, B(1,2) = y1*z2 ;\nbounds y1 -0.5 0.5 ;\n";
        let f = MetricFile::parse(src).unwrap();
        let again = MetricFile::parse(&f.to_text().unwrap()).unwrap();
        assert_eq!(f.to_text().unwrap(), again.to_text().unwrap());
        let l = again.load(&CheckConfig::default()).unwrap();
        assert_eq!(l.metric.signature(), (3, 3));
        assert_eq!(l.distribution.unwrap().rank(), 2);
    }

    #[test]
    fn pure_walker_with_spinor() {
        let f = MetricFile::parse("pure_walker 1 odd g(1,1) = y1 ;\n").unwrap();
        let l = f.load(&CheckConfig::default()).unwrap();
        assert_eq!(l.metric.signature(), (2, 1));
        assert!(l.spinor.is_some() && l.pure.is_some());
    }
}
