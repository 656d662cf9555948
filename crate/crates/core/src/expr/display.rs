//! Printing in the parser's grammar, so `parse(print(e))` reproduces `e`.

use std::fmt::{self, Write};

use super::{Expr, Node, Rational};
use crate::chart::Chart;

/// Borrowed view of an expression printed with a chart's coordinate names.
pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, &|f, i| match self.names.get(i) {
            Some(n) => f.write_str(n),
            None => write!(f, "x[{i}]"),
        })
    }
}

impl Expr {
    pub fn display<'a>(&'a self, chart: &'a Chart) -> ExprDisplay<'a> {
        ExprDisplay {
            expr: self,
            names: chart.names(),
        }
    }

    /// Printed with coordinates as `x[i]`; used for diagnostics.
    pub fn display_positional(&self) -> String {
        let mut s = String::new();
        let _ = write_expr(&mut s, self, &|f, i| write!(f, "x[{i}]"));
        s
    }
}

type CoordWriter<'a, W> = dyn Fn(&mut W, usize) -> fmt::Result + 'a;

/// Leaves that can stand as a grammar `base` without parentheses.
fn is_atomic(e: &Expr) -> bool {
    match e.node() {
        Node::Const(r) => r.value().is_integer() && !r.is_negative(),
        Node::Coord(_) | Node::Func(_) | Node::Exp(_) => true,
        _ => false,
    }
}

fn write_const<W: Write>(w: &mut W, r: &Rational) -> fmt::Result {
    let v = r.value();
    if v.is_integer() {
        if r.is_negative() {
            write!(w, "({})", v.numer())
        } else {
            write!(w, "{}", v.numer())
        }
    } else {
        write!(w, "({}/{})", v.numer(), v.denom())
    }
}

fn write_paren<W: Write>(
    w: &mut W,
    e: &Expr,
    coord: &CoordWriter<'_, W>,
    wrap: bool,
) -> fmt::Result {
    if wrap {
        w.write_char('(')?;
        write_expr(w, e, coord)?;
        w.write_char(')')
    } else {
        write_expr(w, e, coord)
    }
}

fn write_expr<W: Write>(w: &mut W, e: &Expr, coord: &CoordWriter<'_, W>) -> fmt::Result {
    match e.node() {
        Node::Const(r) => write_const(w, r),
        Node::Coord(i) => coord(w, *i),
        Node::Func(f) => {
            w.write_str(&f.name)?;
            if !f.partials.is_empty() {
                w.write_str("__d")?;
                for (k, p) in f.partials.iter().enumerate() {
                    if k > 0 {
                        w.write_char('_')?;
                    }
                    write!(w, "{p}")?;
                }
            }
            w.write_char('(')?;
            for (k, a) in f.args.iter().enumerate() {
                if k > 0 {
                    w.write_char(',')?;
                }
                coord(w, *a)?;
            }
            w.write_char(')')
        }
        Node::Add(v) => {
            if v.is_empty() {
                return w.write_char('0');
            }
            for (k, t) in v.iter().enumerate() {
                if k > 0 {
                    w.write_str(" + ")?;
                }
                write_expr(w, t, coord)?;
            }
            Ok(())
        }
        Node::Mul(v) => {
            if v.is_empty() {
                return w.write_char('1');
            }
            for (k, t) in v.iter().enumerate() {
                if k > 0 {
                    w.write_char('*')?;
                }
                let wrap = matches!(t.node(), Node::Add(_) | Node::Div(..) | Node::Neg(_));
                write_paren(w, t, coord, wrap)?;
            }
            Ok(())
        }
        Node::Pow(b, n) => {
            if *n < 0 {
                w.write_str("(1/")?;
            }
            write_paren(w, b, coord, !is_atomic(b))?;
            write!(w, "^{}", n.unsigned_abs())?;
            if *n < 0 {
                w.write_char(')')?;
            }
            Ok(())
        }
        Node::Neg(x) => {
            w.write_char('-')?;
            write_paren(w, x, coord, !is_atomic(x))
        }
        Node::Exp(x) => {
            w.write_str("exp(")?;
            write_expr(w, x, coord)?;
            w.write_char(')')
        }
        Node::Div(a, b) => {
            let wrap_a = matches!(a.node(), Node::Add(_) | Node::Neg(_));
            write_paren(w, a, coord, wrap_a)?;
            w.write_char('/')?;
            write_paren(
                w,
                b,
                coord,
                !is_atomic(b) && !matches!(b.node(), Node::Pow(_, n) if *n > 0),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn prints_in_source_grammar() {
        let c = Chart::new(&["x1", "x2"]).unwrap();
        let e = parse_expr("x1^2 + 2*x1*x2", &c).unwrap();
        assert_eq!(e.display(&c).to_string(), "x1^2 + 2*x1*x2");
        let s = e.simplify().display(&c).to_string();
        let back = parse_expr(&s, &c).unwrap().simplify();
        assert_eq!(back, e.simplify());
    }

    #[test]
    fn negative_and_fractional_constants() {
        let c = Chart::new(&["x1"]).unwrap();
        let e = (Expr::ratio(-3, 4) * Expr::coord(0).pow(-2)).simplify();
        let s = e.display(&c).to_string();
        assert_eq!(s, "(-3/4)*(1/x1^2)");
        assert_eq!(parse_expr(&s, &c).unwrap().simplify(), e);
    }

    #[test]
    fn negation_of_power_is_parenthesized() {
        let c = Chart::new(&["x1"]).unwrap();
        let e = -Expr::coord(0).pow(2);
        let s = e.display(&c).to_string();
        let v = parse_expr(&s, &c)
            .unwrap()
            .evaluate(&[3.0], &crate::expr::Bindings::new())
            .unwrap();
        assert_eq!(v, -9.0);
    }

    #[test]
    fn derivative_tag_round_trip() {
        let c = Chart::new(&["y1", "z1"]).unwrap();
        let e = Expr::func("s", vec![0, 1])
            .differentiate(1)
            .differentiate(0);
        let s = e.display(&c).to_string();
        assert_eq!(s, "s__d0_1(y1,z1)");
        assert_eq!(parse_expr(&s, &c).unwrap(), e);
    }
}
