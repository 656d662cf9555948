//! Fixed rewrite set: flatten sums and products, fold constants, drop zeros
//! and ones, collect identical terms and powers of identical bases, merge
//! exponentials. Outputs are ordered canonically so the rewrite is idempotent.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};

use super::{Expr, Node, Rational};

impl Expr {
    pub fn simplify(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Func(_) => self.clone(),
            Node::Add(v) => simplify_add(v.iter().map(Expr::simplify).collect()),
            Node::Mul(v) => simplify_mul(v.iter().map(Expr::simplify).collect()),
            Node::Pow(b, n) => simplify_pow(b.simplify(), *n),
            Node::Neg(e) => simplify_mul(vec![Expr::constant(-1), e.simplify()]),
            Node::Exp(e) => simplify_exp(e.simplify()),
            Node::Div(a, b) => simplify_mul(vec![a.simplify(), simplify_pow(b.simplify(), -1)]),
        }
    }
}

fn constant(r: BigRational) -> Expr {
    Expr::from_node(Node::Const(Rational::new(r)))
}

fn simplify_exp(arg: Expr) -> Expr {
    if arg.is_zero() {
        Expr::one()
    } else {
        Expr::from_node(Node::Exp(arg))
    }
}

fn rational_pow(r: &BigRational, n: i32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n.unsigned_abs() {
        acc *= r;
    }
    if n < 0 {
        acc.recip()
    } else {
        acc
    }
}

pub(super) fn simplify_pow(base: Expr, n: i32) -> Expr {
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return base;
    }
    match base.node() {
        Node::Const(r) => {
            if r.is_zero() && n < 0 {
                // kept so that evaluation reports the division by zero
                Expr::from_node(Node::Pow(base.clone(), n))
            } else {
                constant(rational_pow(r.value(), n))
            }
        }
        Node::Pow(inner, m) => simplify_pow(inner.clone(), m * n),
        Node::Mul(factors) => {
            simplify_mul(factors.iter().map(|f| simplify_pow(f.clone(), n)).collect())
        }
        Node::Exp(arg) => simplify_exp(simplify_mul(vec![Expr::constant(n as i64), arg.clone()])),
        _ => Expr::from_node(Node::Pow(base, n)),
    }
}

/// Splits a simplified product into (coefficient, non-constant factors).
fn split_coefficient(e: &Expr) -> (BigRational, Expr) {
    if let Node::Mul(v) = e.node() {
        if let Some(c) = v.first().and_then(Expr::as_const) {
            let rest = if v.len() == 2 {
                v[1].clone()
            } else {
                Expr::product(v[1..].to_vec())
            };
            return (c.value().clone(), rest);
        }
    }
    (BigRational::one(), e.clone())
}

pub(super) fn simplify_add(items: Vec<Expr>) -> Expr {
    let mut constant_sum = BigRational::zero();
    let mut terms: BTreeMap<Expr, BigRational> = BTreeMap::new();
    let mut stack = items;
    while let Some(item) = stack.pop() {
        match item.node() {
            Node::Const(r) => constant_sum += r.value(),
            Node::Add(v) => stack.extend(v.iter().cloned()),
            _ => {
                let (c, rest) = split_coefficient(&item);
                *terms.entry(rest).or_insert_with(BigRational::zero) += c;
            }
        }
    }
    let mut out = Vec::with_capacity(terms.len() + 1);
    if !constant_sum.is_zero() {
        out.push(constant(constant_sum));
    }
    for (rest, c) in terms {
        if c.is_zero() {
            continue;
        }
        if c.is_one() {
            out.push(rest);
        } else {
            let mut factors = vec![constant(c)];
            match rest.node() {
                Node::Mul(v) => factors.extend(v.iter().cloned()),
                _ => factors.push(rest),
            }
            out.push(Expr::product(factors));
        }
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::sum(out),
    }
}

pub(super) fn simplify_mul(items: Vec<Expr>) -> Expr {
    let mut coefficient = BigRational::one();
    let mut powers: BTreeMap<Expr, i32> = BTreeMap::new();
    let mut exp_args = Vec::new();
    let mut stack = items;
    while let Some(item) = stack.pop() {
        match item.node() {
            Node::Const(r) => coefficient *= r.value(),
            Node::Mul(v) => stack.extend(v.iter().cloned()),
            Node::Pow(b, k) => *powers.entry(b.clone()).or_insert(0) += *k,
            Node::Exp(arg) => exp_args.push(arg.clone()),
            _ => *powers.entry(item.clone()).or_insert(0) += 1,
        }
    }
    if coefficient.is_zero() {
        return Expr::zero();
    }
    let mut factors = Vec::new();
    for (base, k) in powers {
        if k == 0 {
            continue;
        }
        if base.is_zero() {
            if k > 0 {
                return Expr::zero();
            }
            factors.push(Expr::from_node(Node::Pow(base, k)));
            continue;
        }
        factors.push(if k == 1 {
            base
        } else {
            Expr::from_node(Node::Pow(base, k))
        });
    }
    if !exp_args.is_empty() {
        let merged = simplify_exp(simplify_add(exp_args));
        if !merged.is_one() {
            factors.push(merged);
        }
    }
    factors.sort();
    if factors.is_empty() {
        return constant(coefficient);
    }
    if coefficient.is_one() && factors.len() == 1 {
        return factors.pop().unwrap();
    }
    if !coefficient.is_one() {
        factors.insert(0, constant(coefficient));
    }
    Expr::product(factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Expr {
        Expr::coord(i)
    }

    #[test]
    fn folds_and_collects() {
        let e = x(0) + x(0) + Expr::constant(2) * x(0) - Expr::constant(1);
        let s = e.simplify();
        assert_eq!(
            s,
            (Expr::constant(-1) + Expr::constant(4) * x(0)).simplify()
        );
    }

    #[test]
    fn cancels_zero_and_one() {
        let e = Expr::one() * x(1) + Expr::zero() * x(2);
        assert_eq!(e.simplify(), x(1));
    }

    #[test]
    fn combines_powers() {
        let e = x(0) * x(0).pow(2) / x(0);
        assert_eq!(e.simplify(), x(0).pow(2));
        let cancel = (x(0) / x(0)).simplify();
        assert!(cancel.is_one());
    }

    #[test]
    fn merges_exponentials() {
        let e = x(0).exp() * (-x(0)).exp();
        assert!(e.simplify().is_one());
        let sq = x(1).exp().pow(2).simplify();
        assert_eq!(sq, (Expr::constant(2) * x(1)).exp().simplify());
    }

    #[test]
    fn keeps_reciprocal_of_zero() {
        let e = (Expr::one() / Expr::zero()).simplify();
        assert!(matches!(e.node(), Node::Pow(_, -1)));
    }

    #[test]
    fn idempotent_on_nested_example() {
        let e = (x(0) + x(1)) * (x(0) + x(1)) * Expr::ratio(1, 2) - x(2).exp() * x(2).exp();
        let once = e.simplify();
        assert_eq!(once.simplify(), once);
    }
}
