//! Distribution of products over sums. After `expand`, polynomials in the
//! atoms (coordinates, opaque functions, exponentials, negative powers) are
//! in a canonical collected form, so identically-zero polynomials become the
//! literal constant 0.

use super::simplify::{simplify_add, simplify_mul, simplify_pow};
use super::{Expr, Node};

impl Expr {
    pub fn expand(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Func(_) => self.clone(),
            Node::Add(v) => simplify_add(v.iter().map(Expr::expand).collect()),
            Node::Mul(v) => distribute(v.iter().map(Expr::expand).collect()),
            Node::Neg(x) => distribute(vec![Expr::constant(-1), x.expand()]),
            Node::Pow(b, n) => {
                let b = b.expand();
                if *n > 0 && matches!(b.node(), Node::Add(_)) {
                    distribute(vec![b; *n as usize])
                } else {
                    simplify_pow(b, *n)
                }
            }
            Node::Exp(x) => x.expand().exp().simplify(),
            Node::Div(a, b) => distribute(vec![a.expand(), simplify_pow(b.expand(), -1)]),
        }
    }
}

fn terms_of(e: &Expr) -> Vec<Expr> {
    match e.node() {
        Node::Add(v) => v.clone(),
        _ => vec![e.clone()],
    }
}

/// Multiply out already-expanded factors.
fn distribute(factors: Vec<Expr>) -> Expr {
    // cancel identical bases (e.g. a sum against its reciprocal) first
    let merged = simplify_mul(factors);
    let merged_factors = match merged.node() {
        Node::Mul(v) => v.clone(),
        _ => vec![merged.clone()],
    };
    let mut factors = Vec::with_capacity(merged_factors.len());
    for f in merged_factors {
        match f.node() {
            Node::Pow(b, n) if *n > 0 && matches!(b.node(), Node::Add(_)) => {
                factors.extend(std::iter::repeat_n(b.clone(), *n as usize))
            }
            _ => factors.push(f),
        }
    }
    let mut acc = vec![Expr::one()];
    for f in &factors {
        if f.is_zero() {
            return Expr::zero();
        }
        let fs = terms_of(f);
        let mut next = Vec::with_capacity(acc.len() * fs.len());
        for a in &acc {
            for t in &fs {
                next.push(simplify_mul(vec![a.clone(), t.clone()]));
            }
        }
        // collect early to keep intermediate sizes down
        acc = terms_of(&simplify_add(next));
        if acc.len() == 1 && acc[0].is_zero() {
            return Expr::zero();
        }
    }
    simplify_add(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn difference_of_squares() {
        let (x, y) = (Expr::coord(0), Expr::coord(1));
        let e = (&x + &y) * (&x - &y) - x.pow(2) + y.pow(2);
        assert!(e.expand().is_zero());
    }

    #[test]
    fn binomial_square() {
        let (x, y) = (Expr::coord(0), Expr::coord(1));
        let e = (&x + &y).pow(2).expand();
        let expected = (x.pow(2) + Expr::constant(2) * &x * &y + y.pow(2)).simplify();
        assert_eq!(e, expected);
    }

    #[test]
    fn keeps_negative_powers_as_atoms() {
        let x = Expr::coord(0);
        let s = &x + &Expr::one();
        let e = (&s / &s).expand();
        assert!(e.is_one());
    }
}
