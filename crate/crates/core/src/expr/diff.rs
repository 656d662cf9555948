use super::{Expr, FuncRef, Node};

impl Expr {
    /// Exact partial derivative with respect to coordinate `coord`, simplified.
    pub fn differentiate(&self, coord: usize) -> Expr {
        raw_diff(self, coord).simplify()
    }
}

fn raw_diff(e: &Expr, c: usize) -> Expr {
    if !e.depends_on(c) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Coord(i) => {
            if *i == c {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Func(f) => {
            let terms: Vec<Expr> = f
                .args
                .iter()
                .enumerate()
                .filter(|(_, &a)| a == c)
                .map(|(pos, _)| {
                    let mut partials = f.partials.clone();
                    partials.push(pos);
                    partials.sort_unstable();
                    Expr::from_node(Node::Func(FuncRef {
                        name: f.name.clone(),
                        args: f.args.clone(),
                        partials,
                    }))
                })
                .collect();
            Expr::sum(terms)
        }
        Node::Add(v) => Expr::sum(v.iter().map(|t| raw_diff(t, c)).collect()),
        Node::Mul(v) => {
            let mut terms = Vec::new();
            for (k, factor) in v.iter().enumerate() {
                if !factor.depends_on(c) {
                    continue;
                }
                let mut factors = v.clone();
                factors[k] = raw_diff(factor, c);
                terms.push(Expr::product(factors));
            }
            Expr::sum(terms)
        }
        Node::Pow(b, n) => Expr::product(vec![
            Expr::constant(*n as i64),
            b.pow(n - 1),
            raw_diff(b, c),
        ]),
        Node::Neg(x) => -raw_diff(x, c),
        Node::Exp(u) => Expr::product(vec![e.clone(), raw_diff(u, c)]),
        Node::Div(a, b) => {
            let num = raw_diff(a, c) * b - a * &raw_diff(b, c);
            Expr::from_node(Node::Div(num, b.pow(2)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rule() {
        let x = Expr::coord(0);
        assert_eq!(
            x.pow(2).differentiate(0),
            (Expr::constant(2) * x).simplify()
        );
    }

    #[test]
    fn opaque_function_ignores_unlisted_coordinate() {
        // g11(y1,z1) over chart (x1,y1,z1)
        let g = Expr::func("g11", vec![1, 2]);
        assert!(g.differentiate(0).is_zero());
        let dy = g.differentiate(1);
        match dy.node() {
            Node::Func(f) => assert_eq!(f.partials, vec![0]),
            other => panic!("expected tagged derivative, got {other:?}"),
        }
    }

    #[test]
    fn product_rule() {
        let (x, y) = (Expr::coord(0), Expr::coord(1));
        let e = &x * &y.pow(3);
        let expected = (Expr::constant(3) * x * y.pow(2)).simplify();
        assert_eq!(e.differentiate(1), expected);
    }
}
