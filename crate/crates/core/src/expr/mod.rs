//! Symbolic scalar expressions over the coordinates of a chart.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Coordinates are stored
//! by index into the owning [`Chart`](crate::chart::Chart); names only matter
//! for parsing and printing. Constants are exact rationals. Opaque functions
//! (`f(y1,z1)`) carry their argument list, so differentiating with respect to
//! a coordinate they do not list is structurally zero.

mod diff;
mod display;
mod eval;
mod expand;
mod parse;
mod simplify;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

pub use display::ExprDisplay;
pub use eval::{Bindings, Callback, Compiled};
pub use parse::parse_expr;

/// Maximum number of chart coordinates; dependency sets are 64-bit masks.
pub const MAX_COORDS: usize = 64;

/// Exact rational constant with a cached binary64 approximation.
#[derive(Clone, Debug)]
pub struct Rational {
    value: BigRational,
    approx: f64,
}

impl Rational {
    pub fn new(value: BigRational) -> Self {
        let approx = value.to_f64().unwrap_or(f64::NAN);
        Rational { value, approx }
    }

    pub fn from_integer(n: i64) -> Self {
        Self::new(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.value.is_negative()
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Eq for Rational {}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value.cmp(&other.value)
    }
}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.value.hash(state)
    }
}

/// Reference to an opaque function of some chart coordinates, possibly
/// differentiated. `partials` lists argument positions (sorted), one entry per
/// derivative taken.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FuncRef {
    pub name: String,
    pub args: Vec<usize>,
    pub partials: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Rational),
    Coord(usize),
    Func(FuncRef),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i32),
    Neg(Expr),
    Exp(Expr),
    Div(Expr, Expr),
}

struct Inner {
    node: Node,
    deps: u64,
}

/// Immutable symbolic expression. Cloning is a reference-count bump.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display_positional())
    }
}

fn mask_of(i: usize) -> u64 {
    assert!(i < MAX_COORDS, "coordinate index {i} exceeds {MAX_COORDS}");
    1u64 << i
}

impl Expr {
    pub fn from_node(node: Node) -> Expr {
        let deps = match &node {
            Node::Const(_) => 0,
            Node::Coord(i) => mask_of(*i),
            Node::Func(f) => f.args.iter().fold(0, |m, &a| m | mask_of(a)),
            Node::Add(v) | Node::Mul(v) => v.iter().fold(0, |m, e| m | e.deps()),
            Node::Pow(b, _) => b.deps(),
            Node::Neg(e) | Node::Exp(e) => e.deps(),
            Node::Div(a, b) => a.deps() | b.deps(),
        };
        Expr(Arc::new(Inner { node, deps }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    /// Bit mask of coordinates this expression can depend on.
    pub fn deps(&self) -> u64 {
        self.0.deps
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        coord < MAX_COORDS && self.0.deps & (1u64 << coord) != 0
    }

    pub fn constant(n: i64) -> Expr {
        Expr::from_node(Node::Const(Rational::from_integer(n)))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::from_node(Node::Const(Rational::from_ratio(num, den)))
    }

    pub fn rational(value: BigRational) -> Expr {
        Expr::from_node(Node::Const(Rational::new(value)))
    }

    pub fn zero() -> Expr {
        Expr::constant(0)
    }

    pub fn one() -> Expr {
        Expr::constant(1)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::from_node(Node::Coord(i))
    }

    pub fn func(name: impl Into<String>, args: Vec<usize>) -> Expr {
        Expr::from_node(Node::Func(FuncRef {
            name: name.into(),
            args,
            partials: Vec::new(),
        }))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Add(terms))
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        Expr::from_node(Node::Mul(factors))
    }

    pub fn pow(&self, n: i32) -> Expr {
        Expr::from_node(Node::Pow(self.clone(), n))
    }

    pub fn exp(&self) -> Expr {
        Expr::from_node(Node::Exp(self.clone()))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(r) => Some(r),
            _ => None,
        }
    }

    /// True only when the expression is literally the constant zero; callers
    /// should simplify first.
    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(Rational::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(Rational::is_one)
    }

    /// Number of leaves in the tree. Integer exponents of powers count as
    /// leaves, matching how they appear in source text.
    pub fn leaf_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Func(_) => 1,
            Node::Add(v) | Node::Mul(v) => v.iter().map(Expr::leaf_count).sum(),
            Node::Pow(b, _) => b.leaf_count() + 1,
            Node::Neg(e) | Node::Exp(e) => e.leaf_count(),
            Node::Div(a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    /// Opaque function names referenced anywhere in the tree.
    pub fn function_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Node::Func(f) = e.node() {
                if !out.contains(&f.name) {
                    out.push(f.name.clone());
                }
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self.node() {
            Node::Const(_) | Node::Coord(_) | Node::Func(_) => {}
            Node::Add(v) | Node::Mul(v) => v.iter().for_each(|e| e.visit(f)),
            Node::Pow(b, _) => b.visit(f),
            Node::Neg(e) | Node::Exp(e) => e.visit(f),
            Node::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Substitute coordinate `i` by `map[i]` wherever `map[i]` is `Some`.
    pub fn substitute(&self, map: &[Option<Expr>]) -> Expr {
        if (0..map.len()).all(|i| map[i].is_none() || !self.depends_on(i)) {
            return self.clone();
        }
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Coord(i) => map
                .get(*i)
                .cloned()
                .flatten()
                .unwrap_or_else(|| self.clone()),
            // opaque functions are evaluated through callbacks on coordinates
            Node::Func(_) => self.clone(),
            Node::Add(v) => Expr::sum(v.iter().map(|e| e.substitute(map)).collect()),
            Node::Mul(v) => Expr::product(v.iter().map(|e| e.substitute(map)).collect()),
            Node::Pow(b, n) => b.substitute(map).pow(*n),
            Node::Neg(e) => Expr::from_node(Node::Neg(e.substitute(map))),
            Node::Exp(e) => e.substitute(map).exp(),
            Node::Div(a, b) => Expr::from_node(Node::Div(a.substitute(map), b.substitute(map))),
        }
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::constant(n)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $build:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let build: fn(Expr, Expr) -> Expr = $build;
                build(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let build: fn(Expr, Expr) -> Expr = $build;
                build(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let build: fn(Expr, Expr) -> Expr = $build;
                build(self, rhs.clone())
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::sum(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::sum(vec![
    a,
    Expr::from_node(Node::Neg(b))
]));
binop!(Mul, mul, |a, b| Expr::product(vec![a, b]));
binop!(Div, div, |a, b| Expr::from_node(Node::Div(a, b)));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_node(Node::Neg(self))
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::from_node(Node::Neg(self.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deps_track_function_arguments() {
        let f = Expr::func("g11", vec![1, 2]);
        let e = Expr::coord(0) * f;
        assert!(e.depends_on(0));
        assert!(e.depends_on(2));
        assert!(!e.depends_on(3));
    }

    #[test]
    fn substitute_replaces_coordinates() {
        let e = Expr::coord(0) * Expr::coord(1);
        let s = e.substitute(&[Some(Expr::constant(3)), None]).simplify();
        assert_eq!(s, (Expr::constant(3) * Expr::coord(1)).simplify());
    }
}
