//! Pointwise binary64 evaluation.
//!
//! Expressions are compiled once into a postfix program with opaque-function
//! callbacks resolved, then evaluated many times. A [`Compiled`] program is
//! immutable and can be shared between threads.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{Expr, Node};
use crate::error::{Error, Result};

/// Numeric callback for an opaque function: receives the argument values and
/// the requested partial derivatives as argument positions (empty = value).
pub type Callback = Arc<dyn Fn(&[f64], &[usize]) -> f64 + Send + Sync>;

/// Table of numeric callbacks for opaque functions, keyed by name.
#[derive(Clone, Default)]
pub struct Bindings {
    table: HashMap<String, Callback>,
}

impl fmt::Debug for Bindings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.table.keys().collect();
        names.sort();
        f.debug_struct("Bindings")
            .field("functions", &names)
            .finish()
    }
}

fn one_arg(f: fn(f64, usize) -> f64) -> Callback {
    Arc::new(move |args: &[f64], partials: &[usize]| f(args[0], partials.len()))
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    /// Bindings pre-populated with the one-argument elementary functions
    /// `sin`, `cos`, `sinh`, `cosh`, `ln` (all derivative orders).
    pub fn with_builtins() -> Self {
        let mut b = Bindings::new();
        b.insert(
            "sin",
            one_arg(|x, k| match k % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            }),
        );
        b.insert(
            "cos",
            one_arg(|x, k| match k % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            }),
        );
        b.insert(
            "sinh",
            one_arg(|x, k| if k % 2 == 0 { x.sinh() } else { x.cosh() }),
        );
        b.insert(
            "cosh",
            one_arg(|x, k| if k % 2 == 0 { x.cosh() } else { x.sinh() }),
        );
        b.insert(
            "ln",
            one_arg(|x, k| {
                if k == 0 {
                    x.ln()
                } else {
                    // d^k/dx^k ln x = (-1)^(k-1) (k-1)! / x^k
                    let fact: f64 = (1..k).map(|i| i as f64).product();
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    sign * fact / x.powi(k as i32)
                }
            }),
        );
        b
    }

    pub fn insert(&mut self, name: impl Into<String>, callback: Callback) {
        self.table.insert(name.into(), callback);
    }

    pub fn get(&self, name: &str) -> Option<&Callback> {
        self.table.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.table.contains_key(name)
    }

    /// Later entries override earlier ones.
    pub fn merged(&self, other: &Bindings) -> Bindings {
        let mut table = self.table.clone();
        table.extend(other.table.iter().map(|(k, v)| (k.clone(), v.clone())));
        Bindings { table }
    }
}

#[derive(Clone)]
enum Op {
    Const(f64),
    Coord(usize),
    Func {
        callback: usize,
        args: Box<[usize]>,
        partials: Box<[usize]>,
    },
    Add(Box<[usize]>),
    Mul(Box<[usize]>),
    Pow(usize, i32, usize),
    Neg(usize),
    Exp(usize),
    Div(usize, usize, usize),
}

/// A batch of expressions compiled for repeated evaluation. Each op writes
/// one register; subtrees shared between or within the expressions are
/// evaluated once.
#[derive(Clone)]
pub struct Compiled {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    callbacks: Vec<Callback>,
    sources: Vec<Expr>,
}

impl fmt::Debug for Compiled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Compiled")
            .field("outputs", &self.outputs.len())
            .field("ops", &self.ops.len())
            .finish()
    }
}

struct Builder<'a> {
    bindings: &'a Bindings,
    ops: Vec<Op>,
    callbacks: Vec<Callback>,
    names: Vec<String>,
    sources: Vec<Expr>,
    seen: HashMap<*const Node, usize>,
}

impl Builder<'_> {
    fn push(&mut self, op: Op) -> usize {
        self.ops.push(op);
        self.ops.len() - 1
    }

    fn emit(&mut self, e: &Expr) -> Result<usize> {
        let key = e.node() as *const Node;
        if let Some(&r) = self.seen.get(&key) {
            return Ok(r);
        }
        let r = match e.node() {
            Node::Const(r) => self.push(Op::Const(r.to_f64())),
            Node::Coord(i) => self.push(Op::Coord(*i)),
            Node::Func(f) => {
                let callback = match self.names.iter().position(|n| n == &f.name) {
                    Some(k) => k,
                    None => {
                        let cb = self
                            .bindings
                            .get(&f.name)
                            .ok_or_else(|| Error::MissingBinding(f.name.clone()))?;
                        self.callbacks.push(cb.clone());
                        self.names.push(f.name.clone());
                        self.callbacks.len() - 1
                    }
                };
                self.push(Op::Func {
                    callback,
                    args: f.args.clone().into_boxed_slice(),
                    partials: f.partials.clone().into_boxed_slice(),
                })
            }
            Node::Add(v) => {
                let regs = v.iter().map(|t| self.emit(t)).collect::<Result<Vec<_>>>()?;
                self.push(Op::Add(regs.into_boxed_slice()))
            }
            Node::Mul(v) => {
                let regs = v.iter().map(|t| self.emit(t)).collect::<Result<Vec<_>>>()?;
                self.push(Op::Mul(regs.into_boxed_slice()))
            }
            Node::Pow(b, n) => {
                let b = self.emit(b)?;
                self.sources.push(e.clone());
                self.push(Op::Pow(b, *n, self.sources.len() - 1))
            }
            Node::Neg(x) => {
                let x = self.emit(x)?;
                self.push(Op::Neg(x))
            }
            Node::Exp(x) => {
                let x = self.emit(x)?;
                self.push(Op::Exp(x))
            }
            Node::Div(a, b) => {
                let a = self.emit(a)?;
                let b = self.emit(b)?;
                self.sources.push(e.clone());
                self.push(Op::Div(a, b, self.sources.len() - 1))
            }
        };
        self.seen.insert(key, r);
        Ok(r)
    }
}

impl Compiled {
    pub fn new(exprs: &[Expr], bindings: &Bindings) -> Result<Compiled> {
        let mut b = Builder {
            bindings,
            ops: Vec::new(),
            callbacks: Vec::new(),
            names: Vec::new(),
            sources: Vec::new(),
            seen: HashMap::new(),
        };
        // `seen` keys are node addresses, kept valid by `exprs` outliving the builder
        let outputs = exprs
            .iter()
            .map(|e| b.emit(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Compiled {
            ops: b.ops,
            outputs,
            callbacks: b.callbacks,
            sources: b.sources,
        })
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.outputs.len());
        let mut reg: Vec<f64> = Vec::with_capacity(self.ops.len());
        let mut argbuf: Vec<f64> = Vec::with_capacity(8);
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => *c,
                Op::Coord(i) => *x.get(*i).ok_or(Error::Dimension {
                    expected: i + 1,
                    got: x.len(),
                })?,
                Op::Func {
                    callback,
                    args,
                    partials,
                } => {
                    argbuf.clear();
                    for &a in args.iter() {
                        argbuf.push(*x.get(a).ok_or(Error::Dimension {
                            expected: a + 1,
                            got: x.len(),
                        })?);
                    }
                    (self.callbacks[*callback])(&argbuf, partials)
                }
                Op::Add(rs) => rs.iter().map(|&r| reg[r]).sum(),
                Op::Mul(rs) => rs.iter().map(|&r| reg[r]).product(),
                Op::Pow(b, n, src) => {
                    let b = reg[*b];
                    if *n < 0 && b == 0.0 {
                        return Err(Error::DivisionByZero(format!("{:?}", self.sources[*src])));
                    }
                    b.powi(*n)
                }
                Op::Neg(a) => -reg[*a],
                Op::Exp(a) => reg[*a].exp(),
                Op::Div(a, b, src) => {
                    let d = reg[*b];
                    if d == 0.0 {
                        return Err(Error::DivisionByZero(format!("{:?}", self.sources[*src])));
                    }
                    reg[*a] / d
                }
            };
            reg.push(v);
        }
        for (o, &r) in out.iter_mut().zip(&self.outputs) {
            *o = reg[r];
        }
        Ok(())
    }
}

impl Expr {
    /// One-shot evaluation; compile once with [`Compiled`] for hot loops.
    pub fn evaluate(&self, point: &[f64], bindings: &Bindings) -> Result<f64> {
        let c = Compiled::new(std::slice::from_ref(self), bindings)?;
        Ok(c.eval(point)?[0])
    }
}
