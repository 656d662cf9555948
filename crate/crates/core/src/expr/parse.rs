//! Recursive-descent parser for the metric-definition expression grammar.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | ident '(' ident (',' ident)* ')'
//!         | 'exp' '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! Exponents may carry a leading minus sign. A derivative of an opaque
//! function is written `name__d0_1(args)` (partials by argument position),
//! which is also how the printer emits them.

use num::{BigInt, BigRational, Num};

use super::{Expr, FuncRef, Node};
use crate::chart::Chart;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl Lexer<'_> {
    fn next_token(&mut self) -> Result<(Tok, usize)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            let int_part = &self.src[start..end];
            let mut frac_part = "";
            if end < bytes.len() && bytes[end] == b'.' {
                let fs = end + 1;
                end = fs;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                frac_part = &self.src[fs..end];
            }
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(Error::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
            self.pos = end;
            let digits = format!("{int_part}{frac_part}");
            let num = BigInt::from_str_radix(&digits, 10).map_err(|_| Error::Syntax {
                offset: start,
                message: "malformed number".into(),
            })?;
            let den = num::pow(BigInt::from(10), frac_part.len());
            return Ok((Tok::Num(BigRational::new(num, den)), start));
        }
        if c.is_ascii_alphabetic() {
            let mut end = start + 1;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap();
        if "+-*/^(),".contains(ch) {
            self.pos += 1;
            return Ok((Tok::Sym(ch), start));
        }
        Err(Error::Syntax {
            offset: start,
            message: format!("unexpected character `{ch}`"),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    chart: &'a Chart,
}

/// Parse `source` against the coordinates of `chart`.
pub fn parse_expr(source: &str, chart: &Chart) -> Result<Expr> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
    };
    let (tok, offset) = lexer.next_token()?;
    let mut p = Parser {
        lexer,
        tok,
        offset,
        chart,
    };
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected());
    }
    Ok(e)
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<()> {
        let (tok, offset) = self.lexer.next_token()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self) -> Error {
        let message = match &self.tok {
            Tok::End => "unexpected end of input".to_string(),
            Tok::Num(_) => "unexpected number".to_string(),
            Tok::Ident(s) => format!("unexpected identifier `{s}`"),
            Tok::Sym(c) => format!("unexpected `{c}`"),
        };
        Error::Syntax {
            offset: self.offset,
            message,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.tok == Tok::Sym(c) {
            self.bump()
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.tok {
                Tok::Sym('+') => {
                    self.bump()?;
                    terms.push(self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump()?;
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.tok {
                Tok::Sym('*') => {
                    self.bump()?;
                    let rhs = self.factor()?;
                    acc = match acc.node() {
                        Node::Mul(v) => {
                            let mut v = v.clone();
                            v.push(rhs);
                            Expr::product(v)
                        }
                        _ => Expr::product(vec![acc, rhs]),
                    };
                }
                Tok::Sym('/') => {
                    self.bump()?;
                    let rhs = self.factor()?;
                    acc = acc / rhs;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.tok != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump()?;
        let negative = if self.tok == Tok::Sym('-') {
            self.bump()?;
            true
        } else {
            false
        };
        let Tok::Num(n) = &self.tok else {
            return Err(self.unexpected());
        };
        let exponent = if n.is_integer() {
            i32::try_from(n.to_integer()).ok()
        } else {
            None
        };
        let Some(mut k) = exponent else {
            return Err(Error::Syntax {
                offset: self.offset,
                message: "exponent must be an integer".into(),
            });
        };
        if negative {
            k = -k;
        }
        self.bump()?;
        Ok(base.pow(k))
    }

    fn base(&mut self) -> Result<Expr> {
        match self.tok.clone() {
            Tok::Num(r) => {
                self.bump()?;
                Ok(Expr::rational(r))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym('-') => {
                self.bump()?;
                Ok(-self.base()?)
            }
            Tok::Ident(name) => {
                let name_offset = self.offset;
                self.bump()?;
                if self.tok != Tok::Sym('(') {
                    return match self.chart.index_of(&name) {
                        Some(i) => Ok(Expr::coord(i)),
                        None => Err(Error::UnknownSymbol {
                            name,
                            offset: name_offset,
                        }),
                    };
                }
                self.bump()?;
                if name == "exp" {
                    let e = self.expr()?;
                    self.expect(')')?;
                    return Ok(e.exp());
                }
                let mut args = Vec::new();
                loop {
                    let Tok::Ident(arg) = self.tok.clone() else {
                        return Err(self.unexpected());
                    };
                    let i = self.chart.index_of(&arg).ok_or(Error::UnknownSymbol {
                        name: arg,
                        offset: self.offset,
                    })?;
                    args.push(i);
                    self.bump()?;
                    match self.tok {
                        Tok::Sym(',') => self.bump()?,
                        Tok::Sym(')') => {
                            self.bump()?;
                            break;
                        }
                        _ => return Err(self.unexpected()),
                    }
                }
                let (fname, partials) = split_derivative_tag(&name, args.len(), name_offset)?;
                Ok(Expr::from_node(Node::Func(FuncRef {
                    name: fname,
                    args,
                    partials,
                })))
            }
            _ => Err(self.unexpected()),
        }
    }
}

fn split_derivative_tag(name: &str, arity: usize, offset: usize) -> Result<(String, Vec<usize>)> {
    let Some((base, tag)) = name.split_once("__d") else {
        return Ok((name.to_string(), Vec::new()));
    };
    let bad = || Error::Syntax {
        offset,
        message: format!("malformed derivative tag in `{name}`"),
    };
    let mut partials = Vec::new();
    for part in tag.split('_') {
        let k: usize = part.parse().map_err(|_| bad())?;
        if k >= arity {
            return Err(bad());
        }
        partials.push(k);
    }
    partials.sort_unstable();
    if base.is_empty() {
        return Err(bad());
    }
    Ok((base.to_string(), partials))
}
