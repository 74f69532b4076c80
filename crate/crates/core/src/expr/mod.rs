//! Coordinate expressions: parsing, printing and jet evaluation.
//!
//! Grammar, with `^` right-associative and unary minus binding tighter than
//! the base of `^` (so `-x^2` is `(-x)^2`):
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parser::parse;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Pow,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(f64),
    Ident(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// A parsed expression. Equality compares structure only, not source spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: (usize, usize),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: (usize, usize)) -> Expr {
        Expr { kind, span }
    }

    pub fn num(v: f64) -> Expr {
        Expr::new(ExprKind::Num(v), (0, 0))
    }

    /// Every identifier referenced, sorted.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_idents(&mut out);
        out
    }

    fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Num(_) => {}
            ExprKind::Ident(n) => {
                out.insert(n.clone());
            }
            ExprKind::Neg(a) => a.collect_idents(out),
            ExprKind::Bin(_, a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.collect_idents(out)),
        }
    }

    /// Replaces identifiers by expressions. Spans of inserted subtrees are
    /// reset to the span of the identifier they replace.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Ident(n) => match map.get(n) {
                Some(e) => return e.respan(self.span),
                None => ExprKind::Ident(n.clone()),
            },
            ExprKind::Num(v) => ExprKind::Num(*v),
            ExprKind::Neg(a) => ExprKind::Neg(Box::new(a.substitute(map))),
            ExprKind::Bin(op, a, b) => {
                ExprKind::Bin(*op, Box::new(a.substitute(map)), Box::new(b.substitute(map)))
            }
            ExprKind::Call(f, args) => {
                ExprKind::Call(*f, args.iter().map(|a| a.substitute(map)).collect())
            }
        };
        Expr::new(kind, self.span)
    }

    fn respan(&self, span: (usize, usize)) -> Expr {
        let kind = match &self.kind {
            ExprKind::Neg(a) => ExprKind::Neg(Box::new(a.respan(span))),
            ExprKind::Bin(op, a, b) => {
                ExprKind::Bin(*op, Box::new(a.respan(span)), Box::new(b.respan(span)))
            }
            ExprKind::Call(f, args) => ExprKind::Call(*f, args.iter().map(|a| a.respan(span)).collect()),
            k => k.clone(),
        };
        Expr::new(kind, span)
    }

    /// Plain real evaluation with a name lookup.
    pub fn eval_f64(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        let sing = |msg: String| Error::singular(msg).with_span(self.span);
        Ok(match &self.kind {
            ExprKind::Num(v) => *v,
            ExprKind::Ident(n) => lookup(n).ok_or_else(|| Error::UnknownIdentifier(n.clone()))?,
            ExprKind::Neg(a) => -a.eval_f64(lookup)?,
            ExprKind::Bin(op, a, b) => {
                let (x, y) = (a.eval_f64(lookup)?, b.eval_f64(lookup)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if !(y.abs() >= crate::jet::DIV_THRESHOLD) {
                            return Err(sing(format!("division by {y:e}")));
                        }
                        x / y
                    }
                    BinOp::Pow => real_pow(x, y).map_err(|e| e.with_span(self.span))?,
                }
            }
            ExprKind::Call(f, args) => {
                let x = args[0].eval_f64(lookup)?;
                match f {
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if !(x > 0.0) {
                            return Err(sing(format!("log of non-positive value {x:e}")));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sqrt => {
                        if !(x > 0.0) {
                            return Err(sing(format!("sqrt of non-positive value {x:e}")));
                        }
                        x.sqrt()
                    }
                    Func::Pow => {
                        let y = args[1].eval_f64(lookup)?;
                        real_pow(x, y).map_err(|e| e.with_span(self.span))?
                    }
                }
            }
        })
    }
}

fn real_pow(x: f64, y: f64) -> Result<f64> {
    let integral = y.fract() == 0.0;
    if !integral && !(x > 0.0) {
        return Err(Error::singular(format!(
            "non-integer power {y} of non-positive value {x:e}"
        )));
    }
    if x == 0.0 && y < 0.0 {
        return Err(Error::singular("negative power of zero"));
    }
    Ok(x.powf(y))
}

/// Fully parenthesized rendering that reparses to an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Num(v) => {
                if *v < 0.0 {
                    write!(f, "(0-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            ExprKind::Ident(n) => write!(f, "{n}"),
            ExprKind::Neg(a) => write!(f, "(-{a})"),
            ExprKind::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// An expression with identifiers resolved to coordinate slots or constants.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Const(f64),
    Coord(usize),
    Neg(Box<Compiled>),
    Bin(BinOp, Box<Compiled>, Box<Compiled>, (usize, usize)),
    Call(Func, Vec<Compiled>, (usize, usize)),
}

impl Compiled {
    pub(crate) fn compile(
        e: &Expr,
        coords: &[String],
        params: &BTreeMap<String, f64>,
    ) -> Result<Compiled> {
        Ok(match &e.kind {
            ExprKind::Num(v) => Compiled::Const(*v),
            ExprKind::Ident(n) => {
                if let Some(i) = coords.iter().position(|c| c == n) {
                    Compiled::Coord(i)
                } else if let Some(v) = params.get(n) {
                    Compiled::Const(*v)
                } else {
                    return Err(Error::UnknownIdentifier(n.clone()));
                }
            }
            ExprKind::Neg(a) => Compiled::Neg(Box::new(Self::compile(a, coords, params)?)),
            ExprKind::Bin(op, a, b) => Compiled::Bin(
                *op,
                Box::new(Self::compile(a, coords, params)?),
                Box::new(Self::compile(b, coords, params)?),
                e.span,
            ),
            ExprKind::Call(f, args) => Compiled::Call(
                *f,
                args.iter()
                    .map(|a| Self::compile(a, coords, params))
                    .collect::<Result<_>>()?,
                e.span,
            ),
        })
    }

    pub(crate) fn depends_on_coords(&self) -> bool {
        match self {
            Compiled::Const(_) => false,
            Compiled::Coord(_) => true,
            Compiled::Neg(a) => a.depends_on_coords(),
            Compiled::Bin(_, a, b, _) => a.depends_on_coords() || b.depends_on_coords(),
            Compiled::Call(_, args, _) => args.iter().any(|a| a.depends_on_coords()),
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, Compiled::Const(v) if *v == 0.0)
    }

    pub(crate) fn eval_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        let n = point.len();
        Ok(match self {
            Compiled::Const(v) => Jet::constant(*v, n, order)?,
            Compiled::Coord(i) => Jet::seed(point, *i, order)?,
            Compiled::Neg(a) => -a.eval_jet(point, order)?,
            Compiled::Bin(op, a, b, span) => {
                let x = a.eval_jet(point, order)?;
                if *op == BinOp::Pow && !b.depends_on_coords() {
                    let y = b.eval_jet(point, 0)?.value();
                    return x.powf(y).map_err(|e| e.with_span(*span));
                }
                let y = b.eval_jet(point, order)?;
                let r = match op {
                    BinOp::Add => Ok(&x + &y),
                    BinOp::Sub => Ok(&x - &y),
                    BinOp::Mul => Ok(&x * &y),
                    BinOp::Div => x.div(&y),
                    BinOp::Pow => x.pow(&y),
                };
                r.map_err(|e| e.with_span(*span))?
            }
            Compiled::Call(f, args, span) => {
                let x = args[0].eval_jet(point, order)?;
                let r = match f {
                    Func::Exp => Ok(x.exp()),
                    Func::Log => x.ln(),
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Sqrt => x.sqrt(),
                    Func::Pow => {
                        if !args[1].depends_on_coords() {
                            x.powf(args[1].eval_jet(point, 0)?.value())
                        } else {
                            x.pow(&args[1].eval_jet(point, order)?)
                        }
                    }
                };
                r.map_err(|e| e.with_span(*span))?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    fn ident(n: &str) -> Box<Expr> {
        Box::new(Expr::new(ExprKind::Ident(n.into()), (0, 0)))
    }

    #[test]
    fn quotient_tree() {
        let e = p("kappa/(x1+x2)");
        let want = ExprKind::Bin(
            BinOp::Div,
            ident("kappa"),
            Box::new(Expr::new(ExprKind::Bin(BinOp::Add, ident("x1"), ident("x2")), (0, 0))),
        );
        assert_eq!(e.kind, want);
    }

    #[test]
    fn syntax_error_offset() {
        assert!(parse("2*x1p").is_ok());
        match parse("2*/x1") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn call_of_negation() {
        let e = p("exp(-f)");
        assert_eq!(
            e.kind,
            ExprKind::Call(Func::Exp, vec![Expr::new(ExprKind::Neg(ident("f")), (0, 0))])
        );
    }

    #[test]
    fn unknown_function_and_arity() {
        assert!(matches!(parse("tan(x)"), Err(Error::Parse { offset: 0, .. })));
        assert!(matches!(parse("pow(x)"), Err(Error::Parse { .. })));
        assert!(matches!(parse("exp(x, y)"), Err(Error::Parse { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let none = |_: &str| None;
        assert_eq!(p("2+3*4^2").eval_f64(&none).unwrap(), 50.0);
        assert_eq!(p("2^3^2").eval_f64(&none).unwrap(), 512.0);
        assert_eq!(p("-2^2").eval_f64(&none).unwrap(), 4.0);
        assert_eq!(p("8/4/2").eval_f64(&none).unwrap(), 1.0);
        assert_eq!(p("1-2-3").eval_f64(&none).unwrap(), -4.0);
        assert_eq!(p("2^-1").eval_f64(&none).unwrap(), 0.5);
    }

    #[test]
    fn malformed_inputs() {
        for s in ["", "(", "1+", "x1)", "1e", "1e999", "3 4", ".", "a(1)", "f'(", "#"] {
            assert!(parse(s).is_err(), "{s} should fail");
        }
        assert!(parse("x1' + x_2").is_ok());
        let deep = "(".repeat(10_000) + "1" + &")".repeat(10_000);
        assert!(matches!(parse(&deep), Err(Error::Parse { .. })));
    }

    #[test]
    fn print_reparse() {
        for s in ["-x^2", "a-(b-c)", "pow(x1, 2.5)*exp(-x2)/3", "1e-3*x", "sin(cos(x))^-2"] {
            let e = p(s);
            assert_eq!(p(&e.to_string()), e, "{s}");
        }
    }

    #[test]
    fn substitution_replaces_identifiers() {
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), p("x1*x2"));
        let e = p("a + 1").substitute(&m);
        assert_eq!(e, p("(x1*x2) + 1"));
    }

    #[test]
    fn singularity_carries_span() {
        let c = Compiled::compile(&p("1 + log(x1)"), &["x1".into()], &BTreeMap::new()).unwrap();
        match c.eval_jet(&[-1.0], 1) {
            Err(Error::Singular { span, .. }) => assert_eq!(span, Some((4, 11))),
            other => panic!("unexpected {other:?}"),
        }
    }
}
