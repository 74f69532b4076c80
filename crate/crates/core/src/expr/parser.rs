use super::{BinOp, Expr, ExprKind, Func};
use crate::error::{Error, Result};

const MAX_DEPTH: usize = 256;

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

fn err<T>(offset: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        offset,
        msg: msg.into(),
    })
}

/// Parses an expression. See the crate docs for the grammar.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return err(p.pos, "empty expression");
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return err(p.pos, format!("unexpected '{}'", p.peek_char()));
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> String {
        std::str::from_utf8(&self.src[self.pos..])
            .ok()
            .and_then(|s| s.chars().next())
            .map(|c| c.to_string())
            .unwrap_or_else(|| format!("\\x{:02x}", self.src[self.pos]))
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return err(self.pos, "expression nested too deeply");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let start = self.pos;
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), (start, self.pos));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::new(ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), (start, self.pos));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        self.enter()?;
        self.skip_ws();
        let start = self.pos;
        let base = self.unary()?;
        self.skip_ws();
        let out = if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?;
            Expr::new(
                ExprKind::Bin(BinOp::Pow, Box::new(base), Box::new(exp)),
                (start, self.pos),
            )
        } else {
            base
        };
        self.depth -= 1;
        Ok(out)
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.enter()?;
            self.pos += 1;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), (start, self.pos)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => err(self.pos, "unexpected end of input"),
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let name = self.ident();
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    let func = match Func::from_name(&name) {
                        Some(f) => f,
                        None => return err(start, format!("unknown function '{name}'")),
                    };
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    loop {
                        self.skip_ws();
                        match self.peek() {
                            Some(b',') => {
                                self.pos += 1;
                                args.push(self.expr()?);
                            }
                            Some(b')') => {
                                self.pos += 1;
                                break;
                            }
                            None => return err(self.pos, "unclosed function call"),
                            Some(_) => {
                                return err(self.pos, format!("unexpected '{}'", self.peek_char()))
                            }
                        }
                    }
                    if args.len() != func.arity() {
                        return err(
                            start,
                            format!(
                                "function '{name}' takes {} argument(s), got {}",
                                func.arity(),
                                args.len()
                            ),
                        );
                    }
                    Ok(Expr::new(ExprKind::Call(func, args), (start, self.pos)))
                } else {
                    Ok(Expr::new(ExprKind::Ident(name), (start, self.pos)))
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return err(self.pos, "expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(_) => err(self.pos, format!("unexpected '{}'", self.peek_char())),
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'\'' {
                self.pos += 1;
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.peek().is_some_and(|c| c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return err(start, "malformed number");
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return err(save, "malformed exponent");
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return err(start, "malformed number"),
        };
        if !v.is_finite() {
            return err(start, "number literal out of range");
        }
        Ok(Expr::new(ExprKind::Num(v), (start, self.pos)))
    }
}
