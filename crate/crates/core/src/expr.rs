//! Arithmetic expression parsing and evaluation for user-defined fields.
//!
//! Grammar (precedence low to high):
//!   sum     := product (('+' | '-') product)*
//!   product := unary (('*' | '/') unary)*
//!   unary   := '-' unary | power
//!   power   := atom ('^' unary)?          -- right-associative
//!   atom    := number | var | func '(' args ')' | '(' sum ')'
//!
//! `^` binds tighter than unary minus, so `-2^2` parses as `-(2^2) = -4`.
//! Variables are `t` and `x1` .. `x8`. Whitespace is insignificant.

use crate::error::{Error, Result};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprAst {
    Num(f64),
    /// The time variable `t`.
    Time,
    /// State coordinate `x{index+1}`.
    Coord(usize),
    Neg(Box<ExprAst>),
    Bin(BinOp, Box<ExprAst>, Box<ExprAst>),
    Call(Func, Vec<ExprAst>),
}

impl ExprAst {
    /// Highest state-coordinate index referenced (1-based), 0 when none.
    pub fn max_coord(&self) -> usize {
        match self {
            ExprAst::Num(_) | ExprAst::Time => 0,
            ExprAst::Coord(i) => i + 1,
            ExprAst::Neg(e) => e.max_coord(),
            ExprAst::Bin(_, a, b) => a.max_coord().max(b.max_coord()),
            ExprAst::Call(_, args) => args.iter().map(|a| a.max_coord()).max().unwrap_or(0),
        }
    }

    /// True when the expression references neither `t` nor any `x` variable.
    pub fn is_constant(&self) -> bool {
        match self {
            ExprAst::Num(_) => true,
            ExprAst::Time | ExprAst::Coord(_) => false,
            ExprAst::Neg(e) => e.is_constant(),
            ExprAst::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            ExprAst::Call(_, args) => args.iter().all(|a| a.is_constant()),
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{v}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token together with its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize)> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = self.pos;
            let mut seen_dot = false;
            while end < self.src.len()
                && (self.src[end].is_ascii_digit() || (self.src[end] == b'.' && !seen_dot))
            {
                seen_dot |= self.src[end] == b'.';
                end += 1;
            }
            // optional exponent
            if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                let mut e = end + 1;
                if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                    e += 1;
                }
                if e < self.src.len() && self.src[e].is_ascii_digit() {
                    while e < self.src.len() && self.src[e].is_ascii_digit() {
                        e += 1;
                    }
                    end = e;
                }
            }
            let text = std::str::from_utf8(&self.src[start..end]).unwrap();
            let value: f64 = text.parse().map_err(|_| Error::SyntaxError {
                offset: start,
                expected: "a number".into(),
                found: format!("`{text}`"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(value), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = self.pos;
            while end < self.src.len()
                && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
            {
                end += 1;
            }
            let text = std::str::from_utf8(&self.src[start..end]).unwrap().to_string();
            self.pos = end;
            return Ok((Tok::Ident(text), start));
        }
        Err(Error::SyntaxError {
            offset: start,
            expected: "a number, identifier, operator or parenthesis".into(),
            found: format!("`{}`", c as char),
        })
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: (Tok, usize),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let current = lexer.next()?;
        Ok(Parser { lexer, current })
    }

    fn advance(&mut self) -> Result<(Tok, usize)> {
        let prev = std::mem::replace(&mut self.current, self.lexer.next()?);
        Ok(prev)
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<()> {
        if self.current.0 == tok {
            self.advance()?;
            Ok(())
        } else {
            Err(Error::SyntaxError {
                offset: self.current.1,
                expected: expected.into(),
                found: self.current.0.describe(),
            })
        }
    }

    fn sum(&mut self) -> Result<ExprAst> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.current.0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.product()?;
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<ExprAst> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.current.0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = ExprAst::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<ExprAst> {
        if self.current.0 == Tok::Minus {
            self.advance()?;
            let inner = self.unary()?;
            return Ok(ExprAst::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprAst> {
        let base = self.atom()?;
        if self.current.0 == Tok::Caret {
            self.advance()?;
            // right-associative; the exponent may carry a unary minus
            let exponent = self.unary()?;
            return Ok(ExprAst::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprAst> {
        let (tok, offset) = self.advance()?;
        match tok {
            Tok::Num(v) => Ok(ExprAst::Num(v)),
            Tok::LParen => {
                let inner = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, offset),
            other => Err(Error::SyntaxError {
                offset,
                expected: "a number, variable, function call or `(`".into(),
                found: other.describe(),
            }),
        }
    }

    fn ident(&mut self, name: String, offset: usize) -> Result<ExprAst> {
        if self.current.0 == Tok::LParen {
            let func = Func::from_name(&name)
                .ok_or_else(|| Error::UnknownIdentifier { name: name.clone(), offset })?;
            self.advance()?;
            let mut args = vec![self.sum()?];
            while self.current.0 == Tok::Comma {
                self.advance()?;
                args.push(self.sum()?);
            }
            self.expect(Tok::RParen, "`,` or `)`")?;
            if args.len() != func.arity() {
                return Err(Error::ArityError {
                    func: name,
                    expected: func.arity(),
                    got: args.len(),
                    offset,
                });
            }
            return Ok(ExprAst::Call(func, args));
        }
        if name == "t" {
            return Ok(ExprAst::Time);
        }
        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(idx) = rest.parse::<usize>() {
                if (1..=crate::numerics::MAX_DIM).contains(&idx) {
                    return Ok(ExprAst::Coord(idx - 1));
                }
            }
        }
        Err(Error::UnknownIdentifier { name, offset })
    }
}

/// Parse an expression; whitespace insignificant, deterministic grammar.
pub fn parse(text: &str) -> Result<ExprAst> {
    let mut p = Parser::new(text)?;
    let ast = p.sum()?;
    if p.current.0 != Tok::Eof {
        return Err(Error::SyntaxError {
            offset: p.current.1,
            expected: "an operator or end of input".into(),
            found: p.current.0.describe(),
        });
    }
    Ok(ast)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate with `t` and state coordinates bound. IEEE double arithmetic;
/// log/sqrt of negative arguments and division by zero are reported as
/// `DomainError` instead of silently propagating NaN.
pub fn eval(ast: &ExprAst, t: f64, x: &crate::numerics::VecD) -> Result<f64> {
    match ast {
        ExprAst::Num(v) => Ok(*v),
        ExprAst::Time => Ok(t),
        ExprAst::Coord(i) => {
            if *i < x.dim() {
                Ok(x.get(*i))
            } else {
                Err(Error::UnboundVariable { index: i + 1, dim: x.dim() })
            }
        }
        ExprAst::Neg(e) => Ok(-eval(e, t, x)?),
        ExprAst::Bin(op, a, b) => {
            let a = eval(a, t, x)?;
            let b = eval(b, t, x)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(Error::DomainError(format!("division by zero: {a} / 0")))
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => checked_pow(a, b),
            }
        }
        ExprAst::Call(func, args) => {
            let a = eval(&args[0], t, x)?;
            match func {
                Func::Sin => Ok(a.sin()),
                Func::Cos => Ok(a.cos()),
                Func::Exp => Ok(a.exp()),
                Func::Tanh => Ok(a.tanh()),
                Func::Abs => Ok(a.abs()),
                Func::Log => {
                    if a <= 0.0 {
                        Err(Error::DomainError(format!("log of non-positive value {a}")))
                    } else {
                        Ok(a.ln())
                    }
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        Err(Error::DomainError(format!("sqrt of negative value {a}")))
                    } else {
                        Ok(a.sqrt())
                    }
                }
                Func::Min => Ok(a.min(eval(&args[1], t, x)?)),
                Func::Max => Ok(a.max(eval(&args[1], t, x)?)),
                Func::Pow => checked_pow(a, eval(&args[1], t, x)?),
            }
        }
    }
}

fn checked_pow(base: f64, exponent: f64) -> Result<f64> {
    let v = base.powf(exponent);
    if v.is_nan() && !base.is_nan() && !exponent.is_nan() {
        Err(Error::DomainError(format!("{base} ^ {exponent} is undefined")))
    } else {
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn precedence(ast: &ExprAst) -> u8 {
    match ast {
        ExprAst::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        ExprAst::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        ExprAst::Neg(_) => 3,
        ExprAst::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

/// Pretty-print with minimal parentheses; `parse(print(ast)) == ast`.
pub fn print(ast: &ExprAst) -> String {
    let mut out = String::new();
    write_expr(&mut out, ast, 0);
    out
}

fn write_expr(out: &mut String, ast: &ExprAst, min_prec: u8) {
    let prec = precedence(ast);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match ast {
        ExprAst::Num(v) => {
            if *v < 0.0 || !v.is_finite() {
                // negative literals re-tokenize as unary minus; parenthesize
                let _ = write!(out, "({v})");
            } else {
                let _ = write!(out, "{v}");
            }
        }
        ExprAst::Time => out.push('t'),
        ExprAst::Coord(i) => {
            let _ = write!(out, "x{}", i + 1);
        }
        ExprAst::Neg(e) => {
            out.push('-');
            write_expr(out, e, 3);
        }
        ExprAst::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => ("+", 1, 2),
                // rhs of `-` needs higher precedence to preserve left-assoc
                BinOp::Sub => ("-", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                // `^` is right-associative: lhs strictly tighter, rhs equal ok
                BinOp::Pow => ("^", 5, 3),
            };
            write_expr(out, a, lp);
            out.push_str(sym);
            write_expr(out, b, rp);
        }
        ExprAst::Call(func, args) => {
            out.push_str(func.name());
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_expr(out, arg, 0);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}
