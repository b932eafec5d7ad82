//! Small arithmetic expression language for right-hand sides.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' unary)?
//! atom  := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names: `t`; state components `x0, x1, ...` (`x` and `u` alias `x0`); forcing
//! components `f0, f1, ...` (`f` aliases `f0`); delayed state `z{i}_{c}` for lag
//! `i`, component `c` (`z{i}` for component 0); the constants `pi` and `e`; and
//! any named parameter, substituted at parse time. Functions: `sin cos ln exp
//! abs sqrt pow norm`, where `norm(x)` is the Euclidean norm of the whole state.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::signal::{SampledSignal, Window};

pub const MAX_DEPTH: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Ln,
    Exp,
    Abs,
    Sqrt,
    Pow,
    Norm,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" | "log" => Func::Ln,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "norm" => Func::Norm,
            _ => return None,
        })
    }

    fn arity(self) -> Option<usize> {
        match self {
            Func::Pow => Some(2),
            Func::Norm => None,
            _ => Some(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    State(usize),
    Forcing(usize),
    /// Component `c` of the state at lag index `i`.
    Lagged(usize, usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// Euclidean norm of the whole state.
    StateNorm,
}

/// Names an expression may refer to.
#[derive(Clone, Copy, Debug)]
pub struct Scope<'a> {
    pub dim: usize,
    pub forcing_dim: usize,
    pub lags: usize,
    pub params: &'a BTreeMap<String, f64>,
}

/// Values the variables take at one evaluation.
#[derive(Clone, Copy, Debug)]
pub struct Ctx<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub f: &'a [f64],
    /// Lagged states, `lags × dim`, lag-major.
    pub z: &'a [f64],
}

impl Expr {
    pub fn parse(src: &str, scope: &Scope) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            scope,
            src,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(p.error("unexpected trailing input"));
        }
        if e.depth() > MAX_DEPTH {
            return Err(Error::Parse(format!(
                "`{src}`: expression depth {} exceeds {MAX_DEPTH}",
                e.depth()
            )));
        }
        Ok(e)
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Neg(a) => 1 + a.depth(),
            Expr::Bin(_, a, b) => 1 + a.depth().max(b.depth()),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Forcing(_) => true,
            Expr::Neg(a) => a.uses_time(),
            Expr::Bin(_, a, b) => a.uses_time() || b.uses_time(),
            Expr::Call(_, args) => args.iter().any(Expr::uses_time),
            _ => false,
        }
    }

    pub fn eval(&self, c: &Ctx) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Time => c.t,
            Expr::State(i) => c.x[*i],
            Expr::Forcing(i) => c.f[*i],
            Expr::Lagged(i, k) => c.z[i * c.x.len() + k],
            Expr::StateNorm => c.x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Expr::Neg(a) => -a.eval(c),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(c), b.eval(c));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(f, args) => match f {
                Func::Sin => args[0].eval(c).sin(),
                Func::Cos => args[0].eval(c).cos(),
                Func::Ln => args[0].eval(c).ln(),
                Func::Exp => args[0].eval(c).exp(),
                Func::Abs => args[0].eval(c).abs(),
                Func::Sqrt => args[0].eval(c).sqrt(),
                Func::Pow => pow(args[0].eval(c), args[1].eval(c)),
                Func::Norm => args
                    .iter()
                    .map(|a| {
                        let v = a.eval(c);
                        v * v
                    })
                    .sum::<f64>()
                    .sqrt(),
            },
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == b.round() && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Time => write!(f, "t"),
            Expr::State(i) => write!(f, "x{i}"),
            Expr::Forcing(i) => write!(f, "f{i}"),
            Expr::Lagged(i, c) => write!(f, "z{i}_{c}"),
            Expr::StateNorm => write!(f, "norm(x)"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", format!("{func:?}").to_lowercase())?;
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

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sym(char),
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{src}`: bad number `{text}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Name(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return Err(Error::Parse(format!("`{src}`: unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    scope: &'a Scope<'a>,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("`{}`: {msg} at token {}", self.src, self.pos))
    }

    fn peek_sym(&self, c: char) -> bool {
        self.tokens.get(self.pos) == Some(&Tok::Sym(c))
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek_sym(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym('+') {
                BinOp::Add
            } else if self.eat_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym('*') {
                BinOp::Mul
            } else if self.eat_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_sym('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat_sym('^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.tokens.get(self.pos).cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat_sym(')') {
                    return Err(self.error("missing `)`"));
                }
                Ok(e)
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.peek_sym('(') {
                    self.call(&name)
                } else {
                    self.name(&name)
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }

    fn call(&mut self, name: &str) -> Result<Expr> {
        let func = Func::from_name(name)
            .ok_or_else(|| Error::Parse(format!("`{}`: unknown function `{name}`", self.src)))?;
        self.pos += 1;
        if func == Func::Norm
            && self.tokens.get(self.pos) == Some(&Tok::Name("x".into()))
            && self.tokens.get(self.pos + 1) == Some(&Tok::Sym(')'))
        {
            self.pos += 2;
            return Ok(Expr::StateNorm);
        }
        let mut args = vec![self.expr()?];
        while self.eat_sym(',') {
            args.push(self.expr()?);
        }
        if !self.eat_sym(')') {
            return Err(self.error("missing `)` after arguments"));
        }
        if let Some(n) = func.arity() {
            if args.len() != n {
                return Err(Error::Parse(format!(
                    "`{}`: `{name}` takes {n} argument(s), got {}",
                    self.src,
                    args.len()
                )));
            }
        }
        Ok(Expr::Call(func, args))
    }

    fn name(&self, name: &str) -> Result<Expr> {
        let s = self.scope;
        if let Some(v) = s.params.get(name) {
            return Ok(Expr::Const(*v));
        }
        let unknown = || Error::Parse(format!("`{}`: unknown name `{name}`", self.src));
        let index = |rest: &str, bound: usize| -> Result<usize> {
            let i: usize = rest.parse().map_err(|_| unknown())?;
            if i < bound {
                Ok(i)
            } else {
                Err(Error::Parse(format!(
                    "`{}`: `{name}` is out of range (only {bound} available)",
                    self.src
                )))
            }
        };
        match name {
            "t" => Ok(Expr::Time),
            "pi" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" => Ok(Expr::Const(std::f64::consts::E)),
            "x" | "u" => Ok(Expr::State(index("0", s.dim)?)),
            "f" => Ok(Expr::Forcing(index("0", s.forcing_dim)?)),
            _ => {
                if let Some(rest) = name.strip_prefix('x') {
                    Ok(Expr::State(index(rest, s.dim)?))
                } else if let Some(rest) = name.strip_prefix('f') {
                    Ok(Expr::Forcing(index(rest, s.forcing_dim)?))
                } else if let Some(rest) = name.strip_prefix('z') {
                    let (lag, comp) = rest.split_once('_').unwrap_or((rest, "0"));
                    Ok(Expr::Lagged(index(lag, s.lags)?, index(comp, s.dim)?))
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

/// Samples an expression in `t` and parameters on `[w.a, w.b]` with step `dt`.
pub fn sample_in_t(src: &str, params: &BTreeMap<String, f64>, w: &Window, dt: f64) -> Result<SampledSignal> {
    let scope = Scope {
        dim: 0,
        forcing_dim: 0,
        lags: 0,
        params,
    };
    let e = Expr::parse(src, &scope)?;
    let n = SampledSignal::points_for(w.a, w.b, dt);
    let s = SampledSignal::from_fn(w.a, dt, n, |t| {
        e.eval(&Ctx {
            t,
            x: &[],
            f: &[],
            z: &[],
        })
    })?;
    Ok(s.with_label(src))
}
