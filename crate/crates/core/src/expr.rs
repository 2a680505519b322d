//! Small arithmetic-expression language used for profiles, metric factors,
//! region constraints and vector fields in configuration files.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, the functions
//! `sin cos tan exp ln log sqrt sinh cosh tanh abs`, and the constants `pi`, `e`.
//! Expressions are compiled against a fixed list of variable names and can be
//! differentiated symbolically.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Ln => x.ln(),
            Func::Sqrt => x.sqrt(),
            Func::Sinh => x.sinh(),
            Func::Cosh => x.cosh(),
            Func::Tanh => x.tanh(),
            Func::Abs => x.abs(),
        }
    }
}

/// Expression tree. Variables are indices into the name list the expression
/// was compiled against.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A parsed expression together with its variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Formula {
    vars: Vec<String>,
    tree: Expr,
}

impl Formula {
    pub fn parse(text: &str, vars: &[&str]) -> Result<Formula> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0, vars };
        let tree = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input in expression `{text}`"
            )));
        }
        Ok(Formula {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            tree: simplify(tree),
        })
    }

    pub fn constant(value: f64, vars: &[&str]) -> Formula {
        Formula {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            tree: Expr::Const(value),
        }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn tree(&self) -> &Expr {
        &self.tree
    }

    /// Evaluate at the given variable values (indexed like `vars`).
    pub fn eval(&self, x: &[f64]) -> f64 {
        eval(&self.tree, x)
    }

    /// Symbolic partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Formula {
        Formula {
            vars: self.vars.clone(),
            tree: simplify(diff(&self.tree, i)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.tree, Expr::Const(_))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, &self.tree, &self.vars, 0)
    }
}

fn eval(e: &Expr, x: &[f64]) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => x[*i],
        Expr::Neg(a) => -eval(a, x),
        Expr::Add(a, b) => eval(a, x) + eval(b, x),
        Expr::Sub(a, b) => eval(a, x) - eval(b, x),
        Expr::Mul(a, b) => eval(a, x) * eval(b, x),
        Expr::Div(a, b) => eval(a, x) / eval(b, x),
        Expr::Pow(a, b) => {
            let base = eval(a, x);
            match **b {
                Expr::Const(c) if c.fract() == 0.0 && c.abs() < 64.0 => base.powi(c as i32),
                _ => base.powf(eval(b, x)),
            }
        }
        Expr::Call(f, a) => f.apply(eval(a, x)),
    }
}

fn c(v: f64) -> Box<Expr> {
    Box::new(Expr::Const(v))
}

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

fn diff(e: &Expr, i: usize) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(j) => Expr::Const(if *j == i { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::Neg(bx(diff(a, i))),
        Expr::Add(a, b) => Expr::Add(bx(diff(a, i)), bx(diff(b, i))),
        Expr::Sub(a, b) => Expr::Sub(bx(diff(a, i)), bx(diff(b, i))),
        Expr::Mul(a, b) => Expr::Add(
            bx(Expr::Mul(bx(diff(a, i)), b.clone())),
            bx(Expr::Mul(a.clone(), bx(diff(b, i)))),
        ),
        Expr::Div(a, b) => Expr::Div(
            bx(Expr::Sub(
                bx(Expr::Mul(bx(diff(a, i)), b.clone())),
                bx(Expr::Mul(a.clone(), bx(diff(b, i)))),
            )),
            bx(Expr::Pow(b.clone(), c(2.0))),
        ),
        Expr::Pow(a, b) => {
            if let Expr::Const(n) = **b {
                // n * a^(n-1) * a'
                Expr::Mul(
                    bx(Expr::Mul(c(n), bx(Expr::Pow(a.clone(), c(n - 1.0))))),
                    bx(diff(a, i)),
                )
            } else {
                // a^b * (b' ln a + b a'/a)
                Expr::Mul(
                    bx(e.clone()),
                    bx(Expr::Add(
                        bx(Expr::Mul(bx(diff(b, i)), bx(Expr::Call(Func::Ln, a.clone())))),
                        bx(Expr::Div(bx(Expr::Mul(b.clone(), bx(diff(a, i)))), a.clone())),
                    )),
                )
            }
        }
        Expr::Call(f, a) => {
            let inner = diff(a, i);
            let outer = match f {
                Func::Sin => Expr::Call(Func::Cos, a.clone()),
                Func::Cos => Expr::Neg(bx(Expr::Call(Func::Sin, a.clone()))),
                Func::Tan => Expr::Div(c(1.0), bx(Expr::Pow(bx(Expr::Call(Func::Cos, a.clone())), c(2.0)))),
                Func::Exp => Expr::Call(Func::Exp, a.clone()),
                Func::Ln => Expr::Div(c(1.0), a.clone()),
                Func::Sqrt => Expr::Div(c(0.5), bx(Expr::Call(Func::Sqrt, a.clone()))),
                Func::Sinh => Expr::Call(Func::Cosh, a.clone()),
                Func::Cosh => Expr::Call(Func::Sinh, a.clone()),
                Func::Tanh => Expr::Sub(
                    c(1.0),
                    bx(Expr::Pow(bx(Expr::Call(Func::Tanh, a.clone())), c(2.0))),
                ),
                Func::Abs => Expr::Div(a.clone(), bx(Expr::Call(Func::Abs, a.clone()))),
            };
            Expr::Mul(bx(outer), bx(inner))
        }
    }
}

/// Constant folding and removal of additive/multiplicative identities.
fn simplify(e: Expr) -> Expr {
    use Expr::*;
    match e {
        Const(_) | Var(_) => e,
        Neg(a) => match simplify(*a) {
            Const(v) => Const(-v),
            Neg(inner) => *inner,
            a => Neg(bx(a)),
        },
        Add(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), o) | (o, Const(z)) if z == 0.0 => o,
            (x, Neg(y)) => Sub(bx(x), y),
            (x, y) => Add(bx(x), bx(y)),
        },
        Sub(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x - y),
            (o, Const(z)) if z == 0.0 => o,
            (Const(z), o) if z == 0.0 => simplify(Neg(bx(o))),
            (x, y) => Sub(bx(x), bx(y)),
        },
        Mul(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), x) | (x, Const(o)) if o == 1.0 => x,
            (Const(m), x) | (x, Const(m)) if m == -1.0 => Neg(bx(x)),
            (x, y) => Mul(bx(x), bx(y)),
        },
        Div(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x / y),
            (Const(z), _) if z == 0.0 => Const(0.0),
            (x, Const(o)) if o == 1.0 => x,
            (x, y) => Div(bx(x), bx(y)),
        },
        Pow(a, b) => match (simplify(*a), simplify(*b)) {
            (Const(x), Const(y)) => Const(x.powf(y)),
            (_, Const(z)) if z == 0.0 => Const(1.0),
            (x, Const(o)) if o == 1.0 => x,
            (x, y) => Pow(bx(x), bx(y)),
        },
        Call(f, a) => match simplify(*a) {
            Const(v) => Const(f.apply(v)),
            a => Call(f, bx(a)),
        },
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Const(v) if *v < 0.0 => 3,
        _ => 5,
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, vars: &[String], parent: u8) -> fmt::Result {
    let prec = precedence(e);
    let paren = prec < parent;
    if paren {
        write!(f, "(")?;
    }
    match e {
        Expr::Const(v) => {
            if *v == std::f64::consts::PI {
                write!(f, "pi")?
            } else {
                write!(f, "{v:?}")?
            }
        }
        Expr::Var(i) => write!(f, "{}", vars[*i])?,
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_expr(f, a, vars, 4)?;
        }
        Expr::Add(a, b) => {
            write_expr(f, a, vars, 1)?;
            write!(f, " + ")?;
            write_expr(f, b, vars, 2)?;
        }
        Expr::Sub(a, b) => {
            write_expr(f, a, vars, 1)?;
            write!(f, " - ")?;
            write_expr(f, b, vars, 2)?;
        }
        Expr::Mul(a, b) => {
            write_expr(f, a, vars, 2)?;
            write!(f, "*")?;
            write_expr(f, b, vars, 3)?;
        }
        Expr::Div(a, b) => {
            write_expr(f, a, vars, 2)?;
            write!(f, "/")?;
            write_expr(f, b, vars, 3)?;
        }
        Expr::Pow(a, b) => {
            write_expr(f, a, vars, 5)?;
            write!(f, "^")?;
            write_expr(f, b, vars, 4)?;
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, vars, 0)?;
            write!(f, ")")?;
        }
    }
    if paren {
        write!(f, ")")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
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
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
            out.push(Token::Num(v));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(ch) {
            out.push(Token::Op(ch));
            i += 1;
        } else {
            return Err(Error::Parse(format!("unexpected character `{ch}` in expression")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(bx(lhs), bx(rhs))
            } else {
                Expr::Sub(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(bx(lhs), bx(rhs))
            } else {
                Expr::Div(bx(lhs), bx(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(bx(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(bx(base), bx(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Parse("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(func, bx(arg)));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(Error::Parse(format!("unknown identifier `{name}`"))),
                }
            }
            Token::Op(op) => Err(Error::Parse(format!("unexpected `{op}`"))),
        }
    }
}
