//! Expressions in one variable `t`, used for user-supplied coefficient
//! functions (φ, ψ, σ, weights, distribution functions).
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := primary (("^" | "**") unary)?        right associative
//! primary := number | "t" | constant | name "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! Constants: `pi`, `e`. One-argument functions: `exp`, `ln` (alias `log`),
//! `sqrt`, `abs`, `sin`, `cos`, `tan`, `sinh`, `cosh`, `tanh`, `expm1`,
//! `log1p`. Two-argument functions: `pow`, `min`, `max`. `min`, `max` and
//! `abs` allow piecewise-smooth coefficients.
//!
//! `-t^2` parses as `-(t^2)` and `2^3^2` as `2^(3^2)`.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call1(Fn1, Box<Node>),
    Call2(Fn2, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fn1 {
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Expm1,
    Log1p,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fn2 {
    Pow,
    Min,
    Max,
}

/// A parsed expression in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input in `{src}` at token {}",
                p.pos + 1
            )));
        }
        Ok(Expr { source: src.to_string(), root })
    }

    pub fn eval(&self, t: f64) -> f64 {
        eval(&self.root, t)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when the expression does not mention `t`.
    pub fn is_constant(&self) -> bool {
        !mentions_var(&self.root)
    }

    pub fn into_func(self) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
        Arc::new(move |t| self.eval(t))
    }
}

fn mentions_var(n: &Node) -> bool {
    match n {
        Node::Num(_) => false,
        Node::Var => true,
        Node::Neg(a) | Node::Call1(_, a) => mentions_var(a),
        Node::Bin(_, a, b) | Node::Call2(_, a, b) => mentions_var(a) || mentions_var(b),
    }
}

fn eval(n: &Node, t: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var => t,
        Node::Neg(a) => -eval(a, t),
        Node::Bin(op, a, b) => {
            let x = eval(a, t);
            let y = eval(b, t);
            match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x * y,
                Op::Div => x / y,
                Op::Pow => pow(x, y),
            }
        }
        Node::Call1(f, a) => {
            let x = eval(a, t);
            match f {
                Fn1::Exp => x.exp(),
                Fn1::Ln => x.ln(),
                Fn1::Sqrt => x.sqrt(),
                Fn1::Abs => x.abs(),
                Fn1::Sin => x.sin(),
                Fn1::Cos => x.cos(),
                Fn1::Tan => x.tan(),
                Fn1::Sinh => x.sinh(),
                Fn1::Cosh => x.cosh(),
                Fn1::Tanh => x.tanh(),
                Fn1::Expm1 => x.exp_m1(),
                Fn1::Log1p => x.ln_1p(),
            }
        }
        Node::Call2(f, a, b) => {
            let x = eval(a, t);
            let y = eval(b, t);
            match f {
                Fn2::Pow => pow(x, y),
                Fn2::Min => x.min(y),
                Fn2::Max => x.max(y),
            }
        }
    }
}

fn pow(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= 64.0 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

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
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' if chars.get(i + 1) == Some(&'*') => {
                out.push(Tok::Caret);
                i += 2
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            d if d.is_ascii_digit() || d == '.' => {
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
                    .map_err(|_| Error::Expr(format!("bad number `{text}`")))?;
                out.push(Tok::Num(v));
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::Expr(format!("unexpected character `{other}` in `{src}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.next() {
            Some(ref t) if *t == want => Ok(()),
            got => Err(Error::Expr(format!("expected {want:?}, found {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => Op::Add,
                Some(Tok::Minus) => Op::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => Op::Mul,
                Some(Tok::Slash) => Op::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen)?;
                    call(&name, args)
                } else {
                    match name.as_str() {
                        "t" => Ok(Node::Var),
                        "pi" => Ok(Node::Num(std::f64::consts::PI)),
                        "e" => Ok(Node::Num(std::f64::consts::E)),
                        _ => Err(Error::Expr(format!("unknown name `{name}`"))),
                    }
                }
            }
            got => Err(Error::Expr(format!("unexpected token {got:?}"))),
        }
    }
}

fn call(name: &str, mut args: Vec<Node>) -> Result<Node> {
    let f1 = match name {
        "exp" => Some(Fn1::Exp),
        "ln" | "log" => Some(Fn1::Ln),
        "sqrt" => Some(Fn1::Sqrt),
        "abs" => Some(Fn1::Abs),
        "sin" => Some(Fn1::Sin),
        "cos" => Some(Fn1::Cos),
        "tan" => Some(Fn1::Tan),
        "sinh" => Some(Fn1::Sinh),
        "cosh" => Some(Fn1::Cosh),
        "tanh" => Some(Fn1::Tanh),
        "expm1" => Some(Fn1::Expm1),
        "log1p" => Some(Fn1::Log1p),
        _ => None,
    };
    if let Some(f) = f1 {
        if args.len() != 1 {
            return Err(Error::Expr(format!("`{name}` takes one argument, got {}", args.len())));
        }
        return Ok(Node::Call1(f, Box::new(args.pop().unwrap())));
    }
    let f2 = match name {
        "pow" => Fn2::Pow,
        "min" => Fn2::Min,
        "max" => Fn2::Max,
        _ => return Err(Error::Expr(format!("unknown function `{name}`"))),
    };
    if args.len() != 2 {
        return Err(Error::Expr(format!("`{name}` takes two arguments, got {}", args.len())));
    }
    let b = args.pop().unwrap();
    let a = args.pop().unwrap();
    Ok(Node::Call2(f2, Box::new(a), Box::new(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, t: f64) -> f64 {
        Expr::parse(s).unwrap().eval(t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(ev("-t^2", 3.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("2**-1", 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0), -4.0);
    }

    #[test]
    fn functions_and_constants() {
        assert!((ev("exp(ln(t))", 2.5) - 2.5).abs() < 1e-15);
        assert!((ev("sqrt(pi)^2", 0.0) - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(ev("pow(1 - t, 2)", 0.25), 0.5625);
        assert_eq!(ev("max(t, 1 - t)", 0.2), 0.8);
        assert_eq!(ev("1.5e-1 * 2E1", 0.0), 3.0);
        assert!((ev("e", 0.0) - std::f64::consts::E).abs() < 1e-16);
    }

    #[test]
    fn constant_detection() {
        assert!(Expr::parse("2*pi").unwrap().is_constant());
        assert!(!Expr::parse("1 + 0*t").unwrap().is_constant());
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in ["", "1 +", "(1", "foo(1)", "x", "pow(1)", "1 2", "exp(1,2)", "3 $ 4"] {
            assert!(Expr::parse(bad).is_err(), "`{bad}` should fail");
        }
    }
}
