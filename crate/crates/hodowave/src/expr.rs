//! A small arithmetic expression grammar with analytic differentiation.
//!
//! Data functions enter from configuration files as strings over one free
//! variable: numeric literals, `+ - * / ^`, parentheses, and the functions
//! `sin`, `cos`, `exp`. Exponents must be numeric constants so that repeated
//! differentiation stays inside the grammar. Derivatives are produced
//! symbolically, with light simplification so that fourth derivatives of
//! nested expressions do not balloon.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    /// Parse `src` as an expression in the single variable `var`.
    pub fn parse(src: &str, var: &str) -> Result<Expr> {
        let tokens = tokenize(src, var)?;
        let mut p = Parser { tokens, pos: 0, src };
        let e = p.expression()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input at token {} in `{}`",
                p.pos, src
            )));
        }
        Ok(e)
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Pow(a, k) => a.eval(x).powf(*k),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Symbolic derivative with respect to the free variable.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2.0),
            ),
            Expr::Neg(a) => neg(a.derivative()),
            Expr::Pow(a, k) => mul(
                mul(Expr::Const(*k), pow((**a).clone(), k - 1.0)),
                a.derivative(),
            ),
            Expr::Sin(a) => mul(cos((**a).clone()), a.derivative()),
            Expr::Cos(a) => neg(mul(sin((**a).clone()), a.derivative())),
            Expr::Exp(a) => mul(exp((**a).clone()), a.derivative()),
        }
    }

    /// The chain of derivatives `[self, self', ..]` up to `max_order`.
    pub fn derivatives(self, max_order: usize) -> Vec<Expr> {
        let mut out = Vec::with_capacity(max_order + 1);
        out.push(self);
        for k in 0..max_order {
            let d = out[k].derivative();
            out.push(d);
        }
        out
    }
}

// Smart constructors: fold constants and drop neutral elements so repeated
// differentiation stays compact.

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
        (Expr::Const(x), _) if *x == 0.0 => b,
        (_, Expr::Const(y)) if *y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
        (_, Expr::Const(y)) if *y == 0.0 => a,
        (Expr::Const(x), _) if *x == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (_, Expr::Const(y)) if *y == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), _) if *x == 1.0 => b,
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), _) if *x == 0.0 => Expr::Const(0.0),
        (Expr::Const(x), Expr::Const(y)) => Expr::Const(x / y),
        (_, Expr::Const(y)) if *y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match &a {
        Expr::Const(x) => Expr::Const(-x),
        Expr::Neg(inner) => (**inner).clone(),
        _ => Expr::Neg(Box::new(a)),
    }
}

fn pow(a: Expr, k: f64) -> Expr {
    if k == 0.0 {
        return Expr::Const(1.0);
    }
    if k == 1.0 {
        return a;
    }
    if let Expr::Const(x) = &a {
        return Expr::Const(x.powf(k));
    }
    Expr::Pow(Box::new(a), k)
}

fn sin(a: Expr) -> Expr {
    Expr::Sin(Box::new(a))
}
fn cos(a: Expr) -> Expr {
    Expr::Cos(Box::new(a))
}
fn exp(a: Expr) -> Expr {
    Expr::Exp(Box::new(a))
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Func(&'static str),
}

fn tokenize(src: &str, var: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' | '\u{00d7}' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number `{}` in `{}`", text, src)))?;
                out.push(Tok::Num(v));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                match word.as_str() {
                    "sin" => out.push(Tok::Func("sin")),
                    "cos" => out.push(Tok::Func("cos")),
                    "exp" => out.push(Tok::Func("exp")),
                    "pi" => out.push(Tok::Num(std::f64::consts::PI)),
                    w if w == var => out.push(Tok::Var),
                    w => {
                        return Err(Error::Expr(format!(
                            "unknown identifier `{}` in `{}` (variable is `{}`)",
                            w, src, var
                        )))
                    }
                }
            }
            c => {
                return Err(Error::Expr(format!("unexpected character `{}` in `{}`", c, src)));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!(
                "expected {:?}, found {:?} in `{}`",
                t, got, self.src
            ))),
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = add(lhs, rhs);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = mul(lhs, rhs);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = div(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            let inner = self.unary()?;
            return Ok(neg(inner));
        }
        if let Some(Tok::Plus) = self.peek() {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            // exponent: an optionally signed numeric constant
            let mut sign = 1.0;
            while let Some(Tok::Minus) = self.peek() {
                self.bump();
                sign = -sign;
            }
            match self.bump() {
                Some(Tok::Num(k)) => Ok(pow(base, sign * k)),
                got => Err(Error::Expr(format!(
                    "exponent must be a numeric constant, found {:?} in `{}`",
                    got, self.src
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Var) => Ok(Expr::Var),
            Some(Tok::Func(name)) => {
                self.expect(Tok::LParen)?;
                let arg = self.expression()?;
                self.expect(Tok::RParen)?;
                Ok(match name {
                    "sin" => sin(arg),
                    "cos" => cos(arg),
                    _ => exp(arg),
                })
            }
            Some(Tok::LParen) => {
                let e = self.expression()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            got => Err(Error::Expr(format!(
                "unexpected token {:?} in `{}`",
                got, self.src
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("1 + 0.1*sin(x)", "x").unwrap();
        assert_relative_eq!(e.eval(0.3), 1.0 + 0.1 * 0.3f64.sin(), max_relative = 1e-15);

        let e = Expr::parse("-u", "u").unwrap();
        assert_eq!(e.eval(0.7), -0.7);

        let e = Expr::parse("2*exp(-x^2)/(1 + x)", "x").unwrap();
        let x = 0.4;
        assert_relative_eq!(
            e.eval(x),
            2.0 * (-x * x).exp() / (1.0 + x),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Expr::parse("sin x", "x").is_err());
        assert!(Expr::parse("x + y", "x").is_err());
        assert!(Expr::parse("x ^ x", "x").is_err());
        assert!(Expr::parse("1 +", "x").is_err());
        assert!(Expr::parse("log(x)", "x").is_err());
    }

    #[test]
    fn derivative_chain_matches_hand_results() {
        let ds = Expr::parse("2 + sin(x)", "x").unwrap().derivatives(3);
        let x = 0.5;
        assert_relative_eq!(ds[1].eval(x), x.cos(), max_relative = 1e-15);
        assert_relative_eq!(ds[2].eval(x), -x.sin(), max_relative = 1e-15);
        assert_relative_eq!(ds[3].eval(x), -x.cos(), max_relative = 1e-15);

        let ds = Expr::parse("x^3/(1+x)", "x").unwrap().derivatives(1);
        // d/dx x^3/(1+x) = (3x^2(1+x) - x^3)/(1+x)^2
        let f1 = |x: f64| (3.0 * x * x * (1.0 + x) - x * x * x) / (1.0 + x).powi(2);
        assert_relative_eq!(ds[1].eval(0.7), f1(0.7), max_relative = 1e-14);
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-2.0f64..2.0).prop_map(Expr::Const),
            Just(Expr::Var),
        ];
        leaf.prop_recursive(3, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Sin(Box::new(a))),
                inner.clone().prop_map(|a| Expr::Cos(Box::new(a))),
                (inner.clone(), 1u32..4u32)
                    .prop_map(|(a, k)| Expr::Pow(Box::new(a), k as f64)),
            ]
        })
    }

    proptest! {
        // Symbolic derivative agrees with a central finite difference on
        // random expressions wherever both are well scaled.
        #[test]
        fn derivative_matches_finite_difference(e in arb_expr(), x in -1.0f64..1.0) {
            let d = e.derivative();
            let h = 1e-5;
            let fd = (e.eval(x + h) - e.eval(x - h)) / (2.0 * h);
            let sym = d.eval(x);
            prop_assume!(fd.is_finite() && sym.is_finite());
            let scale = 1.0 + fd.abs().max(sym.abs());
            prop_assert!((fd - sym).abs() / scale < 1e-6);
        }
    }
}
