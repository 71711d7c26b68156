//! Arithmetic expressions over `x1..xn` and `t`, with symbolic derivatives.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := ("-" | "+") unary | power
//! power  := atom ("^" unary)?
//! atom   := number | "t" | "x"k | "pi" | "e" | func "(" args ")" | "(" expr ")"
//! func   := sin | cos | exp | log | sqrt | abs | pow
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x1^2`
//! is `-(x1^2)`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    /// Derivative of `abs`; zero at zero. Not available in source text.
    Sign,
}

impl Func {
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based state index.
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// One-based character column.
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { chars: src.chars().collect(), pos: 0 };
    p.skip_ws();
    if p.pos == p.chars.len() {
        return Err(p.error("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(&format!("unexpected '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> ParseError {
        ParseError { column: self.pos + 1, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(self.error(&format!("unexpected '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Parser| {
            while p.pos < p.chars.len() && p.chars[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            digits(self);
        }
        // An exponent only when digits follow, so `2e` stays `2` then `e`.
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let mut look = self.pos + 1;
            if matches!(self.chars.get(look), Some('+' | '-')) {
                look += 1;
            }
            if self.chars.get(look).is_some_and(|c| c.is_ascii_digit()) {
                self.pos = look;
                digits(self);
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
            _ => Err(ParseError { column: start + 1, message: format!("invalid number '{text}'") }),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        let at = |message: String| ParseError { column: start + 1, message };
        let func = match name.as_str() {
            "t" => return Ok(Expr::Time),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            "e" => return Ok(Expr::Num(std::f64::consts::E)),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            "pow" => None,
            _ => {
                if let Some(k) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                    if k >= 1 && !name[1..].starts_with('0') {
                        return Ok(Expr::Var(k - 1));
                    }
                }
                return Err(at(format!("unknown symbol '{name}'")));
            }
        };
        if !self.eat('(') {
            return Err(self.error(&format!("expected '(' after '{name}'")));
        }
        let first = self.expr()?;
        let e = match func {
            Some(f) => Expr::Call(f, Box::new(first)),
            None => {
                if !self.eat(',') {
                    return Err(self.error("pow takes two arguments"));
                }
                Expr::Pow(Box::new(first), Box::new(self.expr()?))
            }
        };
        if !self.eat(')') {
            return Err(self.error("expected ')'"));
        }
        Ok(e)
    }
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x + y),
        (a, b) if is_num(&a, 0.0) => b,
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x - y),
        (a, b) if is_num(&b, 0.0) => a,
        (a, b) if is_num(&a, 0.0) => neg(b),
        (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => num(x * y),
        (a, b) if is_num(&a, 0.0) || is_num(&b, 0.0) => num(0.0),
        (a, b) if is_num(&a, 1.0) => b,
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) if y != 0.0 => num(x / y),
        (a, _) if is_num(&a, 0.0) => num(0.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (_, b) if is_num(&b, 0.0) => num(1.0),
        (a, b) if is_num(&b, 1.0) => a,
        (a, b) => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(f.apply(v)),
        a => Expr::Call(f, Box::new(a)),
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Time => t,
            Expr::Neg(a) => -a.eval(x, t),
            Expr::Add(a, b) => a.eval(x, t) + b.eval(x, t),
            Expr::Sub(a, b) => a.eval(x, t) - b.eval(x, t),
            Expr::Mul(a, b) => a.eval(x, t) * b.eval(x, t),
            Expr::Div(a, b) => a.eval(x, t) / b.eval(x, t),
            Expr::Pow(a, b) => pow_eval(a.eval(x, t), b, x, t),
            Expr::Call(f, a) => f.apply(a.eval(x, t)),
        }
    }

    /// One more than the largest state index referenced, 0 for none.
    pub fn state_dim(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Time => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.state_dim(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.state_dim().max(b.state_dim())
            }
        }
    }

    /// `∂/∂x_{var}`, simplified by constant folding.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) | Expr::Time => num(0.0),
            Expr::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(mul(a.derivative(var), b.simplified()), mul(a.simplified(), b.derivative(var))),
            Expr::Div(a, b) => {
                let (u, v) = (a.simplified(), b.simplified());
                div(sub(mul(a.derivative(var), v.clone()), mul(u, b.derivative(var))), pow(v, num(2.0)))
            }
            Expr::Pow(a, b) => {
                let (u, v) = (a.simplified(), b.simplified());
                let (du, dv) = (a.derivative(var), b.derivative(var));
                if is_num(&dv, 0.0) {
                    mul(mul(v.clone(), pow(u, sub(v, num(1.0)))), du)
                } else {
                    let whole = pow(u.clone(), v.clone());
                    mul(whole, add(mul(dv, call(Func::Log, u.clone())), div(mul(v, du), u)))
                }
            }
            Expr::Call(f, a) => {
                let u = a.simplified();
                let du = a.derivative(var);
                let outer = match f {
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => div(num(1.0), u),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, u)),
                    Func::Abs => call(Func::Sign, u),
                    Func::Sign => num(0.0),
                };
                mul(outer, du)
            }
        }
    }

    /// Constant-folded copy.
    pub fn simplified(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Time => self.clone(),
            Expr::Neg(a) => neg(a.simplified()),
            Expr::Add(a, b) => add(a.simplified(), b.simplified()),
            Expr::Sub(a, b) => sub(a.simplified(), b.simplified()),
            Expr::Mul(a, b) => mul(a.simplified(), b.simplified()),
            Expr::Div(a, b) => div(a.simplified(), b.simplified()),
            Expr::Pow(a, b) => match (a.simplified(), b.simplified()) {
                (Expr::Num(x), Expr::Num(y)) => num(x.powf(y)),
                (a, b) => pow(a, b),
            },
            Expr::Call(f, a) => call(*f, a.simplified()),
        }
    }
}

/// Integer exponents use `powi` so negative bases work.
fn pow_eval(base: f64, exponent: &Expr, x: &[f64], t: f64) -> f64 {
    if let Expr::Num(k) = exponent {
        if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 {
            return base.powi(*k as i32);
        }
    }
    base.powf(exponent.eval(x, t))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Time => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Per-component expressions with their symbolic Jacobian.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionField {
    components: Vec<Expr>,
    jacobian: Vec<Vec<Expr>>,
}

impl ExpressionField {
    /// Components must reference only `x1..x_{len}` and `t`.
    pub fn new(components: Vec<Expr>) -> Result<Self, String> {
        let n = components.len();
        if n == 0 {
            return Err("a field needs at least one component".into());
        }
        for (i, c) in components.iter().enumerate() {
            if c.state_dim() > n {
                return Err(format!("component {} references x{} but the dimension is {n}", i + 1, c.state_dim()));
            }
        }
        let jacobian = components.iter().map(|c| (0..n).map(|j| c.derivative(j)).collect()).collect();
        Ok(Self { components, jacobian })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x, t)).collect()
    }

    /// Row-major Jacobian entries.
    pub fn jacobian(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.jacobian.iter().flat_map(|row| row.iter().map(|e| e.eval(x, t))).collect()
    }

    pub fn jacobian_entry(&self, i: usize, j: usize) -> &Expr {
        &self.jacobian[i][j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: &[f64], t: f64) -> f64 {
        parse(src).unwrap().eval(x, t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", &[], 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &[], 0.0), 512.0);
        assert_eq!(ev("-x1^2", &[3.0], 0.0), -9.0);
        assert_eq!(ev("2^-1", &[], 0.0), 0.5);
        assert_eq!(ev("8 / 4 / 2", &[], 0.0), 1.0);
        assert_eq!(ev("10 - 4 - 3", &[], 0.0), 3.0);
        assert_eq!(ev("-6 - t^3", &[], 2.0), -14.0);
        assert_eq!(ev("(-2)^3", &[], 0.0), -8.0);
    }

    #[test]
    fn functions_constants_and_numbers() {
        assert!((ev("sin(pi/2) + cos(0) + exp(0) + log(e) + sqrt(4) + abs(-1)", &[], 0.0) - 7.0).abs() < 1e-15);
        assert_eq!(ev("pow(x2, 2)", &[0.0, 3.0], 0.0), 9.0);
        assert_eq!(ev("1.5e2 + .5 + 2E-1", &[], 0.0), 150.7);
        assert_eq!(ev("2*e", &[], 0.0), 2.0 * std::f64::consts::E);
    }

    #[test]
    fn parse_errors_carry_columns() {
        assert_eq!(parse("1 + ").unwrap_err().column, 5);
        assert_eq!(parse("x1 + y").unwrap_err().column, 6);
        assert_eq!(parse("sin x1").unwrap_err().column, 5);
        assert!(parse("(1 + 2").is_err());
        assert!(parse("x0").is_err());
        assert!(parse("pow(1)").is_err());
        assert!(parse("").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse("sign(x1)").is_err());
    }

    #[test]
    fn derivatives_of_example_field() {
        let f2 = parse("5*x1 + (2 + (-6 - t^3))*x2 + sin(x2)").unwrap();
        let d = f2.derivative(1);
        let (x, t) = ([0.3, -1.2], 1.1);
        assert!((d.eval(&x, t) - (2.0 - 6.0 - 1.1f64.powi(3) + (-1.2f64).cos())).abs() < 1e-14);
        assert_eq!(f2.derivative(0).simplified(), Expr::Num(5.0));
    }

    #[test]
    fn derivative_rules() {
        type Case = (&'static str, fn(f64) -> f64);
        let cases: &[Case] = &[
            ("x1^3", |x| 3.0 * x * x),
            ("exp(2*x1)", |x| 2.0 * (2.0 * x).exp()),
            ("log(x1)", |x| 1.0 / x),
            ("sqrt(x1)", |x| 0.5 / x.sqrt()),
            ("abs(x1)", |x| x.signum()),
            ("x1 / (1 + x1)", |x| 1.0 / (1.0 + x).powi(2)),
            ("pow(x1, x1)", |x| x.powf(x) * (x.ln() + 1.0)),
            ("cos(x1)", |x| -x.sin()),
        ];
        for (src, exact) in cases {
            let d = parse(src).unwrap().derivative(0);
            for x in [0.3, 1.7, 2.5] {
                assert!((d.eval(&[x], 0.0) - exact(x)).abs() < 1e-12, "{src} at {x}: {d}");
            }
        }
    }

    #[test]
    fn field_dimension_checks() {
        let f = ExpressionField::new(vec![parse("-x1").unwrap()]).unwrap();
        assert_eq!(f.jacobian(&[2.0], 0.0), vec![-1.0]);
        assert!(ExpressionField::new(vec![parse("x2").unwrap()]).is_err());
        assert!(ExpressionField::new(vec![]).is_err());
    }
}
