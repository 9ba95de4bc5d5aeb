//! Smooth scalar expressions in the coordinates `x1..xn`.
//!
//! The grammar is deliberately small: constants, coordinates, `+`, `-`, `*`,
//! non-negative integer powers and the entire functions `exp`, `sin`, `cos`.
//! There is no division, so every expression is smooth on all of `R^n`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | power
//! power  := atom ('^' uint)?
//! atom   := number | 'x' uint | '(' expr ')' | func '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x1^2` reads as `-(x1^2)`.

use std::fmt;

use thiserror::Error;

/// Entire unary functions admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
        }
    }
}

/// Expression tree. Variables are 1-based: `Var(1)` is `x1`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Sum(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable x{index} at byte {offset} is outside x1..x{dim}")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        dim: usize,
    },
    #[error("exponent at byte {offset} must be a non-negative integer")]
    InvalidExponent { offset: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// Parses `source` as an expression in `dim` variables.
pub fn parse(source: &str, dim: usize) -> Result<Expr, ParseError> {
    if dim == 0 {
        return Err(ParseError::ZeroDimension);
    }
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
        dim,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sum(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sum(Box::new(lhs), Box::new(Expr::Neg(Box::new(rhs))));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Product(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        if matches!(self.src.get(self.pos), Some(b'-') | Some(b'.')) {
            return Err(ParseError::InvalidExponent { offset: start });
        }
        let digits = self.digits();
        if digits.is_empty() {
            return Err(self.syntax("expected an integer exponent"));
        }
        if matches!(self.src.get(self.pos), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(ParseError::InvalidExponent { offset: start });
        }
        let exponent: u32 = digits
            .parse()
            .ok()
            .filter(|&n: &u32| n <= i32::MAX as u32)
            .ok_or(ParseError::InvalidExponent { offset: start })?;
        Ok(Expr::Pow(Box::new(base), exponent))
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut end = start;
        let bytes = self.src;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end < bytes.len() && bytes[end] == b'.' {
            end += 1;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut probe = end + 1;
            if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
                probe += 1;
            }
            if probe < bytes.len() && bytes[probe].is_ascii_digit() {
                while probe < bytes.len() && bytes[probe].is_ascii_digit() {
                    probe += 1;
                }
                end = probe;
            }
        }
        let text = std::str::from_utf8(&bytes[start..end]).unwrap_or_default();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = end;
                Ok(Expr::Const(v))
            }
            Ok(_) => Err(self.syntax("numeric literal out of range")),
            Err(_) => Err(self.syntax("malformed number")),
        }
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let func = match name {
            "x" => {
                let digits = self.digits();
                if digits.is_empty() {
                    return Err(ParseError::Syntax {
                        offset: self.pos,
                        message: "expected a variable index after 'x'".into(),
                    });
                }
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.dim {
                    return Err(ParseError::VariableOutOfRange {
                        offset: start,
                        index,
                        dim: self.dim,
                    });
                }
                return Ok(Expr::Var(index));
            }
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unknown identifier '{name}'"),
                })
            }
        };
        self.expect(b'(')?;
        let arg = self.expr()?;
        self.expect(b')')?;
        Ok(Expr::Func(func, Box::new(arg)))
    }
}

impl Expr {
    pub fn constant(v: f64) -> Self {
        Expr::Const(v)
    }

    pub fn var(index: usize) -> Self {
        Expr::Var(index)
    }

    pub fn sum(a: Expr, b: Expr) -> Self {
        Expr::Sum(Box::new(a), Box::new(b))
    }

    pub fn product(a: Expr, b: Expr) -> Self {
        Expr::Product(Box::new(a), Box::new(b))
    }

    pub fn pow(base: Expr, exponent: u32) -> Self {
        Expr::Pow(Box::new(base), exponent)
    }

    pub fn neg(a: Expr) -> Self {
        Expr::Neg(Box::new(a))
    }

    pub fn func(f: Func, a: Expr) -> Self {
        Expr::Func(f, Box::new(a))
    }

    /// Largest variable index referenced, or 0 for a constant expression.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => *i,
            Expr::Sum(a, b) | Expr::Product(a, b) => a.max_var().max(b.max_var()),
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Func(_, a) => a.max_var(),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Sum(a, b) | Expr::Product(a, b) => 1 + a.size() + b.size(),
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Func(_, a) => 1 + a.size(),
        }
    }

    /// Evaluates at `x`, where `x[i - 1]` is the value of `xi`.
    ///
    /// Panics if a variable index exceeds `x.len()`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i - 1],
            Expr::Sum(a, b) => a.evaluate(x) + b.evaluate(x),
            Expr::Product(a, b) => a.evaluate(x) * b.evaluate(x),
            Expr::Pow(a, n) => a.evaluate(x).powi(*n as i32),
            Expr::Neg(a) => -a.evaluate(x),
            Expr::Func(f, a) => f.apply(a.evaluate(x)),
        }
    }

    /// Partial derivative with respect to `x{var}`, simplified.
    pub fn differentiate(&self, var: usize) -> Expr {
        self.derive(var).simplify()
    }

    fn derive(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Sum(a, b) => Expr::sum(a.derive(var), b.derive(var)),
            Expr::Product(a, b) => Expr::sum(
                Expr::product(a.derive(var), (**b).clone()),
                Expr::product((**a).clone(), b.derive(var)),
            ),
            Expr::Pow(_, 0) => Expr::Const(0.0),
            Expr::Pow(a, n) => Expr::product(
                Expr::product(Expr::Const(*n as f64), Expr::pow((**a).clone(), n - 1)),
                a.derive(var),
            ),
            Expr::Neg(a) => Expr::neg(a.derive(var)),
            Expr::Func(Func::Exp, a) => Expr::product(self.clone(), a.derive(var)),
            Expr::Func(Func::Sin, a) => {
                Expr::product(Expr::func(Func::Cos, (**a).clone()), a.derive(var))
            }
            Expr::Func(Func::Cos, a) => Expr::neg(Expr::product(
                Expr::func(Func::Sin, (**a).clone()),
                a.derive(var),
            )),
        }
    }

    /// Bottom-up local rewriting: additive and multiplicative identities,
    /// the zero annihilator, trivial exponents, double negation and folding
    /// of constant subtrees. Folding is skipped when it would produce a
    /// non-finite constant.
    pub fn simplify(&self) -> Expr {
        let node = match self {
            Expr::Const(_) | Expr::Var(_) => return self.clone(),
            Expr::Sum(a, b) => Expr::sum(a.simplify(), b.simplify()),
            Expr::Product(a, b) => Expr::product(a.simplify(), b.simplify()),
            Expr::Pow(a, n) => Expr::pow(a.simplify(), *n),
            Expr::Neg(a) => Expr::neg(a.simplify()),
            Expr::Func(f, a) => Expr::func(*f, a.simplify()),
        };
        rewrite(node)
    }
}

fn finite(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

/// Rewrites a node whose children are already simplified.
fn rewrite(node: Expr) -> Expr {
    match node {
        Expr::Sum(a, b) => match (*a, *b) {
            (Expr::Const(x), Expr::Const(y)) => {
                finite(x + y).unwrap_or_else(|| Expr::sum(Expr::Const(x), Expr::Const(y)))
            }
            (Expr::Const(z), e) | (e, Expr::Const(z)) if z == 0.0 => e,
            (a, b) => Expr::sum(a, b),
        },
        Expr::Product(a, b) => match (*a, *b) {
            (Expr::Const(x), Expr::Const(y)) => {
                finite(x * y).unwrap_or_else(|| Expr::product(Expr::Const(x), Expr::Const(y)))
            }
            (Expr::Const(z), _) | (_, Expr::Const(z)) if z == 0.0 => Expr::Const(0.0),
            (Expr::Const(o), e) | (e, Expr::Const(o)) if o == 1.0 => e,
            (a, b) => Expr::product(a, b),
        },
        Expr::Pow(a, n) => match (*a, n) {
            (_, 0) => Expr::Const(1.0),
            (e, 1) => e,
            (Expr::Const(c), n) => {
                finite(c.powi(n as i32)).unwrap_or_else(|| Expr::pow(Expr::Const(c), n))
            }
            (e, n) => Expr::pow(e, n),
        },
        Expr::Neg(a) => match *a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            Expr::Product(l, r) if matches!(*l, Expr::Const(_)) => {
                let Expr::Const(c) = *l else { unreachable!() };
                rewrite(Expr::Product(Box::new(Expr::Const(-c)), r))
            }
            e => Expr::neg(e),
        },
        Expr::Func(f, a) => match *a {
            Expr::Const(c) => finite(f.apply(c)).unwrap_or_else(|| Expr::func(f, Expr::Const(c))),
            e => Expr::func(f, e),
        },
        leaf => leaf,
    }
}

/// Canonical fully parenthesized infix. Negative constants print as `(-c)`
/// so the output always re-parses to an expression with the same printing.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Sum(a, b) => write!(f, "({a} + {b})"),
            Expr::Product(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
