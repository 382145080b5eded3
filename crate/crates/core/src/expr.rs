//! Expression DSL for vector fields and input shapes.
//!
//! Grammar (loosest to tightest): `+ -`, `* /`, unary `-`, `^` (right
//! associative; its right operand may carry a unary minus), atoms. Atoms are
//! numbers, declared variables, parenthesised expressions and calls of the
//! built-in functions. Variables are resolved to indices at parse time so
//! evaluation works on plain slices.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Tanh,
    Sech,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Tanh,
        Func::Sech,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A parsed expression. `offset` is the byte offset of the node in the source
/// and is what domain errors report.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub offset: usize,
}

/// Value plus gradient with respect to every variable of the owning list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr { node: Node::Num(value), offset: 0 }
    }

    pub fn var(index: usize) -> Expr {
        Expr { node: Node::Var(index), offset: 0 }
    }

    /// Parses `source`; identifiers must appear in `variables`, whose order
    /// fixes the layout of evaluation points.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expr> {
        for (i, v) in variables.iter().enumerate() {
            if !is_identifier(v) {
                return Err(Error::InvalidParameter(format!("`{v}` is not an identifier")));
            }
            if variables[..i].contains(v) {
                return Err(Error::InvalidParameter(format!("variable `{v}` declared twice")));
            }
        }
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0, end: source.len(), variables };
        if p.tokens.is_empty() {
            return Err(Error::Syntax { offset: 0, message: "empty expression".to_string() });
        }
        let e = p.additive()?;
        if let Some(t) = p.peek() {
            return Err(Error::Syntax { offset: t.offset, message: "unexpected trailing input".to_string() });
        }
        Ok(e)
    }

    /// Edge count of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match &self.node {
            Node::Num(_) | Node::Var(_) => 0,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match &self.node {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Call(_, a) => 1 + a.node_count(),
            Node::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn count_calls(&self) -> usize {
        match &self.node {
            Node::Num(_) | Node::Var(_) => 0,
            Node::Neg(a) => a.count_calls(),
            Node::Call(_, a) => 1 + a.count_calls(),
            Node::Binary(_, a, b) => a.count_calls() + b.count_calls(),
        }
    }

    /// Largest variable index used, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match &self.node {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_variable(),
            Node::Binary(_, a, b) => match (a.max_variable(), b.max_variable()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Equality ignoring source offsets.
    pub fn structurally_eq(&self, other: &Expr) -> bool {
        match (&self.node, &other.node) {
            (Node::Num(a), Node::Num(b)) => a.to_bits() == b.to_bits(),
            (Node::Var(a), Node::Var(b)) => a == b,
            (Node::Neg(a), Node::Neg(b)) => a.structurally_eq(b),
            (Node::Call(f, a), Node::Call(g, b)) => f == g && a.structurally_eq(b),
            (Node::Binary(o, a1, b1), Node::Binary(p, a2, b2)) => {
                o == p && a1.structurally_eq(a2) && b1.structurally_eq(b2)
            }
            _ => false,
        }
    }

    /// Replaces variables with index `>= first` by the literals `values[i - first]`.
    pub fn bind_trailing(&self, first: usize, values: &[f64]) -> Expr {
        let node = match &self.node {
            Node::Var(i) if *i >= first => Node::Num(values[*i - first]),
            Node::Num(_) | Node::Var(_) => self.node.clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.bind_trailing(first, values))),
            Node::Call(f, a) => Node::Call(*f, Box::new(a.bind_trailing(first, values))),
            Node::Binary(o, a, b) => Node::Binary(
                *o,
                Box::new(a.bind_trailing(first, values)),
                Box::new(b.bind_trailing(first, values)),
            ),
        };
        Expr { node, offset: self.offset }
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        let v = match &self.node {
            Node::Num(v) => return Ok(*v),
            Node::Var(i) => {
                return point.get(*i).copied().ok_or_else(|| {
                    Error::Dimension(format!("variable index {i} outside point of length {}", point.len()))
                })
            }
            Node::Neg(a) => -a.eval(point)?,
            Node::Call(f, a) => apply(*f, a.eval(point)?, self.offset)?,
            Node::Binary(op, a, b) => {
                let (x, y) = (a.eval(point)?, b.eval(point)?);
                binary(*op, x, y, self.offset)?
            }
        };
        finite(v, self.op_name(), self.offset)
    }

    /// Evaluates with names bound from `map`; `names` is the declared list.
    pub fn eval_map(&self, names: &[&str], map: &[(&str, f64)]) -> Result<f64> {
        let mut point = Vec::with_capacity(names.len());
        for n in names {
            match map.iter().find(|(k, _)| k == n) {
                Some((_, v)) => point.push(*v),
                None => return Err(Error::UnknownIdentifier { name: n.to_string(), offset: 0 }),
            }
        }
        self.eval(&point)
    }

    /// Forward-mode derivative with respect to every entry of `point`.
    pub fn eval_dual(&self, point: &[f64]) -> Result<Dual> {
        let mut grad = vec![0.0; point.len()];
        let value = self.eval_grad(point, &mut grad)?;
        Ok(Dual { value, partials: grad })
    }

    /// Like [`Expr::eval_dual`] but writes the gradient into `grad`
    /// (length = number of variables).
    pub fn eval_grad(&self, point: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = grad.len();
        let mut scratch = vec![0.0; n];
        self.dual_rec(point, grad, &mut scratch)
    }

    // `grad` receives this node's gradient; `tmp` is scratch of the same length.
    fn dual_rec(&self, point: &[f64], grad: &mut [f64], tmp: &mut [f64]) -> Result<f64> {
        let off = self.offset;
        match &self.node {
            Node::Num(v) => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                Ok(*v)
            }
            Node::Var(i) => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                if *i < grad.len() {
                    grad[*i] = 1.0;
                }
                self.eval(point)
            }
            Node::Neg(a) => {
                let v = a.dual_rec(point, grad, tmp)?;
                grad.iter_mut().for_each(|g| *g = -*g);
                Ok(-v)
            }
            Node::Call(f, a) => {
                let x = a.dual_rec(point, grad, tmp)?;
                let y = apply(*f, x, off)?;
                let dy = match f {
                    Func::Sin => x.cos(),
                    Func::Cos => -x.sin(),
                    Func::Tan => 1.0 + y * y,
                    Func::Exp => y,
                    Func::Ln => 1.0 / x,
                    Func::Tanh => {
                        let c = x.cosh();
                        1.0 / (c * c)
                    }
                    Func::Sech => -y * x.tanh(),
                    Func::Sqrt => {
                        if y == 0.0 {
                            return Err(Error::NonDifferentiable { op: "sqrt", offset: off });
                        }
                        0.5 / y
                    }
                    Func::Abs => {
                        if x == 0.0 {
                            return Err(Error::NonDifferentiable { op: "abs", offset: off });
                        }
                        x.signum()
                    }
                };
                scale_checked(grad, dy, f.name(), off)?;
                Ok(y)
            }
            Node::Binary(op, a, b) => {
                let x = a.dual_rec(point, grad, tmp)?;
                let mut tmp2 = vec![0.0; grad.len()];
                let y = b.dual_rec(point, tmp, &mut tmp2)?;
                let v = binary(*op, x, y, off)?;
                // grad holds da, tmp holds db
                match op {
                    BinOp::Add => grad.iter_mut().zip(tmp.iter()).for_each(|(g, t)| *g += t),
                    BinOp::Sub => grad.iter_mut().zip(tmp.iter()).for_each(|(g, t)| *g -= t),
                    BinOp::Mul => grad.iter_mut().zip(tmp.iter()).for_each(|(g, t)| *g = *g * y + x * t),
                    BinOp::Div => {
                        grad.iter_mut().zip(tmp.iter()).for_each(|(g, t)| *g = (*g * y - x * t) / (y * y))
                    }
                    BinOp::Pow => {
                        let exponent_const = tmp.iter().all(|t| *t == 0.0);
                        if exponent_const {
                            let c = if y == 0.0 { 0.0 } else { y * x.powf(y - 1.0) };
                            if !c.is_finite() {
                                return Err(Error::NonDifferentiable { op: "^", offset: off });
                            }
                            grad.iter_mut().for_each(|g| *g *= c);
                        } else {
                            if x <= 0.0 {
                                return Err(Error::NonDifferentiable { op: "^", offset: off });
                            }
                            let lx = x.ln();
                            grad.iter_mut()
                                .zip(tmp.iter())
                                .for_each(|(g, t)| *g = v * (t * lx + y * *g / x));
                        }
                    }
                }
                if grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonDifferentiable { op: op.symbol(), offset: off });
                }
                Ok(v)
            }
        }
    }

    fn op_name(&self) -> &'static str {
        match &self.node {
            Node::Num(_) => "literal",
            Node::Var(_) => "variable",
            Node::Neg(_) => "-",
            Node::Call(f, _) => f.name(),
            Node::Binary(o, _, _) => o.symbol(),
        }
    }

    /// Printable form using `names` for the variables.
    pub fn display<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(BinOp::Add | BinOp::Sub, _, _) => 1,
            Node::Binary(BinOp::Mul | BinOp::Div, _, _) => 2,
            Node::Neg(_) => 3,
            Node::Binary(BinOp::Pow, _, _) => 4,
            Node::Num(v) if v.is_sign_negative() => 0,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, names: &[&str], min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match &self.node {
            Node::Num(v) if v.is_sign_negative() && !paren => write!(f, "({v})")?,
            Node::Num(v) => write!(f, "{v}")?,
            Node::Var(i) => match names.get(*i) {
                Some(n) => f.write_str(n)?,
                None => write!(f, "v{i}")?,
            },
            Node::Neg(a) => {
                f.write_str("-")?;
                // `(-2)` would read back as a negative literal
                let bare_num = matches!(a.node, Node::Num(v) if !v.is_sign_negative());
                a.write(f, names, if paren && bare_num { 6 } else { 3 })?;
            }
            Node::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, names, 0)?;
                f.write_str(")")?;
            }
            Node::Binary(op, a, b) => {
                let (l, r) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 3),
                };
                a.write(f, names, l)?;
                match op {
                    BinOp::Pow => f.write_str("^")?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                b.write(f, names, r)?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.write(f, self.names, 0)
    }
}

fn finite(v: f64, op: &'static str, offset: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain { op, offset })
    }
}

fn scale_checked(grad: &mut [f64], c: f64, op: &'static str, offset: usize) -> Result<()> {
    for g in grad.iter_mut() {
        *g *= c;
        if !g.is_finite() {
            return Err(Error::NonDifferentiable { op, offset });
        }
    }
    Ok(())
}

fn apply(f: Func, x: f64, offset: usize) -> Result<f64> {
    let y = match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Ln => {
            if x <= 0.0 {
                return Err(Error::Domain { op: "ln", offset });
            }
            x.ln()
        }
        Func::Tanh => x.tanh(),
        Func::Sech => 1.0 / x.cosh(),
        Func::Sqrt => {
            if x < 0.0 {
                return Err(Error::Domain { op: "sqrt", offset });
            }
            x.sqrt()
        }
        Func::Abs => x.abs(),
    };
    finite(y, f.name(), offset)
}

fn binary(op: BinOp, x: f64, y: f64, offset: usize) -> Result<f64> {
    let v = match op {
        BinOp::Add => x + y,
        BinOp::Sub => x - y,
        BinOp::Mul => x * y,
        BinOp::Div => {
            if y == 0.0 {
                return Err(Error::Domain { op: "/", offset });
            }
            x / y
        }
        BinOp::Pow => {
            if x == 0.0 && y < 0.0 {
                return Err(Error::Domain { op: "^", offset });
            }
            if x < 0.0 && y.fract() != 0.0 {
                return Err(Error::Domain { op: "^", offset });
            }
            if y.fract() == 0.0 && y.abs() <= 64.0 {
                x.powi(y as i32)
            } else {
                x.powf(y)
            }
        }
    };
    finite(v, op.symbol(), offset)
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Sym(u8),
}

#[derive(Debug, Clone)]
struct Token<'a> {
    tok: Tok<'a>,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token<'_>>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token { tok: Tok::Num(v), offset: start });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(&src[start..i]), offset: start });
        } else if b"+-*/^()".contains(&c) {
            out.push(Token { tok: Tok::Sym(c), offset: i });
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(Error::Syntax { offset: i, message: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'a, 'v> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    variables: &'v [&'v str],
}

impl<'a> Parser<'a, '_> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_sym(&self, s: u8) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(c), .. }) if *c == s)
    }

    fn eof_error(&self) -> Error {
        Error::Syntax { offset: self.end, message: "unexpected end of input".to_string() }
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = if self.peek_sym(b'+') {
                BinOp::Add
            } else if self.peek_sym(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let offset = self.tokens[self.pos].offset;
            self.pos += 1;
            let rhs = self.multiplicative()?;
            lhs = Expr { node: Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset };
        }
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_sym(b'*') {
                BinOp::Mul
            } else if self.peek_sym(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let offset = self.tokens[self.pos].offset;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr { node: Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset };
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_sym(b'-') {
            let offset = self.tokens[self.pos].offset;
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr { node: Node::Neg(Box::new(inner)), offset });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.peek_sym(b'^') {
            let offset = self.tokens[self.pos].offset;
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr { node: Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)), offset });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.eof_error());
        };
        self.pos += 1;
        match t.tok {
            Tok::Num(v) => Ok(Expr { node: Node::Num(v), offset: t.offset }),
            Tok::Ident(name) => {
                if self.peek_sym(b'(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| Error::UnknownFunction { name: name.to_string(), offset: t.offset })?;
                    self.pos += 1;
                    let arg = self.additive()?;
                    self.expect_close()?;
                    return Ok(Expr { node: Node::Call(func, Box::new(arg)), offset: t.offset });
                }
                match self.variables.iter().position(|v| *v == name) {
                    Some(i) => Ok(Expr { node: Node::Var(i), offset: t.offset }),
                    None => Err(Error::UnknownIdentifier { name: name.to_string(), offset: t.offset }),
                }
            }
            Tok::Sym(b'(') => {
                // `(-2.5)` is how negative literals print; read it back as one
                if let [Token { tok: Tok::Sym(b'-'), .. }, Token { tok: Tok::Num(v), .. }, Token { tok: Tok::Sym(b')'), .. }, ..] = &self.tokens[self.pos..] {
                    let v = -*v;
                    self.pos += 3;
                    return Ok(Expr { node: Node::Num(v), offset: t.offset });
                }
                let inner = self.additive()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Sym(c) => Err(Error::Syntax {
                offset: t.offset,
                message: format!("unexpected `{}`", c as char),
            }),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        match self.peek() {
            Some(Token { tok: Tok::Sym(b')'), .. }) => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => Err(Error::Syntax { offset: t.offset, message: "expected `)`".to_string() }),
            None => Err(self.eof_error()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let e = Expr::parse("(x1+lam1)^2 - 1", &["x1", "lam1"]).unwrap();
        assert_eq!(e.depth(), 3);
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), -1.0);
        let d = e.eval_dual(&[1.0, 0.0]).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.partials, vec![2.0, 2.0]);

        let t = Expr::parse("tanh(0.5*tau)", &["tau"]).unwrap();
        assert_eq!(t.count_calls(), 1);
        match Expr::parse("x1 + ", &["x1"]) {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 5),
            other => panic!("{other:?}"),
        }
        assert_eq!(Expr::parse("tanh(0)", &[]).unwrap().eval(&[]).unwrap(), 0.0);
        assert_eq!(Expr::parse("sech(0)", &[]).unwrap().eval(&[]).unwrap(), 1.0);
        let c = Expr::parse("3.5", &["x"]).unwrap().eval_dual(&[2.0]).unwrap();
        assert_eq!(c.partials, vec![0.0]);
        let th = Expr::parse("tanh(tau)", &["tau"]).unwrap().eval_dual(&[0.0]).unwrap();
        assert_eq!((th.value, th.partials[0]), (0.0, 1.0));
    }

    #[test]
    fn precedence() {
        let v = |s: &str| Expr::parse(s, &["x"]).unwrap().eval(&[3.0]).unwrap();
        assert_eq!(v("-x^2"), -9.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_eq!(v("1 - 2 - 3"), -4.0);
        assert_eq!(v("8 / 2 / 2"), 2.0);
        assert_eq!(v("2*x + 1"), 7.0);
        assert_eq!(v("1.5e1 + .5"), 15.5);
    }

    #[test]
    fn errors() {
        assert!(matches!(Expr::parse("y + 1", &["x"]), Err(Error::UnknownIdentifier { offset: 0, .. })));
        assert!(matches!(Expr::parse("foo(x)", &["x"]), Err(Error::UnknownFunction { .. })));
        assert!(matches!(Expr::parse("(x", &["x"]), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(Expr::parse("", &["x"]), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(Expr::parse("x $", &["x"]), Err(Error::Syntax { offset: 2, .. })));
        let e = |s: &str, x: f64| Expr::parse(s, &["x"]).unwrap().eval(&[x]);
        assert!(matches!(e("ln(x)", 0.0), Err(Error::Domain { op: "ln", .. })));
        assert!(matches!(e("1 / x", 0.0), Err(Error::Domain { op: "/", offset: 2 })));
        assert!(matches!(e("x^-1", 0.0), Err(Error::Domain { op: "^", .. })));
        assert!(matches!(e("sqrt(x)", -1.0), Err(Error::Domain { .. })));
        let d = |s: &str, x: f64| Expr::parse(s, &["x"]).unwrap().eval_dual(&[x]);
        assert!(matches!(d("abs(x)", 0.0), Err(Error::NonDifferentiable { op: "abs", .. })));
        assert!(matches!(d("sqrt(x)", 0.0), Err(Error::NonDifferentiable { op: "sqrt", .. })));
        assert!(d("abs(x)", -2.0).unwrap().partials[0] == -1.0);
    }

    #[test]
    fn printing_round_trips() {
        let names = ["x", "y"];
        for s in ["-x^2", "(-x)^2", "(-2)^x", "-(-2.5)", "-2.5", "(-2)^x", "(-(2))^x", "x - (y - 1)", "2^3^x", "(2^3)^x", "x * -y", "--x", "sech(x / (1 + y))"] {
            let e = Expr::parse(s, &names).unwrap();
            let printed = e.display(&names).to_string();
            let back = Expr::parse(&printed, &names).unwrap();
            assert!(e.structurally_eq(&back), "{s} -> {printed}");
        }
    }

    #[test]
    fn bind_trailing_substitutes_constants() {
        let e = Expr::parse("x * k + c", &["x", "k", "c"]).unwrap();
        let b = e.bind_trailing(1, &[2.0, 5.0]);
        assert_eq!(b.max_variable(), Some(0));
        assert_eq!(b.eval(&[3.0]).unwrap(), 11.0);
        assert_eq!(e.eval_map(&["x", "k", "c"], &[("c", 1.0), ("x", 2.0), ("k", 3.0)]).unwrap(), 7.0);
    }
}
