//! A small recursive-descent parser for real functions of one variable `x`.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-'? atom
//! atom   := number | 'x' | '(' expr ')' | func '(' expr (',' expr)? ')'
//! func   := abs | sqrt | max | min | exp
//! ```
//!
//! `^` is right-associative. Unary minus binds tighter than `^`, so `-x^2`
//! reads as `(-x)^2`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Sqrt,
    Max,
    Min,
    Exp,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        match name {
            "abs" => Some(Func::Abs),
            "sqrt" => Some(Func::Sqrt),
            "max" => Some(Func::Max),
            "min" => Some(Func::Min),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Max | Func::Min => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Func, Box<Node>),
    Call2(Func, Box<Node>, Box<Node>),
}

/// A compiled expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates at `x`. Non-finite intermediate results are domain errors.
    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_node(&self.root, x)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Eval(format!("{what} produced a non-finite value")))
    }
}

fn eval_node(node: &Node, x: f64) -> Result<f64> {
    match node {
        Node::Num(v) => Ok(*v),
        Node::Var => Ok(x),
        Node::Neg(a) => Ok(-eval_node(a, x)?),
        Node::Add(a, b) => finite(eval_node(a, x)? + eval_node(b, x)?, "addition"),
        Node::Sub(a, b) => finite(eval_node(a, x)? - eval_node(b, x)?, "subtraction"),
        Node::Mul(a, b) => finite(eval_node(a, x)? * eval_node(b, x)?, "multiplication"),
        Node::Div(a, b) => {
            let num = eval_node(a, x)?;
            let den = eval_node(b, x)?;
            if den == 0.0 {
                return Err(Error::Eval(format!("division by zero at x = {x}")));
            }
            finite(num / den, "division")
        }
        Node::Pow(a, b) => {
            let base = eval_node(a, x)?;
            let exp = eval_node(b, x)?;
            let v = if exp.fract() == 0.0 && exp.abs() <= i32::MAX as f64 {
                base.powi(exp as i32)
            } else {
                base.powf(exp)
            };
            if v.is_nan() {
                return Err(Error::Eval(format!("{base}^{exp} is undefined")));
            }
            finite(v, "power")
        }
        Node::Call1(f, a) => {
            let v = eval_node(a, x)?;
            match f {
                Func::Abs => Ok(v.abs()),
                Func::Sqrt => {
                    if v < 0.0 {
                        Err(Error::Eval(format!("sqrt of negative value {v}")))
                    } else {
                        Ok(v.sqrt())
                    }
                }
                Func::Exp => finite(v.exp(), "exp"),
                Func::Max | Func::Min => unreachable!("binary function with one argument"),
            }
        }
        Node::Call2(f, a, b) => {
            let u = eval_node(a, x)?;
            let v = eval_node(b, x)?;
            match f {
                Func::Max => Ok(u.max(v)),
                Func::Min => Ok(u.min(v)),
                _ => unreachable!("unary function with two arguments"),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // optional exponent, only when followed by digits
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
                pos: start,
                expected: "decimal literal".into(),
                found: format!("'{text}'"),
            })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(Error::Syntax {
                pos: i,
                expected: "operator, number, 'x' or function".into(),
                found: format!("'{c}'"),
            });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            expected: expected.into(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(&format!("'{c}'"))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        let base = self.unary()?;
        if *self.peek() == Tok::Sym('^') {
            self.bump();
            let exp = self.factor()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.atom()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "x" => {
                self.bump();
                Ok(Node::Var)
            }
            Tok::Ident(name) => {
                let Some(func) = Func::from_name(&name) else {
                    return self.fail("number, 'x', '(' or one of abs/sqrt/max/min/exp");
                };
                self.bump();
                self.expect('(')?;
                let a = self.expr()?;
                let node = if func.arity() == 2 {
                    self.expect(',')?;
                    let b = self.expr()?;
                    Node::Call2(func, Box::new(a), Box::new(b))
                } else {
                    Node::Call1(func, Box::new(a))
                };
                self.expect(')')?;
                Ok(node)
            }
            _ => self.fail("number, 'x', '(' or function"),
        }
    }
}

/// Parses `source` into an evaluable expression.
pub fn parse_expression(source: &str) -> Result<Expr> {
    if source.trim().is_empty() {
        return Err(Error::Syntax {
            pos: 0,
            expected: "expression".into(),
            found: "end of input".into(),
        });
    }
    let mut p = Parser {
        toks: tokenize(source)?,
        at: 0,
    };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("operator or end of input");
    }
    Ok(Expr {
        source: source.to_string(),
        root,
    })
}
