//! Closed-form coefficient expressions.
//!
//! Coefficients of the competition system are supplied as expression strings
//! over the variables `t` (time), `x`, `y` (space), the bound symbol `T`
//! (the period the expression is attached to) and the constant `pi`, with
//! `sin`/`cos`, the four arithmetic operators, unary minus and parentheses:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-'* primary
//! primary:= number | 't' | 'x' | 'y' | 'T' | 'pi'
//!         | ('sin' | 'cos') '(' expr ')' | '(' expr ')'
//! ```
//!
//! A typical coefficient looks like `1 + 0.2*sin(2*pi*t/T) + 0.1*cos(pi*x)`.
//! The parser records which variables occur so the evaluation layer can
//! cache space-only and time-only fields.

use crate::scalar::{real, Real};

/// Parse error with the byte offset it occurred at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl std::fmt::Display for ExprError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (at offset {})", self.message, self.position)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Time,
    SpaceX,
    SpaceY,
    Period,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExpr {
    root: Node,
    source: String,
    uses_time: bool,
    uses_space: bool,
}

impl ParsedExpr {
    /// The original source string.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// True when `t` or `T` occurs (the period symbol counts as constant,
    /// so only `t` makes an expression time-varying).
    pub fn uses_time(&self) -> bool {
        self.uses_time
    }

    /// True when `x` or `y` occurs.
    pub fn uses_space(&self) -> bool {
        self.uses_space
    }

    /// Evaluates at time `t`, position `(x, y)`, with `T` bound to `period`.
    pub fn eval<F: Real>(&self, t: F, x: F, y: F, period: F) -> F {
        eval_node(&self.root, t, x, y, period)
    }
}

fn eval_node<F: Real>(node: &Node, t: F, x: F, y: F, period: F) -> F {
    match node {
        Node::Num(v) => real(*v),
        Node::Time => t,
        Node::SpaceX => x,
        Node::SpaceY => y,
        Node::Period => period,
        Node::Add(a, b) => eval_node(a, t, x, y, period) + eval_node(b, t, x, y, period),
        Node::Sub(a, b) => eval_node(a, t, x, y, period) - eval_node(b, t, x, y, period),
        Node::Mul(a, b) => eval_node(a, t, x, y, period) * eval_node(b, t, x, y, period),
        Node::Div(a, b) => eval_node(a, t, x, y, period) / eval_node(b, t, x, y, period),
        Node::Neg(a) => -eval_node(a, t, x, y, period),
        Node::Sin(a) => eval_node(a, t, x, y, period).sin(),
        Node::Cos(a) => eval_node(a, t, x, y, period).cos(),
    }
}

/// Parses an expression string.
pub fn parse(src: &str) -> Result<ParsedExpr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(ExprError {
            position: 0,
            message: "empty expression".to_string(),
        });
    }
    let root = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(ExprError {
            position: p.pos,
            message: format!("unexpected trailing input starting at '{}'", p.rest_snippet()),
        });
    }
    let mut uses_time = false;
    let mut uses_space = false;
    scan_vars(&root, &mut uses_time, &mut uses_space);
    Ok(ParsedExpr {
        root,
        source: src.to_string(),
        uses_time,
        uses_space,
    })
}

fn scan_vars(node: &Node, uses_time: &mut bool, uses_space: &mut bool) {
    match node {
        Node::Time => *uses_time = true,
        Node::SpaceX | Node::SpaceY => *uses_space = true,
        Node::Num(_) | Node::Period => {}
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            scan_vars(a, uses_time, uses_space);
            scan_vars(b, uses_time, uses_space);
        }
        Node::Neg(a) | Node::Sin(a) | Node::Cos(a) => scan_vars(a, uses_time, uses_space),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn rest_snippet(&self) -> String {
        let rest = &self.src[self.pos..];
        let take = rest.len().min(12);
        String::from_utf8_lossy(&rest[..take]).into_owned()
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut node = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut node = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    node = Node::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == b'.') {
            self.pos += 1;
        }
        // Scientific notation: 1e-3, 2.5E+4.
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. "2e" would be invalid,
                // but "2exp" never occurs since idents start alphabetic).
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map(Node::Num).map_err(|_| ExprError {
            position: start,
            message: format!("invalid number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node, ExprError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => Ok(Node::Time),
            "x" => Ok(Node::SpaceX),
            "y" => Ok(Node::SpaceY),
            "T" => Ok(Node::Period),
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "sin" | "cos" => {
                self.skip_ws();
                if self.peek() != Some(b'(') {
                    return Err(self.err(format!("expected '(' after '{name}'")));
                }
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if self.peek() != Some(b')') {
                    return Err(self.err(format!("expected ')' closing '{name}(...)'")));
                }
                self.pos += 1;
                Ok(match name {
                    "sin" => Node::Sin(Box::new(inner)),
                    _ => Node::Cos(Box::new(inner)),
                })
            }
            _ => Err(ExprError {
                position: start,
                message: format!(
                    "unknown identifier '{name}' (allowed: t, x, y, T, pi, sin, cos)"
                ),
            }),
        }
    }
}
