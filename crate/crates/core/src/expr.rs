//! Scalar expressions over chart coordinates.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := power (('*' | '/') power)*
//! power   := unary ('^' power)?
//! unary   := '-' unary | primary
//! primary := number | name | name '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! Unary minus binds tighter than `^`, so `-q^2` is `(-q)^2`.

use std::fmt;

use crate::error::{Error, Result, Span};
use crate::scalar::{self, Dual, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Pow,
    Abs,
    Tanh,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "pow" => Func::Pow,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Pow => "pow",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
        }
    }

    fn arity(self) -> usize {
        if self == Func::Pow {
            2
        } else {
            1
        }
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
    konst: bool,
}

impl Node {
    fn new(kind: NodeKind, span: Span) -> Node {
        let konst = match &kind {
            NodeKind::Const(_) => true,
            NodeKind::Var(_) => false,
            NodeKind::Neg(a) => a.konst,
            NodeKind::Bin(_, a, b) => a.konst && b.konst,
            NodeKind::Call(_, args) => args.iter().all(|a| a.konst),
        };
        Node { kind, span, konst }
    }

    /// Structural equality, ignoring spans.
    pub fn same_tree(&self, other: &Node) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Const(a), NodeKind::Const(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Var(a), NodeKind::Var(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a.same_tree(b),
            (NodeKind::Bin(o1, a1, b1), NodeKind::Bin(o2, a2, b2)) => {
                o1 == o2 && a1.same_tree(a2) && b1.same_tree(b2)
            }
            (NodeKind::Call(f1, a1), NodeKind::Call(f2, a2)) => {
                f1 == f2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_tree(y))
            }
            _ => false,
        }
    }

    fn eval<S: Scalar>(&self, x: &[S]) -> Result<S> {
        let domain = |msg: &str| Error::Domain {
            span: self.span,
            msg: msg.to_string(),
        };
        match &self.kind {
            NodeKind::Const(c) => Ok(S::cst(*c)),
            NodeKind::Var(i) => Ok(x[*i].clone()),
            NodeKind::Neg(a) => Ok(-a.eval(x)?),
            NodeKind::Bin(op, a, b) => {
                if *op == BinOp::Pow {
                    return pow_node(a, b, x, self.span);
                }
                let (u, v) = (a.eval(x)?, b.eval(x)?);
                Ok(match op {
                    BinOp::Add => u + v,
                    BinOp::Sub => u - v,
                    BinOp::Mul => u * v,
                    BinOp::Div => {
                        if v.re() == 0.0 {
                            return Err(domain("division by zero"));
                        }
                        u / v
                    }
                    BinOp::Pow => unreachable!(),
                })
            }
            NodeKind::Call(f, args) => {
                if *f == Func::Pow {
                    return pow_node(&args[0], &args[1], x, self.span);
                }
                let u = args[0].eval(x)?;
                Ok(match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if u.re() <= 0.0 {
                            return Err(domain("log of a non-positive number"));
                        }
                        u.ln()
                    }
                    Func::Sqrt => {
                        if u.re() < 0.0 {
                            return Err(domain("sqrt of a negative number"));
                        }
                        u.sqrt()
                    }
                    Func::Abs => u.abs(),
                    Func::Tanh => u.tanh(),
                    Func::Pow => unreachable!(),
                })
            }
        }
    }
}

fn pow_node<S: Scalar>(a: &Node, b: &Node, x: &[S], span: Span) -> Result<S> {
    let base = a.eval(x)?;
    if b.konst {
        let e = b.eval::<f64>(&[])?;
        if base.re() < 0.0 && e.fract() != 0.0 {
            return Err(Error::Domain {
                span,
                msg: "fractional power of a negative number".into(),
            });
        }
        if base.re() == 0.0 && e < 0.0 {
            return Err(Error::Domain {
                span,
                msg: "negative power of zero".into(),
            });
        }
        Ok(base.powf(e))
    } else {
        if base.re() <= 0.0 {
            return Err(Error::Domain {
                span,
                msg: "variable exponent needs a positive base".into(),
            });
        }
        let e = b.eval(x)?;
        Ok((e * base.ln()).exp())
    }
}

/// Parsed expression together with the variable names it was parsed against.
#[derive(Clone, Debug)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    src: String,
}

/// Ordered name/value pairs used by [`Expr::eval`].
#[derive(Clone, Debug, Default)]
pub struct Bindings {
    pairs: Vec<(String, f64)>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.pairs.push((name.to_string(), value));
        self
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Bindings {
            pairs: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    /// Values in the order of `names`; keys must match exactly.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<f64>> {
        if self.pairs.len() != names.len() {
            return Err(Error::Bindings(format!(
                "{} bindings for {} chart variables",
                self.pairs.len(),
                names.len()
            )));
        }
        names
            .iter()
            .map(|n| {
                self.pairs
                    .iter()
                    .find(|(k, _)| k == n)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| Error::Bindings(format!("missing '{n}'")))
            })
            .collect()
    }
}

impl Expr {
    /// Parse `text` against the declared variable names.
    pub fn parse<S: AsRef<str>>(text: &str, vars: &[S]) -> Result<Expr> {
        let names: Vec<String> = vars.iter().map(|s| s.as_ref().to_string()).collect();
        let lookup = |name: &str| names.iter().position(|n| n == name);
        let root = Parser::new(text, &lookup)?.parse_all()?;
        Ok(Expr {
            root,
            vars: names.clone(),
            src: text.to_string(),
        })
    }

    /// Parse with a custom name resolver (used for chart aliases).
    pub fn parse_with(
        text: &str,
        vars: Vec<String>,
        lookup: &dyn Fn(&str) -> Option<usize>,
    ) -> Result<Expr> {
        let root = Parser::new(text, lookup)?.parse_all()?;
        Ok(Expr {
            root,
            vars,
            src: text.to_string(),
        })
    }

    pub fn constant(c: f64, vars: &[String]) -> Expr {
        Expr {
            root: Node::new(NodeKind::Const(c), Span { start: 0, end: 0 }),
            vars: vars.to_vec(),
            src: format!("{c:?}"),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn same_tree(&self, other: &Expr) -> bool {
        self.root.same_tree(&other.root)
    }

    /// Evaluate at a point given in chart order, over any scalar type.
    pub fn eval_at<S: Scalar>(&self, x: &[S]) -> Result<S> {
        if x.len() != self.vars.len() {
            return Err(Error::Dimension {
                expected: self.vars.len(),
                got: x.len(),
            });
        }
        self.root.eval(x)
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64> {
        self.eval_at(&b.resolve(&self.vars)?)
    }

    pub fn grad(&self, b: &Bindings) -> Result<Vec<f64>> {
        self.grad_at(&b.resolve(&self.vars)?)
    }

    pub fn hess(&self, b: &Bindings) -> Result<Vec<Vec<f64>>> {
        self.hess_at(&b.resolve(&self.vars)?)
    }

    pub fn grad_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<S>> {
        Ok(scalar::gradient(|y: &[Dual<S>]| self.eval_at(y), x)?.1)
    }

    pub fn hess_at<S: Scalar>(&self, x: &[S]) -> Result<Vec<Vec<S>>> {
        Ok(scalar::hessian(|y: &[Dual<Dual<S>>]| self.eval_at(y), x)?.2)
    }
}

/// Fully parenthesized rendering; parsing it again yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, &self.vars, f)
    }
}

fn write_node(n: &Node, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match &n.kind {
        NodeKind::Const(c) => write!(f, "{c:?}"),
        NodeKind::Var(i) => write!(f, "{}", vars[*i]),
        NodeKind::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, vars, f)?;
            write!(f, ")")
        }
        NodeKind::Bin(op, a, b) => {
            let s = match op {
                BinOp::Add => "+",
                BinOp::Sub => "-",
                BinOp::Mul => "*",
                BinOp::Div => "/",
                BinOp::Pow => "^",
            };
            write!(f, "(")?;
            write_node(a, vars, f)?;
            write!(f, " {s} ")?;
            write_node(b, vars, f)?;
            write!(f, ")")
        }
        NodeKind::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write_node(a, vars, f)?;
            }
            write!(f, ")")
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
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
    End,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = match c {
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
        if let Some(t) = single {
            out.push((t, start, start + 1));
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
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
            let v: f64 = text[start..i].parse().map_err(|_| Error::Syntax {
                pos: start,
                expected: vec!["number".into()],
            })?;
            out.push((Tok::Num(v), start, i));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start, i));
        } else {
            return Err(Error::Syntax {
                pos: start,
                expected: operand_set(),
            });
        }
    }
    out.push((Tok::End, text.len(), text.len()));
    Ok(out)
}

fn operand_set() -> Vec<String> {
    ["number", "identifier", "'('", "'-'"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
    lookup: &'a dyn Fn(&str) -> Option<usize>,
}

impl<'a> Parser<'a> {
    fn new(text: &str, lookup: &'a dyn Fn(&str) -> Option<usize>) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Syntax {
                pos: 0,
                expected: operand_set(),
            });
        }
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
            lookup,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn prev_end(&self) -> usize {
        self.toks[self.at - 1].2
    }

    fn bump(&mut self) -> (Tok, usize, usize) {
        let t = self.toks[self.at].clone();
        if t.0 != Tok::End {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax {
                pos: self.pos(),
                expected: vec![label.to_string()],
            })
        }
    }

    fn parse_all(mut self) -> Result<Node> {
        let n = self.sum()?;
        if *self.peek() != Tok::End {
            return Err(Error::Syntax {
                pos: self.pos(),
                expected: ["operator", "end of input"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            });
        }
        Ok(n)
    }

    fn binary(&self, op: BinOp, a: Node, b: Node) -> Node {
        let span = Span {
            start: a.span.start,
            end: b.span.end,
        };
        Node::new(NodeKind::Bin(op, Box::new(a), Box::new(b)), span)
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.unary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.power()?;
            return Ok(self.binary(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node> {
        if *self.peek() == Tok::Minus {
            let (_, start, _) = self.bump();
            let inner = self.unary()?;
            let span = Span {
                start,
                end: inner.span.end,
            };
            return Ok(Node::new(NodeKind::Neg(Box::new(inner)), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                let (_, s, e) = self.bump();
                Ok(Node::new(NodeKind::Const(v), Span { start: s, end: e }))
            }
            Tok::Ident(name) => {
                let (_, s, e) = self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::lookup(&name).ok_or(Error::UnknownFunction {
                        name: name.clone(),
                        pos: s,
                    })?;
                    self.bump();
                    let mut args = vec![self.sum()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.sum()?);
                    }
                    if args.len() != func.arity() {
                        return Err(Error::Syntax {
                            pos: self.pos(),
                            expected: vec![if args.len() < func.arity() {
                                "','".into()
                            } else {
                                "')'".into()
                            }],
                        });
                    }
                    self.expect(Tok::RParen, "')'")?;
                    let span = Span {
                        start: s,
                        end: self.prev_end(),
                    };
                    return Ok(Node::new(NodeKind::Call(func, args), span));
                }
                match (self.lookup)(&name) {
                    Some(i) => Ok(Node::new(NodeKind::Var(i), Span { start: s, end: e })),
                    None => Err(Error::UnknownVariable { name, pos: s }),
                }
            }
            Tok::LParen => {
                self.bump();
                let inner = self.sum()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(Error::Syntax {
                pos,
                expected: operand_set(),
            }),
        }
    }
}
