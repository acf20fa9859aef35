//! Hash-consed expression DAG over coordinate functions.
//!
//! Every node lives in an [`ExprPool`] and is addressed by a small copyable
//! [`Expr`] handle. Structurally identical nodes are interned once, so two
//! handles from the same pool are equal exactly when the expressions they
//! denote are structurally equal (after canonical folding).
//!
//! Construction needs `&mut ExprPool`; evaluation only needs `&ExprPool`, so
//! a finished pool can be shared across threads while each thread keeps its
//! own [`Evaluator`] cache.

mod diff;
mod display;
mod eval;
mod parse;

use std::collections::HashMap;

use ordered_float::OrderedFloat;

pub use display::ExprDisplay;
pub use eval::Evaluator;
pub use parse::parse_expr;

/// Handle to an interned node. Only meaningful together with the pool that
/// created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Expr(u32);

impl Expr {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One DAG node. Children always have smaller ids than their parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(OrderedFloat<f64>),
    Coord(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    /// Power with a real literal exponent.
    Pow(Expr, OrderedFloat<f64>),
    Neg(Expr),
    Exp(Expr),
    Ln(Expr),
    Sin(Expr),
    Cos(Expr),
}

impl Node {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Node::Const(_) => "constant",
            Node::Coord(_) => "coordinate",
            Node::Add(..) => "add",
            Node::Sub(..) => "sub",
            Node::Mul(..) => "mul",
            Node::Div(..) => "div",
            Node::Pow(..) => "pow",
            Node::Neg(_) => "neg",
            Node::Exp(_) => "exp",
            Node::Ln(_) => "ln",
            Node::Sin(_) => "sin",
            Node::Cos(_) => "cos",
        }
    }
}

/// Arena that owns and interns every expression node.
#[derive(Debug, Clone)]
pub struct ExprPool {
    nodes: Vec<Node>,
    interned: HashMap<Node, Expr>,
    diff_memo: HashMap<(Expr, usize), Expr>,
    zero: Expr,
    one: Expr,
}

impl Default for ExprPool {
    fn default() -> Self {
        Self::new()
    }
}

impl ExprPool {
    pub fn new() -> Self {
        let mut pool = ExprPool {
            nodes: Vec::new(),
            interned: HashMap::new(),
            diff_memo: HashMap::new(),
            zero: Expr(0),
            one: Expr(0),
        };
        pool.zero = pool.intern(Node::Const(OrderedFloat(0.0)));
        pool.one = pool.intern(Node::Const(OrderedFloat(1.0)));
        pool
    }

    /// Number of interned nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, e: Expr) -> Node {
        self.nodes[e.index()]
    }

    fn intern(&mut self, node: Node) -> Expr {
        if let Some(&e) = self.interned.get(&node) {
            return e;
        }
        let id = u32::try_from(self.nodes.len()).expect("expression pool exhausted");
        let e = Expr(id);
        self.nodes.push(node);
        self.interned.insert(node, e);
        e
    }

    pub fn zero(&self) -> Expr {
        self.zero
    }

    pub fn one(&self) -> Expr {
        self.one
    }

    pub fn constant(&mut self, value: f64) -> Expr {
        assert!(value.is_finite(), "non-finite constant {value}");
        // -0.0 and 0.0 intern to the same node
        let value = if value == 0.0 { 0.0 } else { value };
        self.intern(Node::Const(OrderedFloat(value)))
    }

    pub fn coord(&mut self, k: usize) -> Expr {
        self.intern(Node::Coord(k))
    }

    pub fn const_value(&self, e: Expr) -> Option<f64> {
        match self.node(e) {
            Node::Const(c) => Some(c.0),
            _ => None,
        }
    }

    pub fn is_zero(&self, e: Expr) -> bool {
        e == self.zero
    }

    pub fn is_one(&self, e: Expr) -> bool {
        e == self.one
    }

    /// Folds a binary result when both operands are constants and the result is finite.
    fn fold2(&mut self, a: Expr, b: Expr, f: impl Fn(f64, f64) -> f64) -> Option<Expr> {
        let (x, y) = (self.const_value(a)?, self.const_value(b)?);
        let v = f(x, y);
        v.is_finite().then(|| self.constant(v))
    }

    fn fold1(&mut self, a: Expr, f: impl Fn(f64) -> f64) -> Option<Expr> {
        let v = f(self.const_value(a)?);
        v.is_finite().then(|| self.constant(v))
    }

    pub fn add(&mut self, a: Expr, b: Expr) -> Expr {
        if let Some(e) = self.fold2(a, b, |x, y| x + y) {
            return e;
        }
        if self.is_zero(a) {
            return b;
        }
        if self.is_zero(b) {
            return a;
        }
        if a == b {
            let two = self.constant(2.0);
            return self.mul(two, a);
        }
        // a + (-b) => a - b
        if let Node::Neg(inner) = self.node(b) {
            return self.sub(a, inner);
        }
        if let Node::Neg(inner) = self.node(a) {
            return self.sub(b, inner);
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.intern(Node::Add(a, b))
    }

    pub fn sub(&mut self, a: Expr, b: Expr) -> Expr {
        if let Some(e) = self.fold2(a, b, |x, y| x - y) {
            return e;
        }
        if self.is_zero(b) {
            return a;
        }
        if self.is_zero(a) {
            return self.neg(b);
        }
        if a == b {
            return self.zero;
        }
        if let Node::Neg(inner) = self.node(b) {
            return self.add(a, inner);
        }
        self.intern(Node::Sub(a, b))
    }

    pub fn mul(&mut self, a: Expr, b: Expr) -> Expr {
        if let Some(e) = self.fold2(a, b, |x, y| x * y) {
            return e;
        }
        if self.is_zero(a) || self.is_zero(b) {
            return self.zero;
        }
        if self.is_one(a) {
            return b;
        }
        if self.is_one(b) {
            return a;
        }
        if self.const_value(a) == Some(-1.0) {
            return self.neg(b);
        }
        if self.const_value(b) == Some(-1.0) {
            return self.neg(a);
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.intern(Node::Mul(a, b))
    }

    pub fn div(&mut self, a: Expr, b: Expr) -> Expr {
        if self.const_value(b) != Some(0.0) {
            if let Some(e) = self.fold2(a, b, |x, y| x / y) {
                return e;
            }
        }
        if self.is_one(b) {
            return a;
        }
        if self.is_zero(a) && self.const_value(b).is_none_or(|c| c != 0.0) {
            return self.zero;
        }
        if a == b && self.const_value(b).is_none() {
            return self.one;
        }
        self.intern(Node::Div(a, b))
    }

    /// `base ^ exponent` for a real literal exponent.
    pub fn powf(&mut self, base: Expr, exponent: f64) -> Expr {
        assert!(exponent.is_finite(), "non-finite exponent {exponent}");
        if exponent == 0.0 {
            return self.one;
        }
        if exponent == 1.0 {
            return base;
        }
        if let Some(e) = self.fold1(base, |x| x.powf(exponent)) {
            return e;
        }
        if let Node::Pow(inner, c) = self.node(base) {
            // (a^c)^k = a^(ck) only for integer k, which is sign-safe
            if exponent.fract() == 0.0 {
                return self.powf(inner, c.0 * exponent);
            }
        }
        self.intern(Node::Pow(base, OrderedFloat(exponent)))
    }

    pub fn neg(&mut self, a: Expr) -> Expr {
        if let Some(c) = self.const_value(a) {
            return self.constant(-c);
        }
        match self.node(a) {
            Node::Neg(inner) => inner,
            Node::Sub(x, y) => self.intern(Node::Sub(y, x)),
            _ => self.intern(Node::Neg(a)),
        }
    }

    pub fn exp(&mut self, a: Expr) -> Expr {
        if let Some(e) = self.fold1(a, f64::exp) {
            return e;
        }
        self.intern(Node::Exp(a))
    }

    pub fn ln(&mut self, a: Expr) -> Expr {
        if self.const_value(a).is_some_and(|c| c > 0.0) {
            if let Some(e) = self.fold1(a, f64::ln) {
                return e;
            }
        }
        self.intern(Node::Ln(a))
    }

    pub fn sin(&mut self, a: Expr) -> Expr {
        if let Some(e) = self.fold1(a, f64::sin) {
            return e;
        }
        self.intern(Node::Sin(a))
    }

    pub fn cos(&mut self, a: Expr) -> Expr {
        if let Some(e) = self.fold1(a, f64::cos) {
            return e;
        }
        self.intern(Node::Cos(a))
    }

    pub fn scale(&mut self, c: f64, a: Expr) -> Expr {
        let c = self.constant(c);
        self.mul(c, a)
    }

    /// Sum of many terms, built as a balanced tree so depth stays logarithmic.
    pub fn sum<I: IntoIterator<Item = Expr>>(&mut self, terms: I) -> Expr {
        let mut layer: Vec<Expr> = terms.into_iter().filter(|&t| !self.is_zero(t)).collect();
        if layer.is_empty() {
            return self.zero;
        }
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                next.push(match *pair {
                    [a, b] => self.add(a, b),
                    [a] => a,
                    _ => unreachable!(),
                });
            }
            layer = next;
        }
        layer[0]
    }

    /// Product of many factors.
    pub fn product<I: IntoIterator<Item = Expr>>(&mut self, factors: I) -> Expr {
        let mut acc = self.one;
        for f in factors {
            acc = self.mul(acc, f);
            if self.is_zero(acc) {
                break;
            }
        }
        acc
    }

    /// Largest coordinate index referenced below `e`, if any.
    pub fn max_coord(&self, e: Expr) -> Option<usize> {
        let mut seen = vec![false; e.index() + 1];
        let mut stack = vec![e];
        let mut best = None;
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            match self.node(x) {
                Node::Const(_) => {}
                Node::Coord(k) => best = best.max(Some(k)),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Node::Pow(a, _)
                | Node::Neg(a)
                | Node::Exp(a)
                | Node::Ln(a)
                | Node::Sin(a)
                | Node::Cos(a) => stack.push(a),
            }
        }
        best
    }

    /// Number of distinct nodes reachable from `e`.
    pub fn dag_size(&self, e: Expr) -> usize {
        let mut seen = vec![false; e.index() + 1];
        let mut stack = vec![e];
        let mut count = 0;
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x.index()], true) {
                continue;
            }
            count += 1;
            match self.node(x) {
                Node::Const(_) | Node::Coord(_) => {}
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Node::Pow(a, _)
                | Node::Neg(a)
                | Node::Exp(a)
                | Node::Ln(a)
                | Node::Sin(a)
                | Node::Cos(a) => stack.push(a),
            }
        }
        count
    }
}
