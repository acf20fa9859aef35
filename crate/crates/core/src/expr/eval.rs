use super::{Expr, ExprPool, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pointwise evaluation context. Each node is computed at most once per
/// evaluator; create one evaluator per point (and per thread).
pub struct Evaluator<'p, S: Scalar = f64> {
    pool: &'p ExprPool,
    point: Vec<S>,
    cache: Vec<Option<S>>,
}

impl<'p, S: Scalar> Evaluator<'p, S> {
    pub fn new(pool: &'p ExprPool, point: &[S]) -> Self {
        Evaluator {
            pool,
            point: point.to_vec(),
            cache: vec![None; pool.len()],
        }
    }

    pub fn point(&self) -> &[S] {
        &self.point
    }

    pub fn pool(&self) -> &'p ExprPool {
        self.pool
    }

    fn domain(&self, node: &Node) -> Error {
        Error::Domain {
            kind: node.kind_name(),
            point: self.point.iter().map(|v| v.as_f64()).collect(),
        }
    }

    fn apply(&self, e: Expr) -> Result<S> {
        let node = self.pool.node(e);
        let val = |x: Expr| self.cache[x.index()].expect("child evaluated before parent");
        let v = match node {
            Node::Const(c) => S::lit(c.0),
            Node::Coord(k) => match self.point.get(k) {
                Some(&v) => v,
                None => {
                    return Err(Error::PointDimension {
                        point: self.point.iter().map(|v| v.as_f64()).collect(),
                        got: self.point.len(),
                        expected: k + 1,
                    })
                }
            },
            Node::Add(a, b) => val(a) + val(b),
            Node::Sub(a, b) => val(a) - val(b),
            Node::Mul(a, b) => val(a) * val(b),
            Node::Div(a, b) => {
                let d = val(b);
                if d == S::zero() {
                    return Err(self.domain(&node));
                }
                val(a) / d
            }
            Node::Pow(a, c) => {
                let base = val(a);
                if base == S::zero() && c.0 < 0.0 {
                    return Err(self.domain(&node));
                }
                if c.0.fract() == 0.0 && c.0.abs() <= i32::MAX as f64 {
                    base.powi(c.0 as i32)
                } else {
                    base.powf(S::lit(c.0))
                }
            }
            Node::Neg(a) => -val(a),
            Node::Exp(a) => val(a).exp(),
            Node::Ln(a) => {
                let x = val(a);
                if x <= S::zero() {
                    return Err(self.domain(&node));
                }
                x.ln()
            }
            Node::Sin(a) => val(a).sin(),
            Node::Cos(a) => val(a).cos(),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain(&node))
        }
    }

    /// Value of `e` at this evaluator's point.
    pub fn eval(&mut self, e: Expr) -> Result<S> {
        if let Some(v) = self.cache[e.index()] {
            return Ok(v);
        }
        // explicit post-order walk; DAG depth is not bounded by the call stack
        let mut stack = vec![(e, false)];
        while let Some((x, expanded)) = stack.pop() {
            if self.cache[x.index()].is_some() {
                continue;
            }
            if expanded {
                let v = self.apply(x)?;
                self.cache[x.index()] = Some(v);
                continue;
            }
            stack.push((x, true));
            match self.pool.node(x) {
                Node::Const(_) | Node::Coord(_) => {}
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    for c in [b, a] {
                        if self.cache[c.index()].is_none() {
                            stack.push((c, false));
                        }
                    }
                }
                Node::Pow(a, _)
                | Node::Neg(a)
                | Node::Exp(a)
                | Node::Ln(a)
                | Node::Sin(a)
                | Node::Cos(a) => {
                    if self.cache[a.index()].is_none() {
                        stack.push((a, false));
                    }
                }
            }
        }
        Ok(self.cache[e.index()].expect("root evaluated"))
    }

    /// Number of nodes computed so far in this context.
    pub fn evaluated_nodes(&self) -> usize {
        self.cache.iter().filter(|v| v.is_some()).count()
    }
}
