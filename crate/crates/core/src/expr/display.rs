use std::fmt;

use super::{Expr, ExprPool, Node};

/// Parseable text form of an expression. Reparsing the output in the same
/// pool yields the same interned node.
pub struct ExprDisplay<'a> {
    pool: &'a ExprPool,
    root: Expr,
    coords: &'a [String],
}

impl ExprPool {
    pub fn display<'a>(&'a self, e: Expr, coords: &'a [String]) -> ExprDisplay<'a> {
        ExprDisplay {
            pool: self,
            root: e,
            coords,
        }
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips exactly
    if v < 0.0 {
        write!(f, "(-{:?})", -v)
    } else {
        write!(f, "{v:?}")
    }
}

impl ExprDisplay<'_> {
    fn write(&self, f: &mut fmt::Formatter<'_>, e: Expr) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, a: Expr, op: &str, b: Expr| -> fmt::Result {
            write!(f, "(")?;
            self.write(f, a)?;
            write!(f, " {op} ")?;
            self.write(f, b)?;
            write!(f, ")")
        };
        let call = |f: &mut fmt::Formatter<'_>, name: &str, a: Expr| -> fmt::Result {
            write!(f, "{name}(")?;
            self.write(f, a)?;
            write!(f, ")")
        };
        match self.pool.node(e) {
            Node::Const(c) => write_num(f, c.0),
            Node::Coord(k) => match self.coords.get(k) {
                Some(name) => write!(f, "{name}"),
                None => write!(f, "x{k}"),
            },
            Node::Add(a, b) => bin(f, a, "+", b),
            Node::Sub(a, b) => bin(f, a, "-", b),
            Node::Mul(a, b) => bin(f, a, "*", b),
            Node::Div(a, b) => bin(f, a, "/", b),
            Node::Pow(a, c) => {
                write!(f, "(")?;
                self.write(f, a)?;
                write!(f, ")^{:?}", c.0)
            }
            Node::Neg(a) => {
                write!(f, "(-")?;
                self.write(f, a)?;
                write!(f, ")")
            }
            Node::Exp(a) => call(f, "exp", a),
            Node::Ln(a) => call(f, "ln", a),
            Node::Sin(a) => call(f, "sin", a),
            Node::Cos(a) => call(f, "cos", a),
        }
    }
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, self.root)
    }
}
