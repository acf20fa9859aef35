use super::{Expr, ExprPool, Node};

impl ExprPool {
    /// Exact partial derivative of `e` with respect to coordinate `k`.
    ///
    /// Results are memoized per `(node, k)`, so differentiating a shared
    /// subexpression twice costs one lookup.
    pub fn diff(&mut self, e: Expr, k: usize) -> Expr {
        if let Some(&d) = self.diff_memo.get(&(e, k)) {
            return d;
        }
        let d = match self.node(e) {
            Node::Const(_) => self.zero(),
            Node::Coord(i) => {
                if i == k {
                    self.one()
                } else {
                    self.zero()
                }
            }
            Node::Add(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                self.add(da, db)
            }
            Node::Sub(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                self.sub(da, db)
            }
            Node::Neg(a) => {
                let da = self.diff(a, k);
                self.neg(da)
            }
            Node::Mul(a, b) => {
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                let l = self.mul(da, b);
                let r = self.mul(a, db);
                self.add(l, r)
            }
            Node::Div(a, b) => {
                // (a/b)' = a'/b - a b' / b^2
                let (da, db) = (self.diff(a, k), self.diff(b, k));
                let l = self.div(da, b);
                let num = self.mul(a, db);
                let b2 = self.powf(b, 2.0);
                let r = self.div(num, b2);
                self.sub(l, r)
            }
            Node::Pow(a, c) => {
                let da = self.diff(a, k);
                if self.is_zero(da) {
                    self.zero()
                } else {
                    let lowered = self.powf(a, c.0 - 1.0);
                    let scaled = self.scale(c.0, lowered);
                    self.mul(scaled, da)
                }
            }
            Node::Exp(a) => {
                let da = self.diff(a, k);
                self.mul(e, da)
            }
            Node::Ln(a) => {
                let da = self.diff(a, k);
                self.div(da, a)
            }
            Node::Sin(a) => {
                let da = self.diff(a, k);
                let c = self.cos(a);
                self.mul(c, da)
            }
            Node::Cos(a) => {
                let da = self.diff(a, k);
                let s = self.sin(a);
                let ns = self.neg(s);
                self.mul(ns, da)
            }
        };
        self.diff_memo.insert((e, k), d);
        d
    }
}
