//! Recursive-descent parser for coordinate-function expressions.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := ("-" | "+") unary | power
//! power  := base ("^" signed_number)*        (right-associative)
//! base   := number | ident | "(" expr ")" | func "(" expr ")"
//! func   := exp | ln | sin | cos
//! ```
//!
//! Exponents are numeric literals only; `a^b^c` folds the literal tower `b^c`
//! first. Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use super::{Expr, ExprPool};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
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
    End,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
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
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
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
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    pool: &'a mut ExprPool,
    coords: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = self.pool.add(acc, rhs);
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = self.pool.sub(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = self.pool.mul(acc, rhs);
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = self.pool.div(acc, rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let inner = self.unary()?;
                Ok(self.pool.neg(inner))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn signed_number(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1.0
            }
            Tok::Plus => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        match self.bump() {
            Tok::Num(v) => Ok(sign * v),
            _ => Err(syntax(
                self.toks[self.pos.saturating_sub(1)].0,
                "exponent must be a numeric literal",
            )),
        }
    }

    fn exponent_tower(&mut self) -> Result<f64> {
        let base = self.signed_number()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let rest = self.exponent_tower()?;
            Ok(base.powf(rest))
        } else {
            Ok(base)
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            let at = self.offset();
            self.bump();
            let exponent = self.exponent_tower()?;
            if !exponent.is_finite() {
                return Err(syntax(at, "exponent is not finite"));
            }
            Ok(self.pool.powf(base, exponent))
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(self.pool.constant(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let is_call = *self.peek() == Tok::LParen;
                if is_call && matches!(name.as_str(), "exp" | "ln" | "sin" | "cos") {
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)` after function argument")?;
                    return Ok(match name.as_str() {
                        "exp" => self.pool.exp(arg),
                        "ln" => self.pool.ln(arg),
                        "sin" => self.pool.sin(arg),
                        _ => self.pool.cos(arg),
                    });
                }
                match self.coords.iter().position(|c| *c == name) {
                    Some(k) => Ok(self.pool.coord(k)),
                    None => Err(Error::UnknownIdentifier(name)),
                }
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            t => Err(syntax(at, format!("unexpected token {t:?}"))),
        }
    }
}

/// Parses `text` over the given coordinate names into an interned DAG root.
pub fn parse_expr(pool: &mut ExprPool, text: &str, coords: &[String]) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        pool,
        coords,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), "trailing input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Evaluator, Node};

    fn xs() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    #[test]
    fn grammar_example_builds_expected_tree() {
        let mut p = ExprPool::new();
        let e = parse_expr(&mut p, "2*x1 + sin(x2)^2", &xs()).unwrap();
        let two = p.constant(2.0);
        let x1 = p.coord(0);
        let x2 = p.coord(1);
        let m = p.mul(two, x1);
        let s = p.sin(x2);
        let s2 = p.powf(s, 2.0);
        assert_eq!(e, p.add(m, s2));
    }

    #[test]
    fn parenthesized_factor_interns_identically() {
        let mut p = ExprPool::new();
        let a = parse_expr(&mut p, "x1*(x1)", &xs()).unwrap();
        let b = parse_expr(&mut p, "x1*x1", &xs()).unwrap();
        assert_eq!(a, b);
        let c = parse_expr(&mut p, "  x1 *   x1 ", &xs()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn unknown_identifier() {
        let mut p = ExprPool::new();
        let err = parse_expr(&mut p, "sin(y)", &["x1".to_string()]).unwrap_err();
        assert_eq!(err, Error::UnknownIdentifier("y".into()));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let mut p = ExprPool::new();
        for (text, at) in [
            ("x1 +", 4),
            ("(x1", 3),
            ("x1 $ 2", 3),
            ("x1^x2", 3),
            ("x1 x2", 3),
        ] {
            match parse_expr(&mut p, text, &xs()) {
                Err(Error::Syntax { position, .. }) => assert_eq!(position, at, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let mut p = ExprPool::new();
        let cases = [
            ("-x1^2", -(0.7f64.powi(2))),
            ("x1 - x2 - 1", 0.7 - 0.2 - 1.0),
            ("x1 / x2 / 2", 0.7 / 0.2 / 2.0),
            ("2^3^2 * x1", 512.0 * 0.7),
            ("1 + 2 * x1 ^ 2", 1.0 + 2.0 * 0.49),
            ("x1^-1", 1.0 / 0.7),
            ("exp(ln(x1)) + cos(0)", 0.7 + 1.0),
            ("1.5e-1 * x2", 0.15 * 0.2),
        ];
        for (text, want) in cases {
            let e = parse_expr(&mut p, text, &xs()).unwrap();
            let mut ev = Evaluator::new(&p, &[0.7, 0.2]);
            let got = ev.eval(e).unwrap();
            assert!((got - want).abs() < 1e-12, "{text}: {got} vs {want}");
        }
    }

    #[test]
    fn negative_literal_folds_to_constant() {
        let mut p = ExprPool::new();
        let e = parse_expr(&mut p, "-0.5", &xs()).unwrap();
        assert_eq!(p.node(e), Node::Const((-0.5).into()));
    }
}
