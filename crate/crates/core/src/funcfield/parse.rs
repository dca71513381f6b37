//! Plain-text polynomial grammar used by scenario files and reports.
//!
//! ```text
//! poly   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' uint)?
//! atom   := uint | 't' | 'u' | 'a' uint | '-' atom | '(' poly ')'
//! ```
//!
//! Whitespace is insignificant. `a<e>` denotes the canonical generator of
//! the degree-e extension, so coefficients outside the prime field are
//! written in generator notation, e.g. `(1 + 2*a2)*t^2*u`.

use super::poly::BivPoly;
use super::rat::BivRat;
use crate::error::{Error, Result};
use crate::groundfield::{Closure, GFElem};

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    cl: &'a Closure,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        Some(c)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::PolyParse { at: self.pos, msg: msg.into() })
    }

    fn uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a number");
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|_| Error::PolyParse { at: start, msg: "number overflows u64".into() })
    }

    fn poly(&mut self) -> Result<BivPoly> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.add(self.cl, &t);
                }
                Some(b'-') => {
                    self.bump();
                    let t = self.term()?;
                    acc = acc.sub(self.cl, &t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<BivPoly> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.bump();
            let f = self.factor()?;
            acc = acc.mul(self.cl, &f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<BivPoly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.bump();
            let e = self.uint()?;
            if e > 64 {
                return self.err("exponent too large");
            }
            return Ok(base.pow(self.cl, e as u32));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<BivPoly> {
        match self.peek() {
            Some(b'(') => {
                self.bump();
                let inner = self.poly()?;
                if self.bump() != Some(b')') {
                    return self.err("expected ')'");
                }
                Ok(inner)
            }
            Some(b'-') => {
                self.bump();
                let inner = self.atom()?;
                Ok(inner.neg(self.cl))
            }
            Some(b't') => {
                self.bump();
                Ok(BivPoly::var_t(self.cl))
            }
            Some(b'u') => {
                self.bump();
                Ok(BivPoly::var_u(self.cl))
            }
            Some(b'a') => {
                self.bump();
                let e = self.uint()?;
                if e == 0 || e > 64 {
                    return self.err("generator degree out of range");
                }
                Ok(BivPoly::constant(self.cl, self.cl.generator(e as u32)))
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.uint()?;
                Ok(BivPoly::constant(self.cl, self.cl.from_prime((n % self.cl.p()) as i64)))
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse a polynomial in the documented grammar.
pub fn parse_poly(cl: &Closure, text: &str) -> Result<BivPoly> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0, cl };
    let out = p.poly()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.err("trailing input after polynomial");
    }
    Ok(out)
}

/// Parse a rational function `poly` or `poly / poly`.
pub fn parse_rat(cl: &Closure, text: &str) -> Result<BivRat> {
    let mut p = Parser { bytes: text.as_bytes(), pos: 0, cl };
    let num = p.poly()?;
    if p.peek() == Some(b'/') {
        p.bump();
        let den = p.poly()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return p.err("trailing input after rational function");
        }
        return BivRat::new(cl, num, den);
    }
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.err("trailing input after polynomial");
    }
    Ok(BivRat::from_poly(num))
}

/// Parse a constant expression into a closure element.
pub fn parse_gf(cl: &Closure, text: &str) -> Result<GFElem> {
    let f = parse_poly(cl, text)?;
    if !f.is_constant() {
        return Err(Error::PolyParse {
            at: 0,
            msg: "expected a constant expression".into(),
        });
    }
    Ok(f.terms
        .get(&(0, 0))
        .cloned()
        .unwrap_or_else(|| cl.zero()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sparse_monomial_lists() {
        let cl = Closure::new(5).unwrap();
        let f = parse_poly(&cl, "3*t^2*u + u - 1").unwrap();
        assert_eq!(f.terms.len(), 3);
        let g = parse_poly(&cl, "  3 * t ^ 2 * u+u-1 ").unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn parses_generators_and_negatives() {
        let cl = Closure::new(5).unwrap();
        let f = parse_poly(&cl, "(1 + 2*a2)*t - a2^2").unwrap();
        assert_eq!(f.deg_t(), 1);
        let c = parse_gf(&cl, "4").unwrap();
        assert_eq!(c, cl.from_prime(4));
        let m = parse_poly(&cl, "-t + 6").unwrap();
        assert_eq!(m, parse_poly(&cl, "1 - t").unwrap());
    }

    #[test]
    fn display_roundtrip() {
        let cl = Closure::new(5).unwrap();
        for s in ["u - t^2", "t*u + 4", "3*t^2*u^3 + 2*t + 1", "a2*u + t"] {
            let f = parse_poly(&cl, s).unwrap();
            let back = parse_poly(&cl, &f.to_string()).unwrap();
            assert_eq!(f, back, "through {}", s);
        }
    }

    #[test]
    fn rejects_garbage() {
        let cl = Closure::new(5).unwrap();
        assert!(parse_poly(&cl, "t +").is_err());
        assert!(parse_poly(&cl, "v").is_err());
        assert!(parse_poly(&cl, "(t").is_err());
        assert!(parse_gf(&cl, "t + 1").is_err());
    }
}
