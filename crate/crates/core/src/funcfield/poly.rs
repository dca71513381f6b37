//! Sparse bivariate polynomials over the closure, with the exact division
//! that order-of-vanishing computations rest on.
//!
//! Monomial keys are `(u_exp, t_exp)`, so the natural BTreeMap order is the
//! lex order with u dominant; the leading term of a linear carrier like
//! `u - t^2` is then `u`, and single-divisor division decides divisibility
//! by the remainder-is-zero criterion.

use crate::error::{Error, Result};
use crate::groundfield::{Closure, GFElem};
use std::collections::BTreeMap;
use std::fmt;

/// Monomial exponents as (u_exp, t_exp).
pub type Mono = (u32, u32);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BivPoly {
    pub p: u64,
    pub terms: BTreeMap<Mono, GFElem>,
}

pub(crate) fn cadd(cl: &Closure, a: &GFElem, b: &GFElem) -> GFElem {
    cl.add(a, b).expect("coefficients share the closure")
}

pub(crate) fn cmul(cl: &Closure, a: &GFElem, b: &GFElem) -> GFElem {
    cl.mul(a, b).expect("coefficients share the closure")
}

pub(crate) fn cneg(cl: &Closure, a: &GFElem) -> GFElem {
    cl.neg(a).expect("coefficients share the closure")
}

impl BivPoly {
    pub fn zero(p: u64) -> Self {
        BivPoly { p, terms: BTreeMap::new() }
    }

    pub fn constant(cl: &Closure, c: GFElem) -> Self {
        let mut f = BivPoly::zero(cl.p());
        if !c.is_zero() {
            f.terms.insert((0, 0), c);
        }
        f
    }

    pub fn one(cl: &Closure) -> Self {
        BivPoly::constant(cl, cl.one())
    }

    pub fn var_t(cl: &Closure) -> Self {
        let mut f = BivPoly::zero(cl.p());
        f.terms.insert((0, 1), cl.one());
        f
    }

    pub fn var_u(cl: &Closure) -> Self {
        let mut f = BivPoly::zero(cl.p());
        f.terms.insert((1, 0), cl.one());
        f
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&(0, 0)).map(|c| c.is_one()) == Some(true)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.contains_key(&(0, 0)))
    }

    /// Degree in u is zero: the polynomial lives in the t-line.
    pub fn is_univariate_t(&self) -> bool {
        self.terms.keys().all(|&(ju, _)| ju == 0)
    }

    pub fn deg_u(&self) -> u32 {
        self.terms.keys().map(|&(ju, _)| ju).max().unwrap_or(0)
    }

    pub fn deg_t(&self) -> u32 {
        self.terms.keys().map(|&(_, it)| it).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|&(ju, it)| ju + it).max().unwrap_or(0)
    }

    pub fn insert_term(&mut self, cl: &Closure, mono: Mono, coeff: GFElem) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.remove(&mono) {
            None => {
                self.terms.insert(mono, coeff);
            }
            Some(old) => {
                let s = cadd(cl, &old, &coeff);
                if !s.is_zero() {
                    self.terms.insert(mono, s);
                }
            }
        }
    }

    pub fn add(&self, cl: &Closure, other: &BivPoly) -> BivPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_term(cl, *m, c.clone());
        }
        out
    }

    pub fn neg(&self, cl: &Closure) -> BivPoly {
        let mut out = BivPoly::zero(self.p);
        for (m, c) in &self.terms {
            out.terms.insert(*m, cneg(cl, c));
        }
        out
    }

    pub fn sub(&self, cl: &Closure, other: &BivPoly) -> BivPoly {
        self.add(cl, &other.neg(cl))
    }

    pub fn mul(&self, cl: &Closure, other: &BivPoly) -> BivPoly {
        let mut out = BivPoly::zero(self.p);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = (m1.0 + m2.0, m1.1 + m2.1);
                out.insert_term(cl, m, cmul(cl, c1, c2));
            }
        }
        out
    }

    pub fn scale(&self, cl: &Closure, c: &GFElem) -> BivPoly {
        let mut out = BivPoly::zero(self.p);
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.terms.insert(*m, cmul(cl, v, c));
        }
        out
    }

    pub fn pow(&self, cl: &Closure, k: u32) -> BivPoly {
        let mut out = BivPoly::one(cl);
        for _ in 0..k {
            out = out.mul(cl, self);
        }
        out
    }

    /// Leading term in the u-dominant lex order.
    pub fn leading(&self) -> Option<(Mono, &GFElem)> {
        self.terms.iter().next_back().map(|(m, c)| (*m, c))
    }

    /// Monic normalization with respect to the leading coefficient.
    pub fn monic(&self, cl: &Closure) -> BivPoly {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) if c.is_one() => self.clone(),
            Some((_, c)) => {
                let inv = cl.inv(c).expect("leading coefficient is nonzero");
                self.scale(cl, &inv)
            }
        }
    }

    /// Quotient when `other` divides exactly; None otherwise. Sound because
    /// with a single divisor the first leading term not divisible by the
    /// divisor's leading monomial lands in the remainder for good.
    pub fn exact_div(&self, cl: &Closure, other: &BivPoly) -> Option<BivPoly> {
        let (gm, gc) = other.leading()?;
        if self.is_zero() {
            return Some(BivPoly::zero(self.p));
        }
        let gc_inv = cl.inv(gc).expect("leading coefficient is nonzero");
        let mut rem = self.clone();
        let mut quot = BivPoly::zero(self.p);
        while let Some((rm, rc)) = rem.leading() {
            if rm.0 < gm.0 || rm.1 < gm.1 {
                return None;
            }
            let shift = (rm.0 - gm.0, rm.1 - gm.1);
            let c = cmul(cl, rc, &gc_inv);
            quot.insert_term(cl, shift, c.clone());
            for (m2, c2) in &other.terms {
                let m = (m2.0 + shift.0, m2.1 + shift.1);
                let s = cmul(cl, c2, &c);
                rem.insert_term(cl, m, cneg(cl, &s));
            }
        }
        Some(quot)
    }

    /// Largest k with divisor^k | self (self nonzero).
    pub fn divisibility_order(&self, cl: &Closure, divisor: &BivPoly) -> u32 {
        debug_assert!(!self.is_zero());
        let mut k = 0;
        let mut cur = self.clone();
        while let Some(q) = cur.exact_div(cl, divisor) {
            cur = q;
            k += 1;
        }
        k
    }

    pub fn eval(&self, cl: &Closure, t: &GFElem, u: &GFElem) -> GFElem {
        let mut acc = cl.zero();
        for (&(ju, it), c) in &self.terms {
            let mut term = c.clone();
            for _ in 0..it {
                term = cmul(cl, &term, t);
            }
            for _ in 0..ju {
                term = cmul(cl, &term, u);
            }
            acc = cadd(cl, &acc, &term);
        }
        acc
    }

    /// Multiplicity of (t - c) in a u-free polynomial.
    pub fn ord_at_t_point(&self, cl: &Closure, c: &GFElem) -> u32 {
        debug_assert!(self.is_univariate_t() && !self.is_zero());
        let mut linear = BivPoly::var_t(cl);
        linear.insert_term(cl, (0, 0), cneg(cl, c));
        self.divisibility_order(cl, &linear)
    }
}

impl fmt::Display for BivPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Print t-degree ascending, u-degree as tiebreak, for readability.
        let mut keys: Vec<&Mono> = self.terms.keys().collect();
        keys.sort_by_key(|&&(ju, it)| (it, ju));
        for &&(ju, it) in &keys {
            let c = &self.terms[&(ju, it)];
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coeff_is_one = c.is_one();
            let has_vars = it > 0 || ju > 0;
            if !coeff_is_one || !has_vars {
                if c.deg > 1 {
                    write!(f, "({})", c)?;
                } else {
                    write!(f, "{}", c)?;
                }
                if has_vars {
                    write!(f, "*")?;
                }
            }
            if it == 1 {
                write!(f, "t")?;
            } else if it > 1 {
                write!(f, "t^{}", it)?;
            }
            if ju > 0 && it > 0 {
                write!(f, "*")?;
            }
            if ju == 1 {
                write!(f, "u")?;
            } else if ju > 1 {
                write!(f, "u^{}", ju)?;
            }
        }
        Ok(())
    }
}

/// Absolute irreducibility for total degree <= 2, over odd characteristic.
/// Linear forms are always irreducible; a quadric is irreducible over the
/// algebraic closure iff its projective 3x3 symmetric matrix is nonsingular.
pub fn verify_irreducible_deg2(cl: &Closure, f: &BivPoly) -> Result<()> {
    if f.is_constant() {
        return Err(Error::BadCurve("constant polynomial".to_string()));
    }
    let d = f.total_degree();
    if d == 1 {
        return Ok(());
    }
    if d > 2 {
        return Err(Error::BadCurve(format!(
            "degree {} exceeds the built-in verification bound; register with an explicit irreducibility assertion",
            d
        )));
    }
    if cl.p() == 2 {
        return Err(Error::BadCurve(
            "degree-2 verification needs odd characteristic; assert irreducibility explicitly"
                .to_string(),
        ));
    }
    let get = |ju: u32, it: u32| -> GFElem {
        f.terms.get(&(ju, it)).cloned().unwrap_or_else(|| cl.zero())
    };
    // Q(t, u, w) = a t^2 + b tu + c u^2 + d tw + e uw + g w^2.
    let a = get(0, 2);
    let b = get(1, 1);
    let c = get(2, 0);
    let dd = get(0, 1);
    let e = get(1, 0);
    let g = get(0, 0);
    let half = cl.inv(&cl.from_prime(2)).expect("odd characteristic");
    let hb = cmul(cl, &b, &half);
    let hd = cmul(cl, &dd, &half);
    let he = cmul(cl, &e, &half);
    // det of [[a, hb, hd], [hb, c, he], [hd, he, g]]
    let m1 = cl.sub(&cmul(cl, &c, &g), &cmul(cl, &he, &he)).unwrap();
    let m2 = cl.sub(&cmul(cl, &hb, &g), &cmul(cl, &he, &hd)).unwrap();
    let m3 = cl.sub(&cmul(cl, &hb, &he), &cmul(cl, &c, &hd)).unwrap();
    let det = cl
        .add(
            &cl.sub(&cmul(cl, &a, &m1), &cmul(cl, &hb, &m2)).unwrap(),
            &cmul(cl, &hd, &m3),
        )
        .unwrap();
    if det.is_zero() {
        return Err(Error::BadCurve(
            "degree-2 polynomial splits into linear forms over the closure".to_string(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> Closure {
        Closure::new(5).unwrap()
    }

    #[test]
    fn mul_and_exact_div_roundtrip() {
        let cl = setup();
        let t = BivPoly::var_t(&cl);
        let u = BivPoly::var_u(&cl);
        // f = (u - t^2), g = (u + 1)
        let f = u.sub(&cl, &t.mul(&cl, &t));
        let g = u.add(&cl, &BivPoly::one(&cl));
        let prod = f.mul(&cl, &g);
        let q = prod.exact_div(&cl, &f).unwrap();
        assert_eq!(q, g);
        assert_eq!(prod.exact_div(&cl, &g).unwrap(), f);
        // t does not divide the product.
        assert!(prod.exact_div(&cl, &t).is_none());
    }

    #[test]
    fn divisibility_orders() {
        let cl = setup();
        let u = BivPoly::var_u(&cl);
        let t = BivPoly::var_t(&cl);
        let f = u.pow(&cl, 2).mul(&cl, &t.add(&cl, &BivPoly::one(&cl)));
        assert_eq!(f.divisibility_order(&cl, &u), 2);
        assert_eq!(f.divisibility_order(&cl, &t), 0);
    }

    #[test]
    fn irreducibility_checks() {
        let cl = setup();
        let t = BivPoly::var_t(&cl);
        let u = BivPoly::var_u(&cl);
        // u - t^2 is a smooth conic.
        let parabola = u.sub(&cl, &t.mul(&cl, &t));
        verify_irreducible_deg2(&cl, &parabola).unwrap();
        // t^2 - 2 splits over the closure.
        let split = t
            .mul(&cl, &t)
            .sub(&cl, &BivPoly::constant(&cl, cl.from_prime(2)));
        assert!(verify_irreducible_deg2(&cl, &split).is_err());
        // t*u is visibly a product of lines.
        let tu = t.mul(&cl, &u);
        assert!(verify_irreducible_deg2(&cl, &tu).is_err());
        // 1 + t*u is a smooth hyperbola.
        let hyper = tu.add(&cl, &BivPoly::one(&cl));
        verify_irreducible_deg2(&cl, &hyper).unwrap();
        // Linear forms pass.
        verify_irreducible_deg2(&cl, &t).unwrap();
        assert!(verify_irreducible_deg2(&cl, &BivPoly::one(&cl)).is_err());
    }

    #[test]
    fn point_orders() {
        let cl = setup();
        let t = BivPoly::var_t(&cl);
        let one = BivPoly::one(&cl);
        // (t - 1)^2 * t
        let tm1 = t.sub(&cl, &one);
        let f = tm1.pow(&cl, 2).mul(&cl, &t);
        assert_eq!(f.ord_at_t_point(&cl, &cl.from_prime(1)), 2);
        assert_eq!(f.ord_at_t_point(&cl, &cl.zero()), 1);
        assert_eq!(f.ord_at_t_point(&cl, &cl.from_prime(3)), 0);
    }
}
