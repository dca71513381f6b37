//! Rational functions of the field F_p-bar(t) or F_p-bar(t, u): exact field
//! arithmetic, order of vanishing along registered irreducible curves, and
//! restriction to parametrized lines.
//!
//! Fractions are not kept gcd-reduced; orders are computed by exact
//! division against the curve on numerator and denominator separately, so
//! common factors never corrupt them. The denominator is kept monic.

use super::poly::{cneg, BivPoly};
use crate::error::{Error, Result};
use crate::groundfield::{Closure, GFElem};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BivRat {
    pub num: BivPoly,
    pub den: BivPoly,
}

impl BivRat {
    pub fn new(cl: &Closure, num: BivPoly, den: BivPoly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(cl, num, den))
    }

    fn normalized(cl: &Closure, num: BivPoly, den: BivPoly) -> Self {
        let (_, lead) = den.leading().expect("denominator is nonzero");
        if lead.is_one() {
            return BivRat { num, den };
        }
        let inv = cl.inv(lead).expect("leading coefficient is nonzero");
        BivRat { num: num.scale(cl, &inv), den: den.scale(cl, &inv) }
    }

    pub fn from_poly(num: BivPoly) -> Self {
        let p = num.p;
        BivRat {
            num,
            den: {
                let mut one = BivPoly::zero(p);
                one.terms.insert((0, 0), GFElem { p, deg: 1, coords: vec![1] });
                one
            },
        }
    }

    pub fn constant(cl: &Closure, c: GFElem) -> Self {
        BivRat::from_poly(BivPoly::constant(cl, c))
    }

    pub fn one(cl: &Closure) -> Self {
        BivRat::from_poly(BivPoly::one(cl))
    }

    pub fn zero(cl: &Closure) -> Self {
        BivRat::from_poly(BivPoly::zero(cl.p()))
    }

    pub fn var_t(cl: &Closure) -> Self {
        BivRat::from_poly(BivPoly::var_t(cl))
    }

    pub fn var_u(cl: &Closure) -> Self {
        BivRat::from_poly(BivPoly::var_u(cl))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Equality as field elements (cross multiplication).
    pub fn eq_rat(&self, cl: &Closure, other: &BivRat) -> bool {
        self.num.mul(cl, &other.den) == other.num.mul(cl, &self.den)
    }

    pub fn is_one(&self, _cl: &Closure) -> bool {
        // Arithmetic always stores expanded polynomials with a monic
        // denominator, so 1 is exactly num == den.
        !self.num.is_zero() && self.num == self.den
    }

    pub fn add(&self, cl: &Closure, other: &BivRat) -> BivRat {
        let num = self
            .num
            .mul(cl, &other.den)
            .add(cl, &other.num.mul(cl, &self.den));
        let den = self.den.mul(cl, &other.den);
        Self::normalized(cl, num, den)
    }

    pub fn neg(&self, cl: &Closure) -> BivRat {
        BivRat { num: self.num.neg(cl), den: self.den.clone() }
    }

    pub fn sub(&self, cl: &Closure, other: &BivRat) -> BivRat {
        self.add(cl, &other.neg(cl))
    }

    pub fn mul(&self, cl: &Closure, other: &BivRat) -> BivRat {
        Self::normalized(
            cl,
            self.num.mul(cl, &other.num),
            self.den.mul(cl, &other.den),
        )
    }

    pub fn inv(&self, cl: &Closure) -> Result<BivRat> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(cl, self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, cl: &Closure, other: &BivRat) -> Result<BivRat> {
        Ok(self.mul(cl, &other.inv(cl)?))
    }

    /// 1 - x, the other leg of the C-pair condition.
    pub fn one_minus(&self, cl: &Closure) -> BivRat {
        let num = self.den.sub(cl, &self.num);
        Self::normalized(cl, num, self.den.clone())
    }

    pub fn pow(&self, cl: &Closure, k: i64) -> Result<BivRat> {
        let base = if k < 0 { self.inv(cl)? } else { self.clone() };
        let mut out = BivRat::one(cl);
        for _ in 0..k.unsigned_abs() {
            out = out.mul(cl, &base);
        }
        Ok(out)
    }

    /// Total-degree difference den - num; the order at the line at infinity
    /// in the fixed projective chart.
    pub fn degree_order(&self) -> i64 {
        self.den.total_degree() as i64 - self.num.total_degree() as i64
    }
}

impl fmt::Display for BivRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// Order of vanishing of x along the prime divisor {f = 0}; f must be a
/// registered non-constant absolutely irreducible polynomial.
pub fn curve_order(cl: &Closure, f: &BivPoly, x: &BivRat) -> Result<i64> {
    if f.is_constant() {
        return Err(Error::BadCurve("constant polynomial".to_string()));
    }
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    let up = x.num.divisibility_order(cl, f) as i64;
    let down = x.den.divisibility_order(cl, f) as i64;
    Ok(up - down)
}

/// A parametrized line carrier: u = a t + b with parameter t, or t = c with
/// parameter u. The attached polynomial is the monic divisor it cuts out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LineParam {
    UOfT { a: GFElem, b: GFElem },
    TConst { c: GFElem },
}

impl LineParam {
    /// Recognize a linear polynomial as a parametrized line.
    pub fn from_poly(cl: &Closure, f: &BivPoly) -> Option<LineParam> {
        if f.total_degree() != 1 {
            return None;
        }
        let get = |m: (u32, u32)| f.terms.get(&m).cloned().unwrap_or_else(|| cl.zero());
        let cu = get((1, 0));
        let ct = get((0, 1));
        let c0 = get((0, 0));
        if !cu.is_zero() {
            // cu*u + ct*t + c0 = 0  =>  u = -(ct/cu) t - c0/cu
            let inv = cl.inv(&cu).expect("nonzero");
            let a = cneg(cl, &cl.mul(&ct, &inv).unwrap());
            let b = cneg(cl, &cl.mul(&c0, &inv).unwrap());
            Some(LineParam::UOfT { a, b })
        } else {
            // ct*t + c0 = 0  =>  t = -c0/ct
            let inv = cl.inv(&ct).expect("nonzero since degree is 1");
            Some(LineParam::TConst { c: cneg(cl, &cl.mul(&c0, &inv).unwrap()) })
        }
    }

    /// The monic polynomial cutting out this line.
    pub fn poly(&self, cl: &Closure) -> BivPoly {
        match self {
            LineParam::UOfT { a, b } => {
                // u - a t - b
                let mut f = BivPoly::var_u(cl);
                f.insert_term(cl, (0, 1), cneg(cl, a));
                f.insert_term(cl, (0, 0), cneg(cl, b));
                f
            }
            LineParam::TConst { c } => {
                let mut f = BivPoly::var_t(cl);
                f.insert_term(cl, (0, 0), cneg(cl, c));
                f
            }
        }
    }

    /// Substitute the parametrization into a polynomial. The result is
    /// expressed in the parameter as variable t, whichever coordinate
    /// parametrizes the line.
    pub fn substitute(&self, cl: &Closure, f: &BivPoly) -> BivPoly {
        let mut out = BivPoly::zero(f.p);
        match self {
            LineParam::UOfT { a, b } => {
                // u := a t + b
                let t = BivPoly::var_t(cl);
                let mut line = t.scale(cl, a);
                line.insert_term(cl, (0, 0), b.clone());
                for (&(ju, it), c) in &f.terms {
                    let mut term = BivPoly::constant(cl, c.clone());
                    for _ in 0..it {
                        term = term.mul(cl, &t);
                    }
                    term = term.mul(cl, &line.pow(cl, ju));
                    out = out.add(cl, &term);
                }
            }
            LineParam::TConst { c } => {
                // t := c, then rename the parameter u to t.
                for (&(ju, it), coeff) in &f.terms {
                    let mut cc = coeff.clone();
                    for _ in 0..it {
                        cc = cl.mul(&cc, c).unwrap();
                    }
                    out.insert_term(cl, (0, ju), cc);
                }
            }
        }
        out
    }
}

/// Residue of x on the line: substitute the parametrization. Requires
/// curve_order(line, x) = 0; hidden common powers of the line polynomial in
/// numerator and denominator are cancelled first, so the substituted
/// fraction is well defined and nonzero. The result is univariate in t.
pub fn restrict_to_line(cl: &Closure, line: &LineParam, x: &BivRat) -> Result<BivRat> {
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    let f = line.poly(cl);
    let k_num = x.num.divisibility_order(cl, &f);
    let k_den = x.den.divisibility_order(cl, &f);
    if k_num != k_den {
        return Err(Error::NotAUnitOnCurve(k_num as i64 - k_den as i64));
    }
    let mut num = x.num.clone();
    let mut den = x.den.clone();
    for _ in 0..k_num {
        num = num.exact_div(cl, &f).expect("order bound verified");
        den = den.exact_div(cl, &f).expect("order bound verified");
    }
    let rn = line.substitute(cl, &num);
    let rd = line.substitute(cl, &den);
    debug_assert!(!rn.is_zero() && !rd.is_zero());
    debug_assert!(rn.is_univariate_t() && rd.is_univariate_t());
    BivRat::new(cl, rn, rd)
}

/// Order at the point (parameter = c) of a univariate rational function.
pub fn ord_at_point(cl: &Closure, x: &BivRat, c: &GFElem) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    debug_assert!(x.num.is_univariate_t() && x.den.is_univariate_t());
    let up = x.num.ord_at_t_point(cl, c) as i64;
    let down = x.den.ord_at_t_point(cl, c) as i64;
    Ok(up - down)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> Closure {
        Closure::new(5).unwrap()
    }

    #[test]
    fn one_minus_examples() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        let omt = t.one_minus(&cl);
        // 1 - t
        assert!(omt.add(&cl, &t).is_one(&cl));
        // one_minus(u t^2/(u+1)) = (u + 1 - u t^2)/(u + 1)
        let u = BivRat::var_u(&cl);
        let x = u
            .mul(&cl, &t)
            .mul(&cl, &t)
            .div(&cl, &u.add(&cl, &BivRat::one(&cl)))
            .unwrap();
        let y = x.one_minus(&cl);
        assert!(y.add(&cl, &x).is_one(&cl));
        // mul(t/u, u/t) = 1
        let q = t.div(&cl, &u).unwrap().mul(&cl, &u.div(&cl, &t).unwrap());
        assert!(q.is_one(&cl));
    }

    #[test]
    fn curve_order_examples() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        let u = BivRat::var_u(&cl);
        let u_poly = BivPoly::var_u(&cl);
        // f = u, x = u^2 (t+1) -> 2
        let x = u
            .mul(&cl, &u)
            .mul(&cl, &t.add(&cl, &BivRat::one(&cl)));
        assert_eq!(curve_order(&cl, &u_poly, &x).unwrap(), 2);
        // f = u, x = t/u^3 -> -3
        let x = t.div(&cl, &u.pow(&cl, 3).unwrap()).unwrap();
        assert_eq!(curve_order(&cl, &u_poly, &x).unwrap(), -3);
        // f = u - t^2, x = (u - t^2)(u + 1)/u -> 1
        let f = u_poly.sub(&cl, &BivPoly::var_t(&cl).pow(&cl, 2));
        let x = BivRat::from_poly(f.clone())
            .mul(&cl, &u.add(&cl, &BivRat::one(&cl)))
            .div(&cl, &u)
            .unwrap();
        assert_eq!(curve_order(&cl, &f, &x).unwrap(), 1);
        // Constants have order zero along any curve.
        let c = BivRat::constant(&cl, cl.from_prime(3));
        assert_eq!(curve_order(&cl, &u_poly, &c).unwrap(), 0);
        assert!(curve_order(&cl, &u_poly, &BivRat::zero(&cl)).is_err());
    }

    #[test]
    fn curve_order_is_additive() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        let u = BivRat::var_u(&cl);
        let f = BivPoly::var_u(&cl).sub(&cl, &BivPoly::var_t(&cl).pow(&cl, 2));
        let samples = [
            u.clone(),
            t.clone(),
            BivRat::from_poly(f.clone()),
            u.mul(&cl, &t).add(&cl, &BivRat::one(&cl)),
            BivRat::from_poly(f.clone()).pow(&cl, -2).unwrap(),
        ];
        for x in &samples {
            for y in &samples {
                let ox = curve_order(&cl, &f, x).unwrap();
                let oy = curve_order(&cl, &f, y).unwrap();
                let oxy = curve_order(&cl, &f, &x.mul(&cl, y)).unwrap();
                assert_eq!(oxy, ox + oy);
            }
        }
    }

    #[test]
    fn restriction_examples() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        let u = BivRat::var_u(&cl);
        let line = LineParam::UOfT { a: cl.zero(), b: cl.zero() }; // u = 0
        // x = t^2 + u restricts to t^2
        let x = t.mul(&cl, &t).add(&cl, &u);
        let r = restrict_to_line(&cl, &line, &x).unwrap();
        assert!(r.eq_rat(&cl, &t.mul(&cl, &t)));
        // x = (t + u)/(1 + u) restricts to t
        let x = t.add(&cl, &u).div(&cl, &BivRat::one(&cl).add(&cl, &u)).unwrap();
        let r = restrict_to_line(&cl, &line, &x).unwrap();
        assert!(r.eq_rat(&cl, &t));
        // x = u/(u + t) has order 1 - 0 along u: restriction is an error.
        let x = u.div(&cl, &u.add(&cl, &t)).unwrap();
        assert!(matches!(
            restrict_to_line(&cl, &line, &x),
            Err(Error::NotAUnitOnCurve(1))
        ));
        // Hidden common factor: (u - t) g / (u - t) h restricts fine on u = t.
        let line_diag = LineParam::UOfT { a: cl.one(), b: cl.zero() };
        let umt = u.sub(&cl, &t);
        let x = umt
            .mul(&cl, &t)
            .div(&cl, &umt.mul(&cl, &u.add(&cl, &BivRat::one(&cl))))
            .unwrap();
        let r = restrict_to_line(&cl, &line_diag, &x).unwrap();
        // t/(t+1) on the diagonal.
        let expect = t
            .div(&cl, &t.add(&cl, &BivRat::one(&cl)))
            .unwrap();
        assert!(r.eq_rat(&cl, &expect));
    }

    #[test]
    fn restriction_is_multiplicative_on_units() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        let u = BivRat::var_u(&cl);
        let line = LineParam::UOfT { a: cl.zero(), b: cl.zero() };
        let units = [
            t.clone(),
            t.add(&cl, &BivRat::one(&cl)),
            u.add(&cl, &t),
            BivRat::one(&cl).add(&cl, &u.mul(&cl, &t)),
        ];
        for x in &units {
            for y in &units {
                let rx = restrict_to_line(&cl, &line, x).unwrap();
                let ry = restrict_to_line(&cl, &line, y).unwrap();
                let rxy = restrict_to_line(&cl, &line, &x.mul(&cl, y)).unwrap();
                assert!(rxy.eq_rat(&cl, &rx.mul(&cl, &ry)));
            }
        }
    }

    #[test]
    fn t_const_line_renames_parameter() {
        let cl = setup();
        let u = BivRat::var_u(&cl);
        let line = LineParam::TConst { c: cl.from_prime(1) };
        // x = u/(t + u) at t = 1 becomes u/(1 + u), reported in variable t.
        let x = u
            .div(&cl, &BivRat::var_t(&cl).add(&cl, &u))
            .unwrap();
        let r = restrict_to_line(&cl, &line, &x).unwrap();
        let t = BivRat::var_t(&cl);
        let expect = t.div(&cl, &BivRat::one(&cl).add(&cl, &t)).unwrap();
        assert!(r.eq_rat(&cl, &expect));
    }

    #[test]
    fn point_orders_on_restrictions() {
        let cl = setup();
        let t = BivRat::var_t(&cl);
        // (t-1)^2/t at points 1, 0, 2.
        let tm1 = t.sub(&cl, &BivRat::one(&cl));
        let x = tm1.mul(&cl, &tm1).div(&cl, &t).unwrap();
        assert_eq!(ord_at_point(&cl, &x, &cl.from_prime(1)).unwrap(), 2);
        assert_eq!(ord_at_point(&cl, &x, &cl.zero()).unwrap(), -1);
        assert_eq!(ord_at_point(&cl, &x, &cl.from_prime(2)).unwrap(), 0);
    }
}
