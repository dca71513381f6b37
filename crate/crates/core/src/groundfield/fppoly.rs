//! Dense univariate polynomial arithmetic over the prime field F_p, and
//! arithmetic in a single extension F_{p^e} = F_p[X]/(f) presented by a
//! defining polynomial. Coefficients are stored lowest degree first with
//! trailing zeros trimmed.

use num_bigint::BigUint;
use num_traits::Zero;

pub fn inv_mod_p(a: u64, p: u64) -> u64 {
    // Extended Euclid; a != 0 mod p.
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, (a % p) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "not invertible mod p");
    t.rem_euclid(p as i128) as u64
}

pub type FpPoly = Vec<u64>;

pub fn trim(f: &mut FpPoly) {
    while f.last() == Some(&0) {
        f.pop();
    }
}

pub fn deg(f: &FpPoly) -> Option<usize> {
    if f.is_empty() {
        None
    } else {
        Some(f.len() - 1)
    }
}

pub fn add(f: &FpPoly, g: &FpPoly, p: u64) -> FpPoly {
    let mut out = vec![0u64; f.len().max(g.len())];
    for (i, c) in f.iter().enumerate() {
        out[i] = *c;
    }
    for (i, c) in g.iter().enumerate() {
        out[i] = (out[i] + *c) % p;
    }
    trim(&mut out);
    out
}

pub fn sub(f: &FpPoly, g: &FpPoly, p: u64) -> FpPoly {
    let mut out = vec![0u64; f.len().max(g.len())];
    for (i, c) in f.iter().enumerate() {
        out[i] = *c;
    }
    for (i, c) in g.iter().enumerate() {
        out[i] = (out[i] + p - *c) % p;
    }
    trim(&mut out);
    out
}

pub fn mul(f: &FpPoly, g: &FpPoly, p: u64) -> FpPoly {
    if f.is_empty() || g.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        if *a == 0 {
            continue;
        }
        for (j, b) in g.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + *a as u128 * *b as u128) % p as u128) as u64;
        }
    }
    trim(&mut out);
    out
}

/// Remainder of f modulo monic-or-not g (g != 0).
pub fn rem(f: &FpPoly, g: &FpPoly, p: u64) -> FpPoly {
    let gd = deg(g).expect("division by zero polynomial");
    let lead_inv = inv_mod_p(g[gd], p);
    let mut r = f.clone();
    while let Some(rd) = deg(&r) {
        if rd < gd {
            break;
        }
        let c = (r[rd] as u128 * lead_inv as u128 % p as u128) as u64;
        let shift = rd - gd;
        for (i, b) in g.iter().enumerate() {
            let sub = (c as u128 * *b as u128 % p as u128) as u64;
            r[i + shift] = (r[i + shift] + p - sub) % p;
        }
        trim(&mut r);
    }
    r
}

pub fn gcd(f: &FpPoly, g: &FpPoly, p: u64) -> FpPoly {
    let (mut a, mut b) = (f.clone(), g.clone());
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    make_monic(&mut a, p);
    a
}

pub fn make_monic(f: &mut FpPoly, p: u64) {
    if let Some(d) = deg(f) {
        if f[d] != 1 {
            let inv = inv_mod_p(f[d], p);
            for c in f.iter_mut() {
                *c = (*c as u128 * inv as u128 % p as u128) as u64;
            }
        }
    }
}

/// base^exp modulo f, all over F_p.
pub fn pow_mod(base: &FpPoly, exp: &BigUint, f: &FpPoly, p: u64) -> FpPoly {
    let mut result = vec![1u64];
    let mut b = rem(base, f, p);
    let mut e = exp.clone();
    while !e.is_zero() {
        if e.bit(0) {
            result = rem(&mul(&result, &b, p), f, p);
        }
        b = rem(&mul(&b, &b, p), f, p);
        e >>= 1;
    }
    result
}

/// Monic irreducibility test over F_p: X^(p^e) = X mod f together with
/// gcd(X^(p^(e/q)) - X, f) = 1 for every prime q dividing e.
pub fn is_irreducible(f: &FpPoly, p: u64) -> bool {
    let e = match deg(f) {
        Some(0) | None => return false,
        Some(e) => e,
    };
    if e == 1 {
        return true;
    }
    let x = vec![0u64, 1];
    let q_top = BigUint::from(p).pow(e as u32);
    if pow_mod(&x, &q_top, f, p) != rem(&x, f, p) {
        return false;
    }
    for q in prime_factors(e as u64) {
        let qe = BigUint::from(p).pow((e as u64 / q) as u32);
        let xq = pow_mod(&x, &qe, f, p);
        let d = sub(&xq, &x, p);
        let g = gcd(&d, f, p);
        if deg(&g) != Some(0) {
            return false;
        }
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = vec![];
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The lexicographically smallest monic irreducible of degree e over F_p,
/// coefficient vectors compared low-degree-first.
pub fn lex_smallest_irreducible(p: u64, e: u32) -> FpPoly {
    if e == 1 {
        // X is the lex-smallest monic of degree 1 and is irreducible.
        return vec![0, 1];
    }
    let e = e as usize;
    // c_0 = 0 would make f divisible by X, so start each scan at c_0 = 1.
    let mut coeffs = vec![0u64; e];
    coeffs[0] = 1;
    loop {
        let mut f = coeffs.clone();
        f.push(1);
        if is_irreducible(&f, p) {
            return f;
        }
        // Advance low-degree-first lexicographic order: the highest index
        // is least significant.
        let mut i = e;
        loop {
            i -= 1;
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            assert!(i > 0, "no irreducible of degree {} over F_{}", e, p);
        }
    }
}

/// Arithmetic in F_{p^e} = F_p[X]/(modulus); elements are coefficient
/// vectors of length e.
pub struct ExtField<'a> {
    pub p: u64,
    pub e: usize,
    pub modulus: &'a FpPoly,
}

pub type ExtElem = Vec<u64>;

impl<'a> ExtField<'a> {
    pub fn zero(&self) -> ExtElem {
        vec![0; self.e]
    }

    pub fn one(&self) -> ExtElem {
        let mut v = vec![0; self.e];
        v[0] = 1;
        v
    }

    pub fn from_u64(&self, c: u64) -> ExtElem {
        let mut v = vec![0; self.e];
        v[0] = c % self.p;
        v
    }

    pub fn is_zero(&self, x: &ExtElem) -> bool {
        x.iter().all(|&c| c == 0)
    }

    fn pad(&self, mut v: FpPoly) -> ExtElem {
        v.resize(self.e, 0);
        v
    }

    pub fn add(&self, x: &ExtElem, y: &ExtElem) -> ExtElem {
        self.pad(add(x, y, self.p))
    }

    pub fn sub(&self, x: &ExtElem, y: &ExtElem) -> ExtElem {
        self.pad(sub(x, y, self.p))
    }

    pub fn neg(&self, x: &ExtElem) -> ExtElem {
        let mut v = x.clone();
        for c in v.iter_mut() {
            *c = (self.p - *c) % self.p;
        }
        v
    }

    pub fn mul(&self, x: &ExtElem, y: &ExtElem) -> ExtElem {
        self.pad(rem(&mul(x, y, self.p), self.modulus, self.p))
    }

    pub fn inv(&self, x: &ExtElem) -> ExtElem {
        // Extended Euclid in F_p[X] against the defining polynomial.
        assert!(!self.is_zero(x), "inversion of zero");
        let p = self.p;
        let mut a = self.modulus.clone();
        let mut b = x.clone();
        trim(&mut b);
        let (mut t, mut new_t): (FpPoly, FpPoly) = (vec![], vec![1]);
        while !b.is_empty() {
            // a = q*b + r
            let (q, r) = divmod(&a, &b, p);
            let qt = mul(&q, &new_t, p);
            let next_t = sub(&t, &qt, p);
            t = std::mem::replace(&mut new_t, next_t);
            a = std::mem::replace(&mut b, r);
        }
        // a is now a nonzero constant gcd; scale t by its inverse.
        let c = inv_mod_p(a[0], p);
        let mut out = t;
        for v in out.iter_mut() {
            *v = (*v as u128 * c as u128 % p as u128) as u64;
        }
        self.pad(out)
    }

    pub fn pow(&self, x: &ExtElem, exp: &BigUint) -> ExtElem {
        let mut result = self.one();
        let mut b = x.clone();
        let mut e = exp.clone();
        while !e.is_zero() {
            if e.bit(0) {
                result = self.mul(&result, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        result
    }

    pub fn frobenius(&self, x: &ExtElem) -> ExtElem {
        self.pow(x, &BigUint::from(self.p))
    }

    /// Evaluate an F_p-polynomial expression sum c_i * g^i for g in this field.
    pub fn eval_fp_poly(&self, coeffs: &[u64], g: &ExtElem) -> ExtElem {
        let mut acc = self.zero();
        for &c in coeffs.iter().rev() {
            acc = self.mul(&acc, g);
            let mut cv = self.from_u64(c);
            cv = self.add(&acc, &cv);
            acc = cv;
        }
        acc
    }
}

/// Quotient and remainder in F_p[X].
pub fn divmod(f: &FpPoly, g: &FpPoly, p: u64) -> (FpPoly, FpPoly) {
    let gd = deg(g).expect("division by zero polynomial");
    let lead_inv = inv_mod_p(g[gd], p);
    let mut r = f.clone();
    let fd = match deg(&r) {
        None => return (vec![], vec![]),
        Some(d) if d < gd => return (vec![], r),
        Some(d) => d,
    };
    let mut q = vec![0u64; fd - gd + 1];
    while let Some(rd) = deg(&r) {
        if rd < gd {
            break;
        }
        let c = (r[rd] as u128 * lead_inv as u128 % p as u128) as u64;
        let shift = rd - gd;
        q[shift] = c;
        for (i, b) in g.iter().enumerate() {
            let s = (c as u128 * *b as u128 % p as u128) as u64;
            r[i + shift] = (r[i + shift] + p - s) % p;
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_irreducibles() {
        // Degree 2 over F_5: X^2 + 1 factors as (X-2)(X+2); X^2 + X + 1 does not.
        assert_eq!(lex_smallest_irreducible(5, 2), vec![1, 1, 1]);
        assert_eq!(lex_smallest_irreducible(5, 1), vec![0, 1]);
        // Degree 2 over F_3: X^2 + 1 is irreducible (-1 is a non-square mod 3).
        assert_eq!(lex_smallest_irreducible(3, 2), vec![1, 0, 1]);
    }

    #[test]
    fn divmod_roundtrip() {
        let p = 5;
        let f = vec![1, 2, 3, 4];
        let g = vec![2, 1];
        let (q, r) = divmod(&f, &g, p);
        let back = add(&mul(&q, &g, p), &r, p);
        assert_eq!(back, f);
    }

    #[test]
    fn ext_field_inverse() {
        let modulus = lex_smallest_irreducible(5, 2);
        let f = ExtField { p: 5, e: 2, modulus: &modulus };
        let x = vec![3, 2];
        let xi = f.inv(&x);
        assert_eq!(f.mul(&x, &xi), f.one());
    }

    #[test]
    fn irreducibility_spot_checks() {
        assert!(is_irreducible(&vec![1, 1, 1], 5)); // X^2+X+1 over F_5
        assert!(!is_irreducible(&vec![1, 0, 1], 5)); // X^2+1 = (X-2)(X+2) over F_5
        // Cubing is a bijection mod 5, so every X^3 - c has a root.
        assert!(!is_irreducible(&vec![3, 0, 0, 1], 5));
        // X^3+X+1 has no roots mod 5: values 1,3,1,1,4.
        assert!(is_irreducible(&vec![1, 1, 0, 1], 5));
    }
}
