//! Complete root multisets of univariate polynomials over the algebraic
//! closure, via distinct-degree factorization and deterministic
//! equal-degree splitting. The splitting elements come from a fixed LCG so
//! runs are reproducible; the returned multiset is sorted canonically and
//! does not depend on the splitting path.

use super::fppoly::{ExtElem, ExtField};
use super::{Closure, GFElem};
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;

type ExtPoly = Vec<ExtElem>;

fn ep_trim(f: &mut ExtPoly, field: &ExtField) {
    while f.last().map(|c| field.is_zero(c)) == Some(true) {
        f.pop();
    }
}

fn ep_deg(f: &ExtPoly) -> Option<usize> {
    if f.is_empty() {
        None
    } else {
        Some(f.len() - 1)
    }
}

fn ep_mul(f: &ExtPoly, g: &ExtPoly, field: &ExtField) -> ExtPoly {
    if f.is_empty() || g.is_empty() {
        return vec![];
    }
    let mut out = vec![field.zero(); f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        if field.is_zero(a) {
            continue;
        }
        for (j, b) in g.iter().enumerate() {
            let prod = field.mul(a, b);
            out[i + j] = field.add(&out[i + j], &prod);
        }
    }
    ep_trim(&mut out, field);
    out
}

fn ep_rem(f: &ExtPoly, g: &ExtPoly, field: &ExtField) -> ExtPoly {
    let gd = ep_deg(g).expect("division by zero polynomial");
    let lead_inv = field.inv(&g[gd]);
    let mut r = f.clone();
    ep_trim(&mut r, field);
    while let Some(rd) = ep_deg(&r) {
        if rd < gd {
            break;
        }
        let c = field.mul(&r[rd], &lead_inv);
        let shift = rd - gd;
        for (i, b) in g.iter().enumerate() {
            let s = field.mul(&c, b);
            r[i + shift] = field.sub(&r[i + shift], &s);
        }
        ep_trim(&mut r, field);
    }
    r
}

fn ep_div_exact(f: &ExtPoly, g: &ExtPoly, field: &ExtField) -> ExtPoly {
    let gd = ep_deg(g).expect("division by zero polynomial");
    let lead_inv = field.inv(&g[gd]);
    let mut r = f.clone();
    ep_trim(&mut r, field);
    let fd = ep_deg(&r).expect("exact division of zero");
    let mut q = vec![field.zero(); fd - gd + 1];
    while let Some(rd) = ep_deg(&r) {
        if rd < gd {
            break;
        }
        let c = field.mul(&r[rd], &lead_inv);
        let shift = rd - gd;
        q[shift] = c.clone();
        for (i, b) in g.iter().enumerate() {
            let s = field.mul(&c, b);
            r[i + shift] = field.sub(&r[i + shift], &s);
        }
        ep_trim(&mut r, field);
    }
    debug_assert!(r.is_empty(), "division was not exact");
    ep_trim(&mut q, field);
    q
}

fn ep_monic(f: &mut ExtPoly, field: &ExtField) {
    if let Some(d) = ep_deg(f) {
        if f[d] != field.one() {
            let inv = field.inv(&f[d]);
            for c in f.iter_mut() {
                *c = field.mul(c, &inv);
            }
        }
    }
}

fn ep_gcd(f: &ExtPoly, g: &ExtPoly, field: &ExtField) -> ExtPoly {
    let (mut a, mut b) = (f.clone(), g.clone());
    ep_trim(&mut a, field);
    ep_trim(&mut b, field);
    while !b.is_empty() {
        let r = ep_rem(&a, &b, field);
        a = b;
        b = r;
    }
    ep_monic(&mut a, field);
    a
}

fn ep_pow_mod(base: &ExtPoly, exp: &BigUint, modulus: &ExtPoly, field: &ExtField) -> ExtPoly {
    let mut result = vec![field.one()];
    let mut b = ep_rem(base, modulus, field);
    let mut e = exp.clone();
    while e != BigUint::from(0u32) {
        if e.bit(0) {
            result = ep_rem(&ep_mul(&result, &b, field), modulus, field);
        }
        b = ep_rem(&ep_mul(&b, &b, field), modulus, field);
        e >>= 1;
    }
    result
}

fn ep_eval(f: &ExtPoly, x: &ExtElem, field: &ExtField) -> ExtElem {
    let mut acc = field.zero();
    for c in f.iter().rev() {
        acc = field.mul(&acc, x);
        acc = field.add(&acc, c);
    }
    acc
}

fn ep_derivative(f: &ExtPoly, field: &ExtField) -> ExtPoly {
    if f.len() <= 1 {
        return vec![];
    }
    let mut out = Vec::with_capacity(f.len() - 1);
    for (i, c) in f.iter().enumerate().skip(1) {
        let mut k = field.zero();
        // i * c in characteristic p.
        let ip = (i as u64) % field.p;
        let ip_elem = field.from_u64(ip);
        k = field.add(&k, &field.mul(&ip_elem, c));
        out.push(k);
    }
    let mut out = out;
    ep_trim(&mut out, field);
    out
}

/// Fixed-sequence pseudo-random field elements for equal-degree splitting.
fn deterministic_elem(field: &ExtField, attempt: u64) -> ExtElem {
    let mut state = attempt
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    let mut coords = vec![0u64; field.e];
    for c in coords.iter_mut() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        *c = (state >> 11) % field.p;
    }
    coords
}

/// All roots of `f` that lie inside the given finite field. `f` need not be
/// squarefree; each root is reported once.
fn roots_in_field(field: &ExtField, f: &ExtPoly) -> Result<Vec<ExtElem>> {
    if field.p == 2 {
        return Err(Error::CharTwoUnsupported);
    }
    let mut g = f.clone();
    ep_trim(&mut g, field);
    ep_monic(&mut g, field);
    if ep_deg(&g).is_none() || ep_deg(&g) == Some(0) {
        return Ok(vec![]);
    }
    let q = BigUint::from(field.p).pow(field.e as u32);
    // Restrict to the product of linear factors with roots in this field.
    let x = vec![field.zero(), field.one()];
    let xq = ep_pow_mod(&x, &q, &g, field);
    let mut diff = xq.clone();
    diff.resize(diff.len().max(2), field.zero());
    diff[1] = field.sub(&diff[1], &field.one());
    ep_trim(&mut diff, field);
    let mut lin = ep_gcd(&diff, &g, field);
    if ep_deg(&lin).is_none() || ep_deg(&lin) == Some(0) {
        return Ok(vec![]);
    }
    // The gcd may keep repeated roots only once already (it divides the
    // squarefree X^q - X), so lin is squarefree and splits completely.
    let mut roots = Vec::new();
    split_to_linear(field, &mut lin, &q, &mut roots);
    roots.sort();
    Ok(roots)
}

fn split_to_linear(field: &ExtField, h: &ExtPoly, q: &BigUint, out: &mut Vec<ExtElem>) {
    match ep_deg(h) {
        None | Some(0) => return,
        Some(1) => {
            // Monic X + c: root is -c.
            out.push(field.neg(&h[0]));
            return;
        }
        _ => {}
    }
    let exp = (q - BigUint::one()) >> 1;
    let mut attempt = 0u64;
    loop {
        let a = deterministic_elem(field, attempt);
        attempt += 1;
        let shifted = vec![a, field.one()];
        let mut w = ep_pow_mod(&shifted, &exp, h, field);
        if w.is_empty() {
            w = vec![field.zero()];
        }
        w[0] = field.sub(&w[0], &field.one());
        let mut w = w;
        ep_trim(&mut w, field);
        if w.is_empty() {
            continue;
        }
        let d = ep_gcd(&w, h, field);
        let dd = ep_deg(&d);
        if dd.is_none() || dd == Some(0) || dd == ep_deg(h) {
            continue;
        }
        let rest = ep_div_exact(h, &d, field);
        split_to_linear(field, &d, q, out);
        split_to_linear(field, &rest, q, out);
        return;
    }
}

/// One root of `f` inside the given field, or None when no root lies there.
pub(super) fn any_root_in_field(field: &ExtField, f: &ExtPoly) -> Result<Option<ExtElem>> {
    Ok(roots_in_field(field, f)?.into_iter().next())
}

/// Complete root multiset of a nonzero univariate polynomial over the
/// closure. The sum of multiplicities equals the degree.
pub fn poly_roots(cl: &Closure, coeffs: &[GFElem]) -> Result<Vec<(GFElem, usize)>> {
    let mut coeffs: Vec<GFElem> = coeffs.to_vec();
    while coeffs.last().map(|c| c.is_zero()) == Some(true) {
        coeffs.pop();
    }
    if coeffs.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    if coeffs.len() == 1 {
        return Ok(vec![]);
    }
    // Common coefficient field.
    let mut e0 = 1u32;
    for c in &coeffs {
        e0 = super::lcm(e0, c.deg);
    }
    let modulus = cl.defining_poly(e0);
    let field = ExtField { p: cl.p(), e: e0 as usize, modulus: &modulus };
    let mut f: ExtPoly = coeffs
        .iter()
        .map(|c| cl.embed_raw(c, e0).expect("lcm admits every coefficient"))
        .collect();
    ep_trim(&mut f, &field);

    // Distinct roots, recursing through repeated factors.
    let mut distinct: Vec<GFElem> = Vec::new();
    collect_distinct_roots(cl, e0, &field, f.clone(), &mut distinct)?;
    distinct.sort();
    distinct.dedup();

    // Multiplicities by repeated synthetic division of the original input.
    let mut out: Vec<(GFElem, usize)> = Vec::new();
    for r in distinct {
        let e = super::lcm(e0, r.deg);
        let m_poly = cl.defining_poly(e);
        let fld = ExtField { p: cl.p(), e: e as usize, modulus: &m_poly };
        let rv = cl.embed_raw(&r, e).expect("lcm admits the root");
        let mut cur: ExtPoly = coeffs
            .iter()
            .map(|c| cl.embed_raw(c, e).expect("lcm admits every coefficient"))
            .collect();
        ep_trim(&mut cur, &fld);
        let mut mult = 0usize;
        loop {
            if fld.is_zero(&ep_eval(&cur, &rv, &fld)) && ep_deg(&cur).is_some() {
                // Synthetic division by (X - r).
                let divisor = vec![fld.neg(&rv), fld.one()];
                cur = ep_div_exact(&cur, &divisor, &fld);
                mult += 1;
            } else {
                break;
            }
        }
        debug_assert!(mult > 0);
        out.push((r, mult));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    debug_assert_eq!(
        out.iter().map(|(_, m)| m).sum::<usize>(),
        coeffs.len() - 1,
        "root multiset must account for the whole degree"
    );
    Ok(out)
}

/// Distinct roots of `f` over the closure. Roots with multiplicity
/// divisible by p disappear from f/gcd(f, f'), so the gcd part is searched
/// recursively; the caller dedups.
fn collect_distinct_roots(
    cl: &Closure,
    e0: u32,
    field: &ExtField,
    mut f: ExtPoly,
    out: &mut Vec<GFElem>,
) -> Result<()> {
    ep_trim(&mut f, field);
    if ep_deg(&f).map(|d| d > 0) != Some(true) {
        return Ok(());
    }
    ep_monic(&mut f, field);
    let deriv = ep_derivative(&f, field);
    if deriv.is_empty() {
        return collect_distinct_roots(cl, e0, field, pth_root_poly(&f, field), out);
    }
    let g = ep_gcd(&f, &deriv, field);
    let sqfree = if ep_deg(&g) == Some(0) {
        f.clone()
    } else {
        ep_div_exact(&f, &g, field)
    };

    // Distinct-degree scan of the squarefree part.
    let q0 = BigUint::from(field.p).pow(e0);
    let mut work = sqfree;
    let mut d = 1u32;
    let x = vec![field.zero(), field.one()];
    let mut frob = ep_pow_mod(&x, &q0, &work, field);
    while ep_deg(&work).map(|dd| dd > 0) == Some(true) {
        // gcd(work, X^(q0^d) - X) collects irreducible factors of degree d.
        let mut diff = frob.clone();
        diff.resize(diff.len().max(2), field.zero());
        diff[1] = field.sub(&diff[1], &field.one());
        ep_trim(&mut diff, field);
        let part = if diff.is_empty() {
            work.clone()
        } else {
            ep_gcd(&diff, &work, field)
        };
        if ep_deg(&part).map(|dd| dd > 0) == Some(true) {
            let big_e = e0 * d;
            let big_modulus = cl.defining_poly(big_e);
            let big_field = ExtField { p: field.p, e: big_e as usize, modulus: &big_modulus };
            let lifted: ExtPoly = part
                .iter()
                .map(|c| {
                    let g = cl
                        .from_coords(e0, c)
                        .expect("coefficient vector matches its field");
                    cl.embed_raw(&g, big_e).expect("e0 divides e0*d")
                })
                .collect();
            for r in roots_in_field(&big_field, &lifted)? {
                out.push(
                    cl.from_coords(big_e, &r)
                        .expect("root vector matches its field"),
                );
            }
            work = ep_div_exact(&work, &part, field);
        }
        if ep_deg(&work).map(|dd| dd > 0) != Some(true) {
            break;
        }
        d += 1;
        frob = ep_rem(&frob, &work, field);
        frob = ep_pow_mod(&frob, &q0, &work, field);
    }

    if ep_deg(&g).map(|dd| dd > 0) == Some(true) {
        collect_distinct_roots(cl, e0, field, g, out)?;
    }
    Ok(())
}

/// For f with zero derivative (all exponents divisible by p), return the
/// polynomial whose p-th power is f. Inside F_{p^e} the p-th root of a
/// coefficient is the inverse Frobenius, i.e. Frobenius applied e-1 times.
fn pth_root_poly(f: &ExtPoly, field: &ExtField) -> ExtPoly {
    let p = field.p as usize;
    let mut out = Vec::new();
    for (i, c) in f.iter().enumerate() {
        if i % p == 0 {
            let mut r = c.clone();
            for _ in 0..field.e.saturating_sub(1) {
                r = field.frobenius(&r);
            }
            out.push(r);
        } else {
            debug_assert!(field.is_zero(c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(cl: &Closure, v: i64) -> GFElem {
        cl.from_prime(v)
    }

    #[test]
    fn roots_of_quadratics() {
        let cl = Closure::new(5).unwrap();
        // X^2 - 1 = (X-1)(X+1)
        let f = [c(&cl, -1), c(&cl, 0), c(&cl, 1)];
        let r = poly_roots(&cl, &f).unwrap();
        assert_eq!(r.len(), 2);
        let roots: Vec<u64> = r.iter().map(|(g, _)| g.coords[0]).collect();
        assert!(roots.contains(&1) && roots.contains(&4));
        assert!(r.iter().all(|(_, m)| *m == 1));
    }

    #[test]
    fn triple_root() {
        let cl = Closure::new(5).unwrap();
        // (X-2)^3 = X^3 - 6X^2 + 12X - 8 = X^3 + 4X^2 + 2X + 2 mod 5
        let f = [c(&cl, 2), c(&cl, 2), c(&cl, 4), c(&cl, 1)];
        let r = poly_roots(&cl, &f).unwrap();
        assert_eq!(r, vec![(c(&cl, 2), 3)]);
    }

    #[test]
    fn conjugate_roots_in_extension() {
        let cl = Closure::new(5).unwrap();
        // X^2 - 2: 2 is a non-square mod 5, so the roots generate F_25.
        let f = [c(&cl, -2), c(&cl, 0), c(&cl, 1)];
        let r = poly_roots(&cl, &f).unwrap();
        assert_eq!(r.len(), 2);
        for (root, m) in &r {
            assert_eq!(*m, 1);
            assert_eq!(root.deg, 2);
            let sq = cl.mul(root, root).unwrap();
            assert_eq!(sq, c(&cl, 2));
        }
    }

    #[test]
    fn reconstruction_random() {
        let cl = Closure::new(5).unwrap();
        // Build products of linear factors and re-expand from the multiset.
        let elems = [c(&cl, 1), c(&cl, 2), c(&cl, 3), cl.generator(2)];
        for a in &elems {
            for b in &elems {
                // (X - a)(X - b)
                let ab = cl.mul(a, b).unwrap();
                let s = cl.add(a, b).unwrap();
                let f = [ab, cl.neg(&s).unwrap(), cl.one()];
                let r = poly_roots(&cl, &f).unwrap();
                assert_eq!(r.iter().map(|(_, m)| m).sum::<usize>(), 2);
                // Each reported root really is a root.
                for (root, _) in &r {
                    let v = cl
                        .add(
                            &cl.mul(root, root).unwrap(),
                            &cl.add(
                                &cl.mul(&f[1], root).unwrap(),
                                &f[0],
                            )
                            .unwrap(),
                        )
                        .unwrap();
                    assert!(v.is_zero());
                }
            }
        }
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        let cl = Closure::new(5).unwrap();
        assert!(poly_roots(&cl, &[]).is_err());
        assert!(poly_roots(&cl, &[cl.zero()]).is_err());
    }
}
