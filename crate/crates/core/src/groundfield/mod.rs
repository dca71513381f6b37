//! Exact arithmetic in the algebraic closure of a prime field, realized as a
//! dynamic tower of finite extensions with deterministic compatible
//! embeddings.
//!
//! The defining polynomial of F_{p^e} is the lexicographically smallest
//! monic irreducible of degree e (coefficient vectors compared
//! low-degree-first). Embeddings between registered degrees are pinned by
//! choosing the lexicographically smallest root of the smaller defining
//! polynomial that commutes with every previously registered embedding, so
//! the whole diagram of registered fields stays coherent. Elements
//! normalize to their minimal subfield after every operation.

pub mod fppoly;
pub mod roots;

use crate::error::{Error, Result};
use fppoly::{ExtElem, ExtField, FpPoly};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::RwLock;

/// Element of the algebraic closure of F_p. `coords` are the coordinates
/// with respect to the power basis of the registered generator of
/// F_{p^deg}; the element lies in no proper subfield of F_{p^deg}.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GFElem {
    pub p: u64,
    pub deg: u32,
    pub coords: Vec<u64>,
}

impl GFElem {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        self.deg == 1 && self.coords == [1]
    }
}

impl fmt::Display for GFElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.deg == 1 {
            return write!(f, "{}", self.coords[0]);
        }
        let mut first = true;
        for (i, &c) in self.coords.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c)?,
                1 if c == 1 => write!(f, "a{}", self.deg)?,
                1 => write!(f, "{}*a{}", c, self.deg)?,
                _ if c == 1 => write!(f, "a{}^{}", self.deg, i)?,
                _ => write!(f, "{}*a{}^{}", c, self.deg, i)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Tables {
    defining: BTreeMap<u32, FpPoly>,
    // (d, E) -> image of the generator of F_{p^d} in F_{p^E}, length E.
    gen_images: BTreeMap<(u32, u32), Vec<u64>>,
}

/// Registry for one algebraic closure. The tables are a shared cache behind
/// a single writer lock; all `GFElem` values are immutable.
pub struct Closure {
    p: u64,
    tables: RwLock<Tables>,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn lcm(a: u32, b: u32) -> u32 {
    let g = gcd_u32(a, b);
    a / g * b
}

fn gcd_u32(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn divisors(n: u32) -> Vec<u32> {
    let mut out: Vec<u32> = (1..=n).filter(|d| n % d == 0).collect();
    out.sort_unstable();
    out
}

impl Closure {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::BadConfig(format!("{} is not prime", p)));
        }
        Ok(Closure {
            p,
            tables: RwLock::new(Tables::default()),
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn zero(&self) -> GFElem {
        GFElem { p: self.p, deg: 1, coords: vec![0] }
    }

    pub fn one(&self) -> GFElem {
        GFElem { p: self.p, deg: 1, coords: vec![1] }
    }

    pub fn from_prime(&self, c: i64) -> GFElem {
        GFElem {
            p: self.p,
            deg: 1,
            coords: vec![c.rem_euclid(self.p as i64) as u64],
        }
    }

    /// Canonical generator of F_{p^e} (the class of X modulo the defining
    /// polynomial). For e = 1 this is 0, since the degree-1 defining
    /// polynomial is X itself.
    pub fn generator(&self, e: u32) -> GFElem {
        self.defining_poly(e);
        if e == 1 {
            return self.zero();
        }
        let mut coords = vec![0; e as usize];
        coords[1] = 1;
        GFElem { p: self.p, deg: e, coords }
    }

    pub fn defining_poly(&self, e: u32) -> FpPoly {
        if let Some(f) = self.tables.read().unwrap().defining.get(&e) {
            return f.clone();
        }
        let f = fppoly::lex_smallest_irreducible(self.p, e);
        self.tables
            .write()
            .unwrap()
            .defining
            .entry(e)
            .or_insert_with(|| f.clone());
        f
    }

    /// Build an element from coordinates in F_{p^e}; the result is
    /// normalized to its minimal subfield.
    pub fn from_coords(&self, e: u32, coords: &[u64]) -> Result<GFElem> {
        if coords.len() != e as usize {
            return Err(Error::BadConfig(format!(
                "coordinate vector length {} does not match degree {}",
                coords.len(),
                e
            )));
        }
        let raw: Vec<u64> = coords.iter().map(|&c| c % self.p).collect();
        Ok(self.normalize(raw, e))
    }

    fn with_field<T>(&self, e: u32, f: impl FnOnce(&ExtField) -> T) -> T {
        let modulus = self.defining_poly(e);
        let field = ExtField { p: self.p, e: e as usize, modulus: &modulus };
        f(&field)
    }

    /// Image of the generator of F_{p^d} inside F_{p^E} (d | E), cached.
    fn gen_image(&self, d: u32, big_e: u32) -> Result<Vec<u64>> {
        assert!(big_e % d == 0);
        if d == big_e {
            // Identity: the generator itself, padded.
            let g = self.generator(d);
            let mut v = g.coords;
            v.resize(big_e as usize, 0);
            return Ok(v);
        }
        if d == 1 {
            // Prime field embeds canonically; its generator is 0.
            return Ok(vec![0; big_e as usize]);
        }
        if let Some(v) = self.tables.read().unwrap().gen_images.get(&(d, big_e)) {
            return Ok(v.clone());
        }
        let image = self.create_gen_image(d, big_e)?;
        self.tables
            .write()
            .unwrap()
            .gen_images
            .entry((d, big_e))
            .or_insert_with(|| image.clone());
        Ok(image)
    }

    /// Choose the root of the degree-d defining polynomial inside F_{p^E}
    /// that is lexicographically smallest among those consistent with every
    /// embedding registered so far. Consistency is checked on all triangles
    /// the new edge closes, which keeps the registered diagram commutative.
    fn create_gen_image(&self, d: u32, big_e: u32) -> Result<Vec<u64>> {
        let f_d = self.defining_poly(d);
        let modulus = self.defining_poly(big_e);
        let field = ExtField { p: self.p, e: big_e as usize, modulus: &modulus };
        let lifted: Vec<ExtElem> = f_d.iter().map(|&c| field.from_u64(c)).collect();
        let one_root = roots::any_root_in_field(&field, &lifted)?
            .ok_or(Error::EmbeddingConflict(d, big_e))?;
        // All roots form the Frobenius orbit of length d.
        let mut candidates = Vec::with_capacity(d as usize);
        let mut r = one_root;
        for _ in 0..d {
            candidates.push(r.clone());
            r = field.frobenius(&r);
        }
        candidates.sort();
        candidates.dedup();

        let existing: Vec<((u32, u32), Vec<u64>)> = {
            let t = self.tables.read().unwrap();
            t.gen_images.iter().map(|(k, v)| (*k, v.clone())).collect()
        };

        'cand: for cand in &candidates {
            // (a) known d0 -> d and d0 -> E must commute through the candidate.
            for ((d0, dd), img) in &existing {
                if *dd == d && d % d0 == 0 && *d0 > 1 {
                    if let Some(img_d0_e) = existing
                        .iter()
                        .find(|((a, b), _)| *a == *d0 && *b == big_e)
                        .map(|(_, v)| v)
                    {
                        let through = self.apply_vector(&field, img, cand);
                        if &through != img_d0_e {
                            continue 'cand;
                        }
                    }
                }
            }
            // (b) known d -> b and b -> E force the candidate outright.
            for ((dd, b), img_db) in &existing {
                if *dd == d && *b != big_e && big_e % b == 0 {
                    if let Some(img_b_e) = existing
                        .iter()
                        .find(|((a, bb), _)| *a == *b && *bb == big_e)
                        .map(|(_, v)| v)
                    {
                        let forced = {
                            let img_b_e_elem: ExtElem = img_b_e.clone();
                            let mut acc = field.zero();
                            for &c in img_db.iter().rev() {
                                acc = field.mul(&acc, &img_b_e_elem);
                                let cv = field.from_u64(c);
                                acc = field.add(&acc, &cv);
                            }
                            acc
                        };
                        if cand != &forced {
                            continue 'cand;
                        }
                    }
                }
            }
            // (c) known d -> F and E -> F must agree with the candidate.
            for ((dd, ff), img_df) in &existing {
                if *dd == d && ff % big_e == 0 && *ff != big_e {
                    if let Some(img_e_f) = existing
                        .iter()
                        .find(|((a, bb), _)| *a == big_e && *bb == *ff)
                        .map(|(_, v)| v)
                    {
                        let f_mod = self.defining_poly(*ff);
                        let big_field =
                            ExtField { p: self.p, e: *ff as usize, modulus: &f_mod };
                        let pushed = self.apply_vector(&big_field, cand, img_e_f);
                        if &pushed != img_df {
                            continue 'cand;
                        }
                    }
                }
            }
            return Ok(cand.clone());
        }
        Err(Error::EmbeddingConflict(d, big_e))
    }

    /// Evaluate a coordinate vector (an element written in powers of some
    /// generator) at the image of that generator.
    fn apply_vector(&self, field: &ExtField, coords: &[u64], gen_image: &ExtElem) -> ExtElem {
        let mut acc = field.zero();
        for &c in coords.iter().rev() {
            acc = field.mul(&acc, gen_image);
            let cv = field.from_u64(c);
            acc = field.add(&acc, &cv);
        }
        acc
    }

    /// Raw embedding into F_{p^E}: a length-E coordinate vector.
    pub fn embed_raw(&self, x: &GFElem, big_e: u32) -> Result<Vec<u64>> {
        if big_e % x.deg != 0 {
            return Err(Error::NotASubfield(x.deg, big_e));
        }
        if x.deg == big_e {
            return Ok(x.coords.clone());
        }
        let g = self.gen_image(x.deg, big_e)?;
        let modulus = self.defining_poly(big_e);
        let field = ExtField { p: self.p, e: big_e as usize, modulus: &modulus };
        Ok(self.apply_vector(&field, &x.coords, &g))
    }

    /// Embedding with the spec surface: errors unless deg(x) divides e2.
    pub fn embed(&self, x: &GFElem, e2: u32) -> Result<GFElem> {
        let raw = self.embed_raw(x, e2)?;
        Ok(GFElem { p: self.p, deg: e2, coords: raw })
    }

    /// Normalize a raw coordinate vector of F_{p^E} to the minimal subfield.
    fn normalize(&self, raw: Vec<u64>, big_e: u32) -> GFElem {
        self.with_field(big_e, |field| {
            let mut minimal = big_e;
            for d in divisors(big_e) {
                if d == big_e {
                    break;
                }
                let mut y = raw.clone();
                for _ in 0..d {
                    y = field.frobenius(&y);
                }
                if y == raw {
                    minimal = d;
                    break;
                }
            }
            if minimal == big_e {
                return GFElem { p: self.p, deg: big_e, coords: raw.clone() };
            }
            if minimal == 1 {
                return GFElem { p: self.p, deg: 1, coords: vec![raw[0]] };
            }
            let g = self
                .gen_image(minimal, big_e)
                .expect("fixed-field membership guarantees the embedding exists");
            // Solve raw = sum c_i g^i over F_p.
            let mut basis: Vec<Vec<u64>> = Vec::with_capacity(minimal as usize);
            let mut pw = field.one();
            for _ in 0..minimal {
                basis.push(pw.clone());
                pw = field.mul(&pw, &g);
            }
            let coords = solve_fp_system(&basis, &raw, self.p)
                .expect("element of the subfield must be expressible in its basis");
            GFElem { p: self.p, deg: minimal, coords }
        })
    }

    fn check_char(&self, x: &GFElem) -> Result<()> {
        if x.p != self.p {
            return Err(Error::CharMismatch(self.p, x.p));
        }
        Ok(())
    }

    fn binop(
        &self,
        x: &GFElem,
        y: &GFElem,
        f: impl Fn(&ExtField, &ExtElem, &ExtElem) -> ExtElem,
    ) -> Result<GFElem> {
        self.check_char(x)?;
        self.check_char(y)?;
        if x.deg == 1 && y.deg == 1 {
            let modulus = vec![0, 1];
            let field = ExtField { p: self.p, e: 1, modulus: &modulus };
            let r = f(&field, &x.coords, &y.coords);
            return Ok(GFElem { p: self.p, deg: 1, coords: r });
        }
        let e = lcm(x.deg, y.deg);
        let xr = self.embed_raw(x, e)?;
        let yr = self.embed_raw(y, e)?;
        let raw = self.with_field(e, |field| f(field, &xr, &yr));
        Ok(self.normalize(raw, e))
    }

    pub fn add(&self, x: &GFElem, y: &GFElem) -> Result<GFElem> {
        self.binop(x, y, |f, a, b| f.add(a, b))
    }

    pub fn sub(&self, x: &GFElem, y: &GFElem) -> Result<GFElem> {
        self.binop(x, y, |f, a, b| f.sub(a, b))
    }

    pub fn mul(&self, x: &GFElem, y: &GFElem) -> Result<GFElem> {
        if x.is_zero() || y.is_zero() {
            return Ok(self.zero());
        }
        self.binop(x, y, |f, a, b| f.mul(a, b))
    }

    pub fn neg(&self, x: &GFElem) -> Result<GFElem> {
        self.check_char(x)?;
        let raw = self.with_field(x.deg, |field| field.neg(&x.coords));
        Ok(self.normalize(raw, x.deg))
    }

    pub fn inv(&self, x: &GFElem) -> Result<GFElem> {
        self.check_char(x)?;
        if x.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let raw = self.with_field(x.deg, |field| field.inv(&x.coords));
        // The inverse lives in the same minimal field as x.
        Ok(GFElem { p: self.p, deg: x.deg, coords: raw })
    }
}

/// Solve basis * c = target over F_p, basis given as column vectors.
fn solve_fp_system(basis: &[Vec<u64>], target: &[u64], p: u64) -> Option<Vec<u64>> {
    let rows = target.len();
    let cols = basis.len();
    // Augmented matrix.
    let mut m: Vec<Vec<u64>> = (0..rows)
        .map(|i| {
            let mut row: Vec<u64> = basis.iter().map(|b| b[i]).collect();
            row.push(target[i]);
            row
        })
        .collect();
    let mut pivot_rows = vec![usize::MAX; cols];
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, pr);
        let inv = fppoly::inv_mod_p(m[r][c], p);
        for v in m[r].iter_mut() {
            *v = (*v as u128 * inv as u128 % p as u128) as u64;
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let factor = m[i][c];
                for j in 0..=cols {
                    let s = (factor as u128 * m[r][j] as u128 % p as u128) as u64;
                    m[i][j] = (m[i][j] + p - s) % p;
                }
            }
        }
        pivot_rows[c] = r;
        r += 1;
    }
    // Check consistency.
    for i in r..rows {
        if m[i][cols] != 0 {
            return None;
        }
    }
    let mut out = vec![0u64; cols];
    for c in 0..cols {
        if pivot_rows[c] != usize::MAX {
            out[c] = m[pivot_rows[c]][cols];
        }
    }
    Some(out)
}
