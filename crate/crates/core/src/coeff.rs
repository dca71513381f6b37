//! Coefficient rings Z/l^m, projections and lifts between levels, the
//! bound constants M_r, N, R, and the cancellation principle.
//!
//! Every coefficient carries its prime `ell` and its level `m`; arithmetic
//! between mismatched rings is a hard error, never a silent coercion.
//! Level arithmetic is exact u64 (the modulus must fit in 64 bits), while
//! the bound constants use arbitrary-precision integers since R(n) already
//! exceeds 32 bits at n = 2.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;
use std::fmt;

/// Element of Z/l^m tagged with its ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lambda {
    ell: u64,
    level: u32,
    residue: u64,
}

/// l^m as u64, or an error when it does not fit.
pub fn modulus(ell: u64, level: u32) -> Result<u64> {
    let mut m: u64 = 1;
    for _ in 0..level {
        m = m
            .checked_mul(ell)
            .ok_or(Error::ModulusOverflow(ell, level))?;
    }
    Ok(m)
}

impl Lambda {
    pub fn new(ell: u64, level: u32, value: i64) -> Result<Self> {
        if level == 0 {
            return Err(Error::LevelRange {
                got: 0,
                why: "levels start at 1",
            });
        }
        let m = modulus(ell, level)?;
        let residue = value.rem_euclid(m as i64) as u64;
        Ok(Lambda {
            ell,
            level,
            residue,
        })
    }

    pub fn zero(ell: u64, level: u32) -> Self {
        Lambda::new(ell, level, 0).expect("level validated by caller")
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn is_zero(&self) -> bool {
        self.residue == 0
    }

    fn check_ring(&self, other: &Lambda) -> Result<()> {
        if self.ell != other.ell {
            return Err(Error::EllMismatch(self.ell, other.ell));
        }
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(())
    }

    pub fn add(&self, other: &Lambda) -> Result<Lambda> {
        self.check_ring(other)?;
        let m = modulus(self.ell, self.level)? as u128;
        let r = (self.residue as u128 + other.residue as u128) % m;
        Ok(Lambda {
            residue: r as u64,
            ..*self
        })
    }

    pub fn sub(&self, other: &Lambda) -> Result<Lambda> {
        self.check_ring(other)?;
        let m = modulus(self.ell, self.level)? as u128;
        let r = (self.residue as u128 + m - other.residue as u128) % m;
        Ok(Lambda {
            residue: r as u64,
            ..*self
        })
    }

    pub fn mul(&self, other: &Lambda) -> Result<Lambda> {
        self.check_ring(other)?;
        let m = modulus(self.ell, self.level)? as u128;
        let r = (self.residue as u128 * other.residue as u128) % m;
        Ok(Lambda {
            residue: r as u64,
            ..*self
        })
    }

    pub fn neg(&self) -> Lambda {
        let m = modulus(self.ell, self.level).expect("modulus validated at construction");
        Lambda {
            residue: (m - self.residue) % m,
            ..*self
        }
    }

    /// Scale by an integer (reduced into the ring first).
    pub fn scale(&self, k: i64) -> Lambda {
        let m = modulus(self.ell, self.level).expect("modulus validated at construction");
        let k = k.rem_euclid(m as i64) as u128;
        Lambda {
            residue: ((self.residue as u128 * k) % m as u128) as u64,
            ..*self
        }
    }

    /// l-adic valuation of the residue; `level` for zero.
    pub fn val(&self) -> u32 {
        if self.residue == 0 {
            return self.level;
        }
        let mut v = 0;
        let mut r = self.residue;
        while r % self.ell == 0 {
            r /= self.ell;
            v += 1;
        }
        v
    }

    /// True when the residue is a unit of Z/l^m.
    pub fn is_unit(&self) -> bool {
        self.residue % self.ell != 0
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.residue)
    }
}

/// Image of `a` under Z/l^m -> Z/l^n for n <= m.
pub fn lambda_project(a: &Lambda, n: u32) -> Result<Lambda> {
    if n > a.level {
        return Err(Error::LevelRange {
            got: n,
            why: "projection target exceeds source level",
        });
    }
    if n == 0 {
        return Err(Error::LevelRange {
            got: 0,
            why: "levels start at 1",
        });
    }
    let m = modulus(a.ell, n)?;
    Ok(Lambda {
        ell: a.ell,
        level: n,
        residue: a.residue % m,
    })
}

/// Canonical section of the projection: reinterpret the residue at level m >= n.
pub fn lambda_lift(a: &Lambda, m: u32) -> Result<Lambda> {
    if m < a.level {
        return Err(Error::LevelRange {
            got: m,
            why: "lift target below source level",
        });
    }
    modulus(a.ell, m)?;
    Ok(Lambda {
        ell: a.ell,
        level: m,
        residue: a.residue,
    })
}

/// The bound constants are configuration points: the default implements the
/// known formulas, but sharper bounds can be swapped in without touching the
/// call sites.
pub trait BoundFormulas {
    fn m_bound(&self, r: u64, n: &BigUint) -> BigUint;
    fn n_bound(&self, n: &BigUint, ell: u64) -> BigUint;
    fn r_bound(&self, n: &BigUint, ell: u64) -> BigUint;
}

/// M_r(n) = (r+1)n - r, N(n) = M_1((6 l^(3n-2) - 7)(n-1) + 3n - 2),
/// R(n) = N(M_2(M_1(n))).
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultBounds;

impl BoundFormulas for DefaultBounds {
    fn m_bound(&self, r: u64, n: &BigUint) -> BigUint {
        // (r+1)n - r; n >= 1 keeps this positive.
        BigUint::from(r + 1) * n - BigUint::from(r)
    }

    fn n_bound(&self, n: &BigUint, ell: u64) -> BigUint {
        let one = BigUint::one();
        if *n == one {
            return one;
        }
        let exp = n * 3u32 - 2u32;
        let exp: u64 = exp
            .try_into()
            .expect("exponent 3n-2 exceeds u64; bound not computable");
        let pow = BigUint::from(ell).pow(exp as u32);
        let inner = (pow * 6u32 - 7u32) * (n - &one) + n * 3u32 - 2u32;
        self.m_bound(1, &inner)
    }

    fn r_bound(&self, n: &BigUint, ell: u64) -> BigUint {
        let m1 = self.m_bound(1, n);
        let m2m1 = self.m_bound(2, &m1);
        self.n_bound(&m2m1, ell)
    }
}

pub fn const_m(r: u64, n: u64) -> BigUint {
    DefaultBounds.m_bound(r, &BigUint::from(n))
}

pub fn const_n(n: u64, ell: u64) -> BigUint {
    DefaultBounds.n_bound(&BigUint::from(n), ell)
}

pub fn const_r(n: u64, ell: u64) -> BigUint {
    DefaultBounds.r_bound(&BigUint::from(n), ell)
}

/// One instance of the cancellation principle: given c_i, a, b at a common
/// level R with R >= M_r(n) and (c_i)_n != 0, returns whether
/// `a prod(c) = b prod(c)  implies  a_n = b_n` holds for this instance.
///
/// Precondition violations are errors, never `false`.
pub fn check_cancellation(c: &[Lambda], a: &Lambda, b: &Lambda, n: u32) -> Result<bool> {
    if c.is_empty() {
        return Err(Error::CancellationPrecondition(
            "empty factor list".to_string(),
        ));
    }
    a.check_ring(b)?;
    for ci in c {
        a.check_ring(ci)?;
    }
    let big_r = a.level;
    let m_r = const_m(c.len() as u64, n as u64);
    if BigUint::from(big_r) < m_r {
        return Err(Error::CancellationPrecondition(format!(
            "level {} below M_{}({}) = {}",
            big_r,
            c.len(),
            n,
            m_r
        )));
    }
    for (i, ci) in c.iter().enumerate() {
        if lambda_project(ci, n)?.is_zero() {
            return Err(Error::CancellationPrecondition(format!(
                "factor {} projects to zero at level {}",
                i, n
            )));
        }
    }
    let mut prod_a = *a;
    let mut prod_b = *b;
    for ci in c {
        prod_a = prod_a.mul(ci)?;
        prod_b = prod_b.mul(ci)?;
    }
    if prod_a != prod_b {
        // Hypothesis of the implication fails; the instance holds vacuously.
        return Ok(true);
    }
    Ok(lambda_project(a, n)? == lambda_project(b, n)?)
}

/// Exhaustive sweep of the cancellation principle over all admissible
/// (c_1..c_r, a, b) at level R. Returns the number of instances checked;
/// a counterexample is reported as an error carrying the triple.
pub fn cancellation_sweep(ell: u64, n: u32, r: u32, big_r: u32) -> Result<u64> {
    let m = modulus(ell, big_r)?;
    let m_n = modulus(ell, n)?;
    let admissible: Vec<u64> = (0..m).filter(|c| c % m_n != 0).collect();
    let mut factor_idx = vec![0usize; r as usize];
    let mut checked = 0u64;
    loop {
        // Product of the current factor tuple.
        let mut prod: u128 = 1;
        for &i in &factor_idx {
            prod = (prod * admissible[i] as u128) % m as u128;
        }
        let prod = prod as u64;
        // a*prod == b*prod  iff  (a-b)*prod == 0; scan all pairs via the
        // multiplication table for this product.
        let table: Vec<u64> = (0..m).map(|x| ((x as u128 * prod as u128) % m as u128) as u64).collect();
        for a in 0..m {
            for b in 0..m {
                checked += 1;
                if table[a as usize] == table[b as usize] && a % m_n != b % m_n {
                    return Err(Error::CancellationPrecondition(format!(
                        "counterexample: ell={} n={} R={} c={:?} a={} b={}",
                        ell,
                        n,
                        big_r,
                        factor_idx.iter().map(|&i| admissible[i]).collect::<Vec<_>>(),
                        a,
                        b
                    )));
                }
            }
        }
        // Advance the factor tuple.
        let mut k = 0;
        loop {
            if k == factor_idx.len() {
                return Ok(checked);
            }
            factor_idx[k] += 1;
            if factor_idx[k] < admissible.len() {
                break;
            }
            factor_idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(ell: u64, level: u32, v: i64) -> Lambda {
        Lambda::new(ell, level, v).unwrap()
    }

    #[test]
    fn project_examples() {
        // 5 mod 4 at level 2
        assert_eq!(lambda_project(&lam(2, 3, 5), 2).unwrap(), lam(2, 2, 1));
        assert_eq!(lambda_project(&lam(3, 2, 0), 1).unwrap(), lam(3, 1, 0));
        assert_eq!(lambda_project(&lam(2, 2, 3), 2).unwrap(), lam(2, 2, 3));
        assert!(lambda_project(&lam(2, 2, 3), 3).is_err());
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lambda_lift(&lam(2, 1, 1), 2).unwrap(), lam(2, 2, 1));
        assert_eq!(lambda_lift(&lam(3, 1, 2), 3).unwrap(), lam(3, 3, 2));
        assert!(lambda_lift(&lam(3, 2, 2), 1).is_err());
    }

    #[test]
    fn lift_project_roundtrip_exhaustive() {
        for ell in [2u64, 3, 5] {
            for a in 0..ell {
                let x = lam(ell, 1, a as i64);
                for m in 1..=4 {
                    let lifted = lambda_lift(&x, m).unwrap();
                    assert_eq!(lambda_project(&lifted, 1).unwrap(), x);
                }
            }
        }
    }

    #[test]
    fn projection_functoriality_exhaustive() {
        let ell = 2u64;
        for m in 1..=4u32 {
            let md = modulus(ell, m).unwrap();
            for a in 0..md {
                let x = lam(ell, m, a as i64);
                for k in 1..=m {
                    for n in 1..=k {
                        let two_step =
                            lambda_project(&lambda_project(&x, k).unwrap(), n).unwrap();
                        let direct = lambda_project(&x, n).unwrap();
                        assert_eq!(two_step, direct);
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_modulus_is_an_error() {
        assert!(lam(2, 2, 1).add(&lam(2, 3, 1)).is_err());
        assert!(lam(2, 2, 1).mul(&lam(3, 2, 1)).is_err());
    }

    #[test]
    fn constant_values() {
        for ell in [2u64, 3, 5] {
            assert_eq!(const_m(1, 1), BigUint::from(1u32));
            assert_eq!(const_m(2, 1), BigUint::from(1u32));
            assert_eq!(const_n(1, ell), BigUint::from(1u32));
            assert_eq!(const_r(1, ell), BigUint::from(1u32));
        }
        assert_eq!(const_m(1, 2), BigUint::from(3u32));
        assert_eq!(const_m(2, 3), BigUint::from(7u32));
        // N(2): (6*l^4 - 7)*1 + 4, then M_1.
        assert_eq!(const_n(2, 2), BigUint::from(185u32));
        assert_eq!(const_n(2, 3), BigUint::from(965u32));
        assert_eq!(const_r(2, 2), BigUint::from(37748689u32));
    }

    #[test]
    fn constant_chain_inequality() {
        for ell in [2u64, 3] {
            for n in 1..=5u64 {
                let nn = BigUint::from(n);
                let m1 = const_m(1, n);
                let m2m1 = DefaultBounds.m_bound(2, &m1);
                let r = const_r(n, ell);
                assert!(nn <= m1);
                assert!(m1 <= m2m1);
                assert!(m2m1 <= r);
            }
        }
    }

    #[test]
    fn cancellation_examples() {
        // l=2, n=2, R=3: c=[2], a=1, b=5: both products are 2 in Z/8 and
        // the projections agree.
        let c = [lam(2, 3, 2)];
        assert!(check_cancellation(&c, &lam(2, 3, 1), &lam(2, 3, 5), 2).unwrap());
        // Identity case.
        let c = [lam(2, 1, 1)];
        assert!(check_cancellation(&c, &lam(2, 1, 1), &lam(2, 1, 1), 1).unwrap());
        // (4)_2 = 0 violates the precondition.
        let c = [lam(2, 3, 4)];
        assert!(check_cancellation(&c, &lam(2, 3, 1), &lam(2, 3, 5), 2).is_err());
        // Level below M_r(n) is an error too.
        let c = [lam(2, 2, 1)];
        assert!(check_cancellation(&c, &lam(2, 2, 1), &lam(2, 2, 1), 2).is_err());
    }

    #[test]
    fn cancellation_exhaustive_small() {
        for ell in [2u64, 3] {
            for n in [1u32, 2] {
                for r in [1u32, 2] {
                    let big_r: u32 = const_m(r as u64, n as u64).try_into().unwrap();
                    cancellation_sweep(ell, n, r, big_r).unwrap();
                }
            }
        }
    }

    #[test]
    fn val_and_units() {
        assert_eq!(lam(2, 3, 4).val(), 2);
        assert_eq!(lam(2, 3, 0).val(), 3);
        assert!(lam(2, 3, 3).is_unit());
        assert!(!lam(2, 3, 6).is_unit());
    }
}
