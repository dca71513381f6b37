//! The three-valued C-pair decision engine. A pair of characters is a
//! C-pair when s(x) t(1-x) = s(1-x) t(x) for every x outside {0, 1}.
//!
//! The certifier runs first: it is linear algebra over the coefficient
//! ring on small matrices. It looks for a registered flag whose
//! decomposition structurally contains both characters and whose residue
//! image is cyclic; scalar-proportional pairs (including zero) are
//! certified outright since the condition is then an identity. The
//! falsifier enumerates bounded test elements in a fixed order and returns
//! the first decisive witness. Anything else is honestly unknown.

use crate::context::{FieldCtx, FlagId};
use crate::error::Result;
use crate::funcfield::{BivRat, ElementStream, SearchBudget};
use crate::galois::{submodule_member, Functional};
use crate::valuations::{comparable, FlagValuation};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::RwLock;

/// Certificates for a positive C-pair verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum YesCert {
    /// Common decomposition flag with coefficient-cyclic residue image.
    Flag(FlagId),
    /// One character is a scalar multiple of the other (or zero), making
    /// the defining identity hold term by term.
    Proportional,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CVerdict {
    Yes(YesCert),
    No(Box<BivRat>),
    Unknown,
}

impl CVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, CVerdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, CVerdict::No(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, CVerdict::Unknown)
    }
}

impl fmt::Display for CVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CVerdict::Yes(YesCert::Flag(id)) => write!(f, "yes cert=flag#{}", id),
            CVerdict::Yes(YesCert::Proportional) => write!(f, "yes cert=proportional"),
            CVerdict::No(x) => write!(f, "no witness=\"{}\"", x),
            CVerdict::Unknown => write!(f, "unknown"),
        }
    }
}

/// All terms of s are keyed comparably to v, so s kills the principal
/// units of v structurally.
pub fn structurally_in_decomposition(ctx: &FieldCtx, s: &Functional, v: &FlagValuation) -> bool {
    s.terms.keys().all(|(flag, coord)| {
        let f = ctx.flag(*flag);
        let trunc = FlagValuation { stages: f.stages[..*coord as usize].to_vec() };
        comparable(&trunc, v)
    })
}

/// Keys of s that survive in the residue of v (strict refinements).
fn residue_keys(ctx: &FieldCtx, s: &Functional, v: &FlagValuation) -> Vec<((FlagId, u32), u64)> {
    s.terms
        .iter()
        .filter(|((flag, coord), _)| {
            let f = ctx.flag(*flag);
            let trunc = FlagValuation { stages: f.stages[..*coord as usize].to_vec() };
            !crate::valuations::is_prefix_of(&trunc, v)
        })
        .map(|(k, c)| (*k, *c))
        .collect()
}

/// Search registered flags for a certificate: both characters structurally
/// in the decomposition, and their images modulo the inertia coordinates
/// spanning a cyclic module. Returns the first certifying flag in registry
/// order.
pub fn cpair_certify(ctx: &FieldCtx, s: &Functional, t: &Functional) -> Result<Option<FlagId>> {
    if s.ell != t.ell || s.level != t.level {
        return Err(crate::error::Error::LevelMismatch(s.level, t.level));
    }
    for id in 0..ctx.flag_count() {
        let v = ctx.flag(id);
        if !structurally_in_decomposition(ctx, s, &v)
            || !structurally_in_decomposition(ctx, t, &v)
        {
            continue;
        }
        // Rank of the 2 x k image matrix over the coefficient ring.
        let mut s_img = Functional::zero(s.ell, s.level);
        for (k, c) in residue_keys(ctx, s, &v) {
            s_img.terms.insert(k, c);
        }
        let mut t_img = Functional::zero(t.ell, t.level);
        for (k, c) in residue_keys(ctx, t, &v) {
            t_img.terms.insert(k, c);
        }
        if crate::galois::module_rank(&[&s_img, &t_img])? <= 1 {
            return Ok(Some(id));
        }
    }
    Ok(None)
}

/// Scalar degeneracy: t in <s> or s in <t> makes the condition an identity.
pub fn proportional(s: &Functional, t: &Functional) -> Result<bool> {
    Ok(submodule_member(t, &[s])? || submodule_member(s, &[t])?)
}

/// First element of the bounded stream on which the C-pair identity fails;
/// a returned witness proves the pair is not a C-pair.
pub fn cpair_falsify(
    ctx: &FieldCtx,
    s: &Functional,
    t: &Functional,
    budget: &SearchBudget,
) -> Result<Option<BivRat>> {
    if s.ell != t.ell || s.level != t.level {
        return Err(crate::error::Error::LevelMismatch(s.level, t.level));
    }
    let cl = &ctx.closure;
    let pool = ctx.default_pool();
    for (x, _) in ElementStream::new(cl, &pool, budget.clone()) {
        let omx = x.one_minus(cl);
        if omx.is_zero() {
            continue;
        }
        let s_x = s.eval(ctx, &x)?;
        let s_omx = s.eval(ctx, &omx)?;
        let t_x = t.eval(ctx, &x)?;
        let t_omx = t.eval(ctx, &omx)?;
        if s_x.mul(&t_omx)? != s_omx.mul(&t_x)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// Symmetric verdict cache plus budget. The reported verdict is
/// deterministic: certificates come in registry order, witnesses in
/// enumeration order, independent of thread interleaving.
pub struct CPairEngine {
    pub budget: SearchBudget,
    cache: RwLock<BTreeMap<(Functional, Functional), CVerdict>>,
}

impl CPairEngine {
    pub fn new(budget: SearchBudget) -> Self {
        CPairEngine { budget, cache: RwLock::new(BTreeMap::new()) }
    }

    /// Certify, then falsify, then unknown; cached symmetrically.
    pub fn cpair(&self, ctx: &FieldCtx, s: &Functional, t: &Functional) -> Result<CVerdict> {
        let key = if s <= t {
            (s.clone(), t.clone())
        } else {
            (t.clone(), s.clone())
        };
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(v.clone());
        }
        let verdict = self.compute(ctx, &key.0, &key.1)?;
        self.cache
            .write()
            .unwrap()
            .entry(key)
            .or_insert_with(|| verdict.clone());
        Ok(verdict)
    }

    fn compute(&self, ctx: &FieldCtx, s: &Functional, t: &Functional) -> Result<CVerdict> {
        if let Some(flag) = cpair_certify(ctx, s, t)? {
            return Ok(CVerdict::Yes(YesCert::Flag(flag)));
        }
        if proportional(s, t)? {
            return Ok(CVerdict::Yes(YesCert::Proportional));
        }
        if let Some(x) = cpair_falsify(ctx, s, t, &self.budget)? {
            return Ok(CVerdict::No(Box::new(x)));
        }
        Ok(CVerdict::Unknown)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcfield::{parse_poly, FieldKind};
    use crate::valuations::Stage;

    struct S {
        ctx: FieldCtx,
        f_u: FlagId,
        f_u0: FlagId,
        f_u1: FlagId,
    }

    fn setup() -> S {
        let ctx = FieldCtx::new(5, 2, FieldKind::Bivariate).unwrap();
        let cl = &ctx.closure;
        let cu = ctx.register_curve("u", &parse_poly(cl, "u").unwrap(), false).unwrap();
        let f_u = ctx.register_flag(&[Stage::Divisor(cu)]).unwrap();
        let f_u0 = ctx
            .register_flag(&[Stage::Divisor(cu), Stage::Point(cl.zero())])
            .unwrap();
        let f_u1 = ctx
            .register_flag(&[Stage::Divisor(cu), Stage::Point(cl.from_prime(1))])
            .unwrap();
        S { ctx, f_u, f_u0, f_u1 }
    }

    fn setup_kt() -> (FieldCtx, FlagId, FlagId) {
        let ctx = FieldCtx::new(5, 2, FieldKind::Univariate).unwrap();
        let cl = &ctx.closure;
        let c0 = ctx.register_curve("t", &parse_poly(cl, "t").unwrap(), false).unwrap();
        let c1 = ctx
            .register_curve("t1", &parse_poly(cl, "t - 1").unwrap(), false)
            .unwrap();
        let p0 = ctx.register_flag(&[Stage::Divisor(c0)]).unwrap();
        let p1 = ctx.register_flag(&[Stage::Divisor(c1)]).unwrap();
        (ctx, p0, p1)
    }

    #[test]
    fn kt_point_pair_is_falsified_by_t() {
        let (ctx, p0, p1) = setup_kt();
        let s = Functional::coordinate(&ctx, 2, 1, p0, 1).unwrap();
        let t = Functional::coordinate(&ctx, 2, 1, p1, 1).unwrap();
        let w = cpair_falsify(&ctx, &s, &t, &SearchBudget::default())
            .unwrap()
            .unwrap();
        let cl = &ctx.closure;
        assert!(w.eq_rat(cl, &BivRat::var_t(cl)), "got witness {}", w);
        // No certificate exists for this pair.
        assert!(cpair_certify(&ctx, &s, &t).unwrap().is_none());
    }

    #[test]
    fn self_pair_and_zero_pair_are_yes() {
        let (ctx, p0, _) = setup_kt();
        let s = Functional::coordinate(&ctx, 2, 1, p0, 1).unwrap();
        let engine = CPairEngine::new(SearchBudget::default());
        assert!(engine.cpair(&ctx, &s, &s).unwrap().is_yes());
        let zero = Functional::zero(2, 1);
        assert!(engine.cpair(&ctx, &s, &zero).unwrap().is_yes());
        // No witness at any budget: the falsifier comes up empty.
        assert!(cpair_falsify(&ctx, &s, &s, &SearchBudget::default()).unwrap().is_none());
        assert!(cpair_falsify(&ctx, &s, &zero, &SearchBudget::default()).unwrap().is_none());
    }

    #[test]
    fn flag_certificates() {
        let s = setup();
        let ord_u = Functional::coordinate(&s.ctx, 2, 1, s.f_u, 1).unwrap();
        let a = Functional::coordinate(&s.ctx, 2, 1, s.f_u0, 2).unwrap();
        let b = Functional::coordinate(&s.ctx, 2, 1, s.f_u1, 2).unwrap();
        // (ord_u, a) is certified by the divisorial stage.
        assert_eq!(cpair_certify(&s.ctx, &ord_u, &a).unwrap(), Some(s.f_u));
        // (a, b) has no certificate and a witness x = t.
        assert!(cpair_certify(&s.ctx, &a, &b).unwrap().is_none());
        let w = cpair_falsify(&s.ctx, &a, &b, &SearchBudget::default())
            .unwrap()
            .unwrap();
        let cl = &s.ctx.closure;
        assert!(w.eq_rat(cl, &BivRat::var_t(cl)), "got witness {}", w);
    }

    #[test]
    fn soundness_disjointness_on_small_sweep() {
        let s = setup();
        let fns = [
            Functional::zero(2, 1),
            Functional::coordinate(&s.ctx, 2, 1, s.f_u, 1).unwrap(),
            Functional::coordinate(&s.ctx, 2, 1, s.f_u0, 2).unwrap(),
            Functional::coordinate(&s.ctx, 2, 1, s.f_u1, 2).unwrap(),
        ];
        for a in &fns {
            for b in &fns {
                let cert = cpair_certify(&s.ctx, a, b).unwrap();
                let wit = cpair_falsify(&s.ctx, a, b, &SearchBudget::default()).unwrap();
                assert!(
                    cert.is_none() || wit.is_none(),
                    "certifier and falsifier both fired on {} / {}",
                    a,
                    b
                );
            }
        }
    }

    #[test]
    fn verdict_symmetry_and_scalar_stability() {
        let s = setup();
        let engine = CPairEngine::new(SearchBudget::default());
        let ord_u = Functional::coordinate(&s.ctx, 2, 1, s.f_u, 1).unwrap();
        let a = Functional::coordinate(&s.ctx, 2, 1, s.f_u0, 2).unwrap();
        let b = Functional::coordinate(&s.ctx, 2, 1, s.f_u1, 2).unwrap();
        for (x, y) in [(&ord_u, &a), (&a, &b), (&ord_u, &b)] {
            let v1 = engine.cpair(&s.ctx, x, y).unwrap();
            let v2 = engine.cpair(&s.ctx, y, x).unwrap();
            assert_eq!(v1, v2);
        }
        // Certified pairs stay certified under scaling.
        for sa in 0..4i64 {
            for sb in 0..4i64 {
                let xs = ord_u.scale(sa);
                let ys = a.scale(sb);
                assert!(
                    engine.cpair(&s.ctx, &xs, &ys).unwrap().is_yes(),
                    "scaled ({}, {})",
                    sa,
                    sb
                );
            }
        }
    }

    #[test]
    fn budget_monotonicity() {
        let s = setup();
        let small = CPairEngine::new(SearchBudget { max_factors: 1, max_exp: 1, max_consts: 4 });
        let big = CPairEngine::new(SearchBudget::default());
        let fns = [
            Functional::coordinate(&s.ctx, 2, 1, s.f_u, 1).unwrap(),
            Functional::coordinate(&s.ctx, 2, 1, s.f_u0, 2).unwrap(),
            Functional::coordinate(&s.ctx, 2, 1, s.f_u1, 2).unwrap(),
        ];
        for a in &fns {
            for b in &fns {
                let v_small = small.cpair(&s.ctx, a, b).unwrap();
                let v_big = big.cpair(&s.ctx, a, b).unwrap();
                match v_small {
                    CVerdict::Yes(_) => assert!(v_big.is_yes()),
                    CVerdict::No(_) => assert!(v_big.is_no()),
                    CVerdict::Unknown => {}
                }
            }
        }
    }

    #[test]
    fn mixed_levels_error() {
        let (ctx, p0, p1) = setup_kt();
        let s = Functional::coordinate(&ctx, 2, 1, p0, 1).unwrap();
        let t = Functional::coordinate(&ctx, 2, 2, p1, 1).unwrap();
        assert!(cpair_falsify(&ctx, &s, &t, &SearchBudget::default()).is_err());
        assert!(cpair_certify(&ctx, &s, &t).is_err());
    }
}
