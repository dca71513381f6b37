//! Flag valuations with lexicographic value groups Z^r: evaluation,
//! unit/principal-unit membership, coarsening, comparability, the convex
//! subgroup lattice of Z^r lex, l-rank, and quasi-divisorial
//! classification.
//!
//! A flag is a divisor stage followed by at most one point stage; the value
//! group is Z^rank ordered lexicographically with the divisor coordinate
//! dominant, and every stage is trivial on the constants.

use crate::coeff::Lambda;
use crate::context::{CurveId, FieldCtx};
use crate::error::{Error, Result};
use crate::funcfield::{curve_order, ord_at_point, restrict_to_line, BivRat};
use crate::groundfield::GFElem;
use std::fmt;

/// Element of Z^r with the lexicographic order (first coordinate dominant).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LexVector(pub Vec<i64>);

impl LexVector {
    pub fn rank(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn is_positive(&self) -> bool {
        match self.0.iter().find(|&&a| a != 0) {
            Some(&a) => a > 0,
            None => false,
        }
    }

    pub fn add(&self, other: &LexVector) -> LexVector {
        debug_assert_eq!(self.0.len(), other.0.len());
        LexVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for LexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Divisor(CurveId),
    Point(GFElem),
}

/// A flag valuation; rank 0 is the trivial valuation marker.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FlagValuation {
    pub stages: Vec<Stage>,
}

impl FlagValuation {
    pub fn trivial() -> Self {
        FlagValuation { stages: vec![] }
    }

    pub fn rank(&self) -> u32 {
        self.stages.len() as u32
    }

    pub fn is_trivial(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn describe(&self, ctx: &FieldCtx) -> String {
        if self.is_trivial() {
            return "trivial".to_string();
        }
        let mut parts = Vec::new();
        for s in &self.stages {
            match s {
                Stage::Divisor(c) => parts.push(format!("curve \"{}\"", ctx.curve(*c).poly)),
                Stage::Point(c) => parts.push(format!("point \"{}\"", c)),
            }
        }
        format!("[{}]", parts.join(", "))
    }
}

/// Identifier for the convex subgroup 0^j x Z^(r-j) of Z^r lex; j = r gives
/// the zero subgroup, j = 0 the whole group. These r+1 subgroups are the
/// entire convex lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvexIndex(pub u32);

/// Value of x under the flag; additive in x, zero exactly on units.
pub fn flag_value(ctx: &FieldCtx, v: &FlagValuation, x: &BivRat) -> Result<LexVector> {
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    let cl = &ctx.closure;
    let mut coords = Vec::with_capacity(v.stages.len());
    if v.is_trivial() {
        return Ok(LexVector(coords));
    }
    let Stage::Divisor(cid) = &v.stages[0] else {
        return Err(Error::BadFlag("stage 1 must be a divisor".to_string()));
    };
    let curve = ctx.curve(*cid);
    let a1 = curve_order(cl, &curve.poly, x)?;
    coords.push(a1);
    if let Some(Stage::Point(c)) = v.stages.get(1) {
        let line = curve
            .line
            .as_ref()
            .ok_or(Error::ResidueCarrier)?
            .clone();
        let f = BivRat::from_poly(curve.poly.clone());
        let y = x.mul(cl, &f.pow(cl, -a1)?);
        let r = restrict_to_line(cl, &line, &y)?;
        coords.push(ord_at_point(cl, &r, c)?);
    }
    Ok(LexVector(coords))
}

pub fn is_unit(ctx: &FieldCtx, v: &FlagValuation, x: &BivRat) -> Result<bool> {
    Ok(flag_value(ctx, v, x)?.is_zero())
}

/// x lies in 1 + m_v; x = 1 qualifies since 0 is in the ideal.
pub fn is_principal_unit(ctx: &FieldCtx, v: &FlagValuation, x: &BivRat) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::ZeroElement);
    }
    let cl = &ctx.closure;
    let xm1 = x.sub(cl, &BivRat::one(cl));
    if xm1.is_zero() {
        return Ok(true);
    }
    Ok(flag_value(ctx, v, &xm1)?.is_positive())
}

/// Coarsening associated to the convex subgroup 0^j x Z^(r-j): keep the
/// first j stages. j = rank returns v itself, j = 0 the trivial valuation.
pub fn coarsen(v: &FlagValuation, c: ConvexIndex) -> Result<FlagValuation> {
    let j = c.0;
    if j > v.rank() {
        return Err(Error::ConvexIndexRange(j, v.rank()));
    }
    Ok(FlagValuation { stages: v.stages[..j as usize].to_vec() })
}

/// One flag's stage list is a prefix of the other's.
pub fn comparable(v: &FlagValuation, w: &FlagValuation) -> bool {
    let k = v.stages.len().min(w.stages.len());
    v.stages[..k] == w.stages[..k]
}

/// v is a stage-prefix of w (v coarsens w); equality included.
pub fn is_prefix_of(v: &FlagValuation, w: &FlagValuation) -> bool {
    v.stages.len() <= w.stages.len() && v.stages[..] == w.stages[..v.stages.len()]
}

/// Element with flag value e_i (1-based stage index): the stage-1
/// polynomial itself, or param - c for a point stage.
pub fn uniformizer(ctx: &FieldCtx, v: &FlagValuation, stage: u32) -> Result<BivRat> {
    if stage == 0 || stage > v.rank() {
        return Err(Error::ConvexIndexRange(stage, v.rank()));
    }
    let cl = &ctx.closure;
    match &v.stages[stage as usize - 1] {
        Stage::Divisor(cid) => Ok(BivRat::from_poly(ctx.curve(*cid).poly.clone())),
        Stage::Point(c) => {
            // The parameter of the stage-1 line, shifted by the point. For
            // u = a t + b lines the parameter is t; for t = c0 lines it is u.
            let Stage::Divisor(cid) = &v.stages[0] else {
                return Err(Error::BadFlag("stage 1 must be a divisor".to_string()));
            };
            let param = match ctx.curve(*cid).line {
                Some(crate::funcfield::LineParam::UOfT { .. }) => BivRat::var_t(cl),
                Some(crate::funcfield::LineParam::TConst { .. }) => BivRat::var_u(cl),
                None => return Err(Error::ResidueCarrier),
            };
            Ok(param.sub(cl, &BivRat::constant(cl, c.clone())))
        }
    }
}

/// Largest j' such that the convex subgroup 0^(r-j') x Z^(j') lies in the
/// kernel lattice H = {z : kappa_i(z) = 0 in the coefficient ring for all
/// i}; returned as the coarsening index j = r - j'.
pub fn max_convex_inside(rank: u32, kappas: &[Vec<Lambda>]) -> ConvexIndex {
    let r = rank as usize;
    let mut j_prime = 0usize;
    'outer: for k in (0..r).rev() {
        // Basis vector e_k must be killed by every kappa.
        for kappa in kappas {
            if !kappa[k].is_zero() {
                break 'outer;
            }
        }
        j_prime = r - k;
    }
    ConvexIndex((r - j_prime) as u32)
}

/// dim over Z/l of vK tensor Z/l; the rank of the flag.
pub fn ell_rank(v: &FlagValuation, _ell: u64) -> u32 {
    v.rank()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QdClass {
    QuasiDivisorial,
    AlmostRQuasiDivisorial(u32),
    Neither,
}

impl fmt::Display for QdClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QdClass::QuasiDivisorial => write!(f, "quasi-divisorial"),
            QdClass::AlmostRQuasiDivisorial(r) => write!(f, "almost-{}-quasi-divisorial", r),
            QdClass::Neither => write!(f, "neither"),
        }
    }
}

/// True when the convex subgroup 0^j x Z^(r-j) is l-divisible. Only the
/// zero subgroup is: every nonzero one contains a standard basis vector,
/// and e_k = l*z has no solution in the subgroup.
pub fn convex_subgroup_is_ell_divisible(rank: u32, j: u32, _ell: u64) -> bool {
    j >= rank
}

/// Classify a flag on a field of transcendence degree d. Flags over the
/// closed constants have vk = 0 and no transcendence defect, so the class
/// is determined by the rank once the convex-lattice condition is checked.
pub fn classify_quasi_divisorial(
    ctx: &FieldCtx,
    v: &FlagValuation,
    d: u32,
) -> Result<QdClass> {
    if d == 0 || d > 2 {
        return Err(Error::BadConfig(format!("transcendence degree {} out of range", d)));
    }
    let r = v.rank();
    if r > d {
        return Err(Error::AbhyankarViolation { rank: r, trdeg: d });
    }
    if r == 0 {
        return Ok(QdClass::Neither);
    }
    // No nontrivial l-divisible convex subgroup may exist in Z^r lex.
    for j in 0..r {
        if convex_subgroup_is_ell_divisible(r, j, ctx.ell) {
            return Err(Error::BadFlag(format!(
                "convex subgroup index {} of Z^{} is l-divisible",
                j, r
            )));
        }
    }
    if r == 1 {
        Ok(QdClass::QuasiDivisorial)
    } else {
        Ok(QdClass::AlmostRQuasiDivisorial(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcfield::{parse_poly, parse_rat, FieldKind};

    fn ctx_with_flags() -> (FieldCtx, FlagValuation, FlagValuation) {
        let ctx = FieldCtx::new(5, 2, FieldKind::Bivariate).unwrap();
        let cl = &ctx.closure;
        let cu = ctx
            .register_curve("u", &parse_poly(cl, "u").unwrap(), false)
            .unwrap();
        let f2 = ctx
            .register_flag(&[Stage::Divisor(cu), Stage::Point(cl.zero())])
            .unwrap();
        let f1 = ctx.register_flag(&[Stage::Divisor(cu)]).unwrap();
        let v1 = ctx.flag(f1);
        let v2 = ctx.flag(f2);
        (ctx, v1, v2)
    }

    #[test]
    fn flag_value_examples() {
        let (ctx, _f1, f2) = ctx_with_flags();
        let cl = &ctx.closure;
        // x = u t^2 -> (1, 2)
        let x = parse_rat(cl, "u*t^2").unwrap();
        assert_eq!(flag_value(&ctx, &f2, &x).unwrap(), LexVector(vec![1, 2]));
        // x = t - 1 -> (0, 0)
        let x = parse_rat(cl, "t - 1").unwrap();
        assert_eq!(flag_value(&ctx, &f2, &x).unwrap(), LexVector(vec![0, 0]));
        // x = (1 + u)/t -> (0, -1)
        let x = parse_rat(cl, "(1 + u)/t").unwrap();
        assert_eq!(flag_value(&ctx, &f2, &x).unwrap(), LexVector(vec![0, -1]));
        assert!(flag_value(&ctx, &f2, &BivRat::zero(cl)).is_err());
    }

    #[test]
    fn flag_value_additivity_random_pairs() {
        let (ctx, _f1, f2) = ctx_with_flags();
        let cl = &ctx.closure;
        let samples = [
            "u*t^2",
            "t - 1",
            "(1 + u)/t",
            "u",
            "t/(u + 1)",
            "(u + t)/(t - 2)",
            "u^2*t/(t - 1)",
        ];
        let rats: Vec<BivRat> = samples.iter().map(|s| parse_rat(cl, s).unwrap()).collect();
        for x in &rats {
            for y in &rats {
                let vx = flag_value(&ctx, &f2, x).unwrap();
                let vy = flag_value(&ctx, &f2, y).unwrap();
                let vxy = flag_value(&ctx, &f2, &x.mul(cl, y)).unwrap();
                assert_eq!(vxy, vx.add(&vy));
            }
        }
    }

    #[test]
    fn unit_and_principal_unit_examples() {
        let (ctx, _f1, f2) = ctx_with_flags();
        let cl = &ctx.closure;
        let one_plus_u = parse_rat(cl, "1 + u").unwrap();
        assert!(is_principal_unit(&ctx, &f2, &one_plus_u).unwrap());
        assert!(is_unit(&ctx, &f2, &one_plus_u).unwrap());
        // 1 + t is principal too: t has value (0, 1) > 0 lex.
        let one_plus_t = parse_rat(cl, "1 + t").unwrap();
        assert!(is_principal_unit(&ctx, &f2, &one_plus_t).unwrap());
        // A nonzero constant other than 1 is a unit but not principal.
        let two = parse_rat(cl, "2").unwrap();
        assert!(is_unit(&ctx, &f2, &two).unwrap());
        assert!(!is_principal_unit(&ctx, &f2, &two).unwrap());
        // u is neither.
        let u = parse_rat(cl, "u").unwrap();
        assert!(!is_unit(&ctx, &f2, &u).unwrap());
        assert!(!is_principal_unit(&ctx, &f2, &u).unwrap());
        // 1 itself is a principal unit.
        assert!(is_principal_unit(&ctx, &f2, &BivRat::one(cl)).unwrap());
    }

    #[test]
    fn principal_units_imply_units_sampled() {
        let (ctx, f1, f2) = ctx_with_flags();
        let cl = &ctx.closure;
        for s in ["1 + u", "1 + t", "1 + u*t", "1 + u/(t - 1)", "2", "t", "u/t"] {
            let x = parse_rat(cl, s).unwrap();
            for v in [&f1, &f2] {
                if is_principal_unit(&ctx, v, &x).unwrap() {
                    assert!(is_unit(&ctx, v, &x).unwrap(), "{} under {:?}", s, v);
                }
            }
        }
    }

    #[test]
    fn coarsening_behaviour() {
        let (ctx, f1, f2) = ctx_with_flags();
        assert_eq!(coarsen(&f2, ConvexIndex(1)).unwrap(), f1);
        assert_eq!(coarsen(&f2, ConvexIndex(2)).unwrap(), f2);
        assert!(coarsen(&f2, ConvexIndex(0)).unwrap().is_trivial());
        assert!(coarsen(&f2, ConvexIndex(3)).is_err());
        // Units of the finer valuation are units of the coarser.
        let cl = &ctx.closure;
        for s in ["t", "t - 1", "1 + u*t", "(t + 1)/(t - 2)"] {
            let x = crate::funcfield::parse_rat(cl, s).unwrap();
            if is_unit(&ctx, &f2, &x).unwrap() {
                assert!(is_unit(&ctx, &f1, &x).unwrap());
            }
            // And principal units ascend to refinements.
            if is_principal_unit(&ctx, &f1, &x).unwrap() {
                assert!(is_principal_unit(&ctx, &f2, &x).unwrap());
            }
        }
    }

    #[test]
    fn comparability() {
        let (ctx, f1, f2) = ctx_with_flags();
        let cl = &ctx.closure;
        assert!(comparable(&f1, &f2));
        assert!(comparable(&f2, &f1));
        assert!(comparable(&f1, &f1));
        let ct = ctx
            .register_curve("t", &parse_poly(cl, "t").unwrap(), false)
            .unwrap();
        let ft = ctx.flag(ctx.register_flag(&[Stage::Divisor(ct)]).unwrap());
        assert!(!comparable(&f1, &ft));
        // Diverging stage-2 points are incomparable.
        let cu = 0usize;
        let f2b = ctx
            .flag(ctx
                .register_flag(&[Stage::Divisor(cu), Stage::Point(cl.from_prime(1))])
                .unwrap());
        assert!(!comparable(&f2, &f2b));
    }

    #[test]
    fn convex_lattice_examples() {
        let lam = |v: i64| Lambda::new(2, 1, v).unwrap();
        // kappa = second coordinate mod 2: nothing convex inside, j = 2.
        assert_eq!(max_convex_inside(2, &[vec![lam(0), lam(1)]]), ConvexIndex(2));
        // kappa = first coordinate mod 2: 0 x Z inside, j = 1.
        assert_eq!(max_convex_inside(2, &[vec![lam(1), lam(0)]]), ConvexIndex(1));
        // No constraints: everything inside, j = 0.
        assert_eq!(max_convex_inside(2, &[]), ConvexIndex(0));
        // Census: Z^r lex has exactly r + 1 convex subgroups, indexed 0..=r.
        for r in 1..=2u32 {
            let mut seen = vec![];
            for j in 0..=r {
                seen.push(ConvexIndex(j));
            }
            assert_eq!(seen.len() as u32, r + 1);
        }
    }

    #[test]
    fn classification() {
        let (ctx, f1, f2) = ctx_with_flags();
        assert_eq!(
            classify_quasi_divisorial(&ctx, &f1, 2).unwrap(),
            QdClass::QuasiDivisorial
        );
        assert_eq!(
            classify_quasi_divisorial(&ctx, &f2, 2).unwrap(),
            QdClass::AlmostRQuasiDivisorial(2)
        );
        assert_eq!(
            classify_quasi_divisorial(&ctx, &FlagValuation::trivial(), 2).unwrap(),
            QdClass::Neither
        );
        assert!(matches!(
            classify_quasi_divisorial(&ctx, &f2, 1),
            Err(Error::AbhyankarViolation { .. })
        ));
    }

    #[test]
    fn ell_rank_values() {
        let (_, f1, f2) = ctx_with_flags();
        assert_eq!(ell_rank(&f1, 2), 1);
        assert_eq!(ell_rank(&f2, 2), 2);
        assert_eq!(ell_rank(&FlagValuation::trivial(), 2), 0);
    }

    #[test]
    fn uniformizers_hit_basis_vectors() {
        let (ctx, f1, f2) = ctx_with_flags();
        let pi1 = uniformizer(&ctx, &f2, 1).unwrap();
        let pi2 = uniformizer(&ctx, &f2, 2).unwrap();
        assert_eq!(flag_value(&ctx, &f2, &pi1).unwrap(), LexVector(vec![1, 0]));
        assert_eq!(flag_value(&ctx, &f2, &pi2).unwrap(), LexVector(vec![0, 1]));
        assert_eq!(flag_value(&ctx, &f1, &pi1).unwrap(), LexVector(vec![1]));
        assert!(uniformizer(&ctx, &f2, 3).is_err());
    }
}
