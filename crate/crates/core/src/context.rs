//! The ambient field under study plus its append-only registries: the
//! closure of the prime field, registered prime divisors (curves), and
//! registered flag valuations. Registration validates configuration
//! invariants once; readers share the tables freely.

use crate::error::{Error, Result};
use crate::funcfield::{verify_irreducible_deg2, BivPoly, FieldKind, LineParam, SearchBudget};
use crate::groundfield::Closure;
use crate::valuations::{FlagValuation, Stage};
use std::sync::RwLock;

pub type CurveId = usize;
pub type FlagId = usize;

#[derive(Clone, Debug)]
pub struct Curve {
    pub name: String,
    pub poly: BivPoly,
    pub line: Option<LineParam>,
    pub asserted: bool,
}

pub struct FieldCtx {
    pub ell: u64,
    pub kind: FieldKind,
    pub closure: Closure,
    curves: RwLock<Vec<Curve>>,
    flags: RwLock<Vec<FlagValuation>>,
}

impl FieldCtx {
    /// p and ell must be distinct primes so that the roots of unity the
    /// theory assumes all live in the constants.
    pub fn new(p: u64, ell: u64, kind: FieldKind) -> Result<Self> {
        let closure = Closure::new(p)?;
        if Closure::new(ell).is_err() {
            return Err(Error::BadConfig(format!("ell = {} is not prime", ell)));
        }
        if p == ell {
            return Err(Error::BadConfig(format!(
                "p = ell = {} would kill the required roots of unity",
                p
            )));
        }
        Ok(FieldCtx {
            ell,
            kind,
            closure,
            curves: RwLock::new(Vec::new()),
            flags: RwLock::new(Vec::new()),
        })
    }

    pub fn p(&self) -> u64 {
        self.closure.p()
    }

    /// Register an asserted-absolutely-irreducible prime divisor. Total
    /// degree up to 2 is verified outright; higher degrees need
    /// `asserted = true`. Duplicate polynomials return the existing id.
    pub fn register_curve(&self, name: &str, poly: &BivPoly, asserted: bool) -> Result<CurveId> {
        let cl = &self.closure;
        if poly.is_constant() {
            return Err(Error::BadCurve("constant polynomial".to_string()));
        }
        if self.kind == FieldKind::Univariate {
            if !poly.is_univariate_t() {
                return Err(Error::BadCurve(
                    "the univariate field has no u coordinate".to_string(),
                ));
            }
            if poly.deg_t() > 1 {
                return Err(Error::BadCurve(
                    "higher-degree points split over the closed constants; use a linear t - c"
                        .to_string(),
                ));
            }
        } else if poly.total_degree() <= 2 {
            verify_irreducible_deg2(cl, poly)?;
        } else if !asserted {
            return Err(Error::BadCurve(format!(
                "degree {} needs an explicit irreducibility assertion",
                poly.total_degree()
            )));
        }
        let monic = poly.monic(cl);
        let mut curves = self.curves.write().unwrap();
        if let Some(id) = curves.iter().position(|c| c.poly == monic) {
            return Ok(id);
        }
        let line = LineParam::from_poly(cl, &monic);
        curves.push(Curve { name: name.to_string(), poly: monic, line, asserted });
        Ok(curves.len() - 1)
    }

    pub fn curve(&self, id: CurveId) -> Curve {
        self.curves.read().unwrap()[id].clone()
    }

    pub fn curve_count(&self) -> usize {
        self.curves.read().unwrap().len()
    }

    pub fn curve_polys(&self) -> Vec<BivPoly> {
        self.curves.read().unwrap().iter().map(|c| c.poly.clone()).collect()
    }

    /// Register a flag valuation. Stage 1 is a registered divisor; a second
    /// stage requires the carrier to be a parametrized line and consists of
    /// a point on it (a parameter value). Ranks beyond the transcendence
    /// degree of the field cannot be realized by flags and are rejected.
    pub fn register_flag(&self, stages: &[Stage]) -> Result<FlagId> {
        if stages.is_empty() {
            return Err(Error::BadFlag(
                "the trivial valuation is a value, not a registry entry".to_string(),
            ));
        }
        let max_rank = self.kind.trdeg() as usize;
        if stages.len() > max_rank {
            return Err(Error::BadFlag(format!(
                "rank {} exceeds the field's transcendence degree {}",
                stages.len(),
                max_rank
            )));
        }
        match &stages[0] {
            Stage::Divisor(cid) => {
                if *cid >= self.curve_count() {
                    return Err(Error::BadFlag("unregistered stage-1 curve".to_string()));
                }
                if stages.len() > 1 && self.curve(*cid).line.is_none() {
                    return Err(Error::BadFlag(
                        "stage 1 of a rank-2 flag must be a parametrized line".to_string(),
                    ));
                }
            }
            Stage::Point(_) => {
                return Err(Error::BadFlag("stage 1 must be a divisor".to_string()));
            }
        }
        for s in &stages[1..] {
            if !matches!(s, Stage::Point(_)) {
                return Err(Error::BadFlag(
                    "stages beyond the first are points of the previous residue line"
                        .to_string(),
                ));
            }
        }
        let flag = FlagValuation { stages: stages.to_vec() };
        let mut flags = self.flags.write().unwrap();
        if let Some(id) = flags.iter().position(|f| *f == flag) {
            return Ok(id);
        }
        flags.push(flag);
        Ok(flags.len() - 1)
    }

    pub fn flag(&self, id: FlagId) -> FlagValuation {
        self.flags.read().unwrap()[id].clone()
    }

    pub fn flag_count(&self) -> usize {
        self.flags.read().unwrap().len()
    }

    pub fn flags_snapshot(&self) -> Vec<FlagValuation> {
        self.flags.read().unwrap().clone()
    }

    /// Registered id of a flag value, when it is registered.
    pub fn find_flag(&self, flag: &FlagValuation) -> Option<FlagId> {
        self.flags.read().unwrap().iter().position(|f| f == flag)
    }

    /// Canonical key for the i-th coordinate of a registered flag: the
    /// coordinate only depends on the first i stages, so it is keyed to the
    /// coarsest (then lowest-id) registered flag sharing that prefix. This
    /// makes functional equality decidable by term-map equality.
    pub fn canonical_key(&self, flag: FlagId, coord: u32) -> Result<(FlagId, u32)> {
        let flags = self.flags.read().unwrap();
        let f = flags.get(flag).ok_or(Error::UnknownFlag(flag))?;
        let i = coord as usize;
        if i == 0 || i > f.stages.len() {
            return Err(Error::CoordOutOfRange {
                flag,
                coord,
                rank: f.stages.len() as u32,
            });
        }
        let prefix = &f.stages[..i];
        let mut best: Option<(usize, FlagId)> = None;
        for (id, cand) in flags.iter().enumerate() {
            if cand.stages.len() >= i && &cand.stages[..i] == prefix {
                let key = (cand.stages.len(), id);
                if best.map(|b| key < b).unwrap_or(true) {
                    best = Some(key);
                }
            }
        }
        let (_, id) = best.expect("the flag itself always matches");
        Ok((id, coord))
    }

    /// Default falsifier pool: registered curve polynomials plus the stock
    /// coordinate elements for the field kind.
    pub fn default_pool(&self) -> Vec<BivPoly> {
        let cl = &self.closure;
        let mut pool = self.curve_polys();
        let t = BivPoly::var_t(cl);
        let one = BivPoly::one(cl);
        match self.kind {
            FieldKind::Univariate => {
                pool.push(t.clone());
                pool.push(t.sub(cl, &one));
            }
            FieldKind::Bivariate => {
                let u = BivPoly::var_u(cl);
                pool.push(t.clone());
                pool.push(u.clone());
                pool.push(t.sub(cl, &one));
                pool.push(u.sub(cl, &one));
                pool.push(t.sub(cl, &u));
            }
        }
        pool
    }

    pub fn stream_budget(&self) -> SearchBudget {
        SearchBudget::default()
    }
}
