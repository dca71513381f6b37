//! Deterministic enumeration of bounded test elements for falsifier
//! searches: scaled products of pool irreducibles with small signed
//! exponents, graded by total absolute exponent and ordered
//! lexicographically within a grade. The stream never yields 0 or 1, and
//! two runs over the same budget yield identical sequences.

use super::poly::BivPoly;
use super::rat::BivRat;
use crate::groundfield::Closure;

/// Search budget shared by the falsifier and the membership probes.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub max_factors: usize,
    pub max_exp: i64,
    pub max_consts: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_factors: 2, max_exp: 2, max_consts: 200 }
    }
}

impl SearchBudget {
    pub fn preset(name: &str) -> Option<SearchBudget> {
        match name {
            "default" => Some(SearchBudget::default()),
            "shallow" => Some(SearchBudget { max_factors: 1, max_exp: 1, max_consts: 50 }),
            "deep" => Some(SearchBudget { max_factors: 3, max_exp: 3, max_consts: 200 }),
            _ => None,
        }
    }
}

/// Exponents in preference order: positive ascending, then negative.
fn exponent_order(max_exp: i64) -> Vec<i64> {
    let mut v: Vec<i64> = (1..=max_exp).collect();
    v.extend((1..=max_exp).map(|e| -e));
    v
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        // Advance the ascending index tuple.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] + 1 <= n - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All exponent tuples over the preference order with the given total |e|.
fn exponent_tuples(k: usize, grade: i64, order: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; k];
    fn rec(
        cur: &mut Vec<i64>,
        pos: usize,
        remaining: i64,
        order: &[i64],
        out: &mut Vec<Vec<i64>>,
    ) {
        if pos == cur.len() {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let slots_after = (cur.len() - pos - 1) as i64;
        for &e in order {
            let used = e.abs();
            if used > remaining - slots_after {
                continue;
            }
            cur[pos] = e;
            rec(cur, pos + 1, remaining - used, order, out);
        }
    }
    rec(&mut cur, 0, grade, order, &mut out);
    out
}

/// The deterministic element stream for a given pool. Returns pairs of
/// (element, grade). The pool is deduplicated by monic normal form,
/// preserving first occurrence.
pub struct ElementStream<'a> {
    cl: &'a Closure,
    pool: Vec<BivPoly>,
    budget: SearchBudget,
    grade: i64,
    buffer: std::collections::VecDeque<(BivRat, u32)>,
}

pub fn dedup_pool(cl: &Closure, pool: &[BivPoly]) -> Vec<BivPoly> {
    let mut seen: Vec<BivPoly> = Vec::new();
    for f in pool {
        let m = f.monic(cl);
        if !seen.contains(&m) && !m.is_constant() {
            seen.push(m);
        }
    }
    seen
}

impl<'a> ElementStream<'a> {
    pub fn new(cl: &'a Closure, pool: &[BivPoly], budget: SearchBudget) -> Self {
        ElementStream {
            cl,
            pool: dedup_pool(cl, pool),
            budget,
            grade: 0,
            buffer: Default::default(),
        }
    }

    fn max_grade(&self) -> i64 {
        self.budget.max_exp * self.budget.max_factors as i64
    }

    fn fill_grade(&mut self, grade: i64) {
        let cl = self.cl;
        let p = cl.p();
        let order = exponent_order(self.budget.max_exp);
        let n_consts = ((p - 1) as usize).min(self.budget.max_consts);
        for k in 1..=self.budget.max_factors.min(self.pool.len()) {
            for combo in combinations(self.pool.len(), k) {
                for exps in exponent_tuples(k, grade, &order) {
                    // Base product for constant 1.
                    let mut base = BivRat::one(cl);
                    for (slot, &pi) in combo.iter().enumerate() {
                        let f = BivRat::from_poly(self.pool[pi].clone());
                        base = base.mul(
                            cl,
                            &f.pow(cl, exps[slot]).expect("pool entries are nonzero"),
                        );
                    }
                    for c in 1..=n_consts as u64 {
                        let scaled = if c == 1 {
                            base.clone()
                        } else {
                            base.mul(cl, &BivRat::constant(cl, cl.from_prime(c as i64)))
                        };
                        self.buffer.push_back((scaled, grade as u32));
                    }
                }
            }
        }
    }
}

impl<'a> Iterator for ElementStream<'a> {
    type Item = (BivRat, u32);

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(x) = self.buffer.pop_front() {
                return Some(x);
            }
            if self.grade >= self.max_grade() {
                return None;
            }
            self.grade += 1;
            let g = self.grade;
            self.fill_grade(g);
        }
    }
}
