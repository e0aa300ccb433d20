//! Greedy 0-restrictions and an exact hitting-set oracle.
//!
//! A crucial term is a monomial of degree at least 3. The greedy engine
//! repeatedly sets to 0 the alive variable contained in the most crucial
//! terms (lowest index on ties). Occurrence counts are kept in buckets and
//! updated only for variables that shared a deleted term, so a full run
//! costs time proportional to the total size of the polynomial.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::anf::{monomial_cmp, Anf, Monomial};
use crate::error::{Error, Result};
use crate::f2::BitVec;

/// Default node budget for [`exhaustive_hitting_set`].
pub const DEFAULT_NODE_LIMIT: u64 = 50_000_000;

#[inline]
fn is_crucial(m: &Monomial) -> bool {
    m.weight() >= 3
}

/// `⌈3m / n_alive⌉`, the occurrence count some alive variable must reach.
pub fn greedy_lower_bound(crucial: usize, alive: usize) -> usize {
    if alive == 0 {
        0
    } else {
        (3 * crucial).div_ceil(alive)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopRule {
    UntilNoCrucial,
    UntilCrucialAtMostThirdOfAlive,
    UntilSteps(usize),
}

/// One greedy step: the variable zeroed (1-based), the crucial count before
/// the step, and the number of crucial terms the variable was in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub var: usize,
    pub crucial_before: usize,
    pub occ: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RestrictionTrace {
    pub steps: Vec<TraceStep>,
}

impl RestrictionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Zeroed variables (1-based) in order.
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|s| s.var)
    }

    /// Checks, for a trace recorded from a function on `n` variables with
    /// `initial_crucial` crucial terms, that every step met `⌈3m/n_a⌉` and
    /// every prefix of `k` steps left at most `T((n-k)/n)^3` crucial terms.
    /// `final_crucial` is the count after the last step.
    pub fn check_bounds(&self, n: usize, initial_crucial: usize, final_crucial: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        let after = self.steps.iter().skip(1).map(|s| s.crucial_before).chain(std::iter::once(final_crucial));
        for (k, (step, after)) in self.steps.iter().zip(after).enumerate() {
            if !seen.insert(step.var) {
                return Err(Error::Inconsistent(format!("variable x{} zeroed twice", step.var)));
            }
            let alive = n - k;
            if step.occ < greedy_lower_bound(step.crucial_before, alive) {
                return Err(Error::Inconsistent(format!(
                    "step {}: occurrence {} below ceil(3*{}/{})",
                    k + 1,
                    step.occ,
                    step.crucial_before,
                    alive
                )));
            }
            if !decay_bound_holds(initial_crucial, n, k + 1, after) {
                return Err(Error::Inconsistent(format!(
                    "after {} steps {} crucial terms exceed {}*(({}-{})/{})^3",
                    k + 1,
                    after,
                    initial_crucial,
                    n,
                    k + 1,
                    n
                )));
            }
        }
        Ok(())
    }
}

/// `remaining <= T((n-k)/n)^3`, evaluated in exact integer arithmetic.
pub fn decay_bound_holds(initial: usize, n: usize, k: usize, remaining: usize) -> bool {
    if n == 0 {
        return remaining <= initial;
    }
    let lhs = remaining as u128 * (n as u128).pow(3);
    let rhs = initial as u128 * ((n - k.min(n)) as u128).pow(3);
    lhs <= rhs
}

/// Working state of the greedy engine over a fixed polynomial.
#[derive(Clone, Debug)]
pub struct RestrictionState {
    num_vars: usize,
    terms: Vec<Monomial>,
    term_alive: Vec<bool>,
    /// Term ids containing each variable.
    var_terms: Vec<Vec<u32>>,
    occ: Vec<usize>,
    /// `buckets[c]` holds the alive variables with occurrence count `c`.
    buckets: Vec<BTreeSet<usize>>,
    max_occ: usize,
    alive: BitVec,
    alive_count: usize,
    crucial: usize,
    trace: RestrictionTrace,
}

impl RestrictionState {
    pub fn new(f: &Anf) -> Self {
        let n = f.num_vars();
        let terms = f.terms().to_vec();
        let mut var_terms = vec![Vec::new(); n];
        let mut occ = vec![0usize; n];
        let mut crucial = 0;
        for (id, t) in terms.iter().enumerate() {
            let c = is_crucial(t);
            crucial += c as usize;
            for v in t.iter_ones() {
                var_terms[v].push(id as u32);
                occ[v] += c as usize;
            }
        }
        let max_occ = occ.iter().copied().max().unwrap_or(0);
        let mut buckets = vec![BTreeSet::new(); max_occ + 1];
        for (v, &c) in occ.iter().enumerate() {
            buckets[c].insert(v);
        }
        Self {
            num_vars: n,
            term_alive: vec![true; terms.len()],
            terms,
            var_terms,
            occ,
            buckets,
            max_occ,
            alive: BitVec::ones(n),
            alive_count: n,
            crucial,
            trace: RestrictionTrace::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// The restricted function, still indexed over all `n` variables.
    pub fn current(&self) -> Anf {
        let terms = self.terms.iter().zip(&self.term_alive).filter(|(_, &a)| a).map(|(t, _)| t.clone()).collect();
        Anf::from_sorted_unchecked(self.num_vars, terms)
    }

    /// Alive variables as a 0-based mask.
    pub fn alive(&self) -> &BitVec {
        &self.alive
    }

    /// Alive variables, 0-based, increasing.
    pub fn alive_indices(&self) -> Vec<usize> {
        self.alive.iter_ones().collect()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn crucial_count(&self) -> usize {
        self.crucial
    }

    pub fn trace(&self) -> &RestrictionTrace {
        &self.trace
    }

    /// Crucial-term occurrences of `x_i` (1-based); 0 once `x_i` is dead.
    pub fn occurrence(&self, i: usize) -> usize {
        if self.alive.get(i - 1) {
            self.occ[i - 1]
        } else {
            0
        }
    }

    pub fn is_done(&self, rule: StopRule) -> bool {
        if self.crucial == 0 {
            return true;
        }
        match rule {
            StopRule::UntilNoCrucial => false,
            StopRule::UntilCrucialAtMostThirdOfAlive => 3 * self.crucial <= self.alive_count,
            StopRule::UntilSteps(k) => self.trace.len() >= k,
        }
    }

    /// Zeroes the alive variable in the most crucial terms.
    pub fn step(&mut self) -> Result<TraceStep> {
        if self.crucial == 0 {
            return Err(Error::NoCrucialTerms);
        }
        while self.buckets[self.max_occ].is_empty() {
            self.max_occ -= 1;
        }
        let v = *self.buckets[self.max_occ].first().expect("non-empty bucket");
        let record = TraceStep { var: v + 1, crucial_before: self.crucial, occ: self.occ[v] };
        self.kill(v);
        self.trace.steps.push(record);
        Ok(record)
    }

    fn kill(&mut self, v: usize) {
        self.buckets[self.occ[v]].remove(&v);
        self.alive.set(v, false);
        self.alive_count -= 1;
        for k in 0..self.var_terms[v].len() {
            let id = self.var_terms[v][k] as usize;
            if !self.term_alive[id] {
                continue;
            }
            self.term_alive[id] = false;
            if !is_crucial(&self.terms[id]) {
                continue;
            }
            self.crucial -= 1;
            for u in self.terms[id].iter_ones() {
                if u == v {
                    continue;
                }
                let c = self.occ[u];
                self.buckets[c].remove(&u);
                self.occ[u] = c - 1;
                self.buckets[c - 1].insert(u);
            }
        }
        self.occ[v] = 0;
    }

    pub fn run(&mut self, rule: StopRule) {
        while !self.is_done(rule) {
            self.step().expect("crucial terms remain");
        }
    }
}

/// Crucial-term occurrence count of each alive variable (1-based keys).
pub fn occurrence_counts(f: &Anf, alive: &BTreeSet<usize>) -> BTreeMap<usize, usize> {
    let mut counts: BTreeMap<usize, usize> = alive.iter().map(|&i| (i, 0)).collect();
    for t in f.terms().iter().filter(|t| is_crucial(t)) {
        for v in t.iter_ones() {
            if let Some(c) = counts.get_mut(&(v + 1)) {
                *c += 1;
            }
        }
    }
    counts
}

pub fn greedy_step(s: &RestrictionState) -> Result<RestrictionState> {
    let mut next = s.clone();
    next.step()?;
    Ok(next)
}

pub fn greedy_restrict(f: &Anf, rule: StopRule) -> RestrictionState {
    let mut s = RestrictionState::new(f);
    s.run(rule);
    s
}

/// Minimum set of variables (1-based, increasing) whose zeroing kills every
/// crucial term, or `None` when the optimum exceeds `budget`.
pub fn exhaustive_hitting_set(f: &Anf, budget: usize) -> Result<Option<Vec<usize>>> {
    exhaustive_hitting_set_with_limit(f, budget, DEFAULT_NODE_LIMIT)
}

pub fn exhaustive_hitting_set_with_limit(f: &Anf, budget: usize, node_limit: u64) -> Result<Option<Vec<usize>>> {
    let mut terms: Vec<Monomial> = f.terms().iter().filter(|t| is_crucial(t)).cloned().collect();
    // highest degree first, canonical order within a degree
    terms.sort_by(|a, b| b.weight().cmp(&a.weight()).then_with(|| monomial_cmp(a, b)));
    let n = f.num_vars();
    let mut search = HittingSearch { terms: &terms, best: None, bound: budget.saturating_add(1), nodes: 0, node_limit };
    let mut chosen = Vec::new();
    search.visit(&mut chosen, &mut BitVec::zeros(n), &BitVec::zeros(n))?;
    Ok(search.best.map(|mut s| {
        s.sort_unstable();
        s.into_iter().map(|v| v + 1).collect()
    }))
}

struct HittingSearch<'a> {
    terms: &'a [Monomial],
    best: Option<Vec<usize>>,
    /// Size a new solution must beat.
    bound: usize,
    nodes: u64,
    node_limit: u64,
}

impl HittingSearch<'_> {
    fn visit(&mut self, chosen: &mut Vec<usize>, chosen_mask: &mut BitVec, excluded: &BitVec) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_limit {
            return Err(Error::TooLarge(format!("hitting-set search exceeded {} nodes", self.node_limit)));
        }
        if chosen.len() >= self.bound {
            return Ok(());
        }
        // disjoint packing of open terms (excluded variables removed) bounds the rest
        let mut packed = BitVec::zeros(chosen_mask.len());
        let mut packing = 0usize;
        let mut branch: Option<&Monomial> = None;
        let allowed = complement(excluded);
        for t in self.terms {
            if t.intersects(chosen_mask) {
                continue;
            }
            if t.is_subset_of(excluded) {
                return Ok(());
            }
            if branch.is_none() {
                branch = Some(t);
            }
            let open = t.and(&allowed);
            if !open.intersects(&packed) {
                packed.xor_assign(&open);
                packing += 1;
            }
        }
        let Some(term) = branch else {
            self.bound = chosen.len();
            self.best = Some(chosen.clone());
            return Ok(());
        };
        if chosen.len() + packing >= self.bound {
            return Ok(());
        }
        let mut excl = excluded.clone();
        for v in term.iter_ones() {
            if excl.get(v) {
                continue;
            }
            chosen.push(v);
            chosen_mask.set(v, true);
            self.visit(chosen, chosen_mask, &excl)?;
            chosen_mask.set(v, false);
            chosen.pop();
            excl.set(v, true);
        }
        Ok(())
    }
}

fn complement(v: &BitVec) -> BitVec {
    v.xor(&BitVec::ones(v.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prop6() -> Anf {
        Anf::parse("x1*x2*x3 + x1*x4*x5 + x2*x4*x6 + x3*x5*x6", 6).unwrap()
    }

    fn complete3(n: usize) -> Anf {
        let mut sets = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                for k in j + 1..=n {
                    sets.push(vec![i, j, k]);
                }
            }
        }
        Anf::from_index_sets(n, sets).unwrap()
    }

    fn all_vars(n: usize) -> BTreeSet<usize> {
        (1..=n).collect()
    }

    /// Smallest hitting set by trying all subsets in order of size.
    fn subset_oracle(f: &Anf) -> usize {
        let n = f.num_vars();
        let crucial: Vec<u64> = f.terms().iter().filter(|t| t.weight() >= 3).map(|t| t.low_word()).collect();
        (0u64..1 << n).filter(|s| crucial.iter().all(|t| t & s != 0)).map(|s| s.count_ones() as usize).min().unwrap()
    }

    fn random_cubic(n: usize, rng: &mut ChaCha8Rng, p: f64) -> Anf {
        let mut sets = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.gen_bool(0.2) {
                    sets.push(vec![i, j]);
                }
                for k in j + 1..=n {
                    if rng.gen_bool(p) {
                        sets.push(vec![i, j, k]);
                    }
                }
            }
        }
        Anf::from_index_sets(n, sets).unwrap()
    }

    #[test]
    fn occurrence_examples() {
        let counts = occurrence_counts(&prop6(), &all_vars(6));
        assert!(counts.values().all(|&c| c == 2));
        let counts = occurrence_counts(&complete3(4), &all_vars(4));
        assert!(counts.values().all(|&c| c == 3));
        let q = Anf::parse("x1*x2 + x3", 3).unwrap();
        assert!(occurrence_counts(&q, &all_vars(3)).values().all(|&c| c == 0));
    }

    #[test]
    fn greedy_step_examples() {
        let s0 = RestrictionState::new(&prop6());
        let s1 = greedy_step(&s0).unwrap();
        assert_eq!(s1.trace().steps[0], TraceStep { var: 1, crucial_before: 4, occ: 2 });
        assert_eq!(s1.current(), Anf::parse("x2*x4*x6 + x3*x5*x6", 6).unwrap());
        let s2 = greedy_step(&s1).unwrap();
        assert_eq!(s2.trace().steps[1], TraceStep { var: 6, crucial_before: 2, occ: 2 });
        assert_eq!(s2.crucial_count(), 0);
        let q = RestrictionState::new(&Anf::parse("x1*x2", 2).unwrap());
        assert_eq!(greedy_step(&q).unwrap_err(), Error::NoCrucialTerms);
    }

    #[test]
    fn greedy_restrict_examples() {
        let s = greedy_restrict(&prop6(), StopRule::UntilNoCrucial);
        assert_eq!(s.trace().len(), 2);
        assert_eq!(s.alive_count(), 4);
        assert!(s.current().is_zero());
        let q = Anf::parse("x1*x2 + x3*x4 + 1", 4).unwrap();
        for rule in [StopRule::UntilNoCrucial, StopRule::UntilCrucialAtMostThirdOfAlive, StopRule::UntilSteps(3)] {
            assert!(greedy_restrict(&q, rule).trace().is_empty());
        }
        let s = greedy_restrict(&complete3(6), StopRule::UntilSteps(2));
        assert_eq!(s.trace().len(), 2);
        assert_eq!(s.crucial_count(), 4);
    }

    #[test]
    fn incremental_counts_match_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let n = rng.gen_range(3..20);
            let f = random_cubic(n, &mut rng, 0.3);
            let mut s = RestrictionState::new(&f);
            let mut expected = f.clone();
            loop {
                let alive: BTreeSet<usize> = s.alive_indices().into_iter().map(|v| v + 1).collect();
                let counts = occurrence_counts(&s.current(), &alive);
                for (&v, &c) in &counts {
                    assert_eq!(s.occurrence(v), c);
                }
                assert_eq!(s.current(), expected);
                assert_eq!(s.crucial_count(), expected.crucial_count());
                let Ok(step) = s.step() else { break };
                let max = counts.values().copied().max().unwrap();
                let first = counts.iter().find(|(_, &c)| c == max).map(|(&v, _)| v).unwrap();
                assert_eq!(step.var, first);
                expected = expected.substitute_zero(step.var).unwrap();
            }
            assert_eq!(s.alive_count() + s.trace().len(), n);
        }
    }

    #[test]
    fn trace_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let n = rng.gen_range(3..30);
            let p = rng.gen_range(0.02..0.6);
            let f = random_cubic(n, &mut rng, p);
            let s = greedy_restrict(&f, StopRule::UntilNoCrucial);
            s.trace().check_bounds(n, f.crucial_count(), s.crucial_count()).unwrap();
            let mut g = f.clone();
            for v in s.trace().vars() {
                g = g.substitute_zero(v).unwrap();
            }
            assert_eq!(g.crucial_count(), 0);
        }
    }

    #[test]
    fn check_bounds_rejects_bad_traces() {
        // ratio 4/6 lies in (1/3, 2/3], where every step must remove two terms
        let trace = RestrictionTrace { steps: vec![TraceStep { var: 1, crucial_before: 4, occ: 1 }] };
        assert!(trace.check_bounds(6, 4, 3).is_err());
        let trace = RestrictionTrace { steps: vec![TraceStep { var: 1, crucial_before: 4, occ: 2 }] };
        assert!(trace.check_bounds(6, 4, 3).is_err());
        assert!(trace.check_bounds(6, 4, 2).is_ok());
    }

    #[test]
    fn decay_bound_integer_form() {
        assert!(decay_bound_holds(4, 6, 1, 2));
        assert!(!decay_bound_holds(4, 6, 1, 3));
        assert!(decay_bound_holds(4, 6, 6, 0));
        assert!(!decay_bound_holds(4, 6, 6, 1));
    }

    #[test]
    fn hitting_set_examples() {
        assert_eq!(exhaustive_hitting_set(&prop6(), 6).unwrap().unwrap().len(), 2);
        let q = Anf::parse("x1*x2", 2).unwrap();
        assert_eq!(exhaustive_hitting_set(&q, 0).unwrap(), Some(vec![]));
        assert_eq!(exhaustive_hitting_set(&complete3(4), 4).unwrap(), Some(vec![1, 2]));
        assert_eq!(exhaustive_hitting_set(&complete3(4), 1).unwrap(), None);
        assert!(matches!(exhaustive_hitting_set_with_limit(&complete3(10), 10, 3), Err(Error::TooLarge(_))));
    }

    #[test]
    fn hitting_set_matches_subset_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..60 {
            let n = rng.gen_range(3..12);
            let f = random_cubic(n, &mut rng, 0.25);
            let opt = exhaustive_hitting_set(&f, n).unwrap().unwrap();
            assert_eq!(opt.len(), subset_oracle(&f));
            let mut g = f.clone();
            for &v in &opt {
                g = g.substitute_zero(v).unwrap();
            }
            assert_eq!(g.crucial_count(), 0);
            let greedy = greedy_restrict(&f, StopRule::UntilNoCrucial);
            assert!(opt.len() <= greedy.trace().len());
        }
    }

    #[test]
    fn trace_serializes_as_list() {
        let s = greedy_restrict(&prop6(), StopRule::UntilNoCrucial);
        let json = serde_json::to_string(s.trace()).unwrap();
        assert_eq!(json, r#"[{"var":1,"crucial_before":4,"occ":2},{"var":6,"crucial_before":2,"occ":2}]"#);
    }
}
