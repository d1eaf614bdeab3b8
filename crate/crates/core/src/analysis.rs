//! Exact measurement of the binding and hiding notions, and the probability
//! tools behind them.
//!
//! Exhaustive searches range over deterministic provers only: commit tables
//! `a ↦ x` and constant opening strings. Every probability is an exact
//! rational; Monte-Carlo estimates are kept in [`McEstimate`] with their
//! trial counts.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{run_session, EngineError, SessionOptions, Strategy};
use crate::field::FieldSpec;
use crate::rng::{self, TableTape, LABEL_TARGET};
use crate::scheme::{extr_raw, ExtrRule, OpenOutcome, SchemeParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("masses must be non-negative and sum to 1 (sum is {0})")]
    NotNormalized(BigRational),
    #[error("distributions are over different outcome sets")]
    SupportMismatch,
    #[error("n={n} is beyond the exhaustive limit {max} for {metric}")]
    TooLarge {
        metric: &'static str,
        n: u32,
        max: u32,
    },
    #[error("enumeration of {0} combinations exceeds the exact-computation budget; use the Monte-Carlo variant")]
    Budget(u128),
    #[error("horizon {horizon} is past the last round {last}")]
    Horizon { horizon: u32, last: u32 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub fn frac(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn sum<'a, I: IntoIterator<Item = &'a BigRational>>(it: I) -> BigRational {
    it.into_iter().fold(BigRational::zero(), |acc, x| acc + x)
}

/// Finite pmf with exact masses over an explicit outcome set; outcomes of
/// mass zero may be listed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist<K: Ord> {
    mass: BTreeMap<K, BigRational>,
}

impl<K: Ord + Clone + Debug> Dist<K> {
    pub fn new<I: IntoIterator<Item = (K, BigRational)>>(entries: I) -> Result<Self, AnalysisError> {
        let mut mass: BTreeMap<K, BigRational> = BTreeMap::new();
        for (k, m) in entries {
            if m.is_negative() {
                return Err(AnalysisError::NotNormalized(m));
            }
            *mass.entry(k).or_insert_with(BigRational::zero) += m;
        }
        let total = sum(mass.values());
        if !total.is_one() {
            return Err(AnalysisError::NotNormalized(total));
        }
        Ok(Self { mass })
    }

    pub fn point(k: K) -> Self {
        Self {
            mass: BTreeMap::from([(k, BigRational::one())]),
        }
    }

    pub fn mass(&self, k: &K) -> BigRational {
        self.mass.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &K> {
        self.mass.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &BigRational)> {
        self.mass.iter()
    }
}

/// Joint pmf over pairs, with the outcome sets of both coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDist<K: Ord> {
    xs: BTreeSet<K>,
    ys: BTreeSet<K>,
    mass: BTreeMap<(K, K), BigRational>,
}

impl<K: Ord + Clone + Debug> JointDist<K> {
    pub fn new<I: IntoIterator<Item = ((K, K), BigRational)>>(entries: I) -> Result<Self, AnalysisError> {
        let mut j = JointDist {
            xs: BTreeSet::new(),
            ys: BTreeSet::new(),
            mass: BTreeMap::new(),
        };
        for ((x, y), m) in entries {
            if m.is_negative() {
                return Err(AnalysisError::NotNormalized(m));
            }
            j.xs.insert(x.clone());
            j.ys.insert(y.clone());
            *j.mass.entry((x, y)).or_insert_with(BigRational::zero) += m;
        }
        let total = sum(j.mass.values());
        if !total.is_one() {
            return Err(AnalysisError::NotNormalized(total));
        }
        Ok(j)
    }

    pub fn mass(&self, x: &K, y: &K) -> BigRational {
        self.mass
            .get(&(x.clone(), y.clone()))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn marginal_x(&self) -> Dist<K> {
        let mut m: BTreeMap<K, BigRational> = self.xs.iter().map(|x| (x.clone(), BigRational::zero())).collect();
        for ((x, _), v) in &self.mass {
            *m.get_mut(x).expect("listed outcome") += v;
        }
        Dist { mass: m }
    }

    pub fn marginal_y(&self) -> Dist<K> {
        let mut m: BTreeMap<K, BigRational> = self.ys.iter().map(|y| (y.clone(), BigRational::zero())).collect();
        for ((_, y), v) in &self.mass {
            *m.get_mut(y).expect("listed outcome") += v;
        }
        Dist { mass: m }
    }

    /// `p(x = y)`.
    pub fn diagonal_mass(&self) -> BigRational {
        sum(self.mass.iter().filter(|((x, y), _)| x == y).map(|(_, v)| v))
    }
}

/// Half the L1 distance.
pub fn stat_distance<K: Ord + Clone + Debug>(p: &Dist<K>, q: &Dist<K>) -> Result<BigRational, AnalysisError> {
    if !p.outcomes().eq(q.outcomes()) {
        return Err(AnalysisError::SupportMismatch);
    }
    let l1 = p
        .iter()
        .zip(q.iter())
        .fold(BigRational::zero(), |acc, ((_, a), (_, b))| acc + (a - b).abs());
    Ok(l1 / BigRational::from_integer(2.into()))
}

/// Coupling with the largest possible diagonal, `p(x = y = k) = min(p(k),
/// q(k))`, whose off-diagonal part is the product of the two residual laws.
pub fn couple_max_diagonal<K: Ord + Clone + Debug>(p: &Dist<K>, q: &Dist<K>) -> Result<JointDist<K>, AnalysisError> {
    if !p.outcomes().eq(q.outcomes()) {
        return Err(AnalysisError::SupportMismatch);
    }
    let keys: Vec<K> = p.outcomes().cloned().collect();
    let mins: Vec<BigRational> = keys.iter().map(|k| p.mass(k).min(q.mass(k))).collect();
    let residual = BigRational::one() - sum(&mins);
    let mut entries = Vec::with_capacity(keys.len() * keys.len());
    for (i, x) in keys.iter().enumerate() {
        let px = p.mass(x) - &mins[i];
        for (j, y) in keys.iter().enumerate() {
            let mut m = if i == j { mins[i].clone() } else { BigRational::zero() };
            if !residual.is_zero() {
                m += &px * (q.mass(y) - &mins[j]) / &residual;
            }
            entries.push(((x.clone(), y.clone()), m));
        }
    }
    JointDist::new(entries)
}

/// Whether the law of `(x, y)` given `x ≠ y` is a product of its marginals.
/// True when `x ≠ y` has probability 0.
pub fn cond_indep_given_neq<K: Ord + Clone + Debug>(j: &JointDist<K>) -> bool {
    let off = |x: &K, y: &K| if x == y { BigRational::zero() } else { j.mass(x, y) };
    let d: BigRational = BigRational::one() - j.diagonal_mass();
    if d.is_zero() {
        return true;
    }
    let mx: BTreeMap<&K, BigRational> = j
        .xs
        .iter()
        .map(|x| (x, sum(&j.ys.iter().map(|y| off(x, y)).collect::<Vec<_>>()) / &d))
        .collect();
    let my: BTreeMap<&K, BigRational> = j
        .ys
        .iter()
        .map(|y| (y, sum(&j.xs.iter().map(|x| off(x, y)).collect::<Vec<_>>()) / &d))
        .collect();
    j.xs
        .iter()
        .all(|x| j.ys.iter().all(|y| off(x, y) / &d == &mx[x] * &my[y]))
}

/// Exhaustive limit for the per-challenge maximizations.
pub const BINDING_MAX_BITS: u32 = 4;

fn check_bits(metric: &'static str, field: &FieldSpec, max: u32) -> Result<(), AnalysisError> {
    if field.bits() > max {
        return Err(AnalysisError::TooLarge {
            metric,
            n: field.bits(),
            max,
        });
    }
    Ok(())
}

/// Largest `p(b_0 = 0) + p(b_1 = 1)` for the bit scheme: one commitment,
/// two constant opening strings meant to reveal 0 and 1.
pub fn max_p0_plus_p1(field: &FieldSpec) -> Result<BigRational, AnalysisError> {
    max_p0_plus_p1_for(ExtrRule::ChshBit, field)
}

/// [`max_p0_plus_p1`] for any opening rule. A commit table picks `x` per
/// challenge independently, so the maximum over tables splits into a sum of
/// per-challenge maxima.
pub fn max_p0_plus_p1_for(rule: ExtrRule, field: &FieldSpec) -> Result<BigRational, AnalysisError> {
    check_bits("p0p1", field, BINDING_MAX_BITS)?;
    let q = field.order() as u32;
    let mut best = 0;
    for y0 in 0..q {
        for y1 in 0..q {
            let mut total = 0;
            for a in 0..q {
                let per_x = (0..q).map(|x| {
                    u64::from(rule.apply(field, y0, (a, x)) == OpenOutcome::Value(0))
                        + u64::from(rule.apply(field, y1, (a, x)) == OpenOutcome::Value(1))
                });
                total += per_x.max().unwrap_or(0);
            }
            best = best.max(total);
        }
    }
    Ok(frac(best, q as u64))
}

/// Largest `p(s = s∘ ∧ s' = s∘')` over commit tables, two constant opening
/// strings and distinct targets.
pub fn sim_open_epsilon(field: &FieldSpec) -> Result<BigRational, AnalysisError> {
    check_bits("sim-open", field, BINDING_MAX_BITS)?;
    let q = field.order() as u32;
    let mut best = 0;
    for y in 0..q {
        for y2 in 0..q {
            for s in 0..q {
                for s2 in (0..q).filter(|&t| t != s) {
                    let hits = (0..q)
                        .filter(|&a| {
                            (0..q).any(|x| {
                                extr_raw(field, y, a, x) == OpenOutcome::Value(s)
                                    && extr_raw(field, y2, a, x) == OpenOutcome::Value(s2)
                            })
                        })
                        .count() as u64;
                    best = best.max(hits);
                }
            }
        }
    }
    Ok(frac(best, q as u64))
}

/// The partition behind an extractor: commitments, indexed by challenge,
/// assigned to classes `C_{s,i}` or left in the residue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extractor {
    /// `ŝ` per challenge `a`, for the commitment `(a, f(a))`.
    pub s_hat: Vec<u32>,
    /// `(opening index i, value s, challenges in C_{s,i})`, non-empty only.
    pub classes: Vec<(usize, u32, Vec<u32>)>,
}

/// Greedy partition of the commitments `(a, f(a))`, `a` uniform: scanning
/// openings `i` then values `s` in increasing order, every set of remaining
/// commitments that opening `i` opens to `s` and that has mass at least
/// `alpha` becomes a class. `ŝ` is `s` on a class and 0 on the residue.
///
/// Sets only shrink as classes are removed, so one scan finds every class
/// the repeated search would.
pub fn fairly_binding_extractor(
    field: &FieldSpec,
    commit_table: &[u32],
    openings: &[u32],
    alpha: &BigRational,
) -> Result<Extractor, AnalysisError> {
    if !alpha.is_positive() {
        return Err(AnalysisError::Invalid("alpha must be positive".into()));
    }
    let q = field.order() as u32;
    if commit_table.len() != q as usize {
        return Err(AnalysisError::Invalid("commit table must cover every challenge".into()));
    }
    let mut remaining = vec![true; q as usize];
    let mut s_hat = vec![0u32; q as usize];
    let mut classes = Vec::new();
    for (i, &y) in openings.iter().enumerate() {
        for s in 0..q {
            let members: Vec<u32> = (0..q)
                .filter(|&a| {
                    remaining[a as usize] && extr_raw(field, y, a, commit_table[a as usize]) == OpenOutcome::Value(s)
                })
                .collect();
            if !members.is_empty() && frac(members.len() as u64, q as u64) >= *alpha {
                for &a in &members {
                    remaining[a as usize] = false;
                    s_hat[a as usize] = s;
                }
                classes.push((i, s, members));
            }
        }
    }
    Ok(Extractor { s_hat, classes })
}

/// `max_{i, s∘} p(s_i ≠ ŝ ∧ s_i = s∘)` where `s_i` opens the commitment
/// with string `openings[i]`.
pub fn extractor_error(field: &FieldSpec, commit_table: &[u32], openings: &[u32], s_hat: &[u32]) -> BigRational {
    let q = field.order() as u32;
    let mut best = 0u64;
    for &y in openings {
        let mut per_target = vec![0u64; q as usize];
        for a in 0..q {
            if let OpenOutcome::Value(s) = extr_raw(field, y, a, commit_table[a as usize]) {
                if s != s_hat[a as usize] {
                    per_target[s as usize] += 1;
                }
            }
        }
        best = best.max(per_target.into_iter().max().unwrap_or(0));
    }
    frac(best, q as u64)
}

/// Largest field for which every commit table is enumerated.
pub const EXTRACTOR_MAX_BITS: u32 = 2;

/// Largest [`extractor_error`] over all commit tables, with the extractor
/// built by [`fairly_binding_extractor`] from all constant openings.
pub fn max_fairly_binding_error(field: &FieldSpec, alpha: &BigRational) -> Result<BigRational, AnalysisError> {
    check_bits("extractor", field, EXTRACTOR_MAX_BITS)?;
    let q = field.order();
    let openings: Vec<u32> = (0..q as u32).collect();
    (0..q.pow(q as u32))
        .into_par_iter()
        .map(|t| {
            let table: Vec<u32> = (0..q).map(|a| ((t / q.pow(a as u32)) % q) as u32).collect();
            let ext = fairly_binding_extractor(field, &table, &openings, alpha)?;
            Ok(extractor_error(field, &table, &openings, &ext.s_hat))
        })
        .try_reduce(BigRational::zero, |a, b| Ok(if a > b { a } else { b }))
}

/// Smallest `N ≥ 2` with `N² ≥ 2/ε`.
fn hat_n(eps: &BigRational) -> u64 {
    let two_over = BigRational::from_integer(2.into()) / eps;
    let mut n: u64 = 2;
    while BigRational::from_integer((n * n).into()) < two_over {
        n += 1;
    }
    n
}

/// A distribution for `ŝ` from the opening probabilities `p_i = p(s = s_i)`
/// (sorted descending, each in `[0, 1]`): keep the first `N' ≤ N` values,
/// all with `p_i ≥ (N-1)ε/2`, and lower each by `(N-1)ε̃/2` with `ε̃`
/// chosen so the masses sum to 1. The result is indexed by position in `p_list`.
pub fn fairly_weak_hat_distribution(p_list: &[BigRational], eps: &BigRational) -> Result<Dist<usize>, AnalysisError> {
    if !eps.is_positive() {
        return Err(AnalysisError::Invalid("epsilon must be positive".into()));
    }
    if p_list.iter().any(|p| p.is_negative() || *p > BigRational::one()) {
        return Err(AnalysisError::Invalid("probabilities must lie in [0, 1]".into()));
    }
    if p_list.windows(2).any(|w| w[0] < w[1]) {
        return Err(AnalysisError::Invalid("probabilities must be sorted descending".into()));
    }
    let n = hat_n(eps);
    let n_minus_1 = BigRational::from_integer((n - 1).into());
    let two = BigRational::from_integer(2.into());
    let threshold = &n_minus_1 * eps / &two;
    let kept = p_list.iter().take(n as usize).take_while(|p| **p >= threshold).count();
    if kept == 0 {
        return Err(AnalysisError::Invalid("no probability reaches (N-1)ε/2".into()));
    }
    let kept_sum = sum(&p_list[..kept]);
    let eps_tilde = &two * (kept_sum - BigRational::one())
        / (BigRational::from_integer((kept as u64).into()) * &n_minus_1);
    let shift = &n_minus_1 * &eps_tilde / &two;
    let entries: Vec<(usize, BigRational)> = p_list[..kept]
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p - &shift))
        .collect();
    if let Some((i, _)) = entries.iter().find(|(_, m)| m.is_negative()) {
        return Err(AnalysisError::Invalid(format!("construction gives negative mass at index {i}")));
    }
    Dist::new(entries)
}

/// How the verifier picks challenges in a hiding experiment.
pub enum VerifierStrategy {
    /// Uniform challenges.
    Honest,
    /// The listed challenges, by round.
    Fixed(Vec<u32>),
    /// Challenge as a function of the `(a, x)` pairs seen so far.
    Adaptive(Box<dyn Fn(&[(u32, u32)]) -> u32 + Sync>),
}

/// Largest enumeration carried out exactly.
pub const EXACT_BUDGET: u128 = 1 << 24;

/// Statistical distance between the verifier's views under honest provers
/// committing to `s0` and to `s1`. The view holds every message of rounds
/// `≤ horizon`; horizon `m + 1` includes the opening string.
pub fn hiding_distance(
    params: &SchemeParams,
    verifier: &VerifierStrategy,
    s0: u32,
    s1: u32,
    horizon: u32,
) -> Result<BigRational, AnalysisError> {
    let f = params.field;
    let m = params.m;
    if horizon > m + 1 {
        return Err(AnalysisError::Horizon { horizon, last: m + 1 });
    }
    if !params.in_domain(s0) || !params.in_domain(s1) {
        return Err(AnalysisError::Invalid("committed values must lie in the domain".into()));
    }
    let q = f.order() as u128;
    let rounds = m + 1;
    let challenge_space = if matches!(verifier, VerifierStrategy::Honest) { q.pow(rounds) } else { 1 };
    let total = q.pow(rounds) * challenge_space;
    if total > EXACT_BUDGET {
        return Err(AnalysisError::Budget(total));
    }
    let seen_rounds = horizon.min(m) + 1;
    let views = |s: u32| -> HashMap<Vec<u32>, u64> {
        let mut counts = HashMap::new();
        for ri in 0..q.pow(rounds) {
            let r: Vec<u32> = (0..rounds).map(|i| ((ri / q.pow(i)) % q) as u32).collect();
            for ai in 0..challenge_space {
                let mut view = Vec::with_capacity(2 * rounds as usize + 1);
                let mut pairs = Vec::with_capacity(rounds as usize);
                for i in 0..seen_rounds {
                    let a = match verifier {
                        VerifierStrategy::Honest => ((ai / q.pow(i)) % q) as u32,
                        VerifierStrategy::Fixed(list) => list.get(i as usize).copied().unwrap_or(0) & f.mask(),
                        VerifierStrategy::Adaptive(g) => g(&pairs) & f.mask(),
                    };
                    let prev = if i == 0 { s } else { r[i as usize - 1] };
                    let x = r[i as usize] ^ f.mul_raw(a, prev);
                    pairs.push((a, x));
                    view.extend([a, x]);
                }
                if horizon > m {
                    view.push(r[m as usize]);
                }
                *counts.entry(view).or_insert(0) += 1;
            }
        }
        counts
    };
    let (v0, v1) = (views(s0), views(s1));
    let keys: BTreeSet<&Vec<u32>> = v0.keys().chain(v1.keys()).collect();
    let l1: u64 = keys
        .into_iter()
        .map(|k| v0.get(k).copied().unwrap_or(0).abs_diff(v1.get(k).copied().unwrap_or(0)))
        .sum();
    Ok(BigRational::new(BigInt::from(l1), BigInt::from(2u128 * total)))
}

/// Binomial Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McEstimate {
    pub hits: u64,
    pub trials: u64,
}

impl McEstimate {
    pub fn p_hat(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    /// Standard error of `p_hat`.
    pub fn sigma(&self) -> f64 {
        let p = self.p_hat();
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    /// Binomial standard deviation of the rate under success probability `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials.max(1) as f64).sqrt()
    }

    /// `|p_hat - p|` in units of [`McEstimate::sigma_at`].
    pub fn z_score(&self, p: f64) -> f64 {
        let s = self.sigma_at(p);
        if s == 0.0 {
            if self.p_hat() == p { 0.0 } else { f64::INFINITY }
        } else {
            (self.p_hat() - p).abs() / s
        }
    }
}

/// Runs `trial` on the derived seed of each trial index in parallel;
/// `None` results are left out of the count.
pub fn monte_carlo<F>(trials: u64, seed: u64, trial: F) -> McEstimate
where
    F: Fn(u64) -> Option<bool> + Sync,
{
    let (hits, counted) = (0..trials)
        .into_par_iter()
        .map(|t| match trial(rng::trial_seed(seed, t)) {
            Some(true) => (1u64, 1u64),
            Some(false) => (0, 1),
            None => (0, 0),
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    McEstimate { hits, trials: counted }
}

/// Family of opening strategies indexed by the target value.
pub type OpenFamily<'a> = dyn Fn(u32) -> Box<dyn Strategy> + Sync + 'a;

/// Probability that the opening equals a uniform target `s∘` from the
/// domain, enumerating targets, challenges and the tape words both
/// strategies read (rounds `0..=m+1`).
pub fn open_game_success(
    params: &SchemeParams,
    commit: &dyn Strategy,
    family: &OpenFamily<'_>,
) -> Result<BigRational, AnalysisError> {
    let f = params.field;
    let q = f.order() as u128;
    let targets = 1u128 << params.domain_bits;
    let rounds = params.m + 1;
    let slots = commit.slots_per_round().max(family(0).slots_per_round());
    let words = (params.m + 2) * slots;
    let total = targets * q.pow(rounds) * q.pow(words);
    if total > EXACT_BUDGET {
        return Err(AnalysisError::Budget(total));
    }
    let mut hits: u64 = 0;
    for target in 0..targets as u32 {
        let open = family(target);
        for ai in 0..q.pow(rounds) {
            let a: Vec<u32> = (0..rounds).map(|i| ((ai / q.pow(i)) % q) as u32).collect();
            let opts = SessionOptions {
                forced_challenges: Some(a),
                ..Default::default()
            };
            for ti in 0..q.pow(words) {
                let values: Vec<Vec<u32>> = (0..params.m + 2)
                    .map(|r| (0..slots).map(|k| ((ti / q.pow(r * slots + k)) % q) as u32).collect())
                    .collect();
                let t = run_session(params, commit, open.as_ref(), 0, &TableTape::new(values), &opts)?;
                if t.outcome == OpenOutcome::Value(target) {
                    hits += 1;
                }
            }
        }
    }
    Ok(BigRational::new(BigInt::from(hits), BigInt::from(total)))
}

/// Monte-Carlo [`open_game_success`]: per trial, a uniform target, seeded
/// challenges and a seeded tape.
pub fn open_game_monte_carlo(
    params: &SchemeParams,
    commit: &dyn Strategy,
    family: &OpenFamily<'_>,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, AnalysisError> {
    let mask = (1u32 << params.domain_bits) - 1;
    let failure = std::sync::Mutex::new(None);
    let est = monte_carlo(trials, seed, |s| {
        let target = rng::stream_word(s, LABEL_TARGET, 0, 0) & mask;
        let open = family(target);
        match crate::engine::run_attack_session(params, commit, open.as_ref(), s) {
            Ok(t) => Some(t.outcome == OpenOutcome::Value(target)),
            Err(e) => {
                failure.lock().expect("unpoisoned").get_or_insert(e);
                None
            }
        }
    });
    match failure.into_inner().expect("unpoisoned") {
        Some(e) => Err(e.into()),
        None => Ok(est),
    }
}

/// Largest field for the binding-game enumeration over all `ŝ` maps.
pub const BINDING_GAME_MAX_BITS: u32 = 2;

/// For one commit table, the committer's best advantage
/// `max_y p(s ≠ ŝ(c) ∧ s ≠ ⊥)` against each map `ŝ` from commitments to
/// `domain_bits`-bit values, in the order of the maps' base-`2^k` codes.
pub fn binding_losses(
    rule: ExtrRule,
    field: &FieldSpec,
    domain_bits: u32,
    commit_table: &[u32],
) -> Result<Vec<BigRational>, AnalysisError> {
    check_bits("binding", field, BINDING_GAME_MAX_BITS)?;
    let q = field.order() as u32;
    let values = 1u32 << domain_bits;
    Ok((0..values.pow(q))
        .map(|h| {
            let s_hat: Vec<u32> = (0..q).map(|a| (h / values.pow(a)) % values).collect();
            let adv = (0..q)
                .map(|y| {
                    (0..q)
                        .filter(|&a| match rule.apply(field, y, (a, commit_table[a as usize])) {
                            OpenOutcome::Value(s) => s != s_hat[a as usize],
                            OpenOutcome::Reject => false,
                        })
                        .count() as u64
                })
                .max()
                .unwrap_or(0);
            frac(adv, q as u64)
        })
        .collect())
}

/// The binding game for a one-stage scheme: the best committer's advantage
/// `max_f min_ŝ max_y p(s ≠ ŝ(c) ∧ s ≠ ⊥)` over commit tables `f`, maps `ŝ`
/// and constant openings `y`.
pub fn min_binding_error(rule: ExtrRule, field: &FieldSpec, domain_bits: u32) -> Result<BigRational, AnalysisError> {
    check_bits("binding", field, BINDING_GAME_MAX_BITS)?;
    let q = field.order() as u32;
    let mut worst = BigRational::zero();
    for t in 0..q.pow(q) {
        let table: Vec<u32> = (0..q).map(|a| (t / q.pow(a)) % q).collect();
        let losses = binding_losses(rule, field, domain_bits, &table)?;
        let best_hat = losses.into_iter().min().expect("at least one map");
        if best_hat > worst {
            worst = best_hat;
        }
    }
    Ok(worst)
}
