//! Classical attacks: optimal CHSH^n game tables, the randomization wrapper
//! making their success input-independent, and the multi-round attack that
//! retries the game every other round until one attempt lands.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::analysis::{frac, monte_carlo, McEstimate};
use crate::engine::{run_attack_session, EngineError, PartyView, Strategy};
use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::rng::Tape;
use crate::scheme::{OpenOutcome, SchemeParams};

/// Largest field searched; above 2 bits the search is restricted.
pub const CHSH_SEARCH_MAX_BITS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("n={n} is beyond the CHSH table search (max {max}); load cached tables instead")]
    TooLarge { n: u32, max: u32 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Deterministic classical strategy for the CHSH^n game: Alice maps `a` to
/// `x`, Bob maps `s` to `y`, and they win when `x + y = a·s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChshTables {
    pub field: FieldSpec,
    pub x_table: Vec<u32>,
    pub y_table: Vec<u32>,
    /// Winning probability under uniform `(a, s)`.
    pub q: BigRational,
    /// `false` when the tables come from a restricted search, so `q` is
    /// only a lower bound on the game value.
    pub optimal: bool,
}

/// Number of `(a, s)` won by the pair of tables.
pub fn count_wins(field: &FieldSpec, x_table: &[u32], y_table: &[u32]) -> u64 {
    let q = field.order() as u32;
    let mut wins = 0;
    for a in 0..q {
        for s in 0..q {
            if x_table[a as usize] ^ y_table[s as usize] == field.mul_raw(a, s) {
                wins += 1;
            }
        }
    }
    wins
}

/// Bob's best answer to a fixed Alice table, smallest `y` on ties, with the
/// number of wins it achieves.
pub fn best_response(field: &FieldSpec, x_table: &[u32]) -> (Vec<u32>, u64) {
    let q = field.order() as usize;
    let mut counts = vec![0u64; q];
    let mut y_table = Vec::with_capacity(q);
    let mut wins = 0;
    for s in 0..q as u32 {
        counts.iter_mut().for_each(|c| *c = 0);
        for a in 0..q as u32 {
            counts[(x_table[a as usize] ^ field.mul_raw(a, s)) as usize] += 1;
        }
        let (best_y, best) = counts
            .iter()
            .enumerate()
            .fold((0, 0), |acc, (y, &c)| if c > acc.1 { (y, c) } else { acc });
        y_table.push(best_y as u32);
        wins += best;
    }
    (y_table, wins)
}

impl ChshTables {
    pub fn from_tables(field: FieldSpec, x_table: Vec<u32>, y_table: Vec<u32>, optimal: bool) -> Self {
        let wins = count_wins(&field, &x_table, &y_table);
        Self {
            field,
            x_table,
            y_table,
            q: frac(wins, field.order() * field.order()),
            optimal,
        }
    }

    pub fn x(&self, a: u32) -> u32 {
        self.x_table[a as usize]
    }

    pub fn y(&self, s: u32) -> u32 {
        self.y_table[s as usize]
    }
}

impl fmt::Display for ChshTables {
    /// Header with field and exact `q`, then one `a:x s:y` line per index.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "#chsh n={} poly={:#x} q={} optimal={}",
            self.field.bits(),
            self.field.poly(),
            self.q,
            self.optimal
        )?;
        for i in 0..self.x_table.len() {
            let h = |v: u32| self.field.wrap(v).to_hex();
            writeln!(
                f,
                "{}:{} {}:{}",
                h(i as u32),
                h(self.x_table[i]),
                h(i as u32),
                h(self.y_table[i])
            )?;
        }
        Ok(())
    }
}

impl FromStr for ChshTables {
    type Err = AdversaryError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, msg: String| AdversaryError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty table file".into()))?;
        let rest = header
            .strip_prefix("#chsh ")
            .ok_or_else(|| err(1, "missing '#chsh' header".into()))?;
        let mut field_tokens = Vec::new();
        let mut q_text = None;
        let mut optimal = None;
        for tok in rest.split_whitespace() {
            match tok.split_once('=') {
                Some(("n" | "poly", _)) => field_tokens.push(tok),
                Some(("q", v)) => q_text = Some(v.to_string()),
                Some(("optimal", v)) => {
                    optimal = Some(v.parse::<bool>().map_err(|e| err(1, e.to_string()))?)
                }
                _ => return Err(err(1, format!("unexpected header token {tok:?}"))),
            }
        }
        let field: FieldSpec = field_tokens.join(" ").parse().map_err(|e: FieldError| err(1, e.to_string()))?;
        let q = q_text.ok_or_else(|| err(1, "header lacks q".into()))?;
        let size = field.order() as usize;
        let mut x_table = vec![None; size];
        let mut y_table = vec![None; size];
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            for table in [&mut x_table, &mut y_table] {
                let pair = parts.next().ok_or_else(|| err(ln, "expected two pairs".into()))?;
                let (k, v) = pair.split_once(':').ok_or_else(|| err(ln, format!("bad pair {pair:?}")))?;
                let k = field.parse_element(k).map_err(|e| err(ln, e.to_string()))?.value() as usize;
                let v = field.parse_element(v).map_err(|e| err(ln, e.to_string()))?.value();
                table[k] = Some(v);
            }
        }
        let collect = |t: Vec<Option<u32>>| -> Result<Vec<u32>, AdversaryError> {
            t.into_iter()
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| err(0, "table is not total over the field".into()))
        };
        let tables = ChshTables::from_tables(field, collect(x_table)?, collect(y_table)?, optimal.unwrap_or(false));
        if tables.q.to_string() != q {
            return Err(err(1, format!("recorded q={q} but tables win with q={}", tables.q)));
        }
        Ok(tables)
    }
}

fn search<I: Iterator<Item = Vec<u32>>>(field: &FieldSpec, candidates: I) -> (Vec<u32>, Vec<u32>) {
    let mut best: Option<(u64, Vec<u32>, Vec<u32>)> = None;
    for x in candidates {
        let (y, wins) = best_response(field, &x);
        let better = match &best {
            None => true,
            Some((w, bx, _)) => wins > *w || (wins == *w && x < *bx),
        };
        if better {
            best = Some((wins, x, y));
        }
    }
    let (_, x, y) = best.expect("non-empty candidate family");
    (x, y)
}

/// The optimal deterministic game tables, lexicographically first among
/// optimal Alice tables.
///
/// For `n ≤ 2` every Alice table is tried against its exact best response,
/// which reaches the game value. For `n = 3` only tables affine over GF(2)
/// are tried and the result is marked non-optimal.
pub fn brute_force_chsh(field: &FieldSpec) -> Result<ChshTables, AdversaryError> {
    let n = field.bits();
    let q = field.order() as u32;
    let (x, y) = match n {
        1 | 2 => {
            let total = (q as u64).pow(q);
            let tables = (0..total).map(|mut t| {
                let mut x = vec![0u32; q as usize];
                for slot in x.iter_mut().rev() {
                    *slot = (t % q as u64) as u32;
                    t /= q as u64;
                }
                x
            });
            search(field, tables)
        }
        3 => {
            let tables = (0..q.pow(n + 1)).map(|code| {
                let d = code % q;
                let images: Vec<u32> = (0..n).map(|k| (code / q.pow(k + 1)) % q).collect();
                (0..q)
                    .map(|a| {
                        (0..n)
                            .filter(|k| a >> k & 1 == 1)
                            .fold(d, |acc, k| acc ^ images[k as usize])
                    })
                    .collect()
            });
            let mut all: Vec<Vec<u32>> = tables.collect();
            all.sort();
            all.dedup();
            search(field, all.into_iter())
        }
        _ => {
            return Err(AdversaryError::TooLarge {
                n,
                max: CHSH_SEARCH_MAX_BITS,
            })
        }
    };
    Ok(ChshTables::from_tables(*field, x, y, n <= 2))
}

/// Game tables played on shifted inputs, `X(a, (ra, rs)) = X'(a + ra) +
/// a·rs + ra·rs` and `Y(s, (ra, rs)) = Y'(s + rs) + ra·s`, which win with
/// probability exactly `q` on every input pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedChsh {
    pub base: ChshTables,
}

pub fn randomize(tables: &ChshTables) -> RandomizedChsh {
    RandomizedChsh { base: tables.clone() }
}

impl RandomizedChsh {
    pub fn x(&self, a: u32, ra: u32, rs: u32) -> u32 {
        let f = &self.base.field;
        self.base.x(a ^ ra) ^ f.mul_raw(a, rs) ^ f.mul_raw(ra, rs)
    }

    pub fn y(&self, s: u32, ra: u32, rs: u32) -> u32 {
        let f = &self.base.field;
        self.base.y(s ^ rs) ^ f.mul_raw(ra, s)
    }

    /// Exact winning probability on `(a, s)` over the uniform shifts.
    pub fn success_probability(&self, a: u32, s: u32) -> BigRational {
        let f = &self.base.field;
        let q = f.order() as u32;
        let target = f.mul_raw(a, s);
        let mut wins = 0;
        for ra in 0..q {
            for rs in 0..q {
                if self.x(a, ra, rs) ^ self.y(s, ra, rs) == target {
                    wins += 1;
                }
            }
        }
        frac(wins, (q as u64) * (q as u64))
    }
}

/// `1 - (1 - q)^(⌊m/2⌋ + 1)`: the multi-round attack's success given
/// nonzero challenges. One game is played at every even round up to `m`.
pub fn tightness_success(q: &BigRational, m: u32) -> BigRational {
    let miss = BigRational::one() - q;
    let attempts = (m / 2 + 1) as i32;
    BigRational::one() - num_traits::pow::Pow::pow(&miss, attempts)
}

/// `(m+1)q/2 - (m²-1)q²/8 - (m+1)2^-n`, the attack's unconditional success
/// lower bound.
pub fn tightness_lower_bound(q: &BigRational, m: u64, n: u32) -> BigRational {
    let m = BigRational::from_integer(m.into());
    let one = BigRational::one();
    let two_n = BigRational::from_integer(num_bigint::BigInt::one() << n);
    (&m + &one) * q / BigRational::from_integer(2.into())
        - (&m * &m - &one) * q * q / BigRational::from_integer(8.into())
        - (&m + &one) / two_n
}

/// `(m+1)·2^(-n/2+2)` for even `n`: the binding error of the `m`-round
/// composition.
pub fn composition_upper_bound(m: u64, n: u32) -> BigRational {
    assert!(n % 2 == 0, "upper bound stated for even n");
    let m1 = BigRational::from_integer((m + 1).into());
    let half = n / 2;
    if half >= 2 {
        m1 / BigRational::from_integer(num_bigint::BigInt::one() << (half - 2))
    } else {
        m1 * BigRational::from_integer(num_bigint::BigInt::one() << (2 - half))
    }
}

/// `2^-n + 2^-n/2` for even `n`, an upper bound on the classical game value
/// (already an upper bound on its entangled value).
pub fn game_value_upper_bound(n: u32) -> BigRational {
    assert!(n % 2 == 0);
    let one = num_bigint::BigInt::one();
    BigRational::new(one.clone(), one.clone() << n) + BigRational::new(one.clone(), one << (n / 2))
}

/// Largest value of [`tightness_lower_bound`] over `q ∈ [0, q_max]`.
pub fn max_tightness_lower_bound(q_max: &BigRational, m: u64, n: u32) -> BigRational {
    // Concave in q with vertex at 2(m+1)/(m²-1) = 2/(m-1).
    let q = if m >= 2 {
        let vertex = BigRational::new(2.into(), (m - 1).into());
        if &vertex < q_max { vertex } else { q_max.clone() }
    } else {
        q_max.clone()
    };
    let at = tightness_lower_bound(&q, m, n);
    let at0 = tightness_lower_bound(&BigRational::zero(), m, n);
    if at > at0 { at } else { at0 }
}

/// The multi-round attack aiming to open to `target`.
///
/// Round 0 is a fake commitment `x_0 = X(a_0, ρ_0)`. At each later odd round
/// the active prover guesses the previous round's correct opening
/// `g = Y(ŷ, ρ)` and commits honestly to it; at the following even round
/// the other prover, now knowing the challenge that decided the guess,
/// checks it. A correct guess makes both provers honest for the rest of the
/// session; a wrong one starts a fresh fake commitment. Here `ŷ_{-1}` is the
/// target and `ŷ_j = x_j + a_j·ŷ_{j-1}` is the opening string that would
/// make round `j` open to `ŷ_{j-1}`.
///
/// Tape slot 0 of round `i` holds honest randomness `r_i`; slots 1 and 2
/// hold the game shifts `ρ_i`.
#[derive(Debug, Clone)]
pub struct TightnessStrategy {
    pub target: u32,
    pub game: RandomizedChsh,
}

pub fn tightness_strategy(target: FieldElement, tables: &ChshTables) -> (TightnessStrategy, TightnessStrategy) {
    let s = TightnessStrategy {
        target: target.value(),
        game: randomize(tables),
    };
    (s.clone(), s)
}

struct Chain {
    /// `yhat[j + 1] = ŷ_j`, so `yhat[0]` is the target.
    yhat: Vec<u32>,
    honest_from: Option<u32>,
}

impl TightnessStrategy {
    fn shifts(tape: &dyn Tape, round: u32) -> (u32, u32) {
        (tape.value(round, 1), tape.value(round, 2))
    }

    fn fake_x(&self, tape: &dyn Tape, round: u32, a: u32) -> u32 {
        let (ra, rs) = Self::shifts(tape, round);
        self.game.x(a, ra, rs)
    }

    fn guess(&self, tape: &dyn Tape, round: u32, yhat_prev: u32) -> u32 {
        let (ra, rs) = Self::shifts(tape, round);
        self.game.y(yhat_prev, ra, rs)
    }

    /// The check made at even round `k`: did the guess committed at round
    /// `k - 1` hit `ŷ_{k-2}`? Needs the chain through round `k - 2`.
    fn check(&self, tape: &dyn Tape, yhat: &[u32], k: u32) -> bool {
        k >= 2 && k % 2 == 0 && self.guess(tape, k - 2, yhat[k as usize - 2]) == yhat[k as usize - 1]
    }

    /// Replays both provers through round `upto` from the visible
    /// challenges. Honesty is decided through round `upto + 2`, the latest
    /// check that needs nothing beyond round `upto`.
    fn chain(&self, view: &PartyView, tape: &dyn Tape, upto: Option<u32>) -> Result<Chain, EngineError> {
        let f = view.params().field;
        let mut c = Chain {
            yhat: vec![self.target],
            honest_from: None,
        };
        let Some(upto) = upto else {
            return Ok(c);
        };
        for j in 0..=upto {
            if c.honest_from.is_none() && self.check(tape, &c.yhat, j) {
                c.honest_from = Some(j);
            }
            let a = view.challenge(j)?.value();
            let x = if c.honest_from.is_some() {
                tape.value(j, 0) ^ f.mul_raw(a, tape.value(j - 1, 0))
            } else if j % 2 == 0 {
                self.fake_x(tape, j, a)
            } else {
                let g = self.guess(tape, j - 1, c.yhat[j as usize - 1]);
                tape.value(j, 0) ^ f.mul_raw(a, g)
            };
            let prev = c.yhat[j as usize];
            c.yhat.push(x ^ f.mul_raw(a, prev));
        }
        for k in upto + 1..=upto + 2 {
            if c.honest_from.is_none() && self.check(tape, &c.yhat, k) {
                c.honest_from = Some(k);
            }
        }
        Ok(c)
    }
}

impl Strategy for TightnessStrategy {
    fn respond(&self, view: &PartyView, tape: &dyn Tape) -> Result<FieldElement, EngineError> {
        let p = *view.params();
        let f = p.field;
        let i = view.round();
        let c = self.chain(view, tape, i.checked_sub(2))?;
        let honest_by = |k: u32| c.honest_from.is_some_and(|h| h <= k);
        if i > p.m {
            let y = if !honest_by(p.m) && p.m % 2 == 0 {
                self.guess(tape, p.m, c.yhat[p.m as usize])
            } else {
                tape.value(p.m, 0)
            };
            return Ok(f.wrap(y));
        }
        let a = view.challenge(i)?.value();
        let x = if i % 2 == 0 {
            if honest_by(i) {
                tape.value(i, 0) ^ f.mul_raw(a, tape.value(i - 1, 0))
            } else {
                self.fake_x(tape, i, a)
            }
        } else if honest_by(i - 1) {
            tape.value(i, 0) ^ f.mul_raw(a, tape.value(i - 1, 0))
        } else {
            let g = self.guess(tape, i - 1, c.yhat[i as usize - 1]);
            tape.value(i, 0) ^ f.mul_raw(a, g)
        };
        Ok(f.wrap(x))
    }

    fn slots_per_round(&self) -> u32 {
        3
    }
}

/// Sustains honestly, then announces a uniformly random final string read
/// from tape slot `(m + 1, 0)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomOpenStrategy;

pub fn random_open_strategy() -> RandomOpenStrategy {
    RandomOpenStrategy
}

impl Strategy for RandomOpenStrategy {
    fn respond(&self, view: &PartyView, tape: &dyn Tape) -> Result<FieldElement, EngineError> {
        let p = view.params();
        let i = view.round();
        if i > p.m {
            return Ok(p.field.wrap(tape.value(p.m + 1, 0)));
        }
        let a = view.challenge(i)?.value();
        Ok(p.field.wrap(tape.value(i, 0) ^ p.field.mul_raw(a, tape.value(i.saturating_sub(1), 0))))
    }
}

/// Monte-Carlo success of a strategy pair at opening to `target`, counted
/// only over sessions whose challenges are all nonzero.
pub fn conditional_success(
    params: &SchemeParams,
    commit: &dyn Strategy,
    open: &dyn Strategy,
    target: u32,
    trials: u64,
    seed: u64,
) -> Result<McEstimate, AdversaryError> {
    let failure = std::sync::Mutex::new(None);
    let est = monte_carlo(trials, seed, |s| match run_attack_session(params, commit, open, s) {
        Ok(t) if t.challenges().iter().all(|&a| a != 0) => Some(t.outcome == OpenOutcome::Value(target)),
        Ok(_) => None,
        Err(e) => {
            failure.lock().expect("unpoisoned").get_or_insert(e);
            None
        }
    });
    match failure.into_inner().expect("unpoisoned") {
        Some(e) => Err(e.into()),
        None => Ok(est),
    }
}
