//! Round-indexed execution of commit, sustain and open phases.
//!
//! Round `i ≤ m` is a challenge `a_i` from V to the active prover followed by
//! its response `x_i`. Round `m + 1` is V's open request, the opening string
//! from the idle prover, and V's verdict. Strategies never see the
//! transcript directly: each call receives a [`PartyView`] holding exactly
//! the messages visible to that party at that round.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec};
use crate::rng::{self, SeededTape, Tape};
use crate::scheme::{multiround_verify, OpenOutcome, Role, SchemeError, SchemeParams};

/// Default lag of the one-way transfer between the provers, in rounds.
pub const DEFAULT_LAG: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("protocol violation: {party} at round {round} {detail}")]
    ProtocolViolation {
        party: Party,
        round: u32,
        detail: String,
    },
    #[error("round {round} is outside a session of {rounds} rounds")]
    RoundOutOfRange { round: u32, rounds: u32 },
    #[error("committed value {0:#x} is outside the scheme domain")]
    ValueOutOfDomain(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    P,
    Q,
    V,
}

impl From<Role> for Party {
    fn from(r: Role) -> Self {
        match r {
            Role::P => Party::P,
            Role::Q => Party::Q,
        }
    }
}

impl Party {
    /// The other prover; `None` for the verifier.
    pub fn other_prover(self) -> Option<Party> {
        match self {
            Party::P => Some(Party::Q),
            Party::Q => Some(Party::P),
            Party::V => None,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::P => "P",
            Party::Q => "Q",
            Party::V => "V",
        })
    }
}

impl FromStr for Party {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" => Ok(Party::P),
            "Q" => Ok(Party::Q),
            "V" => Ok(Party::V),
            _ => Err(format!("unknown party {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Payload {
    Element(u32),
    Open,
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoundMessage {
    pub round: u32,
    pub from: Party,
    pub to: Party,
    pub payload: Payload,
}

impl RoundMessage {
    fn encode(&self, field: &FieldSpec) -> String {
        let payload = match self.payload {
            Payload::Element(v) => field.wrap(v).to_hex(),
            Payload::Open => "OPEN".into(),
            Payload::Accept => "ACCEPT".into(),
            Payload::Reject => "REJECT".into(),
        };
        format!("round={} from={} to={} payload={}", self.round, self.from, self.to, payload)
    }
}

/// Messages `party` may know at `round`, for a given transfer lag: its own
/// traffic in rounds `≤ round`, and what the other prover received in rounds
/// `≤ round - lag`.
pub fn visible_with_lag(
    messages: &[RoundMessage],
    party: Party,
    round: u32,
    lag: u32,
) -> Vec<RoundMessage> {
    let other = party.other_prover();
    messages
        .iter()
        .filter(|msg| {
            let own = (msg.from == party || msg.to == party) && msg.round <= round;
            let forwarded = other == Some(msg.to) && msg.round + lag <= round;
            own || forwarded
        })
        .copied()
        .collect()
}

/// [`visible_with_lag`] at the default lag, over a finished transcript.
pub fn visible_history(
    transcript: &Transcript,
    party: Party,
    round: u32,
) -> Result<Vec<RoundMessage>, EngineError> {
    let rounds = transcript.params.m + 2;
    if round >= rounds {
        return Err(EngineError::RoundOutOfRange { round, rounds });
    }
    Ok(visible_with_lag(&transcript.messages, party, round, DEFAULT_LAG))
}

/// What one party may read when asked to act.
#[derive(Debug, Clone)]
pub struct PartyView {
    party: Party,
    round: u32,
    params: SchemeParams,
    messages: Vec<RoundMessage>,
}

impl PartyView {
    pub fn new(party: Party, round: u32, params: SchemeParams, messages: Vec<RoundMessage>) -> Self {
        Self {
            party,
            round,
            params,
            messages,
        }
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn messages(&self) -> &[RoundMessage] {
        &self.messages
    }

    fn violation(&self, detail: String) -> EngineError {
        EngineError::ProtocolViolation {
            party: self.party,
            round: self.round,
            detail,
        }
    }

    /// Challenge `a_round`; a protocol violation if it is not visible.
    pub fn challenge(&self, round: u32) -> Result<FieldElement, EngineError> {
        self.messages
            .iter()
            .find_map(|msg| match msg.payload {
                Payload::Element(v) if msg.round == round && msg.from == Party::V => Some(v),
                _ => None,
            })
            .map(|v| self.params.field.wrap(v))
            .ok_or_else(|| self.violation(format!("cannot see challenge a_{round}")))
    }

    /// Response `x_round`; a protocol violation if it is not visible.
    pub fn response(&self, round: u32) -> Result<FieldElement, EngineError> {
        self.messages
            .iter()
            .find_map(|msg| match msg.payload {
                Payload::Element(v) if msg.round == round && msg.to == Party::V => Some(v),
                _ => None,
            })
            .map(|v| self.params.field.wrap(v))
            .ok_or_else(|| self.violation(format!("cannot see response x_{round}")))
    }
}

/// Prover behaviour. Stateless: everything a strategy uses comes from its
/// view and the provers' shared tape.
pub trait Strategy: Sync {
    fn respond(&self, view: &PartyView, tape: &dyn Tape) -> Result<FieldElement, EngineError>;

    /// Tape words read per round, for callers enumerating the tape exactly.
    fn slots_per_round(&self) -> u32 {
        1
    }
}

/// Honest provers committing to `s`: `x_0 = y_0 + a_0·s`,
/// `x_i = y_i + a_i·y_{i-1}`, and the opener announces `y_m`, with
/// `y_i` read from tape slot `(i, 0)`.
#[derive(Debug, Clone, Copy)]
pub struct HonestProver {
    pub s: u32,
}

impl Strategy for HonestProver {
    fn respond(&self, view: &PartyView, tape: &dyn Tape) -> Result<FieldElement, EngineError> {
        let p = view.params();
        let f = p.field;
        let i = view.round();
        if i > p.m {
            return Ok(f.wrap(tape.value(p.m, 0)));
        }
        let a = view.challenge(i)?.value();
        let prev = if i == 0 { self.s } else { tape.value(i - 1, 0) };
        Ok(f.wrap(tape.value(i, 0) ^ f.mul_raw(a, prev)))
    }
}

/// Test hooks and model variations for a session.
#[derive(Debug, Clone)]
pub struct SessionOptions {
    pub lag: u32,
    /// Challenges to use instead of the seeded ones, by round.
    pub forced_challenges: Option<Vec<u32>>,
}

impl Default for SessionOptions {
    fn default() -> Self {
        Self {
            lag: DEFAULT_LAG,
            forced_challenges: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub params: SchemeParams,
    pub seed: u64,
    pub messages: Vec<RoundMessage>,
    pub outcome: OpenOutcome,
}

fn round_challenge(params: &SchemeParams, seed: u64, round: u32, opts: &SessionOptions) -> u32 {
    opts.forced_challenges
        .as_ref()
        .and_then(|f| f.get(round as usize).copied())
        .map(|a| a & params.field.mask())
        .unwrap_or_else(|| rng::challenge(seed, &params.field, round))
}

fn checked(params: &SchemeParams, e: FieldElement) -> Result<u32, EngineError> {
    if e.spec() != params.field {
        return Err(FieldError::Mismatch(params.field, e.spec()).into());
    }
    Ok(e.value())
}

/// Runs one session: `commit` answers round 0, `open` every later round.
pub fn run_session(
    params: &SchemeParams,
    commit: &dyn Strategy,
    open: &dyn Strategy,
    seed: u64,
    tape: &dyn Tape,
    opts: &SessionOptions,
) -> Result<Transcript, EngineError> {
    let mut messages = Vec::with_capacity(2 * params.m as usize + 5);
    for i in 0..=params.m {
        let active: Party = params.committer(i).into();
        let a = round_challenge(params, seed, i, opts);
        messages.push(RoundMessage {
            round: i,
            from: Party::V,
            to: active,
            payload: Payload::Element(a),
        });
        let view = PartyView::new(active, i, *params, visible_with_lag(&messages, active, i, opts.lag));
        let strategy = if i == 0 { commit } else { open };
        let x = checked(params, strategy.respond(&view, tape)?)?;
        messages.push(RoundMessage {
            round: i,
            from: active,
            to: Party::V,
            payload: Payload::Element(x),
        });
    }
    let last = params.m + 1;
    let opener: Party = params.opener().into();
    messages.push(RoundMessage {
        round: last,
        from: Party::V,
        to: opener,
        payload: Payload::Open,
    });
    let view = PartyView::new(opener, last, *params, visible_with_lag(&messages, opener, last, opts.lag));
    let y = checked(params, open.respond(&view, tape)?)?;
    messages.push(RoundMessage {
        round: last,
        from: opener,
        to: Party::V,
        payload: Payload::Element(y),
    });
    let mut t = Transcript {
        params: *params,
        seed,
        messages,
        outcome: OpenOutcome::Reject,
    };
    t.outcome = t.verify()?;
    t.messages.push(RoundMessage {
        round: last,
        from: Party::V,
        to: opener,
        payload: if t.outcome.is_reject() { Payload::Reject } else { Payload::Accept },
    });
    Ok(t)
}

/// Honest provers committing to `s`, sharing the joint stream of `seed`.
pub fn run_honest_session(
    params: &SchemeParams,
    s: FieldElement,
    seed: u64,
) -> Result<Transcript, EngineError> {
    run_honest_session_with(params, s, seed, &SessionOptions::default())
}

pub fn run_honest_session_with(
    params: &SchemeParams,
    s: FieldElement,
    seed: u64,
    opts: &SessionOptions,
) -> Result<Transcript, EngineError> {
    let s = checked(params, s)?;
    if !params.in_domain(s) {
        return Err(EngineError::ValueOutOfDomain(s));
    }
    let honest = HonestProver { s };
    run_session(params, &honest, &honest, seed, &SeededTape::new(seed, &params.field), opts)
}

/// Adversarial provers sharing the joint stream of `seed`; the verifier is
/// honest.
pub fn run_attack_session(
    params: &SchemeParams,
    commit: &dyn Strategy,
    open: &dyn Strategy,
    seed: u64,
) -> Result<Transcript, EngineError> {
    run_session(
        params,
        commit,
        open,
        seed,
        &SeededTape::new(seed, &params.field),
        &SessionOptions::default(),
    )
}

impl Transcript {
    fn elements_where(&self, pred: impl Fn(&RoundMessage) -> bool) -> Vec<u32> {
        self.messages
            .iter()
            .filter(|m| pred(m))
            .filter_map(|m| match m.payload {
                Payload::Element(v) => Some(v),
                _ => None,
            })
            .collect()
    }

    pub fn challenges(&self) -> Vec<u32> {
        let m = self.params.m;
        self.elements_where(|msg| msg.from == Party::V && msg.round <= m)
    }

    pub fn responses(&self) -> Vec<u32> {
        let m = self.params.m;
        self.elements_where(|msg| msg.to == Party::V && msg.round <= m)
    }

    pub fn opening(&self) -> Option<u32> {
        let last = self.params.m + 1;
        self.elements_where(|msg| msg.to == Party::V && msg.round == last)
            .first()
            .copied()
    }

    /// Recomputes the verifier's output from the recorded messages.
    pub fn verify(&self) -> Result<OpenOutcome, EngineError> {
        let f = self.params.field;
        let wrap = |v: &u32| f.wrap(*v);
        let a: Vec<FieldElement> = self.challenges().iter().map(wrap).collect();
        let x: Vec<FieldElement> = self.responses().iter().map(wrap).collect();
        let y = self.opening().ok_or(EngineError::Parse {
            line: 0,
            msg: "transcript has no opening message".into(),
        })?;
        Ok(multiround_verify(&self.params, &a, &x, f.wrap(y))?)
    }

    /// Line-oriented text form; see the crate README for the layout.
    pub fn to_text(&self) -> String {
        let f = self.params.field;
        let mut out = format!(
            "#relcommit v1 n={} poly={:#x} m={} seed={}",
            f.bits(),
            f.poly(),
            self.params.m,
            self.seed
        );
        if self.params.domain_bits != f.bits() {
            out.push_str(&format!(" domain_bits={}", self.params.domain_bits));
        }
        out.push('\n');
        for msg in &self.messages {
            out.push_str(&msg.encode(&f));
            out.push('\n');
        }
        out.push_str(&format!("outcome={}\n", self.outcome.encode(f)));
        out
    }

    /// Parses [`Transcript::to_text`] output and checks its round structure.
    pub fn parse(text: &str) -> Result<Transcript, EngineError> {
        let err = |line: usize, msg: String| EngineError::Parse { line, msg };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty transcript".into()))?;
        let rest = header
            .strip_prefix("#relcommit v1 ")
            .ok_or_else(|| err(1, "missing '#relcommit v1' header".into()))?;
        let mut field_tokens = Vec::new();
        let (mut m, mut seed, mut domain_bits) = (None, None, None);
        for tok in rest.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| err(1, format!("bad token {tok:?}")))?;
            let bad = || err(1, format!("bad value in {tok:?}"));
            match k {
                "n" | "poly" => field_tokens.push(tok),
                "m" => m = Some(v.parse::<u32>().map_err(|_| bad())?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
                "domain_bits" => domain_bits = Some(v.parse::<u32>().map_err(|_| bad())?),
                _ => return Err(err(1, format!("unknown header key {k:?}"))),
            }
        }
        let field: FieldSpec = field_tokens
            .join(" ")
            .parse()
            .map_err(|e: FieldError| err(1, e.to_string()))?;
        let m = m.ok_or_else(|| err(1, "header lacks m".into()))?;
        let seed = seed.ok_or_else(|| err(1, "header lacks seed".into()))?;

        let mut messages = Vec::new();
        let mut outcome = None;
        let mut last_line = 1;
        for (ln, line) in lines {
            last_line = ln;
            if line.is_empty() {
                continue;
            }
            if outcome.is_some() {
                return Err(err(ln, "content after outcome line".into()));
            }
            if let Some(v) = line.strip_prefix("outcome=") {
                outcome = Some(OpenOutcome::decode(field, v).map_err(|e| err(ln, e.to_string()))?);
                continue;
            }
            messages.push(parse_message(line, &field).map_err(|msg| err(ln, msg))?);
        }
        let outcome = outcome.ok_or_else(|| err(last_line + 1, "missing outcome line".into()))?;
        let first = messages
            .get(1)
            .map(|msg| msg.from)
            .ok_or_else(|| err(last_line, "transcript has no round-0 response".into()))?;
        let first = match first {
            Party::P => Role::P,
            Party::Q => Role::Q,
            Party::V => return Err(err(3, "round-0 response sent by V".into())),
        };
        let params = SchemeParams::new(field, m, domain_bits.unwrap_or(field.bits()), first)
            .map_err(|e| err(1, e.to_string()))?;
        check_structure(&params, &messages)
            .map_err(|(idx, msg)| err(idx + 2, msg))?;
        Ok(Transcript {
            params,
            seed,
            messages,
            outcome,
        })
    }
}

fn parse_message(line: &str, field: &FieldSpec) -> Result<RoundMessage, String> {
    let mut parts = line.split(' ');
    let mut take = |key: &str| -> Result<String, String> {
        let tok = parts.next().ok_or_else(|| format!("missing {key}"))?;
        tok.strip_prefix(key)
            .and_then(|t| t.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| format!("expected {key}=, found {tok:?}"))
    };
    let round = take("round")?.parse::<u32>().map_err(|e| e.to_string())?;
    let from: Party = take("from")?.parse()?;
    let to: Party = take("to")?.parse()?;
    let payload = match take("payload")?.as_str() {
        "OPEN" => Payload::Open,
        "ACCEPT" => Payload::Accept,
        "REJECT" => Payload::Reject,
        hex => Payload::Element(field.parse_element(hex).map_err(|e| e.to_string())?.value()),
    };
    if parts.next().is_some() {
        return Err("trailing fields".into());
    }
    if from == to {
        return Err("sender equals receiver".into());
    }
    Ok(RoundMessage {
        round,
        from,
        to,
        payload,
    })
}

/// Expected message sequence for `params`, with the verdict left open.
fn check_structure(params: &SchemeParams, messages: &[RoundMessage]) -> Result<(), (usize, String)> {
    let expected = 2 * (params.m as usize + 1) + 3;
    for i in 0..=params.m {
        let active: Party = params.committer(i).into();
        let base = 2 * i as usize;
        let shape = [(Party::V, active), (active, Party::V)];
        for (k, (from, to)) in shape.iter().enumerate() {
            let idx = base + k;
            let msg = messages
                .get(idx)
                .ok_or((idx.min(messages.len()), format!("transcript ends before round {i}")))?;
            if msg.round != i || msg.from != *from || msg.to != *to || !matches!(msg.payload, Payload::Element(_)) {
                return Err((idx, format!("expected round={i} from={from} to={to} with an element")));
            }
        }
    }
    let last = params.m + 1;
    let opener: Party = params.opener().into();
    let base = 2 * (params.m as usize + 1);
    let tail = [(Party::V, opener), (opener, Party::V), (Party::V, opener)];
    for (k, (from, to)) in tail.iter().enumerate() {
        let idx = base + k;
        let msg = messages
            .get(idx)
            .ok_or((idx.min(messages.len()), "transcript ends before the opening completes".into()))?;
        let payload_ok = match k {
            0 => msg.payload == Payload::Open,
            1 => matches!(msg.payload, Payload::Element(_)),
            _ => matches!(msg.payload, Payload::Accept | Payload::Reject),
        };
        if msg.round != last || msg.from != *from || msg.to != *to || !payload_ok {
            return Err((idx, format!("unexpected message in opening round {last}")));
        }
    }
    if messages.len() != expected {
        return Err((expected, "extra messages after the verdict".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::TableTape;

    fn params(n: u32, m: u32) -> SchemeParams {
        SchemeParams::chsh(FieldSpec::new(n).unwrap(), m)
    }

    #[test]
    fn worked_trace_via_forced_randomness() {
        let p = params(3, 1);
        let f = p.field;
        // Honest y_0 = 0b101, y_1 = 0b100 and s = 0b001 give x_0 = 0b111 and
        // x_1 = y_1 + a_1·y_0 = 0b000 under a_0 = 0b010, a_1 = 0b011.
        let tape = TableTape::new(vec![vec![0b101], vec![0b100]]);
        let honest = HonestProver { s: 1 };
        let opts = SessionOptions {
            forced_challenges: Some(vec![0b010, 0b011]),
            ..Default::default()
        };
        let t = run_session(&p, &honest, &honest, 7, &tape, &opts).unwrap();
        assert_eq!(t.challenges(), vec![0b010, 0b011]);
        assert_eq!(t.responses(), vec![0b111, 0b000]);
        assert_eq!(t.opening(), Some(0b100));
        assert_eq!(t.outcome, OpenOutcome::Value(1));
        let text = t.to_text();
        assert_eq!(
            text,
            "#relcommit v1 n=3 poly=0xb m=1 seed=7\n\
             round=0 from=V to=P payload=2\n\
             round=0 from=P to=V payload=7\n\
             round=1 from=V to=Q payload=3\n\
             round=1 from=Q to=V payload=0\n\
             round=2 from=V to=P payload=OPEN\n\
             round=2 from=P to=V payload=4\n\
             round=2 from=V to=P payload=ACCEPT\n\
             outcome=1\n"
        );
        assert_eq!(f.hex_width(), 1);
        assert_eq!(Transcript::parse(&text).unwrap(), t);
    }

    #[test]
    fn honest_sessions_open_when_challenges_nonzero() {
        let p = params(8, 4);
        let s = p.field.element(1).unwrap();
        let mut seen_nonzero = 0;
        for seed in 0..200 {
            let t = run_honest_session(&p, s, seed).unwrap();
            if t.challenges().iter().all(|&a| a != 0) {
                seen_nonzero += 1;
                assert_eq!(t.outcome, OpenOutcome::Value(1));
            }
        }
        assert!(seen_nonzero > 150);
    }

    #[test]
    fn forced_zero_challenge_erases_value() {
        let p = params(8, 4);
        let s = p.field.element(0x5a).unwrap();
        let opts = SessionOptions {
            forced_challenges: Some(vec![0, 1, 2, 3, 4]),
            ..Default::default()
        };
        for seed in 0..20 {
            let t = run_honest_session_with(&p, s, seed, &opts).unwrap();
            assert!(matches!(t.outcome, OpenOutcome::Value(0) | OpenOutcome::Reject));
        }
    }

    #[test]
    fn sessions_are_deterministic() {
        let p = params(8, 4);
        let s = p.field.element(1).unwrap();
        let a = run_honest_session(&p, s, 42).unwrap().to_text();
        let b = run_honest_session(&p, s, 42).unwrap().to_text();
        assert_eq!(a, b);
        assert_ne!(a, run_honest_session(&p, s, 43).unwrap().to_text());
    }

    #[test]
    fn honest_strategies_through_attack_path_match() {
        let p = params(4, 3);
        let s = p.field.element(9).unwrap();
        let honest = HonestProver { s: 9 };
        for seed in 0..30 {
            assert_eq!(
                run_attack_session(&p, &honest, &honest, seed).unwrap(),
                run_honest_session(&p, s, seed).unwrap()
            );
        }
    }

    #[test]
    fn visibility_examples() {
        let p = params(3, 4);
        let t = run_honest_session(&p, p.field.element(1).unwrap(), 5).unwrap();
        let sees = |party, round, a_round: u32| {
            visible_history(&t, party, round)
                .unwrap()
                .iter()
                .any(|m| m.from == Party::V && m.round == a_round && matches!(m.payload, Payload::Element(_)))
        };
        // Q is active at odd rounds.
        assert!(!sees(Party::Q, 1, 0));
        assert!(sees(Party::Q, 3, 0));
        assert!(sees(Party::Q, 3, 1));
        assert!(!sees(Party::Q, 3, 2));
        assert!(sees(Party::P, 2, 0));
        assert!(!sees(Party::P, 2, 1));
        assert_eq!(visible_history(&t, Party::V, 5).unwrap(), t.messages);
        assert!(visible_history(&t, Party::V, 6).is_err());
    }

    struct Peeker;
    impl Strategy for Peeker {
        fn respond(&self, view: &PartyView, tape: &dyn Tape) -> Result<FieldElement, EngineError> {
            let i = view.round();
            if i >= 1 {
                view.challenge(i - 1)?;
            }
            HonestProver { s: 0 }.respond(view, tape)
        }
    }

    #[test]
    fn reading_previous_challenge_is_a_violation() {
        let p = params(3, 2);
        let err = run_attack_session(&p, &HonestProver { s: 0 }, &Peeker, 1).unwrap_err();
        assert!(matches!(err, EngineError::ProtocolViolation { party: Party::Q, round: 1, .. }));
        // A transfer lag of 1 makes the peek legal.
        let opts = SessionOptions {
            lag: 1,
            ..Default::default()
        };
        let tape = SeededTape::new(1, &p.field);
        assert!(run_session(&p, &HonestProver { s: 0 }, &Peeker, 1, &tape, &opts).is_ok());
    }

    #[test]
    fn replay_against_visible_history_reproduces_transcript() {
        let p = params(4, 3);
        let honest = HonestProver { s: 3 };
        for seed in 0..20 {
            let t = run_attack_session(&p, &honest, &honest, seed).unwrap();
            let tape = SeededTape::new(seed, &p.field);
            for (idx, msg) in t.messages.iter().enumerate() {
                if msg.from == Party::V {
                    continue;
                }
                let prefix = &t.messages[..idx];
                let view = PartyView::new(msg.from, msg.round, p, visible_with_lag(prefix, msg.from, msg.round, DEFAULT_LAG));
                assert_eq!(view.messages(), visible_history(&t, msg.from, msg.round).unwrap()
                    .into_iter()
                    .filter(|m| prefix.contains(m))
                    .collect::<Vec<_>>());
                let replayed = honest.respond(&view, &tape).unwrap();
                assert_eq!(Payload::Element(replayed.value()), msg.payload);
            }
        }
    }

    #[test]
    fn parse_reports_line_numbers() {
        let p = params(3, 1);
        let t = run_honest_session(&p, p.field.element(1).unwrap(), 3).unwrap();
        let text = t.to_text();
        let truncated: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Transcript::parse(&truncated), Err(EngineError::Parse { line: 5, .. })));
        let bad = text.replace("round=1 from=V to=Q", "round=1 from=V to=V");
        assert!(matches!(Transcript::parse(&bad), Err(EngineError::Parse { line: 4, .. })));
        assert!(matches!(Transcript::parse(""), Err(EngineError::Parse { line: 1, .. })));
    }

    #[test]
    fn domain_restriction_round_trips() {
        let p = SchemeParams::new(FieldSpec::new(4).unwrap(), 2, 1, Role::Q).unwrap();
        let t = run_honest_session(&p, p.field.element(1).unwrap(), 11).unwrap();
        assert!(t.to_text().starts_with("#relcommit v1 n=4 poly=0x13 m=2 seed=11 domain_bits=1\n"));
        assert_eq!(Transcript::parse(&t.to_text()).unwrap(), t);
        assert!(matches!(
            run_honest_session(&p, p.field.element(2).unwrap(), 1),
            Err(EngineError::ValueOutOfDomain(2))
        ));
    }
}
