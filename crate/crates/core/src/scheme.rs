//! The CHSH^n string commitment, its opening rule, domain restriction, and
//! the composition operator that stacks commitments into the multi-round
//! sustain protocol.
//!
//! A commitment is the commit-phase communication `(a, x)`: the verifier's
//! challenge and the committing prover's response `x = r + a·s`. Opening
//! sends a single string `y`; the verifier recovers `s` from `x + y = a·s`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("expected {expected} {what}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("domain of {k} bits is invalid for a field of {n} bits")]
    InvalidDomain { k: u32, n: u32 },
    #[error("n={n} exceeds the exhaustive-enumeration limit of {max}; choose a smaller field")]
    TooLarge { n: u32, max: u32 },
    #[error("ineligible pair: {0}")]
    Ineligible(String),
    #[error("descriptor is not a plain multi-round CHSH scheme: {0}")]
    NotMultiRound(String),
    #[error("malformed scheme config: {0}")]
    Config(String),
}

/// One of the two provers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    P,
    Q,
}

impl Role {
    pub fn other(self) -> Role {
        match self {
            Role::P => Role::Q,
            Role::Q => Role::P,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::P => "P",
            Role::Q => "Q",
        })
    }
}

impl FromStr for Role {
    type Err = SchemeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P" | "p" => Ok(Role::P),
            "Q" | "q" => Ok(Role::Q),
            _ => Err(SchemeError::Config(format!("unknown role {s:?}"))),
        }
    }
}

/// The pair `(a, x)` exchanged in one commit round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub a: FieldElement,
    pub x: FieldElement,
}

impl Commitment {
    pub fn new(a: FieldElement, x: FieldElement) -> Result<Self, SchemeError> {
        if a.spec() != x.spec() {
            return Err(FieldError::Mismatch(a.spec(), x.spec()).into());
        }
        Ok(Self { a, x })
    }
}

/// The verifier's output after opening: a value, or rejection (⊥).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpenOutcome {
    Value(u32),
    Reject,
}

impl OpenOutcome {
    pub fn value(&self) -> Option<u32> {
        match self {
            OpenOutcome::Value(v) => Some(*v),
            OpenOutcome::Reject => None,
        }
    }

    pub fn is_reject(&self) -> bool {
        matches!(self, OpenOutcome::Reject)
    }

    /// Transcript encoding: element hex in `field`, or `BOT`.
    pub fn encode(&self, field: FieldSpec) -> String {
        match self {
            OpenOutcome::Value(v) => field.wrap(*v).to_hex(),
            OpenOutcome::Reject => "BOT".to_string(),
        }
    }

    pub fn decode(field: FieldSpec, s: &str) -> Result<Self, FieldError> {
        if s == "BOT" {
            Ok(OpenOutcome::Reject)
        } else {
            Ok(OpenOutcome::Value(field.parse_element(s)?.value()))
        }
    }
}

/// Honest committer response `x = r + a·s`.
pub fn chsh_response(
    s: FieldElement,
    r: FieldElement,
    a: FieldElement,
) -> Result<FieldElement, FieldError> {
    r.add(a.mul(s)?)
}

#[inline]
pub(crate) fn extr_raw(field: &FieldSpec, y: u32, a: u32, x: u32) -> OpenOutcome {
    match field.inv_raw(a) {
        Some(inv) => OpenOutcome::Value(field.mul_raw(x ^ y, inv)),
        None if x == y => OpenOutcome::Value(0),
        None => OpenOutcome::Reject,
    }
}

#[inline]
pub(crate) fn extr_bit_raw(y: u32, a: u32, x: u32) -> OpenOutcome {
    let d = x ^ y;
    if d == 0 {
        OpenOutcome::Value(0)
    } else if a != 0 && d == a {
        OpenOutcome::Value(1)
    } else {
        OpenOutcome::Reject
    }
}

/// String opening: `s = (x + y)·a⁻¹`.
///
/// At `a = 0` every `s` satisfies `x + y = a·s` when `x = y`; the canonical
/// value 0 is returned then, and ⊥ otherwise.
pub fn extr(y: FieldElement, c: &Commitment) -> Result<OpenOutcome, FieldError> {
    y.add(c.x)?;
    Ok(extr_raw(&y.spec(), y.value(), c.a.value(), c.x.value()))
}

/// Bit opening: the smaller bit `b` with `x + y = a·b`, or ⊥.
pub fn extr_bit(y: FieldElement, c: &Commitment) -> Result<OpenOutcome, FieldError> {
    y.add(c.x)?;
    Ok(extr_bit_raw(y.value(), c.a.value(), c.x.value()))
}

/// Keeps the low `k` bits of an opened value if the upper `n - k` padding
/// bits are zero; ⊥ otherwise.
pub fn restrict_domain(
    outcome: OpenOutcome,
    k: u32,
    field: &FieldSpec,
) -> Result<OpenOutcome, SchemeError> {
    if k == 0 || k > field.bits() {
        return Err(SchemeError::InvalidDomain { k, n: field.bits() });
    }
    Ok(match outcome {
        OpenOutcome::Value(v) if v >> k == 0 => OpenOutcome::Value(v),
        _ => OpenOutcome::Reject,
    })
}

/// Deterministic opening rules a scheme descriptor may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExtrRule {
    /// CHSH^n string opening.
    Chsh,
    /// CHSH^n restricted to a bit.
    ChshBit,
    /// Coin-flip toy scheme: the commitment's low bit decides whether the
    /// announced bit is accepted (1) or everything is rejected (0).
    CoinFlip,
    /// Toy rule ignoring the commitment and dropping the low bit of `y`, so
    /// two strings open to each value.
    DropLowBit,
}

impl ExtrRule {
    pub fn apply(&self, field: &FieldSpec, y: u32, c: (u32, u32)) -> OpenOutcome {
        let (a, x) = c;
        match self {
            ExtrRule::Chsh => extr_raw(field, y, a, x),
            ExtrRule::ChshBit => extr_bit_raw(y, a, x),
            ExtrRule::CoinFlip => {
                if a & 1 == 1 && y <= 1 {
                    OpenOutcome::Value(y)
                } else {
                    OpenOutcome::Reject
                }
            }
            ExtrRule::DropLowBit => OpenOutcome::Value(y >> 1),
        }
    }
}

/// Largest field for which `k_of_extr` enumerates all `(c, y)`.
pub const K_ENUMERATION_MAX_BITS: u32 = 8;

/// `k(S)`: the largest number of opening strings that open one commitment to
/// the same (non-⊥) value, by exhaustive enumeration.
pub fn k_of_extr(rule: ExtrRule, field: &FieldSpec) -> Result<u64, SchemeError> {
    if field.bits() > K_ENUMERATION_MAX_BITS {
        return Err(SchemeError::TooLarge {
            n: field.bits(),
            max: K_ENUMERATION_MAX_BITS,
        });
    }
    let q = field.order() as usize;
    let mut counts = vec![0u64; q];
    let mut best = 0;
    for a in 0..q as u32 {
        for x in 0..q as u32 {
            counts.iter_mut().for_each(|c| *c = 0);
            for y in 0..q as u32 {
                if let OpenOutcome::Value(s) = rule.apply(field, y, (a, x)) {
                    counts[s as usize] += 1;
                }
            }
            best = best.max(counts.iter().copied().max().unwrap_or(0));
        }
    }
    Ok(best)
}

/// Parameters of a multi-round CHSH^n session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeParams {
    pub field: FieldSpec,
    /// Number of sustain rounds after the commit round.
    pub m: u32,
    /// Committed values live in `{0,1}^domain_bits`, zero-padded to `n` bits.
    pub domain_bits: u32,
    pub first_committer: Role,
}

impl SchemeParams {
    pub fn new(
        field: FieldSpec,
        m: u32,
        domain_bits: u32,
        first_committer: Role,
    ) -> Result<Self, SchemeError> {
        if domain_bits == 0 || domain_bits > field.bits() {
            return Err(SchemeError::InvalidDomain {
                k: domain_bits,
                n: field.bits(),
            });
        }
        Ok(Self {
            field,
            m,
            domain_bits,
            first_committer,
        })
    }

    /// Full-width string domain, P commits first.
    pub fn chsh(field: FieldSpec, m: u32) -> Self {
        Self {
            field,
            m,
            domain_bits: field.bits(),
            first_committer: Role::P,
        }
    }

    /// Prover answering the challenge of `round` (0..=m).
    pub fn committer(&self, round: u32) -> Role {
        if round % 2 == 0 {
            self.first_committer
        } else {
            self.first_committer.other()
        }
    }

    /// Prover sending the final opening string.
    pub fn opener(&self) -> Role {
        self.committer(self.m).other()
    }

    pub fn in_domain(&self, value: u32) -> bool {
        value >> self.domain_bits == 0
    }

    pub fn to_config(&self) -> String {
        format!(
            "scheme=chsh n={} poly={:#x} m={} domain_bits={} first_committer={}",
            self.field.bits(),
            self.field.poly(),
            self.m,
            self.domain_bits,
            self.first_committer
        )
    }
}

impl FromStr for SchemeParams {
    type Err = SchemeError;

    /// Parses the flat `key=value` form written by [`SchemeParams::to_config`];
    /// `poly`, `m`, `domain_bits` and `first_committer` are optional.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut field_tokens = Vec::new();
        let mut m = 0;
        let mut domain_bits = None;
        let mut first = Role::P;
        for tok in s.split_whitespace() {
            let (key, value) = tok
                .split_once('=')
                .ok_or_else(|| SchemeError::Config(tok.to_string()))?;
            let bad = || SchemeError::Config(tok.to_string());
            match key {
                "scheme" if value == "chsh" => {}
                "n" | "poly" => field_tokens.push(tok),
                "m" => m = value.parse().map_err(|_| bad())?,
                "domain_bits" => domain_bits = Some(value.parse().map_err(|_| bad())?),
                "first_committer" => first = value.parse()?,
                _ => return Err(bad()),
            }
        }
        let field: FieldSpec = field_tokens.join(" ").parse()?;
        SchemeParams::new(field, m, domain_bits.unwrap_or(field.bits()), first)
    }
}

/// Back-substitutes `y_{i-1} = (x_i + y_i)·a_i⁻¹` for `i = m..1` and opens the
/// round-0 commitment with the string rule. A degenerate level (`a_i = 0`)
/// follows [`extr`]: canonical 0 when `x_i = y_i`, ⊥ otherwise.
pub fn multiround_open(
    challenges: &[FieldElement],
    responses: &[FieldElement],
    y_last: FieldElement,
) -> Result<OpenOutcome, SchemeError> {
    if challenges.is_empty() {
        return Err(SchemeError::LengthMismatch {
            what: "challenges",
            expected: 1,
            got: 0,
        });
    }
    if challenges.len() != responses.len() {
        return Err(SchemeError::LengthMismatch {
            what: "responses",
            expected: challenges.len(),
            got: responses.len(),
        });
    }
    let field = y_last.spec();
    for e in challenges.iter().chain(responses) {
        if e.spec() != field {
            return Err(FieldError::Mismatch(field, e.spec()).into());
        }
    }
    let raw_a: Vec<u32> = challenges.iter().map(|e| e.value()).collect();
    let raw_x: Vec<u32> = responses.iter().map(|e| e.value()).collect();
    Ok(multiround_open_raw(&field, &raw_a, &raw_x, y_last.value()))
}

pub(crate) fn multiround_open_raw(field: &FieldSpec, a: &[u32], x: &[u32], y_last: u32) -> OpenOutcome {
    let mut y = y_last;
    for i in (0..a.len()).rev() {
        match extr_raw(field, y, a[i], x[i]) {
            OpenOutcome::Value(v) => y = v,
            OpenOutcome::Reject => return OpenOutcome::Reject,
        }
    }
    OpenOutcome::Value(y)
}

/// [`multiround_open`] followed by the restriction to the session's domain.
pub fn multiround_verify(
    params: &SchemeParams,
    challenges: &[FieldElement],
    responses: &[FieldElement],
    y_last: FieldElement,
) -> Result<OpenOutcome, SchemeError> {
    let rounds = params.m as usize + 1;
    if challenges.len() != rounds {
        return Err(SchemeError::LengthMismatch {
            what: "challenges",
            expected: rounds,
            got: challenges.len(),
        });
    }
    if y_last.spec() != params.field {
        return Err(FieldError::Mismatch(params.field, y_last.spec()).into());
    }
    let s = multiround_open(challenges, responses, y_last)?;
    restrict_domain(s, params.domain_bits, &params.field)
}

/// One commit stage: which prover answers the challenge, and how the
/// verifier reads the string that opens this stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub committer: Role,
    pub extr: ExtrRule,
}

/// A two-prover scheme as data: its commit stages in order and the prover
/// sending the final string. A scheme with one stage opens with a single
/// string via that stage's rule; a composed scheme opens each earlier stage
/// by committing to its opening string in the next one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeDescriptor {
    pub name: String,
    pub field: FieldSpec,
    pub domain_bits: u32,
    pub stages: Vec<Stage>,
    pub opener: Role,
}

impl SchemeDescriptor {
    /// CHSH^n: P commits, Q opens.
    pub fn chsh(field: FieldSpec) -> Self {
        Self {
            name: "CHSH".into(),
            field,
            domain_bits: field.bits(),
            stages: vec![Stage {
                committer: Role::P,
                extr: ExtrRule::Chsh,
            }],
            opener: Role::Q,
        }
    }

    /// The coin-flip separation fixture: a one-bit scheme that accepts or
    /// rejects everything depending on the verifier's coin.
    pub fn coin_flip() -> Self {
        Self {
            name: "COINFLIP".into(),
            field: FieldSpec::new(1).expect("GF(2)"),
            domain_bits: 1,
            stages: vec![Stage {
                committer: Role::P,
                extr: ExtrRule::CoinFlip,
            }],
            opener: Role::Q,
        }
    }

    /// Same scheme with P and Q exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            name: format!("X{}", self.name),
            field: self.field,
            domain_bits: self.domain_bits,
            stages: self
                .stages
                .iter()
                .map(|s| Stage {
                    committer: s.committer.other(),
                    extr: s.extr,
                })
                .collect(),
            opener: self.opener.other(),
        }
    }

    pub fn committer(&self) -> Role {
        self.stages[0].committer
    }

    /// Whether the opening is a single announced string read by a
    /// deterministic rule.
    pub fn opens_with_single_string(&self) -> bool {
        self.stages.len() == 1
    }

    /// Length in bits of the opening string of a single-string scheme.
    pub fn opening_bits(&self) -> u32 {
        self.field.bits()
    }

    /// The `m`-fold self-composition `S ⋆ XS ⋆ S ⋆ …` of CHSH^n, built with
    /// [`compose`] from the innermost term outwards.
    pub fn multi_round(field: FieldSpec, m: u32) -> Self {
        let base = Self::chsh(field);
        let term = |i: u32| if i % 2 == 0 { base.clone() } else { base.swapped() };
        let mut acc = term(m);
        for i in (0..m).rev() {
            acc = compose(&term(i), &acc).expect("alternating CHSH terms are eligible");
        }
        acc
    }

    /// Session parameters for a descriptor made of alternating CHSH stages.
    pub fn to_params(&self) -> Result<SchemeParams, SchemeError> {
        for (i, st) in self.stages.iter().enumerate() {
            if st.extr != ExtrRule::Chsh {
                return Err(SchemeError::NotMultiRound(format!(
                    "stage {i} uses {:?}",
                    st.extr
                )));
            }
            if i > 0 && st.committer == self.stages[i - 1].committer {
                return Err(SchemeError::NotMultiRound(format!(
                    "stages {} and {i} share a committer",
                    i - 1
                )));
            }
        }
        let last = self.stages.last().expect("non-empty stages").committer;
        if self.opener != last.other() {
            return Err(SchemeError::NotMultiRound("opener must be the idle prover".into()));
        }
        SchemeParams::new(
            self.field,
            self.stages.len() as u32 - 1,
            self.domain_bits,
            self.committer(),
        )
    }
}

/// Outcome of the eligibility check, with the failed condition on `false`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eligibility {
    pub eligible: bool,
    pub reason: String,
}

/// Whether `(first, second)` can be composed: `first` commits via one prover
/// and opens with a single string via the other, `second` commits via that
/// other prover, and `second`'s domain holds `first`'s opening strings.
pub fn check_eligible(first: &SchemeDescriptor, second: &SchemeDescriptor) -> Eligibility {
    let fail = |reason: String| Eligibility {
        eligible: false,
        reason,
    };
    if !first.opens_with_single_string() {
        return fail(format!(
            "{} does not open with a single string (it has {} commit stages)",
            first.name,
            first.stages.len()
        ));
    }
    if first.committer() == first.opener {
        return fail(format!(
            "{} commits and opens via the same prover {}",
            first.name, first.opener
        ));
    }
    if second.committer() != first.opener {
        return fail(format!(
            "{} commits via {} but {} opens via {}",
            second.name,
            second.committer(),
            first.name,
            first.opener
        ));
    }
    if first.field != second.field {
        return fail(format!("fields differ ({} vs {})", first.field, second.field));
    }
    if second.domain_bits < first.opening_bits() {
        return fail(format!(
            "{} has a {}-bit domain, too small for {}-bit opening strings",
            second.name,
            second.domain_bits,
            first.opening_bits()
        ));
    }
    Eligibility {
        eligible: true,
        reason: "eligible".into(),
    }
}

/// `first ⋆ second`: commit with `first`, then open by committing to the
/// opening string with `second` and opening that.
pub fn compose(
    first: &SchemeDescriptor,
    second: &SchemeDescriptor,
) -> Result<SchemeDescriptor, SchemeError> {
    let e = check_eligible(first, second);
    if !e.eligible {
        return Err(SchemeError::Ineligible(e.reason));
    }
    let mut stages = first.stages.clone();
    stages.extend_from_slice(&second.stages);
    Ok(SchemeDescriptor {
        name: format!("{}*({})", first.name, second.name),
        field: first.field,
        domain_bits: first.domain_bits,
        stages,
        opener: second.opener,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldSpec {
        FieldSpec::with_poly(3, 0b1011).unwrap()
    }

    fn el(v: u32) -> FieldElement {
        gf8().element(v as u64).unwrap()
    }

    fn com(a: u32, x: u32) -> Commitment {
        Commitment::new(el(a), el(x)).unwrap()
    }

    #[test]
    fn response_examples() {
        // r + a·s with a·s = 0b010·0b001 = 0b010.
        assert_eq!(chsh_response(el(0b001), el(0b101), el(0b010)).unwrap(), el(0b111));
        for s in gf8().elements() {
            assert_eq!(chsh_response(s, el(0b110), el(0)).unwrap(), el(0b110));
        }
        for a in gf8().elements() {
            assert_eq!(chsh_response(el(0), el(0b011), a).unwrap(), el(0b011));
        }
    }

    #[test]
    fn extr_examples() {
        assert_eq!(extr(el(0b101), &com(0b010, 0b111)).unwrap(), OpenOutcome::Value(0b001));
        assert_eq!(extr(el(0b011), &com(0, 0b011)).unwrap(), OpenOutcome::Value(0));
        assert_eq!(extr(el(0b010), &com(0, 0b011)).unwrap(), OpenOutcome::Reject);
    }

    #[test]
    fn extr_bit_examples() {
        let c = com(0b110, 0b011);
        assert_eq!(extr_bit(el(0b011), &c).unwrap(), OpenOutcome::Value(0));
        assert_eq!(extr_bit(el(0b011 ^ 0b110), &c).unwrap(), OpenOutcome::Value(1));
        assert_eq!(extr_bit(el(0b000), &c).unwrap(), OpenOutcome::Reject);
        assert_eq!(extr_bit(el(0b011), &com(0, 0b011)).unwrap(), OpenOutcome::Value(0));
    }

    #[test]
    fn restrict_examples() {
        let f = gf8();
        assert_eq!(restrict_domain(OpenOutcome::Value(1), 1, &f).unwrap(), OpenOutcome::Value(1));
        assert_eq!(restrict_domain(OpenOutcome::Value(0b101), 1, &f).unwrap(), OpenOutcome::Reject);
        assert_eq!(restrict_domain(OpenOutcome::Reject, 1, &f).unwrap(), OpenOutcome::Reject);
        assert!(restrict_domain(OpenOutcome::Value(0), 4, &f).is_err());
    }

    #[test]
    fn extr_is_bijective_for_nonzero_challenge() {
        for n in 1..=4 {
            let f = FieldSpec::new(n).unwrap();
            for a in 1..f.order() as u32 {
                for x in 0..f.order() as u32 {
                    let mut seen = vec![false; f.order() as usize];
                    for y in 0..f.order() as u32 {
                        let s = extr_raw(&f, y, a, x).value().unwrap();
                        assert!(!seen[s as usize]);
                        seen[s as usize] = true;
                    }
                }
            }
        }
    }

    #[test]
    fn bit_opening_agrees_with_restricted_string_opening() {
        for n in 1..=3 {
            let f = FieldSpec::new(n).unwrap();
            for a in f.elements() {
                for x in f.elements() {
                    let c = Commitment::new(a, x).unwrap();
                    for y in f.elements() {
                        let b = extr_bit(y, &c).unwrap();
                        if !b.is_reject() {
                            let s = restrict_domain(extr(y, &c).unwrap(), 1, &f).unwrap();
                            assert_eq!(s, b);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(k_of_extr(ExtrRule::Chsh, &FieldSpec::new(2).unwrap()).unwrap(), 1);
        assert_eq!(k_of_extr(ExtrRule::Chsh, &FieldSpec::new(4).unwrap()).unwrap(), 1);
        assert_eq!(k_of_extr(ExtrRule::DropLowBit, &FieldSpec::new(3).unwrap()).unwrap(), 2);
        assert!(matches!(
            k_of_extr(ExtrRule::Chsh, &FieldSpec::new(9).unwrap()),
            Err(SchemeError::TooLarge { .. })
        ));
    }

    #[test]
    fn verify_examples() {
        let p = SchemeParams::chsh(gf8(), 1);
        let a = [el(0b010), el(0b011)];
        let x = [el(0b111), el(0b000)];
        assert_eq!(multiround_verify(&p, &a, &x, el(0b100)).unwrap(), OpenOutcome::Value(0b001));
        assert_eq!(multiround_verify(&p, &a, &x, el(0b000)).unwrap(), OpenOutcome::Value(0b110));
        let p0 = SchemeParams::chsh(gf8(), 0);
        assert_eq!(
            multiround_verify(&p0, &a[..1], &x[..1], el(0b101)).unwrap(),
            extr(el(0b101), &com(0b010, 0b111)).unwrap()
        );
        assert!(matches!(
            multiround_verify(&p, &a, &x[..1], el(0)),
            Err(SchemeError::LengthMismatch { .. })
        ));
        assert!(matches!(
            multiround_verify(&p0, &a, &x, el(0)),
            Err(SchemeError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_level_rejects_or_resets() {
        let p = SchemeParams::chsh(gf8(), 1);
        let a = [el(0b010), el(0)];
        assert_eq!(
            multiround_verify(&p, &a, &[el(0b111), el(0b011)], el(0b001)).unwrap(),
            OpenOutcome::Reject
        );
        // x_1 = y_1 at a_1 = 0 resets y_0 to the canonical 0.
        assert_eq!(
            multiround_verify(&p, &a, &[el(0b111), el(0b011)], el(0b011)).unwrap(),
            extr(el(0), &com(0b010, 0b111)).unwrap()
        );
    }

    #[test]
    fn honest_round_trip_exhaustive() {
        // All s, r_0..r_m and nonzero a_0..a_m for n <= 3, m <= 2 (n=3, m=2 is
        // 8^3 * 7^3 * 8 combinations; keep it to n <= 2 for m = 2).
        for n in 1..=3u32 {
            let f = FieldSpec::new(n).unwrap();
            let q = f.order() as u32;
            for m in 0..=2u32 {
                if n == 3 && m == 2 {
                    continue;
                }
                let rounds = m as usize + 1;
                let total_r = q.pow(rounds as u32);
                let total_a = (q - 1).pow(rounds as u32);
                for s in 0..q {
                    for ri in 0..total_r {
                        let r: Vec<u32> = (0..rounds).map(|i| (ri / q.pow(i as u32)) % q).collect();
                        for ai in 0..total_a {
                            let a: Vec<u32> = (0..rounds)
                                .map(|i| 1 + (ai / (q - 1).pow(i as u32)) % (q - 1))
                                .collect();
                            let mut x = vec![f.mul_raw(a[0], s) ^ r[0]];
                            for i in 1..rounds {
                                x.push(r[i] ^ f.mul_raw(a[i], r[i - 1]));
                            }
                            assert_eq!(
                                multiround_open_raw(&f, &a, &x, r[rounds - 1]),
                                OpenOutcome::Value(s)
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn eligibility_examples() {
        let f = FieldSpec::new(4).unwrap();
        let s = SchemeDescriptor::chsh(f);
        let xs = s.swapped();
        assert!(check_eligible(&s, &xs).eligible);
        let e = check_eligible(&s, &s);
        assert!(!e.eligible);
        assert!(e.reason.contains("commits via P"), "{}", e.reason);
        let s_xs = compose(&s, &xs).unwrap();
        assert!(check_eligible(&xs, &s_xs).eligible);
        // A composed scheme opens through both provers, not with one string.
        assert!(!check_eligible(&s_xs, &s).eligible);
        assert!(matches!(compose(&s, &s), Err(SchemeError::Ineligible(_))));
    }

    #[test]
    fn eligibility_checks_domain() {
        let f = FieldSpec::new(4).unwrap();
        let s = SchemeDescriptor::chsh(f);
        let mut narrow = s.swapped();
        narrow.domain_bits = 2;
        let e = check_eligible(&s, &narrow);
        assert!(!e.eligible);
        assert!(e.reason.contains("domain"));
    }

    #[test]
    fn multi_round_composition_matches_direct_params() {
        let f = FieldSpec::new(3).unwrap();
        assert_eq!(SchemeDescriptor::multi_round(f, 0), SchemeDescriptor::chsh(f));
        for m in 0..6 {
            let d = SchemeDescriptor::multi_round(f, m);
            assert_eq!(d.to_params().unwrap(), SchemeParams::chsh(f, m));
            let roles: Vec<Role> = d.stages.iter().map(|s| s.committer).collect();
            let expect: Vec<Role> = (0..=m).map(|i| SchemeParams::chsh(f, m).committer(i)).collect();
            assert_eq!(roles, expect);
        }
    }

    #[test]
    fn params_config_round_trip() {
        let p = SchemeParams::new(FieldSpec::new(8).unwrap(), 4, 1, Role::Q).unwrap();
        let text = p.to_config();
        assert_eq!(text, "scheme=chsh n=8 poly=0x11b m=4 domain_bits=1 first_committer=Q");
        assert_eq!(text.parse::<SchemeParams>().unwrap(), p);
        assert_eq!(
            "n=3 m=2".parse::<SchemeParams>().unwrap(),
            SchemeParams::chsh(FieldSpec::new(3).unwrap(), 2)
        );
        assert!("n=3 m=2 domain_bits=4".parse::<SchemeParams>().is_err());
        assert!("scheme=other n=3".parse::<SchemeParams>().is_err());
    }

    #[test]
    fn roles_alternate() {
        let p = SchemeParams::chsh(gf8(), 3);
        assert_eq!(p.committer(0), Role::P);
        assert_eq!(p.committer(1), Role::Q);
        assert_eq!(p.opener(), Role::P);
        assert_eq!(SchemeParams::chsh(gf8(), 0).opener(), Role::Q);
    }
}
