//! Networked sessions: V, P and Q as separate endpoints over TCP, with the
//! verifier timing every response against a per-round deadline.
//!
//! Frame layout: 4-byte big-endian length (`3 + body`), 1-byte type, 2-byte
//! big-endian round, body. Field elements travel as `⌈n/8⌉` big-endian
//! bytes. A RESULT body is the opened value, or `⌈n/8⌉ + 1` bytes of `0xff`
//! for ⊥. An ABORT body is one reason byte.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::engine::{Party, Payload, RoundMessage, Transcript};
use crate::field::{FieldElement, FieldSpec};
use crate::rng::{self, SeededTape, Tape};
use crate::scheme::{OpenOutcome, Role, SchemeParams};

/// Largest accepted value of the length prefix.
pub const MAX_FRAME_LEN: u32 = 1 << 16;
pub const MAGIC: &[u8; 8] = b"RELCOMIT";
pub const VERSION: u8 = 1;
const HANDSHAKE_LEN: usize = 8 + 1 + 1 + 1 + 4 + 4 + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("frame length {0} exceeds the limit")]
    Oversize(u32),
    #[error("frame length {0} is shorter than its header")]
    Underflow(u32),
    #[error("unknown frame type {0:#04x}")]
    UnknownType(u8),
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("session aborted by verifier: {0:?}")]
    Aborted(AbortReason),
    #[error("deadline of {0} ms must be positive")]
    Deadline(u64),
}

impl From<io::Error> for NetError {
    fn from(e: io::Error) -> Self {
        NetError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameType {
    Challenge = 0x01,
    Response = 0x02,
    Open = 0x03,
    Result = 0x04,
    Abort = 0x05,
}

impl TryFrom<u8> for FrameType {
    type Error = NetError;

    fn try_from(b: u8) -> Result<Self, NetError> {
        Ok(match b {
            0x01 => FrameType::Challenge,
            0x02 => FrameType::Response,
            0x03 => FrameType::Open,
            0x04 => FrameType::Result,
            0x05 => FrameType::Abort,
            other => return Err(NetError::UnknownType(other)),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbortReason {
    Deadline = 0x01,
    Malformed = 0x02,
    ConnectionLost = 0x03,
    Handshake = 0x04,
}

impl AbortReason {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => AbortReason::Deadline,
            0x02 => AbortReason::Malformed,
            0x03 => AbortReason::ConnectionLost,
            0x04 => AbortReason::Handshake,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WireMessage {
    pub kind: FrameType,
    pub round: u16,
    pub body: Vec<u8>,
}

impl WireMessage {
    pub fn element(kind: FrameType, round: u16, e: FieldElement) -> Self {
        Self {
            kind,
            round,
            body: e.to_be_bytes(),
        }
    }

    pub fn abort(round: u16, reason: AbortReason) -> Self {
        Self {
            kind: FrameType::Abort,
            round,
            body: vec![reason as u8],
        }
    }

    pub fn result(round: u16, field: &FieldSpec, outcome: OpenOutcome) -> Self {
        let body = match outcome {
            OpenOutcome::Value(v) => field.wrap(v).to_be_bytes(),
            OpenOutcome::Reject => vec![0xff; field.byte_width() + 1],
        };
        Self {
            kind: FrameType::Result,
            round,
            body,
        }
    }

    pub fn frame(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + self.body.len());
        out.extend_from_slice(&(3 + self.body.len() as u32).to_be_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.body);
        out
    }

    /// Decodes exactly one frame.
    pub fn parse(bytes: &[u8]) -> Result<Self, NetError> {
        if bytes.len() < 4 {
            return Err(NetError::Malformed(format!("{} bytes, no length prefix", bytes.len())));
        }
        let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
        check_len(len)?;
        if bytes.len() != 4 + len as usize {
            return Err(NetError::Malformed(format!(
                "length prefix {len} but {} bytes follow",
                bytes.len() - 4
            )));
        }
        Self::from_parts(&bytes[4..])
    }

    fn from_parts(rest: &[u8]) -> Result<Self, NetError> {
        Ok(Self {
            kind: FrameType::try_from(rest[0])?,
            round: u16::from_be_bytes([rest[1], rest[2]]),
            body: rest[3..].to_vec(),
        })
    }

    /// The body as one field element of `field`.
    pub fn element_body(&self, field: &FieldSpec) -> Result<FieldElement, NetError> {
        if self.body.len() != field.byte_width() {
            return Err(NetError::Malformed(format!(
                "body of {} bytes, expected {}",
                self.body.len(),
                field.byte_width()
            )));
        }
        let v = self.body.iter().fold(0u64, |acc, &b| acc << 8 | b as u64);
        field.element(v).map_err(|e| NetError::Malformed(e.to_string()))
    }

    pub fn outcome_body(&self, field: &FieldSpec) -> Result<OpenOutcome, NetError> {
        if self.body.len() == field.byte_width() + 1 && self.body.iter().all(|&b| b == 0xff) {
            return Ok(OpenOutcome::Reject);
        }
        Ok(OpenOutcome::Value(self.element_body(field)?.value()))
    }
}

fn check_len(len: u32) -> Result<(), NetError> {
    if len > MAX_FRAME_LEN {
        return Err(NetError::Oversize(len));
    }
    if len < 3 {
        return Err(NetError::Underflow(len));
    }
    Ok(())
}

/// Why reading a frame failed, as the verifier classifies it.
#[derive(Debug)]
enum ReadFailure {
    /// Nothing arrived before the read timeout.
    Timeout,
    /// Connection closed before any byte of the frame.
    Closed,
    Malformed(NetError),
}

fn classify(e: io::Error, started: bool) -> ReadFailure {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => ReadFailure::Timeout,
        io::ErrorKind::UnexpectedEof if started => {
            ReadFailure::Malformed(NetError::Malformed("connection closed mid-frame".into()))
        }
        _ => ReadFailure::Closed,
    }
}

fn read_frame_inner(stream: &mut impl Read) -> Result<WireMessage, ReadFailure> {
    let mut len_buf = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match stream.read(&mut len_buf[got..]) {
            Ok(0) if got == 0 => return Err(ReadFailure::Closed),
            Ok(0) => return Err(classify(io::ErrorKind::UnexpectedEof.into(), true)),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(classify(e, got > 0)),
        }
    }
    let len = u32::from_be_bytes(len_buf);
    check_len(len).map_err(ReadFailure::Malformed)?;
    let mut rest = vec![0u8; len as usize];
    stream.read_exact(&mut rest).map_err(|e| classify(e, true))?;
    WireMessage::from_parts(&rest).map_err(ReadFailure::Malformed)
}

/// Reads one frame from a stream.
pub fn read_frame(stream: &mut impl Read) -> Result<WireMessage, NetError> {
    read_frame_inner(stream).map_err(|f| match f {
        ReadFailure::Timeout => NetError::Io("read timed out".into()),
        ReadFailure::Closed => NetError::Io("connection closed".into()),
        ReadFailure::Malformed(e) => e,
    })
}

pub fn write_frame(stream: &mut impl Write, msg: &WireMessage) -> Result<(), NetError> {
    stream.write_all(&msg.frame())?;
    stream.flush()?;
    Ok(())
}

/// Opening message of each side: magic, version, role, then the session
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Handshake {
    pub role: Party,
    pub n: u8,
    pub poly: u32,
    pub m: u32,
    pub domain_bits: u8,
}

impl Handshake {
    pub fn new(role: Party, params: &SchemeParams) -> Self {
        Self {
            role,
            n: params.field.bits() as u8,
            poly: params.field.poly(),
            m: params.m,
            domain_bits: params.domain_bits as u8,
        }
    }

    pub fn encode(&self) -> [u8; HANDSHAKE_LEN] {
        let mut out = [0u8; HANDSHAKE_LEN];
        out[..8].copy_from_slice(MAGIC);
        out[8] = VERSION;
        out[9] = match self.role {
            Party::P => b'P',
            Party::Q => b'Q',
            Party::V => b'V',
        };
        out[10] = self.n;
        out[11..15].copy_from_slice(&self.poly.to_be_bytes());
        out[15..19].copy_from_slice(&self.m.to_be_bytes());
        out[19] = self.domain_bits;
        out
    }

    pub fn decode(bytes: &[u8; HANDSHAKE_LEN]) -> Result<Self, NetError> {
        if &bytes[..8] != MAGIC {
            return Err(NetError::Handshake("bad magic".into()));
        }
        if bytes[8] != VERSION {
            return Err(NetError::Handshake(format!("unsupported version {}", bytes[8])));
        }
        let role = match bytes[9] {
            b'P' => Party::P,
            b'Q' => Party::Q,
            b'V' => Party::V,
            r => return Err(NetError::Handshake(format!("unknown role byte {r:#04x}"))),
        };
        Ok(Self {
            role,
            n: bytes[10],
            poly: u32::from_be_bytes(bytes[11..15].try_into().expect("4 bytes")),
            m: u32::from_be_bytes(bytes[15..19].try_into().expect("4 bytes")),
            domain_bits: bytes[19],
        })
    }

    fn same_params(&self, other: &Handshake) -> bool {
        (self.n, self.poly, self.m, self.domain_bits) == (other.n, other.poly, other.m, other.domain_bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadlineConfig {
    pub per_round_ms: u64,
    pub p_endpoint: SocketAddr,
    pub q_endpoint: SocketAddr,
}

impl DeadlineConfig {
    pub fn new(per_round_ms: u64, p_endpoint: SocketAddr, q_endpoint: SocketAddr) -> Result<Self, NetError> {
        if per_round_ms == 0 {
            return Err(NetError::Deadline(per_round_ms));
        }
        Ok(Self {
            per_round_ms,
            p_endpoint,
            q_endpoint,
        })
    }
}

/// How a networked session ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionResult {
    Completed(Transcript),
    Aborted { reason: AbortReason, round: u16 },
}

/// The verifier's two listening sockets, bound before the provers connect.
pub struct VerifierListener {
    p: TcpListener,
    q: TcpListener,
}

impl VerifierListener {
    pub fn bind(p: impl ToSocketAddrs, q: impl ToSocketAddrs) -> Result<Self, NetError> {
        Ok(Self {
            p: TcpListener::bind(p)?,
            q: TcpListener::bind(q)?,
        })
    }

    pub fn p_addr(&self) -> Result<SocketAddr, NetError> {
        Ok(self.p.local_addr()?)
    }

    pub fn q_addr(&self) -> Result<SocketAddr, NetError> {
        Ok(self.q.local_addr()?)
    }

    /// Accepts P and Q, then runs one session; see [`serve_verifier`].
    pub fn run(self, params: &SchemeParams, per_round_ms: u64, seed: u64) -> Result<SessionResult, NetError> {
        if per_round_ms == 0 {
            return Err(NetError::Deadline(per_round_ms));
        }
        let (p, _) = self.p.accept()?;
        let (q, _) = self.q.accept()?;
        Verifier {
            params: *params,
            deadline: Duration::from_millis(per_round_ms),
            p,
            q,
        }
        .run(seed)
    }
}

/// Binds the endpoints in `deadlines`, accepts one connection on each, and
/// drives one session: challenges from the seeded verifier stream, each
/// response timed from its challenge, ABORT to both provers on a missed
/// deadline (0x01), malformed frame (0x02), lost connection (0x03) or
/// handshake mismatch (0x04).
pub fn serve_verifier(params: &SchemeParams, deadlines: &DeadlineConfig, seed: u64) -> Result<SessionResult, NetError> {
    VerifierListener::bind(deadlines.p_endpoint, deadlines.q_endpoint)?.run(params, deadlines.per_round_ms, seed)
}

struct Verifier {
    params: SchemeParams,
    deadline: Duration,
    p: TcpStream,
    q: TcpStream,
}

impl Verifier {
    fn stream(&mut self, party: Party) -> &mut TcpStream {
        match party {
            Party::P => &mut self.p,
            _ => &mut self.q,
        }
    }

    fn abort(&mut self, reason: AbortReason, round: u16) -> SessionResult {
        let frame = WireMessage::abort(round, reason);
        let _ = write_frame(&mut self.p, &frame);
        let _ = write_frame(&mut self.q, &frame);
        // Read until the provers hang up, so a late response does not reset
        // the connection before the ABORT frame is read.
        let linger = (self.deadline * 4).max(Duration::from_secs(1));
        for party in [Party::P, Party::Q] {
            let s = self.stream(party);
            let _ = s.shutdown(std::net::Shutdown::Write);
            let _ = s.set_read_timeout(Some(linger));
            let mut sink = [0u8; 256];
            while matches!(s.read(&mut sink), Ok(k) if k > 0) {}
        }
        SessionResult::Aborted { reason, round }
    }

    fn handshake(&mut self) -> Result<(), AbortReason> {
        let mine = Handshake::new(Party::V, &self.params);
        let timeout = self.deadline.max(Duration::from_secs(5));
        for party in [Party::P, Party::Q] {
            let s = self.stream(party);
            s.set_read_timeout(Some(timeout)).map_err(|_| AbortReason::ConnectionLost)?;
            let mut buf = [0u8; HANDSHAKE_LEN];
            s.read_exact(&mut buf).map_err(|_| AbortReason::Handshake)?;
            let theirs = Handshake::decode(&buf).map_err(|_| AbortReason::Handshake)?;
            if theirs.role != party || !theirs.same_params(&mine) {
                return Err(AbortReason::Handshake);
            }
        }
        for party in [Party::P, Party::Q] {
            self.stream(party)
                .write_all(&mine.encode())
                .map_err(|_| AbortReason::ConnectionLost)?;
        }
        Ok(())
    }

    /// Sends `request` to `party` and waits for its RESPONSE for the same
    /// round, within the deadline.
    fn exchange(&mut self, party: Party, request: WireMessage) -> Result<FieldElement, AbortReason> {
        let round = request.round;
        let field = self.params.field;
        let deadline = self.deadline;
        let s = self.stream(party);
        write_frame(s, &request).map_err(|_| AbortReason::ConnectionLost)?;
        let sent = Instant::now();
        s.set_read_timeout(Some(deadline)).map_err(|_| AbortReason::ConnectionLost)?;
        let reply = read_frame_inner(s).map_err(|f| match f {
            ReadFailure::Timeout => AbortReason::Deadline,
            ReadFailure::Closed => AbortReason::ConnectionLost,
            ReadFailure::Malformed(_) => AbortReason::Malformed,
        })?;
        if sent.elapsed() > deadline {
            return Err(AbortReason::Deadline);
        }
        if reply.kind != FrameType::Response || reply.round != round {
            return Err(AbortReason::Malformed);
        }
        reply.element_body(&field).map_err(|_| AbortReason::Malformed)
    }

    fn run(mut self, seed: u64) -> Result<SessionResult, NetError> {
        let _ = self.p.set_nodelay(true);
        let _ = self.q.set_nodelay(true);
        if let Err(reason) = self.handshake() {
            return Ok(self.abort(reason, 0));
        }
        let params = self.params;
        let f = params.field;
        let mut messages = Vec::with_capacity(2 * params.m as usize + 5);
        for i in 0..=params.m {
            let active: Party = params.committer(i).into();
            let a = rng::challenge(seed, &f, i);
            messages.push(RoundMessage {
                round: i,
                from: Party::V,
                to: active,
                payload: Payload::Element(a),
            });
            let frame = WireMessage::element(FrameType::Challenge, i as u16, f.wrap(a));
            match self.exchange(active, frame) {
                Ok(x) => messages.push(RoundMessage {
                    round: i,
                    from: active,
                    to: Party::V,
                    payload: Payload::Element(x.value()),
                }),
                Err(reason) => return Ok(self.abort(reason, i as u16)),
            }
        }
        let last = params.m + 1;
        let opener: Party = params.opener().into();
        messages.push(RoundMessage {
            round: last,
            from: Party::V,
            to: opener,
            payload: Payload::Open,
        });
        let open = WireMessage::element(FrameType::Open, last as u16, f.zero());
        let y = match self.exchange(opener, open) {
            Ok(y) => y,
            Err(reason) => return Ok(self.abort(reason, last as u16)),
        };
        messages.push(RoundMessage {
            round: last,
            from: opener,
            to: Party::V,
            payload: Payload::Element(y.value()),
        });
        let mut t = Transcript {
            params,
            seed,
            messages,
            outcome: OpenOutcome::Reject,
        };
        t.outcome = t.verify().map_err(|e| NetError::Malformed(e.to_string()))?;
        t.messages.push(RoundMessage {
            round: last,
            from: Party::V,
            to: opener,
            payload: if t.outcome.is_reject() { Payload::Reject } else { Payload::Accept },
        });
        let result = WireMessage::result(last as u16, &f, t.outcome);
        let _ = write_frame(&mut self.p, &result);
        let _ = write_frame(&mut self.q, &result);
        Ok(SessionResult::Completed(t))
    }
}

/// Test hooks for a prover.
#[derive(Debug, Clone, Default)]
pub struct ProverOptions {
    /// Sleep before every response.
    pub delay: Option<Duration>,
    /// Send the first response without its last byte, then hang up.
    pub truncate_response: bool,
    /// Announce this role in the handshake instead of the real one.
    pub claimed_role: Option<Role>,
}

/// What a prover saw of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProverReport {
    /// The verifier's verdict, or the abort reason.
    pub result: Result<OpenOutcome, AbortReason>,
    /// Every frame received after the handshake.
    pub received: Vec<WireMessage>,
}

/// Connects to `endpoint` as `role` and plays honestly: the committed value
/// `s` at round 0, `y_{i-1}` after that, and `y_m` when asked to open, with
/// `y_i` drawn from the joint stream of `shared_seed`.
pub fn run_prover(
    role: Role,
    params: &SchemeParams,
    shared_seed: u64,
    s: u32,
    endpoint: impl ToSocketAddrs,
    opts: &ProverOptions,
) -> Result<ProverReport, NetError> {
    let f = params.field;
    let tape = SeededTape::new(shared_seed, &f);
    let mut stream = TcpStream::connect(endpoint)?;
    let _ = stream.set_nodelay(true);
    let claimed = opts.claimed_role.unwrap_or(role);
    stream.write_all(&Handshake::new(claimed.into(), params).encode())?;
    let mut received = Vec::new();
    let mut buf = [0u8; HANDSHAKE_LEN];
    // A rejected handshake is answered with an ABORT frame, not a handshake.
    let mut head = [0u8; 4];
    stream.read_exact(&mut head)?;
    if head == *b"RELC" {
        buf[..4].copy_from_slice(&head);
        stream.read_exact(&mut buf[4..])?;
        let theirs = Handshake::decode(&buf)?;
        if theirs.role != Party::V || !theirs.same_params(&Handshake::new(Party::V, params)) {
            return Err(NetError::Handshake("verifier parameters differ".into()));
        }
    } else {
        let len = u32::from_be_bytes(head);
        check_len(len)?;
        let mut rest = vec![0u8; len as usize];
        stream.read_exact(&mut rest)?;
        let msg = WireMessage::from_parts(&rest)?;
        return Ok(abort_report(msg, received));
    }
    let mut truncated = false;
    loop {
        let msg = read_frame(&mut stream)?;
        received.push(msg.clone());
        let round = msg.round as u32;
        let reply = match msg.kind {
            FrameType::Challenge => {
                let a = msg.element_body(&f)?.value();
                let prev = if round == 0 { s } else { tape.value(round - 1, 0) };
                tape.value(round, 0) ^ f.mul_raw(a, prev)
            }
            FrameType::Open => tape.value(params.m, 0),
            FrameType::Result => {
                let outcome = msg.outcome_body(&f)?;
                return Ok(ProverReport {
                    result: Ok(outcome),
                    received,
                });
            }
            FrameType::Abort => return Ok(abort_report(msg, received)),
            FrameType::Response => return Err(NetError::Malformed("verifier sent a RESPONSE".into())),
        };
        if let Some(d) = opts.delay {
            std::thread::sleep(d);
        }
        let frame = WireMessage::element(FrameType::Response, msg.round, f.wrap(reply)).frame();
        if opts.truncate_response && !truncated {
            truncated = true;
            stream.write_all(&frame[..frame.len() - 1])?;
            stream.flush()?;
            stream.shutdown(std::net::Shutdown::Write)?;
            continue;
        }
        // The verifier may have aborted already; its ABORT frame is still
        // read on the next iteration.
        let _ = stream.write_all(&frame);
    }
}

fn abort_report(msg: WireMessage, mut received: Vec<WireMessage>) -> ProverReport {
    let reason = msg
        .body
        .first()
        .and_then(|&b| AbortReason::from_byte(b))
        .unwrap_or(AbortReason::Malformed);
    received.push(msg);
    ProverReport {
        result: Err(reason),
        received,
    }
}
