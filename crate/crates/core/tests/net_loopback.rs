use std::thread;
use std::time::Duration;

use relcommit_core::engine::run_honest_session;
use relcommit_core::net::{
    run_prover, AbortReason, FrameType, ProverOptions, ProverReport, SessionResult, VerifierListener,
};
use relcommit_core::scheme::{OpenOutcome, Role};
use relcommit_core::{FieldSpec, SchemeParams};

struct Outcome {
    verifier: SessionResult,
    p: ProverReport,
    q: ProverReport,
}

fn session(params: SchemeParams, seed: u64, deadline_ms: u64, p_opts: ProverOptions, q_opts: ProverOptions, q_seed: u64) -> Outcome {
    let listener = VerifierListener::bind("127.0.0.1:0", "127.0.0.1:0").unwrap();
    let (pa, qa) = (listener.p_addr().unwrap(), listener.q_addr().unwrap());
    let v = thread::spawn(move || listener.run(&params, deadline_ms, seed).unwrap());
    let p = thread::spawn(move || run_prover(Role::P, &params, seed, 1, pa, &p_opts).unwrap());
    let q = thread::spawn(move || run_prover(Role::Q, &params, q_seed, 1, qa, &q_opts).unwrap());
    Outcome {
        verifier: v.join().unwrap(),
        p: p.join().unwrap(),
        q: q.join().unwrap(),
    }
}

fn params() -> SchemeParams {
    SchemeParams::chsh(FieldSpec::new(8).unwrap(), 4)
}

#[test]
fn loopback_transcript_matches_engine() {
    let p = params();
    for seed in [42u64, 7, 1234] {
        let out = session(p, seed, 500, ProverOptions::default(), ProverOptions::default(), seed);
        let SessionResult::Completed(t) = out.verifier else {
            panic!("session aborted: {:?}", out.verifier);
        };
        let engine = run_honest_session(&p, p.field.element(1).unwrap(), seed).unwrap();
        assert_eq!(t.to_text(), engine.to_text());
        assert_eq!(out.p.result, Ok(engine.outcome));
        assert_eq!(out.q.result, Ok(engine.outcome));
    }
}

#[test]
fn verifier_never_relays_prover_messages() {
    let p = params();
    let seed = 99;
    let out = session(p, seed, 500, ProverOptions::default(), ProverOptions::default(), seed);
    let SessionResult::Completed(t) = out.verifier else { panic!() };
    for (report, role) in [(&out.p, Role::P), (&out.q, Role::Q)] {
        for frame in &report.received {
            assert!(matches!(frame.kind, FrameType::Challenge | FrameType::Open | FrameType::Result));
            if frame.kind == FrameType::Challenge {
                let round = frame.round as u32;
                assert_eq!(p.committer(round), role);
                let a = frame.element_body(&p.field).unwrap().value();
                assert_eq!(a, t.challenges()[round as usize]);
            }
        }
    }
}

#[test]
fn late_response_aborts_with_deadline() {
    let p = params();
    let slow = ProverOptions {
        delay: Some(Duration::from_millis(100)),
        ..Default::default()
    };
    let out = session(p, 5, 50, ProverOptions::default(), slow, 5);
    assert_eq!(out.verifier, SessionResult::Aborted { reason: AbortReason::Deadline, round: 1 });
    assert_eq!(out.p.result, Err(AbortReason::Deadline));
    assert_eq!(out.q.result, Err(AbortReason::Deadline));
}

#[test]
fn truncated_frame_aborts_as_malformed() {
    let p = params();
    let cut = ProverOptions {
        truncate_response: true,
        ..Default::default()
    };
    let out = session(p, 5, 500, cut, ProverOptions::default(), 5);
    assert_eq!(out.verifier, SessionResult::Aborted { reason: AbortReason::Malformed, round: 0 });
    assert_eq!(out.q.result, Err(AbortReason::Malformed));
}

#[test]
fn two_committers_fail_the_handshake() {
    let p = params();
    let imposter = ProverOptions {
        claimed_role: Some(Role::P),
        ..Default::default()
    };
    let out = session(p, 5, 500, ProverOptions::default(), imposter, 5);
    assert_eq!(out.verifier, SessionResult::Aborted { reason: AbortReason::Handshake, round: 0 });
    assert_eq!(out.p.result, Err(AbortReason::Handshake));
    assert_eq!(out.q.result, Err(AbortReason::Handshake));
}

#[test]
fn mismatched_prover_seeds_break_the_opening() {
    let p = params();
    let mut wrong = 0;
    for seed in 0..1000u64 {
        let out = session(p, seed, 500, ProverOptions::default(), ProverOptions::default(), seed + 1000);
        let SessionResult::Completed(t) = out.verifier else { panic!() };
        if t.outcome != OpenOutcome::Value(1) {
            wrong += 1;
        }
    }
    // A mismatched stream still lands on the committed value with
    // probability about 2^-8 per run.
    assert!(wrong >= 985, "only {wrong} of 1000 openings were wrong");
}
