use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use relcommit_core::adversary::{brute_force_chsh, randomize, tightness_lower_bound};
use relcommit_core::analysis::{
    couple_max_diagonal, cond_indep_given_neq, fairly_weak_hat_distribution, frac, stat_distance, Dist,
};
use relcommit_core::engine::{run_honest_session, Transcript};
use relcommit_core::net::{read_frame, FrameType, Handshake, WireMessage};
use relcommit_core::scheme::{k_of_extr, multiround_open, ExtrRule};
use relcommit_core::{Commitment, FieldSpec, OpenOutcome, Role, SchemeParams};

fn field() -> impl Strategy<Value = FieldSpec> {
    (1u32..=24).prop_map(|n| FieldSpec::new(n).unwrap())
}

fn field_and<const K: usize>() -> impl Strategy<Value = (FieldSpec, [u32; K])> {
    field().prop_flat_map(|f| (Just(f), proptest::array::uniform::<_, K>(0..=f.mask())))
}

fn pmf(len: usize) -> impl Strategy<Value = Dist<u32>> {
    proptest::collection::vec(0u64..20, len).prop_filter_map("all-zero weights", |w| {
        let total: u64 = w.iter().sum();
        (total > 0).then(|| Dist::new(w.iter().enumerate().map(|(i, &x)| (i as u32, frac(x, total)))).unwrap())
    })
}

proptest! {
    #[test]
    fn field_ring_axioms((f, [a, b, c]) in field_and::<3>()) {
        prop_assert_eq!(f.mul_raw(a, b ^ c), f.mul_raw(a, b) ^ f.mul_raw(a, c));
        prop_assert_eq!(f.mul_raw(f.mul_raw(a, b), c), f.mul_raw(a, f.mul_raw(b, c)));
        prop_assert_eq!(f.mul_raw(a, b), f.mul_raw(b, a));
        prop_assert_eq!(f.mul_raw(a, 1), a);
        prop_assert!(f.mul_raw(a, b) <= f.mask());
    }

    #[test]
    fn field_inverse_and_frobenius((f, [a, b]) in field_and::<2>()) {
        match f.inv_raw(a) {
            Some(inv) => prop_assert_eq!(f.mul_raw(a, inv), 1),
            None => prop_assert_eq!(a, 0),
        }
        prop_assert_eq!(f.pow_raw(a ^ b, 2), f.pow_raw(a, 2) ^ f.pow_raw(b, 2));
        prop_assert_eq!(f.pow_raw(a, f.order()), a);
    }

    #[test]
    fn element_hex_round_trip((f, [a]) in field_and::<1>()) {
        let e = f.wrap(a);
        prop_assert_eq!(f.parse_element(&e.to_hex()).unwrap(), e);
        prop_assert_eq!(e.to_be_bytes().len(), f.byte_width());
    }

    #[test]
    fn extr_opens_honest_commitments((f, [s, r, a]) in field_and::<3>()) {
        prop_assume!(a != 0);
        let (s, r, a) = (f.wrap(s), f.wrap(r), f.wrap(a));
        let c = Commitment::new(a, r.add(a.mul(s).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(relcommit_core::scheme::extr(r, &c).unwrap(), OpenOutcome::Value(s.value()));
    }

    #[test]
    fn multiround_honest_round_trip(
        (f, s, a, r) in field().prop_flat_map(|f| {
            (0usize..7).prop_flat_map(move |m| (
                Just(f),
                0..=f.mask(),
                proptest::collection::vec(1..=f.mask(), m + 1),
                proptest::collection::vec(0..=f.mask(), m + 1),
            ))
        })
    ) {
        let x: Vec<u32> = (0..a.len())
            .map(|i| r[i] ^ f.mul_raw(a[i], if i == 0 { s } else { r[i - 1] }))
            .collect();
        let wrap = |v: &[u32]| v.iter().map(|&e| f.wrap(e)).collect::<Vec<_>>();
        let out = multiround_open(&wrap(&a), &wrap(&x), f.wrap(*r.last().unwrap())).unwrap();
        prop_assert_eq!(out, OpenOutcome::Value(s));
    }

    #[test]
    fn honest_sessions_open_correctly(n in 1u32..=16, m in 0u32..6, s in any::<u32>(), seed in any::<u64>()) {
        let f = FieldSpec::new(n).unwrap();
        let p = SchemeParams::chsh(f, m);
        let s = s & f.mask();
        let t = run_honest_session(&p, f.wrap(s), seed).unwrap();
        if t.challenges().iter().all(|&a| a != 0) {
            prop_assert_eq!(t.outcome, OpenOutcome::Value(s));
        }
        prop_assert_eq!(t.verify().unwrap(), t.outcome);
        prop_assert_eq!(Transcript::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn params_config_round_trip(n in 1u32..=24, m in 0u32..1000, k in 1u32..=24, q_first in any::<bool>()) {
        let f = FieldSpec::new(n).unwrap();
        prop_assume!(k <= n);
        let first = if q_first { Role::Q } else { Role::P };
        let p = SchemeParams::new(f, m, k, first).unwrap();
        prop_assert_eq!(p.to_config().parse::<SchemeParams>().unwrap(), p);
    }

    #[test]
    fn coupling_is_consistent((p, q) in (2usize..7).prop_flat_map(|len| (pmf(len), pmf(len)))) {
        let j = couple_max_diagonal(&p, &q).unwrap();
        prop_assert_eq!(j.marginal_x(), p.clone());
        prop_assert_eq!(j.marginal_y(), q.clone());
        let min_sum = p.iter().fold(BigRational::zero(), |acc, (k, m)| acc + m.clone().min(q.mass(k)));
        prop_assert_eq!(j.diagonal_mass(), min_sum.clone());
        prop_assert_eq!(BigRational::one() - min_sum, stat_distance(&p, &q).unwrap());
        prop_assert!(cond_indep_given_neq(&j));
    }

    #[test]
    fn hat_distribution_is_a_pmf(
        weights in proptest::collection::vec(0u64..=16, 1..10),
        eps_num in 1u64..=64,
    ) {
        let mut p: Vec<BigRational> = weights.iter().map(|&w| frac(w, 16)).collect();
        p.sort_by(|a, b| b.cmp(a));
        let eps = frac(eps_num, 64);
        let n = {
            let mut n = 2u64;
            while frac(n * n, 1) * &eps < frac(2, 1) { n += 1; }
            n
        };
        let slack = frac(n - 1, 2) * &eps;
        let premise = (1..=p.len().min(n as usize)).all(|k| {
            let head = p[..k].iter().fold(BigRational::zero(), |acc, x| acc + x);
            head <= BigRational::one() + frac((k * (k - 1) / 2) as u64, 1) * &eps
        });
        match fairly_weak_hat_distribution(&p, &eps) {
            Ok(h) => {
                let total = h.iter().fold(BigRational::zero(), |acc, (_, m)| acc + m);
                prop_assert!(total.is_one());
                prop_assert!(h.iter().all(|(_, m)| !m.is_negative()));
                if premise {
                    for (&i, m) in h.iter() {
                        prop_assert!(&p[i] - m <= slack);
                    }
                }
            }
            Err(_) => prop_assert!(p[0] < slack || !premise),
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic_the_parser(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
        let _ = WireMessage::parse(&bytes);
        let _ = read_frame(&mut bytes.as_slice());
        if let Ok(hs) = <[u8; 20]>::try_from(bytes.as_slice()) {
            let _ = Handshake::decode(&hs);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn frames_round_trip(
        kind in prop_oneof![
            Just(FrameType::Challenge),
            Just(FrameType::Response),
            Just(FrameType::Open),
            Just(FrameType::Result),
            Just(FrameType::Abort),
        ],
        round in any::<u16>(),
        body in proptest::collection::vec(any::<u8>(), 0..16),
    ) {
        let msg = WireMessage { kind, round, body };
        let bytes = msg.frame();
        prop_assert_eq!(&WireMessage::parse(&bytes).unwrap(), &msg);
        prop_assert_eq!(read_frame(&mut bytes.as_slice()).unwrap(), msg);
    }

    #[test]
    fn result_bodies_decode((f, [v]) in field_and::<1>(), reject in any::<bool>()) {
        let outcome = if reject { OpenOutcome::Reject } else { OpenOutcome::Value(v) };
        let msg = WireMessage::result(0, &f, outcome);
        prop_assert_eq!(msg.outcome_body(&f).unwrap(), outcome);
    }
}

#[test]
fn chsh_has_k_equal_to_one() {
    for n in 1..=8 {
        let f = FieldSpec::new(n).unwrap();
        assert_eq!(k_of_extr(ExtrRule::Chsh, &f).unwrap(), 1);
    }
    assert_eq!(k_of_extr(ExtrRule::DropLowBit, &FieldSpec::new(3).unwrap()).unwrap(), 2);
}

#[test]
fn randomized_game_is_input_independent() {
    for n in 1..=2 {
        let f = FieldSpec::new(n).unwrap();
        let t = brute_force_chsh(&f).unwrap();
        let r = randomize(&t);
        for a in 0..f.order() as u32 {
            for s in 0..f.order() as u32 {
                assert_eq!(r.success_probability(a, s), t.q);
            }
        }
    }
}

proptest! {
    #[test]
    fn lower_bound_is_linear_at_m_zero(num in 0u64..=100, n in 1u32..=32) {
        let q = frac(num, 100);
        let expected = &q / BigRational::from_integer(2.into())
            + BigRational::new(1.into(), 8.into()) * &q * &q
            - BigRational::new(1.into(), num_bigint::BigInt::one() << n);
        prop_assert_eq!(tightness_lower_bound(&q, 0, n), expected);
    }
}
