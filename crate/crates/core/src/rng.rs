//! Labeled random streams derived from one 64-bit master seed.
//!
//! Word `slot` of stream `(label, round)` is the `slot`-th 32-bit output of
//! `ChaCha8Rng::seed_from_u64(master)` on stream `label << 32 | round`. Any
//! implementation with the same generator reproduces every transcript.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::FieldSpec;

/// Verifier challenges.
pub const LABEL_VERIFIER: u8 = b'V';
/// Joint prover randomness.
pub const LABEL_JOINT: u8 = b'J';
/// Per-trial seed derivation.
pub const LABEL_TRIAL: u8 = b'T';
/// Targets drawn in opening games.
pub const LABEL_TARGET: u8 = b'S';

fn stream(master: u64, label: u8, index: u32, slot: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((label as u64) << 32) | index as u64);
    rng.set_word_pos(slot as u128);
    rng
}

pub fn stream_word(master: u64, label: u8, round: u32, slot: u32) -> u32 {
    stream(master, label, round, slot).next_u32()
}

/// Seed of trial `trial` in a batch; trial 0 reuses the master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    if trial == 0 {
        return master;
    }
    let hi = (trial >> 32) as u32;
    let lo = trial as u32;
    stream(master ^ ((hi as u64) << 1), LABEL_TRIAL, lo, 0).next_u64()
}

/// Verifier challenge `a_round` of a session.
pub fn challenge(master: u64, field: &FieldSpec, round: u32) -> u32 {
    stream_word(master, LABEL_VERIFIER, round, 0) & field.mask()
}

/// Shared randomness the provers agreed on before the session. Values are
/// raw field bits addressed by round and slot.
pub trait Tape: Sync {
    fn value(&self, round: u32, slot: u32) -> u32;
}

/// Tape read off the joint stream of a master seed.
#[derive(Debug, Clone, Copy)]
pub struct SeededTape {
    seed: u64,
    mask: u32,
}

impl SeededTape {
    pub fn new(seed: u64, field: &FieldSpec) -> Self {
        Self {
            seed,
            mask: field.mask(),
        }
    }
}

impl Tape for SeededTape {
    fn value(&self, round: u32, slot: u32) -> u32 {
        stream_word(self.seed, LABEL_JOINT, round, slot) & self.mask
    }
}

/// Tape with explicit contents, for exact enumeration. `values[round][slot]`;
/// positions not listed read as 0.
#[derive(Debug, Clone, Default)]
pub struct TableTape {
    pub values: Vec<Vec<u32>>,
}

impl TableTape {
    pub fn new(values: Vec<Vec<u32>>) -> Self {
        Self { values }
    }
}

impl Tape for TableTape {
    fn value(&self, round: u32, slot: u32) -> u32 {
        self.values
            .get(round as usize)
            .and_then(|r| r.get(slot as usize))
            .copied()
            .unwrap_or(0)
    }
}
