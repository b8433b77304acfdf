//! Product-Bernoulli laws over which competitors share the serving BS.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::EnumerationPolicy;

/// Largest competitor count enumerated exhaustively.
pub const MAX_EXACT_COMPETITORS: usize = 20;

/// One competitor: the sleeping cell it lives in and its probability of associating to the BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Competitor {
    pub cell: usize,
    pub prob: f64,
}

/// A weighted state vector `b`, one bit per competitor.
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub bits: Vec<bool>,
    pub prob: f64,
}

/// All (or sampled) state vectors with their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnumeration {
    pub competitors: Vec<Competitor>,
    pub states: Vec<UserState>,
    pub sampled: bool,
}

impl StateEnumeration {
    pub fn total_probability(&self) -> f64 {
        self.states.iter().map(|s| s.prob).sum()
    }

    /// Collapses state vectors to per-cell counts of associated competitors.
    ///
    /// Downstream integrands depend on a state only through these counts.
    pub fn signatures(&self) -> Vec<(BTreeMap<usize, u32>, f64)> {
        let mut acc: BTreeMap<Vec<(usize, u32)>, f64> = BTreeMap::new();
        for s in &self.states {
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for (bit, c) in s.bits.iter().zip(&self.competitors) {
                if *bit {
                    *counts.entry(c.cell).or_insert(0) += 1;
                }
            }
            *acc.entry(counts.into_iter().collect()).or_insert(0.0) += s.prob;
        }
        acc.into_iter()
            .map(|(k, p)| (k.into_iter().collect(), p))
            .collect()
    }
}

/// States `b` of the given competitors under `policy`.
pub fn product_bernoulli_states(
    competitors: &[Competitor],
    policy: EnumerationPolicy,
) -> Result<StateEnumeration> {
    let n = competitors.len();
    match policy {
        EnumerationPolicy::Exact => {
            if n > MAX_EXACT_COMPETITORS {
                return Err(Error::Policy(format!(
                    "{n} competitor users exceed the exhaustive limit of {MAX_EXACT_COMPETITORS}; use sampled enumeration"
                )));
            }
            let mut states = Vec::with_capacity(1 << n);
            for mask in 0u32..(1u32 << n) {
                let mut prob = 1.0;
                let bits: Vec<bool> = (0..n)
                    .map(|i| {
                        let on = mask >> i & 1 == 1;
                        let p = competitors[i].prob;
                        prob *= if on { p } else { 1.0 - p };
                        on
                    })
                    .collect();
                states.push(UserState { bits, prob });
            }
            Ok(StateEnumeration {
                competitors: competitors.to_vec(),
                states,
                sampled: false,
            })
        }
        EnumerationPolicy::Sampled { draws, seed } => {
            if draws == 0 {
                return Err(Error::Policy(
                    "sampled enumeration needs at least one draw".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 1.0 / draws as f64;
            let states = (0..draws)
                .map(|_| UserState {
                    bits: competitors
                        .iter()
                        .map(|c| rng.random::<f64>() < c.prob)
                        .collect(),
                    prob: w,
                })
                .collect();
            Ok(StateEnumeration {
                competitors: competitors.to_vec(),
                states,
                sampled: true,
            })
        }
    }
}
