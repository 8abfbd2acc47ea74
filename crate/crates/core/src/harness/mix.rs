use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalRecord;
use crate::error::{Error, Result};

/// Fractions of correct results to replace by incorrect ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl Default for MixSpec {
    fn default() -> Self {
        Self { fractions: (0..=5).map(|i| i as f64 / 5.0).collect(), seed: 0 }
    }
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::InvalidParams("no fractions given".into()));
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidParams("fractions must lie in [0, 1]".into()));
        }
        if self.fractions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("fractions must be sorted and unique".into()));
        }
        Ok(())
    }
}

/// Scores of one try-on result; either may be missing.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MixSample {
    pub sdr: Option<f64>,
    pub slpips: Option<f64>,
}

impl MixSample {
    pub fn new(sdr: f64, slpips: f64) -> Self {
        Self { sdr: Some(sdr), slpips: Some(slpips) }
    }

    pub fn from_record(r: &EvalRecord) -> Self {
        Self { sdr: r.sdr_distance(), slpips: r.slpips_value() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixRow {
    pub fraction: f64,
    pub substituted: usize,
    pub mean_sdr: Option<f64>,
    pub mean_slpips: Option<f64>,
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// For each fraction `f`, replaces `round(f·n)` of the `n` correct results by
/// incorrect ones and averages. Slot `j` takes `incorrect[j % m]`, so equal
/// pools line up pairwise. One seeded permutation orders the slots, which
/// makes the substituted sets nested across fractions.
pub fn mix_experiment(spec: &MixSpec, correct: &[MixSample], incorrect: &[MixSample]) -> Result<Vec<MixRow>> {
    if correct.is_empty() {
        return Err(Error::EmptyPool("correct results"));
    }
    if incorrect.is_empty() {
        return Err(Error::EmptyPool("incorrect results"));
    }
    spec.validate()?;
    let n = correct.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok(spec
        .fractions
        .iter()
        .map(|&f| {
            let k = (f * n as f64).round() as usize;
            let mut mixed = correct.to_vec();
            for &j in &order[..k] {
                mixed[j] = incorrect[j % incorrect.len()];
            }
            MixRow {
                fraction: f,
                substituted: k,
                mean_sdr: mean_of(mixed.iter().map(|s| s.sdr)),
                mean_slpips: mean_of(mixed.iter().map(|s| s.slpips)),
            }
        })
        .collect())
}
