//! Security check, sifting and key reconstruction.

use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{private_parity, RoundRecord};
use crate::error::{check_probability, check_range, Error, Result};

/// Outcome of the sampled error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub sifted_rounds: usize,
    pub sample_size: usize,
    pub sample_errors: usize,
    pub estimated_error: f64,
    pub threshold: f64,
    pub abort: bool,
}

/// Raw key material left after the security check.
///
/// `shares[p][k]` is party `p`'s private bit in kept round `k`; every kept
/// round obeys `⊕_p shares[p][k] = parity_target[k]` when error-free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedKey {
    pub n_parties: usize,
    /// Indices of the kept rounds.
    pub rounds: Vec<u64>,
    pub shares: Vec<Vec<bool>>,
    pub parity_target: Vec<bool>,
}

impl SharedKey {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

/// Whether a sifted round violates the key parity; `None` for discarded rounds.
pub fn round_error(record: &RoundRecord) -> Option<bool> {
    record
        .parity_target()
        .map(|t| private_parity(&record.party_keys) != t)
}

/// Parity-violation rate over all sifted rounds (no sampling).
pub fn sifted_error_rate(records: &[RoundRecord]) -> Result<(f64, usize)> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let (n, bad) = records
        .iter()
        .filter_map(round_error)
        .fold((0usize, 0usize), |(n, bad), e| (n + 1, bad + e as usize));
    if n == 0 {
        return Err(Error::NoSiftedRounds);
    }
    Ok((bad as f64 / n as f64, n))
}

/// Marks a random `sample_fraction` of the sifted rounds as samples, estimates
/// the error on them and keeps the remaining sifted rounds as key material.
pub fn sift_and_check<R: Rng + ?Sized>(
    records: &mut [RoundRecord],
    sample_fraction: f64,
    threshold: f64,
    rng: &mut R,
) -> Result<(SecurityReport, SharedKey)> {
    check_range(
        "sample_fraction",
        sample_fraction,
        f64::MIN_POSITIVE,
        1.0 - f64::EPSILON,
        "(0, 1)",
    )?;
    check_probability("threshold", threshold)?;
    let n_parties = records.first().ok_or(Error::EmptyRecords)?.party_keys.len();

    records.iter_mut().for_each(|r| r.sample = false);
    let sifted: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.sifted)
        .map(|(i, _)| i)
        .collect();
    if sifted.is_empty() {
        return Err(Error::NoSiftedRounds);
    }

    let sample_size =
        ((sifted.len() as f64 * sample_fraction).round() as usize).clamp(1, sifted.len());
    for pick in index::sample(rng, sifted.len(), sample_size) {
        records[sifted[pick]].sample = true;
    }

    let mut sample_errors = 0;
    let mut key = SharedKey {
        n_parties,
        rounds: Vec::new(),
        shares: vec![Vec::new(); n_parties],
        parity_target: Vec::new(),
    };
    for &i in &sifted {
        let r = &records[i];
        if r.sample {
            sample_errors += round_error(r).unwrap_or(false) as usize;
        } else {
            key.rounds.push(r.index);
            for (share, k) in key.shares.iter_mut().zip(&r.party_keys) {
                share.push(k.b);
            }
            key.parity_target.push(r.parity_target().expect("sifted"));
        }
    }

    let estimated_error = sample_errors as f64 / sample_size as f64;
    Ok((
        SecurityReport {
            sifted_rounds: sifted.len(),
            sample_size,
            sample_errors,
            estimated_error,
            threshold,
            abort: estimated_error > threshold,
        },
        key,
    ))
}

/// Recovers the private string of the one party missing from `collaborators`.
pub fn reconstruct_secret(key: &SharedKey, collaborators: &[usize]) -> Result<Vec<bool>> {
    let n = key.n_parties;
    let mut seen = vec![false; n];
    let valid = collaborators.len() + 1 == n
        && collaborators
            .iter()
            .all(|&p| p < n && !std::mem::replace(&mut seen[p], true));
    if !valid {
        return Err(Error::Collaborators {
            expected: n.saturating_sub(1),
            parties: n,
            got: collaborators.to_vec(),
        });
    }
    Ok((0..key.len())
        .map(|k| {
            collaborators
                .iter()
                .fold(key.parity_target[k], |acc, &p| acc ^ key.shares[p][k])
        })
        .collect())
}

/// Plug-in estimate of `I(X;Y)` in bits from paired samples.
pub fn empirical_mutual_information<X, Y, I>(pairs: I) -> f64
where
    X: Eq + Hash + Clone,
    Y: Eq + Hash + Clone,
    I: IntoIterator<Item = (X, Y)>,
{
    let mut joint: HashMap<(X, Y), usize> = HashMap::new();
    let mut px: HashMap<X, usize> = HashMap::new();
    let mut py: HashMap<Y, usize> = HashMap::new();
    let mut n = 0usize;
    for (x, y) in pairs {
        *px.entry(x.clone()).or_default() += 1;
        *py.entry(y.clone()).or_default() += 1;
        *joint.entry((x, y)).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    joint
        .iter()
        .map(|((x, y), &c)| {
            let pxy = c as f64 / n;
            let denom = px[x] as f64 / n * (py[y] as f64 / n);
            pxy * (pxy / denom).log2()
        })
        .sum::<f64>()
        .max(0.0)
}
