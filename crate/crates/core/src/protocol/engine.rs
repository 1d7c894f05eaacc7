use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{party_photon, RoundRecord};
use crate::bsa::{click_bsa, ideal_bsa, DetectorParams};
use crate::channel::{eve_intercept, transmit, AdversaryModel, LinkParams, Topology};
use crate::error::{Error, Result};
use crate::qstate::{bell_vector, transition_on, BellLabel, EncodingKeys};

/// Fiber segments along the two photon paths.
///
/// Bob's photon: Alice→Bob, Bob→analyzer. Charlie's photon: Alice→Charlie,
/// then one segment per further encoder, then the last encoder→analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Links {
    pub bob_path: Vec<LinkParams>,
    pub charlie_path: Vec<LinkParams>,
}

impl Links {
    /// Lossless, noiseless segments.
    pub fn ideal(n_parties: usize) -> Self {
        Self {
            bob_path: vec![LinkParams::lossless(); 2],
            charlie_path: vec![LinkParams::lossless(); n_parties.saturating_sub(1)],
        }
    }

    /// Every segment has the same loss and length. Bell-flip noise `(e_x, e_y)`
    /// sits on Charlie's path only, so a three-party round sees two noisy
    /// stages and an end-to-end error of `2q(1−q)` for `e_x = e_y = q`.
    /// In the proximal layout the segment into the analyzer has zero length.
    pub fn uniform(
        n_parties: usize,
        topology: Topology,
        alpha: f64,
        length_km: f64,
        e_x: f64,
        e_y: f64,
    ) -> Result<Self> {
        if n_parties < 3 {
            return Err(Error::TooFewParties(n_parties));
        }
        let lossy = LinkParams::new(alpha, length_km, 0.0, 0.0)?;
        let noisy = LinkParams::new(alpha, length_km, e_x, e_y)?;
        let mut bob_path = vec![lossy; 2];
        let mut charlie_path = vec![noisy; n_parties - 1];
        if topology == Topology::Proximal {
            bob_path[1].length_km = 0.0;
            charlie_path.last_mut().expect("n ≥ 3").length_km = 0.0;
        }
        Ok(Self {
            bob_path,
            charlie_path,
        })
    }

    pub fn validate(&self, n_parties: usize) -> Result<()> {
        if n_parties < 3 {
            return Err(Error::TooFewParties(n_parties));
        }
        if self.bob_path.len() != 2 {
            return Err(Error::SegmentMismatch(format!(
                "Bob's path needs 2 segments, got {}",
                self.bob_path.len()
            )));
        }
        if self.charlie_path.len() != n_parties - 1 {
            return Err(Error::SegmentMismatch(format!(
                "Charlie's path needs {} segments for {} parties, got {}",
                n_parties - 1,
                n_parties,
                self.charlie_path.len()
            )));
        }
        self.bob_path
            .iter()
            .chain(self.charlie_path.iter())
            .try_for_each(LinkParams::validate)
    }
}

/// Runs one round: key sampling, encoding, transmission, analysis.
pub fn run_round<R: Rng + ?Sized>(
    index: u64,
    n_parties: usize,
    links: &Links,
    det: &DetectorParams,
    adversary: AdversaryModel,
    rng: &mut R,
) -> Result<RoundRecord> {
    links.validate(n_parties)?;
    let mut keys: Vec<EncodingKeys> = (0..n_parties).map(|_| EncodingKeys::random(rng)).collect();
    if adversary == AdversaryModel::DishonestBob {
        keys[1] = EncodingKeys::new(false, false);
    }

    let mut label = transition_on(BellLabel::PsiPlus, keys[0], party_photon(0));

    // distribution stage
    let (mut bob_alive, l) = transmit(label, &links.bob_path[0], rng);
    label = l;
    if let Some(basis) = adversary.intercept_basis() {
        label = eve_intercept(label, basis, rng);
    }
    let (mut charlie_alive, l) = transmit(label, &links.charlie_path[0], rng);
    label = l;

    // Bob encodes and forwards to the analyzer
    label = transition_on(label, keys[1], party_photon(1));
    let (alive, l) = transmit(label, &links.bob_path[1], rng);
    bob_alive &= alive;
    label = l;

    // Charlie and any chained encoders, each followed by its outgoing segment
    for (party, k) in keys.iter().enumerate().skip(2) {
        label = transition_on(label, *k, party_photon(party));
        let (alive, l) = transmit(label, &links.charlie_path[party - 1], rng);
        charlie_alive &= alive;
        label = l;
    }

    let projected = if bob_alive && charlie_alive {
        Some(ideal_bsa(&bell_vector(label), rng)?)
    } else {
        None
    };
    let (outcome, _) = click_bsa((bob_alive, charlie_alive), projected, det, rng);
    Ok(RoundRecord::new(index, keys, outcome))
}

/// Everything needed to reproduce a batch of rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParams {
    pub n_parties: usize,
    pub rounds: u64,
    pub links: Links,
    pub detector: DetectorParams,
    pub adversary: AdversaryModel,
    pub seed: u64,
}

/// Per-round generator: stream `index` of the ChaCha8 key derived from `seed`.
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `params.rounds` rounds on `workers` threads (0 = all cores). The
/// records depend only on `params`, never on the worker count.
pub fn simulate(params: &SimulationParams, workers: usize) -> Result<Vec<RoundRecord>> {
    params.links.validate(params.n_parties)?;
    params.detector.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::WorkerPool(e.to_string()))?;
    pool.install(|| {
        (0..params.rounds)
            .into_par_iter()
            .map(|i| {
                run_round(
                    i,
                    params.n_parties,
                    &params.links,
                    &params.detector,
                    params.adversary,
                    &mut round_rng(params.seed, i),
                )
            })
            .collect()
    })
}
