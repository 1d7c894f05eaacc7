use proptest::prelude::*;

use mdiqss::bsa::DetectorParams;
use mdiqss::channel::{AdversaryModel, Topology};
use mdiqss::protocol::{
    expected_outcome, private_parity, reconstruct_secret, sift_and_check, simulate,
    ExpectedOutcome, Links, SimulationParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ideal(n: usize, rounds: u64, seed: u64) -> SimulationParams {
    SimulationParams {
        n_parties: n,
        rounds,
        links: Links::ideal(n),
        detector: DetectorParams::IDEAL,
        adversary: AdversaryModel::None,
        seed,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kept_rounds_obey_parity(n in 3usize..=6, seed in any::<u64>()) {
        for r in simulate(&ideal(n, 2000, seed), 0).unwrap() {
            prop_assert!(r.outcome.is_conclusive());
            if r.sifted {
                prop_assert!(!r.party_keys.iter().fold(false, |acc, k| acc ^ k.a));
                prop_assert_eq!(private_parity(&r.party_keys), r.parity_target().unwrap());
            } else {
                prop_assert_eq!(expected_outcome(&r.party_keys).unwrap(), ExpectedOutcome::Unbiased);
            }
        }
    }

    #[test]
    fn any_coalition_of_n_minus_one_recovers_the_rest(n in 3usize..=5, seed in any::<u64>()) {
        let mut recs = simulate(&ideal(n, 3000, seed), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (report, key) = sift_and_check(&mut recs, 0.2, 0.11, &mut rng).unwrap();
        prop_assert_eq!(report.sample_errors, 0);
        for missing in 0..n {
            let others: Vec<usize> = (0..n).filter(|&p| p != missing).collect();
            prop_assert_eq!(&reconstruct_secret(&key, &others).unwrap(), &key.shares[missing]);
        }
    }

    #[test]
    fn workers_never_matter(seed in any::<u64>(), workers in 1usize..6, km in 0.0..60.0f64) {
        let links = Links::uniform(3, Topology::Proximal, 0.19, km, 0.02, 0.01).unwrap();
        let p = SimulationParams { links, detector: DetectorParams::default(), ..ideal(3, 500, seed) };
        prop_assert_eq!(simulate(&p, 1).unwrap(), simulate(&p, workers).unwrap());
    }
}
