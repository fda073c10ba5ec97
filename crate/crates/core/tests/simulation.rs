use photocount_core::mc::{count_histogram, MomentEstimate};
use photocount_core::moments::moments_exact_noiseless;
use photocount_core::params::ReceiverConfig;
use photocount_core::subpoisson::subpoisson_pmf;
use photocount_core::waveform::{
    count_rising_edges, count_rising_edges_from, gen_arrivals, gen_symbol_arrivals, synth_samples, trial_rng,
    ArrivalSet, EdgeMode, Simulator,
};
use proptest::prelude::*;

#[test]
fn edge_count_matches_pattern_scan_exhaustively() {
    for word in 0u32..(1 << 12) {
        let bits: Vec<u8> = (0..12).map(|i| ((word >> (11 - i)) & 1) as u8).collect();
        let text: String = core::iter::once('0').chain(bits.iter().map(|&b| if b == 1 { '1' } else { '0' })).collect();
        assert_eq!(count_rising_edges(&bits), text.matches("01").count(), "{text}");
    }
}

#[test]
fn sparse_counting_matches_full_waveform() {
    let configs = [
        ReceiverConfig::new(0.01, 0.02, 0.3, 0.0, 0.0).unwrap(),
        ReceiverConfig::new(0.01, 0.005, 0.5, 0.2, 0.0).unwrap(),
        ReceiverConfig::new(0.02, 0.05, 0.8, 0.3, 0.0).unwrap(),
        ReceiverConfig::new(0.005, 0.005, 1.2, 0.3, 0.0).unwrap(),
    ];
    for cfg in configs {
        for edge in [EdgeMode::Stationary, EdgeMode::StartLow] {
            let mut sim = Simulator::new(cfg, edge);
            for trial in 0..2000 {
                let fast = sim.simulate(15.0, &mut trial_rng(5, trial)).n_s;
                let mut rng = trial_rng(5, trial);
                let arrivals = gen_symbol_arrivals(15.0, cfg.holding_time, edge, &mut rng);
                let s = synth_samples(&arrivals, &cfg, edge, &mut rng);
                assert_eq!(fast, count_rising_edges_from(s.initial_bit, &s.bits), "{cfg:?} {edge:?} trial {trial}");
            }
        }
    }
}

#[test]
fn noiseless_counts_are_bounded() {
    for (t, tau) in [(0.01, 0.01), (0.01, 0.03), (0.02, 0.005), (0.005, 0.02)] {
        let cfg = ReceiverConfig::noiseless(t, tau).unwrap();
        let bound = (1.0 / (tau + t)).floor() as usize + 1;
        for edge in [EdgeMode::Stationary, EdgeMode::StartLow] {
            let mut sim = Simulator::new(cfg, edge);
            for trial in 0..5000 {
                let r = sim.simulate(40.0, &mut trial_rng(9, trial));
                assert!(r.n_s <= r.arrivals);
                assert!(r.n_s <= bound);
            }
        }
    }
}

#[test]
fn rising_edges_bounded_with_noise() {
    let cfg = ReceiverConfig::new(0.01, 0.01, 0.3, 0.2, 0.2).unwrap();
    let mut sim = Simulator::new(cfg, EdgeMode::Stationary);
    for trial in 0..2000 {
        let r = sim.simulate(20.0, &mut trial_rng(2, trial));
        assert!(r.n_s <= 50);
    }
}

#[test]
fn no_light_no_noise_no_counts() {
    let cfg = ReceiverConfig::new(0.01, 0.02, 0.3, 0.2, 0.0).unwrap();
    let mut sim = Simulator::new(cfg, EdgeMode::Stationary);
    for trial in 0..100 {
        assert_eq!(sim.simulate(0.0, &mut trial_rng(1, trial)).n_s, 0);
        assert!(gen_arrivals(0.0, &mut trial_rng(1, trial)).is_empty());
    }
    let s = synth_samples(&ArrivalSet::default(), &cfg, EdgeMode::StartLow, &mut trial_rng(1, 0));
    assert_eq!(s.bits.len(), 100);
    assert!(s.bits.iter().all(|&b| b == 0));
}

#[test]
fn arrival_count_is_poisson_mean() {
    let trials = 1_000_000u64;
    let total: usize = (0..trials).map(|i| gen_arrivals(10.0, &mut trial_rng(21, i)).len()).sum();
    let mean = total as f64 / trials as f64;
    assert!((mean - 10.0).abs() < 4.0 * (10.0 / trials as f64).sqrt(), "{mean}");
}

#[test]
fn arrivals_sorted_in_unit_interval() {
    for i in 0..1000 {
        let a = gen_arrivals(30.0, &mut trial_rng(4, i));
        assert!(a.times.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.times.iter().all(|&t| (0.0..1.0).contains(&t)));
    }
}

#[test]
fn overlapping_pulses_add_amplitude_variance() {
    let sigma = 0.2;
    let cfg = ReceiverConfig::new(0.01, 0.02, 0.3, sigma, 0.0).unwrap();
    let arrivals = ArrivalSet { times: vec![0.5, 0.5], lead_in: Vec::new() };
    let n = 100_000u64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..n {
        let s = synth_samples(&arrivals, &cfg, EdgeMode::StartLow, &mut trial_rng(8, i));
        // t = 0.51 is sample index 51, stored at 50.
        let v = s.values[50];
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!((mean - 2.0).abs() < 0.01);
    assert!((var / (2.0 * sigma * sigma) - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn simulated_mean_matches_exact_moments() {
    let cfg = ReceiverConfig::new(0.01, 0.01, 0.3, 0.0, 0.0).unwrap();
    let h = count_histogram(10.0, &cfg, EdgeMode::Stationary, 17, 0..1_000_000);
    let e = MomentEstimate::from_histogram(&h);
    let m = moments_exact_noiseless(10.0, &cfg).unwrap();
    assert!((e.mean - m.mean).abs() < 4.0 * e.std_error, "{} vs {}", e.mean, m.mean);
}

#[test]
fn fine_sampling_approaches_dead_time_law() {
    let t = 1e-4;
    let cfg = ReceiverConfig::noiseless(t, 0.01).unwrap();
    let h = count_histogram(10.0, &cfg, EdgeMode::Stationary, 23, 0..1_000_000);
    let dist = subpoisson_pmf(10.0, 0.01 + t / 2.0).unwrap();
    let tv = h.total_variation(&dist.pmf);
    assert!(tv < 0.005, "tv {tv}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trials_replay_identically(seed in any::<u64>(), trial in 0u64..1_000_000, lambda in 0.0f64..40.0) {
        let cfg = ReceiverConfig::new(0.01, 0.02, 0.3, 0.2, 0.02).unwrap();
        let mut a = Simulator::new(cfg, EdgeMode::Stationary);
        let mut b = Simulator::new(cfg, EdgeMode::Stationary);
        // Another trial in between must not affect the replay.
        let first = a.simulate(lambda, &mut trial_rng(seed, trial));
        b.simulate(lambda, &mut trial_rng(seed, trial + 1));
        prop_assert_eq!(first, b.simulate(lambda, &mut trial_rng(seed, trial)));
    }
}
