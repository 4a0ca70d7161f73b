use polymer_lab::charges::{skorohod_stream, ChargeModel, ChargeStream};
use polymer_lab::hamiltonian::{hamiltonian_path, run_polymer, Checkpoints};
use polymer_lab::oracle::direct_sums;
use polymer_lab::rng::{self, Purpose};
use polymer_lab::walk::{local_time_field, path_from_directions, record_path, Site, WalkConfig};
use polymer_lab::charges::{ChargeFeed, DurationMode};
use proptest::prelude::*;
use rand::Rng;

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(1.0)
}

fn assert_matches(sites: &[Site], stream: &ChargeStream) {
    let trace = hamiltonian_path(sites, stream, &Checkpoints::new(vec![])).unwrap();
    let direct = direct_sums(sites, stream).unwrap();
    let last = trace.last;
    let dec = trace.decomposition;
    assert_eq!(last.i, direct.i);
    assert_eq!(dec.i_n, direct.i);
    for (got, want, what) in [
        (last.h, direct.h, "H"),
        (last.v, direct.v, "V"),
        (last.xi, direct.xi, "Xi"),
        (dec.m_n, direct.m, "M"),
        (dec.n_n, direct.n, "N"),
        (dec.xi1, direct.xi1, "Xi1"),
        (dec.xi2, direct.xi2, "Xi2"),
        (dec.a_n, direct.a, "a"),
        (dec.b_n, direct.b, "b"),
    ] {
        assert!(rel(got, want) <= 1e-9, "{what}: engine {got} direct {want}");
    }
    assert!(dec.identity_residual(last.xi) <= 1e-9);
}

#[test]
fn five_hundred_random_instances() {
    let mut rng = rng::stream(11, 0, Purpose::Custom(1));
    let models = [
        ChargeModel::rademacher(),
        ChargeModel::gaussian(),
        ChargeModel::discrete(&[(-2.0, 0.125), (0.0, 0.75), (2.0, 0.125)]).unwrap(),
    ];
    for inst in 0..500u64 {
        let d = rng.random_range(1..=4usize);
        let n = rng.random_range(1..=150u64);
        let model = &models[inst as usize % 3];
        let sites = record_path(&WalkConfig::new(d, n, 100 + inst)).unwrap();
        let stream = if inst % 2 == 0 {
            let mut feed = ChargeFeed::new(model, DurationMode::Unit, 100 + inst, 0).unwrap();
            ChargeStream { pairs: (0..n).map(|_| feed.next_pair()).collect() }
        } else {
            skorohod_stream(model, n as usize, 1e-2, 100 + inst).unwrap()
        };
        assert_matches(&sites, &stream);
    }
}

#[test]
fn streamed_and_replayed_runs_agree() {
    let cfg = WalkConfig::new(3, 2000, 5).replicate(4);
    let model = ChargeModel::gaussian();
    let mut feed = ChargeFeed::new(&model, DurationMode::Unit, 5, 4).unwrap();
    let cp = Checkpoints::powers_of_two(4, 10);
    let streamed = run_polymer(&cfg, &mut feed, &cp).unwrap();
    let mut feed = ChargeFeed::new(&model, DurationMode::Unit, 5, 4).unwrap();
    let stream = ChargeStream { pairs: (0..2000).map(|_| feed.next_pair()).collect() };
    let replayed = hamiltonian_path(&record_path(&cfg).unwrap(), &stream, &cp).unwrap();
    assert_eq!(streamed.trace.checkpoints, replayed.checkpoints);
    assert_eq!(streamed.occupancy.total_count(), 2000);
}

#[test]
fn conditional_moments_given_the_walk() {
    // Given the walk, H_n is a martingale sum with E[H²] = I_n and Ξ^(2)
    // has mean zero.
    let sites = record_path(&WalkConfig::new(1, 400, 3)).unwrap();
    let reps = 10_000u64;
    let mut h = Vec::with_capacity(reps as usize);
    let mut xi2 = Vec::with_capacity(reps as usize);
    let mut i_n = 0;
    for r in 0..reps {
        let mut feed = ChargeFeed::new(&ChargeModel::gaussian(), DurationMode::Unit, 8, r).unwrap();
        let stream = ChargeStream { pairs: (0..400).map(|_| feed.next_pair()).collect() };
        let t = hamiltonian_path(&sites, &stream, &Checkpoints::new(vec![])).unwrap();
        h.push(t.last.h);
        xi2.push(t.decomposition.xi2);
        i_n = t.last.i;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64]| {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    };
    let i_n = i_n as f64;
    let se_h = (var(&h) / reps as f64).sqrt();
    assert!(mean(&h).abs() < 4.0 * se_h);
    // Var(H) = I_n; the sample variance has relative s.e. well under 5%.
    assert!((var(&h) / i_n - 1.0).abs() < 0.08, "var {} vs I_n {i_n}", var(&h));
    let se_x = (var(&xi2) / reps as f64).sqrt();
    assert!(mean(&xi2).abs() < 4.0 * se_x, "mean Xi2 {} se {se_x}", mean(&xi2));
}

#[test]
fn five_step_trace() {
    let sites: Vec<Site> = [1, 0, 1, 0, 1].iter().map(|&x| Site::from(x)).collect();
    let stream = ChargeStream::unit(&[1.0, -1.0, 1.0, -1.0, 1.0]);
    let t = hamiltonian_path(&sites, &stream, &Checkpoints::every_step(5)).unwrap();
    let is: Vec<u64> = (1..=5).map(|k| t.at(k).unwrap().i).collect();
    assert_eq!(is, [0, 0, 1, 2, 4]);
    assert_eq!((t.last.h, t.last.v, t.last.xi), (4.0, 6.0, 6.0));
}

fn path_and_charges() -> impl Strategy<Value = (usize, Vec<usize>, Vec<(f64, f64)>)> {
    (1usize..=3).prop_flat_map(|d| {
        (1usize..80).prop_flat_map(move |n| {
            (
                Just(d),
                prop::collection::vec(0..2 * d, n),
                prop::collection::vec((-3.0f64..3.0, 0.05f64..3.0), n),
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn engine_equals_direct_sums((d, dirs, pairs) in path_and_charges()) {
        let sites = path_from_directions(d, &dirs).unwrap();
        assert_matches(&sites, &ChargeStream::from_pairs(pairs).unwrap());
    }

    #[test]
    fn unit_durations_make_clock_equal_variance((d, dirs, pairs) in path_and_charges()) {
        let sites = path_from_directions(d, &dirs).unwrap();
        let charges: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let t = hamiltonian_path(&sites, &ChargeStream::unit(&charges), &Checkpoints::new(vec![])).unwrap();
        prop_assert!(rel(t.last.xi, t.last.v) <= 1e-12);
        prop_assert_eq!(t.decomposition.n_n, 0.0);
        prop_assert!(t.last.v >= 0.0);
    }

    #[test]
    fn hamiltonian_from_site_sums((dirs, charges) in (1usize..200).prop_flat_map(|n| (
        prop::collection::vec(0usize..2, n),
        prop::collection::vec(-2.0f64..2.0, n),
    ))) {
        // H_n = Σ_x ((Σ q)² - Σ q²) / 2 and I_n = Σ_x C(L_x, 2).
        let sites = path_from_directions(1, &dirs).unwrap();
        let t = hamiltonian_path(&sites, &ChargeStream::unit(&charges), &Checkpoints::new(vec![])).unwrap();
        let mut by_site = std::collections::BTreeMap::<i64, (f64, f64)>::new();
        for (s, q) in sites.iter().zip(&charges) {
            let e = by_site.entry(s.coords[0]).or_default();
            e.0 += q;
            e.1 += q * q;
        }
        let h: f64 = by_site.values().map(|(s, s2)| (s * s - s2) / 2.0).sum();
        prop_assert!((t.last.h - h).abs() <= 1e-9 * h.abs().max(1.0));
        let pairs: u64 = local_time_field(&sites).unwrap().iter().map(|(_, c)| c * c.saturating_sub(1) / 2).sum();
        prop_assert_eq!(t.last.i, pairs);
    }

    #[test]
    fn checkpoints_are_prefix_values((dirs, charges) in (2usize..60).prop_flat_map(|n| (
        prop::collection::vec(0usize..4, n),
        prop::collection::vec(-2.0f64..2.0, n),
    ))) {
        let sites = path_from_directions(2, &dirs).unwrap();
        let n = sites.len() as u64;
        let stream = ChargeStream::unit(&charges);
        let full = hamiltonian_path(&sites, &stream, &Checkpoints::every_step(n)).unwrap();
        let k = n / 2;
        let prefix = direct_sums(&sites[..k as usize], &ChargeStream::unit(&charges[..k as usize])).unwrap();
        let c = full.at(k).unwrap();
        prop_assert_eq!(c.i, prefix.i);
        prop_assert!(rel(c.h, prefix.h) <= 1e-9);
        let max_h = (1..=n).map(|j| full.at(j).unwrap().h.abs()).fold(0.0, f64::max);
        prop_assert_eq!(full.last.max_abs_h, max_h);
    }
}
