//! Property-based checks of the toppling engine and experiment invariants.

use arw_core::engine::harness::{check_least_action, InstanceSpec};
use arw_core::experiments::animals::greedy_animal_max;
use arw_core::experiments::ghosts::ghost_run;
use arw_core::experiments::phase::{estimate_mu_c, PhaseProtocol};
use arw_core::rng::{self, domain};
use arw_core::*;
use proptest::prelude::*;
use rand::Rng;

fn lambda_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(3.0), Just(f64::INFINITY)]
}

fn instance() -> impl Strategy<Value = (usize, Vec<u32>, f64, u64)> {
    (1usize..=2, 1usize..=8)
        .prop_flat_map(|(dim, side)| {
            let n = if dim == 1 { side } else { side * side };
            (Just(dim), proptest::collection::vec(0u32..4, n), lambda_strategy(), any::<u64>())
        })
        .prop_map(|(dim, counts, lambda, seed)| (dim, counts, lambda, seed))
}

fn build(dim: usize, counts: &[u32], lambda: f64, seed: u64) -> (Configuration, InstructionField) {
    let side = if dim == 1 { counts.len() } else { (counts.len() as f64).sqrt() as usize } as i32;
    let arena = Arena::new(dim, [0; 3], [side - 1; 3], 1, BoundaryMode::Frozen).unwrap();
    let jumps = if dim == 1 { JumpDistribution::symmetric_1d() } else { JumpDistribution::symmetric_2d() };
    (Configuration::from_counts(arena, counts).unwrap(), InstructionField::new(seed, lambda, jumps).unwrap())
}

const CAP: u64 = 1 << 26;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn any_order_gives_the_same_result((dim, counts, lambda, seed) in instance(), order in any::<u64>()) {
        let (config, field) = build(dim, &counts, lambda, seed);
        let a = stabilize(config.clone(), &field, &Policy::Fifo, CAP).unwrap();
        let b = stabilize(config, &field, &Policy::UniformRandom(order), CAP).unwrap();
        prop_assert_eq!(a.status, StabilizationStatus::Stable);
        prop_assert_eq!(&a.final_config, &b.final_config);
        prop_assert_eq!(a.odometer, b.odometer);
    }

    #[test]
    fn particles_are_conserved((dim, counts, lambda, seed) in instance()) {
        let (config, field) = build(dim, &counts, lambda, seed);
        let before = config.total_particles();
        let r = stabilize(config, &field, &Policy::Lifo, CAP).unwrap();
        prop_assert_eq!(r.final_config.total_particles(), before);
        prop_assert!(r.final_config.is_stable_in_window());
    }

    #[test]
    fn more_particles_never_topple_less((dim, counts, lambda, seed) in instance(), extra in 0usize..64) {
        let (config, field) = build(dim, &counts, lambda, seed);
        let mut more = config.clone();
        let sites: Vec<Site> = config.arena().window_sites().collect();
        more.add_particle(sites[extra % sites.len()]).unwrap();
        let a = stabilize(config, &field, &Policy::Fifo, CAP).unwrap();
        let b = stabilize(more, &field, &Policy::Fifo, CAP).unwrap();
        prop_assert!(a.odometer.le(&b.odometer));
    }

    #[test]
    fn larger_windows_never_topple_less(counts in proptest::collection::vec(0u32..4, 9), lambda in lambda_strategy(), seed in any::<u64>()) {
        let field = InstructionField::new(seed, lambda, JumpDistribution::symmetric_1d()).unwrap();
        let small = Arena::line(-4, 4, 1, BoundaryMode::Frozen).unwrap();
        let big = Arena::line(-8, 8, 1, BoundaryMode::Frozen).unwrap();
        let mut padded = vec![0u32; 4];
        padded.extend(&counts);
        padded.extend([0u32; 4]);
        let a = stabilize(Configuration::from_counts(small, &counts).unwrap(), &field, &Policy::Fifo, CAP).unwrap();
        let b = stabilize(Configuration::from_counts(big, &padded).unwrap(), &field, &Policy::Fifo, CAP).unwrap();
        for x in -4..=4 {
            prop_assert!(a.odometer.get(Site::d1(x)) <= b.odometer.get(Site::d1(x)));
        }
    }

    #[test]
    fn least_action_bounds_every_acceptable_stabilization((dim, counts, lambda, seed) in instance(), surplus in 0u32..4) {
        let (config, field) = build(dim, &counts, lambda, seed);
        let r = check_least_action(&config, &field, seed, surplus, CAP).unwrap();
        prop_assert!(r.holds);
        prop_assert!(r.beta_topplings <= r.alpha_topplings);
    }

    #[test]
    fn state_operations_round_trip(n in 1u32..1000) {
        let s = SiteState::active(n).unwrap();
        prop_assert_eq!(s.plus_one().unwrap().minus_one().unwrap(), s);
        prop_assert_eq!(s.particle_count(), n);
        let slept = s.sleep_apply().unwrap();
        prop_assert_eq!(slept.particle_count(), n);
        prop_assert_eq!(slept == SiteState::Sleeping, n == 1);
    }

    #[test]
    fn ghosts_bound_ghost_only_visits(n in 1i32..8, mu in 0.05f64..2.0, seed in any::<u64>()) {
        let c = ghost_run(n, mu, seed).unwrap();
        prop_assert!(c.l <= c.l_tilde);
        prop_assert!(c.l <= c.w);
        prop_assert!(c.w <= c.particles);
    }
}

#[test]
fn capped_runs_report_a_lower_bound() {
    let mut capped = 0;
    for seed in 0..100 {
        let inst = InstanceSpec::random(seed, 32, 16).build(seed).unwrap();
        let cap = engine::default_cap(inst.config.arena().window_len(), inst.spec.mu);
        let short = stabilize(inst.config.clone(), &inst.field, &Policy::Sweep, cap).unwrap();
        let full = stabilize(inst.config, &inst.field, &Policy::Fifo, CAP).unwrap();
        assert_eq!(full.status, StabilizationStatus::Stable);
        assert!(short.odometer.le(&full.odometer), "seed {seed}");
        match short.status {
            StabilizationStatus::Stable => assert_eq!(short.odometer, full.odometer),
            StabilizationStatus::CapExceeded => {
                capped += 1;
                assert_eq!(short.topplings_total, cap);
            }
            StabilizationStatus::Unstable => panic!("policy runs never stop early"),
        }
    }
    assert!(capped < 100);
}

#[test]
fn thinning_never_increases_animal_maxima() {
    let arena = Arena::rect((-32, -32), (31, 31), 0, BoundaryMode::Frozen).unwrap();
    let (mu, mu_thin) = (0.3, 0.15);
    let mut ordered = 0;
    for seed in 0..100 {
        let dense = sample_initial(&InitialLaw::Poisson(mu), &arena, seed).unwrap();
        let mut g = rng::sequential_rng(seed, domain::THINNING);
        let counts: Vec<u32> = arena
            .window_sites()
            .map(|s| (0..dense.get(s).particle_count()).filter(|_| g.random_bool(mu_thin / mu)).count() as u32)
            .collect();
        let thin = Configuration::from_counts(arena.clone(), &counts).unwrap();
        let a = greedy_animal_max(&dense, 8).unwrap();
        let b = greedy_animal_max(&thin, 8).unwrap();
        ordered += b.max_ratio.iter().zip(&a.max_ratio).all(|(t, d)| t <= d) as u32;
    }
    assert!(ordered >= 95, "{ordered}/100");
}

#[test]
fn phase_estimate_brackets_its_point_estimate() {
    let jumps = JumpDistribution::directed_1d();
    let protocol = PhaseProtocol { l_list: vec![128, 512], reps: 11, cap: Some(1 << 30), tolerance: 0.15, mu_hi: 1.0, max_retries: 1 };
    for lambda in [0.5, 2.0] {
        let e = estimate_mu_c(lambda, 1, &jumps, &protocol, 2).unwrap();
        assert!(e.ci_low <= e.mu_c_hat && e.mu_c_hat <= e.ci_high);
        assert!(e.width() <= 0.15);
        assert!(!e.probes.is_empty());
    }
}
