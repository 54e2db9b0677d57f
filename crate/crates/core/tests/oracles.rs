//! Independent reimplementations checked against the engine.

use std::collections::{BTreeMap, HashSet};

use arw_core::experiments::animals::greedy_animal_max;
use arw_core::experiments::recursion::RecursionTrace;
use arw_core::rng::{self, domain};
use arw_core::*;
use rand::Rng;

/// Line state with explicit sleeping flags, toppled by hand from the field.
#[derive(Clone, PartialEq, Eq, Hash)]
struct Brute {
    counts: Vec<u32>,
    asleep: Vec<bool>,
    odometer: Vec<u64>,
}

fn brute_settle(b: &mut Brute, jump_only: bool) {
    if jump_only {
        for i in 0..b.counts.len() {
            if b.counts[i] == 1 {
                b.asleep[i] = true;
            }
        }
    }
}

fn brute_topple(b: &Brute, field: &InstructionField, lo: i32, i: usize) -> Brute {
    let mut n = b.clone();
    n.odometer[i] += 1;
    match field.instruction_at(Site::d1(lo + i as i32), n.odometer[i]) {
        Instruction::Sleep => {
            if n.counts[i] == 1 {
                n.asleep[i] = true;
            }
        }
        Instruction::Jump(z) => {
            n.counts[i] -= 1;
            let t = i as i64 + z.0[0] as i64;
            if (0..n.counts.len() as i64).contains(&t) {
                let t = t as usize;
                n.counts[t] += 1;
                n.asleep[t] = false;
            }
        }
    }
    brute_settle(&mut n, field.is_jump_only());
    n
}

/// Every reachable stable outcome over all legal toppling orders.
fn brute_outcomes(counts: &[u32], field: &InstructionField, lo: i32) -> HashSet<Brute> {
    let mut start = Brute { counts: counts.to_vec(), asleep: vec![false; counts.len()], odometer: vec![0; counts.len()] };
    brute_settle(&mut start, field.is_jump_only());
    let mut seen = HashSet::new();
    let mut finals = HashSet::new();
    let mut stack = vec![start];
    while let Some(b) = stack.pop() {
        if !seen.insert(b.clone()) {
            continue;
        }
        assert!(seen.len() < 2_000_000, "exploration too large");
        let unstable: Vec<usize> = (0..b.counts.len()).filter(|&i| b.counts[i] > 0 && !b.asleep[i]).collect();
        if unstable.is_empty() {
            finals.insert(b);
            continue;
        }
        for i in unstable {
            stack.push(brute_topple(&b, field, lo, i));
        }
    }
    finals
}

#[test]
fn every_legal_order_matches_the_engine() {
    let mut r = rng::sequential_rng(17, domain::HARNESS);
    let mut instances = 0;
    let mut nontrivial = 0;
    while instances < 300 {
        let sites = r.random_range(1..=5usize);
        let mut counts = vec![0u32; sites];
        for _ in 0..r.random_range(0..=4) {
            counts[r.random_range(0..sites)] += 1;
        }
        let lambda = [0.5, 1.0, 2.0, f64::INFINITY][r.random_range(0..4)];
        let jumps = if r.random_bool(0.5) { JumpDistribution::symmetric_1d() } else { JumpDistribution::biased_1d(0.7).unwrap() };
        let field = InstructionField::new(r.random(), lambda, jumps).unwrap();
        let outcomes = brute_outcomes(&counts, &field, 0);
        assert_eq!(outcomes.len(), 1, "legal orders disagree on {counts:?}");
        let expected = outcomes.into_iter().next().unwrap();

        let arena = Arena::line(0, sites as i32 - 1, 1, BoundaryMode::Frozen).unwrap();
        let config = Configuration::from_counts(arena, &counts).unwrap();
        for policy in [Policy::Fifo, Policy::Lifo, Policy::Sweep, Policy::UniformRandom(instances)] {
            let res = stabilize(config.clone(), &field, &policy, 1 << 24).unwrap();
            assert_eq!(res.status, StabilizationStatus::Stable);
            let got: Vec<u64> = (0..sites as i32).map(|x| res.odometer.get(Site::d1(x))).collect();
            assert_eq!(got, expected.odometer, "odometer on {counts:?} with {policy:?}");
            for (i, s) in res.final_config.window_states().into_iter().enumerate() {
                let want = match (expected.counts[i], expected.asleep[i]) {
                    (0, _) => SiteState::Empty,
                    (1, true) => SiteState::Sleeping,
                    (n, _) => panic!("stable outcome with {n} active particles"),
                };
                assert_eq!(s, want);
            }
        }
        nontrivial += (expected.odometer.iter().sum::<u64>() > 2) as u32;
        instances += 1;
    }
    assert!(nontrivial > 50);
}

/// Stabilize on the half-line by the left-to-right sweep, tracking the
/// recursion by hand from the same per-site randomness.
#[test]
fn recursion_identity_holds_for_arbitrary_inputs() {
    let mut r = rng::sequential_rng(3, domain::HARNESS);
    for _ in 0..500 {
        let l = r.random_range(0..60);
        let eta: Vec<u64> = (0..l).map(|_| r.random_range(0..4)).collect();
        let y: Vec<u8> = (0..l).map(|_| r.random_range(0..2)).collect();
        let t = RecursionTrace::from_inputs(&eta, &y);
        assert!(t.is_consistent());
        let mut n = 0u64;
        for i in 0..l {
            n = (n + eta[i]).saturating_sub(y[i] as u64);
        }
        assert_eq!(t.n_l(), n);
    }
}

#[test]
fn mass_leaving_the_half_line_passes_through_the_origin() {
    for seed in 0..50 {
        let l = 20;
        let field = InstructionField::new(seed, 1.0, JumpDistribution::directed_1d()).unwrap();
        let arena = Arena::line(-l, 0, 1, BoundaryMode::Frozen).unwrap();
        let mut counts = vec![1u32; l as usize];
        counts.push(0);
        let config = Configuration::from_counts(arena, &counts).unwrap();
        let res = stabilize(config, &field, &Policy::Sweep, 1 << 20).unwrap();
        let c = &res.final_config;
        let arrived = c.get(Site::ORIGIN).particle_count() as u64 + c.get(Site::d1(1)).particle_count() as u64;
        let left_after: u64 = (-l..0).map(|x| c.get(Site::d1(x)).particle_count() as u64).sum();
        assert_eq!(arrived, l as u64 - left_after);
        // Every particle that left the origin used one instruction there, plus the sleeps it met.
        assert!(res.origin_odometer >= c.get(Site::d1(1)).particle_count() as u64);
    }
}

#[test]
fn animal_maxima_agree_with_naive_subset_search() {
    // 4x4 window: every subset through the origin, connectivity checked by flood fill.
    let arena = Arena::rect((-1, -1), (2, 2), 0, BoundaryMode::Frozen).unwrap();
    let sites: Vec<Site> = arena.window_sites().collect();
    let origin = sites.iter().position(|&s| s == Site::ORIGIN).unwrap();
    for seed in 0..20 {
        let config = sample_initial(&InitialLaw::Poisson(0.6), &arena, seed).unwrap();
        let w: Vec<u64> = sites.iter().map(|&s| config.get(s).particle_count() as u64).collect();
        let mut best = vec![0u64; 6];
        let mut count = vec![0u64; 6];
        for mask in 0u32..(1 << sites.len()) {
            if mask & (1 << origin) == 0 || mask.count_ones() as usize > 6 {
                continue;
            }
            let members: Vec<usize> = (0..sites.len()).filter(|&i| mask & (1 << i) != 0).collect();
            let mut reached = 1u32 << origin;
            let mut frontier = vec![origin];
            while let Some(i) = frontier.pop() {
                for &j in &members {
                    let (a, b) = (sites[i].0, sites[j].0);
                    if reached & (1 << j) == 0 && (a[0] - b[0]).abs() + (a[1] - b[1]).abs() == 1 {
                        reached |= 1 << j;
                        frontier.push(j);
                    }
                }
            }
            if reached != mask {
                continue;
            }
            let k = members.len() - 1;
            count[k] += 1;
            best[k] = best[k].max(members.iter().map(|&i| w[i]).sum());
        }
        let rep = greedy_animal_max(&config, 6).unwrap();
        assert_eq!(rep.counted, count);
        for k in 0..6 {
            assert_eq!(rep.max_ratio[k], best[k] as f64 / (k + 1) as f64);
            assert_eq!(rep.fillable[k], best[k] >= k as u64 + 1);
        }
    }
}

#[test]
fn ctmc_and_topplings_agree_in_law_on_two_sites() {
    let arena = Arena::line(0, 1, 1, BoundaryMode::Frozen).unwrap();
    let config = Configuration::from_counts(arena, &[2, 1]).unwrap();
    let jumps = JumpDistribution::biased_1d(0.7).unwrap();
    let n = 40_000;
    let mut df = BTreeMap::new();
    let mut ct = BTreeMap::new();
    for seed in 0..n {
        let field = InstructionField::new(seed, 0.5, jumps.clone()).unwrap();
        let r = stabilize(config.clone(), &field, &Policy::Lifo, 1 << 20).unwrap();
        *df.entry(r.final_config.window_states()).or_insert(0u64) += 1;
        let c = models::ctmc_run(config.clone(), 0.5, &jumps, seed, models::CtmcHorizon::Absorption).unwrap();
        *ct.entry(c.final_config.window_states()).or_insert(0u64) += 1;
    }
    let tv = stats::tv_distance(&df, &ct);
    assert!(tv < 0.02, "total variation {tv}");
}
