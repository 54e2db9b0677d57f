use arw_web::{directed_medians, soc_trace, stabilize_grid};

#[test]
fn grid_is_stable_and_deterministic() {
    let a = stabilize_grid(24, 0.6, 1.0, 5, 1e7).unwrap();
    let b = stabilize_grid(24, 0.6, 1.0, 5, 1e7).unwrap();
    assert!(a.stable());
    assert_eq!(a.states().len(), 24 * 24);
    assert_eq!(a.odometer().len(), 24 * 24);
    assert!(a.states().iter().all(|&s| s == -1 || s == 0));
    assert_eq!(a.states(), b.states());
    assert_eq!(a.odometer(), b.odometer());
    let total: u64 = a.odometer().iter().map(|&c| c as u64).sum();
    assert_eq!(total as f64, a.topplings());
}

#[test]
fn grid_reports_a_reached_cap() {
    let g = stabilize_grid(32, 1.5, 0.5, 2, 10.0).unwrap();
    assert!(!g.stable());
    assert_eq!(g.topplings(), 10.0);
}

#[test]
fn grid_rejects_bad_inputs() {
    assert!(stabilize_grid(0, 0.5, 1.0, 1, 100.0).is_err());
    assert!(stabilize_grid(8, -0.5, 1.0, 1, 100.0).is_err());
    assert!(stabilize_grid(8, 0.5, 0.0, 1, 100.0).is_err());
    assert!(stabilize_grid(8, 0.5, 1.0, 1, 0.0).is_err());
}

#[test]
fn soc_trace_is_pairs_of_additions_and_density() {
    let t = soc_trace(16, 1.0, 2000, 3).unwrap();
    assert!(!t.is_empty() && t.len() % 2 == 0);
    let pairs: Vec<_> = t.chunks(2).collect();
    assert!(pairs.windows(2).all(|w| w[0][0] < w[1][0]));
    assert!(pairs.iter().all(|p| (0.0..=1.0).contains(&p[1])));
    assert!(soc_trace(2, 1.0, 10, 3).is_err());
}

#[test]
fn directed_medians_grow_with_density() {
    let m = directed_medians(256, 1.0, vec![0.1, 1.5], 15, 9).unwrap();
    assert_eq!(m.len(), 2);
    assert!(m[0] < 16.0, "{m:?}");
    assert!(m[1] > 16.0, "{m:?}");
    assert!(directed_medians(0, 1.0, vec![0.5], 5, 1).is_err());
}
