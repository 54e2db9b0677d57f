//! Small statistics toolkit for the Monte Carlo experiments.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn std_err(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Lower median of a sample.
pub fn median<T: Copy + PartialOrd>(xs: &[T]) -> T {
    quantile(xs, 0.5)
}

/// Order statistic at rank `ceil(q n)` (1-based, at least 1).
pub fn quantile<T: Copy + PartialOrd>(xs: &[T], q: f64) -> T {
    assert!(!xs.is_empty(), "quantile of an empty sample");
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable sample"));
    let k = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[k - 1]
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// 95% normal-approximation interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
}

pub const Z95: f64 = 1.959963984540054;

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = mean(xs);
        let h = Z95 * std_err(xs);
        Estimate { value: m, ci_low: m - h, ci_high: m + h, n: xs.len() as u64 }
    }

    pub fn proportion(successes: u64, n: u64) -> Self {
        let p = successes as f64 / n as f64;
        let h = Z95 * (p * (1.0 - p) / n as f64).sqrt();
        Estimate { value: p, ci_low: p - h, ci_high: p + h, n }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

/// Pearson goodness-of-fit p-value of `counts` against `probs`.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("at least two cells");
    1.0 - dist.cdf(stat)
}

/// Two-sided Kolmogorov-Smirnov p-value for an exponential law of `rate`.
pub fn ks_exponential(xs: &[f64], rate: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = 1.0 - (-rate * x).exp();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        s += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    s.clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MannKendall {
    pub s: i64,
    pub z: f64,
    /// Two-sided p-value.
    pub p_value: f64,
}

/// Mann-Kendall trend test with the tie-corrected variance.
pub fn mann_kendall(xs: &[f64]) -> MannKendall {
    let n = xs.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut ties: BTreeMap<u64, u64> = BTreeMap::new();
    for x in xs {
        *ties.entry(x.to_bits()).or_default() += 1;
    }
    let nf = n as f64;
    let tie_term: f64 = ties.values().map(|&t| (t * (t - 1) * (2 * t + 5)) as f64).sum();
    let var = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = if var <= 0.0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / var.sqrt()
    } else if s < 0 {
        (s + 1) as f64 / var.sqrt()
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).unwrap();
    MannKendall { s, z, p_value: 2.0 * (1.0 - normal.cdf(z.abs())) }
}

/// Total-variation distance between two empirical laws.
pub fn tv_distance<K: Ord>(a: &BTreeMap<K, u64>, b: &BTreeMap<K, u64>) -> f64 {
    let na: u64 = a.values().sum();
    let nb: u64 = b.values().sum();
    let mut d = 0.0;
    for (k, &ca) in a {
        let cb = b.get(k).copied().unwrap_or(0);
        d += (ca as f64 / na as f64 - cb as f64 / nb as f64).abs();
    }
    for (k, &cb) in b {
        if !a.contains_key(k) {
            d += cb as f64 / nb as f64;
        }
    }
    d / 2.0
}

/// Least-squares slope of `ys` against `xs`.
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_moments() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(median(&[5, 1, 3]), 3);
        assert_eq!(median(&[4, 1, 3, 2]), 2);
    }

    #[test]
    fn mann_kendall_detects_trend() {
        let up: Vec<f64> = (0..20).map(|i| i as f64).collect();
        assert!(mann_kendall(&up).p_value < 1e-5);
        let flat = vec![3.0; 20];
        assert_eq!(mann_kendall(&flat).s, 0);
        assert_eq!(mann_kendall(&flat).p_value, 1.0);
    }

    #[test]
    fn tv_of_identical_and_disjoint() {
        let a: BTreeMap<u8, u64> = [(0, 5), (1, 5)].into();
        let b: BTreeMap<u8, u64> = [(2, 7)].into();
        assert_eq!(tv_distance(&a, &a), 0.0);
        assert_eq!(tv_distance(&a, &b), 1.0);
    }

    #[test]
    fn chi_square_exact_fit() {
        assert!((chi_square_gof(&[250, 250, 500], &[0.25, 0.25, 0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_tail() {
        // P(K > 1.36) is close to 0.05.
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((linear_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
