//! Goodness-of-fit statistics used by the verification suites.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// One-sample Kolmogorov–Smirnov distance between `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        let lo = f - i as f64 / n;
        let hi = (i + 1) as f64 / n - f;
        d.max(lo).max(hi)
    })
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value at level 0.01: `1.63/√n` (one sample) or
/// `1.63·√((n+m)/(nm))` (two samples).
pub fn ks_critical_01(n: usize, m: Option<usize>) -> f64 {
    let n = n as f64;
    match m {
        None => 1.63 / n.sqrt(),
        Some(m) => {
            let m = m as f64;
            1.63 * ((n + m) / (n * m)).sqrt()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Chi-square test of homogeneity for two histograms over the same bins.
/// Bins empty in both samples are dropped; the tail is pooled so that every
/// kept bin has at least `min_expected` expected counts.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64], min_expected: f64) -> ChiSquareTest {
    let len = a.len().max(b.len());
    let get = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().map(|&x| x as f64).sum();
    let nb: f64 = b.iter().map(|&x| x as f64).sum();
    let total = na + nb;

    // pool adjacent bins until both expected counts reach the floor
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut cur = (0.0, 0.0);
    for i in 0..len {
        cur.0 += get(a, i);
        cur.1 += get(b, i);
        let col = cur.0 + cur.1;
        if col * na.min(nb) / total >= min_expected {
            bins.push(cur);
            cur = (0.0, 0.0);
        }
    }
    if cur.0 + cur.1 > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += cur.0;
                last.1 += cur.1;
            }
            None => bins.push(cur),
        }
    }

    let mut stat = 0.0;
    for &(oa, ob) in &bins {
        let col = oa + ob;
        let ea = col * na / total;
        let eb = col * nb / total;
        stat += (oa - ea).powi(2) / ea + (ob - eb).powi(2) / eb;
    }
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 { 1.0 } else { ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN) };
    ChiSquareTest { statistic: stat, dof, p_value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_grid_is_half_bin() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.005).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_and_disjoint() {
        let a = [0.1, 0.4, 0.7];
        assert_eq!(ks_two_sample(&a, &a), 0.0);
        assert_eq!(ks_two_sample(&a, &[1.0, 2.0]), 1.0);
    }

    #[test]
    fn chi_square_equal_histograms() {
        let t = chi_square_homogeneity(&[50, 30, 20], &[100, 60, 40], 5.0);
        assert!(t.statistic.abs() < 1e-12);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_detects_shift() {
        let t = chi_square_homogeneity(&[500, 300, 200], &[200, 300, 500], 5.0);
        assert!(t.p_value < 1e-10);
    }
}
