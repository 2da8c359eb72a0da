//! Closed forms on the point measure: MRCA depths of consecutive leaves and
//! the length of tree carrying exactly the leaves `j..=l`.

use super::{LeafConfig, ZetaVector};
use crate::error::{Error, Result};

fn window_max(z: &[f64], a: usize, b: usize) -> f64 {
    if a > b {
        return 0.0;
    }
    z[a..=b].iter().copied().fold(0.0, f64::max)
}

fn check_window(config: &LeafConfig, zetas: &ZetaVector, j: usize, l: usize) -> Result<()> {
    if zetas.zetas.len() != config.n + 2 {
        return Err(Error::InvalidConfig("depth vector does not match the configuration".into()));
    }
    if j == 0 || j > l || l > config.n {
        return Err(Error::Index(format!("need 1 <= j <= l <= {}, got j={j}, l={l}", config.n)));
    }
    Ok(())
}

/// Time to the MRCA of the consecutive leaves `j..=l` (ordered positions).
pub fn tmrca_consecutive(config: &LeafConfig, zetas: &ZetaVector, j: usize, l: usize) -> Result<f64> {
    check_window(config, zetas, j, l)?;
    let x = &config.positions;
    let z = &zetas.zetas;
    Ok(if j == l {
        0.0
    } else if x[j] > 0.0 {
        window_max(z, j + 1, l)
    } else if x[l] < 0.0 {
        window_max(z, j, l - 1)
    } else {
        window_max(z, j, l)
    })
}

/// Length of the sample-rooted tree carried by exactly the leaves `j..=l`,
/// for windows of at most `n − 1` leaves. The outer depths `ζ_0, ζ_{n+1}`
/// count as infinite here.
pub fn admissible_length(config: &LeafConfig, zetas: &ZetaVector, j: usize, l: usize) -> Result<f64> {
    check_window(config, zetas, j, l)?;
    let n = config.n;
    if l - j + 1 >= n {
        return Err(Error::Index(format!("window j={j}..l={l} must hold at most n-1 = {} leaves", n - 1)));
    }
    let mrca = tmrca_consecutive(config, zetas, j, l)?;
    Ok(window_length(config, &zetas.zetas, j, l, mrca))
}

fn window_length(config: &LeafConfig, z: &[f64], j: usize, l: usize, mrca: f64) -> f64 {
    let n = config.n;
    let x = &config.positions;
    let depth = |i: usize| if i == 0 || i == n + 1 { f64::INFINITY } else { z[i] };
    let top = if x[j] > 0.0 {
        depth(j).min(depth(l + 1))
    } else if x[l] < 0.0 {
        depth(j - 1).min(depth(l))
    } else {
        depth(j - 1).min(depth(l + 1))
    };
    (top - mrca).max(0.0)
}

/// `L_k = Σ_j L_{j:j+k−1}`, the length carried by exactly `k` leaves, `1 ≤ k ≤ n − 1`.
pub fn lk_total(config: &LeafConfig, zetas: &ZetaVector, k: usize) -> Result<f64> {
    let n = config.n;
    if k == 0 || k >= n {
        return Err(Error::Index(format!("need 1 <= k <= n-1 = {}, got {k}", n.saturating_sub(1))));
    }
    (1..=n - k + 1).map(|j| admissible_length(config, zetas, j, j + k - 1)).sum()
}

/// `[L_1, …, L_{n−1}]` in one `O(n²)` sweep with running window maxima.
pub fn lk_all(config: &LeafConfig, zetas: &ZetaVector) -> Vec<f64> {
    let n = config.n;
    let x = &config.positions;
    let z = &zetas.zetas;
    let mut out = vec![0.0; n.saturating_sub(1)];
    for j in 1..=n {
        // maxima of ζ over j..=l, j+1..=l and j..=l-1
        let mut all = z[j];
        let mut tail = 0.0f64;
        let mut head;
        for l in j..=(j + n - 2).min(n) {
            head = all;
            if l > j {
                all = all.max(z[l]);
                tail = tail.max(z[l]);
            }
            let mrca = if l == j {
                0.0
            } else if x[j] > 0.0 {
                tail
            } else if x[l] < 0.0 {
                head
            } else {
                all
            };
            out[l - j] += window_length(config, z, j, l, mrca);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (LeafConfig, ZetaVector) {
        let c = LeafConfig::from_positions(vec![-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]).unwrap();
        let z = ZetaVector { zetas: vec![5.0, 0.5, 1.5, 0.0, 1.2, 2.0, 4.0] };
        (c, z)
    }

    #[test]
    fn singleton_has_zero_tmrca() {
        let (c, z) = fixture();
        for j in 1..=5 {
            assert_eq!(tmrca_consecutive(&c, &z, j, j).unwrap(), 0.0);
        }
    }

    #[test]
    fn spine_window_uses_all_depths() {
        let (c, z) = fixture();
        assert_eq!(tmrca_consecutive(&c, &z, 2, 4).unwrap(), 1.5);
        assert_eq!(tmrca_consecutive(&c, &z, 1, 5).unwrap(), 2.0);
    }

    #[test]
    fn spine_singleton_length() {
        let (c, z) = fixture();
        assert_eq!(admissible_length(&c, &z, 3, 3).unwrap(), 1.2f64.min(1.5));
    }

    #[test]
    fn positive_side_window() {
        let (c, z) = fixture();
        // leaves 4..5 on the right: min(ζ4, ζ6 = ∞) − ζ5 is negative, so clipped
        assert_eq!(admissible_length(&c, &z, 4, 5).unwrap(), 0.0);
        // leaf 5 alone: min(ζ5, ∞) = 2.0
        assert_eq!(admissible_length(&c, &z, 5, 5).unwrap(), 2.0);
        // leaf 4 alone: min(ζ4, ζ5)
        assert_eq!(admissible_length(&c, &z, 4, 4).unwrap(), 1.2);
    }

    #[test]
    fn sweep_matches_pointwise_sums() {
        let (c, z) = fixture();
        let all = lk_all(&c, &z);
        for k in 1..5 {
            assert!((all[k - 1] - lk_total(&c, &z, k).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn index_errors() {
        let (c, z) = fixture();
        assert!(tmrca_consecutive(&c, &z, 0, 2).is_err());
        assert!(tmrca_consecutive(&c, &z, 3, 2).is_err());
        assert!(tmrca_consecutive(&c, &z, 1, 6).is_err());
        assert!(admissible_length(&c, &z, 1, 5).is_err());
        assert!(lk_total(&c, &z, 0).is_err());
        assert!(lk_total(&c, &z, 5).is_err());
    }
}
