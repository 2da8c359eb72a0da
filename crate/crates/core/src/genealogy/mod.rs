//! Exact sampling of the ancestral tree of `n` individuals drawn from the
//! stationary population, in its coalescent-point-process form: ordered leaf
//! positions on the population interval, one branch depth per position, and
//! the tree obtained by attaching every branch to the first deeper branch on
//! the side of the spine.

mod closed;
mod mutations;
mod newick;
mod tree;

pub use closed::{admissible_length, lk_all, lk_total, tmrca_consecutive};
pub use mutations::{carrier_histogram, drop_mutations, leafset_counts, MutationAtom, MutationOverlay};
pub use newick::{newick_export, newick_parse};
pub use tree::{build_tree, GenealogyTree, Node, RootMode};

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;

/// Sampled population interval `[−e_g, e_d]` with ordered leaf positions.
///
/// `positions` has length `n + 2`: the two interval ends and the `n` sample
/// positions between them; exactly one sample (the spine, sample label 0) sits at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafConfig {
    pub n: usize,
    pub e_g: f64,
    pub e_d: f64,
    pub z0: f64,
    pub positions: Vec<f64>,
    pub spine_index: usize,
    /// Sample label of the leaf at ordered position `k` is `labels[k - 1]`.
    pub labels: Vec<usize>,
}

impl LeafConfig {
    /// Builds a configuration from explicit ordered positions (ends included).
    /// Samples are labelled 0 for the spine and 1, 2, … left to right for the rest.
    pub fn from_positions(positions: Vec<f64>) -> Result<Self> {
        if positions.len() < 3 {
            return Err(Error::InvalidConfig("need at least the two ends and one sample".into()));
        }
        let n = positions.len() - 2;
        let spine_index = positions[1..=n]
            .iter()
            .position(|&x| x == 0.0)
            .map(|i| i + 1)
            .ok_or_else(|| Error::InvalidConfig("no sample at position 0".into()))?;
        let mut next = 1;
        let labels = (1..=n)
            .map(|k| {
                if k == spine_index {
                    0
                } else {
                    next += 1;
                    next - 1
                }
            })
            .collect();
        let cfg = Self {
            n,
            e_g: -positions[0],
            e_d: positions[n + 1],
            z0: positions[n + 1] - positions[0],
            positions,
            spine_index,
            labels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if n == 0 {
            return bad("n must be at least 1");
        }
        if self.positions.len() != n + 2 || self.labels.len() != n {
            return bad("positions must have n + 2 entries and labels n");
        }
        if !(self.e_g > 0.0 && self.e_d > 0.0) {
            return bad("interval ends must be positive");
        }
        if self.positions[0] != -self.e_g || self.positions[n + 1] != self.e_d {
            return bad("end positions must be -e_g and e_d");
        }
        if self.positions.iter().any(|x| !x.is_finite()) || self.positions.windows(2).any(|w| w[0] >= w[1]) {
            return bad("positions must be finite and strictly increasing");
        }
        if !(1..=n).contains(&self.spine_index) || self.positions[self.spine_index] != 0.0 {
            return bad("spine index must point at the sample at 0");
        }
        let mut seen = vec![false; n];
        for &l in &self.labels {
            if l >= n || std::mem::replace(&mut seen[l], true) {
                return bad("labels must be a permutation of 0..n");
            }
        }
        if self.labels[self.spine_index - 1] != 0 {
            return bad("the spine carries sample label 0");
        }
        Ok(())
    }

    /// `I_0, …, I_{n+1}`: a negative position owns the gap to its right, a
    /// positive one the gap to its left, and the spine owns nothing.
    pub fn intervals(&self) -> Vec<f64> {
        let x = &self.positions;
        (0..=self.n + 1)
            .map(|k| {
                if x[k] < 0.0 {
                    x[k + 1] - x[k]
                } else if x[k] > 0.0 {
                    x[k] - x[k - 1]
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Draws `n` sample positions on a stationary population.
///
/// With `condition_z0 = Some(z)` the population size is fixed at `z` and the
/// left part `E_g` is uniform on `(0, z)`; otherwise `E_g, E_d ~ Exp(2θ)`.
pub fn sample_population<R: Rng + ?Sized>(
    params: &ModelParams,
    n: usize,
    rng: &mut R,
    condition_z0: Option<f64>,
) -> Result<LeafConfig> {
    if n == 0 {
        return Err(domain("sample_population", "n must be at least 1"));
    }
    if let Some(z) = condition_z0 {
        if !(z > 0.0 && z.is_finite()) {
            return Err(domain("sample_population", format!("z0 must be positive, got {z}")));
        }
    }
    let exp = Exp::new(2.0 * params.theta).map_err(|e| domain("sample_population", e.to_string()))?;
    let mut attempt = 0u32;
    loop {
        let (e_g, e_d) = match condition_z0 {
            Some(z) => {
                let e_g = z * rng.random::<f64>();
                (e_g, z - e_g)
            }
            None => (exp.sample(rng), exp.sample(rng)),
        };
        let z0 = e_g + e_d;
        let mut points: Vec<(f64, usize)> = Vec::with_capacity(n);
        points.push((0.0, 0));
        for label in 1..n {
            points.push((z0 * rng.random::<f64>() - e_g, label));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut positions = Vec::with_capacity(n + 2);
        positions.push(-e_g);
        positions.extend(points.iter().map(|p| p.0));
        positions.push(e_d);
        let distinct = e_g > 0.0 && e_d > 0.0 && positions.windows(2).all(|w| w[0] < w[1]);
        if !distinct {
            attempt += 1;
            log::warn!("tied positions in a sampled configuration (attempt {attempt}); redrawing");
            continue;
        }
        let spine_index = 1 + points.iter().position(|p| p.1 == 0).expect("spine is present");
        return Ok(LeafConfig {
            n,
            e_g,
            e_d,
            z0,
            positions,
            spine_index,
            labels: points.iter().map(|p| p.1).collect(),
        });
    }
}

/// One draw of `ζ*(δ) = log(1 + 2θδ/E)/(2βθ)` with `E ~ Exp(1)`:
/// the depth of the deepest excursion rooted on an interval of mass `δ`.
pub fn sample_zeta_star<R: Rng + ?Sized>(params: &ModelParams, delta: f64, rng: &mut R) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let e: f64 = Exp1.sample(rng);
    (2.0 * params.theta * delta / e).ln_1p() / params.rate()
}

/// Branch depths `ζ_0, …, ζ_{n+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaVector {
    pub zetas: Vec<f64>,
}

impl ZetaVector {
    pub fn validate(&self, config: &LeafConfig) -> Result<()> {
        if self.zetas.len() != config.n + 2 {
            return Err(Error::InvalidConfig(format!("expected {} depths, got {}", config.n + 2, self.zetas.len())));
        }
        if self.zetas.iter().any(|z| !(z.is_finite() && *z >= 0.0)) {
            return Err(Error::InvalidConfig("depths must be finite and nonnegative".into()));
        }
        if self.zetas[config.spine_index] != 0.0 {
            return Err(Error::InvalidConfig("the spine depth must be 0".into()));
        }
        Ok(())
    }

    /// Depth of the population MRCA, `max_{0..n+1} ζ_k`.
    pub fn population_depth(&self) -> f64 {
        self.zetas.iter().copied().fold(0.0, f64::max)
    }

    /// Depth of the sample MRCA, `max_{1..n} ζ_k`.
    pub fn sample_depth(&self) -> f64 {
        let n = self.zetas.len() - 2;
        self.zetas[1..=n].iter().copied().fold(0.0, f64::max)
    }

    /// `L_n = max_{0..n+1} ζ_k + Σ_{1..n} ζ_k`, the population-rooted tree length.
    pub fn population_tree_length(&self) -> f64 {
        let n = self.zetas.len() - 2;
        self.population_depth() + self.zetas[1..=n].iter().sum::<f64>()
    }
}

/// Independent depths `ζ_k ~ ζ*(I_k)`.
pub fn sample_zetas<R: Rng + ?Sized>(params: &ModelParams, config: &LeafConfig, rng: &mut R) -> ZetaVector {
    ZetaVector { zetas: config.intervals().into_iter().map(|delta| sample_zeta_star(params, delta, rng)).collect() }
}

/// Atoms `(X_(k), ζ_k)` for `k = 1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AncestralPointMeasure {
    pub atoms: Vec<(f64, f64)>,
}

pub fn ancestral_measure(config: &LeafConfig, zetas: &ZetaVector) -> AncestralPointMeasure {
    AncestralPointMeasure { atoms: (1..=config.n).map(|k| (config.positions[k], zetas.zetas[k])).collect() }
}

/// Everything drawn for one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledGenealogy {
    pub config: LeafConfig,
    pub zetas: ZetaVector,
}

pub fn sample_genealogy<R: Rng + ?Sized>(
    params: &ModelParams,
    n: usize,
    rng: &mut R,
    condition_z0: Option<f64>,
) -> Result<SampledGenealogy> {
    let config = sample_population(params, n, rng, condition_z0)?;
    let zetas = sample_zetas(params, &config, rng);
    Ok(SampledGenealogy { config, zetas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::replicate_rng;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_sample_layout() {
        let mut rng = replicate_rng(1, 0);
        let c = sample_population(&params(), 1, &mut rng, None).unwrap();
        assert_eq!(c.positions.len(), 3);
        assert_eq!(c.positions[1], 0.0);
        assert_eq!(c.spine_index, 1);
        assert_eq!(c.intervals(), vec![c.e_g, 0.0, c.e_d]);
    }

    #[test]
    fn conditioned_size_is_exact() {
        let mut rng = replicate_rng(2, 0);
        for _ in 0..100 {
            let c = sample_population(&params(), 6, &mut rng, Some(3.0)).unwrap();
            assert_eq!(c.e_g + c.e_d, 3.0);
            c.validate().unwrap();
        }
    }

    #[test]
    fn intervals_sum_to_population_size() {
        let mut rng = replicate_rng(3, 0);
        for n in 1..20 {
            let c = sample_population(&params(), n, &mut rng, None).unwrap();
            let s: f64 = c.intervals().iter().sum();
            assert!((s - c.z0).abs() < 1e-12 * c.z0.max(1.0));
        }
    }

    #[test]
    fn zeta_star_of_zero_is_zero() {
        let mut rng = replicate_rng(4, 0);
        assert_eq!(sample_zeta_star(&params(), 0.0, &mut rng), 0.0);
        let c = sample_population(&params(), 5, &mut rng, None).unwrap();
        let z = sample_zetas(&params(), &c, &mut rng);
        assert_eq!(z.zetas[c.spine_index], 0.0);
        z.validate(&c).unwrap();
    }

    #[test]
    fn rejects_malformed_configs() {
        assert!(LeafConfig::from_positions(vec![-1.0, 0.5, 2.0]).is_err());
        assert!(LeafConfig::from_positions(vec![-1.0, 0.0, 0.0, 2.0]).is_err());
        let mut c = LeafConfig::from_positions(vec![-1.0, -0.5, 0.0, 2.0]).unwrap();
        c.labels = vec![0, 1];
        assert!(c.validate().is_err());
        assert!(sample_population(&params(), 0, &mut replicate_rng(0, 0), None).is_err());
        assert!(sample_population(&params(), 2, &mut replicate_rng(0, 0), Some(-1.0)).is_err());
    }

    #[test]
    fn measure_has_spine_atom() {
        let mut rng = replicate_rng(5, 0);
        let g = sample_genealogy(&params(), 7, &mut rng, None).unwrap();
        let m = ancestral_measure(&g.config, &g.zetas);
        assert_eq!(m.atoms.len(), 7);
        assert!(m.atoms.contains(&(0.0, 0.0)));
        assert!(m.atoms.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
