//! Expected site frequency spectrum of a sample, its expansion around the
//! `1/k` shape, the simulated spectrum, and the continuum mean density of
//! mutation frequencies.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::genealogy::{build_tree, lk_all, sample_genealogy, RootMode};
use crate::mc::{map_indices, map_replicates, Execution, MeanSe};
use crate::model::{canonical_density, ModelParams};
use crate::specfun::{
    gamma_upper_zero, h1_deriv, h_scale, integrate, integrate_pieces, ln_beta, QuadratureSpec, EULER_GAMMA,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfsEntry {
    pub k: usize,
    /// Expected length carried by exactly `k` leaves (time units).
    pub expected_l: f64,
    /// Expected number of mutations carried by exactly `k` leaves.
    pub expected_xi: f64,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfsTable {
    pub n: usize,
    /// Conditioning population size, or `None` when averaged over its law.
    pub z0: Option<f64>,
    pub entries: Vec<SfsEntry>,
}

/// `E[ζ*(δ)] = δ H(2θδ) / β`.
pub fn mean_zeta_star(params: &ModelParams, delta: f64) -> Result<f64> {
    if delta <= 0.0 {
        return Ok(0.0);
    }
    Ok(delta * h_scale(2.0 * params.theta * delta)? / params.beta)
}

fn beta_breaks(n: usize, ell: usize) -> Vec<f64> {
    let (a, b) = (ell as f64, (n - ell + 1) as f64);
    let mode = if n > 1 { (a - 1.0) / (n as f64 - 1.0) } else { 0.5 };
    let sd = (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt();
    let mut br = vec![0.0, 1.0];
    for s in [-8.0, -2.0, 0.0, 2.0, 8.0] {
        let x = mode + s * sd;
        if x > 0.0 && x < 1.0 {
            br.push(x);
        }
    }
    br.sort_by(f64::total_cmp);
    br.dedup();
    br
}

fn s_spec() -> QuadratureSpec {
    QuadratureSpec::new(1e-16, 1e-12, 4000).expect("valid spec")
}

/// `S_ℓ = E[ζ*(z0 U_(ℓ))]` with `U_(ℓ)` the ℓ-th of `n` ordered uniforms;
/// `S_0 = 0`.
pub fn s_ell(params: &ModelParams, n: usize, ell: usize, z0: f64) -> Result<f64> {
    if ell > n {
        return Err(domain("s_ell", format!("need 0 <= ell <= n, got ell={ell}, n={n}")));
    }
    if !(z0 > 0.0 && z0.is_finite()) {
        return Err(domain("s_ell", format!("z0 must be positive, got {z0}")));
    }
    if ell == 0 {
        return Ok(0.0);
    }
    let (a, b) = (ell as f64, (n - ell + 1) as f64);
    let ln_norm = ln_beta(a, b)?;
    let failed = std::cell::Cell::new(None);
    let integrand = |v: f64| {
        if v <= 0.0 || v >= 1.0 {
            return 0.0;
        }
        let ln_dens = (a - 1.0) * v.ln() + (b - 1.0) * (-v).ln_1p() - ln_norm;
        match mean_zeta_star(params, z0 * v) {
            Ok(m) => m * ln_dens.exp(),
            Err(e) => {
                failed.set(Some(e));
                0.0
            }
        }
    };
    let est = integrate_pieces(integrand, &beta_breaks(n, ell), &s_spec())?;
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(est.value)
}

/// `[S_0, …, S_n]`.
pub fn s_table(params: &ModelParams, n: usize, z0: f64, exec: Execution) -> Result<Vec<f64>> {
    map_indices(n + 1, exec, |ell| s_ell(params, n, ell, z0)).into_iter().collect()
}

fn lk_from_s(s: &[f64], n: usize, k: usize) -> f64 {
    let nk = (n - k) as f64;
    nk * (2.0 * s[k] - s[k - 1] - s[k + 1]) + s[k + 1] - s[k - 1]
}

fn check_nk(op: &'static str, n: usize, k: usize) -> Result<()> {
    if n < 2 || k == 0 || k >= n {
        return Err(domain(op, format!("need n >= 2 and 1 <= k <= n-1, got n={n}, k={k}")));
    }
    Ok(())
}

/// `E[L_k | Z₀ = z0]`.
pub fn expected_lk(params: &ModelParams, n: usize, k: usize, z0: f64) -> Result<f64> {
    check_nk("expected_lk", n, k)?;
    let s: Vec<f64> = (k - 1..=k + 1).map(|l| s_ell(params, n, l, z0)).collect::<Result<_>>()?;
    let mut full = vec![0.0; k + 2];
    full[k - 1..=k + 1].copy_from_slice(&s);
    Ok(lk_from_s(&full, n, k))
}

/// `[E[L_1 | Z₀], …, E[L_{n−1} | Z₀]]` from one table of `S_ℓ`.
pub fn expected_lk_all(params: &ModelParams, n: usize, z0: f64, exec: Execution) -> Result<Vec<f64>> {
    check_nk("expected_lk_all", n, 1)?;
    let s = s_table(params, n, z0, exec)?;
    Ok((1..n).map(|k| lk_from_s(&s, n, k)).collect())
}

fn table_from_lengths(params: &ModelParams, n: usize, z0: Option<f64>, lengths: Vec<f64>) -> SfsTable {
    SfsTable {
        n,
        z0,
        entries: lengths
            .into_iter()
            .enumerate()
            .map(|(i, l)| SfsEntry { k: i + 1, expected_l: l, expected_xi: params.mu * l, mc_mean: None, mc_se: None })
            .collect(),
    }
}

/// Expected spectrum given `Z₀ = z0`.
pub fn expected_sfs(params: &ModelParams, n: usize, z0: f64, exec: Execution) -> Result<SfsTable> {
    let l = expected_lk_all(params, n, z0, exec)?;
    Ok(table_from_lengths(params, n, Some(z0), l))
}

/// Expected spectrum averaged over the Gamma(2, 2θ) law of `Z₀` by an outer
/// quadrature. Exposed as a numerical experiment.
pub fn expected_sfs_averaged(params: &ModelParams, n: usize, exec: Execution) -> Result<SfsTable> {
    check_nk("expected_sfs_averaged", n, 1)?;
    let two_theta = 2.0 * params.theta;
    let spec = QuadratureSpec::new(1e-12, 1e-8, 500)?;
    let scale = 1.0 / two_theta;
    let lengths = map_indices(n - 1, exec, |i| {
        let k = i + 1;
        let failed = std::cell::Cell::new(None);
        let integrand = |z: f64| {
            if z <= 0.0 {
                return 0.0;
            }
            let dens = two_theta * two_theta * z * (-two_theta * z).exp();
            if dens == 0.0 {
                return 0.0;
            }
            match expected_lk(params, n, k, z) {
                Ok(l) => l * dens,
                Err(e) => {
                    failed.set(Some(e));
                    0.0
                }
            }
        };
        let est = integrate_pieces(integrand, &[0.0, scale, 4.0 * scale, 40.0 * scale], &spec)?;
        match failed.take() {
            Some(e) => Err(e),
            None => Ok(est.value),
        }
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(table_from_lengths(params, n, None, lengths))
}

/// First-order distortion `g1(z, u)` of the spectrum relative to `1/k`.
pub fn g1(z: f64, u: f64) -> Result<f64> {
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain("g1", format!("z must be positive, got {z}")));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(domain("g1", format!("u must lie in [0, 1], got {u}")));
    }
    if u < 1e-300 {
        return Ok(0.0);
    }
    let lg = u.ln() + (2.0 * z).ln();
    let x = 2.0 * z * u;
    let first = u * (-2.0 * lg - 1.0 - 2.0 * EULER_GAMMA);
    let second = z * u * (2.0 * (1.0 - 3.0 * u) * lg + 11.0 / 3.0 - 7.0 * u);
    let third = 2.0 / 3.0 * z * z * u * u * (6.0 * (1.0 - 2.0 * u) * lg + 5.0 - 7.0 * u);
    let fourth = 2.0 * u * h1_deriv(x, 1)? - 2.0 * z * u * (1.0 - u) * h1_deriv(x, 2)?;
    Ok(first + second + third + fourth)
}

/// Remainder after the `1/k` and `g1` terms, scaled by `n²/√k`:
/// `(n²/√k)(β E[L_k | Z₀]/z0 − 1/k − g1(θ z0, k/n)/k)`.
pub fn g2_residual(params: &ModelParams, n: usize, k: usize, z0: f64) -> Result<f64> {
    let l = expected_lk(params, n, k, z0)?;
    g2_from_length(params, n, k, z0, l)
}

/// [`g2_residual`] from a precomputed `E[L_k | Z₀]`.
pub fn g2_from_length(params: &ModelParams, n: usize, k: usize, z0: f64, expected_l: f64) -> Result<f64> {
    check_nk("g2_residual", n, k)?;
    let kf = k as f64;
    let nf = n as f64;
    let g = g1(params.theta * z0, kf / nf)?;
    Ok(nf * nf / kf.sqrt() * (params.beta * expected_l / z0 - 1.0 / kf - g / kf))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimulationMode {
    /// Average `μ L_k` per replicate.
    ExpectedLengths,
    /// Draw `ξ_k ~ Poisson(μ L_k)` per replicate.
    PoissonCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthRoute {
    /// Closed-form window sums on the point measure.
    ClosedForm,
    /// Edge lengths of the explicit sample-rooted tree grouped by leaf count.
    Tree,
}

/// Per-replicate `[L_1, …, L_{n−1}]`.
pub fn replicate_lengths<R: Rng + ?Sized>(
    params: &ModelParams,
    n: usize,
    z0: Option<f64>,
    route: LengthRoute,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let g = sample_genealogy(params, n, rng, z0)?;
    Ok(match route {
        LengthRoute::ClosedForm => lk_all(&g.config, &g.zetas),
        LengthRoute::Tree => {
            let tree = build_tree(&g.config, &g.zetas, RootMode::SampleMrca)?;
            let by_count = tree.length_by_carrier_count();
            by_count[1..n].to_vec()
        }
    })
}

/// Monte-Carlo spectrum over `reps` replicates with substreams of `seed`.
/// Analytic columns are left at 0 here; see [`attach_expected`].
#[allow(clippy::too_many_arguments)]
pub fn simulate_sfs(
    params: &ModelParams,
    n: usize,
    z0: Option<f64>,
    reps: u64,
    seed: u64,
    mode: SimulationMode,
    route: LengthRoute,
    exec: Execution,
) -> Result<SfsTable> {
    check_nk("simulate_sfs", n, 1)?;
    if reps == 0 {
        return Err(domain("simulate_sfs", "reps must be at least 1"));
    }
    let per_rep = map_replicates(seed, reps, exec, |_, rng| -> Result<Vec<f64>> {
        let lengths = replicate_lengths(params, n, z0, route, rng)?;
        Ok(match mode {
            SimulationMode::ExpectedLengths => lengths.iter().map(|l| params.mu * l).collect(),
            SimulationMode::PoissonCounts => lengths
                .iter()
                .map(|&l| {
                    let lam = params.mu * l;
                    if lam > 0.0 {
                        Poisson::new(lam).map(|p| p.sample(rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        })
    });
    let mut acc = vec![MeanSe::new(); n - 1];
    for row in per_rep {
        for (a, x) in acc.iter_mut().zip(row?) {
            a.push(x);
        }
    }
    Ok(SfsTable {
        n,
        z0,
        entries: acc
            .iter()
            .enumerate()
            .map(|(i, a)| SfsEntry {
                k: i + 1,
                expected_l: 0.0,
                expected_xi: 0.0,
                mc_mean: Some(a.mean()),
                mc_se: Some(a.se()),
            })
            .collect(),
    })
}

/// Copies the analytic columns of `expected` into `simulated`.
pub fn attach_expected(simulated: &mut SfsTable, expected: &SfsTable) {
    for (s, e) in simulated.entries.iter_mut().zip(&expected.entries) {
        s.expected_l = e.expected_l;
        s.expected_xi = e.expected_xi;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub points: Vec<(f64, f64)>,
}

/// Density at frequency mass `r` of the mean measure of mutations:
/// `(μ/β)(e^{−2θr}/(θr) + e^{−2θr} + 2θr Γ(0, 2θr))`.
pub fn mean_density(params: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain("mean_density", format!("r must be positive, got {r}")));
    }
    let x = 2.0 * params.theta * r;
    let e = (-x).exp();
    Ok(params.mu / params.beta * (e / (params.theta * r) + e + x * gamma_upper_zero(x)?))
}

pub fn density_curve(params: &ModelParams, grid: &[f64]) -> Result<DensityCurve> {
    let points = grid.iter().map(|&r| mean_density(params, r).map(|f| (r, f))).collect::<Result<_>>()?;
    Ok(DensityCurve { points })
}

/// Branch contribution `(1/θ) ∫₀^∞ q_t(r) dt` by quadrature (per unit `μ`).
pub fn density_branch_term(params: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("density_branch_term", format!("r must be positive, got {r}")));
    }
    // q_t(r) peaks near t ≈ r/β for small r and decays like e^{−2βθt} for large t
    let t1 = (r / params.beta).min(1.0 / params.rate());
    let spec = QuadratureSpec::new(1e-300, 1e-12, 4000)?;
    let est = integrate_pieces(
        |t| if t > 0.0 { canonical_density(params, t, r).unwrap_or(0.0) } else { 0.0 },
        &[0.0, t1, 4.0 * t1, 16.0 * t1, f64::INFINITY],
        &spec,
    )?;
    Ok(est.value / params.theta)
}

/// Spine contribution `(2θ/β) r ∫₀¹ (1+u)/u² e^{−2θr/u} du` by quadrature (per unit `μ`).
pub fn density_spine_check(params: &ModelParams, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("density_spine_check", format!("r must be positive, got {r}")));
    }
    let x = 2.0 * params.theta * r;
    let spec = QuadratureSpec::new(1e-300, 1e-12, 4000)?;
    let integrand = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        (1.0 + u) / (u * u) * (-x / u).exp()
    };
    // the integrand is concentrated near u ≈ x/2 for small x
    let mut breaks = vec![0.0];
    for b in [x / 8.0, x / 2.0, 2.0 * x] {
        if b < 1.0 && b > *breaks.last().unwrap() {
            breaks.push(b);
        }
    }
    breaks.push(1.0);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(integrand, w[0], w[1], &spec)?.value;
    }
    Ok(x / params.beta * total)
}
