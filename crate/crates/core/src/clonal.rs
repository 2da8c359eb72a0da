//! Moments of the clonal subpopulation: the extant individuals that carry no
//! mutation since the population MRCA. `Z_cl` is its size and `R = Z_cl/Z₀`
//! its fraction of the population.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Result};
use crate::genealogy::sample_genealogy;
use crate::mc::{map_replicates, Execution, McEstimate, MeanSe};
use crate::model::{ln_z0_moment, z0_moment, ModelParams};
use crate::specfun::{beta_fn, ln_beta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: u32,
    pub analytic: f64,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
    pub reps: Option<u64>,
}

fn check_alpha(op: &'static str, alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(domain(op, format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    Ok(())
}

/// `𝒰(k, a) = E[U^{α+a} (1 − U^{1+α})^{k−1}] = β(k, 1 + a/(1+α)) / (1+α)`.
pub fn u_moment(alpha: f64, k: u32, a: f64) -> Result<f64> {
    check_alpha("u_moment", alpha)?;
    if k == 0 || !(a >= 0.0) {
        return Err(domain("u_moment", format!("need k >= 1 and a >= 0, got k={k}, a={a}")));
    }
    let b = a / (1.0 + alpha);
    Ok(beta_fn(f64::from(k), 1.0 + b)? / (1.0 + alpha))
}

/// Sum of signed terms `c · e^{l}`, accumulated relative to the largest exponent.
#[derive(Default)]
struct LogSum {
    terms: Vec<(f64, f64)>,
}

impl LogSum {
    fn add(&mut self, coef: f64, ln_mag: f64) {
        if coef != 0.0 {
            self.terms.push((coef.signum(), coef.abs().ln() + ln_mag));
        }
    }

    fn constant(&mut self, c: f64) {
        self.add(c, 0.0);
    }

    fn value(&self) -> f64 {
        let top = self.terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return 0.0;
        }
        let scaled: f64 = self.terms.iter().map(|&(s, l)| s * (l - top).exp()).sum();
        scaled * top.exp()
    }
}

/// `(1+α)^n E[Z_cl^{n−1} R] / E[Z₀^{n−1}] = α (β(n, (2+α)/(1+α)) + β(n, α/(1+α)) − 2/n)`.
fn zpow_r_scaled(alpha: f64, n: u32) -> Result<f64> {
    let p = 1.0 + alpha;
    let nf = f64::from(n);
    let mut s = LogSum::default();
    s.add(alpha, ln_beta(nf, (2.0 + alpha) / p)?);
    s.add(alpha, ln_beta(nf, alpha / p)?);
    s.constant(-2.0 * alpha / nf);
    Ok(s.value())
}

/// `(1+α)^n E[Z_cl^n] / E[Z₀^n]`, assembled with the `(n−1)` and `(n−2)`
/// factors cancelled against the denominators of the individual terms.
fn zpow_scaled(alpha: f64, n: u32) -> Result<f64> {
    let a = alpha;
    let p = 1.0 + a;
    let nf = f64::from(n);
    let l2 = ln_beta(nf, (2.0 + a) / p)?;
    let l3 = ln_beta(nf, (3.0 + a) / p)?;
    let mut s = LogSum::default();

    // 3 A⁽⁰⁾
    s.constant(3.0 / nf);
    s.add(-6.0, l2);
    s.add(3.0, l3);
    if n >= 2 {
        let la = ln_beta(nf, a / p)?;
        let l1 = ln_beta(nf, 1.0 / p)?;
        // 2(n−1) A
        s.constant(2.0 * (nf - 1.0) / nf);
        s.add(-2.0 * (nf - 1.0), l2);
        // −2(n−1) A⁽²⁾
        let c = -2.0 / (2.0 + a);
        s.constant(c * p);
        s.add(-c * (2.0 + a), l2);
        s.add(-c, l1);
        s.add(c * (3.0 + a), l3);
        // 2(n−1) B⁽⁰⁾
        s.add(2.0 * a, la);
        s.constant(-6.0 * p / nf);
        s.add(6.0 * (2.0 + a), l2);
        s.add(-2.0 * (3.0 + a), l3);
        if n >= 3 {
            // (n−1)(n−2) B
            let m = nf - 2.0;
            s.add(m * a, la);
            s.constant(-m * 2.0 * p / nf);
            s.add(m * (2.0 + a), l2);
            // −(n−1)(n−2) B⁽²⁾
            let c = -1.0 / (2.0 + a);
            s.add(c * (nf - 1.0) * a * p, ln_beta(nf - 1.0, a / p)?);
            s.constant(-c * 2.0 * p * p / nf);
            s.constant(-c * 2.0 * p * p);
            s.add(c * 2.0 * (3.0 + 2.0 * a) * (2.0 + a), l2);
            s.add(c * (2.0 + a), l1);
            s.add(-c * (4.0 + 2.0 * a) * (3.0 + a), l3);
        }
    }
    Ok(2.0 / (nf + 1.0) * s.value())
}

fn unscale(scaled: f64, alpha: f64, n: u32) -> f64 {
    let shift = f64::from(n) * alpha.ln_1p();
    if scaled > 0.0 {
        (scaled.ln() - shift).exp()
    } else {
        scaled * (-shift).exp()
    }
}

fn check_n(op: &'static str, n: u32) -> Result<()> {
    if n == 0 {
        return Err(domain(op, "n must be at least 1"));
    }
    Ok(())
}

/// `E[Z_cl^{n−1} R] / E[Z₀^{n−1}]`; equal to 1 when `α = 0`.
pub fn zpow_r_ratio(alpha: f64, n: u32) -> Result<f64> {
    check_alpha("zpow_r_ratio", alpha)?;
    check_n("zpow_r_ratio", n)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok(unscale(zpow_r_scaled(alpha, n)?, alpha, n))
}

/// `E[Z_cl^n] / E[Z₀^n]`; equal to 1 when `α = 0`.
pub fn zpow_ratio(alpha: f64, n: u32) -> Result<f64> {
    check_alpha("zpow_ratio", alpha)?;
    check_n("zpow_ratio", n)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok(unscale(zpow_scaled(alpha, n)?, alpha, n))
}

fn times_moment(params: &ModelParams, ratio: f64, k: u32) -> f64 {
    if k <= 20 {
        ratio * z0_moment(params, k)
    } else if ratio > 0.0 {
        (ratio.ln() + ln_z0_moment(params, k)).exp()
    } else {
        ratio * ln_z0_moment(params, k).exp()
    }
}

/// `E[Z_cl^{n−1} R]`.
pub fn e_zcl_pow_r(params: &ModelParams, n: u32) -> Result<f64> {
    let r = zpow_r_ratio(params.alpha(), n)?;
    Ok(times_moment(params, r, n - 1))
}

/// `E[Z_cl^n]`.
pub fn e_zcl_pow(params: &ModelParams, n: u32) -> Result<f64> {
    let r = zpow_ratio(params.alpha(), n)?;
    Ok(times_moment(params, r, n))
}

/// `E[Z_cl^n]/E[Z₀^n] · (1+α)^n · n^{α/(1+α)}`, which tends to [`zpow_limit`].
pub fn zpow_normalized(alpha: f64, n: u32) -> Result<f64> {
    check_alpha("zpow_normalized", alpha)?;
    check_n("zpow_normalized", n)?;
    if alpha == 0.0 {
        return Ok(1.0);
    }
    Ok(zpow_scaled(alpha, n)? * f64::from(n).powf(alpha / (1.0 + alpha)))
}

/// `(2α/(2+α)) Γ(α/(1+α))` for `α > 0`.
pub fn zpow_limit(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(domain("zpow_limit", format!("alpha must be positive, got {alpha}")));
    }
    Ok(2.0 * alpha / (2.0 + alpha) * gamma(alpha / (1.0 + alpha)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonalSummary {
    pub alpha: f64,
    pub e_r: f64,
    pub e_zcl: f64,
    pub cov_r_z0: f64,
    /// `−1 + 3/(α+3)`, stated without a closed-form `Var(R)`; checked only by simulation.
    pub corr_r_z0_stated: f64,
    pub corr_note: String,
}

pub fn clonal_summary(params: &ModelParams) -> ClonalSummary {
    let a = params.alpha();
    let d = (a + 1.0) * (a + 2.0);
    ClonalSummary {
        alpha: a,
        e_r: 2.0 / d,
        e_zcl: 6.0 / (d * (a + 3.0)) / params.theta,
        cov_r_z0: -2.0 * a / (d * (a + 3.0)) / params.theta,
        corr_r_z0_stated: -1.0 + 3.0 / (a + 3.0),
        corr_note: "Var(R) has no closed form; see mc_correlation for a simulated value".into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClonalStatistic {
    /// `Z₀^{n−1} e^{−μ L_n}`, estimating `E[Z_cl^{n−1} R]`.
    ZPowR,
    /// `Z₀^n e^{−μ L_n}`, estimating `E[Z_cl^n]`.
    ZPow,
}

fn check_reps(op: &'static str, reps: u64) -> Result<()> {
    if reps < 100 {
        return Err(domain(op, format!("need at least 100 replicates, got {reps}")));
    }
    Ok(())
}

/// Per-replicate `(Z₀, L_n)` from unconditioned population-rooted genealogies.
fn sample_length<R: Rng + ?Sized>(params: &ModelParams, n: u32, rng: &mut R) -> Result<(f64, f64)> {
    let g = sample_genealogy(params, n as usize, rng, None)?;
    Ok((g.config.z0, g.zetas.population_tree_length()))
}

/// Monte-Carlo estimate of a clonal moment from sampled genealogies.
pub fn mc_clonal(
    params: &ModelParams,
    n: u32,
    reps: u64,
    seed: u64,
    statistic: ClonalStatistic,
    exec: Execution,
) -> Result<MomentReport> {
    check_n("mc_clonal", n)?;
    check_reps("mc_clonal", reps)?;
    let power = match statistic {
        ClonalStatistic::ZPowR => n - 1,
        ClonalStatistic::ZPow => n,
    };
    let analytic = match statistic {
        ClonalStatistic::ZPowR => e_zcl_pow_r(params, n)?,
        ClonalStatistic::ZPow => e_zcl_pow(params, n)?,
    };
    let draws = map_replicates(seed, reps, exec, |_, rng| {
        sample_length(params, n, rng).map(|(z0, len)| z0.powi(power as i32) * (-params.mu * len).exp())
    });
    let acc = draws.into_iter().collect::<Result<Vec<f64>>>()?.into_iter().collect::<MeanSe>();
    Ok(MomentReport { n, analytic, mc_mean: Some(acc.mean()), mc_se: Some(acc.se()), reps: Some(reps) })
}

/// Monte-Carlo estimate of `E[R^n] = E[e^{−μ L_n}]`.
pub fn mc_r_moment(params: &ModelParams, n: u32, reps: u64, seed: u64, exec: Execution) -> Result<McEstimate> {
    check_n("mc_r_moment", n)?;
    check_reps("mc_r_moment", reps)?;
    let draws = map_replicates(seed, reps, exec, |_, rng| {
        sample_length(params, n, rng).map(|(_, len)| (-params.mu * len).exp())
    });
    let acc: MeanSe = draws.into_iter().collect::<Result<Vec<f64>>>()?.into_iter().collect();
    Ok(acc.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub alpha: f64,
    pub corr: f64,
    /// Delta-method error carried from the simulated `E[R²]`.
    pub se: f64,
    pub var_r: McEstimate,
    pub corr_stated: f64,
    pub corr_bound: f64,
}

/// Smallest `|Corr(R, Z₀)|` compatible with the closed-form covariance, using
/// `Var(R) ≤ E[R](1 − E[R])` since `0 ≤ R ≤ 1`.
pub fn corr_magnitude_bound(alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    let d = (alpha + 1.0) * (alpha + 2.0);
    let e_r = 2.0 / d;
    let cov = 2.0 * alpha / (d * (alpha + 3.0));
    cov / (0.5f64.sqrt() * (e_r * (1.0 - e_r)).sqrt())
}

/// `Corr(R, Z₀)` from the closed-form covariance, `Var(Z₀) = 1/(2θ²)` and a
/// simulated `Var(R) = E[e^{−μ L₂}] − E[R]²`.
pub fn mc_correlation(params: &ModelParams, reps: u64, seed: u64, exec: Execution) -> Result<CorrelationEstimate> {
    let s = clonal_summary(params);
    let r2 = mc_r_moment(params, 2, reps, seed, exec)?;
    let var = r2.mean - s.e_r * s.e_r;
    let (corr, se) = if s.alpha == 0.0 || var <= 0.0 {
        (0.0, 0.0)
    } else {
        let c = s.cov_r_z0 * params.theta / (0.5f64.sqrt() * var.sqrt());
        (c, c.abs() * 0.5 * r2.se / var)
    };
    Ok(CorrelationEstimate {
        alpha: s.alpha,
        corr,
        se,
        var_r: McEstimate { mean: var, ..r2 },
        corr_stated: s.corr_r_z0_stated,
        corr_bound: corr_magnitude_bound(s.alpha),
    })
}

/// Second route to `E[Z_cl^{n−1} R]` through independent uniforms:
/// `E[min_{1..n+1} V_k^α · Π_{2..n} V_j^α] · E[Z₀^{n−1}]`.
pub fn v_representation_check(
    params: &ModelParams,
    n: u32,
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<MomentReport> {
    check_n("v_representation_check", n)?;
    check_reps("v_representation_check", reps)?;
    let a = params.alpha();
    let moment = z0_moment(params, n - 1);
    let draws = map_replicates(seed, reps, exec, |_, rng| {
        let v: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
        let min = v.iter().copied().fold(1.0, f64::min);
        let prod: f64 = v[1..n as usize].iter().product();
        (min * prod).powf(a) * moment
    });
    let acc: MeanSe = draws.into_iter().collect();
    Ok(MomentReport {
        n,
        analytic: e_zcl_pow_r(params, n)?,
        mc_mean: Some(acc.mean()),
        mc_se: Some(acc.se()),
        reps: Some(reps),
    })
}
