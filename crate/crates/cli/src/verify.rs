//! Self-checks against independent oracles. Each function returns one or more
//! named pass/fail results; `cbsfs verify` and the acceptance target share them.

use std::fmt::Write as _;

use cbsfs::clonal::{
    clonal_summary, e_zcl_pow_r, mc_clonal, v_representation_check, zpow_limit, zpow_normalized, ClonalStatistic,
};
use cbsfs::genealogy::{build_tree, lk_all, lk_total, sample_genealogy, tmrca_consecutive, RootMode};
use cbsfs::mc::{map_replicates, replicate_rng, Execution};
use cbsfs::model::extinction_tail;
use cbsfs::sfs::{
    density_branch_term, density_spine_check, expected_lk_all, expected_sfs, g1, g2_from_length, mean_density,
    simulate_sfs, LengthRoute, SimulationMode,
};
use cbsfs::specfun::{
    beta_fn, digamma, gamma_upper_zero, h1, h1_deriv, integrate_to_infinity, QuadratureSpec, EULER_GAMMA,
};
use cbsfs::stats::ks_statistic;
use cbsfs::{ModelParams, Result};
use clap::ValueEnum;
use rand::Rng;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    SpecialFunctions,
    QuadratureIdentities,
    TmrcaOracle,
    TmrcaLaw,
    SfsMean,
    SfsExpansion,
    Clonal,
    All,
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Result<Vec<Check>> {
    let p = &cfg.params;
    let th = p.theta;
    Ok(match suite {
        Suite::SpecialFunctions => special_functions()?,
        Suite::QuadratureIdentities => quadrature_identities(p)?,
        Suite::TmrcaOracle => tmrca_oracle(cfg.reps_or(1000), cfg.seed)?,
        Suite::TmrcaLaw => {
            vec![tmrca_law(p, cfg.n, cfg.z0.unwrap_or(1.0 / th), cfg.reps_or(100_000), cfg.seed, cfg.exec)?]
        }
        Suite::SfsMean => {
            let z0s = cfg.z0.map_or_else(|| vec![1.0 / th, 2.0 / th], |z| vec![z]);
            sfs_mean(p, cfg.n, &z0s, cfg.reps_or(20_000), cfg.seed, cfg.exec)?
        }
        Suite::SfsExpansion => sfs_expansion(p, &[10, 30, 100, 300], cfg.z0.unwrap_or(1.0 / th), cfg.exec)?,
        Suite::Clonal => {
            let mut v = clonal_moments(p, cfg.reps_or(100_000), cfg.seed, cfg.exec)?;
            if p.alpha() > 0.0 {
                v.push(clonal_asymptotics(p.alpha())?);
            }
            v
        }
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::value_variants().iter().filter(|s| **s != Suite::All) {
                all.extend(run_suite(*s, cfg)?);
            }
            all
        }
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn special_functions() -> Result<Vec<Check>> {
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for x in [0.1, 0.5, 1.0, 2.5, 10.0, 100.0] {
        let d = digamma(x + 1.0)? - digamma(x)?;
        worst = worst.max((d - 1.0 / x).abs() / (1.0 + 1.0 / x));
    }
    let psi1 = (digamma(1.0)? + EULER_GAMMA).abs();
    out.push(Check::new(
        "digamma recurrence",
        worst < 1e-12 && psi1 < 1e-14,
        format!("max scaled error {worst:.2e}, |psi(1) + gamma| = {psi1:.2e}"),
    ));

    let mut worst = 0.0f64;
    for (a, b) in [(0.5, 0.5), (2.0, 3.0), (1.5, 4.2), (10.0, 0.3), (0.05, 40.0)] {
        worst = worst.max(rel(beta_fn(a + 1.0, b)?, beta_fn(a, b)? * a / (a + b)));
    }
    out.push(Check::new("beta shift identity", worst < 1e-12, format!("max relative error {worst:.2e}")));

    let spec = QuadratureSpec::new(1e-15, 1e-13, 2000)?;
    let oracle = integrate_to_infinity(|v| (-v).exp() / v, 1.0, &spec)?.value;
    let got = gamma_upper_zero(1.0)?;
    out.push(Check::new("Gamma(0, 1) against quadrature", (got - oracle).abs() < 1e-12, format!("{got} vs {oracle}")));

    // h1'' from a wide second difference and from a difference of h1'
    let (fine, wide) = (1e-5, 1e-3);
    let mut worst = 0.0f64;
    for x in [0.5, 2.0, 20.0] {
        let d1 = (h1(x + fine)? - h1(x - fine)?) / (2.0 * fine);
        let d2 = (h1(x + wide)? - 2.0 * h1(x)? + h1(x - wide)?) / (wide * wide);
        let d2b = (h1_deriv(x + fine, 1)? - h1_deriv(x - fine, 1)?) / (2.0 * fine);
        let (a1, a2) = (h1_deriv(x, 1)?, h1_deriv(x, 2)?);
        worst = worst
            .max((a1 - d1).abs() / (1.0 + a1.abs()))
            .max((a2 - d2).abs() / (1.0 + a2.abs()))
            .max((a2 - d2b).abs() / (1.0 + a2.abs()));
    }
    out.push(Check::new(
        "h1 derivatives against finite differences",
        worst < 1e-5,
        format!("max scaled error {worst:.2e}"),
    ));
    Ok(out)
}

/// Closed-form TMRCAs and admissible lengths against the explicit tree, over
/// random parameters, sizes `n <= 8` and conditioning choices.
pub fn tmrca_oracle(instances: u64, seed: u64) -> Result<Vec<Check>> {
    let (mut tmrca_err, mut length_err) = (0.0f64, 0.0f64);
    for i in 0..instances {
        let mut rng = replicate_rng(seed, i);
        let params = ModelParams::new(rng.random_range(0.3..3.0), rng.random_range(0.3..3.0), 1.0)?;
        let n = rng.random_range(1..=8);
        let z0 = if rng.random::<bool>() { Some(rng.random_range(0.2..5.0)) } else { None };
        let g = sample_genealogy(&params, n, &mut rng, z0)?;
        let (c, z) = (&g.config, &g.zetas);
        let tree = build_tree(c, z, RootMode::SampleMrca)?;
        for j in 1..=n {
            for l in j + 1..=n {
                let leaves: Vec<usize> = (j..=l).collect();
                tmrca_err = tmrca_err.max((tmrca_consecutive(c, z, j, l)? - tree.tmrca(&leaves)?).abs());
            }
        }
        let by_count = tree.length_by_carrier_count();
        let swept = lk_all(c, z);
        for k in 1..n {
            let lk = lk_total(c, z, k)?;
            length_err = length_err.max((lk - by_count[k]).abs()).max((swept[k - 1] - lk).abs());
        }
    }
    Ok(vec![
        Check::new(
            "TMRCA closed form vs tree",
            tmrca_err <= 1e-10,
            format!("{instances} instances, max error {tmrca_err:.2e}"),
        ),
        Check::new(
            "L_k closed form vs tree",
            length_err <= 1e-10,
            format!("{instances} instances, max error {length_err:.2e}"),
        ),
    ])
}

/// Simulated `μ L_k` against the expected spectrum, within 3 SE for every k.
pub fn sfs_mean(
    params: &ModelParams,
    n: usize,
    z0s: &[f64],
    reps: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &z0 in z0s {
        let expected = expected_sfs(params, n, z0, exec)?;
        let sim = simulate_sfs(
            params,
            n,
            Some(z0),
            reps,
            seed,
            SimulationMode::ExpectedLengths,
            LengthRoute::ClosedForm,
            exec,
        )?;
        let mut worst = 0.0f64;
        let mut detail = String::new();
        for (e, s) in expected.entries.iter().zip(&sim.entries) {
            let (m, se) = (s.mc_mean.unwrap_or(f64::NAN), s.mc_se.unwrap_or(f64::NAN));
            let zs = if se > 0.0 {
                (m - e.expected_xi).abs() / se
            } else if m == e.expected_xi {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(zs);
            if zs >= 3.0 {
                let _ = write!(detail, " k={} off by {zs:.2} SE;", e.k);
            }
        }
        out.push(Check::new(
            format!("SFS mean, n={n}, z0={z0}"),
            worst < 3.0,
            format!("{reps} reps, worst deviation {worst:.2} SE{detail}"),
        ));
    }
    Ok(out)
}

/// Uniform boundedness of the second-order residual and convergence of
/// `k E[ξ_k]` at `k = u n` to `(μ z0/β)(1 + g1(θ z0, u))`.
pub fn sfs_expansion(params: &ModelParams, ns: &[usize], z0: f64, exec: Execution) -> Result<Vec<Check>> {
    let us = [0.1, 0.5, 0.9];
    let mut maxima = Vec::new();
    let mut errors = vec![Vec::new(); us.len()];
    for &n in ns {
        let l = expected_lk_all(params, n, z0, exec)?;
        let mut m = 0.0f64;
        for k in 1..n {
            m = m.max(g2_from_length(params, n, k, z0, l[k - 1])?.abs());
        }
        maxima.push(m);
        for (i, &u) in us.iter().enumerate() {
            let k = ((u * n as f64).round() as usize).clamp(1, n - 1);
            let got = k as f64 * params.mu * l[k - 1];
            let target = params.mu * z0 / params.beta * (1.0 + g1(params.theta * z0, u)?);
            errors[i].push((got - target).abs());
        }
    }
    let cap = 2.0 * maxima[0];
    let bounded = maxima.iter().all(|&m| m <= cap);
    let mut d = String::new();
    for (n, m) in ns.iter().zip(&maxima) {
        let _ = write!(d, "n={n}: {m:.3}; ");
    }
    let _ = write!(d, "cap {cap:.3}");
    let converging = errors.iter().all(|e| e.windows(2).all(|w| w[1] < w[0]));
    let mut e = String::new();
    for (u, errs) in us.iter().zip(&errors) {
        let list: Vec<String> = errs.iter().map(|x| format!("{x:.2e}")).collect();
        let _ = write!(e, "u={u}: [{}]; ", list.join(", "));
    }
    Ok(vec![
        Check::new("g2 residual bounded", bounded, format!("max|g2| {d}")),
        Check::new("k E[xi_k] converges", converging, e.trim_end_matches("; ").to_string()),
    ])
}

pub fn quadrature_identities(params: &ModelParams) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut worst = 0.0f64;
    for r in [0.1, 1.0, 5.0] {
        let total = mean_density(params, r)?;
        let parts = params.mu * (density_branch_term(params, r)? + density_spine_check(params, r)?);
        worst = worst.max((total - parts).abs());
    }
    out.push(Check::new(
        "density = branch + spine quadratures",
        worst < 1e-8,
        format!("max error {worst:.2e} at r in {{0.1, 1, 5}}"),
    ));

    let r = 1e-6;
    let small = mean_density(params, r)? * params.beta * params.theta * r / params.mu;
    out.push(Check::new(
        "density small-r asymptote",
        (small - 1.0).abs() < 1e-2,
        format!("f(r) beta theta r / mu = {small:.6} at r = {r:e}"),
    ));

    // the large-r ratio is 1 + 1/(2x) + ..., so it is followed along x = 2θr
    let xs = [40.0, 100.0, 400.0];
    let mut errs = Vec::new();
    for x in xs {
        let r = x / (2.0 * params.theta);
        errs.push((mean_density(params, r)? * params.beta / (2.0 * params.mu) * x.exp() - 1.0).abs());
    }
    let last = *errs.last().unwrap_or(&f64::NAN);
    out.push(Check::new(
        "density large-r asymptote",
        errs.windows(2).all(|w| w[1] < w[0]) && last < 1e-2,
        format!("|ratio - 1| = {:.2e}, {:.2e}, {:.2e} at 2 theta r = 40, 100, 400", errs[0], errs[1], errs[2]),
    ));
    Ok(out)
}

/// Kolmogorov–Smirnov test of the deepest branch against `exp(−c(t) z0)`.
pub fn tmrca_law(params: &ModelParams, n: usize, z0: f64, reps: u64, seed: u64, exec: Execution) -> Result<Check> {
    let depths = map_replicates(seed, reps, exec, |_, rng| {
        sample_genealogy(params, n, rng, Some(z0)).map(|g| g.zetas.population_depth())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let cdf = |t: f64| if t <= 0.0 { 0.0 } else { extinction_tail(params, t).map_or(f64::NAN, |c| (-c * z0).exp()) };
    let d = ks_statistic(&depths, cdf);
    let crit = 1.63 / (reps as f64).sqrt();
    Ok(Check::new(
        format!("TMRCA law, n={n}, z0={z0}"),
        d < crit,
        format!("KS {d:.5} vs critical {crit:.5} over {reps} reps"),
    ))
}

pub fn clonal_moments(params: &ModelParams, reps: u64, seed: u64, exec: Execution) -> Result<Vec<Check>> {
    let s = clonal_summary(params);
    let mut out = Vec::new();
    for (stat, name, target) in [(ClonalStatistic::ZPowR, "E[R]", s.e_r), (ClonalStatistic::ZPow, "E[Z_cl]", s.e_zcl)] {
        let r = mc_clonal(params, 1, reps, seed, stat, exec)?;
        let (m, se) = (r.mc_mean.unwrap_or(f64::NAN), r.mc_se.unwrap_or(f64::NAN));
        out.push(Check::new(
            format!("{name} by tree simulation"),
            (m - target).abs() < 3.0 * se,
            format!("{m:.5} ± {se:.5} vs {target:.6} ({reps} reps)"),
        ));
    }
    for n in [2u32, 3, 5] {
        let closed = e_zcl_pow_r(params, n)?;
        let v = v_representation_check(params, n, 2 * reps, seed.wrapping_add(1), exec)?;
        let t = mc_clonal(params, n, reps, seed.wrapping_add(2), ClonalStatistic::ZPowR, exec)?;
        let (vm, vs) = (v.mc_mean.unwrap_or(f64::NAN), v.mc_se.unwrap_or(f64::NAN));
        let (tm, ts) = (t.mc_mean.unwrap_or(f64::NAN), t.mc_se.unwrap_or(f64::NAN));
        let ok =
            (vm - closed).abs() < 3.0 * vs && (tm - closed).abs() < 3.0 * ts && (vm - tm).abs() < 3.0 * vs.hypot(ts);
        out.push(Check::new(
            format!("E[Z_cl^{} R] three ways", n - 1),
            ok,
            format!("closed {closed:.6}, uniforms {vm:.6} ± {vs:.6}, trees {tm:.6} ± {ts:.6}"),
        ));
    }
    Ok(out)
}

/// Normalised `E[Z_cl^n]/E[Z₀ⁿ]` approaching its limit with shrinking relative error.
pub fn clonal_asymptotics(alpha: f64) -> Result<Check> {
    let limit = zpow_limit(alpha)?;
    let mut errs = Vec::new();
    for n in [50u32, 200, 800] {
        errs.push((zpow_normalized(alpha, n)? - limit) / limit);
    }
    let ok = errs.windows(2).all(|w| w[1].abs() < w[0].abs()) && errs[2].abs() < 0.05;
    Ok(Check::new(
        format!("clonal moments large-n limit, alpha={alpha}"),
        ok,
        format!(
            "relative error {:+.4}, {:+.4}, {:+.4} at n = 50, 200, 800 (limit {limit:.6})",
            errs[0], errs[1], errs[2]
        ),
    ))
}
