//! The quadratic branching mechanism `ψθ(u) = βu² + 2βθu` and the
//! one-dimensional laws of the stationary process built on it.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::specfun::{integrate_pieces, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub theta: f64,
    pub mu: f64,
}

impl ModelParams {
    pub fn new(beta: f64, theta: f64, mu: f64) -> Result<Self> {
        let p = Self { beta, theta, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(domain("ModelParams", format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(domain("ModelParams", format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(domain("ModelParams", format!("mu must be nonnegative, got {}", self.mu)));
        }
        if !self.alpha().is_finite() {
            return Err(domain("ModelParams", "mu / (2 beta theta) overflows"));
        }
        Ok(())
    }

    /// Mutation rate relative to the extinction rate, `μ / (2βθ)`.
    pub fn alpha(&self) -> f64 {
        self.mu / (2.0 * self.beta * self.theta)
    }

    /// `2βθ`, the exponential rate appearing in every time-dependent law.
    pub fn rate(&self) -> f64 {
        2.0 * self.beta * self.theta
    }

    /// `ψθ(u)`.
    pub fn psi(&self, u: f64) -> f64 {
        self.beta * u * u + 2.0 * self.beta * self.theta * u
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { beta: 1.0, theta: 1.0, mu: 1.0 }
    }
}

fn check_time(op: &'static str, t: f64) -> Result<()> {
    if !(t > 0.0) || t.is_nan() {
        return Err(domain(op, format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// `c(t) = 2θ / (e^{2βθt} − 1)`: canonical mass of excursions surviving to time `t`.
pub fn extinction_tail(params: &ModelParams, t: f64) -> Result<f64> {
    check_time("extinction_tail", t)?;
    Ok(2.0 * params.theta / (params.rate() * t).exp_m1())
}

/// `u(t, λ) = 2θλ / ((2θ + λ)e^{2βθt} − λ)`.
pub fn laplace_u(params: &ModelParams, t: f64, lam: f64) -> Result<f64> {
    check_time("laplace_u", t)?;
    if !(lam >= 0.0) {
        return Err(domain("laplace_u", format!("lambda must be nonnegative, got {lam}")));
    }
    if lam == 0.0 {
        return Ok(0.0);
    }
    // divide through by e^{2βθt} so that large t cannot overflow
    let x = params.rate() * t;
    let two_theta = 2.0 * params.theta;
    Ok(two_theta * lam * (-x).exp() / (two_theta - lam * (-x).exp_m1()))
}

/// Density `q_t(r)` of the population size at time `t` under the excursion measure.
pub fn canonical_density(params: &ModelParams, t: f64, r: f64) -> Result<f64> {
    check_time("canonical_density", t)?;
    if !(r > 0.0) {
        return Err(domain("canonical_density", format!("r must be positive, got {r}")));
    }
    let x = params.rate() * t;
    let one_minus = -(-x).exp_m1();
    let two_theta = 2.0 * params.theta;
    let ln_q = 2.0 * two_theta.ln() - x - 2.0 * one_minus.ln() - two_theta * r / one_minus;
    Ok(ln_q.exp())
}

/// `E[N_t] = c(t)/θ`, the expected number of ancestors at time `t` in the past.
pub fn mean_ancestor_count(params: &ModelParams, t: f64) -> Result<f64> {
    Ok(extinction_tail(params, t)? / params.theta)
}

/// `P(A ≤ t | Z₀ = z) = exp(−c(t) z)` for the time `A` to the population MRCA.
pub fn tmrca_cdf(params: &ModelParams, t: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(domain("tmrca_cdf", format!("z must be positive, got {z}")));
    }
    Ok((-extinction_tail(params, t)? * z).exp())
}

/// Stationary density of `Z₀`, the Gamma(2, 2θ) law.
pub fn z0_density(params: &ModelParams, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(domain("z0_density", format!("z must be positive, got {z}")));
    }
    let two_theta = 2.0 * params.theta;
    Ok(two_theta * two_theta * z * (-two_theta * z).exp())
}

/// `ln E[Z₀^k] = ln((k+1)!) − k ln(2θ)`.
pub fn ln_z0_moment(params: &ModelParams, k: u32) -> f64 {
    let k = f64::from(k);
    ln_gamma(k + 2.0) - k * (2.0 * params.theta).ln()
}

/// `E[Z₀^k] = (k+1)!/(2θ)^k`. Exact in floating point for small `k`.
pub fn z0_moment(params: &ModelParams, k: u32) -> f64 {
    if k <= 20 {
        let two_theta = 2.0 * params.theta;
        (1..=k).fold(1.0, |acc, i| acc * f64::from(i + 1) / two_theta)
    } else {
        ln_z0_moment(params, k).exp()
    }
}

/// Expectation of `h` under the size-biased (Kesten) law of the population at time `t`:
/// `e^{2βθt} ∫₀^∞ r q_t(r) h(r) dr`.
pub fn kesten_expectation(params: &ModelParams, t: f64, h: impl Fn(f64) -> f64) -> Result<f64> {
    check_time("kesten_expectation", t)?;
    // e^{2βθt} r q_t(r) is the Gamma(2, 2θ/(1 − e^{−2βθt})) density
    let rate = 2.0 * params.theta / -(-params.rate() * t).exp_m1();
    let scale = 1.0 / rate;
    let kernel = |r: f64| rate * rate * r * (-rate * r).exp() * h(r);
    let spec = QuadratureSpec::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
    Ok(integrate_pieces(kernel, &[0.0, scale, 8.0 * scale, f64::INFINITY], &spec)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::new(1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn alpha_definition() {
        let p = ModelParams::new(0.5, 2.0, 3.0).unwrap();
        assert_eq!(p.alpha(), 1.5);
        assert_eq!(p.psi(1.0), 0.5 + 2.0);
    }

    #[test]
    fn time_domain_errors() {
        let p = unit();
        assert!(extinction_tail(&p, 0.0).is_err());
        assert!(laplace_u(&p, -1.0, 1.0).is_err());
        assert!(laplace_u(&p, 1.0, -1.0).is_err());
        assert!(canonical_density(&p, 1.0, 0.0).is_err());
        assert!(tmrca_cdf(&p, 1.0, 0.0).is_err());
        assert!(z0_density(&p, -1.0).is_err());
    }

    #[test]
    fn extreme_times_stay_finite() {
        let p = unit();
        assert_eq!(extinction_tail(&p, 1e4).unwrap(), 0.0);
        assert_eq!(laplace_u(&p, 1e4, 5.0).unwrap(), 0.0);
        assert!(c_small_t_ok(&p));
        assert_eq!(tmrca_cdf(&p, 1e4, 3.0).unwrap(), 1.0);
    }

    fn c_small_t_ok(p: &ModelParams) -> bool {
        let t = 1e-12;
        ((t * extinction_tail(p, t).unwrap()) - 1.0).abs() < 1e-9
    }

    #[test]
    fn z0_moment_small_values() {
        let p = ModelParams::new(1.0, 0.5, 0.0).unwrap();
        assert_eq!(z0_moment(&p, 0), 1.0);
        assert_eq!(z0_moment(&p, 1), 2.0);
        assert_eq!(z0_moment(&p, 3), 24.0);
        assert!((ln_z0_moment(&p, 3) - 24f64.ln()).abs() < 1e-13);
    }
}
