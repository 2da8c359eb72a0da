//! Special functions and the integral transforms behind the closed-form
//! expectations: digamma, Euler Beta, `Γ(0, r)`, and the `H`, `h0`, `h1`
//! family used by the discrete spectrum expansion.

pub mod quad;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
pub use quad::{integrate, integrate_pieces, integrate_to_infinity, Estimate, QuadratureSpec};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

// B_{2k} / (2k) for k = 1..=9
const DIGAMMA_ASYMPTOTIC: [f64; 9] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14364.0,
];

/// Ψ(x) = Γ′(x)/Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("digamma", format!("x must be positive and finite, got {x}")));
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 6.0 {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_ASYMPTOTIC {
        series += c * pow;
        pow *= inv2;
    }
    Ok(shift + y.ln() - 0.5 / y - series)
}

/// ln β(a, b).
pub fn ln_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(domain("beta_fn", format!("arguments must be positive, got ({a}, {b})")));
    }
    Ok(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Euler Beta function β(a, b) = Γ(a)Γ(b)/Γ(a+b), evaluated through log-Gamma.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    ln_beta(a, b).map(f64::exp)
}

/// Upper incomplete Gamma function at order zero, Γ(0, r) = E₁(r).
///
/// Power series below 1, modified Lentz continued fraction above.
pub fn gamma_upper_zero(r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(domain("gamma_upper_zero", format!("r must be positive, got {r}")));
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    if r <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= -r / kf;
            let add = -term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return Ok(-EULER_GAMMA - r.ln() + sum);
    }
    const TINY: f64 = 1e-300;
    let mut b = r + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    Ok(h * (-r).exp())
}

/// The regularised integrand of `h0`:
/// `(1 − e^{−u} − u + u²/2 − u³/6)/u²` on `(0, 1]`, `(1 − e^{−u})/u²` above 1.
///
/// The lower piece is summed from its Taylor series (it behaves like `−u²/24`).
pub fn f_integrand(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u > 1.0 {
        return -(-u).exp_m1() / (u * u);
    }
    // Σ_{k≥4} (−1)^{k+1} u^{k−2} / k!
    let mut term = -u * u / 24.0;
    let mut sum = term;
    let mut k = 4.0;
    loop {
        k += 1.0;
        term *= -u / k;
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn breaks_with(x: f64, base: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = base.to_vec();
    if x > 0.0 && x.is_finite() && !b.contains(&x) {
        b.push(x);
    }
    b.sort_by(f64::total_cmp);
    b.push(f64::INFINITY);
    b
}

/// `H(x) = ∫₀^∞ (1 − e^{−u})/u · du/(u + x)` for `x > 0`.
pub fn h_scale(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(domain("h_scale", format!("x must be positive and finite, got {x}")));
    }
    let integrand = |u: f64| {
        let g = if u == 0.0 { 1.0 } else { -(-u).exp_m1() / u };
        g / (u + x)
    };
    Ok(integrate_pieces(integrand, &breaks_with(x, &[0.0, 1.0]), &QuadratureSpec::tight())?.value)
}

fn check_nonneg(op: &'static str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(domain(op, format!("x must be nonnegative and finite, got {x}")));
    }
    Ok(())
}

/// `∫ f(u) · kernel(u) du` over `(0, ∞)`, split at 1 and at `x`.
fn f_transform(x: f64, kernel: impl Fn(f64) -> f64) -> Result<f64> {
    let est = integrate_pieces(|u| f_integrand(u) * kernel(u), &breaks_with(x, &[0.0, 1.0]), &QuadratureSpec::tight())?;
    Ok(est.value)
}

/// `h0(x) = (1 + x/2 + x²/6) log(1 + x) − ∫ f(u) x/(u + x) du`.
pub fn h0(x: f64) -> Result<f64> {
    check_nonneg("h0", x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let closed = (1.0 + x / 2.0 + x * x / 6.0) * x.ln_1p();
    Ok(closed - f_transform(x, |u| x / (u + x))?)
}

/// `h1(x) = x · h0(x)`.
pub fn h1(x: f64) -> Result<f64> {
    h1_deriv(x, 0)
}

/// Derivatives of `h1` of order 0, 1 or 2.
///
/// `h1(x) = q(x) − ∫ f(u) x²/(u+x) du` with `q(x) = (x + x²/2 + x³/6) log(1+x)`;
/// the integral is differentiated under the integral sign.
pub fn h1_deriv(x: f64, order: u8) -> Result<f64> {
    check_nonneg("h1_deriv", x)?;
    let p = x + x * x / 2.0 + x * x * x / 6.0;
    let dp = 1.0 + x + x * x / 2.0;
    let lg = x.ln_1p();
    match order {
        0 => {
            if x == 0.0 {
                return Ok(0.0);
            }
            Ok(p * lg - f_transform(x, |u| x * x / (u + x))?)
        }
        1 => {
            if x == 0.0 {
                return Ok(0.0);
            }
            let dq = dp * lg + p / (1.0 + x);
            Ok(dq - f_transform(x, |u| x * (x + 2.0 * u) / ((u + x) * (u + x)))?)
        }
        2 => {
            let ddq = (1.0 + x) * lg + 2.0 * dp / (1.0 + x) - p / ((1.0 + x) * (1.0 + x));
            Ok(ddq
                - f_transform(x, |u| {
                    let s = u + x;
                    2.0 * u * u / (s * s * s)
                })?)
        }
        _ => Err(domain("h1_deriv", format!("order must be 0, 1 or 2, got {order}"))),
    }
}
