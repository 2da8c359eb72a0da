use cbsfs::clonal::*;
use cbsfs::mc::{map_replicates, Execution, MeanSe};
use cbsfs::model::{z0_moment, ModelParams};
use cbsfs::specfun::beta_fn;
use num_rational::Ratio;
use rand::Rng;

type Q = Ratio<i128>;

fn q(a: i128, b: i128) -> Q {
    Q::new(a, b)
}

fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

// With α = 1 every Beta value in the moment formulas has a half-integer or
// integer argument and is therefore rational.
fn beta_half(n: i128) -> Q {
    // β(n, 1/2) = (n−1)! / Π_{k=0}^{n−1} (k + 1/2)
    let fact: i128 = (1..n).product();
    let pochhammer = (0..n).fold(q(1, 1), |acc, k| acc * q(2 * k + 1, 2));
    Q::from_integer(fact) / pochhammer
}

fn beta_three_halves(n: i128) -> Q {
    // β(n, 3/2) = (n−1)! Γ(3/2)/Γ(n+3/2)
    let fact: i128 = (1..n).product();
    let pochhammer = (1..=n).fold(q(1, 1), |acc, k| acc * q(2 * k + 1, 2));
    Q::from_integer(fact) / pochhammer
}

fn beta_two(n: i128) -> Q {
    q(1, n * (n + 1))
}

fn exact_zpow_ratio_alpha_one(n: i128) -> Q {
    let a = q(1, 1);
    let p = q(2, 1);
    let pn = (0..n).fold(q(1, 1), |acc, _| acc * p);
    let nq = Q::from_integer(n);
    let (b2, b3, ba, b1) = (beta_three_halves(n), beta_two(n), beta_half(n), beta_half(n));
    let one = q(1, 1);
    let two_a = q(2, 1) + a;
    let three_a = q(3, 1) + a;
    let big_a = (one / nq - b2) / pn;
    let a0 = (one / nq - q(2, 1) * b2 + b3) / pn;
    let (b, b0, a2) = if n >= 2 {
        let m = nq - one;
        (
            (a * ba - q(2, 1) * p / nq + two_a * b2) / (m * pn),
            (a * ba - q(3, 1) * p / nq + q(3, 1) * two_a * b2 - three_a * b3) / (m * pn),
            (p - two_a * b2 - b1 + three_a * b3) / (m * two_a * pn),
        )
    } else {
        (q(0, 1), q(0, 1), q(0, 1))
    };
    let b2n = if n >= 3 {
        let bam = beta_half(n - 1);
        ((nq - one) * a * p * bam - (q(2, 1) + q(2, 1) * a) * p / nq - q(2, 1) * p * p
            + q(2, 1) * (q(3, 1) + q(2, 1) * a) * two_a * b2
            + two_a * b1
            - (q(4, 1) + q(2, 1) * a) * three_a * b3)
            / ((nq - one) * (nq - q(2, 1)) * two_a * pn)
    } else {
        q(0, 1)
    };
    q(2, 1) / (nq + one)
        * (q(3, 1) * a0 + q(2, 1) * (nq - one) * (big_a - a2 + b0) + (nq - one) * (nq - q(2, 1)) * (b - b2n))
}

fn exact_zpow_r_ratio_alpha_one(n: i128) -> Q {
    let pn = (0..n).fold(q(1, 1), |acc, _| acc * q(2, 1));
    (beta_three_halves(n) + beta_half(n) - q(2, n)) / pn
}

fn alpha_one() -> ModelParams {
    // α = μ/(2βθ) = 1
    ModelParams::new(1.0, 1.0, 2.0).unwrap()
}

#[test]
fn rational_values_at_alpha_one() {
    assert_eq!(exact_zpow_ratio_alpha_one(1), q(1, 4));
    assert_eq!(exact_zpow_ratio_alpha_one(2), q(29, 270));
    assert_eq!(exact_zpow_r_ratio_alpha_one(1), q(1, 3));
    for n in 1..=6 {
        let exact = to_f64(exact_zpow_ratio_alpha_one(n));
        let got = zpow_ratio(1.0, n as u32).unwrap();
        assert!((got - exact).abs() < 1e-12 * exact, "n={n}: {got} vs {exact}");
        let exact = to_f64(exact_zpow_r_ratio_alpha_one(n));
        let got = zpow_r_ratio(1.0, n as u32).unwrap();
        assert!((got - exact).abs() < 1e-13 * exact, "n={n}: {got} vs {exact}");
    }
}

#[test]
fn summary_at_alpha_one() {
    let s = clonal_summary(&alpha_one());
    assert_eq!(s.alpha, 1.0);
    assert!((s.e_r - to_f64(q(1, 3))).abs() < 1e-15);
    assert!((s.e_zcl - to_f64(q(1, 4))).abs() < 1e-15);
    assert!((s.cov_r_z0 - to_f64(q(-1, 12))).abs() < 1e-15);
    assert!((e_zcl_pow_r(&alpha_one(), 1).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    assert!((e_zcl_pow(&alpha_one(), 1).unwrap() - 0.25).abs() < 1e-14);
}

#[test]
fn monotone_in_alpha_and_bounded() {
    let grid = [0.05, 0.2, 0.5, 1.0, 2.0, 5.0];
    let mut last = (f64::INFINITY, f64::INFINITY);
    for a in grid {
        let p = ModelParams::new(1.0, 1.0, 2.0 * a).unwrap();
        let s = clonal_summary(&p);
        assert!(s.cov_r_z0 < 0.0);
        assert!(s.e_r < last.0 && s.e_zcl < last.1);
        last = (s.e_r, s.e_zcl);
        for n in 1..=8 {
            let v = e_zcl_pow(&p, n).unwrap();
            assert!(v >= 0.0 && v <= z0_moment(&p, n), "a={a}, n={n}");
        }
    }
}

#[test]
fn u_moment_identities() {
    // 𝒰(k−1, a) = a/(k−1) · β(k, b)/(1+α)²
    let (k, a, al) = (4u32, 2.0, 1.0);
    let b = a / (1.0 + al);
    let rhs = a / f64::from(k - 1) * beta_fn(f64::from(k), b).unwrap() / (1.0 + al).powi(2);
    assert!((u_moment(al, k - 1, a).unwrap() - rhs).abs() < 1e-14);
    // 𝒰(k−2, a) = a(a−1−α)/((k−1)(k−2)) · β(k, b−1)/(1+α)³
    let (k, a, al) = (5u32, 3.0, 0.5);
    let b = a / (1.0 + al);
    let rhs = a * (a - 1.0 - al) / f64::from((k - 1) * (k - 2)) * beta_fn(f64::from(k), b - 1.0).unwrap()
        / (1.0 + al).powi(3);
    assert!((u_moment(al, k - 2, a).unwrap() - rhs).abs() < 1e-14);
}

#[test]
fn u_moment_by_monte_carlo() {
    let (k, a, al) = (3i32, 1.0, 1.0);
    let draws = map_replicates(61, 1_000_000, Execution::Parallel, |_, rng| {
        let u: f64 = rng.random();
        u.powf(al + a) * (1.0 - u.powf(1.0 + al)).powi(k - 1)
    });
    let acc: MeanSe = draws.into_iter().collect();
    let exact = u_moment(al, k as u32, a).unwrap();
    assert!((acc.mean() - exact).abs() < 3.0 * acc.se());
}

#[test]
fn large_n_approaches_limit() {
    let limit = zpow_limit(1.0).unwrap();
    assert!((limit - 2.0 / 3.0 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    let errs: Vec<f64> =
        [50, 200, 800].iter().map(|&n| ((zpow_normalized(1.0, n).unwrap() - limit) / limit).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 0.05, "{errs:?}");
}

fn assert_within(r: &MomentReport, target: f64) {
    let (m, se) = (r.mc_mean.unwrap(), r.mc_se.unwrap());
    assert!((m - target).abs() < 3.0 * se, "n={}: {m} ± {se} vs {target}", r.n);
}

#[test]
fn tree_monte_carlo_first_moments() {
    let p = alpha_one();
    let r = mc_clonal(&p, 1, 100_000, 71, ClonalStatistic::ZPowR, Execution::Parallel).unwrap();
    assert_within(&r, 1.0 / 3.0);
    let z = mc_clonal(&p, 1, 100_000, 72, ClonalStatistic::ZPow, Execution::Parallel).unwrap();
    assert_within(&z, 0.25);
}

#[test]
fn tree_monte_carlo_higher_moments() {
    let p = alpha_one();
    let r = mc_clonal(&p, 2, 200_000, 73, ClonalStatistic::ZPowR, Execution::Parallel).unwrap();
    assert_within(&r, e_zcl_pow_r(&p, 2).unwrap());
    let half = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    let r = mc_clonal(&half, 3, 200_000, 74, ClonalStatistic::ZPowR, Execution::Parallel).unwrap();
    assert_within(&r, e_zcl_pow_r(&half, 3).unwrap());
    for n in 2..=3 {
        let z = mc_clonal(&half, n, 200_000, 75 + u64::from(n), ClonalStatistic::ZPow, Execution::Parallel).unwrap();
        assert_within(&z, z.analytic);
    }
}

#[test]
fn zero_mutation_rate_recovers_size_moments() {
    let p = ModelParams::new(1.0, 0.8, 0.0).unwrap();
    let r = mc_clonal(&p, 3, 20_000, 81, ClonalStatistic::ZPowR, Execution::Parallel).unwrap();
    assert_within(&r, z0_moment(&p, 2));
    let v = v_representation_check(&p, 3, 1000, 82, Execution::Parallel).unwrap();
    assert_eq!(v.mc_mean.unwrap(), z0_moment(&p, 2));
}

#[test]
fn three_way_agreement() {
    let p = alpha_one();
    for n in [2, 3, 5] {
        let closed = e_zcl_pow_r(&p, n).unwrap();
        let v = v_representation_check(&p, n, 200_000, 90 + u64::from(n), Execution::Parallel).unwrap();
        let t = mc_clonal(&p, n, 100_000, 95 + u64::from(n), ClonalStatistic::ZPowR, Execution::Parallel).unwrap();
        assert_within(&v, closed);
        assert_within(&t, closed);
        let se = v.mc_se.unwrap().hypot(t.mc_se.unwrap());
        assert!((v.mc_mean.unwrap() - t.mc_mean.unwrap()).abs() < 3.0 * se);
    }
}

#[test]
fn correlation_by_simulation() {
    for a in [0.5, 1.0, 3.0] {
        let p = ModelParams::new(1.0, 1.0, 2.0 * a).unwrap();
        let c = mc_correlation(&p, 200_000, 100, Execution::Parallel).unwrap();
        // the simulated value is a genuine correlation compatible with the covariance
        assert!(c.corr < 0.0 && c.corr >= -1.0, "α={a}: {c:?}");
        assert!(c.corr.abs() + 3.0 * c.se >= c.corr_bound, "α={a}: {c:?}");
        // E[R²] ≥ E[R]², and R ≤ 1 caps the variance
        let e_r = clonal_summary(&p).e_r;
        assert!(c.var_r.mean > 0.0 && c.var_r.mean <= e_r * (1.0 - e_r), "α={a}: {c:?}");
    }
}

#[test]
fn stated_correlation_violates_variance_bound_for_small_alpha() {
    // −1 + 3/(α+3) is smaller in magnitude than any correlation the covariance
    // allows once Var(R) ≤ E[R](1 − E[R]) is imposed
    for a in [0.1f64, 0.5, 0.9] {
        let stated = (-1.0 + 3.0 / (a + 3.0)).abs();
        assert!(stated < corr_magnitude_bound(a), "α={a}");
    }
    let p = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    let c = mc_correlation(&p, 200_000, 101, Execution::Parallel).unwrap();
    assert!((c.corr - c.corr_stated).abs() > 10.0 * c.se, "{c:?}");
}
