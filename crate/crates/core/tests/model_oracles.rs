use cbsfs::mc::{map_replicates, Execution, MeanSe};
use cbsfs::model::*;
use cbsfs::specfun::{integrate_pieces, QuadratureSpec};
use proptest::prelude::*;
use rand_distr::{Distribution, Poisson};

fn p(beta: f64, theta: f64) -> ModelParams {
    ModelParams::new(beta, theta, 0.0).unwrap()
}

fn quad_inf(f: impl Fn(f64) -> f64, scale: f64) -> f64 {
    let spec = QuadratureSpec::default().with_rel_tol(1e-12).with_abs_tol(1e-15);
    integrate_pieces(f, &[0.0, scale, 10.0 * scale, f64::INFINITY], &spec).unwrap().value
}

#[test]
fn c_at_one_and_limits() {
    let unit = p(1.0, 1.0);
    // 2/(e² − 1) written out from its series-free definition
    let oracle = 2.0 / (std::f64::consts::E * std::f64::consts::E - 1.0);
    assert!((oracle - 0.313_035_3).abs() < 1e-7);
    assert!((extinction_tail(&unit, 1.0).unwrap() - oracle).abs() < 1e-15);
    assert!(extinction_tail(&unit, 100.0).unwrap() < 1e-10);
    let t = 1e-8;
    assert!((t * extinction_tail(&unit, t).unwrap() * unit.beta - 1.0).abs() < 1e-6);
    assert!((mean_ancestor_count(&unit, 1.0).unwrap() - oracle).abs() < 1e-15);
    assert!((tmrca_cdf(&unit, 1.0, 1.0).unwrap() - 0.731_224_1).abs() < 1e-7);
}

#[test]
fn laplace_exponent_limits() {
    let unit = p(1.0, 1.0);
    assert_eq!(laplace_u(&unit, 1.0, 0.0).unwrap(), 0.0);
    let c = extinction_tail(&unit, 1.0).unwrap();
    assert!((laplace_u(&unit, 1.0, 1e9).unwrap() / c - 1.0).abs() < 1e-6);
    let h = 1e-6;
    let slope = laplace_u(&unit, 1.0, h).unwrap() / h;
    assert!((slope - (-2.0f64).exp()).abs() < 1e-5);
}

#[test]
fn canonical_density_masses() {
    let unit = p(1.0, 1.0);
    for t in [0.5f64, 1.0, 3.0] {
        let scale = -(-2.0 * t).exp_m1() / 2.0;
        let mass = quad_inf(|r| if r > 0.0 { canonical_density(&unit, t, r).unwrap() } else { 0.0 }, scale);
        let first = quad_inf(|r| if r > 0.0 { r * canonical_density(&unit, t, r).unwrap() } else { 0.0 }, scale);
        assert!((mass - extinction_tail(&unit, t).unwrap()).abs() < 1e-9, "t={t}");
        assert!((first - (-2.0 * t).exp()).abs() < 1e-9, "t={t}");
        let q: Vec<f64> = (1..50).map(|i| canonical_density(&unit, t, 0.1 * i as f64).unwrap()).collect();
        assert!(q.iter().all(|&v| v > 0.0) && q.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn consistency_across_parameter_grid() {
    for beta in [0.5, 1.0, 2.0] {
        for theta in [0.5, 1.0, 2.0] {
            let m = p(beta, theta);
            for t in [0.25, 1.0, 4.0] {
                let c = extinction_tail(&m, t).unwrap();
                let scale = -(-m.rate() * t).exp_m1() / (2.0 * theta);
                let mass = quad_inf(|r| if r > 0.0 { canonical_density(&m, t, r).unwrap() } else { 0.0 }, scale);
                let first = quad_inf(|r| if r > 0.0 { r * canonical_density(&m, t, r).unwrap() } else { 0.0 }, scale);
                let big = laplace_u(&m, t, 1e12).unwrap();
                let slope = laplace_u(&m, t, 1e-7).unwrap() / 1e-7;
                let survive = (-m.rate() * t).exp();
                assert!((big / c - 1.0).abs() < 1e-6);
                assert!((mass / c - 1.0).abs() < 1e-6);
                assert!((first - survive).abs() < 1e-6 && (slope - survive).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn z0_law() {
    let m = p(1.0, 0.7);
    let mass = quad_inf(|z| if z > 0.0 { z0_density(&m, z).unwrap() } else { 0.0 }, 1.0);
    assert!((mass - 1.0).abs() < 1e-10);
    assert!((z0_moment(&m, 1) - 1.0 / 0.7).abs() < 1e-15);
    assert_eq!(z0_moment(&m, 0), 1.0);
    let second = quad_inf(|z| if z > 0.0 { z * z * z0_density(&m, z).unwrap() } else { 0.0 }, 1.0);
    assert!((second - z0_moment(&m, 2)).abs() < 1e-10);
}

#[test]
fn kesten_expectations() {
    let m = p(1.3, 0.8);
    let t = 0.7;
    assert!((kesten_expectation(&m, t, |_| 1.0).unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(kesten_expectation(&m, t, |_| 0.0).unwrap(), 0.0);
    let scale = -(-m.rate() * t).exp_m1() / (2.0 * m.theta);
    let direct = (m.rate() * t).exp()
        * quad_inf(|r| if r > 0.0 { r * r * canonical_density(&m, t, r).unwrap() } else { 0.0 }, scale);
    assert!((kesten_expectation(&m, t, |r| r).unwrap() - direct).abs() < 1e-9);
}

#[test]
fn ancestor_count_is_poisson_in_c_times_z() {
    // given Z₀ = z the ancestors at time t form a Poisson(c(t) z) count
    let m = p(1.0, 1.0);
    let (t, z) = (0.5, 2.0);
    let lambda = extinction_tail(&m, t).unwrap() * z;
    let pois = Poisson::new(lambda).unwrap();
    let draws = map_replicates(99, 100_000, Execution::Parallel, |_, rng| pois.sample(rng));
    let acc: MeanSe = draws.into_iter().collect();
    let expected = mean_ancestor_count(&m, t).unwrap() * m.theta * z;
    assert!((acc.mean() - expected).abs() < 3.0 * acc.se(), "{} vs {expected}", acc.mean());
}

proptest! {
    #[test]
    fn tmrca_cdf_is_exponential_in_z(t in 0.01f64..10.0, z in 0.01f64..10.0) {
        let m = p(1.0, 1.0);
        let a = tmrca_cdf(&m, t, z).unwrap();
        let b = tmrca_cdf(&m, t, z / 2.0).unwrap();
        prop_assert!((a - b * b).abs() < 1e-12);
    }

    #[test]
    fn monotone_laws(t in 0.01f64..10.0, dt in 0.01f64..1.0, lam in 0.0f64..100.0) {
        let m = p(0.8, 1.4);
        prop_assert!(extinction_tail(&m, t + dt).unwrap() < extinction_tail(&m, t).unwrap());
        prop_assert!(laplace_u(&m, t, lam + 1.0).unwrap() > laplace_u(&m, t, lam).unwrap());
        prop_assert!(laplace_u(&m, t, lam).unwrap() <= extinction_tail(&m, t).unwrap());
        prop_assert!(tmrca_cdf(&m, t + dt, 1.0).unwrap() >= tmrca_cdf(&m, t, 1.0).unwrap());
    }
}
