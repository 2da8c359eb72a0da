//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! Intervals are bisected in order of decreasing error estimate until the
//! summed estimate meets `max(abs_tol, rel_tol * |I|)`. Semi-infinite ranges
//! are mapped onto `[0, 1)` with `u = a + t / (1 - t)`; the 21-point rule never
//! evaluates the endpoint `t = 1`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerances and work limit of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_subdivisions < 1 {
            return Err(domain(
                "QuadratureSpec::new",
                format!(
                    "need abs_tol > 0, rel_tol > 0, max_subdivisions >= 1 (got {abs_tol}, {rel_tol}, {max_subdivisions})"
                ),
            ));
        }
        Ok(Self { abs_tol, rel_tol, max_subdivisions })
    }

    /// Near machine precision; used by the closed-form layers.
    pub const fn tight() -> Self {
        Self { abs_tol: 1e-300, rel_tol: 1e-14, max_subdivisions: 4000 }
    }

    pub const fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub const fn with_abs_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-11, max_subdivisions: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

// Kronrod abscissae on [-1, 1] (positive half, descending); odd entries are
// shared with the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_value = fc.abs() * WGK[10];
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        kronrod += w * (f1 + f2);
        abs_value += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Piece { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs(), abs_value: abs_value * half.abs() }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integrate", "finite bounds required; use integrate_to_infinity"));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let first = gk21(&f, a, b);
    let mut evaluations = 21;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_abs = first.abs_value;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut subdivisions = 1;
    loop {
        let target = spec.abs_tol.max(spec.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        // roundoff floor: no split can resolve below this
        if total_err <= 64.0 * f64::EPSILON * total_abs {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(Error::Quadrature { estimate: total, error: total_err, subdivisions });
        }
        let Some(worst) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * mid.abs() {
            // unsplittable: drop from the queue, its contribution stays in the totals
            continue;
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        evaluations += 42;
        subdivisions += 1;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_abs += left.abs_value + right.abs_value - worst.abs_value;
        heap.push(left);
        heap.push(right);
    }
    if !total.is_finite() {
        return Err(Error::Quadrature { estimate: total, error: total_err, subdivisions });
    }
    Ok(Estimate { value: total, error: total_err, evaluations })
}

/// Integrates `f` over `[a, ∞)` through `u = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let mapped = |t: f64| {
        let one_minus = 1.0 - t;
        let u = a + t / one_minus;
        let v = f(u) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(mapped, 0.0, 1.0, spec)
}

/// Integrates over consecutive pieces `[b0, b1], [b1, b2], …`; the last break
/// may be `f64::INFINITY`. Each piece receives an equal share of `abs_tol`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    if breaks.len() < 2 {
        return Err(domain("integrate_pieces", "need at least two break points"));
    }
    let pieces = (breaks.len() - 1) as f64;
    let piece_spec = spec.with_abs_tol(spec.abs_tol / pieces);
    let mut out = Estimate { value: 0.0, error: 0.0, evaluations: 0 };
    for w in breaks.windows(2) {
        if w[1] < w[0] {
            return Err(domain("integrate_pieces", "break points must be nondecreasing"));
        }
        let est = if w[1].is_infinite() {
            integrate_to_infinity(&f, w[0], &piece_spec)?
        } else {
            integrate(&f, w[0], w[1], &piece_spec)?
        };
        out.value += est.value;
        out.error += est.error;
        out.evaluations += est.evaluations;
    }
    Ok(out)
}
