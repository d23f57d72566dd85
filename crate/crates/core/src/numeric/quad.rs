//! Globally adaptive Gauss-Kronrod (10/21-point) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below `rel_tol * |integral|`. Half-line integrals are split
//! at 1 and the tail is folded onto `(0, 1]` by `y = 1/u`.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

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
    0.123_491_976_262_065_851_077_208_734_799_218,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const MAX_SUBDIVISIONS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over the finite interval `[a, b]` to relative tolerance
/// `rel_tol` (with an absolute floor `abs_tol`).
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    let (value, error) = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    let mut splits = 0;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if splits >= MAX_SUBDIVISIONS {
            return Err(Error::Quadrature {
                achieved: total_err / total.abs().max(f64::MIN_POSITIVE),
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats; nothing left to refine.
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (lv, le) = gk21(&f, worst.a, mid);
        let (rv, re) = gk21(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
        splits += 1;
    }
    if !total.is_finite() {
        return Err(Error::Quadrature { achieved: f64::INFINITY });
    }
    // Recompute from the leaves to shed accumulated rounding in the running sums.
    let (value, abs_error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Quadrature { value, abs_error })
}

/// Integrates `f` over `[0, inf)`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> Result<Quadrature> {
    let head = integrate(&f, 0.0, 1.0, rel_tol, 0.0)?;
    let tail = integrate(
        |u: f64| {
            if u <= 0.0 {
                0.0
            } else {
                let y = 1.0 / u;
                f(y) * y * y
            }
        },
        0.0,
        1.0,
        rel_tol,
        rel_tol * head.value.abs() * 1e-2,
    )?;
    let value = head.value + tail.value;
    let abs_error = head.abs_error + tail.abs_error;
    if abs_error > rel_tol * value.abs() * 1.000_001 && abs_error > 0.0 {
        return Err(Error::Quadrature { achieved: abs_error / value.abs() });
    }
    Ok(Quadrature { value, abs_error })
}

/// `int_0^inf y^k exp(-d y) / (1 + y^r) dy` for `k` in {0, 1}, `d >= 0`,
/// `r > k + 1`.
pub fn damped_power_moment(k: i32, d: f64, r: f64, rel_tol: f64) -> Result<f64> {
    let q = integrate_half_line(
        |y: f64| {
            if y == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            let damp = if d == 0.0 { 1.0 } else { (-d * y).exp() };
            if damp == 0.0 {
                return 0.0;
            }
            // Divide before multiplying so y^r cannot overflow to inf/inf.
            let base = if y > 1.0 {
                y.powf(-r) / (1.0 + y.powf(-r))
            } else {
                1.0 / (1.0 + y.powf(r))
            };
            y.powi(k) * damp * base
        },
        rel_tol,
    )?;
    Ok(q.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomials_integrate_exactly() {
        // Gauss-10 is exact to degree 19, so the error estimate vanishes too.
        let q = integrate(|x: f64| x.powi(19) + 3.0 * x.powi(4), 0.0, 2.0, 1e-14, 0.0).unwrap();
        let exact = 2f64.powi(20) / 20.0 + 3.0 * 32.0 / 5.0;
        assert!((q.value - exact).abs() / exact < 1e-14);
    }

    #[test]
    fn half_line_exponential_and_algebraic_tails() {
        let q = integrate_half_line(|y: f64| (-2.0 * y).exp(), 1e-12).unwrap();
        assert!((q.value - 0.5).abs() < 1e-12);
        // int_0^inf dy / (1 + y^3) = 2 pi / (3 sqrt 3)
        let q = integrate_half_line(|y: f64| 1.0 / (1.0 + y.powi(3)), 1e-12).unwrap();
        let exact = 2.0 * core::f64::consts::PI / (3.0 * 3f64.sqrt());
        assert!((q.value - exact).abs() / exact < 1e-11);
    }

    #[test]
    fn weakly_singular_tail_converges() {
        // int_0^inf y/(1+y^2.5) dy = (pi/2.5)/sin(2 pi/2.5)
        let v = damped_power_moment(1, 0.0, 2.5, 1e-10).unwrap();
        let exact = (core::f64::consts::PI / 2.5) / (2.0 * core::f64::consts::PI / 2.5).sin();
        assert!((v - exact).abs() / exact < 1e-9, "{v} vs {exact}");
    }
}
