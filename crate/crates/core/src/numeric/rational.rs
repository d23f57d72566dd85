//! Best rational approximation with bounded denominators, and gcd/lcm on
//! the resulting fractions.

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Largest denominator accepted when reading a lattice atom as a fraction.
pub const MAX_DENOMINATOR: i128 = 1_000_000;

/// Returns `(p, q)` with `q <= max_den` and `|v - p/q| <= tol * max(1, |v|)`,
/// or `None` when no such fraction exists.
pub fn to_fraction(v: f64, max_den: i128, tol: f64) -> Option<(i128, i128)> {
    if !v.is_finite() {
        return None;
    }
    let target = v.abs();
    let slack = tol * target.max(1.0);
    // Continued-fraction convergents h_k / k_k.
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut rest = target;
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let ai = a as i128;
        let h_next = ai * h + h_prev;
        let k_next = ai * k + k_prev;
        if k_next > max_den {
            break;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        if ((h as f64) / (k as f64) - target).abs() <= slack {
            let sign = if v < 0.0 { -1 } else { 1 };
            return Some((sign * h, k));
        }
        let frac = rest - a;
        if frac <= 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    None
}

pub fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// gcd of a set of fractions: the largest `g > 0` with every value in `g Z`.
/// Returns `None` if any value is not representable or all values are zero.
pub fn fraction_gcd(values: &[f64], max_den: i128, tol: f64) -> Option<f64> {
    let mut fracs = alloc::vec::Vec::with_capacity(values.len());
    for &v in values {
        fracs.push(to_fraction(v, max_den, tol)?);
    }
    let mut lcm: i128 = 1;
    for &(_, q) in &fracs {
        lcm = lcm / gcd(lcm, q) * q;
        if lcm > 1_000_000_000_000_000_000 {
            return None;
        }
    }
    let mut g: i128 = 0;
    for &(p, q) in &fracs {
        g = gcd(g, p * (lcm / q));
    }
    if g == 0 {
        None
    } else {
        Some(g as f64 / lcm as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_atoms_become_fractions() {
        assert_eq!(to_fraction(0.1, MAX_DENOMINATOR, 1e-12), Some((1, 10)));
        assert_eq!(to_fraction(-2.5, MAX_DENOMINATOR, 1e-12), Some((-5, 2)));
        assert_eq!(to_fraction(1.0 / 3.0, MAX_DENOMINATOR, 1e-12), Some((1, 3)));
        assert_eq!(to_fraction(0.0, MAX_DENOMINATOR, 1e-12), Some((0, 1)));
        assert_eq!(to_fraction(core::f64::consts::SQRT_2, MAX_DENOMINATOR, 1e-12), None);
    }

    #[test]
    fn gcd_of_fractions() {
        assert_eq!(fraction_gcd(&[1.0, -1.0], MAX_DENOMINATOR, 1e-12), Some(1.0));
        assert_eq!(fraction_gcd(&[2.0, -1.0], MAX_DENOMINATOR, 1e-12), Some(1.0));
        assert_eq!(fraction_gcd(&[0.5, 1.5, 0.0], MAX_DENOMINATOR, 1e-12), Some(0.5));
        assert_eq!(fraction_gcd(&[0.0], MAX_DENOMINATOR, 1e-12), None);
    }
}
