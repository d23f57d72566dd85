//! Streaming moments, isotonic regression and log-log slope fits.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

/// Running mean and centered second moment; `merge` makes it a monoid so
/// per-chunk partial results can be combined in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Running moments of a pair, including the co-moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    pub x: Moments,
    pub y: Moments,
    pub cxy: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        let dx = x - self.x.mean;
        self.x.push(x);
        self.y.push(y);
        self.cxy += dx * (y - self.y.mean);
    }

    pub fn merge(&mut self, other: &PairMoments) {
        if other.x.count == 0 {
            return;
        }
        if self.x.count == 0 {
            *self = *other;
            return;
        }
        let na = self.x.count as f64;
        let nb = other.x.count as f64;
        let dx = other.x.mean - self.x.mean;
        let dy = other.y.mean - self.y.mean;
        self.cxy += other.cxy + dx * dy * na * nb / (na + nb);
        self.x.merge(&other.x);
        self.y.merge(&other.y);
    }

    /// Sample covariance of the two coordinates.
    pub fn covariance(&self) -> f64 {
        let n = self.x.count;
        if n < 2 {
            0.0
        } else {
            self.cxy / (n - 1) as f64
        }
    }
}

/// Pool-adjacent-violators fit of a non-increasing sequence (unit weights).
pub fn isotonic_decreasing(values: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            let last = blocks.len() - 1;
            blocks[last] = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, c) in blocks {
        out.extend(core::iter::repeat_n(m, c));
    }
    out
}

/// Least-squares slope and intercept of `ln y` against `ln n` over the
/// positive entries of `(n, y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, y)| *n > 0.0 && *y > 0.0 && y.is_finite())
        .map(|&(n, y)| (n.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx) * (p.0 - mx), b + (p.0 - mx) * (p.1 - my))
    });
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 7.0, 0.5];
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..2].iter().for_each(|&x| a.push(x));
        xs[2..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-14);
        assert!((a.variance() - all.variance()).abs() < 1e-12);
    }

    #[test]
    fn pair_covariance() {
        let pts = [(1.0, 2.0), (2.0, 4.5), (3.0, 5.5), (4.0, 9.0)];
        let mut all = PairMoments::default();
        pts.iter().for_each(|&(x, y)| all.push(x, y));
        let mx = 2.5;
        let my = (2.0 + 4.5 + 5.5 + 9.0) / 4.0;
        let cov: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / 3.0;
        assert!((all.covariance() - cov).abs() < 1e-12);
        let (mut a, mut b) = (PairMoments::default(), PairMoments::default());
        pts[..1].iter().for_each(|&(x, y)| a.push(x, y));
        pts[1..].iter().for_each(|&(x, y)| b.push(x, y));
        a.merge(&b);
        assert!((a.covariance() - cov).abs() < 1e-12);
    }

    #[test]
    fn pava_pools_violations() {
        let fit = isotonic_decreasing(&[3.0, 1.0, 2.0, 0.5]);
        assert_eq!(fit, [3.0, 1.5, 1.5, 0.5]);
    }

    #[test]
    fn loglog_recovers_power() {
        let pts: Vec<(f64, f64)> = (10..100).map(|n| (n as f64, 3.0 * (n as f64).powf(-1.5))).collect();
        let (slope, _) = loglog_fit(&pts).unwrap();
        assert!((slope + 1.5).abs() < 1e-12);
    }
}
