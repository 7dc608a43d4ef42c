//! Standard normal distribution helpers.

use std::f64::consts::FRAC_1_SQRT_2;

/// `Φ(z)`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `P(a < Z ≤ b)` for `Z ~ N(0, 1)`, evaluated on the tail nearer to the
/// interval to avoid cancellation.
pub fn standard_interval_mass(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mass = if a >= 0.0 {
        // both in the upper tail: Q(a) - Q(b)
        0.5 * (libm::erfc(a * FRAC_1_SQRT_2) - libm::erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - 0.5 * libm::erfc(b * FRAC_1_SQRT_2)
    };
    mass.max(0.0)
}

/// `P(a < X ≤ b)` for `X ~ N(mean, std²)`; `std = 0` is a point mass.
pub fn interval_mass(mean: f64, std: f64, a: f64, b: f64) -> f64 {
    if std > 0.0 {
        standard_interval_mass((a - mean) / std, (b - mean) / std)
    } else if mean > a && mean <= b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((standard_interval_mass(-0.5, 0.5) - 0.382_924_922_548_026).abs() < 1e-14);
    }

    #[test]
    fn tails_keep_precision() {
        let m = standard_interval_mass(10.0, 11.0);
        assert!(m > 0.0 && m < 1e-22);
        let m = standard_interval_mass(-11.0, -10.0);
        assert!(m > 0.0 && m < 1e-22);
    }
}
