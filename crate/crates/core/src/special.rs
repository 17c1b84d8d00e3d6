//! Gamma-function helpers shared by the kernel assembly and the
//! Mittag-Leffler evaluator.

use std::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma_abs(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `sin(pi x)` with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r.fract() == 0.0 {
        return 0.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x > 0.5 {
        return 1.0 / gamma(x);
    }
    let s = sin_pi(x);
    if s == 0.0 {
        return 0.0;
    }
    // reflection: 1/Γ(x) = Γ(1-x) sin(πx) / π
    let lg = ln_gamma_abs(1.0 - x);
    s * (lg - PI.ln()).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_known_points() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma(1.5) - 0.5 * PI.sqrt()).abs() < 1e-15);
        assert!((gamma(2.0) - 1.0).abs() < 1e-15);
        // Γ(1/3) = 2.678938534707747633...
        assert!((gamma(1.0 / 3.0) / 2.678_938_534_707_747_6 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_gamma_poles_and_reflection() {
        for k in 0..20 {
            assert_eq!(rgamma(-(k as f64)), 0.0);
        }
        // 1/Γ(-0.5) = -1/(2√π)
        assert!((rgamma(-0.5) + 0.5 / PI.sqrt()).abs() < 1e-15);
        // 1/Γ(-1.5) = 3/(4√π)
        assert!((rgamma(-1.5) - 0.75 / PI.sqrt()).abs() < 1e-15);
        assert!((rgamma(0.3) * gamma(0.3) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sin_pi_is_exact_on_integers_and_halves() {
        assert_eq!(sin_pi(3.0), 0.0);
        assert_eq!(sin_pi(-7.0), 0.0);
        assert_eq!(sin_pi(0.5), 1.0);
        assert_eq!(sin_pi(-2.5), -1.0);
        assert!((sin_pi(0.25) - (PI / 4.0).sin()).abs() < 1e-16);
    }
}
