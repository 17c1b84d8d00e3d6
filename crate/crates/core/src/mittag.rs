//! Two-parameter Mittag–Leffler function `E_{β,γ}(z)` on the non-positive
//! real axis, and closed-form spectral solutions built from it.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::sync::{Mutex, OnceLock};

use rug::Float;

use crate::error::{Error, Result};
use crate::special::{ln_gamma_abs, rgamma, sin_pi};

/// Switch point between the power series and the asymptotic expansion,
/// in terms of `x = −z`.
pub fn crossover(beta: f64) -> f64 {
    2.0 * 32f64.powf(beta)
}

fn check(beta: f64, gamma: f64, z: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid("beta", format!("{beta} outside (0, 1]")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", format!("{gamma} must be positive")));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(Error::invalid("z", format!("{z} must be finite and non-positive")));
    }
    Ok(())
}

/// `E_{β,γ}(z)` for `0 < β ≤ 1`, `γ > 0`, `z ≤ 0`.
pub fn ml(beta: f64, gamma: f64, z: f64) -> Result<f64> {
    check(beta, gamma, z)?;
    let x = -z;
    Ok(if x <= crossover(beta) { series_unchecked(beta, gamma, x) } else { asymptotic_unchecked(beta, gamma, x) })
}

/// Power series evaluated regardless of the argument size.
pub fn ml_series(beta: f64, gamma: f64, z: f64) -> Result<f64> {
    check(beta, gamma, z)?;
    Ok(series_unchecked(beta, gamma, -z))
}

/// Optimally truncated asymptotic expansion for large `−z`.
pub fn ml_asymptotic(beta: f64, gamma: f64, z: f64) -> Result<f64> {
    check(beta, gamma, z)?;
    if z == 0.0 {
        return Err(Error::invalid("z", "asymptotic expansion needs z < 0"));
    }
    Ok(asymptotic_unchecked(beta, gamma, -z))
}

/// Log-magnitude of the series term `x^k / Γ(kβ+γ)`.
fn log_term(beta: f64, gamma: f64, lnx: f64, k: usize) -> f64 {
    k as f64 * lnx - ln_gamma_abs(k as f64 * beta + gamma)
}

fn series_unchecked(beta: f64, gamma: f64, x: f64) -> f64 {
    if x == 0.0 {
        return rgamma(gamma);
    }
    let lnx = x.ln();
    // lower bound for ln|E|: algebraic decay, or e^{−x} when β = 1
    let floor = if beta == 1.0 { -x - 3.0 * x.ln_1p() } else { -3.0 * x.ln_1p() - 10.0 };
    let stop = floor - 46.0;
    let mut peak = f64::NEG_INFINITY;
    let mut k = 0usize;
    loop {
        let lt = log_term(beta, gamma, lnx, k);
        peak = peak.max(lt);
        if lt < stop && lt < peak {
            break;
        }
        k += 1;
    }
    let terms = k + 1;
    if peak - floor <= 2.0 {
        series_f64(beta, gamma, lnx, terms)
    } else {
        let bits = ((peak - stop) / LN_2).ceil() as u32 + 24 + usize::BITS - terms.leading_zeros();
        series_mpfr(beta, gamma, x, terms, bits)
    }
}

fn series_f64(beta: f64, gamma: f64, lnx: f64, terms: usize) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in 0..terms {
        let mag = log_term(beta, gamma, lnx, k).exp();
        let t = if k % 2 == 0 { mag } else { -mag };
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

type CoefficientCache = HashMap<(u64, u64, u32), Vec<Float>>;

fn cache() -> &'static Mutex<CoefficientCache> {
    static CACHE: OnceLock<Mutex<CoefficientCache>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn reciprocal_gamma_mpfr(beta: f64, gamma: f64, k: usize, prec: u32) -> Float {
    let mut arg = Float::with_val(prec, beta);
    arg *= k as u64;
    arg += gamma;
    arg.gamma().recip()
}

fn series_mpfr(beta: f64, gamma: f64, x: f64, terms: usize, bits: u32) -> f64 {
    let p = bits.div_ceil(64) * 64;
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    let coeffs = guard.entry((beta.to_bits(), gamma.to_bits(), p)).or_default();
    while coeffs.len() < terms {
        let k = coeffs.len();
        coeffs.push(reciprocal_gamma_mpfr(beta, gamma, k, p));
    }
    let minus_x = Float::with_val(p, -x);
    let mut acc = Float::with_val(p, &coeffs[terms - 1]);
    for c in coeffs[..terms - 1].iter().rev() {
        acc *= &minus_x;
        acc += c;
    }
    acc.to_f64()
}

/// `x^{−k}/Γ(γ − kβ)` with the reciprocal gamma split through reflection so
/// that neither factor overflows.
fn asymptotic_term(beta: f64, gamma: f64, lnx: f64, k: usize) -> (f64, f64) {
    let a = gamma - k as f64 * beta;
    let kl = k as f64 * lnx;
    if a > 0.0 {
        let m = (-ln_gamma_abs(a) - kl).exp();
        (m, m)
    } else {
        let lg = ln_gamma_abs(1.0 - a) - kl;
        let env = lg.exp() / PI;
        (sin_pi(a) * env, env)
    }
}

fn asymptotic_unchecked(beta: f64, gamma: f64, x: f64) -> f64 {
    let lnx = x.ln();
    let mut sum = 0.0;
    let mut prev_env = f64::INFINITY;
    for k in 1..10_000 {
        let (t, env) = asymptotic_term(beta, gamma, lnx, k);
        if env > prev_env || !env.is_finite() {
            break;
        }
        prev_env = env;
        if k % 2 == 1 {
            sum += t;
        } else {
            sum -= t;
        }
        if env < 1e-22 * sum.abs() {
            break;
        }
    }
    sum
}

/// How a mode's time factor depends on `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeKind {
    /// `E_{α,1}(−λ t^α)`: free decay of an initial mode.
    Homogeneous,
    /// `t^α E_{α,1+α}(−λ t^α)`: response to a time-constant source mode
    /// starting from rest.
    ConstantSource,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMode {
    pub wavenumber: u32,
    pub amplitude: f64,
    pub kind: ModeKind,
}

impl SpectralMode {
    pub fn eigenvalue(&self) -> f64 {
        (self.wavenumber as f64 * PI).powi(2)
    }
}

/// Exact solution `Σ amplitude·T(t)·√2 sin(kπx)` of the fractional heat
/// equation for sine-mode data.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub alpha: f64,
    pub modes: Vec<SpectralMode>,
}

impl SpectralSolution {
    pub fn new(alpha: f64, modes: Vec<SpectralMode>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} outside (0, 1)")));
        }
        if modes.iter().any(|m| m.wavenumber == 0) {
            return Err(Error::invalid("modes", "wavenumbers start at 1"));
        }
        Ok(Self { alpha, modes })
    }

    /// Free decay of `y0 = Σ c_k √2 sin(kπx)`.
    pub fn homogeneous(alpha: f64, y0: &[(u32, f64)]) -> Result<Self> {
        Self::new(
            alpha,
            y0.iter()
                .map(|&(k, c)| SpectralMode { wavenumber: k, amplitude: c, kind: ModeKind::Homogeneous })
                .collect(),
        )
    }

    /// Response to the time-constant source `f = Σ c_k √2 sin(kπx)` from rest.
    pub fn constant_source(alpha: f64, f: &[(u32, f64)]) -> Result<Self> {
        Self::new(
            alpha,
            f.iter()
                .map(|&(k, c)| SpectralMode { wavenumber: k, amplitude: c, kind: ModeKind::ConstantSource })
                .collect(),
        )
    }

    /// Amplitude-weighted time factor of mode `i`.
    pub fn time_factor(&self, i: usize, t: f64) -> Result<f64> {
        let m = &self.modes[i];
        let a = self.alpha;
        let ta = t.powf(a);
        let z = -m.eigenvalue() * ta;
        Ok(m.amplitude
            * match m.kind {
                ModeKind::Homogeneous => ml(a, 1.0, z)?,
                ModeKind::ConstantSource => ta * ml(a, 1.0 + a, z)?,
            })
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        let mut s = 0.0;
        for (i, m) in self.modes.iter().enumerate() {
            s += self.time_factor(i, t)? * std::f64::consts::SQRT_2 * (m.wavenumber as f64 * PI * x).sin();
        }
        Ok(s)
    }
}
