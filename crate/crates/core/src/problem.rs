//! Continuous problem data for the control-constrained tracking problem
//!
//! ```text
//! min ½‖y − y_d‖² + ν/2 ‖u‖²   over  u_lo ≤ u ≤ u_hi,
//! D^α_{0+}(y − y0) − Δy = u   on Ω × (0, T),  Ω = (0, 1),
//! ```
//!
//! plus a flat `key = value` configuration format for it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A spatial (or time-constant space-time) datum on Ω = (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionDescriptor {
    Zero,
    /// `c · x^a · (1 − x)`
    PowerLaw { c: f64, a: f64 },
    /// `Σ coef · √2 sin(kπx)`, i.e. coefficients in the orthonormal
    /// Dirichlet eigenbasis.
    SineCombo(Vec<(u32, f64)>),
    /// The wrapped spatial profile, held constant on (0, T).
    TimeConstant(Box<FunctionDescriptor>),
}

impl FunctionDescriptor {
    pub fn power_law(c: f64, a: f64) -> Self {
        Self::PowerLaw { c, a }
    }

    pub fn time_constant(inner: FunctionDescriptor) -> Self {
        match inner {
            Self::TimeConstant(_) => inner,
            other => Self::TimeConstant(Box::new(other)),
        }
    }

    /// Strips a `TimeConstant` wrapper.
    pub fn profile(&self) -> &FunctionDescriptor {
        match self {
            Self::TimeConstant(inner) => inner.profile(),
            other => other,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self.profile() {
            Self::Zero => true,
            Self::PowerLaw { c, .. } => *c == 0.0,
            Self::SineCombo(modes) => modes.iter().all(|&(_, v)| v == 0.0),
            Self::TimeConstant(_) => unreachable!(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.profile() {
            Self::Zero => 0.0,
            Self::PowerLaw { c, a } => {
                if x <= 0.0 {
                    if *a > 0.0 {
                        0.0
                    } else if *a == 0.0 {
                        *c
                    } else {
                        f64::INFINITY.copysign(*c)
                    }
                } else {
                    c * x.powf(*a) * (1.0 - x)
                }
            }
            Self::SineCombo(modes) => modes
                .iter()
                .map(|&(k, v)| v * std::f64::consts::SQRT_2 * (k as f64 * std::f64::consts::PI * x).sin())
                .sum(),
            Self::TimeConstant(_) => unreachable!(),
        }
    }

    /// Closed-form `‖f‖²_{L²(0,1)}`.
    pub fn norm_sq(&self) -> f64 {
        match self.profile() {
            Self::Zero => 0.0,
            Self::PowerLaw { c, a } => {
                c * c * (1.0 / (2.0 * a + 1.0) - 2.0 / (2.0 * a + 2.0) + 1.0 / (2.0 * a + 3.0))
            }
            Self::SineCombo(modes) => modes.iter().map(|&(_, v)| v * v).sum(),
            Self::TimeConstant(_) => unreachable!(),
        }
    }

    fn check(&self, field: &'static str) -> Result<()> {
        match self.profile() {
            Self::Zero => Ok(()),
            Self::PowerLaw { c, a } => {
                if !c.is_finite() {
                    return Err(Error::invalid(field, "coefficient must be finite"));
                }
                if !(*a > -0.5) {
                    return Err(Error::invalid(field, format!("exponent {a} must exceed -1/2 for square integrability")));
                }
                Ok(())
            }
            Self::SineCombo(modes) => {
                let mut seen: Vec<u32> = modes.iter().map(|m| m.0).collect();
                seen.sort_unstable();
                if seen.first() == Some(&0) {
                    return Err(Error::invalid(field, "sine modes start at 1"));
                }
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::invalid(field, "sine modes must be distinct"));
                }
                if modes.iter().any(|m| !m.1.is_finite()) {
                    return Err(Error::invalid(field, "sine coefficients must be finite"));
                }
                Ok(())
            }
            Self::TimeConstant(_) => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub nu: f64,
    pub final_time: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    /// Smoothness index of the initial datum, `y0 ∈ Ḣ^{2r}`.
    pub r: f64,
    pub y0: FunctionDescriptor,
    pub yd: FunctionDescriptor,
}

/// The numerical-experiment instance: ν = 1, T = 1, bounds ±0.1,
/// `y0 = x^{2r−0.49}(1−x)`, `y_d = x^{−0.49}(1−x)` constant in time.
pub fn default_experiment_spec(alpha: f64, r: f64) -> Result<ProblemSpec> {
    let spec = ProblemSpec {
        alpha,
        nu: 1.0,
        final_time: 1.0,
        u_lo: -0.1,
        u_hi: 0.1,
        r,
        y0: FunctionDescriptor::power_law(1.0, 2.0 * r - 0.49),
        yd: FunctionDescriptor::time_constant(FunctionDescriptor::power_law(1.0, -0.49)),
    };
    spec.validate()?;
    Ok(spec)
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::invalid("nu", format!("{} must be positive", self.nu)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::invalid("T", format!("{} must be positive", self.final_time)));
        }
        if self.u_lo.is_nan() || self.u_hi.is_nan() || !(self.u_lo < self.u_hi) {
            return Err(Error::invalid("bounds", format!("need u_lo < u_hi, got [{}, {}]", self.u_lo, self.u_hi)));
        }
        if !(self.r >= 0.0 && self.r < 1.0) {
            return Err(Error::invalid("r", format!("{} not in [0, 1)", self.r)));
        }
        self.y0.check("y0")?;
        self.yd.check("yd")?;
        Ok(())
    }

    /// Starting control value: 0 when admissible, else the box midpoint.
    pub fn initial_control_value(&self) -> f64 {
        if self.u_lo <= 0.0 && 0.0 <= self.u_hi {
            0.0
        } else if self.u_lo.is_finite() && self.u_hi.is_finite() {
            0.5 * (self.u_lo + self.u_hi)
        } else if self.u_lo.is_finite() {
            self.u_lo
        } else {
            self.u_hi
        }
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "nu = {}", self.nu);
        let _ = writeln!(out, "T = {}", self.final_time);
        let _ = writeln!(out, "u_lo = {}", self.u_lo);
        let _ = writeln!(out, "u_hi = {}", self.u_hi);
        let _ = writeln!(out, "r = {}", self.r);
        write_descriptor(&mut out, "y0", &self.y0);
        write_descriptor(&mut out, "yd", &self.yd);
        out
    }

    /// Parses `key = value` lines. Missing keys fall back to the
    /// experiment defaults for the given `alpha` and `r`.
    pub fn from_config_str(text: &str) -> Result<ProblemSpec> {
        let mut kv: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            kv.push((idx + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let lookup = |key: &str| kv.iter().rev().find(|e| e.1 == key);
        let number = |key: &str| -> Result<Option<f64>> {
            match lookup(key) {
                None => Ok(None),
                Some((line, _, v)) => v
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| Error::Parse { line: *line, message: format!("`{key}`: not a number: `{v}`") }),
            }
        };
        for (line, k, _) in &kv {
            if !KNOWN_KEYS.contains(&k.as_str()) {
                return Err(Error::Parse { line: *line, message: format!("unknown key `{k}`") });
            }
        }

        let alpha = number("alpha")?.unwrap_or(0.5);
        let r = number("r")?.unwrap_or(0.0);
        let base = ProblemSpec {
            alpha,
            nu: 1.0,
            final_time: 1.0,
            u_lo: -0.1,
            u_hi: 0.1,
            r,
            y0: FunctionDescriptor::power_law(1.0, 2.0 * r - 0.49),
            yd: FunctionDescriptor::time_constant(FunctionDescriptor::power_law(1.0, -0.49)),
        };
        let read_desc = |prefix: &str, default: FunctionDescriptor| -> Result<FunctionDescriptor> {
            let kind_key = format!("{prefix}.kind");
            let Some((line, _, kind)) = lookup(&kind_key) else {
                return Ok(default);
            };
            let line = *line;
            match kind.to_ascii_lowercase().as_str() {
                "zero" => Ok(FunctionDescriptor::Zero),
                "powerlaw" | "power_law" => {
                    let c = number(&format!("{prefix}.c"))?.unwrap_or(1.0);
                    let a = number(&format!("{prefix}.a"))?.ok_or_else(|| Error::Parse {
                        line,
                        message: format!("`{prefix}.a` required for powerlaw"),
                    })?;
                    Ok(FunctionDescriptor::PowerLaw { c, a })
                }
                "sine" | "sinecombo" => {
                    let modes_key = format!("{prefix}.modes");
                    let (mline, _, spec) = lookup(&modes_key).ok_or_else(|| Error::Parse {
                        line,
                        message: format!("`{modes_key}` required for sine"),
                    })?;
                    parse_modes(spec).map(FunctionDescriptor::SineCombo).map_err(|message| Error::Parse {
                        line: *mline,
                        message,
                    })
                }
                other => Err(Error::Parse { line, message: format!("unknown function kind `{other}`") }),
            }
        };

        let spec = ProblemSpec {
            alpha,
            nu: number("nu")?.unwrap_or(base.nu),
            final_time: number("T")?.unwrap_or(base.final_time),
            u_lo: number("u_lo")?.unwrap_or(base.u_lo),
            u_hi: number("u_hi")?.unwrap_or(base.u_hi),
            r,
            y0: read_desc("y0", base.y0.clone())?,
            yd: FunctionDescriptor::time_constant(read_desc("yd", base.yd.profile().clone())?),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_config_file(path: &Path) -> Result<ProblemSpec> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text).map_err(|e| match e {
            Error::Parse { line, message } => Error::Config { path: path.to_path_buf(), line, message },
            other => other,
        })
    }
}

const KNOWN_KEYS: &[&str] = &[
    "alpha", "nu", "T", "u_lo", "u_hi", "r", "y0.kind", "y0.c", "y0.a", "y0.modes", "yd.kind", "yd.c", "yd.a",
    "yd.modes",
];

fn write_descriptor(out: &mut String, prefix: &str, f: &FunctionDescriptor) {
    match f.profile() {
        FunctionDescriptor::Zero => {
            let _ = writeln!(out, "{prefix}.kind = zero");
        }
        FunctionDescriptor::PowerLaw { c, a } => {
            let _ = writeln!(out, "{prefix}.kind = powerlaw");
            let _ = writeln!(out, "{prefix}.c = {c}");
            let _ = writeln!(out, "{prefix}.a = {a}");
        }
        FunctionDescriptor::SineCombo(modes) => {
            let _ = writeln!(out, "{prefix}.kind = sine");
            let list: Vec<String> = modes.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            let _ = writeln!(out, "{prefix}.modes = {}", list.join(", "));
        }
        FunctionDescriptor::TimeConstant(_) => unreachable!(),
    }
}

fn parse_modes(spec: &str) -> std::result::Result<Vec<(u32, f64)>, String> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item.split_once(':').ok_or_else(|| format!("mode `{item}` is not `k:coef`"))?;
            let k = k.trim().parse::<u32>().map_err(|_| format!("bad mode index `{k}`"))?;
            let v = v.trim().parse::<f64>().map_err(|_| format!("bad coefficient `{v}`"))?;
            Ok((k, v))
        })
        .collect()
}
