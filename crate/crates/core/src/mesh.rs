//! Temporal and spatial partitions.

use crate::error::{Error, Result};

/// Partition `0 = t_0 < … < t_{2M} = T`, graded towards both endpoints:
/// `t_j = (j/M)^{σ1} T/2` on the left half and
/// `t_j = T − (2 − j/M)^{σ2} T/2` on the right half.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGrid {
    half_steps: usize,
    sigma1: f64,
    sigma2: f64,
    final_time: f64,
    nodes: Vec<f64>,
    widths: Vec<f64>,
}

impl TemporalGrid {
    pub fn graded(half_steps: usize, sigma1: f64, sigma2: f64, final_time: f64) -> Result<Self> {
        if half_steps < 1 {
            return Err(Error::invalid("M", "need at least one step per half"));
        }
        if !(sigma1 >= 1.0 && sigma1.is_finite()) {
            return Err(Error::invalid("sigma1", format!("{sigma1} must be >= 1")));
        }
        if !(sigma2 >= 1.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", format!("{sigma2} must be >= 1")));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::invalid("T", format!("{final_time} must be positive")));
        }
        let m = half_steps as f64;
        let half = 0.5 * final_time;
        let nodes: Vec<f64> = (0..=2 * half_steps)
            .map(|j| {
                if j <= half_steps {
                    (j as f64 / m).powf(sigma1) * half
                } else {
                    final_time - (2.0 - j as f64 / m).powf(sigma2) * half
                }
            })
            .collect();
        let widths: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if widths.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::invalid("M", "grid too fine for f64 resolution"));
        }
        Ok(Self { half_steps, sigma1, sigma2, final_time, nodes, widths })
    }

    pub fn uniform(half_steps: usize, final_time: f64) -> Result<Self> {
        Self::graded(half_steps, 1.0, 1.0, final_time)
    }

    pub fn half_steps(&self) -> usize {
        self.half_steps
    }

    pub fn slabs(&self) -> usize {
        self.widths.len()
    }

    pub fn sigmas(&self) -> (f64, f64) {
        (self.sigma1, self.sigma2)
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn max_width(&self) -> f64 {
        self.widths.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the slab `(t_k, t_{k+1}]` containing `t` (clamped to range).
    pub fn slab_of(&self, t: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x < t);
        idx.saturating_sub(1).min(self.slabs() - 1)
    }
}

/// Grading exponents taken with equality:
/// `σ1 = max{1, (2−α)/((2r−1)α+1)}`, `σ2 = max{1, (2−α)/(α+1)}`.
pub fn default_sigmas(alpha: f64, r: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::invalid("r", format!("{r} not in [0, 1)")));
    }
    let denom = (2.0 * r - 1.0) * alpha + 1.0;
    if !(denom > 0.0) {
        return Err(Error::invalid("r", "degenerate grading denominator (2r-1)α+1 <= 0"));
    }
    Ok((f64::max(1.0, (2.0 - alpha) / denom), f64::max(1.0, (2.0 - alpha) / (alpha + 1.0))))
}

/// Uniform partition of Ω = (0, 1) into `n` cells; Dirichlet dofs at the
/// endpoints are eliminated, leaving `n − 1` interior unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpatialGrid {
    cells: usize,
}

impl SpatialGrid {
    pub fn uniform(cells: usize) -> Result<Self> {
        if cells < 2 {
            return Err(Error::invalid("n", format!("need at least 2 cells, got {cells}")));
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn interior_dofs(&self) -> usize {
        self.cells - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.cells as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.cells).map(|i| self.node(i)).collect()
    }

    /// Cell index containing `x`, clamped to `[0, n−1]`.
    pub fn cell_of(&self, x: f64) -> usize {
        let c = (x * self.cells as f64).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.cells - 1)
        }
    }
}

/// Sorted union of two breakpoint sets sharing their endpoints; points
/// closer than `1e-14 · span` are treated as one.
pub fn merge_breakpoints(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let (Some(&a0), Some(&a1), Some(&b0), Some(&b1)) = (a.first(), a.last(), b.first(), b.last()) else {
        return Err(Error::invalid("breakpoints", "empty breakpoint set"));
    };
    let span = (a1 - a0).abs().max((b1 - b0).abs());
    let tol = 1e-14 * span;
    if (a0 - b0).abs() > tol || (a1 - b1).abs() > tol {
        return Err(Error::EndpointMismatch { a0, a1, b0, b1 });
    }
    Ok(merge_sorted(a, b, tol))
}

pub(crate) fn merge_sorted(a: &[f64], b: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let push = |x: f64, out: &mut Vec<f64>| match out.last() {
        Some(&last) if x - last <= tol => {}
        _ => out.push(x),
    };
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        if take_a {
            push(a[i], &mut out);
            i += 1;
        } else {
            push(b[j], &mut out);
            j += 1;
        }
    }
    out
}
