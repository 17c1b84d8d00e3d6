//! Riemann-Liouville coupling between piecewise-constant time slabs.
//!
//! For slab indicators `χ_j` (slab `j` spans `[t_j, t_{j+1}]`, 0-based) the
//! coupling weight is
//!
//! ```text
//! B[k][j] = (D^{α/2}_{0+} χ_j, D^{α/2}_{T−} χ_k) = ∫_{slab k} D^α_{0+} χ_j
//!         = [ω(t_{k+1}−t_j) − ω(t_{k+1}−t_{j+1}) − ω(t_k−t_j) + ω(t_k−t_{j+1})] / Γ(2−α)
//! ```
//!
//! with `ω(s) = max(s, 0)^{1−α}`. The matrix is lower triangular, and its
//! symmetric part is positive definite.

use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::TemporalGrid;
use crate::quad;
use crate::special::gamma;

/// Above this many slabs the triangle is not stored; rows are regenerated
/// from the grid on every sweep.
pub const ON_DEMAND_THRESHOLD: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageMode {
    Auto,
    Dense,
    OnDemand,
}

#[derive(Debug, Clone)]
enum Storage {
    /// Packed rows; row `k` starts at `k(k+1)/2`.
    Dense(Vec<f64>),
    OnDemand,
}

#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    alpha: f64,
    nodes: Vec<f64>,
    inv_gamma: f64,
    storage: Storage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Ascending,
    Descending,
}

fn omega(s: f64, expo: f64) -> f64 {
    if s > 0.0 {
        s.powf(expo)
    } else {
        0.0
    }
}

/// `out[i] = ω(t_top − t_i)` for `i = 0..=top`.
fn omega_row(nodes: &[f64], top: usize, expo: f64, out: &mut Vec<f64>) {
    out.clear();
    let t = nodes[top];
    out.extend(nodes[..=top].iter().map(|&ti| omega(t - ti, expo)));
}

/// Builds row `k` of B from `hi[i] = ω(t_{k+1}−t_i)` and `lo[i] = ω(t_k−t_i)`.
#[inline]
fn combine_row(hi: &[f64], lo: &[f64], inv_gamma: f64, row: &mut Vec<f64>) {
    let k = lo.len() - 1;
    row.clear();
    row.extend((0..=k).map(|j| {
        let lo_next = if j < k { lo[j + 1] } else { 0.0 };
        (hi[j] - hi[j + 1] - lo[j] + lo_next) * inv_gamma
    }));
}

impl CouplingMatrix {
    pub fn assemble(grid: &TemporalGrid, alpha: f64) -> Result<Self> {
        Self::assemble_with(grid, alpha, StorageMode::Auto)
    }

    pub fn assemble_with(grid: &TemporalGrid, alpha: f64, mode: StorageMode) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
        }
        let dense = match mode {
            StorageMode::Dense => true,
            StorageMode::OnDemand => false,
            StorageMode::Auto => grid.slabs() <= ON_DEMAND_THRESHOLD,
        };
        let mut out = Self {
            alpha,
            nodes: grid.nodes().to_vec(),
            inv_gamma: 1.0 / gamma(2.0 - alpha),
            storage: Storage::OnDemand,
        };
        if dense {
            let s = out.size();
            let mut packed = Vec::with_capacity(s * (s + 1) / 2);
            out.sweep_rows(Sweep::Ascending, |_, row| packed.extend_from_slice(row));
            out.storage = Storage::Dense(packed);
        }
        Ok(out)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn size(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_stored(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// `B[k][j]`, zero above the diagonal.
    pub fn entry(&self, k: usize, j: usize) -> f64 {
        if j > k {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(p) => p[k * (k + 1) / 2 + j],
            Storage::OnDemand => {
                let expo = 1.0 - self.alpha;
                let t = &self.nodes;
                let lo_next = if j < k { omega(t[k] - t[j + 1], expo) } else { 0.0 };
                (omega(t[k + 1] - t[j], expo) - omega(t[k + 1] - t[j + 1], expo) - omega(t[k] - t[j], expo) + lo_next)
                    * self.inv_gamma
            }
        }
    }

    /// Exact row sum `(t_{k+1}^{1−α} − t_k^{1−α}) / Γ(2−α)`.
    pub fn row_sum_exact(&self, k: usize) -> f64 {
        let expo = 1.0 - self.alpha;
        (omega(self.nodes[k + 1], expo) - omega(self.nodes[k], expo)) * self.inv_gamma
    }

    /// Visits rows `B[k][0..=k]` in the requested order.
    pub fn sweep_rows(&self, order: Sweep, mut visit: impl FnMut(usize, &[f64])) {
        let s = self.size();
        let ks: Box<dyn Iterator<Item = usize>> = match order {
            Sweep::Ascending => Box::new(0..s),
            Sweep::Descending => Box::new((0..s).rev()),
        };
        match &self.storage {
            Storage::Dense(p) => {
                for k in ks {
                    let start = k * (k + 1) / 2;
                    visit(k, &p[start..start + k + 1]);
                }
            }
            Storage::OnDemand => {
                let expo = 1.0 - self.alpha;
                let (mut hi, mut lo, mut row) = (Vec::new(), Vec::new(), Vec::new());
                let mut cached: Option<(usize, Vec<f64>)> = None;
                for k in ks {
                    // reuse the ω row shared with the previously visited row
                    match cached.take() {
                        Some((top, v)) if top == k => {
                            lo = v;
                            omega_row(&self.nodes, k + 1, expo, &mut hi);
                        }
                        Some((top, v)) if top == k + 1 => {
                            hi = v;
                            omega_row(&self.nodes, k, expo, &mut lo);
                        }
                        _ => {
                            omega_row(&self.nodes, k + 1, expo, &mut hi);
                            omega_row(&self.nodes, k, expo, &mut lo);
                        }
                    }
                    combine_row(&hi, &lo, self.inv_gamma, &mut row);
                    visit(k, &row);
                    cached = Some(match order {
                        Sweep::Ascending => (k + 1, std::mem::take(&mut hi)),
                        Sweep::Descending => (k, std::mem::take(&mut lo)),
                    });
                }
            }
        }
    }

    /// Debug dump: rows of the triangle, little-endian f64, row-major.
    pub fn write_triangle(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut err = Ok(());
        self.sweep_rows(Sweep::Ascending, |_, row| {
            if err.is_ok() {
                for v in row {
                    if let Err(e) = w.write_all(&v.to_le_bytes()) {
                        err = Err(e);
                        break;
                    }
                }
            }
        });
        err
    }
}

/// `m_k = ∫_{slab k} t^{−α}/Γ(1−α) dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMoments {
    pub values: Vec<f64>,
}

impl KernelMoments {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

pub fn source_moments(grid: &TemporalGrid, alpha: f64) -> Result<KernelMoments> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    let expo = 1.0 - alpha;
    let g = gamma(2.0 - alpha);
    let values = grid.nodes().windows(2).map(|w| (omega(w[1], expo) - omega(w[0], expo)) / g).collect();
    Ok(KernelMoments { values })
}

/// `a^{−γ} − b^{−γ}` for `0 < a < b`, without cancellation.
fn power_gap(a: f64, b: f64, gam: f64) -> f64 {
    // a^{-γ}(1 − (a/b)^{γ}) with (a/b)^γ = exp(γ ln(a/b))
    -a.powf(-gam) * (gam * (a / b).ln()).exp_m1()
}

/// Reference value of `B[k][j]` by direct quadrature of the product of
/// the exact half-derivatives of the slab indicators:
///
/// ```text
/// D^{α/2}_{0+} χ_j(t) = [(t−t_j)_+^{−α/2} − (t−t_{j+1})_+^{−α/2}] / Γ(1−α/2)
/// D^{α/2}_{T−} χ_k(t) = [(t_{k+1}−t)_+^{−α/2} − (t_k−t)_+^{−α/2}] / Γ(1−α/2)
/// ```
///
/// Endpoint singularities are removed by a power substitution on each side
/// of every breakpoint. Intended for small grids (test support).
pub fn half_derivative_oracle(grid: &TemporalGrid, alpha: f64, j: usize, k: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    if j > k {
        return Ok(0.0);
    }
    let t = grid.nodes();
    let gam = 0.5 * alpha;
    let norm = gamma(1.0 - gam).powi(2);
    let (fj0, fj1, gk0, gk1) = (t[j], t[j + 1], t[k], t[k + 1]);

    // dist(p) is the signed distance t − p, replaced by the exact offset
    // when p is the endpoint the substitution is anchored at.
    let integrand = |x: f64, anchor: f64, offset: f64| -> f64 {
        let d = |p: f64| if p == anchor { offset } else { x - p };
        let left = {
            let a = d(fj0);
            let b = d(fj1);
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                a.powf(-gam)
            } else {
                -power_gap(b, a, gam)
            }
        };
        let right = {
            let a = -d(gk1);
            let b = -d(gk0);
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                a.powf(-gam)
            } else {
                -power_gap(b, a, gam)
            }
        };
        left * right
    };

    let mut pts = vec![fj0, fj1, gk0, gk1];
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts.retain(|&p| p >= fj0 && p <= gk1);

    let q = 2.0 / (1.0 - gam);
    let tol = 1e-12;
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let half = 0.5 * (b - a);
        // left half anchored at a: x = a + half·u^q
        total += quad::adaptive(
            |u| {
                let off = half * u.powf(q);
                integrand(a + off, a, off) * half * q * u.powf(q - 1.0)
            },
            0.0,
            1.0,
            tol,
            4000,
        )?;
        // right half anchored at b: x = b − half·u^q
        total += quad::adaptive(
            |u| {
                let off = half * u.powf(q);
                integrand(b - off, b, -off) * half * q * u.powf(q - 1.0)
            },
            0.0,
            1.0,
            tol,
            4000,
        )?;
    }
    Ok(total / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g2(alpha: f64) -> f64 {
        gamma(2.0 - alpha)
    }

    #[test]
    fn uniform_grid_diagonal_and_subdiagonal() {
        let alpha = 0.4;
        let grid = TemporalGrid::uniform(8, 1.0).unwrap();
        let tau: f64 = 1.0 / 16.0;
        let b = CouplingMatrix::assemble(&grid, alpha).unwrap();
        for k in 0..16 {
            let d = tau.powf(1.0 - alpha) / g2(alpha);
            assert!((b.entry(k, k) - d).abs() < 1e-15);
            if k > 0 {
                let s = (2f64.powf(1.0 - alpha) - 2.0) * tau.powf(1.0 - alpha) / g2(alpha);
                assert!((b.entry(k, k - 1) - s).abs() < 1e-15);
                assert!(s < 0.0);
            }
        }
    }

    #[test]
    fn sign_pattern_and_row_sums() {
        for &alpha in &[0.1, 0.4, 0.8, 0.95] {
            let grid = TemporalGrid::graded(32, 2.5, 1.3, 1.0).unwrap();
            let b = CouplingMatrix::assemble(&grid, alpha).unwrap();
            for k in 0..b.size() {
                assert!(b.entry(k, k) > 0.0);
                let mut sum = neumaier::Sum::default();
                let mut mag = 0.0;
                for j in 0..=k {
                    mag += b.entry(k, j).abs();
                    if j < k {
                        assert!(b.entry(k, j) < 0.0, "alpha={alpha} k={k} j={j}");
                    }
                    sum.add(b.entry(k, j));
                }
                assert_eq!(b.entry(k, k + 1), 0.0);
                let exact = b.row_sum_exact(k);
                assert!((sum.total() - exact).abs() <= 1e-14 * mag, "alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn backward_difference_limit() {
        let grid = TemporalGrid::uniform(4, 1.0).unwrap();
        let b = CouplingMatrix::assemble(&grid, 0.999).unwrap();
        for k in 1..8 {
            assert!((b.entry(k, k) - 1.0).abs() < 1e-2);
            assert!((b.entry(k, k - 1) + 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn symmetric_part_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(m, s1, s2, alpha) in &[(32, 3.0, 1.2, 0.5), (16, 6.0, 1.0, 0.8), (32, 1.0, 1.0, 0.2)] {
            let grid = TemporalGrid::graded(m, s1, s2, 1.0).unwrap();
            let b = CouplingMatrix::assemble(&grid, alpha).unwrap();
            let s = b.size();
            let sym: Vec<Vec<f64>> = (0..s)
                .map(|i| (0..s).map(|j| 0.5 * (b.entry(i, j) + b.entry(j, i))).collect())
                .collect();
            assert!(cholesky_succeeds(&sym));
            for _ in 0..50 {
                let v: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let q: f64 = (0..s).map(|i| (0..=i).map(|j| v[i] * b.entry(i, j) * v[j]).sum::<f64>()).sum();
                assert!(q > 0.0);
            }
        }
    }

    fn cholesky_succeeds(a: &[Vec<f64>]) -> bool {
        let n = a.len();
        let mut l = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
                if i == j {
                    if s <= 0.0 {
                        return false;
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        true
    }

    #[test]
    fn oracle_matches_closed_form_graded() {
        let grid = TemporalGrid::graded(4, 2.0, 1.0, 1.0).unwrap();
        let b = CouplingMatrix::assemble(&grid, 0.4).unwrap();
        for k in 0..8 {
            for j in 0..=k {
                let o = half_derivative_oracle(&grid, 0.4, j, k).unwrap();
                let e = b.entry(k, j);
                assert!((o - e).abs() <= 1e-8 * e.abs().max(1e-3), "k={k} j={j}: {o} vs {e}");
            }
        }
    }

    #[test]
    fn oracle_single_step_and_causality() {
        let grid = TemporalGrid::uniform(1, 1.0).unwrap();
        let b = CouplingMatrix::assemble(&grid, 0.5).unwrap();
        let o = half_derivative_oracle(&grid, 0.5, 0, 0).unwrap();
        assert!((o - b.entry(0, 0)).abs() < 1e-8);
        assert_eq!(half_derivative_oracle(&grid, 0.5, 1, 0).unwrap(), 0.0);
    }

    #[test]
    fn oracle_small_alpha() {
        let alpha = 0.02;
        let grid = TemporalGrid::uniform(1, 1.0).unwrap();
        let o = half_derivative_oracle(&grid, alpha, 1, 1).unwrap();
        let tau: f64 = 0.5;
        assert!((o - tau.powf(1.0 - alpha) / g2(alpha)).abs() < 1e-8);
        assert!((o * g2(alpha) / tau - 1.0).abs() < 0.02);
    }

    #[test]
    fn moments_examples() {
        let grid = TemporalGrid::uniform(2, 1.0).unwrap();
        let m = source_moments(&grid, 0.5).unwrap();
        let g = gamma(1.5);
        let want = [0.25f64.sqrt(), 0.5f64.sqrt() - 0.25f64.sqrt(), 0.75f64.sqrt() - 0.5f64.sqrt(), 1.0 - 0.75f64.sqrt()];
        for (a, b) in m.values.iter().zip(want) {
            assert!((a - b / g).abs() < 1e-15);
        }
        assert!((m.total() - 1.0 / g).abs() < 1e-15);
        let graded = TemporalGrid::graded(16, 3.0, 1.5, 2.0).unwrap();
        let m = source_moments(&graded, 0.3).unwrap();
        assert!(m.values.iter().all(|&v| v > 0.0));
        assert!((m.total() - 2f64.powf(0.7) / gamma(1.7)).abs() < 1e-14);
        // first moment on a uniform grid
        let u = TemporalGrid::uniform(4, 1.0).unwrap();
        let m = source_moments(&u, 0.3).unwrap();
        assert!((m.values[0] - 0.125f64.powf(0.7) / gamma(1.7)).abs() < 1e-16);
    }

    #[test]
    fn on_demand_rows_match_stored_bitwise() {
        let grid = TemporalGrid::graded(128, 3.0, 1.2, 1.0).unwrap();
        let dense = CouplingMatrix::assemble_with(&grid, 0.6, StorageMode::Dense).unwrap();
        let lazy = CouplingMatrix::assemble_with(&grid, 0.6, StorageMode::OnDemand).unwrap();
        assert!(dense.is_stored() && !lazy.is_stored());
        for order in [Sweep::Ascending, Sweep::Descending] {
            let mut a = Vec::new();
            let mut b = Vec::new();
            dense.sweep_rows(order, |k, r| a.push((k, r.to_vec())));
            lazy.sweep_rows(order, |k, r| b.push((k, r.to_vec())));
            assert_eq!(a, b);
        }
        for (k, j) in [(0, 0), (100, 3), (255, 255), (255, 0)] {
            assert_eq!(dense.entry(k, j).to_bits(), lazy.entry(k, j).to_bits());
        }
    }

    #[test]
    fn triangle_dump_layout() {
        let grid = TemporalGrid::uniform(2, 1.0).unwrap();
        let b = CouplingMatrix::assemble(&grid, 0.5).unwrap();
        let mut buf = Vec::new();
        b.write_triangle(&mut buf).unwrap();
        assert_eq!(buf.len(), 10 * 8);
        let v = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        assert_eq!(v, b.entry(1, 0));
    }

    mod neumaier {
        #[derive(Default)]
        pub struct Sum {
            s: f64,
            c: f64,
        }
        impl Sum {
            pub fn add(&mut self, x: f64) {
                let t = self.s + x;
                if self.s.abs() >= x.abs() {
                    self.c += (self.s - t) + x;
                } else {
                    self.c += (x - t) + self.s;
                }
                self.s = t;
            }
            pub fn total(&self) -> f64 {
                self.s + self.c
            }
        }
    }
}
