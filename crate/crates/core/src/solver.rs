//! DG(0)-in-time, P1-in-space solver for the fractional state and adjoint
//! equations.
//!
//! On slab `k` the state solves
//!
//! ```text
//! (B_kk M + τ_k K) Y_k = F_k − M Σ_{j<k} B_kj Y_j
//! ```
//!
//! and the adjoint solves the transposed system backwards in time.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{self, TriDiagonal};
use crate::fracops::{source_moments, CouplingMatrix, KernelMoments, StorageMode, Sweep};
use crate::mesh::{SpatialGrid, TemporalGrid};

/// Piecewise constant in time, piecewise linear in space. Only interior
/// nodal values are stored, slab after slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    temporal: Arc<TemporalGrid>,
    spatial: SpatialGrid,
    data: Vec<f64>,
}

impl SpaceTimeField {
    pub fn zeros(temporal: Arc<TemporalGrid>, spatial: SpatialGrid) -> Self {
        let len = temporal.slabs() * spatial.interior_dofs();
        Self { temporal, spatial, data: vec![0.0; len] }
    }

    pub fn from_data(temporal: Arc<TemporalGrid>, spatial: SpatialGrid, data: Vec<f64>) -> Result<Self> {
        let want = temporal.slabs() * spatial.interior_dofs();
        if data.len() != want {
            return Err(Error::GridMismatch(format!("{} values, expected {want}", data.len())));
        }
        Ok(Self { temporal, spatial, data })
    }

    /// Nodal values `f(k, x_i)` on slab `k`.
    pub fn from_fn(temporal: Arc<TemporalGrid>, spatial: SpatialGrid, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        let mut out = Self::zeros(temporal, spatial);
        for k in 0..out.slabs() {
            for i in 0..out.dofs() {
                let x = spatial.node(i + 1);
                out.slab_mut(k)[i] = f(k, x);
            }
        }
        out
    }

    pub fn temporal(&self) -> &Arc<TemporalGrid> {
        &self.temporal
    }

    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn slabs(&self) -> usize {
        self.temporal.slabs()
    }

    pub fn dofs(&self) -> usize {
        self.spatial.interior_dofs()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn slab(&self, k: usize) -> &[f64] {
        let n = self.dofs();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slab_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.dofs();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let k = self.temporal.slab_of(t);
        fem::eval_interior(&self.spatial, self.slab(k), x)
    }

    /// `a·self + b·other` on the same grids.
    pub fn combine(&self, a: f64, other: &SpaceTimeField, b: f64) -> Result<SpaceTimeField> {
        self.same_grids(other)?;
        let data = self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { temporal: self.temporal.clone(), spatial: self.spatial, data })
    }

    pub(crate) fn same_grids(&self, other: &SpaceTimeField) -> Result<()> {
        if self.spatial != other.spatial || self.temporal.nodes() != other.temporal.nodes() {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Rows `t_start,t_end,x,value`, boundary nodes included.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t_start,t_end,x,value")?;
        let t = self.temporal.nodes();
        let n = self.spatial.cells();
        for k in 0..self.slabs() {
            let s = self.slab(k);
            for i in 0..=n {
                let v = if i == 0 || i == n { 0.0 } else { s[i - 1] };
                writeln!(w, "{},{},{},{}", t[k], t[k + 1], self.spatial.node(i), v)?;
            }
        }
        Ok(())
    }
}

/// All discrete operators for one space-time grid pair.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    temporal: Arc<TemporalGrid>,
    spatial: SpatialGrid,
    coupling: CouplingMatrix,
    moments: KernelMoments,
    mass: TriDiagonal,
    stiffness: TriDiagonal,
}

impl DiscreteSystem {
    pub fn new(temporal: Arc<TemporalGrid>, spatial: SpatialGrid, alpha: f64) -> Result<Self> {
        Self::with_storage(temporal, spatial, alpha, StorageMode::Auto)
    }

    pub fn with_storage(temporal: Arc<TemporalGrid>, spatial: SpatialGrid, alpha: f64, mode: StorageMode) -> Result<Self> {
        let coupling = CouplingMatrix::assemble_with(&temporal, alpha, mode)?;
        let moments = source_moments(&temporal, alpha)?;
        Ok(Self {
            mass: fem::assemble_mass(&spatial),
            stiffness: fem::assemble_stiffness(&spatial),
            temporal,
            spatial,
            coupling,
            moments,
        })
    }

    pub fn temporal(&self) -> &Arc<TemporalGrid> {
        &self.temporal
    }

    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn moments(&self) -> &KernelMoments {
        &self.moments
    }

    pub fn mass(&self) -> &TriDiagonal {
        &self.mass
    }

    pub fn stiffness(&self) -> &TriDiagonal {
        &self.stiffness
    }

    pub fn zeros(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.temporal.clone(), self.spatial)
    }

    fn check(&self, f: &SpaceTimeField) -> Result<()> {
        if f.spatial != self.spatial || f.temporal.nodes() != self.temporal.nodes() {
            return Err(Error::GridMismatch("field does not match the system grids".into()));
        }
        Ok(())
    }

    fn slab_operator(&self, k: usize, diag_coupling: f64) -> TriDiagonal {
        self.mass.combine(diag_coupling, &self.stiffness, self.temporal.widths()[k])
    }

    /// Forward sweep with right-hand side `rhs` (one load vector per slab).
    pub fn solve_forward(&self, rhs: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(rhs)?;
        let n = self.spatial.interior_dofs();
        let mut y = self.zeros();
        let mut hist = vec![0.0; n];
        let mut mh = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.coupling.sweep_rows(Sweep::Ascending, |k, row| {
            hist.iter_mut().for_each(|v| *v = 0.0);
            let (done, rest) = y.data.split_at_mut(k * n);
            for (j, &b) in row[..k].iter().enumerate() {
                let yj = &done[j * n..(j + 1) * n];
                for (h, v) in hist.iter_mut().zip(yj) {
                    *h += b * v;
                }
            }
            self.mass.apply_into(&hist, &mut mh);
            let yk = &mut rest[..n];
            for ((o, r), m) in yk.iter_mut().zip(rhs.slab(k)).zip(&mh) {
                *o = r - m;
            }
            self.slab_operator(k, row[k]).solve_in_place(yk, &mut scratch);
        });
        Ok(y)
    }

    /// Backward sweep for the transposed system.
    pub fn solve_adjoint(&self, rhs: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(rhs)?;
        let n = self.spatial.interior_dofs();
        let mut p = self.zeros();
        // acc_i = Σ_{k>i} B_ki P_k
        let mut acc = vec![0.0; self.temporal.slabs() * n];
        let mut mh = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.coupling.sweep_rows(Sweep::Descending, |k, row| {
            let pk = p.slab_mut(k);
            self.mass.apply_into(&acc[k * n..(k + 1) * n], &mut mh);
            for ((o, r), m) in pk.iter_mut().zip(rhs.slab(k)).zip(&mh) {
                *o = r - m;
            }
            self.slab_operator(k, row[k]).solve_in_place(pk, &mut scratch);
            let pk = p.slab(k);
            for (i, &b) in row[..k].iter().enumerate() {
                for (a, v) in acc[i * n..(i + 1) * n].iter_mut().zip(pk) {
                    *a += b * v;
                }
            }
        });
        Ok(p)
    }

    /// Action of the space-time operator: slab `k` gets
    /// `Σ_{j≤k} B_kj M Y_j + τ_k K Y_k`.
    pub fn apply_forward(&self, y: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(y)?;
        let n = self.spatial.interior_dofs();
        let mut out = self.zeros();
        let mut hist = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        self.coupling.sweep_rows(Sweep::Ascending, |k, row| {
            hist.iter_mut().for_each(|v| *v = 0.0);
            for (j, &b) in row.iter().enumerate() {
                for (h, v) in hist.iter_mut().zip(y.slab(j)) {
                    *h += b * v;
                }
            }
            let o = out.slab_mut(k);
            self.mass.apply_into(&hist, o);
            self.stiffness.apply_into(y.slab(k), &mut tmp);
            let tau = self.temporal.widths()[k];
            for (a, b) in o.iter_mut().zip(&tmp) {
                *a += tau * b;
            }
        });
        Ok(out)
    }

    /// Action of the transposed operator.
    pub fn apply_adjoint(&self, p: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(p)?;
        let n = self.spatial.interior_dofs();
        let s = self.temporal.slabs();
        let mut acc = vec![0.0; s * n];
        self.coupling.sweep_rows(Sweep::Ascending, |k, row| {
            for (j, &b) in row.iter().enumerate() {
                for (a, v) in acc[j * n..(j + 1) * n].iter_mut().zip(p.slab(k)) {
                    *a += b * v;
                }
            }
        });
        let mut out = self.zeros();
        let mut tmp = vec![0.0; n];
        for k in 0..s {
            let o = out.slab_mut(k);
            self.mass.apply_into(&acc[k * n..(k + 1) * n], o);
            self.stiffness.apply_into(p.slab(k), &mut tmp);
            let tau = self.temporal.widths()[k];
            for (a, b) in o.iter_mut().zip(&tmp) {
                *a += tau * b;
            }
        }
        Ok(out)
    }

    /// State right-hand side `τ_k·(control loads)_k + m_k·(y0 loads)`.
    /// `control_loads` already carries the slab widths.
    pub fn state_rhs(&self, control_loads: Option<&SpaceTimeField>, y0_load: &[f64]) -> Result<SpaceTimeField> {
        if y0_load.len() != self.spatial.interior_dofs() {
            return Err(Error::GridMismatch("initial load has the wrong length".into()));
        }
        let mut out = match control_loads {
            Some(c) => {
                self.check(c)?;
                c.clone()
            }
            None => self.zeros(),
        };
        for k in 0..self.temporal.slabs() {
            let m = self.moments.values[k];
            for (o, l) in out.slab_mut(k).iter_mut().zip(y0_load) {
                *o += m * l;
            }
        }
        Ok(out)
    }

    /// Adjoint right-hand side `τ_k (M Y_k − (y_d loads))` for a
    /// time-constant target.
    pub fn adjoint_rhs(&self, y: &SpaceTimeField, yd_load: &[f64]) -> Result<SpaceTimeField> {
        self.check(y)?;
        if yd_load.len() != self.spatial.interior_dofs() {
            return Err(Error::GridMismatch("target load has the wrong length".into()));
        }
        let mut out = self.zeros();
        for k in 0..self.temporal.slabs() {
            let tau = self.temporal.widths()[k];
            let o = out.slab_mut(k);
            self.mass.apply_into(y.slab(k), o);
            for (a, l) in o.iter_mut().zip(yd_load) {
                *a = tau * (*a - l);
            }
        }
        Ok(out)
    }

    /// Loads of a discrete field used as a source: `τ_k M g_k`.
    pub fn field_source(&self, g: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.check(g)?;
        let mut out = self.zeros();
        for k in 0..self.temporal.slabs() {
            let tau = self.temporal.widths()[k];
            let o = out.slab_mut(k);
            self.mass.apply_into(g.slab(k), o);
            o.iter_mut().for_each(|v| *v *= tau);
        }
        Ok(out)
    }

    /// `L²(0,T; L²)` inner product `Σ τ_k g_kᵀ M h_k`.
    pub fn inner(&self, g: &SpaceTimeField, h: &SpaceTimeField) -> Result<f64> {
        self.check(g)?;
        self.check(h)?;
        Ok((0..self.temporal.slabs())
            .map(|k| self.temporal.widths()[k] * self.mass.bilinear(g.slab(k), h.slab(k)))
            .sum())
    }

    /// Relative defect of `(S g, h) = (g, S* h)`, where `S` and `S*` are the
    /// discrete solution operators with sources `g` and `h`. The defect is
    /// scaled by the Cauchy–Schwarz bound of both sides.
    pub fn check_adjoint_identity(&self, g: &SpaceTimeField, h: &SpaceTimeField) -> Result<f64> {
        let sg = self.solve_forward(&self.field_source(g)?)?;
        let sh = self.solve_adjoint(&self.field_source(h)?)?;
        let lhs = self.inner(&sg, h)?;
        let rhs = self.inner(g, &sh)?;
        let norm = |f: &SpaceTimeField| self.inner(f, f).map(|v| v.max(0.0).sqrt());
        let scale = (norm(&sg)? * norm(h)?).max(norm(g)? * norm(&sh)?);
        if scale == 0.0 {
            return Ok((lhs - rhs).abs());
        }
        Ok((lhs - rhs).abs() / scale)
    }
}
