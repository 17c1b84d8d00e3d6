//! Admissible controls, the projection `u = clamp(−p/ν)` and the damped
//! fixed-point optimizer.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem;
use crate::mesh::{merge_sorted, SpatialGrid, TemporalGrid};
use crate::problem::ProblemSpec;
use crate::solver::{DiscreteSystem, SpaceTimeField};

/// `clamp(−v/ν, lo, hi)`.
pub fn clamp_scalar(v: f64, nu: f64, lo: f64, hi: f64) -> f64 {
    (-v / nu).clamp(lo, hi)
}

/// Continuous piecewise-linear function on (0, 1) given by its values at
/// sorted breakpoints; the breakpoints include every spatial node.
#[derive(Debug, Clone, PartialEq)]
struct Piecewise {
    x: Vec<f64>,
    v: Vec<f64>,
}

impl Piecewise {
    fn eval(&self, x: f64) -> f64 {
        let i = self.x.partition_point(|&b| b <= x).clamp(1, self.x.len() - 1);
        let (p, q) = (self.x[i - 1], self.x[i]);
        let s = if q > p { (x - p) / (q - p) } else { 0.0 };
        self.v[i - 1] + (self.v[i] - self.v[i - 1]) * s
    }

    /// Clamp of the P1 function with nodal values `w`, kinks inserted where
    /// `w` crosses a bound.
    fn clamped(grid: &SpatialGrid, w: &[f64], lo: f64, hi: f64) -> Self {
        let n = grid.cells();
        let mut x = Vec::with_capacity(n + 1);
        let mut v = Vec::with_capacity(n + 1);
        for e in 0..n {
            let (p, q) = (grid.node(e), grid.node(e + 1));
            x.push(p);
            v.push(w[e].clamp(lo, hi));
            let mut cuts: Vec<(f64, f64)> = Vec::with_capacity(2);
            for c in [lo, hi] {
                let (a, b) = (w[e] - c, w[e + 1] - c);
                if a * b < 0.0 {
                    let s = a / (a - b);
                    cuts.push((p + s * (q - p), c));
                }
            }
            cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (xc, c) in cuts {
                if xc > *x.last().unwrap() && xc < q {
                    x.push(xc);
                    v.push(c);
                }
            }
        }
        x.push(1.0);
        v.push(w[n].clamp(lo, hi));
        Self { x, v }
    }

    fn combine(&self, a: f64, other: &Piecewise, b: f64) -> Self {
        let x = merge_sorted(&self.x, &other.x, 0.0);
        let v = x.iter().map(|&t| a * self.eval(t) + b * other.eval(t)).collect();
        Self { x, v }
    }

    fn norm_sq(&self) -> f64 {
        self.x
            .windows(2)
            .zip(self.v.windows(2))
            .map(|(x, v)| (x[1] - x[0]) / 3.0 * (v[0] * v[0] + v[0] * v[1] + v[1] * v[1]))
            .sum()
    }

    /// `∫ f φ_i` for the interior hats; two Gauss points per affine piece.
    fn loads(&self, grid: &SpatialGrid, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let n = grid.cells();
        let h = grid.h();
        let g = 0.5 / 3f64.sqrt();
        for (x, v) in self.x.windows(2).zip(self.v.windows(2)) {
            let len = x[1] - x[0];
            if len <= 0.0 {
                continue;
            }
            let e = grid.cell_of(0.5 * (x[0] + x[1]));
            let (p, q) = (grid.node(e), grid.node(e + 1));
            for s in [0.5 - g, 0.5 + g] {
                let xs = x[0] + s * len;
                let f = (v[0] + (v[1] - v[0]) * s) * 0.5 * len;
                if e >= 1 {
                    out[e - 1] += f * (q - xs) / h;
                }
                if e + 1 < n {
                    out[e] += f * (xs - p) / h;
                }
            }
        }
    }
}

/// Control that is piecewise constant in time and continuous piecewise
/// linear in space on each slab, with extra breakpoints where a projected
/// argument meets a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    temporal: Arc<TemporalGrid>,
    spatial: SpatialGrid,
    slabs: Vec<Piecewise>,
}

impl ControlField {
    /// `clamp(w)` for per-slab nodal arguments `w` on all `n + 1` nodes,
    /// slab after slab.
    pub fn from_argument(
        temporal: Arc<TemporalGrid>,
        spatial: SpatialGrid,
        w: &[f64],
        lo: f64,
        hi: f64,
    ) -> Result<Self> {
        let per = spatial.cells() + 1;
        if w.len() != per * temporal.slabs() {
            return Err(Error::GridMismatch(format!("{} argument values, expected {}", w.len(), per * temporal.slabs())));
        }
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::invalid("bounds", format!("need lo < hi, got [{lo}, {hi}]")));
        }
        let slabs = w.chunks(per).map(|c| Piecewise::clamped(&spatial, c, lo, hi)).collect();
        Ok(Self { temporal, spatial, slabs })
    }

    pub fn constant(temporal: Arc<TemporalGrid>, spatial: SpatialGrid, value: f64) -> Self {
        let x = spatial.nodes();
        let v = vec![value; x.len()];
        let slabs = vec![Piecewise { x, v }; temporal.slabs()];
        Self { temporal, spatial, slabs }
    }

    /// `clamp(−P/ν, lo, hi)` with zero boundary values for `P`.
    pub fn project_costate(p: &SpaceTimeField, nu: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::invalid("nu", format!("{nu} must be positive")));
        }
        let n = p.spatial().cells();
        let mut w = Vec::with_capacity((n + 1) * p.slabs());
        for k in 0..p.slabs() {
            w.push(0.0);
            w.extend(p.slab(k).iter().map(|v| -v / nu));
            w.push(0.0);
        }
        Self::from_argument(p.temporal().clone(), *p.spatial(), &w, lo, hi)
    }

    pub fn temporal(&self) -> &Arc<TemporalGrid> {
        &self.temporal
    }

    pub fn spatial(&self) -> &SpatialGrid {
        &self.spatial
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        self.slabs[self.temporal.slab_of(t)].eval(x)
    }

    pub fn slab_value(&self, k: usize, x: f64) -> f64 {
        self.slabs[k].eval(x)
    }

    /// Breakpoints of slab `k` that are not spatial nodes.
    pub fn kinks(&self, k: usize) -> Vec<f64> {
        let n = self.spatial.cells() as f64;
        let g = &self.spatial;
        self.slabs[k].x.iter().copied().filter(|&x| g.node((x * n).round() as usize) != x).collect()
    }

    pub fn breakpoints(&self, k: usize) -> &[f64] {
        &self.slabs[k].x
    }

    /// Values at the `n + 1` spatial nodes of every slab.
    pub fn node_samples(&self) -> Vec<f64> {
        let nodes = self.spatial.nodes();
        self.slabs.iter().flat_map(|s| nodes.iter().map(move |&x| s.eval(x))).collect()
    }

    /// `∫ U_k²` on each slab.
    pub fn slab_norms_sq(&self) -> Vec<f64> {
        self.slabs.iter().map(Piecewise::norm_sq).collect()
    }

    /// `‖U‖²_{L²(Q)}`.
    pub fn norm_sq(&self) -> f64 {
        self.slab_norms_sq().iter().zip(self.temporal.widths()).map(|(a, t)| a * t).sum()
    }

    /// Loads `τ_k ∫ U_k φ_i` feeding the state equation.
    pub fn loads(&self) -> SpaceTimeField {
        let mut out = SpaceTimeField::zeros(self.temporal.clone(), self.spatial);
        for (k, s) in self.slabs.iter().enumerate() {
            let tau = self.temporal.widths()[k];
            let o = out.slab_mut(k);
            s.loads(&self.spatial, o);
            o.iter_mut().for_each(|v| *v *= tau);
        }
        out
    }

    /// `a·self + b·other`; the result keeps every breakpoint of both.
    pub fn combine(&self, a: f64, other: &ControlField, b: f64) -> Result<Self> {
        if self.spatial != other.spatial || self.temporal.nodes() != other.temporal.nodes() {
            return Err(Error::GridMismatch("controls live on different grids".into()));
        }
        let slabs = self.slabs.iter().zip(&other.slabs).map(|(p, q)| p.combine(a, q, b)).collect();
        Ok(Self { temporal: self.temporal.clone(), spatial: self.spatial, slabs })
    }

    /// `(min, max)` over all slabs; exact since the extremes sit at breakpoints.
    pub fn range(&self) -> (f64, f64) {
        self.slabs
            .iter()
            .flat_map(|s| s.v.iter())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Rows `t_start,t_end,x,value` at all breakpoints.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t_start,t_end,x,value")?;
        let t = self.temporal.nodes();
        for (k, s) in self.slabs.iter().enumerate() {
            for (x, v) in s.x.iter().zip(&s.v) {
                writeln!(w, "{},{},{},{}", t[k], t[k + 1], x, v)?;
            }
        }
        Ok(())
    }
}

/// `max |U − clamp(−P/ν)|`, taken over the union of breakpoints of both
/// sides plus the midpoints between them.
pub fn optimality_residual(u: &ControlField, p: &SpaceTimeField, nu: f64, lo: f64, hi: f64) -> Result<f64> {
    let q = ControlField::project_costate(p, nu, lo, hi)?;
    let d = u.combine(1.0, &q, -1.0)?;
    let mut worst = 0.0f64;
    for s in &d.slabs {
        for (i, v) in s.v.iter().enumerate() {
            worst = worst.max(v.abs());
            if i + 1 < s.x.len() {
                worst = worst.max(s.eval(0.5 * (s.x[i] + s.x[i + 1])).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostReport {
    /// `½‖Y − y_d‖²`
    pub tracking: f64,
    /// `ν/2 ‖U‖²`
    pub regularization: f64,
    pub total: f64,
}

/// Discrete problem on fixed grids: operators plus the data loads.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    spec: ProblemSpec,
    system: DiscreteSystem,
    y0_load: Vec<f64>,
    yd_load: Vec<f64>,
    yd_norm_sq: f64,
}

impl DiscreteProblem {
    pub fn new(spec: &ProblemSpec, temporal: Arc<TemporalGrid>, spatial: SpatialGrid) -> Result<Self> {
        spec.validate()?;
        if (temporal.final_time() - spec.final_time).abs() > 1e-14 * spec.final_time {
            return Err(Error::GridMismatch(format!(
                "temporal grid ends at {}, problem at {}",
                temporal.final_time(),
                spec.final_time
            )));
        }
        let system = DiscreteSystem::new(temporal, spatial, spec.alpha)?;
        Ok(Self {
            y0_load: fem::load(&spatial, &spec.y0)?,
            yd_load: fem::load(&spatial, &spec.yd)?,
            yd_norm_sq: spec.yd.norm_sq(),
            spec: spec.clone(),
            system,
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn system(&self) -> &DiscreteSystem {
        &self.system
    }

    pub fn initial_control(&self) -> ControlField {
        ControlField::constant(self.system.temporal().clone(), *self.system.spatial(), self.spec.initial_control_value())
    }

    pub fn state(&self, u: &ControlField) -> Result<SpaceTimeField> {
        let rhs = self.system.state_rhs(Some(&u.loads()), &self.y0_load)?;
        self.system.solve_forward(&rhs)
    }

    pub fn adjoint(&self, y: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.system.solve_adjoint(&self.system.adjoint_rhs(y, &self.yd_load)?)
    }

    pub fn cost_with_state(&self, u: &ControlField, y: &SpaceTimeField) -> CostReport {
        let t = self.system.temporal();
        let m = self.system.mass();
        let mut tracking = 0.0;
        for k in 0..t.slabs() {
            let yk = y.slab(k);
            let cross: f64 = yk.iter().zip(&self.yd_load).map(|(a, b)| a * b).sum();
            tracking += t.widths()[k] * (m.bilinear(yk, yk) - 2.0 * cross + self.yd_norm_sq);
        }
        let tracking = 0.5 * tracking;
        let regularization = 0.5 * self.spec.nu * u.norm_sq();
        CostReport { tracking, regularization, total: tracking + regularization }
    }

    pub fn cost(&self, u: &ControlField) -> Result<CostReport> {
        Ok(self.cost_with_state(u, &self.state(u)?))
    }

    pub fn project(&self, p: &SpaceTimeField) -> Result<ControlField> {
        ControlField::project_costate(p, self.spec.nu, self.spec.u_lo, self.spec.u_hi)
    }

    pub fn optimality_residual(&self, u: &ControlField, p: &SpaceTimeField) -> Result<f64> {
        optimality_residual(u, p, self.spec.nu, self.spec.u_lo, self.spec.u_hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Damping: `U ← (1−θ)U + θ clamp(−P/ν)`.
    pub theta: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 200, theta: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub control: ControlField,
    pub state: SpaceTimeField,
    pub adjoint: SpaceTimeField,
    pub iterations: usize,
    /// Node-sample increment of every iteration.
    pub increments: Vec<f64>,
    /// `J` of the initial control and of every iterate.
    pub costs: Vec<f64>,
}

impl OcpSolution {
    pub fn final_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Fixed-point iteration `U ← (1−θ)U + θ clamp(−P(U)/ν)` from the
/// initial control, stopped on the l² norm of the node-sample increment.
pub fn fixed_point_solve(problem: &DiscreteProblem, opts: &FixedPointOptions) -> Result<OcpSolution> {
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return Err(Error::invalid("theta", format!("{} not in (0, 1]", opts.theta)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tol", format!("{} must be positive", opts.tol)));
    }
    let mut u = problem.initial_control();
    let mut samples = u.node_samples();
    let mut increments = Vec::new();
    let mut costs = Vec::new();
    for it in 1..=opts.max_iter {
        let y = problem.state(&u)?;
        costs.push(problem.cost_with_state(&u, &y).total);
        let p = problem.adjoint(&y)?;
        let proj = problem.project(&p)?;
        let next = if opts.theta == 1.0 { proj } else { u.combine(1.0 - opts.theta, &proj, opts.theta)? };
        let next_samples = next.node_samples();
        let inc = l2_diff(&next_samples, &samples);
        increments.push(inc);
        u = next;
        samples = next_samples;
        if inc < opts.tol {
            let state = problem.state(&u)?;
            let adjoint = problem.adjoint(&state)?;
            costs.push(problem.cost_with_state(&u, &state).total);
            return Ok(OcpSolution { control: u, state, adjoint, iterations: it, increments, costs });
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, increment: increments.last().copied().unwrap_or(f64::NAN) })
}
