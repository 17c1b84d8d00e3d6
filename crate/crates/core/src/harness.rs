//! Error functionals and convergence studies.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::control::{fixed_point_solve, ControlField, DiscreteProblem, FixedPointOptions, OcpSolution};
use crate::error::{Error, Result};
use crate::fem;
use crate::mesh::{default_sigmas, merge_breakpoints, merge_sorted, SpatialGrid, TemporalGrid};
use crate::mittag::SpectralSolution;
use crate::problem::ProblemSpec;
use crate::quad;
use crate::solver::SpaceTimeField;

/// A function that is piecewise constant in time and continuous piecewise
/// linear in space between known breakpoints.
pub trait SpaceTimeFunction {
    fn temporal_nodes(&self) -> &[f64];
    fn spatial_breaks(&self, slab: usize) -> Cow<'_, [f64]>;
    fn eval_in_slab(&self, slab: usize, x: f64) -> f64;
}

impl SpaceTimeFunction for SpaceTimeField {
    fn temporal_nodes(&self) -> &[f64] {
        self.temporal().nodes()
    }

    fn spatial_breaks(&self, _slab: usize) -> Cow<'_, [f64]> {
        Cow::Owned(self.spatial().nodes())
    }

    fn eval_in_slab(&self, slab: usize, x: f64) -> f64 {
        fem::eval_interior(self.spatial(), self.slab(slab), x)
    }
}

impl SpaceTimeFunction for ControlField {
    fn temporal_nodes(&self) -> &[f64] {
        self.temporal().nodes()
    }

    fn spatial_breaks(&self, slab: usize) -> Cow<'_, [f64]> {
        Cow::Borrowed(self.breakpoints(slab))
    }

    fn eval_in_slab(&self, slab: usize, x: f64) -> f64 {
        self.slab_value(slab, x)
    }
}

fn slab_containing(nodes: &[f64], mid: f64) -> usize {
    nodes.partition_point(|&t| t <= mid).clamp(1, nodes.len() - 1) - 1
}

/// Exact `‖a − b‖_{L²(0,T; L²(0,1))}` on the common refinement of both
/// space-time partitions.
pub fn error_l2l2(a: &dyn SpaceTimeFunction, b: &dyn SpaceTimeFunction) -> Result<f64> {
    let (ta, tb) = (a.temporal_nodes(), b.temporal_nodes());
    let times = merge_breakpoints(ta, tb)?;
    let mut total = 0.0;
    for w in times.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (ka, kb) = (slab_containing(ta, mid), slab_containing(tb, mid));
        let xs = merge_sorted(&a.spatial_breaks(ka), &b.spatial_breaks(kb), 1e-15);
        let sq = fem::piecewise_affine_l2_sq(&xs, |x| a.eval_in_slab(ka, x), |x| b.eval_in_slab(kb, x));
        total += (w[1] - w[0]) * sq;
    }
    Ok(total.max(0.0).sqrt())
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// `‖Y − y‖_{L²(0,T; L²(0,1))}` against a closed-form spectral solution.
///
/// Each slab value is split into its mass-orthogonal projection onto the
/// discrete sine modes plus a remainder, so that the time integrals only see
/// the small mode-wise differences.
pub fn error_against_spectral(exact: &SpectralSolution, y: &SpaceTimeField) -> Result<f64> {
    let grid = *y.spatial();
    let mass = fem::assemble_mass(&grid);
    let modes = &exact.modes;
    let j = modes.len();
    let loads: Vec<Vec<f64>> = modes
        .iter()
        .map(|m| {
            let k = m.wavenumber as f64;
            fem::load_smooth(&grid, |x| std::f64::consts::SQRT_2 * (k * std::f64::consts::PI * x).sin())
        })
        .collect();
    let proj: Vec<Vec<f64>> = loads.iter().map(|l| mass.solve(l)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let gp: Vec<Vec<f64>> = (0..j).map(|a| (0..j).map(|b| dot(&loads[a], &proj[b])).collect()).collect();
    let gperp: Vec<Vec<f64>> =
        (0..j).map(|a| (0..j).map(|b| if a == b { 1.0 - gp[a][b] } else { -gp[a][b] }).collect()).collect();
    let t = y.temporal();
    let alpha = exact.alpha;
    let mut total = 0.0;
    for k in 0..t.slabs() {
        let yk = y.slab(k);
        let rhs: Vec<f64> = loads.iter().map(|l| dot(yk, l)).collect();
        let c = solve_dense(gp.clone(), rhs.clone());
        let cgc = dot(&c, &rhs);
        let rem = (mass.bilinear(yk, yk) - cgc).max(0.0);
        let mut failure = None;
        let mut integrand = |s: f64| -> f64 {
            let e: Vec<f64> = (0..j)
                .map(|i| match exact.time_factor(i, s) {
                    Ok(v) => v,
                    Err(err) => {
                        failure.get_or_insert(err);
                        0.0
                    }
                })
                .collect();
            let d: Vec<f64> = c.iter().zip(&e).map(|(a, b)| a - b).collect();
            let mut v = 0.0;
            for a in 0..j {
                for b in 0..j {
                    v += d[a] * gp[a][b] * d[b] + e[a] * gperp[a][b] * e[b];
                }
            }
            v
        };
        let (t0, t1) = (t.nodes()[k], t.nodes()[k + 1]);
        let tau = t1 - t0;
        let tol = 1e-16 * tau;
        let integral = if t0 == 0.0 {
            // t = t1·u^{1/α} removes the t^α singularity of the time factors
            let q = 1.0 / alpha;
            quad::adaptive(|u| integrand(t1 * u.powf(q)) * t1 * q * u.powf(q - 1.0), 0.0, 1.0, tol, 2000)?
        } else {
            quad::adaptive(&mut integrand, t0, t1, tol, 2000)?
        };
        if let Some(err) = failure {
            return Err(err);
        }
        total += integral + tau * rem;
    }
    Ok(total.max(0.0).sqrt())
}

/// `log(e1/e2) / log(p2/p1)`.
pub fn estimate_order(e1: f64, e2: f64, p1: f64, p2: f64) -> f64 {
    (e1 / e2).ln() / (p2 / p1).ln()
}

/// How the temporal grids of a study are built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grading {
    /// The default exponents for the problem's `α` and `r`.
    Default,
    Custom { sigma1: f64, sigma2: f64 },
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ProblemSpec,
    pub grading: Grading,
    pub optimizer: FixedPointOptions,
}

impl ExperimentConfig {
    pub fn new(spec: ProblemSpec) -> Self {
        Self { spec, grading: Grading::Default, optimizer: FixedPointOptions::default() }
    }

    pub fn sigmas(&self) -> Result<(f64, f64)> {
        match self.grading {
            Grading::Default => default_sigmas(self.spec.alpha, self.spec.r),
            Grading::Custom { sigma1, sigma2 } => Ok((sigma1, sigma2)),
            Grading::Uniform => Ok((1.0, 1.0)),
        }
    }

    /// Grid with `M = 2^m` steps per half interval.
    pub fn temporal_grid(&self, m: u32) -> Result<Arc<TemporalGrid>> {
        let (s1, s2) = self.sigmas()?;
        Ok(Arc::new(TemporalGrid::graded(half_steps(m)?, s1, s2, self.spec.final_time)?))
    }

    /// Graded grid with default exponents, used for reference solutions.
    pub fn reference_grid(&self, m: u32) -> Result<Arc<TemporalGrid>> {
        let (s1, s2) = default_sigmas(self.spec.alpha, self.spec.r)?;
        Ok(Arc::new(TemporalGrid::graded(half_steps(m)?, s1, s2, self.spec.final_time)?))
    }

    pub fn solve(&self, temporal: Arc<TemporalGrid>, cells: usize) -> Result<OcpSolution> {
        let problem = DiscreteProblem::new(&self.spec, temporal, SpatialGrid::uniform(cells)?)?;
        fixed_point_solve(&problem, &self.optimizer)
    }
}

fn half_steps(m: u32) -> Result<usize> {
    if m > 24 {
        return Err(Error::invalid("m", format!("2^{m} steps is beyond reach")));
    }
    Ok(1usize << m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    /// Refinement in `n` at fixed `m`.
    Spatial,
    /// Refinement in `m` at fixed `n`.
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    /// `n` for spatial studies, `m` for temporal ones.
    pub param: usize,
    pub err_y: f64,
    pub err_p: f64,
    pub err_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub kind: StudyKind,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowOrders {
    pub y: Option<f64>,
    pub p: Option<f64>,
    pub u: Option<f64>,
}

impl ConvergenceTable {
    /// Refinement measure of a row parameter: `n`, or `M = 2^m`.
    pub fn scale(&self, param: usize) -> f64 {
        match self.kind {
            StudyKind::Spatial => param as f64,
            StudyKind::Temporal => 2f64.powi(param as i32),
        }
    }

    pub fn orders(&self, i: usize) -> RowOrders {
        if i == 0 || i >= self.rows.len() {
            return RowOrders { y: None, p: None, u: None };
        }
        let (a, b) = (&self.rows[i - 1], &self.rows[i]);
        let (p1, p2) = (self.scale(a.param), self.scale(b.param));
        RowOrders {
            y: Some(estimate_order(a.err_y, b.err_y, p1, p2)),
            p: Some(estimate_order(a.err_p, b.err_p, p1, p2)),
            u: Some(estimate_order(a.err_u, b.err_u, p1, p2)),
        }
    }

    pub fn last_orders(&self) -> RowOrders {
        self.orders(self.rows.len().saturating_sub(1))
    }

    pub fn param_name(&self) -> &'static str {
        match self.kind {
            StudyKind::Spatial => "n",
            StudyKind::Temporal => "m",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
}

pub const CSV_HEADER: &str = "param,errY,ordY,errP,ordP,errU,ordU";

/// Six significant digits, fixed notation for moderate magnitudes.
pub fn format_sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e6).contains(&a) {
        let digits = if a == 0.0 { 5 } else { (5 - a.log10().floor() as i32).max(0) as usize };
        format!("{v:.digits$}")
    } else {
        format!("{v:.5e}")
    }
}

pub fn emit_table(table: &ConvergenceTable, format: TableFormat) -> String {
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for (i, r) in table.rows.iter().enumerate() {
                let o = table.orders(i);
                let f = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{},{},{},{},{}", r.param, r.err_y, f(o.y), r.err_p, f(o.p), r.err_u, f(o.u));
            }
        }
        TableFormat::Text => {
            let _ = writeln!(
                out,
                "{:>5} {:>12} {:>9} {:>12} {:>9} {:>12} {:>9}",
                table.param_name(),
                "errY",
                "ordY",
                "errP",
                "ordP",
                "errU",
                "ordU"
            );
            for (i, r) in table.rows.iter().enumerate() {
                let o = table.orders(i);
                let f = |v: Option<f64>| v.map(format_sig6).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    out,
                    "{:>5} {:>12} {:>9} {:>12} {:>9} {:>12} {:>9}",
                    r.param,
                    format_sig6(r.err_y),
                    f(o.y),
                    format_sig6(r.err_p),
                    f(o.p),
                    format_sig6(r.err_u),
                    f(o.u)
                );
            }
        }
    }
    out
}

/// Reads back the CSV produced by [`emit_table`]; orders are recomputed.
pub fn parse_table_csv(text: &str, kind: StudyKind) -> Result<ConvergenceTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: format!("expected header `{CSV_HEADER}`") }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(Error::Parse { line: i + 1, message: format!("{} columns, expected 7", cols.len()) });
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, message: format!("`{s}`: {e}") });
        let param = cols[0].parse::<usize>().map_err(|e| Error::Parse { line: i + 1, message: format!("`{}`: {e}", cols[0]) })?;
        rows.push(TableRow { param, err_y: num(cols[1])?, err_p: num(cols[3])?, err_u: num(cols[5])? });
    }
    Ok(ConvergenceTable { kind, rows })
}

fn row_errors(param: usize, sol: &OcpSolution, reference: &OcpSolution) -> Result<TableRow> {
    Ok(TableRow {
        param,
        err_y: error_l2l2(&sol.state, &reference.state)?,
        err_p: error_l2l2(&sol.adjoint, &reference.adjoint)?,
        err_u: error_l2l2(&sol.control, &reference.control)?,
    })
}

/// Errors against a fine spatial reference on the fixed temporal grid `2^m_fix`.
pub fn run_spatial_study(config: &ExperimentConfig, m_fix: u32, n_values: &[usize], n_ref: usize) -> Result<ConvergenceTable> {
    if let Some(&n) = n_values.iter().find(|&&n| n >= n_ref) {
        return Err(Error::invalid("n_ref", format!("reference {n_ref} is not finer than n = {n}")));
    }
    let temporal = config.temporal_grid(m_fix)?;
    let reference = config.solve(temporal.clone(), n_ref)?;
    let rows = n_values
        .iter()
        .map(|&n| row_errors(n, &config.solve(temporal.clone(), n)?, &reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { kind: StudyKind::Spatial, rows })
}

/// Errors against a fine temporal reference at fixed `n`. The reference is
/// always computed on the default graded grid.
pub fn run_temporal_study(config: &ExperimentConfig, n_fix: usize, m_values: &[u32], m_ref: u32) -> Result<ConvergenceTable> {
    if let Some(&m) = m_values.iter().find(|&&m| m >= m_ref) {
        return Err(Error::invalid("m_ref", format!("reference {m_ref} is not finer than m = {m}")));
    }
    let reference = config.solve(config.reference_grid(m_ref)?, n_fix)?;
    run_temporal_study_against(config, n_fix, m_values, &reference)
}

/// Temporal study against a precomputed reference solution.
pub fn run_temporal_study_against(
    config: &ExperimentConfig,
    n_fix: usize,
    m_values: &[u32],
    reference: &OcpSolution,
) -> Result<ConvergenceTable> {
    let rows = m_values
        .iter()
        .map(|&m| row_errors(m as usize, &config.solve(config.temporal_grid(m)?, n_fix)?, reference))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable { kind: StudyKind::Temporal, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::default_experiment_spec;
    use crate::solver::DiscreteSystem;

    #[test]
    fn order_formula() {
        assert!((estimate_order(1.0, 0.25, 10.0, 20.0) - 2.0).abs() < 1e-15);
        assert!((estimate_order(0.1, 0.05, 64.0, 128.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(1.94123456), "1.94123");
        assert_eq!(format_sig6(0.00123456789), "0.00123457");
        assert_eq!(format_sig6(1.5e-7), "1.50000e-7");
        assert_eq!(format_sig6(-0.5), "-0.500000");
        assert_eq!(format_sig6(0.0), "0.00000");
    }

    #[test]
    fn l2l2_error_of_constant_offsets() {
        let t1 = Arc::new(TemporalGrid::graded(2, 2.0, 1.0, 1.0).unwrap());
        let t2 = Arc::new(TemporalGrid::uniform(3, 1.0).unwrap());
        let (x1, x2) = (SpatialGrid::uniform(4).unwrap(), SpatialGrid::uniform(6).unwrap());
        let a = SpaceTimeField::from_fn(t1.clone(), x1, |_, x| x * (1.0 - x));
        let b = SpaceTimeField::from_fn(t2, x2, |_, x| x * (1.0 - x));
        let e = error_l2l2(&a, &a).unwrap();
        assert_eq!(e, 0.0);
        // same function sampled on different grids: only the interpolation differs
        let e = error_l2l2(&a, &b).unwrap();
        assert!(e > 0.0 && e < 0.02);
        // time-dependent amplitude: slab k holds k + 1 times a hat
        let c = SpaceTimeField::from_fn(t1.clone(), x1, |k, _| (k + 1) as f64);
        let z = SpaceTimeField::zeros(t1.clone(), x1);
        // value 1 on [0.25, 0.75], linear to 0 at the ends
        let plateau = 0.5 + 2.0 * 0.25 / 3.0;
        let want: f64 = (0..4).map(|k| t1.widths()[k] * ((k + 1) as f64).powi(2) * plateau).sum::<f64>().sqrt();
        assert!((error_l2l2(&c, &z).unwrap() - want).abs() < 1e-14);
        let t3 = Arc::new(TemporalGrid::uniform(3, 2.0).unwrap());
        assert!(error_l2l2(&a, &SpaceTimeField::zeros(t3, x1)).is_err());
    }

    #[test]
    fn l2l2_error_against_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let t1 = Arc::new(TemporalGrid::graded(3, 1.7, 1.2, 1.0).unwrap());
        let t2 = Arc::new(TemporalGrid::uniform(2, 1.0).unwrap());
        let a = SpaceTimeField::from_fn(t1, SpatialGrid::uniform(5).unwrap(), |_, _| rng.gen_range(-1.0..1.0));
        let b = SpaceTimeField::from_fn(t2, SpatialGrid::uniform(7).unwrap(), |_, _| rng.gen_range(-1.0..1.0));
        let exact = error_l2l2(&a, &b).unwrap();
        let (nt, nx) = (3000, 3000);
        let mut s = 0.0;
        for i in 0..nt {
            let t = (i as f64 + 0.5) / nt as f64;
            for j in 0..nx {
                let x = (j as f64 + 0.5) / nx as f64;
                s += (a.eval(t, x) - b.eval(t, x)).powi(2);
            }
        }
        let brute = (s / (nt * nx) as f64).sqrt();
        assert!((exact - brute).abs() < 1e-4 * exact, "{exact} vs {brute}");
    }

    #[test]
    fn spectral_error_vanishes_for_the_discrete_mode_limit() {
        // a discrete solution equal to the projected exact mode on each slab
        // leaves only the projection and time-averaging errors
        let alpha = 0.5;
        let exact = SpectralSolution::homogeneous(alpha, &[(1, 1.0)]).unwrap();
        let t = Arc::new(TemporalGrid::graded(32, 3.0, 1.0, 1.0).unwrap());
        let x = SpatialGrid::uniform(64).unwrap();
        let sys = DiscreteSystem::new(t.clone(), x, alpha).unwrap();
        let load = fem::load(&x, &crate::problem::FunctionDescriptor::SineCombo(vec![(1, 1.0)])).unwrap();
        let y = sys.solve_forward(&sys.state_rhs(None, &load).unwrap()).unwrap();
        let e = error_against_spectral(&exact, &y).unwrap();
        // independent check: brute tensor midpoint rule on the true solution
        let (nt, nx) = (4000, 200);
        let mut s = 0.0;
        for i in 0..nt {
            // cluster points near t = 0 with t = u², matching the weight
            let u = (i as f64 + 0.5) / nt as f64;
            let tt = u * u;
            let jac = 2.0 * u / nt as f64;
            let amp = exact.time_factor(0, tt).unwrap() * std::f64::consts::SQRT_2;
            for j in 0..nx {
                let xx = (j as f64 + 0.5) / nx as f64;
                let d = y.eval(tt, xx) - amp * (std::f64::consts::PI * xx).sin();
                s += d * d * jac / nx as f64;
            }
        }
        let brute = s.sqrt();
        assert!(e > 0.0);
        assert!((e - brute).abs() < 0.02 * e, "{e} vs {brute}");
    }

    #[test]
    fn spectral_error_of_zero_field_is_the_solution_norm() {
        let exact = SpectralSolution::homogeneous(0.4, &[(1, 1.0), (3, 0.5)]).unwrap();
        let t = Arc::new(TemporalGrid::graded(4, 2.0, 1.0, 1.0).unwrap());
        let z = SpaceTimeField::zeros(t, SpatialGrid::uniform(8).unwrap());
        let e = error_against_spectral(&exact, &z).unwrap();
        let want = quad::adaptive(
            |u: f64| {
                let s = u.powf(1.0 / 0.4);
                let a = exact.time_factor(0, s).unwrap();
                let b = exact.time_factor(1, s).unwrap();
                (a * a + b * b) * s / u / 0.4
            },
            0.0,
            1.0,
            1e-15,
            4000,
        )
        .unwrap()
        .sqrt();
        assert!((e - want).abs() < 1e-12, "{e} vs {want}");
    }

    #[test]
    fn table_csv_round_trip() {
        let table = ConvergenceTable {
            kind: StudyKind::Temporal,
            rows: vec![
                TableRow { param: 6, err_y: 0.1, err_p: 0.2, err_u: 1.0 / 3.0 },
                TableRow { param: 7, err_y: 0.05, err_p: 0.1, err_u: 1.0 / 7.0 },
            ],
        };
        let csv = emit_table(&table, TableFormat::Csv);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("6,0.1,,0.2,,0.3333333333333333,"));
        assert!(lines.next().unwrap().starts_with("7,0.05,1,0.1,1,"));
        let back = parse_table_csv(&csv, StudyKind::Temporal).unwrap();
        assert_eq!(back, table);
        assert!(parse_table_csv("x,y\n", StudyKind::Spatial).is_err());
        assert!(parse_table_csv(&format!("{CSV_HEADER}\n1,2,3\n"), StudyKind::Spatial).is_err());
        let text = emit_table(&table, TableFormat::Text);
        assert!(text.lines().nth(1).unwrap().contains(" - "));
        assert_eq!(table.last_orders().y, Some(1.0));
    }

    #[test]
    fn spatial_study_is_deterministic_and_second_order() {
        let cfg = ExperimentConfig::new(default_experiment_spec(0.6, 0.0).unwrap());
        let a = run_spatial_study(&cfg, 4, &[8, 16], 64).unwrap();
        let b = run_spatial_study(&cfg, 4, &[8, 16], 64).unwrap();
        assert_eq!(a, b);
        assert_eq!(emit_table(&a, TableFormat::Csv), emit_table(&b, TableFormat::Csv));
        let o = a.last_orders();
        assert!(o.y.unwrap() > 1.0 && o.p.unwrap() > 1.5, "{o:?}");
        assert!(run_spatial_study(&cfg, 4, &[8, 64], 64).is_err());
    }

    #[test]
    fn temporal_study_reference_and_grading() {
        let mut cfg = ExperimentConfig::new(default_experiment_spec(0.8, 0.0).unwrap());
        let a = run_temporal_study(&cfg, 16, &[2, 3], 6).unwrap();
        assert!(a.rows.iter().all(|r| r.err_y > 0.0 && r.err_p > 0.0 && r.err_u > 0.0));
        assert!(a.rows[1].err_y < a.rows[0].err_y);
        cfg.grading = Grading::Uniform;
        assert_eq!(cfg.sigmas().unwrap(), (1.0, 1.0));
        let b = run_temporal_study(&cfg, 16, &[2, 3], 6).unwrap();
        assert_ne!(a, b);
        assert!(run_temporal_study(&cfg, 16, &[6], 6).is_err());
    }
}
