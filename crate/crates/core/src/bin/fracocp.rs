use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fracocp::harness::{format_sig6, run_spatial_study, run_temporal_study};
use fracocp::{
    default_experiment_spec, emit_table, fixed_point_solve, ControlField, DiscreteProblem, ExperimentConfig,
    FixedPointOptions, Grading, ProblemSpec, SpatialGrid, TableFormat, TemporalGrid,
};

#[derive(Parser)]
#[command(name = "fracocp", version, about = "Optimal control of time-fractional diffusion on (0, 1)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the state equation for the initial control.
    Forward {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        m: u32,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Solve the discrete optimal control problem.
    Ocp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opt: Optimizer,
        #[arg(long, default_value_t = 8)]
        m: u32,
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
    /// Convergence study against a fine reference solution.
    Study {
        #[command(subcommand)]
        kind: StudyCommand,
    },
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Refine in space at fixed m.
    Spatial {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opt: Optimizer,
        #[arg(long, default_value_t = 9)]
        m: u32,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
        n: Vec<usize>,
        #[arg(long)]
        n_ref: Option<usize>,
        /// Large reference sizes (slow).
        #[arg(long)]
        full_scale: bool,
    },
    /// Refine in time at fixed n; the reference is always graded.
    Temporal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opt: Optimizer,
        #[arg(long, value_delimiter = ',', default_value = "6,7,8,9,10")]
        m: Vec<u32>,
        #[arg(long, default_value_t = 128)]
        n: usize,
        #[arg(long)]
        m_ref: Option<u32>,
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Problem file with `key = value` lines; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// Uniform temporal grid (both exponents 1).
    #[arg(long, conflicts_with_all = ["sigma1", "sigma2"])]
    uniform: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Optimizer {
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

impl Optimizer {
    fn options(&self) -> FixedPointOptions {
        FixedPointOptions { tol: self.tol, max_iter: self.max_iter, theta: self.theta }
    }
}

impl Common {
    fn spec(&self) -> fracocp::Result<ProblemSpec> {
        let mut spec = match &self.config {
            Some(path) => ProblemSpec::from_config_file(path)?,
            None => default_experiment_spec(self.alpha.unwrap_or(0.8), self.r.unwrap_or(0.0))?,
        };
        if self.config.is_some() {
            if let Some(a) = self.alpha {
                spec.alpha = a;
            }
            if let Some(r) = self.r {
                spec.r = r;
            }
            spec.validate()?;
        }
        Ok(spec)
    }

    fn grading(&self) -> Grading {
        if self.uniform {
            return Grading::Uniform;
        }
        match (self.sigma1, self.sigma2) {
            (None, None) => Grading::Default,
            (s1, s2) => Grading::Custom { sigma1: s1.unwrap_or(1.0), sigma2: s2.unwrap_or(1.0) },
        }
    }

    fn config(&self, opt: Option<&Optimizer>) -> fracocp::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.spec()?);
        cfg.grading = self.grading();
        if let Some(o) = opt {
            cfg.optimizer = o.options();
        }
        Ok(cfg)
    }

    fn table_format(&self) -> TableFormat {
        match self.format {
            Format::Text => TableFormat::Text,
            Format::Csv => TableFormat::Csv,
        }
    }

    fn emit(&self, bytes: &[u8]) -> std::io::Result<()> {
        match &self.out {
            Some(p) => std::fs::write(p, bytes),
            None => std::io::stdout().write_all(bytes),
        }
    }
}

fn grids(cfg: &ExperimentConfig, m: u32, n: usize) -> fracocp::Result<(Arc<TemporalGrid>, SpatialGrid)> {
    Ok((cfg.temporal_grid(m)?, SpatialGrid::uniform(n)?))
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Forward { common, m, n } => {
            let cfg = common.config(None)?;
            let (t, x) = grids(&cfg, m, n)?;
            let problem = DiscreteProblem::new(&cfg.spec, t, x)?;
            let u = problem.initial_control();
            let y = problem.state(&u)?;
            let mut buf = Vec::new();
            match common.format {
                Format::Csv => y.write_csv(&mut buf)?,
                Format::Text => {
                    let cost = problem.cost_with_state(&u, &y);
                    let norm = problem.system().inner(&y, &y)?.sqrt();
                    writeln!(buf, "slabs {} dofs {}", y.slabs(), y.dofs())?;
                    writeln!(buf, "control {}", format_sig6(cfg.spec.initial_control_value()))?;
                    writeln!(buf, "state L2L2 norm {}", format_sig6(norm))?;
                    writeln!(buf, "cost {}", format_sig6(cost.total))?;
                }
            }
            common.emit(&buf)?;
        }
        Command::Ocp { common, opt, m, n } => {
            let cfg = common.config(Some(&opt))?;
            let (t, x) = grids(&cfg, m, n)?;
            let problem = DiscreteProblem::new(&cfg.spec, t.clone(), x)?;
            let sol = fixed_point_solve(&problem, &cfg.optimizer)?;
            let mut buf = Vec::new();
            match common.format {
                Format::Csv => sol.control.write_csv(&mut buf)?,
                Format::Text => {
                    let cost = problem.cost_with_state(&sol.control, &sol.state);
                    let zero = problem.cost(&ControlField::constant(t, x, 0.0))?;
                    let (lo, hi) = sol.control.range();
                    writeln!(buf, "iterations {}", sol.iterations)?;
                    writeln!(buf, "increment {}", format_sig6(sol.final_increment()))?;
                    writeln!(buf, "residual {}", format_sig6(problem.optimality_residual(&sol.control, &sol.adjoint)?))?;
                    writeln!(buf, "control range {} {}", format_sig6(lo), format_sig6(hi))?;
                    writeln!(buf, "cost {} (zero control {})", format_sig6(cost.total), format_sig6(zero.total))?;
                }
            }
            common.emit(&buf)?;
        }
        Command::Study { kind: StudyCommand::Spatial { common, opt, m, n, n_ref, full_scale } } => {
            let cfg = common.config(Some(&opt))?;
            let n_ref = n_ref.unwrap_or(if full_scale { 512 } else { 256 });
            let table = run_spatial_study(&cfg, m, &n, n_ref)?;
            common.emit(emit_table(&table, common.table_format()).as_bytes())?;
        }
        Command::Study { kind: StudyCommand::Temporal { common, opt, m, n, m_ref, full_scale } } => {
            let cfg = common.config(Some(&opt))?;
            let m_ref = m_ref.unwrap_or(if full_scale { 14 } else { 12 });
            let table = run_temporal_study(&cfg, n, &m, m_ref)?;
            common.emit(emit_table(&table, common.table_format()).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracocp: {e}");
            ExitCode::FAILURE
        }
    }
}
