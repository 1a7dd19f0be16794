use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use adt_design_core::{
    equivalence_report, optimize, product_extrapolation_design, reported_support, sweep,
    validate_system, verification_grid, ApproximateDesign, CriterionContext, EquivalenceReport,
    Error, ModelSpec, OptimizerOptions, RowStatus,
};
use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ProblemConfig};
use crate::io::{read_design, write_design, write_sweep, CsvError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_UNATTAINABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "adt-design",
    version,
    about = "c-optimal designs for accelerated degradation tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize the design and certify it.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Write the design as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the failure-time quantile under normal use.
    Quantile {
        #[command(flatten)]
        common: Common,
    },
    /// Check a design from CSV against the equivalence theorem.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        design: PathBuf,
    },
    /// Re-evaluate the problem along a one-parameter sweep.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// beta[l][q], x_u[j], alpha or threshold[l] (one-based)
        #[arg(long)]
        sweep_target: Option<String>,
        /// start:stop:step
        #[arg(long, allow_hyphen_values = true)]
        sweep_range: Option<String>,
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        reoptimize: Option<bool>,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form product design for extrapolation at the use condition.
    ProductDesign {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub grid_step: Option<f64>,
    /// Equivalence tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Csv(#[from] CsvError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(Error::QuantileUnattainable { .. })
            | Self::Config(ConfigError::Core(Error::QuantileUnattainable { .. })) => {
                EXIT_UNATTAINABLE
            }
            _ => EXIT_ERROR,
        }
    }
}

impl From<adt_design_core::ValidationErrors> for AppError {
    fn from(e: adt_design_core::ValidationErrors) -> Self {
        Self::Core(e.into())
    }
}

struct Problem {
    spec: ModelSpec,
    options: OptimizerOptions,
    config: ProblemConfig,
}

fn load(common: &Common) -> Result<Problem, AppError> {
    let config = ProblemConfig::load(&common.config)?;
    let mut spec = config.model_spec()?;
    let mut options = config.optimizer_options();
    if let Some(a) = common.alpha {
        spec.alpha = a;
    }
    if let Some(s) = common.grid_step {
        options.grid_step = s;
    }
    if let Some(t) = common.tol {
        options.equivalence_tol = t;
    }
    options.validate()?;
    Ok(Problem {
        spec,
        options,
        config,
    })
}

fn context(spec: &ModelSpec) -> Result<CriterionContext, AppError> {
    Ok(CriterionContext::new(validate_system(spec.clone())?)?)
}

fn point(x: &[f64]) -> String {
    let coords: Vec<String> = x.iter().map(|v| format!("{v:.4}")).collect();
    format!("({})", coords.join(", "))
}

fn write_quantile(out: &mut dyn Write, ctx: &CriterionContext) -> io::Result<()> {
    let q = ctx.quantile();
    writeln!(out, "t_{} = {:.6}", q.alpha, q.t)?;
    for (l, f) in q.marginal_cdfs.iter().enumerate() {
        writeln!(out, "  F_T{}(t) = {:.6}", l + 1, f)?;
    }
    writeln!(out, "  F_T(t)  = {:.6}", q.joint_cdf)?;
    if q.degenerate {
        writeln!(
            out,
            "warning: F_T(0) >= alpha, the quantile is degenerate at t = 0"
        )?;
    }
    Ok(())
}

fn write_design_table(
    out: &mut dyn Write,
    design: &ApproximateDesign,
    threshold: f64,
) -> io::Result<()> {
    writeln!(out, "design:")?;
    let shown = reported_support(design, threshold);
    for (x, w) in &shown {
        writeln!(out, "  {:<24} {:.3}", point(x), w)?;
    }
    let hidden = design.len() - shown.len();
    if hidden > 0 {
        let rest: f64 = 1.0 - shown.iter().map(|(_, w)| w).sum::<f64>();
        writeln!(
            out,
            "  {hidden} points below {threshold:e} with total weight {rest:.3}"
        )?;
    }
    Ok(())
}

fn write_report(
    out: &mut dyn Write,
    report: &EquivalenceReport,
    grid_size: usize,
) -> io::Result<()> {
    writeln!(out, "objective = {:.10e}", report.objective_value)?;
    writeln!(
        out,
        "max sensitivity = {:.10e} at {} over {} points",
        report.max_sensitivity,
        point(&report.argmax_point),
        grid_size
    )?;
    writeln!(
        out,
        "equivalence gap = {:.3e} (tolerance {:.1e})",
        report.gap, report.tolerance
    )?;
    writeln!(out, "certified = {}", report.certified)
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn solve(common: &Common, out_path: Option<&Path>, out: &mut dyn Write) -> Result<i32, AppError> {
    let p = load(common)?;
    let ctx = context(&p.spec)?;
    let sol = optimize(&ctx, &p.options)?;
    let (design, run, report) = (sol.design(), &sol.run, &sol.report);
    write_quantile(out, &ctx)?;
    write_design_table(out, design, p.options.report_threshold)?;
    write_report(out, report, sol.verification_points)?;
    writeln!(
        out,
        "iterations = {}, converged = {}, monotone = {}",
        run.iterations, run.converged, run.monotone
    )?;
    if let Some(path) = out_path {
        let mut f = create(path)?;
        write_design(&mut f, design)?;
        f.flush()?;
    }
    Ok(if sol.certified() {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    })
}

fn quantile(common: &Common, out: &mut dyn Write) -> Result<i32, AppError> {
    let p = load(common)?;
    let ctx = context(&p.spec)?;
    write_quantile(out, &ctx)?;
    Ok(EXIT_OK)
}

fn check(common: &Common, design_path: &Path, out: &mut dyn Write) -> Result<i32, AppError> {
    let p = load(common)?;
    let file = File::open(design_path)?;
    let design = read_design(file, p.spec.stress_dim)?;
    let ctx = context(&p.spec)?;
    let fine = verification_grid(&p.spec.design_region, &p.options)?;
    let report = equivalence_report(&ctx, &design, &fine, p.options.equivalence_tol)?;
    write_design_table(out, &design, p.options.report_threshold)?;
    write_report(out, &report, fine.len())?;
    Ok(if report.certified {
        EXIT_OK
    } else {
        EXIT_NOT_CERTIFIED
    })
}

fn run_sweep(
    common: &Common,
    target: Option<&str>,
    range: Option<&str>,
    reoptimize: Option<bool>,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, AppError> {
    let p = load(common)?;
    let spec = p.config.sweep_spec(target, range, reoptimize)?;
    let result = sweep(&p.spec, &spec, &p.options)?;
    match out_path {
        Some(path) => {
            let mut f = create(path)?;
            write_sweep(&mut f, &result, p.spec.r())?;
            f.flush()?;
            let failed = result
                .rows
                .iter()
                .filter(|r| matches!(r.status, RowStatus::Failed(_)))
                .count();
            writeln!(
                out,
                "{} rows written to {}",
                result.rows.len(),
                path.display()
            )?;
            if failed > 0 {
                writeln!(out, "{failed} rows failed, see the status column")?;
            }
            writeln!(
                out,
                "note: efficiencies cover the fixed effects only and are lower bounds"
            )?;
        }
        None => write_sweep(&mut *out, &result, p.spec.r())?,
    }
    Ok(EXIT_OK)
}

fn run_product_design(
    common: &Common,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, AppError> {
    let p = load(common)?;
    let pd = product_extrapolation_design(&p.spec.use_condition)?;
    for (j, w) in pd.marginal_weights.iter().enumerate() {
        writeln!(out, "marginal weight on x_{} = 1: {:.3}", j + 1, w)?;
    }
    write_design_table(out, &pd.design, 0.0)?;
    if !pd.extrapolation {
        writeln!(
            out,
            "warning: the use condition lies inside [0, 1] on some axis, this design is not optimal there"
        )?;
    }
    if let Some(path) = out_path {
        let mut f = create(path)?;
        write_design(&mut f, &pd.design)?;
        f.flush()?;
    }
    Ok(EXIT_OK)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<i32, AppError> {
    match &cli.command {
        Command::Solve { common, out: path } => solve(common, path.as_deref(), out),
        Command::Quantile { common } => quantile(common, out),
        Command::Check { common, design } => check(common, design, out),
        Command::Sweep {
            common,
            sweep_target,
            sweep_range,
            reoptimize,
            out: path,
        } => run_sweep(
            common,
            sweep_target.as_deref(),
            sweep_range.as_deref(),
            *reoptimize,
            path.as_deref(),
            out,
        ),
        Command::ProductDesign { common, out: path } => {
            run_product_design(common, path.as_deref(), out)
        }
    }
}
