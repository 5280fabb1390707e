//! Command-line front end.
//!
//! Exit codes: 0 success, 1 file or schema error, 2 boundary conditions not
//! self-adjoint, 3 numerical failure.

pub mod problem;
pub mod report;

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, BoundsOptions};
use crate::conditions::{canonical_form, validate, CanonicalForm};
use crate::error::Error;
use crate::fem::{self, Discretization};
use crate::graph::MetricGraph;
use crate::nonlinear::{self, NegativeSpectrum};
use crate::tolerance::Tolerances;

use problem::{Problem, ProblemError};
use report::{CompactSummary, FemSummary, Format, Report, ValidationSummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NOT_SELF_ADJOINT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qgbounds", version, about = "Bounds on negative eigenvalues of Laplacians on metric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the boundary conditions define a self-adjoint Laplacian.
    Validate(Options),
    /// Eigenvalue count and the interval bounds for each negative eigenvalue.
    Bounds(Options),
    /// Negative eigenvalues from the exact nonlinear eigenvalue problem.
    Spectrum(Options),
    /// Zero modes and the Poincaré constant of a compact graph.
    Poincare(Options),
    /// Everything above.
    Report(Options),
}

#[derive(Debug, Args)]
pub struct Options {
    /// Problem file (JSON).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Factor applied to every numerical tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol: f64,
    /// Cross-check the negative spectrum with finite elements.
    #[arg(long)]
    pub fem: bool,
    /// Finite element nodes per unit length.
    #[arg(long, default_value_t = 1000)]
    pub fem_n: usize,
    /// Truncation length for external edges (default: from the bounds).
    #[arg(long)]
    pub fem_truncation: Option<f64>,
    /// Process eigenvalue indices concurrently. Output is unchanged.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Problem(ProblemError::Model(e)) | CliError::Model(e) => match e {
                Error::NotSelfAdjoint(_) => EXIT_NOT_SELF_ADJOINT,
                Error::Numerical(_) | Error::Consistency(_) => EXIT_NUMERICAL,
                Error::Graph(_) | Error::Condition(_) | Error::InvalidArgument(_) => EXIT_INPUT,
            },
            CliError::Problem(_) => EXIT_INPUT,
        }
    }
}

/// Entry point used by the binary: real stdout/stderr, color on terminals
/// unless `NO_COLOR` is set.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let color = std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty());
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock(), color)
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = if color { e.render().ansi().to_string() } else { e.render().to_string() };
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (command, opts) = match &cli.command {
        Command::Validate(o) => ("validate", o),
        Command::Bounds(o) => ("bounds", o),
        Command::Spectrum(o) => ("spectrum", o),
        Command::Poincare(o) => ("poincare", o),
        Command::Report(o) => ("report", o),
    };
    match execute(command, opts) {
        Ok((report, failure)) => {
            let text = match report::emit(&report, opts.format, color) {
                Ok(t) => t,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_NUMERICAL;
                }
            };
            let _ = out.write_all(text.as_bytes());
            if let Some(msg) = failure {
                let _ = writeln!(err, "error: {msg}");
                return EXIT_NOT_SELF_ADJOINT;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one subcommand. A validation failure still yields a report (the
/// validation section) together with the failure message.
fn execute(command: &str, opts: &Options) -> Result<(Report, Option<String>), CliError> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("--tol must be positive, got {}", opts.tol)).into());
    }
    let tol = Tolerances::scaled(opts.tol);
    let bopts = BoundsOptions {
        tol,
        parallel: opts.parallel,
    };
    let Problem { graph, spec } = problem::load(&opts.input)?;

    let validation = validate(&spec, &tol);
    let mut report = Report {
        validation: Some(ValidationSummary::from(&validation)),
        ..Report::default()
    };
    if !validation.valid {
        let msg = Error::NotSelfAdjoint(validation.message()).to_string();
        return Ok((report, Some(msg)));
    }
    if command == "validate" {
        return Ok((report, None));
    }
    let cf = canonical_form(&spec, &tol)?;

    if command == "poincare" {
        report.compact = Some(compact_summary(&graph, &cf, opts, &tol)?);
        return Ok((report, None));
    }

    let bounds = bounds::combined(&cf, &graph, &bopts)?;
    if matches!(command, "spectrum" | "report") {
        let spectrum = nonlinear::negative_spectrum(&cf, &graph, &bopts)?;
        if opts.fem {
            report.fem = Some(fem_summary(&graph, &cf, &bounds, Some(&spectrum), opts)?);
        }
        report.spectrum = Some(spectrum);
    } else if opts.fem {
        report.fem = Some(fem_summary(&graph, &cf, &bounds, None, opts)?);
    }
    report.bounds = Some(bounds);
    if command == "report" && graph.is_compact() {
        report.compact = Some(compact_summary(&graph, &cf, opts, &tol)?);
    }
    report.check_enclosures()?;
    Ok((report, None))
}

fn fem_summary(
    g: &MetricGraph,
    cf: &CanonicalForm,
    bounds: &bounds::BoundsReport,
    spectrum: Option<&NegativeSpectrum>,
    opts: &Options,
) -> Result<FemSummary, Error> {
    let truncation = if g.is_compact() {
        None
    } else {
        opts.fem_truncation.or_else(|| fem::default_truncation(g, bounds))
    };
    let disc = Discretization::new(g, cf, opts.fem_n, truncation)?;
    let negative_eigenvalues = disc.negative_eigenvalues();
    let max_relative_deviation = spectrum.map(|s| {
        let exact: Vec<f64> = s.kappas().iter().map(|k| -k * k).collect();
        if exact.len() != negative_eigenvalues.len() {
            return f64::INFINITY;
        }
        exact
            .iter()
            .zip(&negative_eigenvalues)
            .map(|(e, f)| ((f - e) / e).abs())
            .fold(0.0, f64::max)
    });
    Ok(FemSummary {
        nodes_per_unit: opts.fem_n,
        truncation,
        negative_eigenvalues,
        max_relative_deviation,
    })
}

fn compact_summary(g: &MetricGraph, cf: &CanonicalForm, opts: &Options, tol: &Tolerances) -> Result<CompactSummary, Error> {
    if !g.is_compact() {
        return Err(Error::InvalidArgument("the Poincaré analysis needs a compact graph (no external edges)".into()));
    }
    let zero_modes = nonlinear::zero_mode_dimension(cf, g, tol)?;
    let criterion = nonlinear::poincare_criterion(&cf.p, g, tol)?;
    let (poincare, message) = if criterion.holds {
        let pc = fem::poincare_constant(g, &cf.p, opts.fem_n, tol)?;
        (Some(pc), "criterion holds".to_owned())
    } else {
        (None, format!("criterion fails, defect {} (zero mode present)", criterion.defect))
    };
    Ok(CompactSummary {
        zero_modes,
        criterion,
        poincare,
        message,
    })
}
