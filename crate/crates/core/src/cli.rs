//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure, 1 anything
//! else (I/O). Parameter precedence: flags over the JSON config file over
//! built-in defaults.

use crate::analytic::Case1Exact;
use crate::benchmark::{run_case1, solve_case1, ConvergenceReport, StudyConfig, StudyError, EXTENDED_H_SEQUENCE};
use crate::element::ElementOrder;
use crate::export::{write_field_csv, write_reference_csv, write_vtk};
use crate::mesh::EdgeTag;
use crate::sparse::SolverKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping worker threads (0 or unset: default).
pub const THREADS_ENV: &str = "BRIDGEBENCH_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bridgebench", version, about = "Hot-top half-square heat conduction benchmark (FEM)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve a single element size and report heat flows and temperature error.
    Run(RunArgs),
    /// Run the refinement study over the configured element sizes.
    Converge(ConvergeArgs),
    /// Export nodal temperature and heat flux for one element size.
    Field(FieldArgs),
    /// Print the analytic reference temperature table.
    Reference(ReferenceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Vtk,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StudyOverrides {
    /// JSON configuration file with StudyConfig keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nodes masked next to the singular corner.
    #[arg(long = "mask")]
    pub mask_count: Option<usize>,
    /// Element order: linear (Q4) or serendipity (Q8).
    #[arg(long)]
    pub order: Option<ElementOrder>,
    /// Dirichlet precedence at shared corners, e.g. top,bottom,right.
    #[arg(long, value_delimiter = ',')]
    pub corner_rule: Option<Vec<EdgeTag>>,
    #[arg(long)]
    pub solver: Option<SolverKind>,
    #[arg(long)]
    pub flux_tolerance: Option<f64>,
    #[arg(long)]
    pub temp_tolerance: Option<f64>,
    #[arg(long)]
    pub conductivity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Element size in centimetres.
    #[arg(long = "h-cm")]
    pub h_cm: Option<f64>,
    #[command(flatten)]
    pub study: StudyOverrides,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the per-node top-edge flux profile next to the output.
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    /// Element sizes in centimetres, comma separated, coarse to fine.
    #[arg(long = "h-cm", value_delimiter = ',')]
    pub h_cm: Option<Vec<f64>>,
    /// Use the extended sequence down to 0.03125 cm.
    #[arg(long, conflicts_with = "h_cm")]
    pub extended: bool,
    /// Keep only the first N levels.
    #[arg(long)]
    pub levels: Option<usize>,
    #[command(flatten)]
    pub study: StudyOverrides,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Also write the per-node top-edge flux profile next to the output.
    #[arg(long)]
    pub profile: bool,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long = "h-cm")]
    pub h_cm: f64,
    #[command(flatten)]
    pub study: StudyOverrides,
    #[arg(long, value_enum, default_value = "vtk")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReferenceArgs {
    /// Grid spacing in centimetres.
    #[arg(long = "spacing-cm", default_value_t = 5.0)]
    pub spacing_cm: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// A failed command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn io(e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_FAILURE, message: e.to_string() }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        let code = match &e {
            StudyError::InvalidConfig(_) | StudyError::DivisionDomain => EXIT_USAGE,
            StudyError::LevelFailed { source, .. } if source.is_numerical() => EXIT_NUMERICAL,
            StudyError::LevelFailed { .. } => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Study(s) => s.into(),
            other if other.is_numerical() => CliError { code: EXIT_NUMERICAL, message: other.to_string() },
            other => CliError::usage(other.to_string()),
        }
    }
}

fn cm_to_m(cm: f64) -> f64 {
    cm / 100.0
}

impl StudyOverrides {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<StudyConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))?
            }
            None => StudyConfig::default(),
        };
        if let Some(m) = self.mask_count {
            config.mask_count = m;
        }
        if let Some(o) = self.order {
            config.element_order = o;
        }
        if let Some(r) = &self.corner_rule {
            config.corner_rule = r.clone();
        }
        if let Some(s) = self.solver {
            config.solver = s;
        }
        if let Some(t) = self.flux_tolerance {
            config.flux_tolerance = t;
        }
        if let Some(t) = self.temp_tolerance {
            config.temp_tolerance = t;
        }
        if let Some(k) = self.conductivity {
            config.conductivity = k;
        }
        Ok(config)
    }
}

impl ValueEnum for ElementOrder {
    fn value_variants<'a>() -> &'a [Self] {
        &[ElementOrder::Linear, ElementOrder::Serendipity]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            ElementOrder::Linear => "linear",
            ElementOrder::Serendipity => "serendipity",
        }))
    }
}

impl ValueEnum for SolverKind {
    fn value_variants<'a>() -> &'a [Self] {
        &[SolverKind::Cholesky, SolverKind::ConjugateGradient]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            SolverKind::Cholesky => "cholesky",
            SolverKind::ConjugateGradient => "cg",
        }))
    }
}

impl ValueEnum for EdgeTag {
    fn value_variants<'a>() -> &'a [Self] {
        &EdgeTag::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            EdgeTag::Top => "top",
            EdgeTag::Bottom => "bottom",
            EdgeTag::Left => "left",
            EdgeTag::Right => "right",
        }))
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::io(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `<dir>/<stem>_profile.csv` next to the main output.
pub fn profile_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    output.with_file_name(format!("{stem}_profile.csv"))
}

fn write_report(report: &ConvergenceReport, format: Format, output: Option<&Path>, profile: bool) -> Result<(), CliError> {
    let mut out = open_output(output)?;
    match format {
        Format::Json => {
            let text = report.to_json().map_err(CliError::io)?;
            writeln!(out, "{text}").map_err(CliError::io)?;
        }
        Format::Csv => report.write_csv(&mut out).map_err(CliError::io)?,
        Format::Vtk => return Err(CliError::usage("vtk output is only available for `field`")),
    }
    out.flush().map_err(CliError::io)?;
    if profile {
        let path = profile_path(output.ok_or_else(|| CliError::usage("--profile requires --output"))?);
        let file = File::create(&path).map_err(CliError::io)?;
        report.write_profile_csv(BufWriter::new(file)).map_err(CliError::io)?;
    }
    Ok(())
}

fn study_and_write(config: &StudyConfig, format: Format, output: Option<&Path>, profile: bool) -> Result<(), CliError> {
    if format == Format::Vtk {
        return Err(CliError::usage("vtk output is only available for `field`"));
    }
    if profile && output.is_none() {
        return Err(CliError::usage("--profile requires --output"));
    }
    match run_case1(config) {
        Ok(report) => write_report(&report, format, output, profile),
        Err(StudyError::LevelFailed { h, source, partial }) => {
            // keep what finished before reporting the failure
            write_report(&partial, format, output, false)?;
            Err(StudyError::LevelFailed { h, source, partial }.into())
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let mut config = args.study.resolve()?;
    match args.h_cm {
        Some(h) => config.h_sequence = vec![cm_to_m(h)],
        None if config.h_sequence.len() == 1 => {}
        None => return Err(CliError::usage("`run` needs a single element size (--h-cm)")),
    }
    study_and_write(&config, args.format, args.output.as_deref(), args.profile)
}

pub fn cmd_converge(args: &ConvergeArgs) -> Result<(), CliError> {
    let mut config = args.study.resolve()?;
    if let Some(hs) = &args.h_cm {
        config.h_sequence = hs.iter().map(|&h| cm_to_m(h)).collect();
    }
    if args.extended {
        config.h_sequence = EXTENDED_H_SEQUENCE.to_vec();
    }
    if let Some(n) = args.levels {
        if n == 0 || n > config.h_sequence.len() {
            return Err(CliError::usage(format!(
                "--levels must be between 1 and {}",
                config.h_sequence.len()
            )));
        }
        config.h_sequence.truncate(n);
    }
    study_and_write(&config, args.format, args.output.as_deref(), args.profile)
}

pub fn cmd_field(args: &FieldArgs) -> Result<(), CliError> {
    let config = args.study.resolve()?;
    if args.format == Format::Json {
        return Err(CliError::usage("`field` writes vtk or csv"));
    }
    let h = cm_to_m(args.h_cm);
    let check = StudyConfig { h_sequence: vec![h], ..config.clone() };
    check.validate()?;
    let sol = solve_case1(h, &config)?;
    let nodal = sol.flux.nodal().expect("nodal flux is computed by solve_case1");
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Vtk => {
            let title = format!("bridgebench nodal temperature and heat flux, h = {} cm, {}", args.h_cm, config.element_order);
            write_vtk(&mut out, &sol.mesh, &sol.field, nodal, &title).map_err(CliError::io)?
        }
        Format::Csv => write_field_csv(&mut out, &sol.mesh, &sol.field, nodal).map_err(CliError::io)?,
        Format::Json => unreachable!(),
    }
    out.flush().map_err(CliError::io)
}

#[derive(Serialize)]
struct ReferenceJson {
    x_m: f64,
    y_m: f64,
    #[serde(rename = "T_C")]
    t: f64,
    #[serde(rename = "T_C_rounded")]
    t_rounded: f64,
}

pub fn cmd_reference(args: &ReferenceArgs) -> Result<(), CliError> {
    let table = Case1Exact::default()
        .reference_grid(cm_to_m(args.spacing_cm))
        .map_err(|e| CliError::usage(e.to_string()))?;
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        Format::Csv => write_reference_csv(&mut out, &table).map_err(CliError::io)?,
        Format::Json => {
            let rows: Vec<ReferenceJson> = table
                .iter()
                .map(|p| ReferenceJson { x_m: p.x, y_m: p.y, t: p.temperature, t_rounded: p.rounded })
                .collect();
            let text = serde_json::to_string_pretty(&rows).map_err(CliError::io)?;
            writeln!(out, "{text}").map_err(CliError::io)?;
        }
        Format::Vtk => return Err(CliError::usage("vtk output is only available for `field`")),
    }
    out.flush().map_err(CliError::io)
}

/// Worker-thread cap from [`THREADS_ENV`]; `None` means the rayon default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(CliError::usage(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        },
    }
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Field(a) => cmd_field(a),
        Command::Reference(a) => cmd_reference(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = thread_cap().and_then(|cap| match cap {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(CliError::io)?
            .install(|| dispatch(&cli)),
        None => dispatch(&cli),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
