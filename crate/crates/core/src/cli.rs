//! Command-line front end: `run` integrates one flow and writes its
//! artifacts, `verify` runs the property suites.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::flow::{integrate, FlowConfig, FlowTrace, Termination};
use crate::io::{write_trace_csv, Manifest, ManifestParams, MetricSource, MANIFEST_FILE, TRACE_FILE};
use crate::matcore::HermMatrix;
use crate::metric::{cigar, flat, normalize_density, random_metric, Metric, MetricFile};
use crate::torus::{FuzzyTorus, TorusParams, XChoice};
use crate::verify::{self, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDERFLOW: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "ncricci", version, about = "Noncommutative Ricci flow on the fuzzy torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate the flow from one initial metric and write trace.csv / manifest.json.
    Run(RunArgs),
    /// Run the seeded property suites and report the worst residual per property.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricKind {
    Flat,
    Cigar,
    Random,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    /// standard, mod-n, or file:<path> (a Hermitian matrix in metric-file JSON).
    #[arg(long, default_value = "standard")]
    pub x_choice: String,
    #[arg(long, value_enum)]
    pub metric: MetricKind,
    /// Level of the flat metric [default: 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Mass of the cigar metric [default: 1].
    #[arg(long)]
    pub mass: Option<f64>,
    /// Standard deviation of the random Hermitian exponent [default: 1].
    #[arg(long)]
    pub spread: Option<f64>,
    /// Seed of the random metric [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metric file for --metric file.
    #[arg(long)]
    pub path: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1e3)]
    pub t_max: f64,
    /// Initial step [default: 1e-3/|rhs(c0)|, clamped to [h-min, h-max]].
    #[arg(long)]
    pub h_init: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    pub atol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub conv_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub h_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h_max: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub guard: f64,
    /// Flow the density matrix c0/tau(c0), with time rescaled to match.
    #[arg(long)]
    pub density_mode: bool,
    #[arg(long, default_value = "ncricci-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    pub format: OutputFormat,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Matrix sizes: a single n, an inclusive range a..b, or a comma list.
    #[arg(long, default_value = "2..8")]
    pub n: String,
    /// Random cases per (n, m) for the algebraic suites.
    #[arg(long, default_value_t = 50)]
    pub seeds: usize,
    /// Random initial metrics per (n, m) for the flow suites.
    #[arg(long, default_value_t = 1)]
    pub flow_seeds: usize,
    /// Also diagonalise the n^2 x n^2 Laplacian superoperator.
    #[arg(long)]
    pub superop: bool,
    #[arg(long, default_value = "standard")]
    pub x_choice: String,
    /// Base seed mixed into every case.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Validated `run` request.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub params: TorusParams,
    pub x_path: Option<PathBuf>,
    pub metric: MetricSource,
    pub config: FlowConfig,
    pub density_mode: bool,
    pub out: PathBuf,
    pub format: OutputFormat,
}

fn reject_foreign(kind: MetricKind, supplied: &[(&str, bool)]) -> Result<()> {
    for (flag, present) in supplied {
        if *present {
            return Err(Error::Parameter(format!(
                "--{flag} does not apply to --metric {}",
                kind.to_possible_value().expect("no skipped variants").get_name()
            )));
        }
    }
    Ok(())
}

fn parse_x_choice(s: &str) -> Result<(XChoice, Option<PathBuf>)> {
    match s {
        "standard" => Ok((XChoice::Standard, None)),
        "mod-n" => Ok((XChoice::ModN, None)),
        _ => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => {
                let path = PathBuf::from(p);
                Ok((XChoice::Custom(read_hermitian(&path)?), Some(path)))
            }
            _ => Err(Error::Parameter(format!(
                "--x-choice must be standard, mod-n or file:<path> (got {s:?})"
            ))),
        },
    }
}

fn read_hermitian(path: &Path) -> Result<HermMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file: MetricFile = serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("{}: malformed matrix JSON: {e}", path.display())))?;
    HermMatrix::new(file.to_matrix()?)
        .map_err(|e| Error::Validation(format!("{}: Hermiticity violated: {e}", path.display())))
}

impl RunArgs {
    pub fn into_spec(self) -> Result<RunSpec> {
        let (x_choice, x_path) = parse_x_choice(&self.x_choice)?;
        let params = TorusParams::new(self.n, self.m).with_x_choice(x_choice);
        params.validate()?;

        let (a, ms, sp, sd, p) =
            (self.alpha.is_some(), self.mass.is_some(), self.spread.is_some(), self.seed.is_some(), self.path.is_some());
        let kind = self.metric;
        let metric = match kind {
            MetricKind::Flat => {
                reject_foreign(kind, &[("mass", ms), ("spread", sp), ("seed", sd), ("path", p)])?;
                MetricSource::Flat { alpha: self.alpha.unwrap_or(1.0) }
            }
            MetricKind::Cigar => {
                reject_foreign(kind, &[("alpha", a), ("spread", sp), ("seed", sd), ("path", p)])?;
                MetricSource::Cigar { mass: self.mass.unwrap_or(1.0) }
            }
            MetricKind::Random => {
                reject_foreign(kind, &[("alpha", a), ("mass", ms), ("path", p)])?;
                MetricSource::Random { spread: self.spread.unwrap_or(1.0), seed: self.seed.unwrap_or(0) }
            }
            MetricKind::File => {
                reject_foreign(kind, &[("alpha", a), ("mass", ms), ("spread", sp), ("seed", sd)])?;
                let path = self
                    .path
                    .ok_or_else(|| Error::Parameter("--metric file requires --path".into()))?;
                MetricSource::File { path: path.display().to_string() }
            }
        };

        let config = FlowConfig {
            t0: self.t0,
            t_max: self.t_max,
            h_init: self.h_init,
            atol: self.atol,
            h_min: self.h_min,
            h_max: self.h_max,
            conv_tol: self.conv_tol,
            guard: self.guard,
        };
        config.validate()?;
        Ok(RunSpec {
            params,
            x_path,
            metric,
            config,
            density_mode: self.density_mode,
            out: self.out,
            format: self.format,
        })
    }
}

pub fn build_metric(t: &FuzzyTorus, source: &MetricSource) -> Result<Metric> {
    let c = match source {
        MetricSource::Flat { alpha } => flat(t.n(), *alpha)?,
        MetricSource::Cigar { mass } => cigar(t, *mass)?,
        MetricSource::Random { spread, seed } => random_metric(t.n(), *spread, *seed)?,
        MetricSource::File { path } => Metric::read_json(Path::new(path))?,
    };
    if c.dim() != t.n() {
        return Err(Error::Validation(format!("metric has size {} but --n is {}", c.dim(), t.n())));
    }
    Ok(c)
}

/// Result of a completed `run`.
pub struct RunOutcome {
    pub trace: FlowTrace,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn summary_line(&self) -> String {
        let m = &self.manifest;
        let v = &m.violations;
        format!(
            "{}: t = {:.6e}, {} accepted / {} rejected steps, dist_flat = {:.3e}, c_inf = {:.6e}, violations log_det={} entropy={} dist_flat={}",
            match m.termination {
                Termination::Converged => "converged",
                Termination::Horizon => "horizon reached",
                Termination::StepUnderflow => "step underflow",
            },
            m.final_t,
            m.accepted_steps,
            m.rejected_steps,
            m.final_dist_flat,
            m.c_infinity,
            v.log_det,
            v.entropy,
            v.dist_flat
        )
    }

    pub fn exit_code(&self) -> i32 {
        match self.trace.termination {
            Termination::StepUnderflow => EXIT_UNDERFLOW,
            _ => EXIT_OK,
        }
    }
}

/// Integrates and writes the requested artifacts into `spec.out`.
pub fn run(spec: &RunSpec) -> Result<RunOutcome> {
    let t = FuzzyTorus::build(spec.params.clone())?;
    let c0 = build_metric(&t, &spec.metric)?;
    let (c0, config, kappa) = if spec.density_mode {
        let (rho, kappa) = normalize_density(&c0);
        (rho, spec.config.rescaled(kappa), Some(kappa))
    } else {
        (c0, spec.config.clone(), None)
    };

    let start = Instant::now();
    let trace = integrate(&t, &c0, &config)?;
    let elapsed = start.elapsed().as_secs_f64();

    let params = ManifestParams {
        n: spec.params.n,
        m: spec.params.m,
        x_choice: spec.params.x_choice.label().to_string(),
        x_path: spec.x_path.as_ref().map(|p| p.display().to_string()),
    };
    let manifest = Manifest::new(params, spec.metric.clone(), kappa, &trace, elapsed);

    std::fs::create_dir_all(&spec.out).map_err(|e| Error::Io(format!("{}: {e}", spec.out.display())))?;
    if matches!(spec.format, OutputFormat::Csv | OutputFormat::Both) {
        let path = spec.out.join(TRACE_FILE);
        let file = std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        write_trace_csv(&trace.states, std::io::BufWriter::new(file))?;
    }
    if matches!(spec.format, OutputFormat::Json | OutputFormat::Both) {
        manifest.write(&spec.out.join(MANIFEST_FILE))?;
    }
    Ok(RunOutcome { trace, manifest })
}

/// Parses `2`, `2..8` (inclusive) or `2,3,5`.
pub fn parse_n_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Parameter(format!("--n must be a size, a range a..b or a comma list (got {s:?})"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let list = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if let Some(&n) = list.iter().find(|&&n| n < 2) {
        return Err(Error::Parameter(format!("--n values must be at least 2 (got {n})")));
    }
    Ok(list)
}

impl VerifyArgs {
    pub fn into_options(self) -> Result<VerifyOptions> {
        let x_choice = match self.x_choice.as_str() {
            "standard" => XChoice::Standard,
            "mod-n" => XChoice::ModN,
            other => {
                return Err(Error::Parameter(format!("--x-choice for verify must be standard or mod-n (got {other:?})")))
            }
        };
        if self.seeds == 0 {
            return Err(Error::Parameter("--seeds must be positive".into()));
        }
        Ok(VerifyOptions {
            n_values: parse_n_list(&self.n)?,
            x_choice,
            seeds: self.seeds,
            flow_seeds: self.flow_seeds,
            superop: self.superop,
            base_seed: self.seed,
        })
    }
}

fn verify_command(args: VerifyArgs) -> Result<bool> {
    let opts = args.into_options()?;
    let reports = verify::run(&opts)?;
    let mut total = 0;
    let mut failed = 0;
    for r in &reports {
        println!("{}", r.label);
        for c in &r.checks {
            println!("  {c}");
            total += 1;
            failed += usize::from(!c.passed());
        }
    }
    println!("{} properties checked, {failed} failed", total);
    Ok(failed == 0)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => match args.into_spec().and_then(|spec| run(&spec)) {
            Ok(outcome) => {
                println!("{}", outcome.summary_line());
                outcome.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
        Command::Verify(args) => match verify_command(args) {
            Ok(true) => EXIT_OK,
            Ok(false) => EXIT_ERROR,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_ERROR
            }
        },
    }
}
