//! Command-line front end: generators, atlas validation, axiom checks,
//! residues, the building at infinity, sundials and retractions.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use buildings::at_infinity::{boundary_complex, sundial, ParallelClass};
use buildings::atlas::{generate, load_path, save, validate_atlas, BPoint, BuildingInstance, GeneratorKind, GeneratorParams};
use buildings::axiom_suite::{Axiom, MatrixReport, SampleWindow, Suite};
use buildings::coxeter::RootType;
use buildings::lambda::LambdaSpec;
use buildings::local_structure::{residue, Germ};
use buildings::model_space::{MetricKind, TMode};
use buildings::report::CheckReport;
use buildings::retraction::Retraction;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "buildings", version, about = "Finite atlases of affine Λ-buildings and their axioms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Thin,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricChoice {
    D1,
    Dinf,
    Both,
}

impl MetricChoice {
    fn kinds(self) -> Vec<MetricKind> {
        match self {
            MetricChoice::D1 => vec![MetricKind::D1],
            MetricChoice::Dinf => vec![MetricKind::DInf],
            MetricChoice::Both => MetricKind::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct InstanceArg {
    /// Instance file.
    #[arg(long, value_name = "FILE")]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Coordinate bound R of the sample grid.
    #[arg(long, default_value_t = 8)]
    pub window: i64,
    /// Denominator bound q of the sample grid.
    #[arg(long, default_value_t = 4)]
    pub den: i64,
    /// Number of random samples N.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl WindowArgs {
    fn window(&self) -> SampleWindow {
        SampleWindow { radius: self.window, den: self.den, samples: self.samples, seed: self.seed }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes a generated instance.
    Generate {
        #[arg(value_enum)]
        family: Family,
        #[arg(long = "type", value_name = "A1|A2|B2")]
        root_type: RootType,
        #[arg(long, value_name = "Z|Q|QxQ_lex")]
        lambda: LambdaSpec,
        #[arg(long, default_value_t = 3)]
        branches: usize,
        /// Positive root whose wall carries the branching.
        #[arg(long, default_value_t = 0)]
        wall_root: usize,
        #[arg(long, default_value = "full")]
        t_mode: TMode,
        /// Stop before the exchange closure.
        #[arg(long)]
        seed_atlas: bool,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Structural validation of the atlas.
    Validate {
        #[command(flatten)]
        instance: InstanceArg,
    },
    /// Windowed axiom checks; exits 0 iff every requested check passes.
    Check {
        #[command(flatten)]
        instance: InstanceArg,
        /// `all` or a comma-separated list such as A3,CO,FC''.
        #[arg(long, default_value = "all")]
        axioms: String,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, value_enum, default_value = "d1")]
        metric: MetricChoice,
    },
    /// The six equivalent axiom bundles, per metric, and the metric
    /// extension check.
    Matrix {
        #[command(flatten)]
        instance: InstanceArg,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricChoice,
    },
    /// The residue at a point.
    Residue {
        #[command(flatten)]
        instance: InstanceArg,
        /// Point as `chart:(c1,...,cn)`.
        #[arg(long)]
        at: String,
    },
    /// The building at infinity.
    Infinity {
        #[command(flatten)]
        instance: InstanceArg,
    },
    /// Sundial configuration for an apartment and a chamber at infinity.
    Sundial {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        apartment: usize,
        /// Chamber at infinity as `chart:word`, e.g. `2:0`.
        #[arg(long)]
        chamber: String,
    },
    /// Retraction onto an apartment centered at a chamber germ.
    Retract {
        #[command(flatten)]
        instance: InstanceArg,
        #[arg(long)]
        apartment: usize,
        /// Germ as `chart:(coords):word`.
        #[arg(long)]
        germ: String,
        /// Point as `chart:(coords)`.
        #[arg(long)]
        point: String,
    },
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

/// Runs the tool; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            if e.use_stderr() {
                eprint!("{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn load(arg: &InstanceArg) -> Result<BuildingInstance, Failure> {
    load_path(&arg.instance).map_err(|e| Failure(format!("{}: {e}", arg.instance.display())))
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T, text: impl FnOnce() -> String) -> Result<(), Failure> {
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(value)?)?,
        Format::Text => write!(out, "{}", text())?,
    }
    Ok(())
}

fn report_lines(reports: &[CheckReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&format!("{r}\n"));
    }
    s
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    instance: &'a str,
    metric: MetricKind,
    window: SampleWindow,
    reports: Vec<CheckReport>,
}

#[derive(Serialize)]
struct MatrixOutput {
    instance: String,
    matrices: Vec<MatrixReport>,
    metric_independence: CheckReport,
}

#[derive(Serialize)]
struct ResidueOutput {
    at: BPoint,
    chambers: usize,
    panels: usize,
    apartments: usize,
    apartment_charts: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    building: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    problem: Option<String>,
}

#[derive(Serialize)]
struct InfinityOutput {
    chambers: usize,
    panels: usize,
    apartments: usize,
    distinct_apartments: usize,
    building: bool,
    bijection: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    problem: Option<String>,
}

#[derive(Serialize)]
struct RetractOutput {
    apartment: usize,
    germ: String,
    point: BPoint,
    image: BPoint,
}

fn execute(command: Command, out: &mut dyn Write) -> Result<bool, Failure> {
    match command {
        Command::Generate { family, root_type, lambda, branches, wall_root, t_mode, seed_atlas, output } => {
            let kind = match family {
                Family::Thin => GeneratorKind::Thin,
                Family::Star => GeneratorKind::Star { wall_root, branches, seed_only: seed_atlas },
            };
            let b = generate(kind, GeneratorParams { root_type, spec: lambda, t_mode })?;
            let text = save(&b)?;
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))?,
                None => write!(out, "{text}")?,
            }
            Ok(true)
        }
        Command::Validate { instance } => {
            let b = load(&instance)?;
            let r = validate_atlas(&b);
            emit(out, instance.format, &r, || format!("{r}\n"))?;
            Ok(r.verdict.is_pass())
        }
        Command::Check { instance, axioms, window, metric } => {
            let axioms = Axiom::parse_list(&axioms)?;
            let b = load(&instance)?;
            let suite = Suite::new(&b, window.window())?;
            let mut ok = true;
            let mut outputs = Vec::new();
            for m in metric.kinds() {
                let reports = suite.check_all(&axioms, m);
                ok &= reports.iter().all(|r| r.verdict.is_ok());
                outputs.push(CheckOutput { instance: b.name(), metric: m, window: window.window(), reports });
            }
            emit(out, instance.format, &outputs, || {
                outputs
                    .iter()
                    .map(|o| format!("instance {} metric {}\n{}", o.instance, o.metric, report_lines(&o.reports)))
                    .collect()
            })?;
            Ok(ok)
        }
        Command::Matrix { instance, window, metric } => {
            let b = load(&instance)?;
            let suite = Suite::new(&b, window.window())?;
            let matrices: Vec<MatrixReport> = metric.kinds().into_iter().map(|m| suite.matrix(m)).collect();
            let metric_independence = suite.check_metric_independence();
            let ok = matrices.iter().all(MatrixReport::all_pass) && metric_independence.verdict.is_pass();
            let output = MatrixOutput { instance: b.name().to_string(), matrices, metric_independence };
            emit(out, instance.format, &output, || {
                let mut s = String::new();
                for m in &output.matrices {
                    s.push_str(&format!("instance {} metric {}\n", m.instance, m.metric));
                    s.push_str(&report_lines(&m.axioms));
                    for bundle in &m.bundles {
                        let names: Vec<&str> = bundle.axioms.iter().map(|a| a.name()).collect();
                        s.push_str(&format!("bundle ({}) {:<22} {}\n", bundle.bundle, names.join("+"), bundle.verdict));
                    }
                }
                s.push_str(&format!("{}\n", output.metric_independence));
                s
            })?;
            Ok(ok)
        }
        Command::Residue { instance, at } => {
            let b = load(&instance)?;
            let x = BPoint::parse(b.model().spec(), &at)?;
            let r = residue(&b, &x)?;
            let mut sets = r.system.apartment_sets();
            sets.sort();
            sets.dedup();
            let output = ResidueOutput {
                at: x,
                chambers: r.chambers.len(),
                panels: r.panels.len(),
                apartments: sets.len(),
                apartment_charts: r.apartment_charts.clone(),
                adjacency: r.adjacency(),
                building: r.is_building(),
                problem: r.verdict.clone().err(),
            };
            emit(out, instance.format, &output, || {
                let mut s = format!(
                    "residue at {}\nchambers   {}\npanels     {}\napartments {} (charts {:?})\n",
                    output.at, output.chambers, output.panels, output.apartments, output.apartment_charts
                );
                for (c, g) in r.chambers.iter().enumerate() {
                    s.push_str(&format!("  [{c}] {} adjacent {:?}\n", g.label(&b), output.adjacency[c]));
                }
                s.push_str(&format!("building   {}\n", verdict_word(output.building, &output.problem)));
                s
            })?;
            Ok(output.building)
        }
        Command::Infinity { instance } => {
            let b = load(&instance)?;
            let bc = boundary_complex(&b);
            let problem = bc.verdict.clone().err().or(bc.bijection.clone().err());
            let output = InfinityOutput {
                chambers: bc.chambers.len(),
                panels: bc.panels.len(),
                apartments: bc.system.apartments.len(),
                distinct_apartments: bc.distinct_apartments(),
                building: bc.verdict.is_ok(),
                bijection: bc.bijection.is_ok(),
                problem,
            };
            emit(out, instance.format, &output, || {
                let mut s = format!(
                    "chambers   {}\npanels     {}\napartments {} ({} distinct)\n",
                    output.chambers, output.panels, output.apartments, output.distinct_apartments
                );
                for c in &bc.chambers {
                    s.push_str(&format!("  {}\n", c.label(&b)));
                }
                s.push_str(&format!("building   {}\n", verdict_word(bc.is_building(), &output.problem)));
                s
            })?;
            Ok(bc.is_building())
        }
        Command::Sundial { instance, apartment, chamber } => {
            let b = load(&instance)?;
            let c = ParallelClass::parse(&b, &chamber)?;
            let s = sundial(&b, apartment, &c)?;
            emit(out, instance.format, &s, || {
                format!(
                    "apartments {} {}\nopposite   {} {}\ntriple     {}\n",
                    s.apartments[0],
                    s.apartments[1],
                    s.opposite[0].label(&b),
                    s.opposite[1].label(&b),
                    s.triple
                )
            })?;
            Ok(true)
        }
        Command::Retract { instance, apartment, germ, point } => {
            let b = load(&instance)?;
            let mu = Germ::parse(&b, &germ)?;
            let y = BPoint::parse(b.model().spec(), &point)?;
            b.model().check_point(&y.local)?;
            if y.chart >= b.apartment_count() {
                return Err(Failure(format!("no chart {}", y.chart)));
            }
            let r = Retraction::new(&b, apartment, &mu)?;
            let image = r.retract(&b, &y)?;
            let output = RetractOutput { apartment, germ: mu.label(&b), point: y, image };
            emit(out, instance.format, &output, || format!("{}\n", output.image))?;
            Ok(true)
        }
    }
}

fn verdict_word(ok: bool, problem: &Option<String>) -> String {
    match (ok, problem) {
        (true, _) => "pass".into(),
        (false, Some(p)) => format!("fail: {p}"),
        (false, None) => "fail".into(),
    }
}
