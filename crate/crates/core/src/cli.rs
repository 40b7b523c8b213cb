//! Command-line surface: argument model, subcommand execution and exit codes.

use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{
    format_complex, parse_points, residue_class, run_battery, ConvergenceReport, PoleMode,
    PoleSequenceSpec, XStarRule,
};
use crate::error::{Error, Result};
use crate::format::{csv_table, json_document, Cell};
use crate::geometry::{CompactSet, ExtPoint, PoleDivisor};
use crate::potential::build_green;
use crate::solver::{solve, Problem, Solution, SolveOptions};
use crate::verify::{load_solution, selftest, verify_solution, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
/// Caps the worker-thread count.
pub const THREADS_ENV: &str = "RATCHEB_THREADS";
/// Points in the `solve` CSV sample table.
const CSV_SAMPLES: usize = 801;

/// Parsed command line.
#[derive(Parser, Debug, Clone, PartialEq)]
#[command(
    name = "ratcheb",
    version,
    about = "Extremal rational functions with prescribed real poles on unions of intervals",
    disable_help_subcommand = true
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Compute the extremal function and its certificate
    Solve(SolveArgs),
    /// Evaluate the Green function of the complement of a set
    Green(GreenArgs),
    /// Run every structural check on a solution
    Verify(VerifyArgs),
    /// Tabulate root and modulus asymptotics along a pole sequence
    Asymptotics(AsymptoticsArgs),
    /// Run the built-in invariant battery
    Selftest(SelftestArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn literal(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct OutputArgs {
    /// Output format [default: json, csv for green]
    #[arg(long = "out", value_enum, value_name = "FORMAT")]
    pub format: Option<Format>,
    /// Write to this file instead of standard output
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct TolArgs {
    /// Target equioscillation defect
    #[arg(long, value_name = "TOL", default_value = "1e-10", value_parser = positive)]
    pub tol: f64,
    /// Exchange iteration cap
    #[arg(long, value_name = "N", default_value_t = 200)]
    pub max_iter: usize,
    /// Relative threshold below which a pole order is treated as cancelled
    #[arg(long, value_name = "EPS", default_value = "1e-8", value_parser = positive)]
    pub eps_pole: f64,
}

impl TolArgs {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            eps_pole: self.eps_pole,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SolveArgs {
    /// Interval union, e.g. "[-1,-0.3];[0.2,1]"
    #[arg(long, value_name = "LITERAL", value_parser = parse_set, allow_hyphen_values = true)]
    pub set: CompactSet,
    /// Pole divisor, e.g. "inf:3,2:1"
    #[arg(long, value_name = "LITERAL", value_parser = parse_poles, allow_hyphen_values = true)]
    pub poles: PoleDivisor,
    /// Reference point: a decimal or inf
    #[arg(long, value_name = "POINT", value_parser = parse_point, allow_hyphen_values = true)]
    pub xstar: ExtPoint,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct GreenArgs {
    /// Interval union
    #[arg(long, value_name = "LITERAL", value_parser = parse_set, allow_hyphen_values = true)]
    pub set: CompactSet,
    /// Pole of the Green function: a decimal or inf
    #[arg(long, value_name = "POINT", value_parser = parse_point, allow_hyphen_values = true)]
    pub pole: ExtPoint,
    /// Evaluation points, e.g. "2i;3;1.5-0.5i"
    #[arg(long, value_name = "POINTS", value_parser = parse_point_list, allow_hyphen_values = true)]
    pub eval: Points,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct VerifyArgs {
    /// Interval union (re-solves the problem)
    #[arg(long, value_name = "LITERAL", value_parser = parse_set, allow_hyphen_values = true, required_unless_present = "solution")]
    pub set: Option<CompactSet>,
    /// Pole divisor
    #[arg(long, value_name = "LITERAL", value_parser = parse_poles, allow_hyphen_values = true, required_unless_present = "solution")]
    pub poles: Option<PoleDivisor>,
    /// Reference point
    #[arg(long, value_name = "POINT", value_parser = parse_point, allow_hyphen_values = true, required_unless_present = "solution")]
    pub xstar: Option<ExtPoint>,
    /// Verify a JSON document written by `solve` instead of re-solving
    #[arg(long, value_name = "PATH", conflicts_with_all = ["set", "poles", "xstar"])]
    pub solution: Option<PathBuf>,
    /// Random evaluation points for the off-set checks
    #[arg(long, value_name = "N", default_value_t = 1000)]
    pub samples: usize,
    /// Seed of the random evaluation points
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct AsymptoticsArgs {
    /// Interval union
    #[arg(long, value_name = "LITERAL", value_parser = parse_set, allow_hyphen_values = true)]
    pub set: CompactSet,
    /// Limit pole measure, e.g. "-0.05:0.5,inf:0.5"
    #[arg(long, value_name = "LITERAL", value_parser = parse_atoms, allow_hyphen_values = true)]
    pub atoms: Atoms,
    /// Pole sequence rule
    #[arg(long, value_enum, default_value_t = ModeArg::Periodic)]
    pub mode: ModeArg,
    /// Largest degree
    #[arg(long, value_name = "N", default_value_t = 40)]
    pub nmax: usize,
    /// Explicit degrees, e.g. "10,20,40" [default: n ≡ nmax mod period, or 1..=nmax]
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Reference point, or a ";"-separated list with one entry per n
    #[arg(long, value_name = "POINTS", default_value = "inf", value_parser = parse_xstar_rule, allow_hyphen_values = true)]
    pub xstar: XStarRule,
    /// Evaluation points, e.g. "2i;3"
    #[arg(long, value_name = "POINTS", value_parser = parse_point_list, allow_hyphen_values = true)]
    pub eval: Points,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Periodic,
    WeightedRotation,
}

impl From<ModeArg> for PoleMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Periodic => PoleMode::Periodic,
            ModeArg::WeightedRotation => PoleMode::WeightedRotation,
        }
    }
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct SelftestArgs {
    /// Seed of the random problem battery
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random problems
    #[arg(long, value_name = "N", default_value_t = 20)]
    pub count: usize,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Evaluation points in the complex plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Points(pub Vec<Complex64>);

impl Display for Points {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|z| format_complex(*z)).collect();
        f.write_str(&s.join(";"))
    }
}

/// Weighted atoms of the limit pole measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Atoms(pub Vec<(ExtPoint, f64)>);

impl Display for Atoms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|(c, w)| format!("{c}:{w}")).collect();
        f.write_str(&s.join(","))
    }
}

fn lift<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

fn parse_set(s: &str) -> std::result::Result<CompactSet, String> {
    lift(CompactSet::parse(s))
}

fn parse_poles(s: &str) -> std::result::Result<PoleDivisor, String> {
    lift(PoleDivisor::parse(s))
}

fn parse_point(s: &str) -> std::result::Result<ExtPoint, String> {
    lift(ExtPoint::parse(s))
}

fn parse_point_list(s: &str) -> std::result::Result<Points, String> {
    lift(parse_points(s)).map(Points)
}

fn parse_atoms(s: &str) -> std::result::Result<Atoms, String> {
    lift(PoleSequenceSpec::parse_atoms(s)).map(Atoms)
}

fn parse_xstar_rule(s: &str) -> std::result::Result<XStarRule, String> {
    if s.contains(';') {
        let pts = s
            .split(';')
            .map(|p| ExtPoint::parse(p.trim()))
            .collect::<Result<Vec<_>>>();
        lift(pts).map(XStarRule::PerN)
    } else {
        parse_point(s).map(XStarRule::Constant)
    }
}

fn render_xstar_rule(r: &XStarRule) -> String {
    match r {
        XStarRule::Constant(x) => x.to_string(),
        XStarRule::PerN(v) => v
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";"),
    }
}

/// Validated configuration, or the usage error naming the offending flag.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    RunConfig::try_parse_from(argv)
}

fn flag(out: &mut Vec<String>, name: &str, value: impl Display) {
    out.push(format!("--{name}"));
    out.push(value.to_string());
}

impl TolArgs {
    fn render(&self, out: &mut Vec<String>) {
        flag(out, "tol", self.tol);
        flag(out, "max-iter", self.max_iter);
        flag(out, "eps-pole", self.eps_pole);
    }
}

impl OutputArgs {
    fn render(&self, out: &mut Vec<String>) {
        if let Some(f) = self.format {
            flag(out, "out", f.literal());
        }
        if let Some(p) = &self.output {
            flag(out, "output", p.display());
        }
    }
}

impl RunConfig {
    /// Canonical argument vector; [`parse_args`] maps it back to `self`.
    pub fn to_args(&self) -> Vec<String> {
        let mut out = vec!["ratcheb".to_string()];
        match &self.command {
            Command::Solve(a) => {
                out.push("solve".into());
                flag(&mut out, "set", &a.set);
                flag(&mut out, "poles", &a.poles);
                flag(&mut out, "xstar", a.xstar);
                a.tol.render(&mut out);
                a.output.render(&mut out);
            }
            Command::Green(a) => {
                out.push("green".into());
                flag(&mut out, "set", &a.set);
                flag(&mut out, "pole", a.pole);
                flag(&mut out, "eval", &a.eval);
                a.output.render(&mut out);
            }
            Command::Verify(a) => {
                out.push("verify".into());
                if let Some(s) = &a.set {
                    flag(&mut out, "set", s);
                }
                if let Some(p) = &a.poles {
                    flag(&mut out, "poles", p);
                }
                if let Some(x) = a.xstar {
                    flag(&mut out, "xstar", x);
                }
                if let Some(p) = &a.solution {
                    flag(&mut out, "solution", p.display());
                }
                flag(&mut out, "samples", a.samples);
                flag(&mut out, "seed", a.seed);
                a.tol.render(&mut out);
                a.output.render(&mut out);
            }
            Command::Asymptotics(a) => {
                out.push("asymptotics".into());
                flag(&mut out, "set", &a.set);
                flag(&mut out, "atoms", &a.atoms);
                let mode = match a.mode {
                    ModeArg::Periodic => "periodic",
                    ModeArg::WeightedRotation => "weighted-rotation",
                };
                flag(&mut out, "mode", mode);
                flag(&mut out, "nmax", a.nmax);
                if let Some(ns) = &a.n_list {
                    let s: Vec<String> = ns.iter().map(usize::to_string).collect();
                    flag(&mut out, "n-list", s.join(","));
                }
                flag(&mut out, "xstar", render_xstar_rule(&a.xstar));
                flag(&mut out, "eval", &a.eval);
                a.tol.render(&mut out);
                a.output.render(&mut out);
            }
            Command::Selftest(a) => {
                out.push("selftest".into());
                flag(&mut out, "seed", a.seed);
                flag(&mut out, "count", a.count);
                a.tol.render(&mut out);
                a.output.render(&mut out);
            }
        }
        out
    }
}

/// Rendered output and the exit code it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub text: String,
    pub code: i32,
}

impl Artifact {
    fn new(text: String, pass: bool) -> Self {
        Artifact {
            text,
            code: if pass { EXIT_OK } else { EXIT_FAILURE },
        }
    }
}

/// Exit code for an error escaping a subcommand.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Argument(_) | Error::Domain(_) => EXIT_USAGE,
        Error::NonConvergence { .. } | Error::Numeric(_) | Error::Integrity(_) => EXIT_FAILURE,
    }
}

#[derive(Serialize)]
struct SolveDoc<'a> {
    status: &'static str,
    #[serde(flatten)]
    solution: &'a Solution,
}

#[derive(Serialize)]
struct FailureDoc<'a> {
    status: &'static str,
    problem: &'a Problem,
    error: String,
}

#[derive(Serialize)]
struct GreenValue {
    z: String,
    z_re: f64,
    z_im: f64,
    #[serde(rename = "G")]
    g: f64,
}

#[derive(Serialize)]
struct GreenDoc {
    set: String,
    pole: ExtPoint,
    genus: usize,
    max_period_residual: f64,
    critical_points: Vec<ExtPoint>,
    values: Vec<GreenValue>,
}

#[derive(Serialize)]
struct AsymptoticsDoc<'a> {
    set: String,
    atoms: String,
    mode: PoleMode,
    ns: &'a [usize],
    report: &'a ConvergenceReport,
}

pub const ASYMPTOTICS_HEADER: [&str; 8] = [
    "n",
    "z",
    "h_n",
    "target",
    "error",
    "v_n",
    "cauchy_increment",
    "ks_distance",
];

fn solve_samples(sol: &Solution) -> Result<String> {
    let (lo, hi) = sol.problem.set.hull()?;
    let pad = 0.25 * (hi - lo);
    let (a, b) = (lo - pad, hi + pad);
    let poles: Vec<f64> = sol
        .problem
        .poles
        .support()
        .iter()
        .filter_map(|c| c.finite())
        .collect();
    let rows: Vec<Vec<Cell>> = (0..CSV_SAMPLES)
        .map(|k| a + (b - a) * k as f64 / (CSV_SAMPLES - 1) as f64)
        .filter(|x| poles.iter().all(|c| (x - c).abs() > 1e-9 * (b - a)))
        .map(|x| vec![Cell::Num(x), Cell::Num(sol.f.eval_real(x))])
        .collect();
    Ok(csv_table(&["x", "F"], &rows))
}

fn run_solve(a: &SolveArgs) -> Result<Artifact> {
    let p = Problem::new(a.set.clone(), a.poles.clone(), a.xstar)?;
    let format = a.output.format.unwrap_or(Format::Json);
    match solve(&p, &a.tol.options()) {
        Ok(sol) => {
            let text = match format {
                Format::Json => json_document(
                    "solve",
                    &SolveDoc {
                        status: "ok",
                        solution: &sol,
                    },
                )?,
                Format::Csv => solve_samples(&sol)?,
            };
            Ok(Artifact::new(text, true))
        }
        Err(e) if exit_code(&e) == EXIT_FAILURE => {
            let text = match format {
                Format::Json => json_document(
                    "solve",
                    &FailureDoc {
                        status: "failed",
                        problem: &p,
                        error: e.to_string(),
                    },
                )?,
                Format::Csv => csv_table(&["x", "F"], &[]),
            };
            eprintln!("error: {e}");
            Ok(Artifact::new(text, false))
        }
        Err(e) => Err(e),
    }
}

fn run_green(a: &GreenArgs) -> Result<Artifact> {
    let model = build_green(&a.set, a.pole)?;
    let values: Vec<GreenValue> = a
        .eval
        .0
        .iter()
        .map(|&z| GreenValue {
            z: format_complex(z),
            z_re: z.re,
            z_im: z.im,
            g: model.eval(z),
        })
        .collect();
    let text = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = values
                .iter()
                .map(|v| vec![Cell::Num(v.z_re), Cell::Num(v.z_im), Cell::Num(v.g)])
                .collect();
            csv_table(&["z_re", "z_im", "G"], &rows)
        }
        Format::Json => json_document(
            "green",
            &GreenDoc {
                set: a.set.to_literal(),
                pole: a.pole,
                genus: model.genus(),
                max_period_residual: model.max_period_residual(),
                critical_points: model.critical_points().to_vec(),
                values,
            },
        )?,
    };
    Ok(Artifact::new(text, true))
}

fn run_verify(a: &VerifyArgs) -> Result<Artifact> {
    let opts = a.tol.options();
    let sol = match (&a.solution, &a.set, &a.poles, a.xstar) {
        (Some(path), ..) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
            load_solution(&text, opts.eps_pole)?
        }
        (None, Some(set), Some(poles), Some(x)) => {
            solve(&Problem::new(set.clone(), poles.clone(), x)?, &opts)?
        }
        _ => {
            return Err(Error::Argument(
                "give --set, --poles and --xstar, or --solution".into(),
            ))
        }
    };
    let vopts = VerifyOptions {
        eps_pole: opts.eps_pole,
        samples: a.samples,
        seed: a.seed,
    };
    let report = verify_solution(&sol, &vopts);
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_document("verify", &report)?,
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = report
                .checks
                .iter()
                .map(|c| {
                    vec![
                        Cell::Text(c.name.into()),
                        Cell::Text(c.pass.to_string()),
                        c.margin.into(),
                        Cell::Text(c.note.clone().unwrap_or_default()),
                    ]
                })
                .collect();
            csv_table(&["check", "pass", "margin", "note"], &rows)
        }
    };
    Ok(Artifact::new(text, report.pass))
}

/// One CSV row per `(n, z)` of the root table, joined with the modulus and
/// zero-measure rows of the same `n`.
pub fn asymptotics_rows(report: &ConvergenceReport) -> Vec<Vec<Cell>> {
    report
        .root_rows
        .iter()
        .map(|r| {
            let sz = report.szego_rows.iter().find(|s| s.n == r.n && s.z == r.z);
            let ks = report
                .zero_rows
                .iter()
                .find(|k| k.n == r.n)
                .map(|k| k.ks_distance);
            vec![
                Cell::Int(r.n),
                Cell::Text(r.z.clone()),
                Cell::Num(r.h_n),
                Cell::Num(r.target),
                Cell::Num(r.error),
                sz.map(|s| s.v_n).into(),
                sz.and_then(|s| s.cauchy_increment).into(),
                ks.into(),
            ]
        })
        .collect()
}

fn run_asymptotics(a: &AsymptoticsArgs) -> Result<Artifact> {
    let spec = PoleSequenceSpec::new(a.mode.into(), a.atoms.0.clone(), a.xstar.clone())?;
    let ns: Vec<usize> = match &a.n_list {
        Some(ns) => ns.clone(),
        None if spec.mode == PoleMode::Periodic => residue_class(a.nmax, spec.period()),
        None => (1..=a.nmax).collect(),
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::Argument("degrees must be positive".into()));
    }
    let report = run_battery(&a.set, &spec, &ns, &a.eval.0, &a.tol.options())?;
    if let Some(f) = &report.failure {
        eprintln!("error: solve failed at n = {}: {}", f.n, f.error);
    }
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Csv => csv_table(&ASYMPTOTICS_HEADER, &asymptotics_rows(&report)),
        Format::Json => json_document(
            "asymptotics",
            &AsymptoticsDoc {
                set: a.set.to_literal(),
                atoms: a.atoms.to_string(),
                mode: spec.mode,
                ns: &ns,
                report: &report,
            },
        )?,
    };
    Ok(Artifact::new(text, report.failure.is_none()))
}

fn run_selftest(a: &SelftestArgs) -> Result<Artifact> {
    let report = selftest(a.seed, a.count, &a.tol.options());
    let text = match a.output.format.unwrap_or(Format::Json) {
        Format::Json => json_document("selftest", &report)?,
        Format::Csv => {
            let rows: Vec<Vec<Cell>> = report
                .cases
                .iter()
                .map(|c| {
                    vec![
                        Cell::Text(c.name.clone()),
                        Cell::Text(c.pass.to_string()),
                        Cell::Text(c.detail.clone()),
                    ]
                })
                .collect();
            csv_table(&["case", "pass", "detail"], &rows)
        }
    };
    Ok(Artifact::new(text, report.pass))
}

/// Runs a parsed configuration without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<Artifact> {
    match &cfg.command {
        Command::Solve(a) => run_solve(a),
        Command::Green(a) => run_green(a),
        Command::Verify(a) => run_verify(a),
        Command::Asymptotics(a) => run_asymptotics(a),
        Command::Selftest(a) => run_selftest(a),
    }
}

fn output_path(cfg: &RunConfig) -> Option<&PathBuf> {
    let out = match &cfg.command {
        Command::Solve(a) => &a.output,
        Command::Green(a) => &a.output,
        Command::Verify(a) => &a.output,
        Command::Asymptotics(a) => &a.output,
        Command::Selftest(a) => &a.output,
    };
    out.output.as_ref()
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    // A pool configured earlier in the same process is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `argv`, runs the subcommand, writes its artifact and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_USAGE;
    }
    let artifact = match execute(&cfg) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let written = match output_path(&cfg) {
        Some(path) => std::fs::write(path, &artifact.text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(artifact.text.as_bytes())
                .map_err(|e| format!("cannot write output: {e}"))
        }
    };
    match written {
        Ok(()) => artifact.code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> RunConfig {
        parse_args(std::iter::once("ratcheb").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parse_examples() {
        let c = cfg(&["solve", "--set", "[-1,1]", "--poles", "2:1", "--xstar", "2"]);
        let Command::Solve(a) = &c.command else {
            panic!()
        };
        assert_eq!(a.poles, PoleDivisor::parse("2:1").unwrap());
        assert_eq!(a.xstar, ExtPoint::Finite(2.0));
        assert_eq!(a.tol.tol, 1e-10);
        let c = cfg(&["green", "--set", "[-1,1]", "--pole", "inf", "--eval", "2;3"]);
        let Command::Green(a) = &c.command else {
            panic!()
        };
        assert_eq!(
            a.eval.0,
            vec![Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0)]
        );
        assert_eq!(a.pole, ExtPoint::Infinity);
    }

    #[test]
    fn usage_errors() {
        let e = parse_args(["ratcheb", "solve", "--set", "[1,-1]"]).unwrap_err();
        assert!(e.to_string().contains("--set"), "{e}");
        assert!(parse_args(["ratcheb", "solve", "--bogus"]).is_err());
        assert_eq!(run(["ratcheb", "solve", "--set", "[1,-1]"]), EXIT_USAGE);
        assert!(parse_args([
            "ratcheb",
            "verify",
            "--solution",
            "a.json",
            "--set",
            "[-1,1]"
        ])
        .is_err());
    }

    #[test]
    fn render_round_trip() {
        let configs = [
            cfg(&[
                "solve",
                "--set",
                "[-1,-0.3];[0.2,1]",
                "--poles",
                "inf:2,-0.05:1",
                "--xstar",
                "inf",
                "--out",
                "csv",
            ]),
            cfg(&[
                "green",
                "--set",
                "[-1,1]",
                "--pole",
                "inf",
                "--eval",
                "2i;3;1.5-0.25i",
                "--output",
                "g.csv",
            ]),
            cfg(&["verify", "--solution", "s.json", "--seed", "4"]),
            cfg(&[
                "verify", "--set", "[-1,1]", "--poles", "2:1", "--xstar", "2", "--tol", "1e-12",
            ]),
            cfg(&[
                "asymptotics",
                "--set",
                "[-1,-0.3];[0.2,1]",
                "--atoms",
                "-0.05:0.5,inf:0.5",
                "--n-list",
                "10,20,40",
                "--xstar",
                "inf;2",
                "--eval",
                "2i;3",
            ]),
            cfg(&["selftest", "--seed", "9", "--count", "3"]),
        ];
        for c in configs {
            let args = c.to_args();
            assert_eq!(parse_args(&args).unwrap(), c, "{args:?}");
            assert_eq!(parse_args(&args).unwrap().to_args(), args);
        }
    }

    #[test]
    fn solve_t3_json() {
        let a = execute(&cfg(&[
            "solve", "--set", "[-1,1]", "--poles", "inf:3", "--xstar", "inf",
        ]))
        .unwrap();
        assert_eq!(a.code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&a.text).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["status"], "ok");
        assert!((v["m"].as_f64().unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(v["alternation"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn non_convergence_still_reports() {
        let a = execute(&cfg(&[
            "solve",
            "--set",
            "[-1,-0.3];[0.2,1]",
            "--poles",
            "inf:6,-0.05:4",
            "--xstar",
            "inf",
            "--max-iter",
            "1",
        ]))
        .unwrap();
        assert_eq!(a.code, EXIT_FAILURE);
        let v: serde_json::Value = serde_json::from_str(&a.text).unwrap();
        assert_eq!(v["status"], "failed");
    }

    #[test]
    fn green_csv() {
        let a = execute(&cfg(&[
            "green", "--set", "[-1,1]", "--pole", "inf", "--eval", "2;3",
        ]))
        .unwrap();
        let lines: Vec<&str> = a.text.lines().collect();
        assert_eq!(lines[0], "z_re,z_im,G");
        let g: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!((g - 2.0_f64.acosh()).abs() < 1e-9);
    }
}
