//! Command-line front end: evaluates gauges, projects points, traces shadow
//! boundaries to CSV/SVG, runs the oracle suite, and reproduces the quartic
//! ball example by its two independent solution paths.
//!
//! Exit codes are a stable scripting contract: 0 success, 2 configuration or
//! validation error, 3 solver non-convergence, 4 I/O failure, 5 verification
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use convex_shadow::oracle::{polyline_hausdorff, run_verification, OracleReport};
use convex_shadow::quartic;
use convex_shadow::schema::{OutputFormat, ProblemConfig};
use convex_shadow::{
    boundary_trace, BoundaryPolyline, ConvexBody, Error as ShadowError, FiberQuery, SolverOptions,
};
use nalgebra::DVector;

#[derive(Parser)]
#[command(name = "convex-shadow", version, about = "Orthogonal shadows of convex bodies")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Problem definition file (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (trace target, example file stem, verify CSV)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Number of boundary samples
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Stationarity tolerance override
    #[arg(long, global = true)]
    tol_grad: Option<f64>,

    /// Membership tolerance override
    #[arg(long, global = true)]
    tol_member: Option<f64>,

    /// Seed for the verification suite's sampling
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output format override
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Svg => OutputFormat::Svg,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the gauge of an ambient point
    Gauge {
        /// Comma-separated coordinates, e.g. "1,1,1"
        point: String,
    },
    /// Project a point and report the shadow gauge at its image
    Project {
        point: String,
        /// Interpret the point as subspace coordinates instead of ambient ones
        #[arg(long)]
        in_plane: bool,
    },
    /// Test whether a point lies in the shadow
    Member {
        point: String,
        #[arg(long)]
        in_plane: bool,
    },
    /// Trace the boundary of a 2-D shadow to CSV and/or SVG
    Trace,
    /// Run the independent oracle suite against the configured problem
    Verify,
    /// Reproduce the quartic-ball shadow by two independent paths
    ExampleQuartic,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Solver(String),
    Io(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
            CliError::Verification(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Solver(m) | CliError::Io(m)
            | CliError::Verification(m) => m,
        }
    }
}

impl From<ShadowError> for CliError {
    fn from(e: ShadowError) -> Self {
        match e {
            ShadowError::NonConvergence(_) => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gauge { point } => cmd_gauge(&cli, point),
        Command::Project { point, in_plane } => cmd_project(&cli, point, *in_plane, true),
        Command::Member { point, in_plane } => cmd_project(&cli, point, *in_plane, false),
        Command::Trace => cmd_trace(&cli),
        Command::Verify => cmd_verify(&cli),
        Command::ExampleQuartic => cmd_example_quartic(&cli),
    }
}

struct Problem {
    config: ProblemConfig,
    body: ConvexBody,
    opts: SolverOptions,
}

fn load_problem(cli: &Cli) -> Result<Problem, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --config <path>".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let config: ProblemConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let body = config.build_body()?;
    let mut opts = SolverOptions::default();
    if let Some(t) = &config.tolerances {
        opts = t.apply(&opts)?;
    }
    if let Some(t) = cli.tol_grad {
        if t <= 0.0 || t.is_nan() {
            return Err(CliError::Config("--tol-grad must be positive".into()));
        }
        opts.tol_grad = t;
    }
    if let Some(t) = cli.tol_member {
        if t <= 0.0 || t.is_nan() {
            return Err(CliError::Config("--tol-member must be positive".into()));
        }
        opts.tol_member = t;
    }
    Ok(Problem { config, body, opts })
}

fn parse_point(s: &str) -> Result<DVector<f64>, CliError> {
    let vals = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|e| CliError::Config(format!("cannot parse point '{s}': {e}")))?;
    Ok(DVector::from_vec(vals))
}

/// Fixed-point with 15 fractional digits, trailing zeros trimmed. Prints
/// integers bare ("5", "0") and normalizes negative zero.
fn format_scalar(x: f64) -> String {
    let mut s = format!("{x:.15}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

fn format_vector(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_scalar(*x)).collect();
    format!("({})", parts.join(", "))
}

fn cmd_gauge(cli: &Cli, point: &str) -> Result<(), CliError> {
    let problem = load_problem(cli)?;
    let x = parse_point(point)?;
    if x.len() != problem.body.dim() {
        return Err(CliError::Config(format!(
            "point has {} coordinates, body lives in dimension {}",
            x.len(),
            problem.body.dim()
        )));
    }
    println!("{}", format_scalar(problem.body.gauge(&x)));
    Ok(())
}

fn cmd_project(cli: &Cli, point: &str, in_plane: bool, full_report: bool) -> Result<(), CliError> {
    let problem = load_problem(cli)?;
    let frame = problem.config.build_frame(&problem.body)?;
    let x = parse_point(point)?;
    let y = if in_plane {
        if x.len() != frame.subspace_dim() {
            return Err(CliError::Config(format!(
                "point has {} coordinates, subspace has dimension {}",
                x.len(),
                frame.subspace_dim()
            )));
        }
        x
    } else {
        if x.len() != frame.dim() {
            return Err(CliError::Config(format!(
                "point has {} coordinates, ambient space has dimension {}",
                x.len(),
                frame.dim()
            )));
        }
        frame.split(&x).0
    };
    let query = FiberQuery::new(&problem.body, &frame, y.clone())?;
    let res = query.minimize(&problem.opts);
    if !res.converged {
        return Err(CliError::Solver(format!(
            "fiber solve stalled at gradient norm {:.3e} after {} iterations",
            res.grad_norm, res.iterations
        )));
    }
    let member = res.t_star <= 1.0 + problem.opts.tol_member;
    if full_report {
        println!("y = {}", format_vector(&y));
        println!("gauge = {}", format_scalar(res.t_star));
        println!("w* = {}", format_vector(&res.w_star));
        println!("grad_norm = {:.3e}", res.grad_norm);
        println!("member: {}", if member { "yes" } else { "no" });
    } else {
        println!("gauge = {}", format_scalar(res.t_star));
        println!("member: {}", if member { "yes" } else { "no" });
    }
    Ok(())
}

fn cmd_trace(cli: &Cli) -> Result<(), CliError> {
    let problem = load_problem(cli)?;
    let frame = problem.config.build_frame(&problem.body)?;
    let n = cli
        .samples
        .or(problem.config.n_samples)
        .unwrap_or(360);
    let trace = boundary_trace(&problem.body, &frame, n, &problem.opts)?;

    let format = cli
        .format
        .map(OutputFormat::from)
        .or(problem.config.output.as_ref().map(|o| o.format))
        .unwrap_or(OutputFormat::Csv);
    let path = cli
        .out
        .clone()
        .or_else(|| problem.config.output.as_ref().map(|o| PathBuf::from(&o.path)))
        .ok_or_else(|| {
            CliError::Config("no output path: pass --out or set output.path in the config".into())
        })?;

    match format {
        OutputFormat::Csv => write_file(&path, &trace_csv(&trace))?,
        OutputFormat::Svg => write_file(&path, &curves_svg(&[(&trace, "#1f77b4")]))?,
        OutputFormat::Both => {
            let stem = strip_output_extension(&path);
            write_file(&stem.with_extension("csv"), &trace_csv(&trace))?;
            write_file(&stem.with_extension("svg"), &curves_svg(&[(&trace, "#1f77b4")]))?;
        }
    }
    Ok(())
}

fn cmd_verify(cli: &Cli) -> Result<(), CliError> {
    let problem = load_problem(cli)?;
    let frame = problem.config.build_frame(&problem.body)?;
    let fd_step = problem.config.tolerances.as_ref().and_then(|t| t.fd_step);
    let reports = run_verification(&problem.body, &frame, &problem.opts, fd_step, cli.seed);

    println!(
        "{:<26} {:>8} {:>14} {:>14}  result",
        "check", "samples", "max abs err", "max rel err"
    );
    for rep in &reports {
        println!(
            "{:<26} {:>8} {:>14} {:>14}  {}",
            rep.name,
            rep.n_samples,
            format!("{:.3e}", rep.max_abs_err),
            format!("{:.3e}", rep.max_rel_err),
            if rep.passed { "pass" } else { "FAIL" }
        );
        if !rep.passed && !rep.worst_case_input.is_empty() {
            let coords: Vec<String> = rep
                .worst_case_input
                .iter()
                .map(|x| format!("{x}"))
                .collect();
            println!("    worst input: ({})", coords.join(", "));
        }
    }

    if let Some(out) = &cli.out {
        write_file(out, &reports_csv(&reports))?;
    }

    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Verification(format!(
            "{failed} of {} oracle checks failed",
            reports.len()
        )));
    }
    Ok(())
}

fn cmd_example_quartic(cli: &Cli) -> Result<(), CliError> {
    let n = cli.samples.unwrap_or(720);
    let analytic = quartic::boundary_trace(n)?;

    let body = ConvexBody::pnorm_ball(4.0, 3).expect("p = 4 in R^3 is valid");
    let frame = quartic::section_frame();
    let mut opts = SolverOptions::default();
    if let Some(t) = cli.tol_grad {
        if t <= 0.0 || t.is_nan() {
            return Err(CliError::Config("--tol-grad must be positive".into()));
        }
        opts.tol_grad = t;
    }
    let numeric = boundary_trace(&body, &frame, n, &opts)?;

    let stem = strip_output_extension(
        cli.out.as_deref().unwrap_or(Path::new("example-quartic")),
    );
    let analytic_path = path_with_suffix(&stem, "-analytic.csv");
    let numeric_path = path_with_suffix(&stem, "-numeric.csv");
    write_file(&analytic_path, &trace_csv(&analytic))?;
    write_file(&numeric_path, &trace_csv(&numeric))?;
    write_file(
        &stem.with_extension("svg"),
        &curves_svg(&[(&analytic, "#1f77b4"), (&numeric, "#d62728")]),
    )?;

    // axis radii from the closed form: the shadow gauge along a unit
    // direction is eta at the Cardano root, and the radius is its reciprocal
    let r_u = 1.0 / quartic::eta_uvw(1.0, 0.0, quartic::cubic_solve(1.0, 0.0).w_star);
    let r_v = 1.0 / quartic::eta_uvw(0.0, 1.0, quartic::cubic_solve(0.0, 1.0).w_star);
    let discrepancy = polyline_hausdorff(&analytic, &numeric);
    println!("u-axis radius = {}", format_scalar(r_u));
    println!("v-axis radius = {}", format_scalar(r_v));
    println!("max discrepancy = {discrepancy:.3e}");

    if discrepancy > 1e-6 {
        return Err(CliError::Verification(format!(
            "closed-form and minimization traces diverge by {discrepancy:.3e}"
        )));
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Drops a trailing .csv/.svg so "--out shadow.csv" and "--out shadow" name
/// the same artifact family; other extensions are kept as part of the stem.
fn strip_output_extension(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("svg") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn path_with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut name = stem.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    stem.with_file_name(name)
}

/// CSV rows theta,u,v at theta_k = 2 pi k / n; 17 significant digits round-
/// trip f64 exactly, LF endings keep the bytes platform-independent.
fn trace_csv(trace: &BoundaryPolyline) -> String {
    let n = trace.points.len();
    let mut s = String::from("theta,u,v\n");
    for (k, p) in trace.points.iter().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64);
        s.push_str(&format!("{theta:.16e},{:.16e},{:.16e}\n", p[0], p[1]));
    }
    s
}

fn reports_csv(reports: &[OracleReport]) -> String {
    let mut s = String::from("check,samples,max_abs_err,max_rel_err,passed\n");
    for r in reports {
        s.push_str(&format!(
            "{},{},{:.16e},{:.16e},{}\n",
            r.name, r.n_samples, r.max_abs_err, r.max_rel_err, r.passed
        ));
    }
    s
}

/// One closed path per curve, v axis flipped (SVG y grows downward),
/// viewBox padded by 5% of the larger extent, stroke 0.5% of it.
fn curves_svg(curves: &[(&BoundaryPolyline, &str)]) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for (poly, _) in curves {
        for p in &poly.points {
            min_x = min_x.min(p[0]);
            max_x = max_x.max(p[0]);
            min_y = min_y.min(-p[1]);
            max_y = max_y.max(-p[1]);
        }
    }
    let extent = (max_x - min_x).max(max_y - min_y);
    let margin = 0.05 * extent;
    let stroke = 0.005 * extent;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        min_x - margin,
        min_y - margin,
        max_x - min_x + 2.0 * margin,
        max_y - min_y + 2.0 * margin
    );
    for (poly, color) in curves {
        s.push_str("  <path d=\"");
        for (i, p) in poly.points.iter().enumerate() {
            let cmd = if i == 0 { "M" } else { " L" };
            s.push_str(&format!("{cmd} {} {}", p[0], -p[1]));
        }
        s.push_str(&format!(
            " Z\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{stroke}\"/>\n"
        ));
    }
    s.push_str("</svg>\n");
    s
}
