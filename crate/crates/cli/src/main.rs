//! `qeforge`: run verification scenarios, curvature tables, eigenspace scans
//! and ODE integrations from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 parse or configuration
//! error, 3 evaluation singularity.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qeforge_core::affine::models::s_kappa;
use qeforge_core::affine::ode::{rk4_fixed, AnsatzOde, FhatSystem, OdeSystem, Trajectory};
use qeforge_core::affine::dim_e;
use qeforge_core::affine::AffineSurface;
use qeforge_core::duality::weyl_blocks;
use qeforge_core::field::expr_field;
use qeforge_core::loaders::{apply_tolerances, metric_from_json, scenario_box, scenario_from_json, surface_from_json};
use qeforge_core::tensor::{sample_points, CoordBox, MetricField};
use qeforge_core::verifier::report::{run_scenario, to_json, to_text, RunConfig};
use qeforge_core::verifier::scenarios::{build, Params, Subject, SCENARIO_IDS};
use qeforge_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qeforge", version, about = "Quasi-Einstein verification for Walker and affine geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario's check suite at sampled points.
    Verify(VerifyArgs),
    /// Curvature, Weyl half norms and scalar curvature at points of a metric.
    Curvature(CurvatureArgs),
    /// Scan dim E(μ) of an affine surface over a μ-grid.
    Eigdim(EigdimArgs),
    /// Integrate the ansatz ODE (`ansatz`) or the potential ODE (`fhat`) and print CSV.
    Ode(OdeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    points: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct Output {
    /// Write the JSON report to PATH (stdout when PATH is omitted or `-`).
    #[arg(long, value_name = "PATH", num_args = 0..=1, default_missing_value = "-")]
    json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in scenario id or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[command(flatten)]
    sampling: Sampling,
    /// Jet order for the metric (raised automatically for third-order checks).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=4))]
    order: u8,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_identity: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CurvatureArgs {
    /// Metric JSON file.
    #[arg(long, conflicts_with = "scenario")]
    metric: Option<PathBuf>,
    /// Use the metric of a built-in scenario.
    #[arg(long)]
    scenario: Option<String>,
    /// Evaluation point, comma separated; repeatable.
    #[arg(long = "at", value_name = "X,Y,...", allow_hyphen_values = true)]
    at: Vec<String>,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=4))]
    order: u8,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct EigdimArgs {
    /// Surface JSON file.
    #[arg(long, conflicts_with = "kappa")]
    surface: Option<PathBuf>,
    /// Use the surface S_κ instead of a file.
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    /// μ-grid as lo:hi:step.
    #[arg(long, value_name = "LO:HI:STEP", allow_hyphen_values = true)]
    mu_range: Option<String>,
    /// A single μ instead of a grid.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_range")]
    mu: Option<f64>,
    /// Base point (defaults to the centre of the surface domain).
    #[arg(long = "at", value_name = "X1,X2", allow_hyphen_values = true)]
    at: Option<String>,
    /// Prolongation order.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(2..=4))]
    order: u8,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum OdeKind {
    Ansatz,
    Fhat,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long, value_enum)]
    system: OdeKind,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Initial data at t0: `γ,γ',γ''` for ansatz, `f,f'` for fhat.
    #[arg(long, allow_hyphen_values = true)]
    init: String,
    #[arg(long, allow_hyphen_values = true)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long, default_value_t = 1024)]
    steps: usize,
    /// v(t) for the fhat system.
    #[arg(long, default_value = "0")]
    v: String,
    /// Write the trajectory CSV to PATH instead of stdout.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

enum Failure {
    Verification,
    Engine(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Engine(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Curvature(a) => curvature(a),
        Command::Eigdim(a) => eigdim(a),
        Command::Ode(a) => ode(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Engine(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_singular() { 3 } else { 2 })
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

/// Writes `json` to the `--json` target and `text` or `json` to stdout per `--format`.
fn emit(out: &Output, json: &str, text: &str) -> CmdResult {
    let mut stdout_done = false;
    match out.json.as_deref() {
        Some(p) if p == Path::new("-") => {
            print!("{json}");
            stdout_done = true;
        }
        Some(p) => fs::write(p, json).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))?,
        None => {}
    }
    if !stdout_done {
        match out.format {
            Format::Json => print!("{json}"),
            Format::Text => print!("{text}"),
        }
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("'{t}' in point '{s}' is not a number")))
        })
        .collect()
}

fn verify(a: VerifyArgs) -> CmdResult {
    let mut config = RunConfig {
        points: a.sampling.points as usize,
        seed: a.sampling.seed,
        order: a.order as usize,
        ..RunConfig::default()
    };
    let builtin = SCENARIO_IDS.contains(&a.scenario.as_str());
    let (id, mut params, file_box, file_config) = if builtin {
        (a.scenario.clone(), Params::new(), None, None)
    } else if Path::new(&a.scenario).is_file() {
        let text = read(Path::new(&a.scenario))?;
        let input = scenario_from_json(&text, &config)?;
        let raw: Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        (input.scenario.id.clone(), input.params, raw.get("box").cloned(), Some(input.config))
    } else {
        return Err(Error::Config(format!(
            "'{}' is neither a scenario id ({}) nor a readable file",
            a.scenario,
            SCENARIO_IDS.join(", ")
        ))
        .into());
    };
    // explicit file values win over flag defaults; explicit tolerance flags win over both
    if let Some(c) = file_config {
        config = c;
    }
    if let Some(v) = a.mu {
        params.insert("mu".into(), v.into());
    }
    if let Some(v) = a.kappa {
        params.insert("kappa".into(), v.into());
    }
    let mut tol = std::collections::BTreeMap::new();
    if let Some(v) = a.tol_residual {
        tol.insert("residual".to_string(), v);
    }
    if let Some(v) = a.tol_identity {
        tol.insert("identity".to_string(), v);
    }
    apply_tolerances(&mut config.tol, &tol)?;
    let bx = file_box.map(|v| scenario_box(&id, &params, &v)).transpose()?;
    let sc = build(&id, &params, bx)?;
    let report = run_scenario(&sc, &config)?;
    emit(&a.out, &to_json(&report)?, &to_text(&report))?;
    if report.aggregate.pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn curvature(a: CurvatureArgs) -> CmdResult {
    let (metric, bx, file_points): (MetricField, Option<CoordBox>, Option<Vec<Vec<f64>>>) = match (&a.metric, &a.scenario) {
        (Some(p), _) => {
            let m = metric_from_json(&read(p)?)?;
            (m.metric, m.sample_box, m.points)
        }
        (None, Some(id)) => {
            let sc = build(id, &Params::new(), None)?;
            match sc.subject {
                Subject::Metric { instance, orientation } => {
                    (instance.metric.with_orientation(orientation), Some(sc.sample_box), None)
                }
                Subject::Surface(_) => {
                    return Err(Error::Config(format!("scenario '{id}' has no metric")).into());
                }
            }
        }
        (None, None) => return Err(Error::Config("curvature needs --metric or --scenario".into()).into()),
    };
    let points = if !a.at.is_empty() {
        a.at.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?
    } else if let Some(p) = file_points {
        p
    } else if let Some(bx) = &bx {
        sample_points(bx, a.sampling.points as usize, a.sampling.seed, |_| true)?
    } else {
        return Err(Error::Config("no points: pass --at, or give the metric file points or a box".into()).into());
    };
    let mut rows = Vec::new();
    let mut text = format!(
        "{:<36} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
        "point", "tau", "max|ricci|", "max|R|", "|W+|", "|W-|"
    );
    for p in &points {
        let geo = metric.geometry(p, a.order as usize).map_err(|e| e.at_point(p))?;
        let pack = geo.pack().map_err(|e| e.at_point(p))?;
        let blocks = if metric.dim == 4 {
            Some(weyl_blocks(&geo, metric.orientation).map_err(|e| e.at_point(p))?)
        } else {
            None
        };
        let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6e}"));
        let pt: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
        text.push_str(&format!(
            "{:<36} {:>14.6e} {:>14.6e} {:>14.6e} {:>14} {:>14}\n",
            format!("({})", pt.join(", ")),
            pack.scalar,
            max_abs(&pack.ricci),
            max_abs(&pack.riemann),
            fmt_opt(blocks.as_ref().map(|b| b.w_plus_norm)),
            fmt_opt(blocks.as_ref().map(|b| b.w_minus_norm)),
        ));
        rows.push(json!({
            "pack": pack,
            "tau": pack.scalar,
            "w_plus_norm": blocks.as_ref().map(|b| b.w_plus_norm),
            "w_minus_norm": blocks.as_ref().map(|b| b.w_minus_norm),
        }));
    }
    let doc = json!({"dim": metric.dim, "coords": metric.coords, "orientation": metric.orientation, "points": rows});
    emit(&a.out, &to_json(&doc)?, &text)
}

/// Parses `lo:hi:step` into grid values.
fn mu_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("--mu-range '{s}' is not lo:hi:step")))?;
    let [lo, hi, step] = nums[..] else {
        return Err(Error::Config(format!("--mu-range '{s}' is not lo:hi:step")));
    };
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::Config(format!("--mu-range needs lo ≤ hi and step > 0, got '{s}'")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(Error::Config(format!("--mu-range '{s}' has more than 100000 values")));
    }
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn eigdim(a: EigdimArgs) -> CmdResult {
    let surface: AffineSurface = match (&a.surface, a.kappa) {
        (Some(p), _) => surface_from_json(&read(p)?)?,
        (None, Some(k)) => s_kappa(k, CoordBox::new(&[(0.5, 2.0), (0.5, 2.0)])?)?,
        (None, None) => return Err(Error::Config("eigdim needs --surface or --kappa".into()).into()),
    };
    let grid = match (&a.mu_range, a.mu) {
        (Some(r), _) => mu_grid(r)?,
        (None, Some(m)) => vec![m],
        (None, None) => return Err(Error::Config("eigdim needs --mu-range or --mu".into()).into()),
    };
    let point = match &a.at {
        Some(s) => parse_point(s)?,
        None => (0..2).map(|i| 0.5 * (surface.domain.lo[i] + surface.domain.hi[i])).collect(),
    };
    if point.len() != 2 {
        return Err(Error::Config(format!("surface point needs 2 coordinates, got {}", point.len())).into());
    }
    let mut rows = Vec::new();
    let mut text = format!("surface {} at ({}, {}), order {}\n", surface.label, point[0], point[1], a.order);
    text.push_str(&format!("{:>12} {:>4} {:>4} {:>12}  singular values\n", "mu", "dim", "rank", "min/max"));
    let mut prev: Option<usize> = None;
    for mu in grid {
        let r = dim_e(&surface, &point, mu, a.order as usize).map_err(|e| e.at_point(&point))?;
        let sv = &r.singular_values;
        // relative size of the smallest singular value; a clean jump shows
        // up as a value far below the rank threshold
        let gap = match (sv.first(), sv.last()) {
            (Some(&top), Some(&low)) if top > 0.0 => Some(low / top),
            _ => None,
        };
        let jump = prev.is_some_and(|d| d != r.dim_e);
        prev = Some(r.dim_e);
        let svs: Vec<String> = sv.iter().map(|s| format!("{s:.3e}")).collect();
        text.push_str(&format!(
            "{:>12.6} {:>4} {:>4} {:>12}  [{}]{}{}\n",
            mu,
            r.dim_e,
            r.rank,
            gap.map_or("-".into(), |g| format!("{g:.3e}")),
            svs.join(", "),
            if jump { "  <- jump" } else { "" },
            if r.indeterminate { "  (indeterminate)" } else { "" },
        ));
        rows.push(json!({
            "mu": mu,
            "dim": r.dim_e,
            "rank": r.rank,
            "singular_values": sv,
            "gap": gap,
            "jump": jump,
            "indeterminate": r.indeterminate,
        }));
    }
    let doc = json!({"surface": surface.label, "point": point, "order": a.order, "rows": rows});
    emit(&a.out, &to_json(&doc)?, &text)
}

fn ode(a: OdeArgs) -> CmdResult {
    let init = parse_point(&a.init)?;
    let (sys, names): (Arc<dyn OdeSystem>, &[&str]) = match a.system {
        OdeKind::Ansatz => (Arc::new(AnsatzOde { mu: a.mu }), &["gamma", "gamma1", "gamma2"]),
        OdeKind::Fhat => {
            let v = expr_field(&a.v, &["t"], &Default::default())?;
            (Arc::new(FhatSystem { mu: a.mu, v }), &["f", "f1"])
        }
    };
    if init.len() != sys.dim() {
        return Err(Error::Config(format!("--init needs {} values, got {}", sys.dim(), init.len())).into());
    }
    let traj: Trajectory = rk4_fixed(sys.as_ref(), a.t0, &init, a.t1, a.steps)?;
    let csv = traj.to_csv(names);
    match &a.csv {
        Some(p) => fs::write(p, csv).map_err(|e| Failure::Io(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{csv}"),
    }
    Ok(())
}
