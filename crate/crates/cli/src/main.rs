//! `hadamard`: command-line front end for the continuation engine.

use std::fs;
use std::path::Path as FsPath;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hadamard_core::acceptance::{self, AcceptanceConfig, Scale};
use hadamard_core::borel;
use hadamard_core::deformation::FieldVariant;
use hadamard_core::geometry::{product_set, Path, SingularSet};
use hadamard_core::germ::Germ;
use hadamard_core::hadamard::{self, uniform_snapshots, ContinuationOptions};
use hadamard_core::io::{self, PathRef};
use hadamard_core::{Error, ErrorKind};
use serde_json::json;

const MIN_NODES: usize = 64;
const DEFAULT_SNAPSHOTS: usize = 16;

#[derive(Parser)]
#[command(name = "hadamard", version, about = "Analytic continuation of Hadamard products f ⊙ g")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the points of Ω = {0} ∪ A·B in a disc.
    Omega(OmegaArgs),
    /// Continue f ⊙ g along a path.
    Continue(ContinueArgs),
    /// Change of f ⊙ g after looping around a point of Ω.
    Monodromy(MonodromyArgs),
    /// Check the Borel bridging and convolution identities.
    BorelCheck(BorelArgs),
    /// Run the acceptance criteria.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct OmegaArgs {
    /// Singular set A as JSON (inline or file).
    #[arg(long, conflicts_with = "f")]
    a: Option<String>,
    /// Singular set B as JSON (inline or file).
    #[arg(long, conflicts_with = "g")]
    b: Option<String>,
    /// Take A from a germ spec.
    #[arg(long)]
    f: Option<String>,
    /// Take B from a germ spec.
    #[arg(long)]
    g: Option<String>,
    #[arg(long = "omega-radius")]
    omega_radius: f64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    g: Option<String>,
    /// Quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Initial contour nodes (at least 64).
    #[arg(long)]
    nodes: Option<usize>,
    /// cutoff or finiteb.
    #[arg(long)]
    field: Option<String>,
    /// Give up once the contour has this many nodes.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ContinueArgs {
    /// Run spec JSON (inline or file); flags override its fields.
    #[arg(long)]
    spec: Option<String>,
    /// Path spec JSON (inline or file).
    #[arg(long)]
    path: Option<String>,
    /// Snapshot count, or comma-separated times in (0, 1].
    #[arg(long)]
    snapshots: Option<String>,
    /// Write node trajectories as CSV.
    #[arg(long)]
    csv: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct MonodromyArgs {
    #[arg(long, allow_hyphen_values = true)]
    basepoint: String,
    #[arg(long, allow_hyphen_values = true)]
    omega: String,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    turns: i32,
    /// Path from the principal domain to the basepoint.
    #[arg(long)]
    pre_path: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct BorelArgs {
    /// Series JSON `{coeffs, offset, order}` (inline or file).
    #[arg(long, requires = "g")]
    f: Option<String>,
    #[arg(long, requires = "f")]
    g: Option<String>,
    /// Highest coefficient to check; defaults to the last one both inputs know.
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Run at full acceptance scale.
    #[arg(long)]
    full: bool,
    /// Initial node count for the continuation criteria.
    #[arg(long)]
    nodes: Option<usize>,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, hide = true)]
    inject_bridge_bug: bool,
}

enum Failure {
    Usage(String),
    Run(Error),
    Selftest,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("HADAMARD_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: HADAMARD_THREADS must be a positive integer, got `{n}`");
                return ExitCode::from(2);
            }
        }
    }
    let outcome = match cli.command {
        Command::Omega(a) => cmd_omega(a),
        Command::Continue(a) => cmd_continue(a),
        Command::Monodromy(a) => cmd_monodromy(a),
        Command::BorelCheck(a) => cmd_borel(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Input | ErrorKind::Validation => ExitCode::from(2),
                ErrorKind::Numerical => ExitCode::from(3),
            }
        }
        Err(Failure::Selftest) => ExitCode::from(1),
    }
}

/// Inline JSON, or the contents of the named file.
fn read_json_arg(arg: &str) -> Result<String, Failure> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok(arg.to_string());
    }
    fs::read_to_string(arg).map_err(|e| Failure::Usage(format!("cannot read `{arg}`: {e}")))
}

fn emit(text: &str, out: Option<&str>) -> CmdResult {
    match out {
        Some(file) => fs::write(file, format!("{text}\n")).map_err(|e| Failure::Run(e.into())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_omega(a: OmegaArgs) -> CmdResult {
    let set = |json: Option<String>, germ: Option<String>, name: &str| -> Result<SingularSet, Failure> {
        match (json, germ) {
            (Some(j), _) => Ok(io::parse_set(&read_json_arg(&j)?)?),
            (None, Some(spec)) => Ok(io::parse_germ(&spec)?.singular_set().clone()),
            (None, None) => Err(Failure::Usage(format!("give either --{name} or a germ for it"))),
        }
    };
    let a_set = set(a.a, a.f, "a")?;
    let b_set = set(a.b, a.g, "b")?;
    if !(a.omega_radius >= 0.0) || !a.omega_radius.is_finite() {
        return Err(Failure::Usage(format!("--omega-radius must be a nonnegative number, got {}", a.omega_radius)));
    }
    let omega = product_set(&a_set, &b_set);
    let points = omega.enumerate(a.omega_radius);
    let report = json!({
        "radius": a.omega_radius,
        "omega": omega.label(),
        "points": points.iter().map(|p| [p.re, p.im]).collect::<Vec<_>>(),
    });
    emit(&io::to_json(&report)?, a.out.as_deref())
}

fn parse_snapshots(arg: &str) -> Result<Vec<f64>, Failure> {
    if let Ok(n) = arg.trim().parse::<usize>() {
        return Ok(uniform_snapshots(n));
    }
    arg.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|t| (0.0..=1.0).contains(t))
                .ok_or_else(|| Failure::Usage(format!("--snapshots: `{t}` is not a time in [0, 1]")))
        })
        .collect()
}

struct Resolved {
    f: Arc<Germ>,
    g: Arc<Germ>,
    opts: ContinuationOptions,
}

fn resolve(run: &RunArgs, spec: Option<&io::RunSpec>, snapshots: Vec<f64>) -> Result<Resolved, Failure> {
    let f = run.f.clone().or_else(|| spec.map(|s| s.f.clone()));
    let g = run.g.clone().or_else(|| spec.map(|s| s.g.clone()));
    let (Some(f), Some(g)) = (f, g) else {
        return Err(Failure::Usage("both germs are required: --f and --g".into()));
    };
    let mut opts = ContinuationOptions { snapshots, ..Default::default() };
    if let Some(tol) = run.tol.or_else(|| spec.and_then(|s| s.tolerance)) {
        if !(tol > 0.0) {
            return Err(Failure::Usage(format!("tolerance must be positive, got {tol}")));
        }
        opts.tolerance = tol;
    }
    if let Some(n) = run.nodes.or_else(|| spec.and_then(|s| s.n_nodes)) {
        if n < MIN_NODES {
            return Err(Failure::Usage(format!("n_nodes must be at least {MIN_NODES}, got {n}")));
        }
        opts.n_nodes = n;
    }
    if let Some(v) = run.field.clone().or_else(|| spec.and_then(|s| s.field_variant.clone())) {
        opts.field = v.parse::<FieldVariant>()?;
    }
    if let Some(m) = run.max_nodes {
        opts.max_nodes = m.max(opts.n_nodes);
    }
    Ok(Resolved {
        f: Arc::new(io::parse_germ(&f)?),
        g: Arc::new(io::parse_germ(&g)?),
        opts,
    })
}

fn load_path(arg: &str, base: Option<&FsPath>) -> Result<Path, Failure> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(io::parse_path(arg)?);
    }
    let file = match base {
        Some(dir) if FsPath::new(arg).is_relative() => dir.join(arg),
        _ => FsPath::new(arg).to_path_buf(),
    };
    let text = fs::read_to_string(&file).map_err(|e| Failure::Usage(format!("cannot read path file `{}`: {e}", file.display())))?;
    Ok(io::parse_path(&text)?)
}

fn cmd_continue(a: ContinueArgs) -> CmdResult {
    let (spec, base) = match &a.spec {
        Some(s) => {
            let text = read_json_arg(s)?;
            let base = FsPath::new(s).parent().map(|p| p.to_path_buf());
            (Some(io::parse_run_spec(&text)?), base)
        }
        None => (None, None),
    };
    let snapshots = match (&a.snapshots, spec.as_ref().and_then(|s| s.snapshots.clone())) {
        (Some(arg), _) => parse_snapshots(arg)?,
        (None, Some(times)) => times,
        (None, None) => uniform_snapshots(DEFAULT_SNAPSHOTS),
    };
    let r = resolve(&a.run, spec.as_ref(), snapshots)?;
    let path = match (&a.path, spec.as_ref().map(|s| &s.path)) {
        (Some(p), _) => load_path(p, None)?,
        (None, Some(PathRef::Inline(p))) => p.build()?,
        (None, Some(PathRef::File(name))) => load_path(name, base.as_deref())?,
        (None, None) => return Err(Failure::Usage("a path is required: --path or a run spec".into())),
    };
    let result = hadamard::continue_hadamard(&r.f, &r.g, &path, &r.opts)?;
    if let Some(csv) = &a.csv {
        fs::write(csv, io::snapshots_csv(&result.snapshots)).map_err(|e| Failure::Run(e.into()))?;
    }
    emit(&io::to_json(&result)?, a.run.out.as_deref())
}

fn cmd_monodromy(a: MonodromyArgs) -> CmdResult {
    let basepoint = io::parse_complex(&a.basepoint)?;
    let omega = io::parse_complex(&a.omega)?;
    let r = resolve(&a.run, None, Vec::new())?;
    let pre = a.pre_path.as_deref().map(|p| load_path(p, None)).transpose()?;
    let result = hadamard::monodromy(&r.f, &r.g, basepoint, omega, pre.as_ref(), a.turns, &r.opts)?;
    emit(&io::to_json(&result)?, a.run.out.as_deref())
}

fn cmd_borel(a: BorelArgs) -> CmdResult {
    let (Some(f), Some(g)) = (a.f, a.g) else {
        let report = acceptance::run_criterion(7, &AcceptanceConfig::new(Scale::Reduced));
        println!("{report}");
        return if report.passed { Ok(()) } else { Err(Failure::Selftest) };
    };
    let f = borel::to_rational(&io::parse_series(&read_json_arg(&f)?)?)?;
    let g = borel::to_rational(&io::parse_series(&read_json_arg(&g)?)?)?;
    let order = a.order.unwrap_or(f.order().min(g.order()).saturating_sub(1));
    let bridge = borel::bridge_identity_check(&f, &g, order)?;
    let conv = borel::convolution_residual(&f, &g, order)?;
    let report = json!({
        "order": order,
        "bridge_residual": bridge,
        "convolution_residual": conv,
        "exact": bridge == 0.0 && conv == 0.0,
    });
    println!("{}", io::to_json(&report)?);
    if bridge == 0.0 && conv == 0.0 {
        Ok(())
    } else {
        Err(Failure::Selftest)
    }
}

fn cmd_selftest(a: SelftestArgs) -> CmdResult {
    let mut cfg = AcceptanceConfig::new(if a.full { Scale::Full } else { Scale::Reduced });
    if let Some(n) = a.nodes {
        if n < MIN_NODES {
            return Err(Failure::Usage(format!("--nodes must be at least {MIN_NODES}, got {n}")));
        }
        cfg.nodes = n;
    }
    cfg.inject_bridge_bug = a.inject_bridge_bug;
    let ids: Vec<u8> = if a.only.is_empty() { (1..=9).collect() } else { a.only };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=9).contains(&i)) {
        return Err(Failure::Usage(format!("--only: no criterion {bad}")));
    }
    let mut failed = 0;
    for id in ids {
        let report = acceptance::run_criterion(id, &cfg);
        if !report.passed {
            failed += 1;
        }
        println!("{report}");
    }
    if failed == 0 {
        println!("all criteria passed");
        Ok(())
    } else {
        println!("{failed} criteria failed");
        Err(Failure::Selftest)
    }
}
