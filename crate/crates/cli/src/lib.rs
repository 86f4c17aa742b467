//! `katolab` command line driver, callable in-process through [`execute`].
//!
//! Exit codes: 0 all checks pass, 1 a check reported a violation, 2 invalid
//! input, 3 numerical failure (solver or quadrature).

// `!(x < y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use katolab::estimates::{
    betti_bound, delta_of_alpha, heat_kernel_bounds, heat_kernel_constant, j_lower, kato_threshold,
};
use katolab::kato::{linear_grid, scan_admissible};
use katolab::manifold::{load_mesh, parse_manifold, write_off, Manifold};
use katolab::spectral::eigendecompose;
use katolab::verify::{run_suite, CheckKind, SuiteConfig};
use katolab::{Error, EstimateParams};

#[derive(Parser)]
#[command(
    name = "katolab",
    version,
    about = "Check Li-Yau type estimates under a Kato curvature condition"
)]
struct Cli {
    /// JSON file with default values for the numeric options
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load a manifold and print its geometry summary
    Mesh {
        #[command(flatten)]
        source: Source,
        /// Write the triangulation as OFF
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Kato constants b(beta) of rho_- over a beta grid
    Kato {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        numeric: Numeric,
    },
    /// Closed-form constants for given (n, alpha, beta, b)
    Constants {
        /// Dimension n (>= 2)
        #[arg(long)]
        n: usize,
        /// Li-Yau parameter alpha in (0, 1), dimensionless
        #[arg(long)]
        alpha: f64,
        /// Time scale beta (units of length^2)
        #[arg(long)]
        beta: f64,
        /// Kato constant b in [0, 1), dimensionless
        #[arg(long)]
        b: f64,
        /// Diameter (length) for the kernel and Betti constants
        #[arg(long)]
        diam: Option<f64>,
        /// Volume (length^n) for the on-diagonal kernel bound
        #[arg(long)]
        vol: Option<f64>,
        /// Time (length^2) at which to evaluate j(t) and the kernel bound
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run verification checks
    Verify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        numeric: Numeric,
        /// all, gradient, j-bounds, norm, harnack, heat-kernel or betti
        #[arg(long, default_value = "all")]
        suite: String,
        /// Directory for report.json and per-check CSV samples
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest admissible beta for each alpha of a grid
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        numeric: Numeric,
        /// Alpha grid start:stop:count
        #[arg(long, default_value = "0.1:0.9:9")]
        alpha_grid: String,
    },
}

#[derive(Args)]
struct Source {
    /// Descriptor such as flat-torus:1x1, sphere:radius=1,subdiv=3 or torus-rev:R=2,r=1,res=64
    #[arg(
        long,
        conflicts_with = "mesh_file",
        required_unless_present = "mesh_file"
    )]
    manifold: Option<String>,
    /// Closed triangle mesh in OFF or OBJ format
    #[arg(long)]
    mesh_file: Option<PathBuf>,
}

#[derive(Args)]
struct Numeric {
    /// Li-Yau parameter alpha in (0, 1)
    #[arg(long)]
    alpha: Option<f64>,
    /// Fixed time scale beta (length^2)
    #[arg(long, conflicts_with = "beta_grid")]
    beta: Option<f64>,
    /// Beta grid start:stop:count (length^2)
    #[arg(long)]
    beta_grid: Option<String>,
    /// Dimension override
    #[arg(long)]
    n: Option<usize>,
    /// Number of retained eigenpairs (default: full basis)
    #[arg(long = "K")]
    modes: Option<usize>,
    /// Quadrature tolerance for the Kato integral
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for sampled pairs and initial data
    #[arg(long)]
    seed: Option<u64>,
}

/// Defaults read from `--config`; command line flags take precedence.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    alpha: Option<f64>,
    beta: Option<f64>,
    beta_grid: Option<String>,
    n: Option<usize>,
    #[serde(rename = "K")]
    modes: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    timestamp_unix: u64,
}

fn emit(command: &str, body: Value) -> String {
    let header = Header {
        tool: "katolab",
        version: env!("CARGO_PKG_VERSION"),
        command,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let doc = json!({ "header": header, "body": body });
    serde_json::to_string_pretty(&doc).expect("report is serializable")
}

fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Failure::Input(format!("grid '{s}' must be start:stop:count"));
    let [a, b, c] = parts[..] else {
        return Err(bad());
    };
    let (a, b, c): (f64, f64, usize) = (
        a.parse().map_err(|_| bad())?,
        b.parse().map_err(|_| bad())?,
        c.parse().map_err(|_| bad())?,
    );
    if c == 0 || !(a > 0.0) || b < a {
        return Err(bad());
    }
    Ok(linear_grid(a, b, c))
}

fn load_source(src: &Source) -> CliResult<Manifold> {
    match (&src.manifold, &src.mesh_file) {
        (Some(d), _) => Ok(parse_manifold(d)?),
        (None, Some(p)) => Ok(Manifold::Mesh(load_mesh(p, None)?)),
        (None, None) => Err(Failure::Input(
            "one of --manifold or --mesh-file is required".into(),
        )),
    }
}

fn read_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn suite_config(num: &Numeric, file: &ConfigFile) -> CliResult<SuiteConfig> {
    let mut cfg = SuiteConfig::default();
    cfg.alpha = num.alpha.or(file.alpha).unwrap_or(cfg.alpha);
    cfg.n = num.n.or(file.n);
    cfg.mode_count = num.modes.or(file.modes);
    cfg.kato_tol = num.tol.or(file.tol).unwrap_or(cfg.kato_tol);
    cfg.seed = num.seed.or(file.seed).unwrap_or(cfg.seed);
    match (num.beta, &num.beta_grid) {
        (Some(b), _) => cfg.beta = Some(b),
        (None, Some(g)) => cfg.beta_grid = parse_grid(g)?,
        (None, None) => {
            cfg.beta = file.beta;
            if let Some(g) = &file.beta_grid {
                cfg.beta_grid = parse_grid(g)?;
            }
        }
    }
    Ok(cfg)
}

fn mesh_summary(m: &Manifold) -> CliResult<Value> {
    let rho = m.rho();
    let mut v = json!({
        "descriptor": m.descriptor(),
        "dimension": m.dimension(),
        "points": m.len(),
        "volume": m.volume(),
        "diameter": m.diameter()?,
        "first_betti_number": m.first_betti_number(),
        "curvature_min": rho.min(),
        "curvature_max": rho.max(),
    });
    if let Some(mesh) = m.as_mesh() {
        let extra = json!({
            "faces": mesh.face_count(),
            "edges": mesh.edge_count(),
            "euler_characteristic": mesh.euler_characteristic(),
            "mesh_size": mesh.mesh_size(),
            "gauss_bonnet_residual": mesh.gauss_bonnet_residual(),
            "negative_cotangent_weights": mesh.negative_weight_count(),
        });
        if let (Value::Object(a), Value::Object(b)) = (&mut v, extra) {
            a.extend(b);
        }
    }
    Ok(v)
}

fn default_k(m: &Manifold, requested: Option<usize>) -> usize {
    requested.unwrap_or(m.len()).min(m.len())
}

fn kato_scan(m: &Manifold, cfg: &SuiteConfig) -> CliResult<Vec<katolab::KatoCertificate>> {
    let s = eigendecompose(m, None, default_k(m, cfg.mode_count))?;
    let grid = cfg.beta.map_or_else(|| cfg.beta_grid.clone(), |b| vec![b]);
    Ok(scan_admissible(
        &s,
        &m.rho_minus(),
        cfg.alpha,
        cfg.n.unwrap_or(m.dimension()),
        &grid,
        cfg.kato_tol,
    )?)
}

fn run(cli: Cli) -> CliResult<(bool, String)> {
    let file = read_config(cli.config.as_deref())?;
    match cli.command {
        Command::Mesh { source, out } => {
            let m = load_source(&source)?;
            if let Some(path) = &out {
                let mesh = m.as_mesh().ok_or_else(|| {
                    Failure::Input("the exact flat torus has no triangulation; add res=N".into())
                })?;
                write_off(mesh, path)?;
            }
            Ok((true, emit("mesh", mesh_summary(&m)?)))
        }
        Command::Kato { source, numeric } => {
            let m = load_source(&source)?;
            let cfg = suite_config(&numeric, &file)?;
            let certs = kato_scan(&m, &cfg)?;
            let best = certs.iter().rev().find(|c| c.admissible == Some(true));
            let body = json!({ "manifold": m.descriptor(), "alpha": cfg.alpha, "certificates": certs, "largest_admissible": best });
            Ok((true, emit("kato", body)))
        }
        Command::Constants {
            n,
            alpha,
            beta,
            b,
            diam,
            vol,
            t,
        } => {
            let delta = delta_of_alpha(alpha, n)?;
            let p = EstimateParams::unchecked(n, alpha, beta, b)?;
            let mut body = BTreeMap::new();
            body.insert("params", json!(p));
            body.insert("threshold", json!(kato_threshold(delta)?));
            body.insert("admissible", json!(p.is_admissible()));
            body.insert("liyau_constant", json!(p.liyau_constant()));
            body.insert("kernel_exponent", json!(p.kernel_exponent()));
            if let Some(t) = t {
                body.insert("j", json!(j_lower(t, &p)?));
            }
            if let Some(d) = diam {
                body.insert("c1", json!(heat_kernel_constant(&p, d)?));
                body.insert("betti_bound", json!(betti_bound(&p, d)?));
                if let (Some(v), Some(t)) = (vol, t) {
                    body.insert("heat_kernel", json!(heat_kernel_bounds(t, 0.0, &p, d, v)?));
                }
            }
            Ok((true, emit("constants", json!(body))))
        }
        Command::Verify {
            source,
            numeric,
            suite,
            out,
        } => {
            let m = load_source(&source)?;
            let mut cfg = suite_config(&numeric, &file)?;
            cfg.checks = CheckKind::parse(&suite)?;
            let report = run_suite(&m, &cfg)?;
            if let Some(dir) = &out {
                write_outputs(dir, &report)?;
            }
            Ok((report.passed, emit("verify", json!(report))))
        }
        Command::Sweep {
            source,
            numeric,
            alpha_grid,
        } => {
            let m = load_source(&source)?;
            let base = suite_config(&numeric, &file)?;
            let alphas = parse_grid(&alpha_grid)?;
            let mut rows = Vec::new();
            for alpha in alphas.into_iter().filter(|&a| a < 1.0) {
                let cfg = SuiteConfig {
                    alpha,
                    ..base.clone()
                };
                let certs = kato_scan(&m, &cfg)?;
                let best = certs
                    .iter()
                    .rev()
                    .find(|c| c.admissible == Some(true))
                    .copied();
                rows.push(json!({ "alpha": alpha, "threshold": certs[0].threshold, "largest_admissible": best }));
            }
            Ok((
                true,
                emit("sweep", json!({ "manifold": m.descriptor(), "rows": rows })),
            ))
        }
    }
}

fn write_outputs(dir: &Path, report: &katolab::verify::SuiteReport) -> CliResult<()> {
    let io = |e: std::io::Error| Failure::Input(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(report).expect("report is serializable");
    std::fs::write(dir.join("report.json"), text).map_err(io)?;
    for r in &report.reports {
        std::fs::write(dir.join(format!("{}.csv", r.check_name)), r.samples_csv()).map_err(io)?;
    }
    Ok(())
}

/// Result of one invocation: exit code and the text destined for stdout and stderr.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the command line `args` (including the program name).
pub fn execute<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.exit_code() {
                0 => Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                },
            };
        }
    };
    match run(cli) {
        Ok((passed, stdout)) => Outcome {
            code: if passed { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        },
        Err(Failure::Input(msg)) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: format!("error: {msg}"),
        },
        Err(Failure::Numerical(msg)) => Outcome {
            code: 3,
            stdout: String::new(),
            stderr: format!("numerical failure: {msg}"),
        },
    }
}
