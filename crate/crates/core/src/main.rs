use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use stokes_wire::bench::{run_benchmark, BenchConfig, EtaPolicy, Mode};
use stokes_wire::config::ToolConfig;
use stokes_wire::report::{eoc, fit_slope, Format, RunReport};
use stokes_wire::singularity::SingularityReport;
use stokes_wire::verify::{format_table, run_suite, SuiteOptions};
use stokes_wire::Mesh;

/// Benchmarks for pressure-wired Scott-Vogelius Stokes elements.
#[derive(Parser)]
#[command(name = "stokes-wire", version)]
struct Cli {
    /// Key-value file with tool defaults (quad_bump, tol_residual, tol_identity, seed, threads).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for the sweep; overrides the config file.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform refinement at fixed degree.
    H(SweepArgs),
    /// Increasing polynomial degree on a fixed mesh.
    K(SweepArgs),
    /// Discrete inf-sup constants of both variants.
    Infsup(SweepArgs),
    /// Single solves.
    Solve(SweepArgs),
    /// Randomized checks of the element's identities and inequalities.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-vertex singular distances as CSV.
    Theta {
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Red refinements of the mesh.
        #[arg(long, default_value_t = 0)]
        levels: usize,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Degrees: `4`, `4,5` or `4..8`.
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated perturbations of the criss-cross mesh.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// critical, noncritical or value:<x>; both variants when omitted.
    #[arg(long = "eta-policy")]
    eta_policy: Option<EtaPolicy>,
    /// Number of meshes (h) or refinements of the single mesh (other modes).
    #[arg(long)]
    levels: Option<usize>,
    /// Refinements applied before an h-sweep starts.
    #[arg(long = "base-refinements")]
    base_refinements: Option<usize>,
    /// Initial mesh file; replaces the built-in criss-cross generator.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long = "quad-bump")]
    quad_bump: Option<usize>,
    /// Also estimate the inf-sup constant in the solve modes.
    #[arg(long)]
    beta: bool,
    /// Write zero wall times so repeated runs give identical bytes.
    #[arg(long = "no-timing")]
    no_timing: bool,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json; taken from the extension of --out when omitted.
    #[arg(long)]
    format: Option<Format>,
}

fn parse_degrees(s: &str) -> Result<Vec<usize>> {
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    if let Some((a, b)) = range {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        if a > b {
            bail!("empty degree range {s}");
        }
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|x| x.trim().parse().with_context(|| format!("bad degree `{x}`")))
        .collect()
}

fn output_format(args: &SweepArgs) -> Format {
    args.format
        .unwrap_or_else(|| match args.out.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "json" => Format::Json,
            _ => Format::Csv,
        })
}

fn read_mesh(path: &Path) -> Result<Mesh> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Mesh::read_text(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn sweep_config(mode: Mode, args: &SweepArgs, tool: &ToolConfig) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::defaults(mode);
    cfg.quad_bump = args.quad_bump.unwrap_or(tool.quad_bump);
    cfg.tol_residual = tool.tol_residual;
    if let Some(k) = &args.k {
        cfg.degrees = parse_degrees(k)?;
    }
    if let Some(eps) = &args.eps {
        cfg.eps = eps.clone();
    }
    if let Some(p) = args.eta_policy {
        cfg.policies = vec![p];
    }
    if let Some(l) = args.levels {
        match mode {
            Mode::H => cfg.levels = l,
            _ => cfg.base_refinements = l,
        }
    }
    if let Some(b) = args.base_refinements {
        cfg.base_refinements = b;
    }
    if let Some(path) = &args.mesh {
        cfg.mesh = Some(read_mesh(path)?);
    }
    cfg.with_beta = args.beta;
    cfg.timing = !args.no_timing;
    Ok(cfg)
}

/// Convergence orders, decay factors or slopes of each series, on standard error.
fn print_summary(mode: Mode, report: &RunReport) {
    let mut keys: Vec<(Option<u64>, String)> = report
        .records
        .iter()
        .map(|r| (r.eps.map(f64::to_bits), r.eta.clone()))
        .collect();
    keys.dedup();
    for (eps, eta) in &keys {
        let eps = eps.map(f64::from_bits);
        let series = report.series(eps, eta);
        let label = match eps {
            Some(e) => format!("eps={e:e} {eta}"),
            None => eta.clone(),
        };
        match mode {
            Mode::H => {
                for k in series.iter().map(|r| r.k).collect::<std::collections::BTreeSet<_>>() {
                    let e: Vec<f64> = series.iter().filter(|r| r.k == k).filter_map(|r| r.err_total).collect();
                    eprintln!("{label} k={k}: EOC {:.2?}", eoc(&e));
                }
            }
            Mode::K => {
                let e: Vec<f64> = series.iter().filter_map(|r| r.err_total).collect();
                let ratios: Vec<f64> = e.windows(2).map(|w| w[0] / w[1]).collect();
                eprintln!("{label}: error ratio per degree {ratios:.2?}");
            }
            Mode::Infsup | Mode::Solve | Mode::Verify => {}
        }
    }
    if mode == Mode::Infsup {
        for eta in ["noncritical", "critical"] {
            let pts: Vec<(f64, f64)> = report
                .records
                .iter()
                .filter(|r| r.eta == eta)
                .filter_map(|r| Some((r.eps?.ln(), r.beta?.ln())))
                .collect();
            if pts.len() >= 2 {
                let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                eprintln!("{eta}: slope of log beta against log eps {:.3}", fit_slope(&x, &y));
            }
        }
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn run_sweep(mode: Mode, args: &SweepArgs, tool: &ToolConfig) -> Result<ExitCode> {
    let cfg = sweep_config(mode, args, tool)?;
    let report = run_benchmark(&cfg)?;
    let text = match output_format(args) {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json()? + "\n",
    };
    write_output(&args.out, &text)?;
    print_summary(mode, &report);
    for r in report.records.iter().filter(|r| r.error.is_some()) {
        log::error!(
            "k={} eps={:?} level={} {}: {}",
            r.k,
            r.eps,
            r.level,
            r.eta,
            r.error.as_deref().unwrap_or("")
        );
    }
    Ok(if report.has_errors() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            writeln!(
                buf,
                "{}|{}|{}",
                record.level(),
                record.module_path().unwrap_or("?"),
                record.args()
            )
        })
        .init();
}

fn main() -> Result<ExitCode> {
    init_logging();
    let cli = Cli::parse();
    let mut tool = match &cli.config {
        Some(p) => ToolConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ToolConfig::default(),
    };
    if let Some(t) = cli.threads {
        tool.threads = t;
    }
    if tool.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(tool.threads)
            .build_global()?;
    }
    match &cli.command {
        Command::H(a) => run_sweep(Mode::H, a, &tool),
        Command::K(a) => run_sweep(Mode::K, a, &tool),
        Command::Infsup(a) => run_sweep(Mode::Infsup, a, &tool),
        Command::Solve(a) => run_sweep(Mode::Solve, a, &tool),
        Command::Verify { seed } => {
            let opts = SuiteOptions {
                seed: seed.unwrap_or(tool.seed),
                identity_tol: tool.tol_identity,
                ..Default::default()
            };
            let rows = run_suite(&opts);
            print!("{}", format_table(&rows));
            Ok(if rows.iter().all(|r| r.passed()) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Theta { eps, levels, mesh, out } => {
            let base = match mesh {
                Some(p) => read_mesh(p)?,
                None => Mesh::criss_cross(*eps)?,
            };
            let m = base.refined(*levels)?;
            write_output(out, &SingularityReport::new(&m).to_csv(&m))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_lists() {
        assert_eq!(parse_degrees("4").unwrap(), [4]);
        assert_eq!(parse_degrees("4,5").unwrap(), [4, 5]);
        assert_eq!(parse_degrees("4..8").unwrap(), [4, 5, 6, 7, 8]);
        assert_eq!(parse_degrees("4..=6").unwrap(), [4, 5, 6]);
        assert_eq!(parse_degrees("2-3").unwrap(), [2, 3]);
        assert!(parse_degrees("8..4").is_err());
        assert!(parse_degrees("x").is_err());
    }
}
