use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdboc::config::{mixtures_to_toml, parse_config, RunConfig};
use bdboc::io::{load_historical, write_curve, write_frontier};
use bdboc::runner::{self, quadrature_for};
use bdboc::{fit_mixture, map_predictive, EmOptions, Error, HierarchyConfig, OcEvaluator, Param, ParamGrid};
use clap::{Parser, Subcommand, ValueEnum};

/// Operating characteristics of Bayesian borrowing designs.
#[derive(Parser)]
#[command(name = "bdboc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every metric and curve in a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output` in the config, then `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mc_reps: Option<u64>,
        /// Absolute quadrature tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Fit a mixture to the MAP prior of historical studies.
    MapFit {
        /// CSV with header `label,estimate,se`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        components: usize,
        /// Half-normal scale of the between-study sd.
        #[arg(long)]
        tau_scale: f64,
        /// Name of the emitted prior.
        #[arg(long, default_value = "map")]
        name: String,
        #[arg(long, default_value_t = 2001)]
        grid_points: usize,
    },
    /// Write a type I error or power curve as CSV.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        metric: CurveMetric,
        /// `lo,hi`
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Analysis prior; defaults to the design's.
        #[arg(long)]
        analysis_prior: Option<String>,
        /// Control mode: theta_t = theta_c + delta_star along the curve.
        #[arg(long, allow_hyphen_values = true)]
        delta_star: Option<f64>,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search for designs keeping a metric below a target.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, value_enum)]
        param: Option<CliParam>,
        /// `lo,hi,steps`
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Write the frontier here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a config without evaluating it.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CurveMetric {
    ClassicalType1,
    ConditionalPower,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum CliParam {
    RobustWeight,
    #[value(name = "n_t")]
    NT,
    #[value(name = "n_c")]
    NC,
    SNewScale,
}

impl From<CliParam> for Param {
    fn from(p: CliParam) -> Self {
        match p {
            CliParam::RobustWeight => Param::RobustWeight,
            CliParam::NT => Param::NT,
            CliParam::NC => Param::NC,
            CliParam::SNewScale => Param::SNewScale,
        }
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidMixture { .. } | Error::Data(_) | Error::Io(_) | Error::Csv(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

fn read_config(path: &Path) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>, Error> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Config(format!("{what} must be {n} comma-separated numbers, got `{s}`")))?;
    if v.len() != n {
        return Err(Error::Config(format!("{what} must be {n} comma-separated numbers, got `{s}`")));
    }
    Ok(v)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_run(
    config: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    mc_reps: Option<u64>,
    tol: Option<f64>,
) -> Result<u8, Error> {
    let mut cfg = read_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = mc_reps {
        cfg.mc_reps = n;
    }
    if let Some(t) = tol {
        cfg.quadrature_tol = t;
    }
    cfg.validate()?;
    let dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = runner::run(&cfg, &dir)?;
    if let Some(s) = &result.s_new {
        println!("s_new = {:.10}", s.value);
    }
    for r in &result.rows {
        match r.value {
            Some(v) => println!("{:<48} {v:.6}", r.name),
            None => println!("{:<48} {}", r.name, r.status),
        }
    }
    println!("wrote {}", dir.display());
    let failures = result.failures();
    if failures > 0 {
        log::error!("{failures} metric(s) failed; see the status column of report.csv");
        return Ok(EXIT_NUMERIC);
    }
    Ok(0)
}

fn cmd_map_fit(data: &Path, k: usize, tau_scale: f64, name: &str, points: usize) -> Result<u8, Error> {
    let studies = load_historical(data)?;
    let n = studies.len();
    let cfg = HierarchyConfig::half_normal(tau_scale);
    let pred = map_predictive(&studies, &cfg)?;
    let grid = pred.to_grid(points)?;
    let fit = fit_mixture(&grid, k, &EmOptions::default())?;
    eprintln!(
        "{n} studies; {k}-component fit, KL {:.3e} after {} EM iterations",
        fit.kl, fit.iterations
    );
    print!("{}", mixtures_to_toml(&[(name, &fit.mixture)])?);
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_curve(
    config: &Path,
    metric: CurveMetric,
    range: &str,
    points: usize,
    analysis: Option<String>,
    delta_star: Option<f64>,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let cfg = read_config(config)?;
    let r = parse_list(range, 2, "--range")?;
    let s_new = runner::resolve_s_new(&cfg)?.map(|s| s.value);
    let analysis = analysis.unwrap_or_else(|| cfg.default_analysis_prior().to_string());
    let ev = OcEvaluator::new(cfg.build_design(&analysis, s_new)?)?.with_quadrature(quadrature_for(&cfg));
    let d0 = ev.rule().delta_null;
    let pts = match metric {
        CurveMetric::ClassicalType1 => ev.classical_type1_curve(r[0], r[1], points)?,
        CurveMetric::ConditionalPower => ev.cp_curve(r[0], r[1], points, delta_star.unwrap_or(d0))?,
    };
    write_curve(sink(out.as_deref())?, &pts)?;
    Ok(0)
}

fn cmd_calibrate(
    config: &Path,
    target: Option<f64>,
    param: Option<CliParam>,
    grid: Option<String>,
    out: Option<PathBuf>,
) -> Result<u8, Error> {
    let cfg = read_config(config)?;
    let grid = match (param, grid) {
        (Some(p), Some(g)) => {
            let v = parse_list(&g, 3, "--grid")?;
            if v[2] < 1.0 || v[2].fract() != 0.0 {
                return Err(Error::Config(format!("--grid steps must be a positive integer, got {}", v[2])));
            }
            Some(vec![ParamGrid::linspace(p.into(), v[0], v[1], v[2] as usize)?])
        }
        (None, None) => None,
        _ => return Err(Error::Config("--param and --grid go together".into())),
    };
    let cal = runner::calibrate_config(&cfg, target, grid)?;
    let params: Vec<Param> = cal
        .points
        .first()
        .map(|p| p.params.iter().map(|x| x.0).collect())
        .unwrap_or_default();
    write_frontier(sink(out.as_deref())?, &cal.frontier, &params)?;
    if cal.frontier.is_empty() {
        eprintln!("no admissible design; smallest metric on the grid is {:.6}", cal.min_metric);
    } else {
        eprintln!("{} of {} grid points admissible", cal.frontier.len(), cal.points.len());
    }
    Ok(0)
}

fn cmd_check(config: &Path) -> Result<u8, Error> {
    let cfg = read_config(config)?;
    println!(
        "ok: {} metric requests, {} curves, {} analysis priors, {} design priors",
        cfg.metrics.len(),
        cfg.curves.len(),
        cfg.analysis_priors.len(),
        cfg.design_priors.len()
    );
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            mc_reps,
            tol,
        } => cmd_run(&config, out, seed, mc_reps, tol),
        Command::MapFit {
            data,
            components,
            tau_scale,
            name,
            grid_points,
        } => cmd_map_fit(&data, components, tau_scale, &name, grid_points),
        Command::Curve {
            config,
            metric,
            range,
            points,
            analysis_prior,
            delta_star,
            out,
        } => cmd_curve(&config, metric, &range, points, analysis_prior, delta_star, out),
        Command::Calibrate {
            config,
            target,
            param,
            grid,
            out,
        } => cmd_calibrate(&config, target, param, grid, out),
        Command::Check { config } => cmd_check(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
