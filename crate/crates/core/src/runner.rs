//! Executes a [`RunConfig`] and writes its artifacts.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{calibrate, Calibration, CalibrationRequest, ParamGrid, RootChoice};
use crate::config::{grid_from_spec, CurveKind, DesignSpec, MetricKind, MetricSpec, RunConfig};
use crate::io::{write_curve, write_report, ReportRow};
use crate::metrics::{
    metric_quadrature, prior_prob_benefit, DesignPrior, Extremum, McConfig, Method, Metric, MetricReport,
    OcEvaluator, Truth,
};
use crate::quadrature::QuadratureConfig;
use crate::{Design, Error, Result};

pub const TOOL: &str = "bdboc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// `s_new` obtained from a target classical type I error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvedSNew {
    pub value: f64,
    pub roots: Vec<f64>,
    pub root: RootChoice,
    pub target_type1: f64,
    pub analysis_prior: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Result<Vec<(f64, f64)>, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub curves: Vec<Curve>,
    pub s_new: Option<SolvedSNew>,
}

impl RunOutput {
    /// Failed report rows plus failed curves.
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count() + self.curves.iter().filter(|c| c.points.is_err()).count()
    }

    pub fn row(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

pub fn quadrature_for(cfg: &RunConfig) -> QuadratureConfig<f64> {
    QuadratureConfig {
        abs_tol: cfg.quadrature_tol,
        ..metric_quadrature()
    }
}

pub fn mc_for(cfg: &RunConfig) -> McConfig {
    McConfig {
        n_reps: cfg.mc_reps,
        seed: cfg.seed,
        stream: 0,
    }
}

/// Solves for `s_new` when the design asks for it.
pub fn resolve_s_new(cfg: &RunConfig) -> Result<Option<SolvedSNew>> {
    let DesignSpec::Contrast {
        solve_s_new: Some(sol), ..
    } = &cfg.design
    else {
        return Ok(None);
    };
    let prior = cfg.analysis_prior(&sol.analysis_prior)?;
    let s = crate::calibration::solve_s_new(
        &prior,
        &cfg.rule()?,
        sol.target_type1,
        (sol.bracket[0], sol.bracket[1]),
        sol.root,
    )?;
    log::info!(
        "s_new = {} ({} root of {} crossings)",
        s.s_new,
        match sol.root {
            RootChoice::Larger => "larger",
            RootChoice::Smaller => "smaller",
        },
        s.roots.len()
    );
    Ok(Some(SolvedSNew {
        value: s.s_new,
        roots: s.roots,
        root: sol.root,
        target_type1: sol.target_type1,
        analysis_prior: sol.analysis_prior.clone(),
    }))
}

struct Job<'a> {
    spec: &'a MetricSpec,
    analysis: String,
    design: Option<String>,
}

impl Job<'_> {
    fn name(&self, suffix: Option<&str>) -> String {
        let mut n = self.spec.label.clone().unwrap_or_else(|| self.spec.metric.name().to_string());
        if let Some(s) = suffix {
            n.push('.');
            n.push_str(s);
        }
        if self.spec.metric.uses_analysis_prior() {
            n.push('/');
            n.push_str(&self.analysis);
        }
        if let Some(d) = &self.design {
            n.push('/');
            n.push_str(d);
        }
        n
    }
}

fn expand(cfg: &RunConfig) -> Vec<Job<'_>> {
    let default = cfg.default_analysis_prior().to_string();
    let mut jobs = Vec::new();
    for m in &cfg.metrics {
        let analyses: Vec<String> = match &m.analysis_prior {
            Some(a) => a.names().into_iter().map(String::from).collect(),
            None => vec![default.clone()],
        };
        let designs: Vec<Option<String>> = match &m.design_prior {
            Some(d) => d.names().into_iter().map(|s| Some(s.to_string())).collect(),
            None => vec![None],
        };
        for a in &analyses {
            for d in &designs {
                jobs.push(Job {
                    spec: m,
                    analysis: a.clone(),
                    design: d.clone(),
                });
            }
        }
    }
    jobs
}

fn row_from(name: String, r: MetricReport<f64>) -> ReportRow {
    ReportRow {
        name,
        value: Some(r.value),
        abs_error: Some(r.abs_error),
        method: r.method,
        n_reps: r.n_reps,
        seed: r.seed,
        status: "ok".into(),
    }
}

fn error_row(name: String, method: Method, e: &Error) -> ReportRow {
    ReportRow {
        name,
        value: None,
        abs_error: None,
        method,
        n_reps: None,
        seed: None,
        status: format!("error: {e}"),
    }
}

fn mixture_prior(p: DesignPrior<f64>, what: MetricKind) -> Result<crate::Mixture> {
    match p {
        DesignPrior::Mixture(m) => Ok(m),
        other => Err(Error::Domain(format!(
            "{} needs an untruncated mixture design prior, got {}",
            what.name(),
            other.kind()
        ))),
    }
}

fn analytic(name: String, value: f64) -> ReportRow {
    row_from(name, MetricReport::quadrature("", value, 0.0))
}

fn evaluate_job(cfg: &RunConfig, s_new: Option<f64>, job: &Job<'_>) -> Vec<ReportRow> {
    match evaluate_job_inner(cfg, s_new, job) {
        Ok(rows) => rows,
        Err(e) => {
            let suffix = (job.spec.metric == MetricKind::DecisionTable).then_some("p_fp");
            let name = if suffix.is_some() {
                job.name(None)
            } else {
                job.name(suffix)
            };
            vec![error_row(name, job.spec.method, &e)]
        }
    }
}

fn evaluate_job_inner(cfg: &RunConfig, s_new: Option<f64>, job: &Job<'_>) -> Result<Vec<ReportRow>> {
    let m = job.spec;
    let rule = cfg.rule()?;
    let d0 = rule.delta_null;
    let design_prior = job.design.as_deref().map(|d| cfg.design_prior(d)).transpose()?;
    let need_prior = || design_prior.clone().ok_or_else(|| Error::Config("design prior missing".into()));

    match m.metric {
        MetricKind::NullMass => {
            if cfg.is_control() {
                return Err(Error::Domain("null mass is defined for contrast designs".into()));
            }
            return Ok(vec![analytic(job.name(None), need_prior()?.null_mass(&rule))]);
        }
        MetricKind::PriorProbBenefit => {
            if cfg.is_control() {
                return Err(Error::Domain("prior probability of benefit is defined for contrast designs".into()));
            }
            let p = cfg.analysis_prior(&job.analysis)?;
            return Ok(vec![analytic(job.name(None), prior_prob_benefit(&p, &rule))]);
        }
        _ => {}
    }

    let design = cfg.build_design(&job.analysis, s_new)?;
    let ev = OcEvaluator::new(design)?
        .with_quadrature(quadrature_for(cfg))
        .with_monte_carlo(mc_for(cfg));
    let control = matches!(ev.design(), Design::Control(_));
    let truth_at = |delta: f64| -> Result<Truth<f64>> {
        if control {
            let tc = m.theta_c.ok_or_else(|| Error::Config("theta_c is required in control mode".into()))?;
            Ok(Truth::Control {
                theta_c: tc,
                theta_t: tc + delta,
            })
        } else {
            Ok(Truth::Contrast(delta))
        }
    };

    let metric = match m.metric {
        MetricKind::ConditionalPower => {
            Metric::ConditionalPower(truth_at(m.delta.ok_or_else(|| Error::Config("delta is required".into()))?)?)
        }
        MetricKind::ClassicalType1 => Metric::ConditionalPower(truth_at(d0)?),
        MetricKind::Average => Metric::Average {
            prior: need_prior()?,
            delta_star: m.delta_star.unwrap_or(d0),
        },
        MetricKind::AverageType1 => Metric::Average {
            prior: need_prior()?,
            delta_star: d0,
        },
        MetricKind::AverageType1Null => Metric::AverageType1Null(mixture_prior(need_prior()?, m.metric)?),
        MetricKind::PreposteriorFp => Metric::PreposteriorFp(mixture_prior(need_prior()?, m.metric)?),
        MetricKind::UpperBoundFp => Metric::UpperBoundFp(need_prior()?),
        MetricKind::DecisionTable => {
            let p = mixture_prior(need_prior()?, m.metric)?;
            let (t, method, n, seed, se): (_, _, _, _, Box<dyn Fn(f64) -> f64>) = match m.method {
                Method::Quadrature => (ev.decision_table(&p)?, Method::Quadrature, None, None, Box::new(|_| 0.0)),
                Method::MonteCarlo => {
                    let mc = mc_for(cfg);
                    let n = mc.n_reps as f64;
                    (
                        ev.mc_decision_table(&p, &mc)?,
                        Method::MonteCarlo,
                        Some(mc.n_reps),
                        Some(mc.seed),
                        Box::new(move |q: f64| (q * (1.0 - q) / n).sqrt()),
                    )
                }
            };
            return Ok([("p_fp", t.p_fp), ("p_tp", t.p_tp), ("p_tn", t.p_tn), ("p_fn", t.p_fn)]
                .into_iter()
                .map(|(s, v)| ReportRow {
                    name: job.name(Some(s)),
                    value: Some(v),
                    abs_error: Some(se(v)),
                    method,
                    n_reps: n,
                    seed,
                    status: "ok".into(),
                })
                .collect());
        }
        MetricKind::MaxClassicalType1 | MetricKind::MinClassicalType1 => {
            if !control {
                return Err(Error::Domain(
                    "the classical type I error of a contrast design is a single value; use classical_type1".into(),
                ));
            }
            let [lo, hi] = m.range.ok_or_else(|| Error::Config("range is required".into()))?;
            let which = if m.metric == MetricKind::MaxClassicalType1 {
                Extremum::Max
            } else {
                Extremum::Min
            };
            let (at, v) = ev.scan_extremum(lo, hi, which, m.delta_star.unwrap_or(d0))?;
            log::info!("{}: {v} at theta_c = {at}", job.name(None));
            return Ok(vec![analytic(job.name(None), v)]);
        }
        MetricKind::NullMass | MetricKind::PriorProbBenefit => unreachable!(),
    };
    let r = match m.method {
        Method::Quadrature => ev.evaluate(&metric)?,
        Method::MonteCarlo => ev.mc_crosscheck(&metric, &mc_for(cfg))?,
    };
    Ok(vec![row_from(job.name(None), r)])
}

fn evaluate_curve(cfg: &RunConfig, s_new: Option<f64>, c: &crate::config::CurveSpec) -> Result<Vec<(f64, f64)>> {
    let analysis = c.analysis_prior.as_deref().unwrap_or(cfg.default_analysis_prior());
    let ev = OcEvaluator::new(cfg.build_design(analysis, s_new)?)?.with_quadrature(quadrature_for(cfg));
    let d0 = ev.rule().delta_null;
    let [lo, hi] = c.range;
    match c.kind {
        CurveKind::ClassicalType1 => ev.cp_curve(lo, hi, c.points, d0).and_then(|v| {
            if matches!(ev.design(), Design::Contrast(_)) {
                ev.classical_type1_curve(lo, hi, c.points)
            } else {
                Ok(v)
            }
        }),
        CurveKind::ConditionalPower => ev.cp_curve(lo, hi, c.points, c.delta_star.unwrap_or(d0)),
    }
}

/// Evaluates every metric and curve. Returns `Err` only when the run cannot
/// start; individual failures are recorded in the output.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let s_new = resolve_s_new(cfg)?;
    let s = s_new.as_ref().map(|x| x.value);
    let jobs = expand(cfg);
    let rows: Vec<ReportRow> = jobs
        .par_iter()
        .map(|j| evaluate_job(cfg, s, j))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let curves = cfg
        .curves
        .par_iter()
        .map(|c| Curve {
            name: c.name.clone(),
            points: evaluate_curve(cfg, s, c).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(RunOutput { rows, curves, s_new })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    quadrature_tol: f64,
    mc_reps: u64,
    report_rows: usize,
    failures: usize,
    curves: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    s_new: Option<&'a SolvedSNew>,
    config: &'a RunConfig,
}

pub fn manifest_text(cfg: &RunConfig, out: &RunOutput) -> Result<String> {
    let m = Manifest {
        tool: TOOL,
        version: VERSION,
        seed: cfg.seed,
        quadrature_tol: cfg.quadrature_tol,
        mc_reps: cfg.mc_reps,
        report_rows: out.rows.len(),
        failures: out.failures(),
        curves: out.curves.iter().map(|c| format!("curve_{}.csv", c.name)).collect(),
        s_new: out.s_new.as_ref(),
        config: cfg,
    };
    toml::to_string_pretty(&m).map_err(|e| Error::Config(e.to_string()))
}

/// Writes `report.csv`, one `curve_<name>.csv` per successful curve and
/// `manifest.toml` into `dir`.
pub fn write_artifacts(cfg: &RunConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_report(fs::File::create(dir.join("report.csv"))?, &out.rows)?;
    for c in &out.curves {
        match &c.points {
            Ok(p) => write_curve(fs::File::create(dir.join(format!("curve_{}.csv", c.name)))?, p)?,
            Err(e) => log::error!("curve {}: {e}", c.name),
        }
    }
    fs::write(dir.join("manifest.toml"), manifest_text(cfg, out)?)?;
    Ok(())
}

pub fn run(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    let out = execute(cfg)?;
    write_artifacts(cfg, &out, dir)?;
    Ok(out)
}

/// Builds and runs the calibration described by the `[calibration]` section.
/// `target` and `grid` override the section when given.
pub fn calibrate_config(
    cfg: &RunConfig,
    target: Option<f64>,
    grid: Option<Vec<ParamGrid<f64>>>,
) -> Result<Calibration<f64>> {
    let cal = cfg
        .calibration
        .as_ref()
        .ok_or_else(|| Error::Config("config has no [calibration] section".into()))?;
    let target = target
        .or(cal.target)
        .ok_or_else(|| Error::Config("calibration target missing; pass --target or set calibration.target".into()))?;
    let grid = match grid {
        Some(g) => g,
        None => cal.grid.iter().map(grid_from_spec).collect::<Result<_>>()?,
    };
    let uses_weight = grid.iter().any(|g| g.param == crate::Param::RobustWeight);
    let s_new = resolve_s_new(cfg)?.map(|s| s.value);
    let req = CalibrationRequest {
        base: cfg.build_design(cfg.default_analysis_prior(), s_new)?,
        borrowing: if uses_weight { Some(cfg.borrowing_prior()?) } else { None },
        grid,
        metric: cal.metric,
        design_prior: cfg.design_prior(&cal.design_prior)?,
        target,
        alternative: cal.alternative,
    };
    calibrate(&req, &quadrature_for(cfg))
}
