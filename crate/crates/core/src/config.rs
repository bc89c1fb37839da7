//! TOML run configuration: schema, parsing, validation and emission.
//!
//! Mixtures are written as arrays of `{ weight, mean, sd }` tables. Design
//! priors and metric requests refer to mixtures by name.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::{BorrowingPrior, CalibrationMetric, Param, ParamGrid, RootChoice};
use crate::design::{ContrastBorrowDesign, ControlBorrowDesign, Design, Direction, SuccessRule};
use crate::metrics::{DesignPrior, Method};
use crate::mixture::{MixtureNormal, NormalComponent, TruncatedMixture};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 20_240_101;
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;
pub const DEFAULT_MC_REPS: u64 = 1_000_000;
pub const DEFAULT_CURVE_POINTS: usize = 201;

fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_tol() -> f64 {
    DEFAULT_QUADRATURE_TOL
}
fn default_mc_reps() -> u64 {
    DEFAULT_MC_REPS
}
fn default_points() -> usize {
    DEFAULT_CURVE_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub quadrature_tol: f64,
    #[serde(default = "default_mc_reps")]
    pub mc_reps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub design: DesignSpec,
    #[serde(default)]
    pub analysis_priors: BTreeMap<String, Vec<ComponentSpec>>,
    #[serde(default)]
    pub design_priors: BTreeMap<String, DesignPriorSpec>,
    #[serde(default)]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub curves: Vec<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    #[serde(default)]
    pub delta_null: f64,
    pub direction: Direction,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignSpec {
    Control {
        n_t: u32,
        n_c: u32,
        sigma: f64,
        /// Analysis prior of the treatment mean.
        treatment_prior: String,
        /// Default analysis prior of the control mean.
        control_prior: String,
        rule: RuleSpec,
    },
    Contrast {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s_new: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        solve_s_new: Option<SolveSNew>,
        /// Default analysis prior of the contrast.
        prior: String,
        rule: RuleSpec,
    },
}

/// Chooses `s_new` so the classical type I error under `analysis_prior`
/// equals `target_type1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSNew {
    pub target_type1: f64,
    pub analysis_prior: String,
    pub bracket: [f64; 2],
    #[serde(default)]
    pub root: RootChoice,
}

/// Mixture given inline or by reference to an analysis prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DesignPriorSpec {
    Mixture {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        components: Option<Vec<ComponentSpec>>,
    },
    Truncated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        components: Option<Vec<ComponentSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lower: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper: Option<f64>,
    },
    PointMass {
        at: f64,
    },
    SpikeAndSlab {
        spike_weight: f64,
        /// Defaults to the null of the success rule.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spike_at: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        components: Option<Vec<ComponentSpec>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ConditionalPower,
    ClassicalType1,
    Average,
    AverageType1,
    AverageType1Null,
    PreposteriorFp,
    UpperBoundFp,
    DecisionTable,
    PriorProbBenefit,
    NullMass,
    MaxClassicalType1,
    MinClassicalType1,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::ConditionalPower => "conditional_power",
            MetricKind::ClassicalType1 => "classical_type1",
            MetricKind::Average => "average",
            MetricKind::AverageType1 => "average_type1",
            MetricKind::AverageType1Null => "average_type1_null",
            MetricKind::PreposteriorFp => "preposterior_fp",
            MetricKind::UpperBoundFp => "upper_bound_fp",
            MetricKind::DecisionTable => "decision_table",
            MetricKind::PriorProbBenefit => "prior_prob_benefit",
            MetricKind::NullMass => "null_mass",
            MetricKind::MaxClassicalType1 => "max_classical_type1",
            MetricKind::MinClassicalType1 => "min_classical_type1",
        }
    }

    pub fn uses_analysis_prior(self) -> bool {
        !matches!(self, MetricKind::NullMass)
    }

    pub fn uses_design_prior(self) -> bool {
        matches!(
            self,
            MetricKind::Average
                | MetricKind::AverageType1
                | MetricKind::AverageType1Null
                | MetricKind::PreposteriorFp
                | MetricKind::UpperBoundFp
                | MetricKind::DecisionTable
                | MetricKind::NullMass
        )
    }
}

/// A single name or a list of names; lists expand into one row per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn names(&self) -> Vec<&str> {
        match self {
            OneOrMany::One(s) => vec![s.as_str()],
            OneOrMany::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub metric: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Overrides the design's default analysis prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_prior: Option<OneOrMany>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_prior: Option<OneOrMany>,
    /// Contrast for averages and scans; defaults to the null.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
    /// True contrast for conditional power.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// True control mean for conditional power in control mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default = "default_method")]
    pub method: Method,
}

fn default_method() -> Method {
    Method::Quadrature
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    ClassicalType1,
    ConditionalPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub name: String,
    pub kind: CurveKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis_prior: Option<String>,
    pub range: [f64; 2],
    #[serde(default = "default_points")]
    pub points: usize,
    /// Control mode: `theta_t = theta_c + delta_star` along the curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustSpec {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub param: Param,
    pub range: [f64; 2],
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub metric: CalibrationMetric,
    pub design_prior: String,
    /// Contrast at which power is reported for each grid point.
    pub alternative: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Analysis prior whose weight is calibrated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustSpec>,
    #[serde(default)]
    pub grid: Vec<GridSpec>,
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config(e.to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        Error::Config(format!("at `{path}`: {}", inner.trim_end()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serializes a configuration with every default written out.
pub fn emit_config(cfg: &RunConfig) -> Result<String> {
    toml::to_string_pretty(cfg).map_err(|e| Error::Config(e.to_string()))
}

/// Renders mixtures as an `[analysis_priors]` table that can be pasted into
/// a configuration.
pub fn mixtures_to_toml(named: &[(&str, &MixtureNormal<f64>)]) -> Result<String> {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        analysis_priors: BTreeMap<&'a str, Vec<ComponentSpec>>,
    }
    let analysis_priors = named.iter().map(|(n, m)| (*n, components_of(m))).collect();
    toml::to_string(&Wrapper { analysis_priors }).map_err(|e| Error::Config(e.to_string()))
}

pub fn components_of(m: &MixtureNormal<f64>) -> Vec<ComponentSpec> {
    m.iter()
        .map(|(w, c)| ComponentSpec {
            weight: w,
            mean: c.mean,
            sd: c.sd,
        })
        .collect()
}

fn build_mixture(name: &str, comps: &[ComponentSpec]) -> Result<MixtureNormal<f64>> {
    let triples: Vec<(f64, f64, f64)> = comps.iter().map(|c| (c.weight, c.mean, c.sd)).collect();
    MixtureNormal::from_triples(&triples).map_err(|e| Error::InvalidMixture {
        name: name.to_string(),
        reason: match e {
            Error::InvalidMixture { reason, .. } => reason,
            other => other.to_string(),
        },
    })
}

impl RunConfig {
    pub fn rule(&self) -> Result<SuccessRule<f64>> {
        let r = match &self.design {
            DesignSpec::Control { rule, .. } | DesignSpec::Contrast { rule, .. } => rule,
        };
        SuccessRule::new(r.delta_null, r.direction, r.confidence)
            .map_err(|e| Error::Config(format!("design.rule: {e}")))
    }

    pub fn is_control(&self) -> bool {
        matches!(self.design, DesignSpec::Control { .. })
    }

    pub fn default_analysis_prior(&self) -> &str {
        match &self.design {
            DesignSpec::Control { control_prior, .. } => control_prior,
            DesignSpec::Contrast { prior, .. } => prior,
        }
    }

    pub fn analysis_prior(&self, name: &str) -> Result<MixtureNormal<f64>> {
        let comps = self
            .analysis_priors
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown analysis prior `{name}`")))?;
        build_mixture(name, comps)
    }

    fn inline_or_ref(
        &self,
        owner: &str,
        from: &Option<String>,
        components: &Option<Vec<ComponentSpec>>,
    ) -> Result<MixtureNormal<f64>> {
        match (from, components) {
            (Some(r), None) => self.analysis_prior(r).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("design prior `{owner}`: {m}")),
                other => other,
            }),
            (None, Some(c)) => build_mixture(owner, c),
            _ => Err(Error::Config(format!(
                "design prior `{owner}` needs exactly one of `from` or `components`"
            ))),
        }
    }

    pub fn design_prior(&self, name: &str) -> Result<DesignPrior<f64>> {
        let spec = self
            .design_priors
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown design prior `{name}`")))?;
        Ok(match spec {
            DesignPriorSpec::Mixture { from, components } => {
                DesignPrior::Mixture(self.inline_or_ref(name, from, components)?)
            }
            DesignPriorSpec::Truncated {
                from,
                components,
                lower,
                upper,
            } => {
                let base = self.inline_or_ref(name, from, components)?;
                let t = TruncatedMixture::new(
                    base,
                    lower.unwrap_or(f64::NEG_INFINITY),
                    upper.unwrap_or(f64::INFINITY),
                )
                .map_err(|e| Error::Config(format!("design prior `{name}`: {e}")))?;
                DesignPrior::Truncated(t)
            }
            DesignPriorSpec::PointMass { at } => DesignPrior::point_mass(*at)
                .map_err(|e| Error::Config(format!("design prior `{name}`: {e}")))?,
            DesignPriorSpec::SpikeAndSlab {
                spike_weight,
                spike_at,
                from,
                components,
            } => {
                let slab = self.inline_or_ref(name, from, components)?;
                let at = spike_at.unwrap_or(self.rule()?.delta_null);
                DesignPrior::spike_and_slab(at, *spike_weight, slab)
                    .map_err(|e| Error::Config(format!("design prior `{name}`: {e}")))?
            }
        })
    }

    /// The design with `analysis` as its borrowed prior. Contrast designs
    /// take `s_new` as given; a solved value must be passed in.
    pub fn build_design(&self, analysis: &str, s_new: Option<f64>) -> Result<Design<f64>> {
        let rule = self.rule()?;
        let prior = self.analysis_prior(analysis)?;
        match &self.design {
            DesignSpec::Control {
                n_t,
                n_c,
                sigma,
                treatment_prior,
                ..
            } => {
                let pt = self.analysis_prior(treatment_prior)?;
                ControlBorrowDesign::new(*n_t, *n_c, *sigma, pt, prior, rule)
                    .map(Design::Control)
                    .map_err(|e| Error::Config(format!("design: {e}")))
            }
            DesignSpec::Contrast { s_new: given, .. } => {
                let s = s_new.or(*given).ok_or_else(|| {
                    Error::Config("contrast design has no s_new; solve it first".into())
                })?;
                ContrastBorrowDesign::new(s, prior, rule)
                    .map(Design::Contrast)
                    .map_err(|e| Error::Config(format!("design: {e}")))
            }
        }
    }

    pub fn borrowing_prior(&self) -> Result<BorrowingPrior<f64>> {
        let cal = self
            .calibration
            .as_ref()
            .ok_or_else(|| Error::Config("no [calibration] section".into()))?;
        let informative = cal
            .informative
            .as_deref()
            .ok_or_else(|| Error::Config("calibration.informative is required for robust_weight".into()))?;
        let robust = cal
            .robust
            .ok_or_else(|| Error::Config("calibration.robust is required for robust_weight".into()))?;
        Ok(BorrowingPrior {
            informative: self.analysis_prior(informative)?,
            robust: NormalComponent::new(robust.mean, robust.sd)
                .map_err(|e| Error::Config(format!("calibration.robust: {e}")))?,
        })
    }

    /// Checks every reference and every mixture.
    pub fn validate(&self) -> Result<()> {
        if !(self.quadrature_tol > 0.0 && self.quadrature_tol < 1e-2) {
            return Err(Error::Config(format!(
                "quadrature_tol must lie in (0, 0.01), got {}",
                self.quadrature_tol
            )));
        }
        crate::metrics::McConfig::new(self.mc_reps, self.seed)
            .map_err(|e| Error::Config(format!("mc_reps: {e}")))?;
        for name in self.analysis_priors.keys() {
            self.analysis_prior(name)?;
        }
        for name in self.design_priors.keys() {
            self.design_prior(name)?;
        }
        self.rule()?;
        match &self.design {
            DesignSpec::Control {
                treatment_prior,
                control_prior,
                ..
            } => {
                self.analysis_prior(treatment_prior)?;
                self.analysis_prior(control_prior)?;
            }
            DesignSpec::Contrast {
                s_new,
                solve_s_new,
                prior,
                ..
            } => {
                self.analysis_prior(prior)?;
                match (s_new, solve_s_new) {
                    (Some(s), None) if *s > 0.0 && s.is_finite() => {}
                    (Some(s), None) => {
                        return Err(Error::Config(format!("design.s_new must be positive, got {s}")))
                    }
                    (None, Some(sol)) => {
                        self.analysis_prior(&sol.analysis_prior)?;
                        if !(sol.bracket[0] > 0.0 && sol.bracket[1] > sol.bracket[0]) {
                            return Err(Error::Config("design.solve_s_new.bracket must satisfy 0 < lo < hi".into()));
                        }
                        if !(sol.target_type1 > 0.0 && sol.target_type1 < 1.0) {
                            return Err(Error::Config("design.solve_s_new.target_type1 must lie in (0, 1)".into()));
                        }
                    }
                    _ => {
                        return Err(Error::Config(
                            "contrast design needs exactly one of `s_new` or `solve_s_new`".into(),
                        ))
                    }
                }
            }
        }
        self.build_design(self.default_analysis_prior(), Some(1.0))?;
        for (i, m) in self.metrics.iter().enumerate() {
            let at = format!("metrics[{i}] ({})", m.metric.name());
            if let Some(a) = &m.analysis_prior {
                for n in a.names() {
                    self.analysis_prior(n).map_err(|e| Error::Config(format!("{at}: {e}")))?;
                }
            }
            match (&m.design_prior, m.metric.uses_design_prior()) {
                (Some(d), true) => {
                    for n in d.names() {
                        self.design_prior(n).map_err(|e| Error::Config(format!("{at}: {e}")))?;
                    }
                }
                (None, true) => return Err(Error::Config(format!("{at}: design_prior is required"))),
                (Some(_), false) => {
                    return Err(Error::Config(format!("{at}: design_prior is not used by this metric")))
                }
                (None, false) => {}
            }
            match m.metric {
                MetricKind::ConditionalPower => {
                    if m.delta.is_none() {
                        return Err(Error::Config(format!("{at}: delta is required")));
                    }
                    if self.is_control() && m.theta_c.is_none() {
                        return Err(Error::Config(format!("{at}: theta_c is required in control mode")));
                    }
                }
                MetricKind::ClassicalType1 if self.is_control() && m.theta_c.is_none() => {
                    return Err(Error::Config(format!("{at}: theta_c is required in control mode")));
                }
                MetricKind::MaxClassicalType1 | MetricKind::MinClassicalType1 => match m.range {
                    Some([a, b]) if b > a => {}
                    _ => return Err(Error::Config(format!("{at}: range [lo, hi] with lo < hi is required"))),
                },
                _ => {}
            }
        }
        for c in &self.curves {
            if let Some(a) = &c.analysis_prior {
                self.analysis_prior(a)
                    .map_err(|e| Error::Config(format!("curve `{}`: {e}", c.name)))?;
            }
            if c.points < 2 || !(c.range[1] > c.range[0]) {
                return Err(Error::Config(format!(
                    "curve `{}` needs points >= 2 and range lo < hi",
                    c.name
                )));
            }
            if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '-') {
                return Err(Error::Config(format!(
                    "curve name `{}` must be non-empty and use only letters, digits, `_` or `-`",
                    c.name
                )));
            }
        }
        if let Some(cal) = &self.calibration {
            self.design_prior(&cal.design_prior)
                .map_err(|e| Error::Config(format!("calibration: {e}")))?;
            if cal.informative.is_some() || cal.robust.is_some() {
                self.borrowing_prior()?;
            }
            for g in &cal.grid {
                grid_from_spec(g)?;
            }
        }
        Ok(())
    }
}

pub fn grid_from_spec(g: &GridSpec) -> Result<ParamGrid<f64>> {
    ParamGrid::linspace(g.param, g.range[0], g.range[1], g.steps)
        .map_err(|e| Error::Config(format!("calibration grid: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[design]
mode = "contrast"
s_new = 0.4
prior = "robust"
rule = { direction = "greater", confidence = 0.975 }

[analysis_priors]
robust = [{ weight = 0.7, mean = 0.48, sd = 0.121 }, { weight = 0.3, mean = 0.0, sd = 2.87 }]

[design_priors.adult]
kind = "mixture"
components = [{ weight = 1.0, mean = 0.48, sd = 0.121 }]

[[metrics]]
metric = "upper_bound_fp"
design_prior = "adult"
"#;

    #[test]
    fn defaults_are_materialized_and_round_trip() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.mc_reps, DEFAULT_MC_REPS);
        assert_eq!(c.quadrature_tol, DEFAULT_QUADRATURE_TOL);
        assert_eq!(c.metrics[0].method, Method::Quadrature);
        let text = emit_config(&c).unwrap();
        assert!(text.contains("seed = 20240101"));
        assert_eq!(parse_config(&text).unwrap(), c);
    }

    #[test]
    fn bad_weights_name_the_mixture() {
        let t = MINIMAL.replace("weight = 0.3", "weight = 0.2");
        match parse_config(&t) {
            Err(Error::InvalidMixture { name, .. }) => assert_eq!(name, "robust"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_path() {
        let t = MINIMAL.replace("s_new = 0.4", "s_new = 0.4\nsnew = 1");
        let e = parse_config(&t).unwrap_err().to_string();
        assert!(e.contains("snew"), "{e}");
        let t = MINIMAL.replace("mean = 0.48, sd = 0.121 }, {", "mean = 0.48, sd = 0.121, w = 1 }, {");
        let e = parse_config(&t).unwrap_err().to_string();
        assert!(e.contains("analysis_priors"), "{e}");
    }

    #[test]
    fn dangling_reference_is_named() {
        let t = MINIMAL.replace("design_prior = \"adult\"", "design_prior = \"child\"");
        let e = parse_config(&t).unwrap_err().to_string();
        assert!(e.contains("child"), "{e}");
        let t = MINIMAL.replace("prior = \"robust\"", "prior = \"nope\"");
        assert!(parse_config(&t).unwrap_err().to_string().contains("nope"));
    }

    #[test]
    fn missing_field_and_s_new_exclusivity() {
        let t = MINIMAL.replace("s_new = 0.4\n", "");
        assert!(parse_config(&t).is_err());
        let t = MINIMAL.replace("confidence = 0.975", "");
        let e = parse_config(&t).unwrap_err().to_string();
        assert!(e.contains("confidence"), "{e}");
    }

    #[test]
    fn mixtures_emit_in_config_schema() {
        let m = MixtureNormal::from_triples(&[(0.25, -1.0, 2.0), (0.75, 3.0, 0.5)]).unwrap();
        let text = mixtures_to_toml(&[("fit", &m)]).unwrap();
        let cfg = format!(
            "{text}\n[design]\nmode = \"contrast\"\ns_new = 1.0\nprior = \"fit\"\nrule = {{ direction = \"greater\", confidence = 0.9 }}\n"
        );
        let c = parse_config(&cfg).unwrap();
        assert_eq!(c.analysis_prior("fit").unwrap(), m);
    }
}
