//! Operating characteristics of a design: conditional power, classical and
//! average type I error, pre-posterior false positives and the decision table.
//!
//! Everything is computed by quadrature in the canonical frame of the design
//! (success means a large contrast). A seeded simulation path estimates the
//! same quantities and takes over when the success region is not one-sided.
//!
//! In control-borrowing mode the average over a normal design component
//! `theta_c ~ N(m, s^2)` collapses to one integral over the control-arm mean:
//! marginally `ybar_c ~ N(m, s^2 + se_c^2)`, and given `ybar_c` the treatment
//! mean is normal, so the treatment-arm tail beyond the critical curve is
//! analytic. A point mass is the case `s = 0`.

mod montecarlo;
mod prior;
mod report;

use std::cell::RefCell;

use rand::Rng as _;
use rayon::prelude::*;

pub use montecarlo::{tally, McConfig, Tally, MIN_REPS};
pub use prior::DesignPrior;
pub use report::{DecisionTable, MetricReport, Method};

use crate::design::{ContrastFrame, ControlFrame, Design, Direction, SuccessRule};
use crate::mixture::{MixtureNormal, TruncatedMixture, HULL_SDS};
use crate::quadrature::{integrate_with_breaks, Integral, QuadratureConfig};
use crate::roots::golden_max;
use crate::special::{norm_cdf, norm_pdf, norm_sf};
use crate::{Error, Real, Result};

/// Default points for type I and power curves.
pub const CURVE_POINTS: usize = 201;

/// Quadrature tolerances used for metrics unless overridden.
pub fn metric_quadrature<T: Real>() -> QuadratureConfig<T> {
    let floor = T::epsilon() * T::lit(100.0);
    QuadratureConfig {
        abs_tol: T::lit(1e-10).max(floor),
        rel_tol: T::lit(1e-8).max(floor),
        max_subdivisions: 4000,
    }
}

/// True parameter values for conditional power, in design units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth<T> {
    Contrast(T),
    Control { theta_c: T, theta_t: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Max,
    Min,
}

/// A metric request. Prior arguments are in design units.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric<T> {
    ConditionalPower(Truth<T>),
    /// Average of conditional power over a design prior. In control mode the
    /// prior is over `theta_c` and `theta_t = theta_c + delta_star`; in
    /// contrast mode the prior is over the contrast and `delta_star` is unused.
    Average {
        prior: DesignPrior<T>,
        delta_star: T,
    },
    AverageType1Null(MixtureNormal<T>),
    PreposteriorFp(MixtureNormal<T>),
    UpperBoundFp(DesignPrior<T>),
}

impl<T> Metric<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::ConditionalPower(_) => "conditional_power",
            Metric::Average { .. } => "average_type1",
            Metric::AverageType1Null(_) => "average_type1_null",
            Metric::PreposteriorFp(_) => "preposterior_fp",
            Metric::UpperBoundFp(_) => "upper_bound_fp",
        }
    }

    fn stream_offset(&self) -> u64 {
        match self {
            Metric::ConditionalPower(_) => 1,
            Metric::Average { .. } => 2,
            Metric::AverageType1Null(_) => 3,
            Metric::PreposteriorFp(_) => 4,
            Metric::UpperBoundFp(_) => 5,
        }
    }
}

/// Prior probability that the contrast lies on the success side of the null.
pub fn prior_prob_benefit<T: Real>(p: &MixtureNormal<T>, rule: &SuccessRule<T>) -> T {
    rule.tail(p)
}

#[derive(Debug, Clone)]
enum Frame<T> {
    Control(ControlFrame<T>),
    Contrast {
        frame: ContrastFrame<T>,
        boundary: Option<T>,
    },
}

/// Evaluates operating characteristics of one design.
#[derive(Debug, Clone)]
pub struct OcEvaluator<T> {
    design: Design<T>,
    frame: Frame<T>,
    monotone: bool,
    cfg: QuadratureConfig<T>,
    mc: McConfig,
}

fn note_non_monotone(e: Error) -> Result<bool> {
    match e {
        Error::NonMonotone { at } => {
            log::warn!(
                "success probability is not monotone near {at}; metrics will use simulation"
            );
            Ok(false)
        }
        other => Err(other),
    }
}

/// Runs a quadrature whose integrand can fail, surfacing the first failure.
fn guarded<T: Real, F>(
    f: F,
    run: impl FnOnce(&mut dyn FnMut(T) -> T) -> Result<Integral<T>>,
) -> Result<Integral<T>>
where
    F: Fn(T) -> Result<T>,
{
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let mut g = |x: T| match f(x) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            T::zero()
        }
    };
    let r = run(&mut g);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    r
}

fn sorted_points<T: Real>(lo: T, hi: T, interior: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut pts = vec![lo, hi];
    pts.extend(interior.into_iter().filter(|&x| x > lo && x < hi));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
    pts.dedup();
    pts
}

fn clamp01<T: Real>(x: T) -> T {
    x.max(T::zero()).min(T::one())
}

impl<T: Real> OcEvaluator<T> {
    pub fn new(design: Design<T>) -> Result<Self> {
        let (frame, monotone) = match &design {
            Design::Control(d) => {
                let monotone = match d.check_monotone() {
                    Ok(()) => true,
                    Err(e) => note_non_monotone(e)?,
                };
                (Frame::Control(d.frame()), monotone)
            }
            Design::Contrast(d) => {
                let frame = d.frame();
                let monotone = match frame.check_monotone() {
                    Ok(()) => true,
                    Err(e) => note_non_monotone(e)?,
                };
                let boundary = if monotone {
                    Some(frame.boundary()?)
                } else {
                    None
                };
                (Frame::Contrast { frame, boundary }, monotone)
            }
        };
        Ok(Self {
            design,
            frame,
            monotone,
            cfg: metric_quadrature(),
            mc: McConfig::default(),
        })
    }

    pub fn with_quadrature(mut self, cfg: QuadratureConfig<T>) -> Self {
        self.cfg = cfg;
        self
    }

    /// Simulation settings used when the quadrature path is unavailable.
    pub fn with_monte_carlo(mut self, mc: McConfig) -> Self {
        self.mc = mc;
        self
    }

    pub fn design(&self) -> &Design<T> {
        &self.design
    }

    pub fn rule(&self) -> &SuccessRule<T> {
        self.design.rule()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    fn sign(&self) -> T {
        self.rule().direction.sign()
    }

    fn delta_null_c(&self) -> T {
        self.sign() * self.rule().delta_null
    }

    /// Critical value of a contrast design in design units, if the success
    /// region is one-sided.
    pub fn critical_value(&self) -> Option<T> {
        match &self.frame {
            Frame::Contrast { boundary, .. } => boundary.map(|b| self.sign() * b),
            Frame::Control(_) => None,
        }
    }

    fn contrast_parts(&self) -> Result<(&ContrastFrame<T>, T)> {
        match &self.frame {
            Frame::Contrast {
                frame,
                boundary: Some(b),
            } => Ok((frame, *b)),
            Frame::Contrast { boundary: None, .. } => Err(Error::NonMonotone { at: f64::NAN }),
            Frame::Control(_) => Err(Error::Domain(
                "this metric is defined for contrast-borrowing designs only".into(),
            )),
        }
    }

    fn control_frame(&self) -> Result<&ControlFrame<T>> {
        match &self.frame {
            Frame::Control(cf) if self.monotone => Ok(cf),
            Frame::Control(_) => Err(Error::NonMonotone { at: f64::NAN }),
            Frame::Contrast { .. } => Err(Error::Domain("expected a control-borrowing design".into())),
        }
    }

    // ---- quadrature path, canonical frame ----

    fn control_breaks(cf: &ControlFrame<T>, lo: T, hi: T, centre: T) -> Vec<T> {
        let sc2 = cf.se_c * cf.se_c;
        let mut inner = vec![centre];
        for c in cf.prior_c.components() {
            let scale = (c.variance() + sc2).sqrt();
            for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
                inner.push(c.mean + T::lit(k) * scale);
            }
        }
        sorted_points(lo, hi, inner)
    }

    /// `E[CP]` with `theta_c ~ N(m, s^2)` and `theta_t = theta_c + dstar`.
    fn collapsed(&self, cf: &ControlFrame<T>, m: T, s: T, dstar: T, cfg: &QuadratureConfig<T>) -> Result<Integral<T>> {
        let sc2 = cf.se_c * cf.se_c;
        let st2 = cf.se_t * cf.se_t;
        let s2 = s * s;
        let tot = s2 + sc2;
        let sd_y = tot.sqrt();
        let k = s2 / tot;
        let spread = (s2 * sc2 / tot + st2).sqrt();
        let hull = T::lit(HULL_SDS) * sd_y;
        let pts = Self::control_breaks(cf, m - hull, m + hull, m);
        guarded(
            |y: T| {
                let g = cf.boundary(y)?;
                let mu = m + k * (y - m);
                Ok(norm_sf((g - mu - dstar) / spread) * norm_pdf((y - m) / sd_y) / sd_y)
            },
            |f| integrate_with_breaks(f, &pts, cfg),
        )
    }

    fn control_cp_c(&self, cf: &ControlFrame<T>, theta_c: T, theta_t: T) -> Result<Integral<T>> {
        self.collapsed(cf, theta_c, T::zero(), theta_t - theta_c, &self.cfg)
    }

    fn contrast_cp_c(frame: &ContrastFrame<T>, b: T, delta: T) -> T {
        norm_sf((b - delta) / frame.s_new)
    }

    fn contrast_breaks(frame: &ContrastFrame<T>, b: T) -> Vec<T> {
        [-3.0, -1.0, 0.0, 1.0, 3.0]
            .iter()
            .map(|&k| b + T::lit(k) * frame.s_new)
            .chain(std::iter::once(frame.delta_null))
            .collect()
    }

    /// `∫_{lower}^{upper} f(delta) p(delta) d delta` for a contrast design.
    fn contrast_region<F: Fn(T) -> T>(&self, p: &MixtureNormal<T>, lower: T, upper: T, f: F) -> Result<Integral<T>> {
        let (frame, b) = self.contrast_parts()?;
        p.expect_over(f, lower, upper, &self.cfg, &Self::contrast_breaks(frame, b))
    }

    fn truncated_contrast_average(&self, t: &TruncatedMixture<T>) -> Result<Integral<T>> {
        let (frame, b) = self.contrast_parts()?;
        let scaled = QuadratureConfig {
            abs_tol: self.cfg.abs_tol * t.normalizer(),
            ..self.cfg
        };
        let mut r = t.base().expect_over(
            |d| Self::contrast_cp_c(frame, b, d),
            t.lower(),
            t.upper(),
            &scaled,
            &Self::contrast_breaks(frame, b),
        )?;
        r.value = r.value / t.normalizer();
        r.abs_error = r.abs_error / t.normalizer();
        Ok(r)
    }

    /// Conditional power at canonical truth; `(value, abs_error)`.
    fn cp_canonical(&self, truth: Truth<T>) -> Result<(T, T)> {
        let s = self.sign();
        match (truth, &self.frame) {
            (Truth::Contrast(d), Frame::Contrast { .. }) => {
                let (frame, b) = self.contrast_parts()?;
                Ok((Self::contrast_cp_c(frame, b, s * d), T::epsilon()))
            }
            (Truth::Control { theta_c, theta_t }, Frame::Control(_)) => {
                let cf = self.control_frame()?;
                let r = self.control_cp_c(cf, s * theta_c, s * theta_t)?;
                Ok((r.value, r.abs_error))
            }
            _ => Err(Error::Domain("truth does not match the borrowing mode of the design".into())),
        }
    }

    fn average_quadrature(&self, prior: &DesignPrior<T>, delta_star: T) -> Result<(T, T)> {
        let s = self.sign();
        let dir = self.rule().direction;
        match (prior.canonical(dir), &self.frame) {
            (DesignPrior::SpikeAndSlab { .. }, _) => Err(Error::Domain(
                "spike-and-slab design priors are only used for the false-positive upper bound".into(),
            )),
            (DesignPrior::PointMass(x), Frame::Contrast { .. }) => {
                self.cp_canonical(Truth::Contrast(s * x))
            }
            (DesignPrior::PointMass(x), Frame::Control(_)) => {
                let cf = self.control_frame()?;
                let r = self.control_cp_c(cf, x, x + s * delta_star)?;
                Ok((r.value, r.abs_error))
            }
            (DesignPrior::Mixture(m), Frame::Contrast { .. }) => {
                let (frame, b) = self.contrast_parts()?;
                let s2 = frame.s_new * frame.s_new;
                let v: T = m
                    .iter()
                    .map(|(w, c)| w * norm_sf((b - c.mean) / (s2 + c.variance()).sqrt()))
                    .sum();
                Ok((v, T::epsilon() * T::from_usize_lossy(m.len())))
            }
            (DesignPrior::Mixture(m), Frame::Control(_)) => {
                let cf = self.control_frame()?;
                let cfg = QuadratureConfig {
                    abs_tol: self.cfg.abs_tol / T::from_usize_lossy(m.len()),
                    ..self.cfg
                };
                let (mut v, mut e) = (T::zero(), T::zero());
                for (w, c) in m.iter() {
                    let r = self.collapsed(cf, c.mean, c.sd, s * delta_star, &cfg)?;
                    v = v + w * r.value;
                    e = e + w * r.abs_error;
                }
                Ok((v, e))
            }
            (DesignPrior::Truncated(t), Frame::Contrast { .. }) => {
                let r = self.truncated_contrast_average(&t)?;
                Ok((r.value, r.abs_error))
            }
            (DesignPrior::Truncated(t), Frame::Control(_)) => {
                let cf = self.control_frame()?;
                let r = self.nested_control(cf, t.base(), t.lower(), t.upper(), s * delta_star)?;
                let n = t.normalizer();
                Ok((r.value / n, r.abs_error / n))
            }
        }
    }

    /// Outer integral over `theta_c` of the conditional power, restricted to
    /// `[lower, upper]` and not renormalised.
    fn nested_control(&self, cf: &ControlFrame<T>, base: &MixtureNormal<T>, lower: T, upper: T, dstar: T) -> Result<Integral<T>> {
        let inner = QuadratureConfig {
            abs_tol: self.cfg.abs_tol * T::lit(0.1),
            ..self.cfg
        };
        let breaks: Vec<T> = cf.prior_c.components().iter().map(|c| c.mean).collect();
        guarded(
            |theta_c: T| Ok(self.collapsed(cf, theta_c, T::zero(), dstar, &inner)?.value),
            |f| base.expect_over(f, lower, upper, &self.cfg, &breaks),
        )
    }

    // ---- public metric API, design units ----

    /// Probability of success given the true parameter values.
    pub fn conditional_power(&self, truth: Truth<T>) -> Result<MetricReport<T>> {
        self.evaluate(&Metric::ConditionalPower(truth))
    }

    /// Conditional power without the report wrapper.
    pub fn cp(&self, truth: Truth<T>) -> Result<T> {
        Ok(self.conditional_power(truth)?.value)
    }

    /// Average of conditional power over a design prior.
    pub fn average_metric(&self, prior: &DesignPrior<T>, delta_star: T) -> Result<MetricReport<T>> {
        self.evaluate(&Metric::Average {
            prior: prior.clone(),
            delta_star,
        })
    }

    /// Control-mode average by the outer-`theta_c` nested route. Slower than
    /// [`OcEvaluator::average_metric`]; useful as an independent check.
    pub fn average_metric_nested(&self, prior: &MixtureNormal<T>, delta_star: T) -> Result<MetricReport<T>> {
        let cf = self.control_frame()?;
        let s = self.sign();
        let p = match self.rule().direction {
            Direction::Greater => prior.clone(),
            Direction::Less => prior.reflect(),
        };
        let r = self.nested_control(cf, &p, T::neg_infinity(), T::infinity(), s * delta_star)?;
        Ok(MetricReport::quadrature("average_type1", clamp01(r.value), r.abs_error))
    }

    /// Average type I error over the design prior `p` truncated to the null
    /// region.
    pub fn average_type1_null(&self, p: &MixtureNormal<T>) -> Result<MetricReport<T>> {
        self.evaluate(&Metric::AverageType1Null(p.clone()))
    }

    /// Joint probability that the effect is null or harmful and the trial
    /// succeeds.
    pub fn preposterior_fp(&self, p: &MixtureNormal<T>) -> Result<MetricReport<T>> {
        self.evaluate(&Metric::PreposteriorFp(p.clone()))
    }

    /// Classical type I error times the prior null mass.
    pub fn upper_bound_fp(&self, p: &DesignPrior<T>) -> Result<MetricReport<T>> {
        self.evaluate(&Metric::UpperBoundFp(p.clone()))
    }

    fn canonical_mixture(&self, p: &MixtureNormal<T>) -> MixtureNormal<T> {
        match self.rule().direction {
            Direction::Greater => p.clone(),
            Direction::Less => p.reflect(),
        }
    }

    fn null_truncation(&self, p: &MixtureNormal<T>) -> Result<TruncatedMixture<T>> {
        self.canonical_mixture(p)
            .truncate_below(self.delta_null_c())
            .map_err(|_| {
                Error::Domain(
                    "design prior has no mass in the null region; average type I error over it is undefined"
                        .into(),
                )
            })
    }

    fn quadrature_value(&self, metric: &Metric<T>) -> Result<(T, T)> {
        match metric {
            Metric::ConditionalPower(truth) => self.cp_canonical(*truth),
            Metric::Average { prior, delta_star } => self.average_quadrature(prior, *delta_star),
            Metric::AverageType1Null(p) => {
                self.contrast_parts()?;
                let t = self.null_truncation(p)?;
                let r = self.truncated_contrast_average(&t)?;
                Ok((r.value, r.abs_error))
            }
            Metric::PreposteriorFp(p) => {
                let (frame, b) = self.contrast_parts()?;
                let pc = self.canonical_mixture(p);
                let d0 = self.delta_null_c();
                let r = self.contrast_region(&pc, T::neg_infinity(), d0, |d| {
                    Self::contrast_cp_c(frame, b, d)
                })?;
                let mass = pc.cdf(d0);
                if mass > T::zero() {
                    let t = self.null_truncation(p)?;
                    let avg = self.truncated_contrast_average(&t)?;
                    let gap = (r.value - avg.value * mass).abs();
                    if gap.to_f64_lossy() > 1e-10 {
                        log::warn!("false-positive identity off by {gap}");
                    }
                }
                Ok((r.value, r.abs_error))
            }
            Metric::UpperBoundFp(prior) => {
                let (frame, b) = self.contrast_parts()?;
                if let DesignPrior::SpikeAndSlab { spike_location, .. } = prior {
                    if *spike_location != self.rule().delta_null {
                        return Err(Error::Domain(format!(
                            "spike must sit at the null value {}, got {spike_location}",
                            self.rule().delta_null
                        )));
                    }
                }
                let cp0 = Self::contrast_cp_c(frame, b, self.delta_null_c());
                Ok((cp0 * prior.null_mass(self.rule()), T::epsilon()))
            }
        }
    }

    /// Evaluates by quadrature, falling back to simulation when the success
    /// region is not one-sided.
    pub fn evaluate(&self, metric: &Metric<T>) -> Result<MetricReport<T>> {
        match self.quadrature_value(metric) {
            Ok((v, e)) => Ok(MetricReport::quadrature(metric.name(), clamp01(v), e)),
            Err(Error::NonMonotone { .. }) => self.mc_crosscheck(metric, &self.mc),
            Err(e) => Err(e),
        }
    }

    /// Joint (truth, decision) probabilities under a mixture design prior.
    pub fn decision_table(&self, p: &MixtureNormal<T>) -> Result<DecisionTable<T>> {
        let (frame, b) = match self.contrast_parts() {
            Ok(x) => x,
            Err(Error::NonMonotone { .. }) => return self.mc_decision_table(p, &self.mc),
            Err(e) => return Err(e),
        };
        let pc = self.canonical_mixture(p);
        let d0 = self.delta_null_c();
        let (ninf, inf) = (T::neg_infinity(), T::infinity());
        let succ = |d: T| norm_sf((b - d) / frame.s_new);
        let fail = |d: T| norm_cdf((b - d) / frame.s_new);
        Ok(DecisionTable {
            p_fp: self.contrast_region(&pc, ninf, d0, succ)?.value,
            p_tp: self.contrast_region(&pc, d0, inf, succ)?.value,
            p_tn: self.contrast_region(&pc, ninf, d0, fail)?.value,
            p_fn: self.contrast_region(&pc, d0, inf, fail)?.value,
        })
    }

    /// Conditional power along a grid. Control mode: over `theta_c` with
    /// `theta_t = theta_c + offset`. Contrast mode: over the contrast.
    pub fn cp_curve(&self, lo: T, hi: T, points: usize, offset: T) -> Result<Vec<(T, T)>> {
        if points < 2 || !(hi > lo) {
            return Err(Error::Domain(format!(
                "curve needs at least 2 points on a non-empty range, got {points} on [{lo}, {hi}]"
            )));
        }
        let step = (hi - lo) / T::from_usize_lossy(points - 1);
        (0..points)
            .into_par_iter()
            .map(|i| {
                let x = if i + 1 == points {
                    hi
                } else {
                    lo + step * T::from_usize_lossy(i)
                };
                Ok((x, self.cp_at(x, offset)?))
            })
            .collect()
    }

    fn cp_at(&self, x: T, offset: T) -> Result<T> {
        let truth = match self.design {
            Design::Control(_) => Truth::Control {
                theta_c: x,
                theta_t: x + offset,
            },
            Design::Contrast(_) => Truth::Contrast(x),
        };
        self.cp(truth)
    }

    /// Pointwise classical type I error. Control mode: over the `theta_c` grid
    /// at `theta_t = theta_c + delta_null`. Contrast mode: the single value at
    /// the null.
    pub fn classical_type1_curve(&self, lo: T, hi: T, points: usize) -> Result<Vec<(T, T)>> {
        let d0 = self.rule().delta_null;
        match self.design {
            Design::Control(_) => self.cp_curve(lo, hi, points, d0),
            Design::Contrast(_) => Ok(vec![(d0, self.cp(Truth::Contrast(d0))?)]),
        }
    }

    /// Extremum of conditional power over `[lo, hi]`: coarse grid, then a
    /// golden-section polish around the best grid point.
    pub fn scan_extremum(&self, lo: T, hi: T, which: Extremum, delta_star: T) -> Result<(T, T)> {
        let grid = self.cp_curve(lo, hi, CURVE_POINTS, delta_star)?;
        let better = |a: T, b: T| match which {
            Extremum::Max => a > b,
            Extremum::Min => a < b,
        };
        let mut best = 0;
        for i in 1..grid.len() {
            if better(grid[i].1, grid[best].1) {
                best = i;
            }
        }
        let a = grid[best.saturating_sub(1)].0;
        let b = grid[(best + 1).min(grid.len() - 1)].0;
        let err: RefCell<Option<Error>> = RefCell::new(None);
        let sgn = match which {
            Extremum::Max => T::one(),
            Extremum::Min => -T::one(),
        };
        let (x, fx) = golden_max(
            |x| match self.cp_at(x, delta_star) {
                Ok(v) => sgn * v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    T::neg_infinity()
                }
            },
            a,
            b,
            (hi - lo) * T::lit(1e-7),
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let polished = sgn * fx;
        if better(polished, grid[best].1) {
            Ok((x, polished))
        } else {
            Ok(grid[best])
        }
    }

    // ---- simulation path ----

    fn mc_tally(&self, prior_c: &DesignPrior<T>, dstar_c: T, mc: &McConfig, offset: u64) -> Result<Tally> {
        let d0 = self.delta_null_c();
        match &self.frame {
            Frame::Control(cf) => {
                let conf = cf.confidence;
                let null = dstar_c <= d0;
                tally(mc, offset, |rng| {
                    let theta_c = prior_c.sample(rng);
                    let zc: f64 = rng.sample(rand_distr::StandardNormal);
                    let zt: f64 = rng.sample(rand_distr::StandardNormal);
                    let yc = theta_c + cf.se_c * T::lit(zc);
                    let yt = theta_c + dstar_c + cf.se_t * T::lit(zt);
                    (null, cf.success_prob(yt, yc) >= conf)
                })
            }
            Frame::Contrast { frame, .. } => {
                let conf = frame.confidence;
                tally(mc, offset, |rng| {
                    let delta = prior_c.sample(rng);
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let y = delta + frame.s_new * T::lit(z);
                    (delta <= d0, frame.success_prob(y) >= conf)
                })
            }
        }
    }

    /// Estimates `metric` by simulation: draw the truth from the design prior,
    /// draw data from the sampling model and apply the success rule.
    pub fn mc_crosscheck(&self, metric: &Metric<T>, mc: &McConfig) -> Result<MetricReport<T>> {
        let s = self.sign();
        let dir = self.rule().direction;
        let is_control = matches!(self.design, Design::Control(_));
        let off = metric.stream_offset();
        let need_contrast = || {
            if is_control {
                Err(Error::Domain("this metric is defined for contrast-borrowing designs only".into()))
            } else {
                Ok(())
            }
        };
        let (value, se, n) = match metric {
            Metric::ConditionalPower(truth) => {
                let (prior, dstar) = match *truth {
                    Truth::Control { theta_c, theta_t } if is_control => {
                        (DesignPrior::PointMass(s * theta_c), s * (theta_t - theta_c))
                    }
                    Truth::Contrast(d) if !is_control => (DesignPrior::PointMass(s * d), T::zero()),
                    _ => {
                        return Err(Error::Domain(
                            "truth does not match the borrowing mode of the design".into(),
                        ))
                    }
                };
                let t = self.mc_tally(&prior, dstar, mc, off)?;
                let p = t.success();
                (p, t.std_error(p), t.n)
            }
            Metric::Average { prior, delta_star } => {
                if let DesignPrior::SpikeAndSlab { .. } = prior {
                    return Err(Error::Domain(
                        "spike-and-slab design priors are only used for the false-positive upper bound"
                            .into(),
                    ));
                }
                let t = self.mc_tally(&prior.canonical(dir), s * *delta_star, mc, off)?;
                let p = t.success();
                (p, t.std_error(p), t.n)
            }
            Metric::AverageType1Null(p) => {
                need_contrast()?;
                let prior = DesignPrior::Truncated(self.null_truncation(p)?);
                let t = self.mc_tally(&prior, T::zero(), mc, off)?;
                let v = t.success();
                (v, t.std_error(v), t.n)
            }
            Metric::PreposteriorFp(p) => {
                need_contrast()?;
                let prior = DesignPrior::Mixture(self.canonical_mixture(p));
                let t = self.mc_tally(&prior, T::zero(), mc, off)?;
                let v = t.proportion(t.fp);
                (v, t.std_error(v), t.n)
            }
            Metric::UpperBoundFp(prior) => {
                need_contrast()?;
                let point = DesignPrior::PointMass(self.delta_null_c());
                let t = self.mc_tally(&point, T::zero(), mc, off)?;
                let cp0 = t.success();
                let mass = prior.null_mass(self.rule()).to_f64_lossy();
                (cp0 * mass, t.std_error(cp0) * mass, t.n)
            }
        };
        Ok(MetricReport {
            name: metric.name().to_string(),
            value: T::lit(value),
            abs_error: T::lit(se),
            method: Method::MonteCarlo,
            n_reps: Some(n),
            seed: Some(mc.seed),
        })
    }

    /// Decision table estimated by simulation.
    pub fn mc_decision_table(&self, p: &MixtureNormal<T>, mc: &McConfig) -> Result<DecisionTable<T>> {
        if matches!(self.design, Design::Control(_)) {
            return Err(Error::Domain(
                "the decision table is defined for contrast-borrowing designs only".into(),
            ));
        }
        let prior = DesignPrior::Mixture(self.canonical_mixture(p));
        let t = self.mc_tally(&prior, T::zero(), mc, 6)?;
        Ok(DecisionTable {
            p_fp: T::lit(t.proportion(t.fp)),
            p_tp: T::lit(t.proportion(t.tp)),
            p_tn: T::lit(t.proportion(t.tn)),
            p_fn: T::lit(t.proportion(t.fn_)),
        })
    }
}


#[cfg(test)]
mod tests;
