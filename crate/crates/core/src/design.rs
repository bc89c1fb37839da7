//! Two-arm trial designs and their Bayesian success rule.
//!
//! Both borrowing modes are evaluated in a canonical frame where success means
//! the contrast is large: designs whose rule asks for a small contrast are
//! reflected (data, prior means and the null value negated) on construction of
//! the frame, so the boundary search and every metric share one code path.

use serde::{Deserialize, Serialize};

use crate::mixture::{MixtureNormal, NormalComponent, HULL_SDS};
use crate::roots::{brent, expand_bracket};
use crate::special::{norm_quantile, norm_sf};
use crate::{Error, Real, Result};

/// Number of grid points used by the monotonicity scan.
pub const MONOTONE_SCAN_POINTS: usize = 512;

const ROOT_ITER: usize = 300;
const MAX_DOUBLINGS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Greater,
    Less,
}

impl Direction {
    /// `+1` for `Greater`, `-1` for `Less`.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Direction::Greater => T::one(),
            Direction::Less => -T::one(),
        }
    }
}

/// `Pr(delta > delta_null | data) >= confidence`, or `<` for [`Direction::Less`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessRule<T> {
    pub delta_null: T,
    pub direction: Direction,
    pub confidence: T,
}

impl<T: Real> SuccessRule<T> {
    pub fn new(delta_null: T, direction: Direction, confidence: T) -> Result<Self> {
        if !delta_null.is_finite() {
            return Err(Error::Domain(format!("delta_null must be finite, got {delta_null}")));
        }
        if !(confidence > T::lit(0.5) && confidence < T::one()) {
            return Err(Error::Domain(format!(
                "confidence must lie in (0.5, 1), got {confidence}"
            )));
        }
        Ok(Self {
            delta_null,
            direction,
            confidence,
        })
    }

    /// Nominal one-sided level `1 - confidence`.
    pub fn alpha(&self) -> T {
        T::one() - self.confidence
    }

    /// Posterior tail mass of `posterior` on the success side of `delta_null`.
    pub fn tail(&self, posterior: &MixtureNormal<T>) -> T {
        match self.direction {
            Direction::Greater => posterior.sf(self.delta_null),
            Direction::Less => posterior.cdf(self.delta_null),
        }
    }

    /// Maps a contrast value into the canonical frame.
    pub(crate) fn to_canonical(&self, x: T) -> T {
        x * self.direction.sign()
    }

    /// True when `delta` lies in the null (no benefit) region.
    pub fn is_null(&self, delta: T) -> bool {
        match self.direction {
            Direction::Greater => delta <= self.delta_null,
            Direction::Less => delta >= self.delta_null,
        }
    }
}

/// Control-arm borrowing: each arm observes a mean with known sampling sd
/// `sigma`, and the rule is applied to `theta_t - theta_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBorrowDesign<T> {
    pub n_t: u32,
    pub n_c: u32,
    pub sigma: T,
    pub prior_t: MixtureNormal<T>,
    pub prior_c: MixtureNormal<T>,
    pub rule: SuccessRule<T>,
}

/// Contrast borrowing: one observed contrast `y ~ N(delta, s_new^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastBorrowDesign<T> {
    pub s_new: T,
    pub prior_delta: MixtureNormal<T>,
    pub rule: SuccessRule<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Design<T> {
    Control(ControlBorrowDesign<T>),
    Contrast(ContrastBorrowDesign<T>),
}

/// Observed trial data in the units of the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialData<T> {
    Control { ybar_t: T, ybar_c: T },
    Contrast { ybar: T },
}

fn check_finite<T: Real>(x: T, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}

/// Posterior of `theta_t - theta_c` from independent arm posteriors.
fn difference<T: Real>(post_t: &MixtureNormal<T>, post_c: &MixtureNormal<T>) -> MixtureNormal<T> {
    let mut w = Vec::with_capacity(post_t.len() * post_c.len());
    let mut comps = Vec::with_capacity(w.capacity());
    for (wt, ct) in post_t.iter() {
        for (wc, cc) in post_c.iter() {
            w.push(wt * wc);
            comps.push(NormalComponent {
                mean: ct.mean - cc.mean,
                sd: (ct.variance() + cc.variance()).sqrt(),
            });
        }
    }
    MixtureNormal::from_unnormalized(w, comps)
}

/// Scans `f` on a uniform grid and reports the first clear decrease.
fn scan_monotone<T: Real, F: FnMut(T) -> T>(mut f: F, lo: T, hi: T) -> Result<()> {
    let n = MONOTONE_SCAN_POINTS;
    let step = (hi - lo) / T::from_usize_lossy(n - 1);
    let slack = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
    let mut prev = f(lo);
    for i in 1..n {
        let x = lo + step * T::from_usize_lossy(i);
        let v = f(x);
        if v < prev - slack {
            return Err(Error::NonMonotone { at: x.to_f64_lossy() });
        }
        prev = prev.max(v);
    }
    Ok(())
}

fn root_tol<T: Real>(scale: T) -> T {
    (T::lit(1e-12) * scale).max(T::min_positive_value())
}

impl<T: Real> ControlBorrowDesign<T> {
    pub fn new(
        n_t: u32,
        n_c: u32,
        sigma: T,
        prior_t: MixtureNormal<T>,
        prior_c: MixtureNormal<T>,
        rule: SuccessRule<T>,
    ) -> Result<Self> {
        if n_t == 0 || n_c == 0 {
            return Err(Error::Domain("sample sizes must be positive".into()));
        }
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            n_t,
            n_c,
            sigma,
            prior_t,
            prior_c,
            rule,
        })
    }

    pub fn se_t(&self) -> T {
        self.sigma / T::from_usize_lossy(self.n_t as usize).sqrt()
    }

    pub fn se_c(&self) -> T {
        self.sigma / T::from_usize_lossy(self.n_c as usize).sqrt()
    }

    /// Posterior of `delta = theta_t - theta_c` as a `K_t x K_c` mixture.
    pub fn posterior_delta(&self, ybar_t: T, ybar_c: T) -> Result<MixtureNormal<T>> {
        check_finite(ybar_t, "treatment mean")?;
        check_finite(ybar_c, "control mean")?;
        let post_t = self.prior_t.posterior_unchecked(ybar_t, self.se_t());
        let post_c = self.prior_c.posterior_unchecked(ybar_c, self.se_c());
        Ok(difference(&post_t, &post_c))
    }

    pub fn posterior_success_prob(&self, ybar_t: T, ybar_c: T) -> Result<T> {
        Ok(self.rule.tail(&self.posterior_delta(ybar_t, ybar_c)?))
    }

    pub fn is_success(&self, ybar_t: T, ybar_c: T) -> Result<bool> {
        Ok(self.posterior_success_prob(ybar_t, ybar_c)? >= self.rule.confidence)
    }

    /// Treatment-arm mean on the success boundary given the control-arm mean.
    ///
    /// Success is `ybar_t >= boundary` for [`Direction::Greater`] and
    /// `ybar_t <= boundary` for [`Direction::Less`].
    pub fn critical_curve(&self, ybar_c: T) -> Result<T> {
        check_finite(ybar_c, "control mean")?;
        let frame = ControlFrame::new(self);
        let s = self.rule.direction.sign::<T>();
        Ok(s * frame.boundary(s * ybar_c)?)
    }

    /// Checks that the success probability increases with the treatment mean
    /// at a handful of control means spread over the control predictive.
    pub fn check_monotone(&self) -> Result<()> {
        ControlFrame::new(self).check_monotone()
    }

    pub(crate) fn frame(&self) -> ControlFrame<T> {
        ControlFrame::new(self)
    }
}

impl<T: Real> ContrastBorrowDesign<T> {
    pub fn new(s_new: T, prior_delta: MixtureNormal<T>, rule: SuccessRule<T>) -> Result<Self> {
        if !(s_new > T::zero()) || !s_new.is_finite() {
            return Err(Error::Domain(format!("s_new must be positive, got {s_new}")));
        }
        Ok(Self {
            s_new,
            prior_delta,
            rule,
        })
    }

    pub fn posterior(&self, ybar: T) -> Result<MixtureNormal<T>> {
        check_finite(ybar, "observed contrast")?;
        Ok(self.prior_delta.posterior_unchecked(ybar, self.s_new))
    }

    pub fn posterior_success_prob(&self, ybar: T) -> Result<T> {
        Ok(self.rule.tail(&self.posterior(ybar)?))
    }

    pub fn is_success(&self, ybar: T) -> Result<bool> {
        Ok(self.posterior_success_prob(ybar)? >= self.rule.confidence)
    }

    /// Observed contrast on the success boundary.
    ///
    /// Success is `ybar >= value` for [`Direction::Greater`] and
    /// `ybar <= value` for [`Direction::Less`].
    pub fn critical_value(&self) -> Result<T> {
        let frame = ContrastFrame::new(self);
        frame.check_monotone()?;
        Ok(self.rule.direction.sign::<T>() * frame.boundary()?)
    }

    pub fn check_monotone(&self) -> Result<()> {
        ContrastFrame::new(self).check_monotone()
    }

    pub(crate) fn frame(&self) -> ContrastFrame<T> {
        ContrastFrame::new(self)
    }
}

impl<T: Real> Design<T> {
    pub fn rule(&self) -> &SuccessRule<T> {
        match self {
            Design::Control(d) => &d.rule,
            Design::Contrast(d) => &d.rule,
        }
    }

    pub fn posterior_success_prob(&self, data: TrialData<T>) -> Result<T> {
        match (self, data) {
            (Design::Control(d), TrialData::Control { ybar_t, ybar_c }) => {
                d.posterior_success_prob(ybar_t, ybar_c)
            }
            (Design::Contrast(d), TrialData::Contrast { ybar }) => d.posterior_success_prob(ybar),
            _ => Err(Error::Domain("data do not match the borrowing mode of the design".into())),
        }
    }

    pub fn is_success(&self, data: TrialData<T>) -> Result<bool> {
        Ok(self.posterior_success_prob(data)? >= self.rule().confidence)
    }
}

/// Control design in the canonical frame.
#[derive(Debug, Clone)]
pub(crate) struct ControlFrame<T> {
    pub prior_t: MixtureNormal<T>,
    pub prior_c: MixtureNormal<T>,
    pub delta_null: T,
    pub confidence: T,
    pub se_t: T,
    pub se_c: T,
}

impl<T: Real> ControlFrame<T> {
    fn new(d: &ControlBorrowDesign<T>) -> Self {
        let (prior_t, prior_c) = match d.rule.direction {
            Direction::Greater => (d.prior_t.clone(), d.prior_c.clone()),
            Direction::Less => (d.prior_t.reflect(), d.prior_c.reflect()),
        };
        Self {
            prior_t,
            prior_c,
            delta_null: d.rule.to_canonical(d.rule.delta_null),
            confidence: d.rule.confidence,
            se_t: d.se_t(),
            se_c: d.se_c(),
        }
    }

    fn success_prob_given(&self, post_c: &MixtureNormal<T>, yt: T) -> T {
        let post_t = self.prior_t.posterior_unchecked(yt, self.se_t);
        let mut p = T::zero();
        for (wt, ct) in post_t.iter() {
            for (wc, cc) in post_c.iter() {
                let sd = (ct.variance() + cc.variance()).sqrt();
                p = p + wt * wc * norm_sf((self.delta_null - (ct.mean - cc.mean)) / sd);
            }
        }
        p.min(T::one())
    }

    pub fn success_prob(&self, yt: T, yc: T) -> T {
        let post_c = self.prior_c.posterior_unchecked(yc, self.se_c);
        self.success_prob_given(&post_c, yt)
    }

    /// Canonical boundary `g(yc)`: success iff `yt >= g(yc)`.
    pub fn boundary(&self, yc: T) -> Result<T> {
        let post_c = self.prior_c.posterior_unchecked(yc, self.se_c);
        let f = |yt: T| self.success_prob_given(&post_c, yt) - self.confidence;
        let z = norm_quantile(self.confidence);
        let spread = (self.se_t * self.se_t + post_c.variance()).sqrt();
        let x0 = post_c.mean() + self.delta_null + z * spread;
        let (lo, hi) = expand_bracket(f, x0, self.se_t, MAX_DOUBLINGS)?;
        let tol = root_tol(self.se_t.max(lo.abs()).max(hi.abs()));
        brent(f, lo, hi, tol, ROOT_ITER)
    }

    fn check_monotone(&self) -> Result<()> {
        // A single-component treatment prior gives a posterior mean linear in
        // the data with fixed variance and fixed control weights.
        if self.prior_t.len() == 1 {
            return Ok(());
        }
        let k = T::lit(HULL_SDS);
        let pred_c = (self.prior_c.variance() + self.se_c * self.se_c).sqrt();
        let pred_t = (self.prior_t.variance() + self.se_t * self.se_t).sqrt();
        let mc = self.prior_c.mean();
        for &q in &[-3.0, -1.0, 0.0, 1.0, 3.0] {
            let yc = mc + T::lit(q) * pred_c;
            let post_c = self.prior_c.posterior_unchecked(yc, self.se_c);
            let centre = self.prior_t.mean();
            scan_monotone(
                |yt| self.success_prob_given(&post_c, yt),
                centre - k * pred_t,
                centre + k * pred_t,
            )?;
        }
        Ok(())
    }
}

/// Contrast design in the canonical frame.
#[derive(Debug, Clone)]
pub(crate) struct ContrastFrame<T> {
    pub prior: MixtureNormal<T>,
    pub delta_null: T,
    pub confidence: T,
    pub s_new: T,
}

impl<T: Real> ContrastFrame<T> {
    fn new(d: &ContrastBorrowDesign<T>) -> Self {
        let prior = match d.rule.direction {
            Direction::Greater => d.prior_delta.clone(),
            Direction::Less => d.prior_delta.reflect(),
        };
        Self {
            prior,
            delta_null: d.rule.to_canonical(d.rule.delta_null),
            confidence: d.rule.confidence,
            s_new: d.s_new,
        }
    }

    pub fn success_prob(&self, y: T) -> T {
        self.prior.posterior_unchecked(y, self.s_new).sf(self.delta_null)
    }

    pub fn check_monotone(&self) -> Result<()> {
        let k = T::lit(HULL_SDS);
        let pred = (self.prior.variance() + self.s_new * self.s_new).sqrt();
        let c = self.prior.mean();
        scan_monotone(|y| self.success_prob(y), c - k * pred, c + k * pred)
    }

    /// Canonical critical value: success iff `y >= boundary`.
    pub fn boundary(&self) -> Result<T> {
        let f = |y: T| self.success_prob(y) - self.confidence;
        let x0 = self.delta_null + norm_quantile(self.confidence) * self.s_new;
        let (lo, hi) = expand_bracket(f, x0, self.s_new, MAX_DOUBLINGS)?;
        let tol = root_tol(self.s_new.max(lo.abs()).max(hi.abs()));
        brent(f, lo, hi, tol, ROOT_ITER)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};

    fn mix(t: &[(f64, f64, f64)]) -> MixtureNormal<f64> {
        MixtureNormal::from_triples(t).unwrap()
    }

    fn robust_contrast() -> ContrastBorrowDesign<f64> {
        ContrastBorrowDesign::new(
            0.2,
            mix(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]),
            SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rules_and_data() {
        assert!(SuccessRule::new(0.0, Direction::Greater, 0.5).is_err());
        assert!(SuccessRule::new(0.0, Direction::Greater, 1.0).is_err());
        let d = robust_contrast();
        assert!(d.posterior_success_prob(f64::NAN).is_err());
        assert!(ContrastBorrowDesign::new(0.0, d.prior_delta.clone(), d.rule).is_err());
    }

    #[test]
    fn vague_contrast_matches_z_test() {
        let s = 0.3_f64;
        let d = ContrastBorrowDesign::new(
            s,
            MixtureNormal::single(0.0, 1e7).unwrap(),
            SuccessRule::new(0.1, Direction::Greater, 0.975).unwrap(),
        )
        .unwrap();
        let y = 0.1 + 1.959_963_984_540_054 * s;
        assert!((d.posterior_success_prob(y).unwrap() - 0.975).abs() < 1e-9);
        let c = d.critical_value().unwrap();
        assert!((c - y).abs() < 1e-8);
        assert!(d.is_success(c + 1e-9).unwrap());
        assert!(!d.is_success(c - 1e-6).unwrap());
    }

    #[test]
    fn contrast_posterior_matches_grid_integration() {
        let d = robust_contrast();
        let y = 0.48;
        // Unnormalised posterior on a fine interval.
        let prior = &d.prior_delta;
        let like = |x: f64| prior.density(x) * (-(y - x) * (y - x) / (2.0 * 0.04)).exp();
        let cfg = QuadratureConfig::with_abs_tol(1e-14);
        let z = integrate(like, -20.0, 20.0, &cfg).unwrap().value;
        let above = integrate(like, 0.0, 20.0, &cfg).unwrap().value;
        let p = d.posterior_success_prob(y).unwrap();
        assert!((p - above / z).abs() < 1e-10, "{p} vs {}", above / z);
    }

    #[test]
    fn informative_prior_lowers_critical_value() {
        for &s in &[0.15, 0.3, 0.6] {
            let robust = ContrastBorrowDesign { s_new: s, ..robust_contrast() };
            let vague = ContrastBorrowDesign::new(
                s,
                MixtureNormal::single(0.0, 100.0).unwrap(),
                robust.rule,
            )
            .unwrap();
            assert!(robust.critical_value().unwrap() < vague.critical_value().unwrap());
        }
    }

    #[test]
    fn critical_value_reevaluates_to_confidence() {
        let d = robust_contrast();
        let c = d.critical_value().unwrap();
        assert!((d.posterior_success_prob(c).unwrap() - 0.975).abs() < 1e-8);
    }

    #[test]
    fn less_direction_is_a_reflection() {
        let d = robust_contrast();
        let r = ContrastBorrowDesign::new(
            d.s_new,
            d.prior_delta.reflect(),
            SuccessRule::new(0.0, Direction::Less, 0.975).unwrap(),
        )
        .unwrap();
        for &y in &[-1.0, -0.2, 0.3, 0.9] {
            let a = d.posterior_success_prob(y).unwrap();
            let b = r.posterior_success_prob(-y).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        assert!((d.critical_value().unwrap() + r.critical_value().unwrap()).abs() < 1e-9);
    }

    fn crohn_design(prior_c: MixtureNormal<f64>) -> ControlBorrowDesign<f64> {
        ControlBorrowDesign::new(
            40,
            20,
            88.0,
            MixtureNormal::single(-50.0, 8800.0).unwrap(),
            prior_c,
            SuccessRule::new(0.0, Direction::Less, 0.975).unwrap(),
        )
        .unwrap()
    }

    fn robust_map() -> MixtureNormal<f64> {
        mix(&[
            (0.408, -51.0, 19.9),
            (0.352, -46.8, 7.6),
            (0.04, -54.1, 51.7),
            (0.2, -50.0, 88.0),
        ])
    }

    #[test]
    fn symmetric_control_design_gives_one_half() {
        let p = MixtureNormal::<f64>::single(3.0, 10.0).unwrap();
        let d = ControlBorrowDesign::new(
            25,
            25,
            5.0,
            p.clone(),
            p,
            SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap(),
        )
        .unwrap();
        assert!((d.posterior_success_prob(1.7, 1.7).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vague_control_boundary_is_a_z_test() {
        let d = crohn_design(MixtureNormal::single(-50.0, 8800.0).unwrap());
        let se = 88.0 * (1.0_f64 / 40.0 + 1.0 / 20.0).sqrt();
        for &yc in &[-200.0, -47.0, 0.0, 150.0] {
            let g = d.critical_curve(yc).unwrap();
            let want = yc - 1.959_963_984_540_054 * se;
            assert!((g - want).abs() < 1e-2, "yc={yc} g={g} want={want}");
            let p = d.posterior_success_prob(g, yc).unwrap();
            assert!((p - 0.975).abs() < 1e-8);
        }
    }

    #[test]
    fn borrowing_moves_boundary_near_historical_mean() {
        let vague = crohn_design(MixtureNormal::single(-50.0, 8800.0).unwrap());
        let robust = crohn_design(robust_map());
        let yc = -49.0;
        let gv = vague.critical_curve(yc).unwrap();
        let gr = robust.critical_curve(yc).unwrap();
        // Success is a small treatment mean; a sharper control posterior
        // relaxes the requirement.
        assert!(gr > gv, "robust {gr} vague {gv}");
    }

    #[test]
    fn control_boundary_is_location_equivariant() {
        let d = crohn_design(robust_map());
        let c = 123.0;
        let shifted = ControlBorrowDesign {
            prior_t: d.prior_t.shift(c),
            prior_c: d.prior_c.shift(c),
            ..d.clone()
        };
        for &yc in &[-120.0, -49.0, 10.0] {
            let a = d.critical_curve(yc).unwrap();
            let b = shifted.critical_curve(yc + c).unwrap();
            assert!((b - a - c).abs() < 1e-7, "yc={yc}");
        }
    }

    #[test]
    fn control_success_matches_posterior_draws() {
        use rand::SeedableRng;
        let d = crohn_design(robust_map());
        let (yt, yc) = (-120.0, -47.0);
        let post_t = d.prior_t.posterior_update(yt, d.se_t()).unwrap();
        let post_c = d.prior_c.posterior_update(yc, d.se_c()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| post_t.sample(&mut rng) - post_c.sample(&mut rng) < 0.0)
            .count();
        let p_mc = hits as f64 / n as f64;
        let p = d.posterior_success_prob(yt, yc).unwrap();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - p_mc).abs() < 4.0 * se + 1e-12, "{p} vs {p_mc}");
        assert_eq!(d.is_success(yt, yc).unwrap(), p >= 0.975);
    }

    #[test]
    fn mixture_treatment_prior_is_scanned() {
        let mut d = crohn_design(robust_map());
        d.prior_t = mix(&[(0.5, -50.0, 8800.0), (0.5, -60.0, 30.0)]);
        // Not asserting the outcome, only that the scan runs and boundaries
        // stay consistent where it passes.
        if d.check_monotone().is_ok() {
            let g = d.critical_curve(-40.0).unwrap();
            assert!((d.posterior_success_prob(g, -40.0).unwrap() - 0.975).abs() < 1e-8);
        }
    }

    #[test]
    fn single_precision_boundary() {
        let d = ContrastBorrowDesign::<f32>::new(
            0.3,
            MixtureNormal::from_triples(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]).unwrap(),
            SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap(),
        )
        .unwrap();
        let d64 = ContrastBorrowDesign::<f64>::new(
            0.3,
            mix(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]),
            SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap(),
        )
        .unwrap();
        let c32 = d.critical_value().unwrap() as f64;
        let c64 = d64.critical_value().unwrap();
        assert!((c32 - c64).abs() < 1e-4);
    }
}
