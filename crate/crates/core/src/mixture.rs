//! Finite mixtures of normal distributions and their conjugate calculus.
//!
//! A [`MixtureNormal`] is the single representation used for analysis priors,
//! posteriors and design priors. Updating with a normal observation keeps the
//! number of components fixed and re-weights them by their marginal
//! likelihoods.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate_with_breaks, Integral, QuadratureConfig};
use crate::special::{log_sum_exp, norm_cdf, norm_logpdf, norm_pdf, norm_sf};
use crate::{Error, Real, Result};

/// Standard deviations either side of a component mean treated as its support
/// for integration.
pub const HULL_SDS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalComponent<T> {
    pub mean: T,
    pub sd: T,
}

impl<T: Real> NormalComponent<T> {
    pub fn new(mean: T, sd: T) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::Domain(format!("component mean must be finite, got {mean}")));
        }
        if !(sd > T::zero()) || !sd.is_finite() {
            return Err(Error::Domain(format!(
                "component sd must be positive and finite, got {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn variance(&self) -> T {
        self.sd * self.sd
    }

    pub fn density(&self, x: T) -> T {
        norm_pdf((x - self.mean) / self.sd) / self.sd
    }

    pub fn log_density(&self, x: T) -> T {
        norm_logpdf(x, self.mean, self.sd)
    }

    pub fn cdf(&self, x: T) -> T {
        norm_cdf((x - self.mean) / self.sd)
    }

    pub fn sf(&self, x: T) -> T {
        norm_sf((x - self.mean) / self.sd)
    }

    /// Conjugate update with one observation `y ~ N(mean, se^2)`.
    pub fn update(&self, y: T, se: T) -> Self {
        let v = self.variance();
        let s2 = se * se;
        let var = v * s2 / (v + s2);
        let mean = (self.mean * s2 + y * v) / (v + s2);
        Self {
            mean,
            sd: var.sqrt(),
        }
    }
}

/// One `{weight, mean, sd}` entry of the serialized mixture form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedComponent<T> {
    pub weight: T,
    pub mean: T,
    pub sd: T,
}

/// Finite mixture `sum_k w_k N(mean_k, sd_k^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<WeightedComponent<T>>",
    into = "Vec<WeightedComponent<T>>",
    bound(
        serialize = "T: Real + Serialize",
        deserialize = "T: Real + Deserialize<'de>"
    )
)]
pub struct MixtureNormal<T> {
    weights: Vec<T>,
    components: Vec<NormalComponent<T>>,
}

impl<T: Real> TryFrom<Vec<WeightedComponent<T>>> for MixtureNormal<T> {
    type Error = Error;

    fn try_from(v: Vec<WeightedComponent<T>>) -> Result<Self> {
        let mut weights = Vec::with_capacity(v.len());
        let mut comps = Vec::with_capacity(v.len());
        for c in v {
            weights.push(c.weight);
            comps.push(NormalComponent::new(c.mean, c.sd)?);
        }
        Self::new(weights, comps)
    }
}

impl<T: Real> From<MixtureNormal<T>> for Vec<WeightedComponent<T>> {
    fn from(m: MixtureNormal<T>) -> Self {
        m.iter()
            .map(|(w, c)| WeightedComponent {
                weight: w,
                mean: c.mean,
                sd: c.sd,
            })
            .collect()
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::InvalidMixture {
        name: "<unnamed>".into(),
        reason: reason.into(),
    }
}

impl<T: Real> MixtureNormal<T> {
    /// Validated constructor. Weights must lie in `[0, 1]` and sum to one;
    /// zero-weight components are dropped with a warning.
    pub fn new(weights: Vec<T>, components: Vec<NormalComponent<T>>) -> Result<Self> {
        if weights.len() != components.len() {
            return Err(invalid(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        for (k, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < T::zero() || w > T::one() {
                return Err(invalid(format!("weight {k} = {w} is outside [0, 1]")));
            }
        }
        for c in &components {
            NormalComponent::new(c.mean, c.sd)?;
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::weight_sum_tol() {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        let (mut w_out, mut c_out) = (Vec::new(), Vec::new());
        for (w, c) in weights.into_iter().zip(components) {
            if w == T::zero() {
                log::warn!(
                    "dropping zero-weight component N({}, {}^2) from mixture",
                    c.mean,
                    c.sd
                );
                continue;
            }
            w_out.push(w);
            c_out.push(c);
        }
        if w_out.is_empty() {
            return Err(invalid("all weights are zero"));
        }
        Ok(Self {
            weights: w_out,
            components: c_out,
        })
    }

    /// Builds from `(weight, mean, sd)` triples.
    pub fn from_triples(triples: &[(T, T, T)]) -> Result<Self> {
        let weights = triples.iter().map(|t| t.0).collect();
        let comps = triples
            .iter()
            .map(|&(_, m, s)| NormalComponent::new(m, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights, comps)
    }

    pub fn single(mean: T, sd: T) -> Result<Self> {
        Ok(Self {
            weights: vec![T::one()],
            components: vec![NormalComponent::new(mean, sd)?],
        })
    }

    /// Builds from non-negative, unnormalised weights; keeps every component.
    pub(crate) fn from_unnormalized(weights: Vec<T>, components: Vec<NormalComponent<T>>) -> Self {
        let total: T = weights.iter().copied().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self {
            weights,
            components,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn components(&self) -> &[NormalComponent<T>] {
        &self.components
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &NormalComponent<T>)> + '_ {
        self.weights.iter().copied().zip(self.components.iter())
    }

    pub fn density(&self, x: T) -> T {
        self.iter().map(|(w, c)| w * c.density(x)).sum()
    }

    pub fn log_density(&self, x: T) -> T {
        let terms: Vec<T> = self.iter().map(|(w, c)| w.ln() + c.log_density(x)).collect();
        log_sum_exp(&terms)
    }

    pub fn cdf(&self, x: T) -> T {
        if x == T::infinity() {
            return T::one();
        }
        if x == T::neg_infinity() {
            return T::zero();
        }
        self.iter()
            .map(|(w, c)| w * c.cdf(x))
            .sum::<T>()
            .min(T::one())
    }

    /// Upper tail mass `P(X > x)`, accurate far in the right tail.
    pub fn sf(&self, x: T) -> T {
        if x == T::infinity() {
            return T::zero();
        }
        if x == T::neg_infinity() {
            return T::one();
        }
        self.iter()
            .map(|(w, c)| w * c.sf(x))
            .sum::<T>()
            .min(T::one())
    }

    pub fn mean(&self) -> T {
        self.iter().map(|(w, c)| w * c.mean).sum()
    }

    /// Total variance by the law of total variance.
    pub fn variance(&self) -> T {
        let mu = self.mean();
        self.iter()
            .map(|(w, c)| w * (c.variance() + (c.mean - mu) * (c.mean - mu)))
            .sum()
    }

    /// `(min_k mean_k - k sd_k, max_k mean_k + k sd_k)`.
    pub fn hull(&self, sds: T) -> (T, T) {
        let lo = self
            .components
            .iter()
            .map(|c| c.mean - sds * c.sd)
            .fold(T::infinity(), T::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.mean + sds * c.sd)
            .fold(T::neg_infinity(), T::max);
        (lo, hi)
    }

    /// Inverse CDF by bracketing then safeguarded Newton iteration.
    pub fn quantile(&self, p: T) -> Result<T> {
        if !p.is_finite() || p <= T::zero() || p >= T::one() {
            return Err(Error::Domain(format!("quantile needs p in (0, 1), got {p}")));
        }
        let (mut lo, mut hi) = self.hull(T::lit(10.0));
        let mut width = hi - lo;
        while self.cdf(lo) > p {
            lo = lo - width;
            width = width * T::lit(2.0);
        }
        let mut width = hi - lo;
        while self.cdf(hi) < p {
            hi = hi + width;
            width = width * T::lit(2.0);
        }
        // Residual of the tail that carries the most precision at `x`.
        let upper = p > T::lit(0.5);
        let q = T::one() - p;
        let resid = |x: T| if upper { q - self.sf(x) } else { self.cdf(x) - p };
        let mut x = (lo + hi) * T::lit(0.5);
        for _ in 0..30 {
            let r = resid(x);
            if r < T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            x = (lo + hi) * T::lit(0.5);
            if hi - lo < (T::one() + x.abs()) * T::lit(1e-3) {
                break;
            }
        }
        for _ in 0..200 {
            let r = resid(x);
            if r == T::zero() {
                return Ok(x);
            }
            if r < T::zero() {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.density(x);
            let newton = x - r / d;
            let next = if d > T::zero() && newton > lo && newton < hi {
                newton
            } else {
                (lo + hi) * T::lit(0.5)
            };
            let step = (next - x).abs();
            x = next;
            if step <= T::lit(4.0) * T::epsilon() * (T::one() + x.abs())
                || hi - lo <= T::lit(4.0) * T::epsilon() * (T::one() + x.abs())
            {
                return Ok(x);
            }
        }
        Ok(x)
    }

    /// `log sum_k w_k N(y; mean_k, sd_k^2 + se^2)`.
    pub fn log_marginal(&self, y: T, se: T) -> T {
        let terms: Vec<T> = self
            .iter()
            .map(|(w, c)| w.ln() + norm_logpdf(y, c.mean, (c.variance() + se * se).sqrt()))
            .collect();
        log_sum_exp(&terms)
    }

    /// Posterior after observing `y ~ N(theta, se^2)`.
    ///
    /// Components are updated conjugately; weights are re-weighted by each
    /// component's marginal likelihood, normalised in log space.
    pub fn posterior_update(&self, y: T, se: T) -> Result<Self> {
        if !(se > T::zero()) || !se.is_finite() {
            return Err(Error::Domain(format!("standard error must be positive, got {se}")));
        }
        if !y.is_finite() {
            return Err(Error::Domain(format!("observation must be finite, got {y}")));
        }
        Ok(self.posterior_unchecked(y, se))
    }

    pub(crate) fn posterior_unchecked(&self, y: T, se: T) -> Self {
        let logw: Vec<T> = self
            .iter()
            .map(|(w, c)| w.ln() + norm_logpdf(y, c.mean, (c.variance() + se * se).sqrt()))
            .collect();
        let lse = log_sum_exp(&logw);
        let weights = logw.iter().map(|&l| (l - lse).exp()).collect();
        let components = self.components.iter().map(|c| c.update(y, se)).collect();
        Self {
            weights,
            components,
        }
    }

    /// Moment-based effective sample size `sigma_ref^2 / Var(X)`.
    pub fn ess(&self, sigma_ref: T) -> Result<T> {
        if !(sigma_ref > T::zero()) {
            return Err(Error::Domain(format!(
                "reference sd must be positive, got {sigma_ref}"
            )));
        }
        Ok(sigma_ref * sigma_ref / self.variance())
    }

    /// Restriction to `(-inf, cut]`, renormalised.
    pub fn truncate_below(&self, cut: T) -> Result<TruncatedMixture<T>> {
        TruncatedMixture::new(self.clone(), T::neg_infinity(), cut)
    }

    /// Restriction to `[cut, inf)`, renormalised.
    pub fn truncate_above(&self, cut: T) -> Result<TruncatedMixture<T>> {
        TruncatedMixture::new(self.clone(), cut, T::infinity())
    }

    /// Distribution of `-X`.
    pub fn reflect(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            components: self
                .components
                .iter()
                .map(|c| NormalComponent {
                    mean: -c.mean,
                    sd: c.sd,
                })
                .collect(),
        }
    }

    /// Distribution of `X + shift`.
    pub fn shift(&self, shift: T) -> Self {
        Self {
            weights: self.weights.clone(),
            components: self
                .components
                .iter()
                .map(|c| NormalComponent {
                    mean: c.mean + shift,
                    sd: c.sd,
                })
                .collect(),
        }
    }

    /// `∫_{lower}^{upper} f(x) p(x) dx`, integrated component by component
    /// over each component's ±12 sd hull clipped to the limits.
    pub fn expect_over<F>(
        &self,
        mut f: F,
        lower: T,
        upper: T,
        cfg: &QuadratureConfig<T>,
        extra_breaks: &[T],
    ) -> Result<Integral<T>>
    where
        F: FnMut(T) -> T,
    {
        let k = T::lit(HULL_SDS);
        let mut total = Integral {
            value: T::zero(),
            abs_error: T::zero(),
            evaluations: 0,
        };
        for (w, c) in self.iter() {
            let a = lower.max(c.mean - k * c.sd);
            let b = upper.min(c.mean + k * c.sd);
            if !(b > a) {
                continue;
            }
            let mut pts = vec![a];
            for &x in std::iter::once(&c.mean).chain(extra_breaks) {
                if x > a && x < b {
                    pts.push(x);
                }
            }
            pts.push(b);
            pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            pts.dedup();
            let comp_cfg = QuadratureConfig {
                abs_tol: cfg.abs_tol / (w * T::from_usize_lossy(self.len())),
                ..*cfg
            };
            let r = integrate_with_breaks(|x| f(x) * c.density(x), &pts, &comp_cfg)?;
            total.value = total.value + w * r.value;
            total.abs_error = total.abs_error + w * r.abs_error;
            total.evaluations += r.evaluations;
        }
        Ok(total)
    }

    /// Draws one value.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let c = &self.components[self.pick(rng)];
        let z: f64 = rng.sample(StandardNormal);
        c.mean + c.sd * T::lit(z)
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.len() == 1 {
            return 0;
        }
        let u = T::lit(rng.random::<f64>());
        let mut acc = T::zero();
        for (k, &w) in self.weights.iter().enumerate() {
            acc = acc + w;
            if u < acc {
                return k;
            }
        }
        self.len() - 1
    }

    /// Converts to double precision.
    pub fn to_f64(&self) -> MixtureNormal<f64> {
        MixtureNormal {
            weights: self.weights.iter().map(|w| w.to_f64_lossy()).collect(),
            components: self
                .components
                .iter()
                .map(|c| NormalComponent {
                    mean: c.mean.to_f64_lossy(),
                    sd: c.sd.to_f64_lossy(),
                })
                .collect(),
        }
    }
}

/// A mixture restricted to `[lower, upper]` and renormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedMixture<T> {
    base: MixtureNormal<T>,
    lower: T,
    upper: T,
    mass: T,
}

impl<T: Real> TruncatedMixture<T> {
    pub fn new(base: MixtureNormal<T>, lower: T, upper: T) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(upper > lower) {
            return Err(Error::Domain(format!(
                "empty truncation interval [{lower}, {upper}]"
            )));
        }
        let mass = if lower == T::neg_infinity() {
            base.cdf(upper)
        } else if upper == T::infinity() {
            base.sf(lower)
        } else {
            base.cdf(upper) - base.cdf(lower)
        };
        if !(mass > T::zero()) {
            return Err(Error::Domain(format!(
                "mixture has no mass on [{lower}, {upper}]"
            )));
        }
        Ok(Self {
            base,
            lower,
            upper,
            mass,
        })
    }

    pub fn base(&self) -> &MixtureNormal<T> {
        &self.base
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    /// Mass of the untruncated mixture on the retained interval.
    pub fn normalizer(&self) -> T {
        self.mass
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn density(&self, x: T) -> T {
        if self.contains(x) {
            self.base.density(x) / self.mass
        } else {
            T::zero()
        }
    }

    pub fn cdf(&self, x: T) -> T {
        if x < self.lower {
            return T::zero();
        }
        if x >= self.upper {
            return T::one();
        }
        let below = if self.lower == T::neg_infinity() {
            T::zero()
        } else {
            self.base.cdf(self.lower)
        };
        ((self.base.cdf(x) - below) / self.mass).clamp(T::zero(), T::one())
    }

    /// Mass of the truncated distribution at or below `x`.
    pub fn mass_below(&self, x: T) -> T {
        self.cdf(x)
    }

    pub fn mean(&self, cfg: &QuadratureConfig<T>) -> Result<T> {
        Ok(self.expect(|x| x, cfg)?.value)
    }

    /// `∫ f(x) p_trunc(x) dx`.
    pub fn expect<F: FnMut(T) -> T>(&self, f: F, cfg: &QuadratureConfig<T>) -> Result<Integral<T>> {
        let scaled = QuadratureConfig {
            abs_tol: cfg.abs_tol * self.mass,
            ..*cfg
        };
        let mut r = self
            .base
            .expect_over(f, self.lower, self.upper, &scaled, &[])?;
        r.value = r.value / self.mass;
        r.abs_error = r.abs_error / self.mass;
        Ok(r)
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u = T::lit(rng.random::<f64>());
        let below = if self.lower == T::neg_infinity() {
            T::zero()
        } else {
            self.base.cdf(self.lower)
        };
        let p = (below + u * self.mass).max(T::min_positive_value());
        match self.base.quantile(p.min(T::one() - T::epsilon())) {
            Ok(x) => x.max(self.lower).min(self.upper),
            Err(_) => {
                if self.upper.is_finite() {
                    self.upper
                } else {
                    self.lower
                }
            }
        }
    }

    pub fn reflect(&self) -> Self {
        Self {
            base: self.base.reflect(),
            lower: -self.upper,
            upper: -self.lower,
            mass: self.mass,
        }
    }
}
