//! Meta-analytic-predictive priors from historical study summaries.
//!
//! The normal-normal hierarchical model `y_h ~ N(mu, s_h^2 + tau^2)` is
//! integrated over `tau` by Gauss-Legendre quadrature. For each `tau` node the
//! posterior of `mu` is conjugate, so the predictive of a new study's
//! parameter is an exact finite mixture `sum_j w_j N(mu_j, V_j + tau_j^2)`.
//! [`fit_mixture`] then compresses that predictive to a few components by EM
//! on a grid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mixture::{MixtureNormal, NormalComponent};
use crate::quadrature::gauss_legendre;
use crate::special::log_sum_exp;
use crate::{Error, Real, Result};

/// Minimum number of `tau` quadrature nodes.
pub const MIN_TAU_GRID: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalStudy<T> {
    pub label: String,
    pub estimate: T,
    pub se: T,
}

impl<T: Real> HistoricalStudy<T> {
    pub fn new(label: impl Into<String>, estimate: T, se: T) -> Result<Self> {
        let label = label.into();
        if !estimate.is_finite() {
            return Err(Error::Data(format!("study `{label}`: estimate must be finite")));
        }
        if !(se > T::zero()) || !se.is_finite() {
            return Err(Error::Data(format!(
                "study `{label}`: standard error must be positive, got {se}"
            )));
        }
        Ok(Self {
            label,
            estimate,
            se,
        })
    }
}

/// Prior on the between-study standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauPrior<T> {
    HalfNormal { scale: T },
    /// Degenerate prior; `0` gives the fixed-effect model.
    Fixed(T),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPrior<T> {
    Flat,
    Normal(NormalComponent<T>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConfig<T> {
    pub tau_prior: TauPrior<T>,
    pub tau_grid_size: usize,
    pub mu_prior: MuPrior<T>,
}

impl<T: Real> HierarchyConfig<T> {
    pub fn half_normal(scale: T) -> Self {
        Self {
            tau_prior: TauPrior::HalfNormal { scale },
            tau_grid_size: 64,
            mu_prior: MuPrior::Flat,
        }
    }

    /// Half-normal scale `sigma_ref / 2`.
    pub fn with_reference_sd(sigma_ref: T) -> Self {
        Self::half_normal(sigma_ref * T::lit(0.5))
    }

    pub fn validate(&self) -> Result<()> {
        match self.tau_prior {
            TauPrior::HalfNormal { scale } if !(scale > T::zero()) || !scale.is_finite() => {
                return Err(Error::Domain(format!("tau prior scale must be positive, got {scale}")))
            }
            TauPrior::Fixed(t) if !(t >= T::zero()) || !t.is_finite() => {
                return Err(Error::Domain(format!("fixed tau must be non-negative, got {t}")))
            }
            _ => {}
        }
        if self.tau_grid_size < MIN_TAU_GRID {
            return Err(Error::Domain(format!(
                "tau grid needs at least {MIN_TAU_GRID} nodes, got {}",
                self.tau_grid_size
            )));
        }
        Ok(())
    }
}

/// Conditional posterior of `mu` given `tau` and the log marginal likelihood
/// of the data (up to a constant that does not depend on `tau`).
fn conditional<T: Real>(data: &[HistoricalStudy<T>], tau: T, mu_prior: &MuPrior<T>) -> (T, T, T) {
    let half = T::lit(0.5);
    let (mut prec, mut lin, mut ll) = (T::zero(), T::zero(), T::zero());
    for s in data {
        let d = s.se * s.se + tau * tau;
        prec = prec + d.recip();
        lin = lin + s.estimate / d;
        ll = ll - half * (d.ln() + s.estimate * s.estimate / d);
    }
    if let MuPrior::Normal(p) = mu_prior {
        let v0 = p.variance();
        prec = prec + v0.recip();
        lin = lin + p.mean / v0;
        ll = ll - half * (v0.ln() + p.mean * p.mean / v0);
    }
    let v = prec.recip();
    let mean = lin * v;
    ll = ll + half * (v.ln() + mean * mean * prec);
    (mean, v, ll)
}

/// Predictive distribution of a new study's parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPredictive<T> {
    mixture: MixtureNormal<T>,
    tau_nodes: Vec<T>,
    mu_posterior_var: Vec<T>,
}

impl<T: Real> MapPredictive<T> {
    /// The predictive as an exact mixture over the `tau` nodes.
    pub fn mixture(&self) -> &MixtureNormal<T> {
        &self.mixture
    }

    /// `tau` quadrature nodes with the matching conditional posterior
    /// variance of `mu`.
    pub fn tau_nodes(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.tau_nodes
            .iter()
            .copied()
            .zip(self.mu_posterior_var.iter().copied())
    }

    pub fn density(&self, x: T) -> T {
        self.mixture.density(x)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.mixture.sample(rng)
    }

    /// Normalised density on a uniform grid spanning the
    /// `[1e-10, 1 - 1e-10]` quantile range.
    pub fn to_grid(&self, points: usize) -> Result<GriddedDensity<T>> {
        GriddedDensity::from_mixture(&self.mixture, points)
    }
}

/// `p(theta_new | y_h)` under the hierarchical model.
pub fn map_predictive<T: Real>(data: &[HistoricalStudy<T>], cfg: &HierarchyConfig<T>) -> Result<MapPredictive<T>> {
    if data.is_empty() {
        return Err(Error::Domain("MAP prior needs at least one historical study".into()));
    }
    cfg.validate()?;
    let (taus, logw): (Vec<T>, Vec<T>) = match cfg.tau_prior {
        TauPrior::Fixed(t) => (vec![t], vec![T::zero()]),
        TauPrior::HalfNormal { scale } => {
            let tau_max = T::lit(10.0) * scale;
            let (nodes, weights) = gauss_legendre::<T>(cfg.tau_grid_size);
            let half = T::lit(0.5);
            nodes
                .iter()
                .zip(&weights)
                .map(|(&x, &w)| {
                    // Map [-1, 1] to u in (0, 1), then tau = tau_max u^2.
                    let u = half * (x + T::one());
                    let tau = tau_max * u * u;
                    let jac = half * T::lit(2.0) * tau_max * u;
                    let z = tau / scale;
                    (tau, w.ln() + jac.ln() - half * z * z)
                })
                .unzip()
        }
    };
    let mut comps = Vec::with_capacity(taus.len());
    let mut lw = Vec::with_capacity(taus.len());
    let mut vars = Vec::with_capacity(taus.len());
    for (&tau, &l) in taus.iter().zip(&logw) {
        let (mean, v, ll) = conditional(data, tau, &cfg.mu_prior);
        comps.push(NormalComponent::new(mean, (v + tau * tau).sqrt())?);
        lw.push(l + ll);
        vars.push(v);
    }
    let lse = log_sum_exp(&lw);
    let weights: Vec<T> = lw.iter().map(|&l| (l - lse).exp()).collect();
    let mixture = MixtureNormal::from_unnormalized(weights, comps);
    Ok(MapPredictive {
        mixture,
        tau_nodes: taus,
        mu_posterior_var: vars,
    })
}

/// A density tabulated on a uniform grid, with cell masses summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity<T> {
    pub x: Vec<T>,
    pub density: Vec<T>,
    pub mass: Vec<T>,
}

impl<T: Real> GriddedDensity<T> {
    pub fn from_fn<F: Fn(T) -> T>(f: F, lo: T, hi: T, points: usize) -> Result<Self> {
        if points < 3 || !(hi > lo) {
            return Err(Error::Domain(format!(
                "grid needs at least 3 points on a non-empty range, got {points} on [{lo}, {hi}]"
            )));
        }
        let h = (hi - lo) / T::from_usize_lossy(points - 1);
        let x: Vec<T> = (0..points).map(|i| lo + h * T::from_usize_lossy(i)).collect();
        let raw: Vec<T> = x.iter().map(|&v| f(v)).collect();
        let total: T = raw.iter().copied().sum::<T>() * h;
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::Domain("gridded density has no mass".into()));
        }
        let density: Vec<T> = raw.iter().map(|&d| d / total).collect();
        let mass = density.iter().map(|&d| d * h).collect();
        Ok(Self { x, density, mass })
    }

    pub fn from_mixture(m: &MixtureNormal<T>, points: usize) -> Result<Self> {
        let lo = m.quantile(T::lit(1e-10))?;
        let hi = m.quantile(T::one() - T::lit(1e-10))?;
        Self::from_fn(|x| m.density(x), lo, hi, points)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn quantile(&self, p: T) -> T {
        let mut acc = T::zero();
        for (&x, &q) in self.x.iter().zip(&self.mass) {
            acc = acc + q;
            if acc >= p {
                return x;
            }
        }
        *self.x.last().expect("non-empty grid")
    }

    fn moments(&self) -> (T, T) {
        let mean: T = self.x.iter().zip(&self.mass).map(|(&x, &q)| x * q).sum();
        let var: T = self
            .x
            .iter()
            .zip(&self.mass)
            .map(|(&x, &q)| q * (x - mean) * (x - mean))
            .sum();
        (mean, var)
    }

    /// `KL(grid density || m)` on the grid.
    pub fn kl_to(&self, m: &MixtureNormal<T>) -> T {
        self.x
            .iter()
            .zip(&self.density)
            .zip(&self.mass)
            .filter(|(_, &q)| q > T::zero())
            .map(|((&x, &d), &q)| q * (d.ln() - m.log_density(x)))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions<T> {
    pub max_iter: usize,
    /// Stop once one iteration lowers the KL divergence by less than this.
    pub tol: T,
}

impl<T: Real> Default for EmOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: T::lit(1e-10).max(T::epsilon()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit<T> {
    pub mixture: MixtureNormal<T>,
    pub kl: T,
    /// KL divergence after each iteration, starting from the initial guess.
    pub kl_trace: Vec<T>,
    pub iterations: usize,
}

/// Fits a `k`-component mixture to a gridded density by EM, weighting grid
/// points by their mass. Minimises `KL(density || mixture)`.
///
/// EM starts from quantile-spaced means with a common sd and equal weights.
/// For `k > 1` the `(k - 1)`-component fit with its heaviest component split
/// in two is also a `k`-component candidate; the lower KL wins. This matters
/// when the density needs fewer than `k` components, where EM from the
/// spread-out start converges only sublinearly.
pub fn fit_mixture<T: Real>(g: &GriddedDensity<T>, k: usize, opts: &EmOptions<T>) -> Result<MixtureFit<T>> {
    if !(1..=6).contains(&k) {
        return Err(Error::Domain(format!("component count must be in 1..=6, got {k}")));
    }
    if g.is_empty() {
        return Err(Error::Domain("empty density grid".into()));
    }
    let (_, var) = g.moments();
    let sd0 = var.sqrt();
    let kf = T::from_usize_lossy(k);
    let mu: Vec<T> = (0..k)
        .map(|j| g.quantile((T::from_usize_lossy(j) + T::lit(0.5)) / kf))
        .collect();
    let spread = em(g, vec![kf.recip(); k], mu, vec![sd0; k], sd0, opts);
    if k == 1 {
        return spread;
    }
    let split = fit_mixture(g, k - 1, opts).and_then(|f| split_heaviest(g, f));
    match (spread, split) {
        (Ok(a), Ok(b)) => Ok(if b.kl < a.kl { b } else { a }),
        (Ok(a), Err(_)) => Ok(a),
        (Err(Error::EmNotConverged { kl, .. }), Ok(b)) if b.kl.to_f64_lossy() <= kl => Ok(b),
        (Err(e), _) => Err(e),
    }
}

fn split_heaviest<T: Real>(g: &GriddedDensity<T>, fit: MixtureFit<T>) -> Result<MixtureFit<T>> {
    let m = &fit.mixture;
    let heaviest = (0..m.len())
        .max_by(|&a, &b| m.weights()[a].partial_cmp(&m.weights()[b]).expect("finite weights"))
        .expect("non-empty mixture");
    let mut weights = m.weights().to_vec();
    let mut comps = m.components().to_vec();
    let half = weights[heaviest] * T::lit(0.5);
    weights[heaviest] = half;
    weights.push(half);
    comps.push(comps[heaviest]);
    let mixture = MixtureNormal::new(weights, comps)?;
    let kl = g.kl_to(&mixture);
    let mut kl_trace = fit.kl_trace;
    kl_trace.push(kl.min(*kl_trace.last().expect("non-empty trace")));
    Ok(MixtureFit {
        mixture,
        kl,
        kl_trace,
        iterations: fit.iterations,
    })
}

fn em<T: Real>(
    g: &GriddedDensity<T>,
    mut w: Vec<T>,
    mut mu: Vec<T>,
    mut sd: Vec<T>,
    sd0: T,
    opts: &EmOptions<T>,
) -> Result<MixtureFit<T>> {
    let k = w.len();
    let sd_floor = sd0 * T::lit(1e-6);
    let build = |w: &[T], mu: &[T], sd: &[T]| {
        let comps = mu
            .iter()
            .zip(sd)
            .map(|(&m, &s)| NormalComponent { mean: m, sd: s })
            .collect();
        MixtureNormal::from_unnormalized(w.to_vec(), comps)
    };

    let mut current = build(&w, &mu, &sd);
    let mut kl = g.kl_to(&current);
    let mut trace = vec![kl];
    let n = g.len();
    let mut resp = vec![T::zero(); n * k];
    let mut logs = vec![T::zero(); k];
    for iter in 1..=opts.max_iter {
        for i in 0..n {
            for j in 0..k {
                logs[j] = w[j].ln() + crate::special::norm_logpdf(g.x[i], mu[j], sd[j]);
            }
            let lse = log_sum_exp(&logs);
            for j in 0..k {
                resp[i * k + j] = (logs[j] - lse).exp();
            }
        }
        for j in 0..k {
            let (mut sw, mut sx) = (T::zero(), T::zero());
            for i in 0..n {
                let r = g.mass[i] * resp[i * k + j];
                sw = sw + r;
                sx = sx + r * g.x[i];
            }
            if !(sw > T::zero()) {
                continue;
            }
            let m = sx / sw;
            let mut sv = T::zero();
            for i in 0..n {
                let d = g.x[i] - m;
                sv = sv + g.mass[i] * resp[i * k + j] * d * d;
            }
            w[j] = sw;
            mu[j] = m;
            sd[j] = (sv / sw).sqrt().max(sd_floor);
        }
        let total: T = w.iter().copied().sum();
        for wj in w.iter_mut() {
            *wj = *wj / total;
        }
        current = build(&w, &mu, &sd);
        let next = g.kl_to(&current);
        trace.push(next);
        let gain = kl - next;
        kl = next;
        if gain.abs() < opts.tol {
            return Ok(MixtureFit {
                mixture: MixtureNormal::new(current.weights().to_vec(), current.components().to_vec())?,
                kl,
                kl_trace: trace,
                iterations: iter,
            });
        }
    }
    Err(Error::EmNotConverged {
        iterations: opts.max_iter,
        kl: kl.to_f64_lossy(),
        best: current.to_f64(),
    })
}

/// Mixes `m` with a vague component: `(1 - w_robust) m + w_robust N(mean, sd^2)`.
pub fn robustify<T: Real>(m: &MixtureNormal<T>, w_robust: T, robust_mean: T, robust_sd: T) -> Result<MixtureNormal<T>> {
    if !(w_robust > T::zero() && w_robust < T::one()) {
        return Err(Error::Domain(format!(
            "robust weight must lie in (0, 1), got {w_robust}"
        )));
    }
    let robust = NormalComponent::new(robust_mean, robust_sd)?;
    let keep = T::one() - w_robust;
    let mut weights: Vec<T> = m.weights().iter().map(|&w| w * keep).collect();
    let mut comps = m.components().to_vec();
    weights.push(w_robust);
    comps.push(robust);
    MixtureNormal::new(weights, comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};

    fn study(y: f64, s: f64) -> HistoricalStudy<f64> {
        HistoricalStudy::new("s", y, s).unwrap()
    }

    fn crohn_like() -> Vec<HistoricalStudy<f64>> {
        [
            (-45.2, 74.0),
            (-58.9, 120.0),
            (-38.4, 95.0),
            (-52.7, 150.0),
            (-61.3, 112.0),
            (-44.0, 120.0),
        ]
        .iter()
        .enumerate()
        .map(|(i, &(y, n))| HistoricalStudy::new(format!("study{i}"), y, 88.0 / f64::sqrt(n)).unwrap())
        .collect()
    }

    #[test]
    fn rejects_bad_input() {
        assert!(HistoricalStudy::new("x", 1.0, 0.0).is_err());
        assert!(HistoricalStudy::new("x", f64::NAN, 1.0).is_err());
        let cfg = HierarchyConfig::half_normal(1.0);
        assert!(map_predictive::<f64>(&[], &cfg).is_err());
        let small = HierarchyConfig {
            tau_grid_size: 8,
            ..cfg
        };
        assert!(map_predictive(&[study(0.0, 1.0)], &small).is_err());
    }

    #[test]
    fn fixed_effect_limit() {
        let cfg = HierarchyConfig {
            tau_prior: TauPrior::Fixed(0.0),
            ..HierarchyConfig::half_normal(1.0)
        };
        let p = map_predictive(&[study(0.48, 0.121)], &cfg).unwrap();
        let c = p.mixture().components()[0];
        assert!((c.mean - 0.48).abs() < 1e-12 && (c.sd - 0.121).abs() < 1e-12);
        // A vanishing half-normal scale approaches the same limit.
        let p = map_predictive(&[study(0.48, 0.121)], &HierarchyConfig::half_normal(1e-9)).unwrap();
        assert!((p.mixture().mean() - 0.48).abs() < 1e-6);
        assert!((p.mixture().variance().sqrt() - 0.121).abs() < 1e-6);
    }

    #[test]
    fn fixed_tau_adds_twice_the_variance() {
        let cfg = HierarchyConfig {
            tau_prior: TauPrior::Fixed(0.7),
            ..HierarchyConfig::half_normal(1.0)
        };
        let p = map_predictive(&[study(2.0, 0.5)], &cfg).unwrap();
        let m = p.mixture();
        assert!((m.mean() - 2.0).abs() < 1e-12);
        assert!((m.variance() - (0.25 + 2.0 * 0.49)).abs() < 1e-12);
    }

    #[test]
    fn predictive_matches_two_dimensional_grid() {
        let data = crohn_like();
        let scale = 44.0;
        let p = map_predictive(&data, &HierarchyConfig::half_normal(scale)).unwrap();
        // Brute force over (mu, tau) with a flat mu prior.
        let (nm, nt) = (600, 600);
        let (mu_lo, mu_hi, tau_hi) = (-150.0, 50.0, 10.0 * scale);
        let hm = (mu_hi - mu_lo) / nm as f64;
        let ht = tau_hi / nt as f64;
        let mut cells = Vec::new();
        for a in 0..nm {
            let mu = mu_lo + (a as f64 + 0.5) * hm;
            for b in 0..nt {
                let tau = (b as f64 + 0.5) * ht;
                let mut lp = -0.5 * (tau / scale).powi(2);
                for s in &data {
                    let d = s.se * s.se + tau * tau;
                    lp -= 0.5 * (d.ln() + (s.estimate - mu).powi(2) / d);
                }
                cells.push((mu, tau, lp));
            }
        }
        let top = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = cells.iter().map(|c| (c.2 - top).exp()).sum();
        for &x in &[-150.0, -90.0, -60.0, -50.0, -40.0, 0.0] {
            let brute: f64 = cells
                .iter()
                .map(|&(mu, tau, lp)| {
                    let sd = tau.max(1e-9);
                    (lp - top).exp() * (-(x - mu).powi(2) / (2.0 * sd * sd)).exp()
                        / (sd * (2.0 * std::f64::consts::PI).sqrt())
                })
                .sum::<f64>()
                / z;
            let exact = p.density(x);
            assert!((exact - brute).abs() < 2e-3 * exact.max(1e-4), "x={x} {exact} vs {brute}");
        }
    }

    #[test]
    fn predictive_is_normalised_and_order_invariant() {
        let data = crohn_like();
        let cfg = HierarchyConfig::with_reference_sd(88.0);
        let p = map_predictive(&data, &cfg).unwrap();
        let (lo, hi) = p.mixture().hull(12.0);
        let total = integrate(|x| p.density(x), lo, hi, &QuadratureConfig::default()).unwrap();
        assert!((total.value - 1.0).abs() < 1e-6);
        let mut rev = data.clone();
        rev.reverse();
        let q = map_predictive(&rev, &cfg).unwrap();
        for &x in &[-80.0, -50.0, -20.0] {
            assert!((p.density(x) - q.density(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn predictive_never_narrower_than_mu_posterior() {
        let data = crohn_like();
        for n in [16, 32, 64] {
            let cfg = HierarchyConfig {
                tau_grid_size: n,
                ..HierarchyConfig::half_normal(44.0)
            };
            let p = map_predictive(&data, &cfg).unwrap();
            for ((tau, v), c) in p.tau_nodes().zip(p.mixture().components()) {
                assert!(c.variance() >= v);
                assert!((c.variance() - v - tau * tau).abs() < 1e-9 * c.variance());
            }
        }
    }

    #[test]
    fn em_self_fit_single_normal() {
        let m = MixtureNormal::<f64>::single(0.0, 1.0).unwrap();
        let g = GriddedDensity::from_mixture(&m, 2001).unwrap();
        let fit = fit_mixture(&g, 1, &EmOptions::default()).unwrap();
        let c = fit.mixture.components()[0];
        assert!(c.mean.abs() < 1e-6 && (c.sd - 1.0).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn em_recovers_two_components() {
        let m = MixtureNormal::<f64>::from_triples(&[(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]).unwrap();
        let g = GriddedDensity::from_mixture(&m, 2001).unwrap();
        let fit = fit_mixture(&g, 2, &EmOptions::default()).unwrap();
        let mut got: Vec<_> = fit.mixture.iter().map(|(w, c)| (c.mean, c.sd, w)).collect();
        got.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (g, want) in got.iter().zip([(-2.0, 1.0, 0.5), (2.0, 1.0, 0.5)]) {
            assert!((g.0 - want.0).abs() < 1e-4, "{got:?}");
            assert!((g.1 - want.1).abs() < 1e-4, "{got:?}");
            assert!((g.2 - want.2).abs() < 1e-4, "{got:?}");
        }
    }

    #[test]
    fn em_overparameterised_fit() {
        let m = MixtureNormal::<f64>::single(0.0, 1.0).unwrap();
        let g = GriddedDensity::from_mixture(&m, 2001).unwrap();
        let fit = fit_mixture(&g, 2, &EmOptions::default()).unwrap();
        assert!(fit.kl < 1e-8, "{}", fit.kl);
    }

    #[test]
    fn em_is_monotone_and_heavy_tails_need_more_components() {
        let p = map_predictive(&crohn_like(), &HierarchyConfig::half_normal(44.0)).unwrap();
        let g = p.to_grid(2001).unwrap();
        let mut kls = Vec::new();
        for k in 1..=3 {
            let fit = fit_mixture(&g, k, &EmOptions::default()).unwrap();
            for w in fit.kl_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "k={k}");
            }
            kls.push(fit.kl);
        }
        assert!(kls[0] > 1e-4, "{kls:?}");
        assert!(kls[1] < kls[0] && kls[2] <= kls[1] + 1e-12, "{kls:?}");
    }

    #[test]
    fn em_reports_non_convergence() {
        let m = MixtureNormal::<f64>::from_triples(&[(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)]).unwrap();
        let g = GriddedDensity::from_mixture(&m, 501).unwrap();
        let opts = EmOptions { max_iter: 2, tol: 0.0 };
        match fit_mixture(&g, 1, &opts) {
            Err(Error::EmNotConverged { iterations, best, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(best.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn robustify_matches_published_forms() {
        let map = MixtureNormal::<f64>::from_triples(&[
            (0.51, -51.0, 19.9),
            (0.44, -46.8, 7.6),
            (0.05, -54.1, 51.7),
        ])
        .unwrap();
        let r = robustify(&map, 0.2, -50.0, 88.0).unwrap();
        let want = [0.408, 0.352, 0.04, 0.2];
        for (w, e) in r.weights().iter().zip(want) {
            assert!((w - e).abs() < 1e-12);
        }
        assert_eq!(&r.components()[..3], map.components());
        let adult = MixtureNormal::<f64>::single(0.48, 0.121).unwrap();
        let r = robustify(&adult, 0.3, 0.0, 2.87).unwrap();
        assert!((r.weights()[0] - 0.7).abs() < 1e-15);
        assert!(robustify(&adult, 0.0, 0.0, 1.0).is_err());
        assert!(robustify(&adult, 1.0, 0.0, 1.0).is_err());
        let tiny = robustify(&map, 1e-9, -50.0, 88.0).unwrap();
        for (a, b) in tiny.weights().iter().zip(map.weights()) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
