//! Grid search over design parameters for configurations that keep a chosen
//! operating characteristic below a target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{ContrastBorrowDesign, Design};
use crate::map::robustify;
use crate::metrics::{DesignPrior, Metric, OcEvaluator, Truth};
use crate::mixture::{MixtureNormal, NormalComponent};
use crate::quadrature::QuadratureConfig;
use crate::roots::brent;
use crate::{Error, Real, Result};

/// Tolerance on the informative weight for [`max_weight_for_bound`].
pub const WEIGHT_TOL: f64 = 1e-4;
const WEIGHT_GRID: usize = 21;

/// Informative prior plus the vague component it is robustified with.
#[derive(Debug, Clone, PartialEq)]
pub struct BorrowingPrior<T> {
    pub informative: MixtureNormal<T>,
    pub robust: NormalComponent<T>,
}

impl<T: Real> BorrowingPrior<T> {
    /// `w * informative + (1 - w) * robust`.
    pub fn mixture(&self, w: T) -> Result<MixtureNormal<T>> {
        if !(w >= T::zero() && w <= T::one()) {
            return Err(Error::Domain(format!("informative weight must lie in [0, 1], got {w}")));
        }
        if w == T::zero() {
            return MixtureNormal::single(self.robust.mean, self.robust.sd);
        }
        if w == T::one() {
            return Ok(self.informative.clone());
        }
        robustify(&self.informative, T::one() - w, self.robust.mean, self.robust.sd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    RobustWeight,
    NT,
    NC,
    SNewScale,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::RobustWeight => "robust_weight",
            Param::NT => "n_t",
            Param::NC => "n_c",
            Param::SNewScale => "s_new_scale",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMetric {
    AverageType1,
    AverageType1Null,
    PreposteriorFp,
    UpperBoundFp,
}

impl CalibrationMetric {
    pub fn name(self) -> &'static str {
        match self {
            CalibrationMetric::AverageType1 => "average_type1",
            CalibrationMetric::AverageType1Null => "average_type1_null",
            CalibrationMetric::PreposteriorFp => "preposterior_fp",
            CalibrationMetric::UpperBoundFp => "upper_bound_fp",
        }
    }
}

/// Values to try for one free parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid<T> {
    pub param: Param,
    pub values: Vec<T>,
}

impl<T: Real> ParamGrid<T> {
    /// `steps` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(param: Param, lo: T, hi: T, steps: usize) -> Result<Self> {
        if steps == 0 || hi < lo {
            return Err(Error::Domain(format!(
                "grid for {} needs steps >= 1 and lo <= hi",
                param.name()
            )));
        }
        let values = if steps == 1 {
            vec![lo]
        } else {
            let h = (hi - lo) / T::from_usize_lossy(steps - 1);
            (0..steps)
                .map(|i| if i + 1 == steps { hi } else { lo + h * T::from_usize_lossy(i) })
                .collect()
        };
        Ok(Self { param, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRequest<T> {
    pub base: Design<T>,
    /// Required when the robust weight is free: the prior it re-weights (the
    /// control-arm prior or the contrast prior).
    pub borrowing: Option<BorrowingPrior<T>>,
    pub grid: Vec<ParamGrid<T>>,
    pub metric: CalibrationMetric,
    pub design_prior: DesignPrior<T>,
    pub target: T,
    /// Contrast at which power is reported.
    pub alternative: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint<T> {
    pub params: Vec<(Param, T)>,
    pub metric: T,
    pub power: T,
}

impl<T: Real> GridPoint<T> {
    pub fn get(&self, p: Param) -> Option<T> {
        self.params.iter().find(|(q, _)| *q == p).map(|x| x.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<T> {
    /// Every grid point in grid order.
    pub points: Vec<GridPoint<T>>,
    /// Admissible points, best power first.
    pub frontier: Vec<GridPoint<T>>,
    pub min_metric: T,
}

/// Builds the design for one grid point.
pub fn apply_params<T: Real>(
    base: &Design<T>,
    borrowing: Option<&BorrowingPrior<T>>,
    params: &[(Param, T)],
) -> Result<Design<T>> {
    let mut d = base.clone();
    for &(p, v) in params {
        match (p, &mut d) {
            (Param::RobustWeight, design) => {
                let b = borrowing.ok_or_else(|| {
                    Error::Domain("a free robust weight needs the informative and robust priors".into())
                })?;
                let m = b.mixture(v)?;
                match design {
                    Design::Control(c) => c.prior_c = m,
                    Design::Contrast(c) => c.prior_delta = m,
                }
            }
            (Param::NT | Param::NC, Design::Control(c)) => {
                if !(v >= T::one()) || v.fract() != T::zero() {
                    return Err(Error::Domain(format!("{} must be a positive integer, got {v}", p.name())));
                }
                let n = v.to_u32().ok_or_else(|| Error::Domain(format!("{} too large", p.name())))?;
                if p == Param::NT {
                    c.n_t = n;
                } else {
                    c.n_c = n;
                }
            }
            (Param::SNewScale, Design::Contrast(c)) => {
                if !(v > T::zero()) {
                    return Err(Error::Domain(format!("s_new scale must be positive, got {v}")));
                }
                c.s_new = c.s_new * v;
            }
            (p, _) => {
                return Err(Error::Domain(format!(
                    "{} is not a parameter of this borrowing mode",
                    p.name()
                )))
            }
        }
    }
    Ok(d)
}

fn metric_request<T: Real>(m: CalibrationMetric, prior: &DesignPrior<T>, delta_null: T) -> Result<Metric<T>> {
    let as_mixture = || match prior {
        DesignPrior::Mixture(p) => Ok(p.clone()),
        other => Err(Error::Domain(format!(
            "{} needs a mixture design prior, got {}",
            m.name(),
            other.kind()
        ))),
    };
    Ok(match m {
        CalibrationMetric::AverageType1 => Metric::Average {
            prior: prior.clone(),
            delta_star: delta_null,
        },
        CalibrationMetric::AverageType1Null => Metric::AverageType1Null(as_mixture()?),
        CalibrationMetric::PreposteriorFp => Metric::PreposteriorFp(as_mixture()?),
        CalibrationMetric::UpperBoundFp => Metric::UpperBoundFp(prior.clone()),
    })
}

/// Metric and power at the alternative for one design.
pub fn evaluate_point<T: Real>(
    design: Design<T>,
    metric: CalibrationMetric,
    design_prior: &DesignPrior<T>,
    alternative: T,
    cfg: &QuadratureConfig<T>,
) -> Result<(T, T)> {
    let ev = OcEvaluator::new(design)?.with_quadrature(*cfg);
    let d0 = ev.rule().delta_null;
    let value = ev.evaluate(&metric_request(metric, design_prior, d0)?)?.value;
    let power = match ev.design() {
        Design::Contrast(_) => ev.cp(Truth::Contrast(alternative))?,
        Design::Control(_) => ev.average_metric(design_prior, alternative)?.value,
    };
    Ok((value, power))
}

fn cartesian<T: Real>(grid: &[ParamGrid<T>]) -> Vec<Vec<(Param, T)>> {
    let mut out: Vec<Vec<(Param, T)>> = vec![Vec::new()];
    for g in grid {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                g.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push((g.param, v));
                    p
                })
            })
            .collect();
    }
    out
}

/// Evaluates every grid point and keeps those with `metric <= target`.
pub fn calibrate<T: Real>(req: &CalibrationRequest<T>, cfg: &QuadratureConfig<T>) -> Result<Calibration<T>> {
    if !(req.target > T::zero() && req.target < T::one()) {
        return Err(Error::Domain(format!("target must lie in (0, 1), got {}", req.target)));
    }
    if req.grid.is_empty() || req.grid.iter().any(|g| g.values.is_empty()) {
        return Err(Error::Domain("calibration grid is empty".into()));
    }
    let combos = cartesian(&req.grid);
    let points: Vec<GridPoint<T>> = combos
        .into_par_iter()
        .map(|params| {
            let d = apply_params(&req.base, req.borrowing.as_ref(), &params)?;
            let (metric, power) = evaluate_point(d, req.metric, &req.design_prior, req.alternative, cfg)?;
            Ok(GridPoint {
                params,
                metric,
                power,
            })
        })
        .collect::<Result<_>>()?;
    let min_metric = points
        .iter()
        .map(|p| p.metric)
        .fold(T::infinity(), T::min);
    let mut frontier: Vec<GridPoint<T>> = points
        .iter()
        .filter(|p| p.metric <= req.target)
        .cloned()
        .collect();
    let base_n = match &req.base {
        Design::Control(c) => (c.n_t + c.n_c) as f64,
        Design::Contrast(_) => 0.0,
    };
    let total_n = |p: &GridPoint<T>| {
        let nt = p.get(Param::NT).map(|v| v.to_f64_lossy());
        let nc = p.get(Param::NC).map(|v| v.to_f64_lossy());
        match (&req.base, nt, nc) {
            (Design::Control(c), nt, nc) => {
                nt.unwrap_or(c.n_t as f64) + nc.unwrap_or(c.n_c as f64)
            }
            _ => base_n,
        }
    };
    frontier.sort_by(|a, b| {
        b.power
            .partial_cmp(&a.power)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let wa = a.get(Param::RobustWeight).unwrap_or(T::zero());
                let wb = b.get(Param::RobustWeight).unwrap_or(T::zero());
                wb.partial_cmp(&wa).unwrap_or(std::cmp::Ordering::Equal)
            })
            .then_with(|| {
                total_n(a)
                    .partial_cmp(&total_n(b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    Ok(Calibration {
        points,
        frontier,
        min_metric,
    })
}

/// Outcome of the largest-admissible-weight search.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSearch<T> {
    /// Largest informative weight with `metric <= target`, refined by
    /// bisection; `metric` is its re-evaluated value.
    Found { weight: T, metric: T },
    /// Even `w = 0` exceeds the target.
    Infeasible { min_metric: T },
    /// The metric was not monotone in `w` on the scan grid; the grid is
    /// returned as is with the largest admissible grid weight, if any.
    GridFallback {
        grid: Vec<(T, T)>,
        best: Option<T>,
    },
}

/// Largest informative weight whose metric stays at or below `target`.
pub fn max_weight_for_bound<T: Real>(
    base: &Design<T>,
    borrowing: &BorrowingPrior<T>,
    design_prior: &DesignPrior<T>,
    metric: CalibrationMetric,
    target: T,
    cfg: &QuadratureConfig<T>,
) -> Result<WeightSearch<T>> {
    let eval = |w: T| -> Result<T> {
        let d = apply_params(base, Some(borrowing), &[(Param::RobustWeight, w)])?;
        let ev = OcEvaluator::new(d)?.with_quadrature(*cfg);
        let d0 = ev.rule().delta_null;
        Ok(ev.evaluate(&metric_request(metric, design_prior, d0)?)?.value)
    };
    let step = T::one() / T::from_usize_lossy(WEIGHT_GRID - 1);
    let grid: Vec<(T, T)> = (0..WEIGHT_GRID)
        .into_par_iter()
        .map(|i| {
            let w = if i + 1 == WEIGHT_GRID {
                T::one()
            } else {
                step * T::from_usize_lossy(i)
            };
            Ok((w, eval(w)?))
        })
        .collect::<Result<_>>()?;
    let slack = T::lit(1e-9);
    let monotone = grid.windows(2).all(|p| p[1].1 >= p[0].1 - slack);
    if !monotone {
        log::warn!("{} is not monotone in the borrowing weight; reporting the grid", metric.name());
        let best = grid
            .iter()
            .filter(|(_, m)| *m <= target)
            .map(|(w, _)| *w)
            .fold(None, |acc: Option<T>, w| Some(acc.map_or(w, |a| a.max(w))));
        return Ok(WeightSearch::GridFallback { grid, best });
    }
    if grid[0].1 > target {
        return Ok(WeightSearch::Infeasible { min_metric: grid[0].1 });
    }
    let last = grid[WEIGHT_GRID - 1];
    if last.1 <= target {
        return Ok(WeightSearch::Found {
            weight: last.0,
            metric: last.1,
        });
    }
    let i = grid.iter().rposition(|(_, m)| *m <= target).expect("w = 0 is admissible");
    let (mut lo, mut m_lo) = grid[i];
    let mut hi = grid[i + 1].0;
    while hi - lo > T::lit(WEIGHT_TOL) {
        let mid = (lo + hi) * T::lit(0.5);
        let m = eval(mid)?;
        if m <= target {
            lo = mid;
            m_lo = m;
        } else {
            hi = mid;
        }
    }
    Ok(WeightSearch::Found {
        weight: lo,
        metric: m_lo,
    })
}

/// Which root to keep when the classical type I error crosses the target
/// more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootChoice {
    #[default]
    Larger,
    Smaller,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SNewSolution<T> {
    pub s_new: T,
    /// Every crossing found in the bracket, ascending.
    pub roots: Vec<T>,
}

const S_NEW_SCAN: usize = 400;

/// Standard error of the new-trial estimate at which the classical type I
/// error of a contrast design equals `target`.
///
/// The type I error need not be monotone in `s_new`, so the bracket is
/// scanned for every sign change and each crossing is refined separately.
pub fn solve_s_new<T: Real>(
    prior: &MixtureNormal<T>,
    rule: &crate::SuccessRule<T>,
    target: T,
    bracket: (T, T),
    choice: RootChoice,
) -> Result<SNewSolution<T>> {
    let (lo, hi) = bracket;
    if !(lo > T::zero() && hi > lo) {
        return Err(Error::Domain(format!("s_new bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if !(target > T::zero() && target < T::one()) {
        return Err(Error::Domain(format!("target type I error must lie in (0, 1), got {target}")));
    }
    let type1 = |s: T| -> Result<T> {
        let d = ContrastBorrowDesign::new(s, prior.clone(), *rule)?;
        OcEvaluator::new(Design::Contrast(d))?.cp(Truth::Contrast(rule.delta_null))
    };
    let step = (hi - lo) / T::from_usize_lossy(S_NEW_SCAN);
    let xs: Vec<T> = (0..=S_NEW_SCAN)
        .map(|i| if i == S_NEW_SCAN { hi } else { lo + step * T::from_usize_lossy(i) })
        .collect();
    let fs: Vec<T> = xs
        .par_iter()
        .map(|&s| Ok(type1(s)? - target))
        .collect::<Result<_>>()?;
    let mut roots = Vec::new();
    for i in 0..S_NEW_SCAN {
        if fs[i] == T::zero() {
            roots.push(xs[i]);
        } else if fs[i] * fs[i + 1] < T::zero() {
            let r = brent(
                |s| type1(s).map(|v| v - target).unwrap_or(T::nan()),
                xs[i],
                xs[i + 1],
                T::lit(1e-12) * hi,
                200,
            )?;
            roots.push(r);
        }
    }
    if fs[S_NEW_SCAN] == T::zero() {
        roots.push(hi);
    }
    let s_new = match choice {
        RootChoice::Larger => roots.last(),
        RootChoice::Smaller => roots.first(),
    }
    .copied()
    .ok_or_else(|| {
        Error::Root(format!(
            "classical type I error never reaches {target} for s_new in [{lo}, {hi}]"
        ))
    })?;
    Ok(SNewSolution { s_new, roots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{ContrastBorrowDesign, Direction, SuccessRule};
    use crate::metrics::metric_quadrature;

    fn lupus() -> (Design<f64>, BorrowingPrior<f64>) {
        let adult = MixtureNormal::single(0.48, 0.121).unwrap();
        let b = BorrowingPrior {
            informative: adult.clone(),
            robust: NormalComponent::new(0.0, 2.87).unwrap(),
        };
        let d = Design::Contrast(
            ContrastBorrowDesign::new(
                0.408,
                b.mixture(0.7).unwrap(),
                SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap(),
            )
            .unwrap(),
        );
        (d, b)
    }

    fn request(metric: CalibrationMetric, prior: DesignPrior<f64>, target: f64) -> CalibrationRequest<f64> {
        let (d, b) = lupus();
        CalibrationRequest {
            base: d,
            borrowing: Some(b),
            grid: vec![ParamGrid::linspace(Param::RobustWeight, 0.0, 1.0, 11).unwrap()],
            metric,
            design_prior: prior,
            target,
            alternative: 1.6_f64.ln(),
        }
    }

    #[test]
    fn borrowing_prior_endpoints() {
        let (_, b) = lupus();
        assert_eq!(b.mixture(0.0).unwrap().len(), 1);
        assert_eq!(b.mixture(0.0).unwrap().components()[0].sd, 2.87);
        assert_eq!(b.mixture(1.0).unwrap(), b.informative);
        assert!((b.mixture(0.7).unwrap().weights()[0] - 0.7).abs() < 1e-12);
        assert!(b.mixture(1.5).is_err());
    }

    #[test]
    fn null_truncated_type1_leaves_little_room_to_borrow() {
        let adult = MixtureNormal::single(0.48, 0.121).unwrap();
        let req = request(CalibrationMetric::AverageType1Null, DesignPrior::Mixture(adult), 0.025);
        let cal = calibrate(&req, &metric_quadrature()).unwrap();
        assert!(!cal.frontier.is_empty());
        for p in &cal.frontier {
            assert!(p.get(Param::RobustWeight).unwrap() <= 0.2 + 1e-12, "{p:?}");
            assert!(p.metric <= 0.025 + 1e-6);
        }
        for p in &cal.points {
            if p.get(Param::RobustWeight).unwrap() == 0.0 {
                assert!(p.metric <= 0.025);
            }
        }
        // Frontier is sorted by power.
        for w in cal.frontier.windows(2) {
            assert!(w[0].power >= w[1].power);
        }
    }

    #[test]
    fn infeasible_target_gives_empty_frontier() {
        let adult = MixtureNormal::single(0.48, 0.121).unwrap();
        let req = request(CalibrationMetric::AverageType1Null, DesignPrior::Mixture(adult), 1e-9);
        let cal = calibrate(&req, &metric_quadrature()).unwrap();
        assert!(cal.frontier.is_empty());
        assert!(cal.min_metric > 1e-9);
    }

    #[test]
    fn singleton_grid_equals_direct_evaluation() {
        let (d, _) = lupus();
        let robust = MixtureNormal::from_triples(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]).unwrap();
        let mut req = request(CalibrationMetric::PreposteriorFp, DesignPrior::Mixture(robust.clone()), 0.5);
        req.grid = vec![ParamGrid::linspace(Param::RobustWeight, 0.7, 0.7, 1).unwrap()];
        let cal = calibrate(&req, &metric_quadrature()).unwrap();
        let ev = OcEvaluator::new(d).unwrap();
        let direct = ev.preposterior_fp(&robust).unwrap().value;
        assert!((cal.points[0].metric - direct).abs() < 1e-12);
    }

    #[test]
    fn weight_for_upper_bound() {
        let (d, b) = lupus();
        let robust = DesignPrior::Mixture(b.mixture(0.7).unwrap());
        let cfg = metric_quadrature();
        let r = max_weight_for_bound(&d, &b, &robust, CalibrationMetric::UpperBoundFp, 0.05, &cfg).unwrap();
        match r {
            WeightSearch::Found { weight, metric } => {
                assert!(weight >= 0.7, "{weight}");
                assert!((metric - 0.05).abs() < 1e-3 || weight == 1.0);
            }
            other => panic!("{other:?}"),
        }
        match max_weight_for_bound(&d, &b, &robust, CalibrationMetric::UpperBoundFp, 0.999, &cfg).unwrap() {
            WeightSearch::Found { weight, .. } => assert_eq!(weight, 1.0),
            other => panic!("{other:?}"),
        }
        let r = max_weight_for_bound(&d, &b, &robust, CalibrationMetric::UpperBoundFp, 1e-9, &cfg).unwrap();
        assert!(matches!(r, WeightSearch::Infeasible { .. }));
    }

    #[test]
    fn wrong_parameters_are_rejected() {
        let (d, b) = lupus();
        assert!(apply_params(&d, Some(&b), &[(Param::NT, 10.0)]).is_err());
        assert!(apply_params(&d, None, &[(Param::RobustWeight, 0.5)]).is_err());
        let scaled = apply_params(&d, None, &[(Param::SNewScale, 2.0)]).unwrap();
        match scaled {
            Design::Contrast(c) => assert!((c.s_new - 0.816).abs() < 1e-12),
            _ => unreachable!(),
        }
    }

    #[test]
    fn s_new_crossings() {
        let robust = MixtureNormal::from_triples(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]).unwrap();
        let rule = SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap();
        let sol = solve_s_new(&robust, &rule, 0.332, (0.2, 0.8), RootChoice::Larger).unwrap();
        assert_eq!(sol.roots.len(), 2, "{:?}", sol.roots);
        for &r in &sol.roots {
            let d = ContrastBorrowDesign::new(r, robust.clone(), rule).unwrap();
            let t1: f64 = OcEvaluator::new(Design::Contrast(d)).unwrap().cp(Truth::Contrast(0.0)).unwrap();
            assert!((t1 - 0.332).abs() < 1e-9);
        }
        assert_eq!(sol.s_new, sol.roots[1]);
        let small = solve_s_new(&robust, &rule, 0.332, (0.2, 0.8), RootChoice::Smaller).unwrap();
        assert_eq!(small.s_new, sol.roots[0]);
        assert!(solve_s_new(&robust, &rule, 0.9, (0.2, 0.8), RootChoice::Larger).is_err());
    }
}
