use rand::Rng;

use crate::design::{Direction, SuccessRule};
use crate::mixture::{MixtureNormal, TruncatedMixture};
use crate::{Error, Real, Result};

/// Distribution over the true parameter used to evaluate a design.
///
/// In control-borrowing mode the parameter is the control mean `theta_c`; in
/// contrast mode it is the contrast `delta`.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignPrior<T> {
    Mixture(MixtureNormal<T>),
    Truncated(TruncatedMixture<T>),
    PointMass(T),
    SpikeAndSlab {
        spike_location: T,
        spike_weight: T,
        slab: MixtureNormal<T>,
    },
}

impl<T: Real> DesignPrior<T> {
    pub fn spike_and_slab(spike_location: T, spike_weight: T, slab: MixtureNormal<T>) -> Result<Self> {
        if !spike_location.is_finite() {
            return Err(Error::Domain("spike location must be finite".into()));
        }
        if !(spike_weight >= T::zero() && spike_weight <= T::one()) {
            return Err(Error::Domain(format!(
                "spike weight must lie in [0, 1], got {spike_weight}"
            )));
        }
        Ok(Self::SpikeAndSlab {
            spike_location,
            spike_weight,
            slab,
        })
    }

    pub fn point_mass(x: T) -> Result<Self> {
        if x.is_finite() {
            Ok(Self::PointMass(x))
        } else {
            Err(Error::Domain(format!("point mass must be finite, got {x}")))
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Mixture(_) => "mixture",
            Self::Truncated(_) => "truncated_mixture",
            Self::PointMass(_) => "point_mass",
            Self::SpikeAndSlab { .. } => "spike_and_slab",
        }
    }

    /// Probability of the null (no benefit) region of `rule`.
    pub fn null_mass(&self, rule: &SuccessRule<T>) -> T {
        let d0 = rule.delta_null;
        let mix_null = |m: &MixtureNormal<T>| match rule.direction {
            Direction::Greater => m.cdf(d0),
            Direction::Less => m.sf(d0),
        };
        match self {
            Self::Mixture(m) => mix_null(m),
            Self::Truncated(t) => match rule.direction {
                Direction::Greater => t.cdf(d0),
                Direction::Less => T::one() - t.cdf(d0),
            },
            Self::PointMass(x) => {
                if rule.is_null(*x) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::SpikeAndSlab {
                spike_location,
                spike_weight,
                slab,
            } => {
                let spike = if rule.is_null(*spike_location) {
                    *spike_weight
                } else {
                    T::zero()
                };
                spike + (T::one() - *spike_weight) * mix_null(slab)
            }
        }
    }

    /// Distribution of the negated parameter.
    pub fn reflect(&self) -> Self {
        match self {
            Self::Mixture(m) => Self::Mixture(m.reflect()),
            Self::Truncated(t) => Self::Truncated(t.reflect()),
            Self::PointMass(x) => Self::PointMass(-*x),
            Self::SpikeAndSlab {
                spike_location,
                spike_weight,
                slab,
            } => Self::SpikeAndSlab {
                spike_location: -*spike_location,
                spike_weight: *spike_weight,
                slab: slab.reflect(),
            },
        }
    }

    pub(crate) fn canonical(&self, direction: Direction) -> Self {
        match direction {
            Direction::Greater => self.clone(),
            Direction::Less => self.reflect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Self::Mixture(m) => m.sample(rng),
            Self::Truncated(t) => t.sample(rng),
            Self::PointMass(x) => *x,
            Self::SpikeAndSlab {
                spike_location,
                spike_weight,
                slab,
            } => {
                if T::lit(rng.random::<f64>()) < *spike_weight {
                    *spike_location
                } else {
                    slab.sample(rng)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robust() -> MixtureNormal<f64> {
        MixtureNormal::from_triples(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)]).unwrap()
    }

    #[test]
    fn null_mass_by_kind() {
        let rule = SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap();
        let p = DesignPrior::Mixture(robust());
        assert!((p.null_mass(&rule) - 0.150_03).abs() < 5e-6);
        let t = DesignPrior::Truncated(robust().truncate_below(0.0).unwrap());
        assert!((t.null_mass(&rule) - 1.0).abs() < 1e-12);
        assert_eq!(DesignPrior::PointMass(0.0).null_mass(&rule), 1.0);
        assert_eq!(DesignPrior::PointMass(0.1).null_mass(&rule), 0.0);
        let slab = MixtureNormal::single(5.0, 0.1).unwrap();
        let s = DesignPrior::spike_and_slab(0.0, 0.2, slab).unwrap();
        assert!((s.null_mass(&rule) - 0.2).abs() < 1e-12);
        let less = SuccessRule::new(0.0, Direction::Less, 0.975).unwrap();
        assert!((p.null_mass(&less) - (1.0 - 0.150_03)).abs() < 5e-6);
    }

    #[test]
    fn spike_weight_is_validated() {
        let slab = MixtureNormal::single(5.0, 0.1).unwrap();
        assert!(DesignPrior::spike_and_slab(0.0, 1.2, slab).is_err());
        assert!(DesignPrior::point_mass(f64::NAN).is_err());
    }

    #[test]
    fn reflection_flips_null_side() {
        let g = SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap();
        let l = SuccessRule::new(0.0, Direction::Less, 0.975).unwrap();
        let p = DesignPrior::Mixture(robust());
        assert!((p.null_mass(&g) - p.reflect().null_mass(&l)).abs() < 1e-15);
    }
}
