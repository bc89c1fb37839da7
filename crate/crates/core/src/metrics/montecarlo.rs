//! Seeded simulation path for every metric.
//!
//! Replications are split into fixed-size batches. Batch `b` draws from its own
//! ChaCha8 stream derived from `(stream, b)`, so results do not depend on how
//! rayon schedules the batches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub const MIN_REPS: u64 = 10_000;
const BATCH: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_reps: u64,
    pub seed: u64,
    /// Base stream; each metric adds its own offset.
    pub stream: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_reps: 1_000_000,
            seed: 20_240_101,
            stream: 0,
        }
    }
}

impl McConfig {
    pub fn new(n_reps: u64, seed: u64) -> Result<Self> {
        let c = Self {
            n_reps,
            seed,
            stream: 0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_reps < MIN_REPS {
            return Err(Error::Domain(format!(
                "Monte Carlo needs at least {MIN_REPS} replications, got {}",
                self.n_reps
            )));
        }
        Ok(())
    }
}

/// Counts of (truth, decision) outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub n: u64,
    pub fp: u64,
    pub tp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Tally {
    fn add(&mut self, null: bool, success: bool) {
        self.n += 1;
        match (null, success) {
            (true, true) => self.fp += 1,
            (false, true) => self.tp += 1,
            (true, false) => self.tn += 1,
            (false, false) => self.fn_ += 1,
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.n += o.n;
        self.fp += o.fp;
        self.tp += o.tp;
        self.tn += o.tn;
        self.fn_ += o.fn_;
        self
    }

    pub fn proportion(&self, count: u64) -> f64 {
        count as f64 / self.n as f64
    }

    pub fn success(&self) -> f64 {
        self.proportion(self.fp + self.tp)
    }

    /// Binomial standard error of a proportion estimated from `n` draws.
    pub fn std_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

/// Runs `mc.n_reps` replications of `draw`, which returns
/// `(truth is null, trial succeeded)`.
pub fn tally<F>(mc: &McConfig, stream_offset: u64, draw: F) -> Result<Tally>
where
    F: Fn(&mut ChaCha8Rng) -> (bool, bool) + Sync,
{
    mc.validate()?;
    let batches = mc.n_reps.div_ceil(BATCH);
    let stream = mc.stream.wrapping_add(stream_offset) << 32;
    let parts: Vec<Tally> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(stream | b);
            let reps = BATCH.min(mc.n_reps - b * BATCH);
            let mut t = Tally::default();
            for _ in 0..reps {
                let (null, success) = draw(&mut rng);
                t.add(null, success);
            }
            t
        })
        .collect();
    Ok(parts.into_iter().fold(Tally::default(), Tally::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn reproducible_and_stream_dependent() {
        let mc = McConfig::new(50_000, 7).unwrap();
        let draw = |r: &mut ChaCha8Rng| (r.random::<f64>() < 0.3, r.random::<f64>() < 0.5);
        let a = tally(&mc, 1, draw).unwrap();
        let b = tally(&mc, 1, draw).unwrap();
        let c = tally(&mc, 2, draw).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.n, 50_000);
        assert_eq!(a.fp + a.tp + a.tn + a.fn_, a.n);
        let p_null = a.proportion(a.fp + a.tn);
        assert!((p_null - 0.3).abs() < 4.0 * a.std_error(0.3));
    }

    #[test]
    fn rejects_small_runs() {
        assert!(McConfig::new(999, 1).is_err());
    }
}
