//! Seeded sampling of individual protocol runs.
//!
//! A trial measures the ancillas (or cavities) one user at a time and stops
//! at the first outcome other than `0`, exactly as the sequential protocol
//! would abort. Trial `i` draws from its own generator
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`, so any subset of
//! trials can be computed in any order, on any number of threads, and the
//! aggregate is the same.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use crate::cavity::{evolve_physical, physical_plan, AtomicWPrimeSpec, JCParams};
use crate::error::{Error, Result};
use crate::protocol::{analytic_success_probability, evolve, plan, RunOptions, WPrimeSpec};
use crate::statevec::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Ancilla qubits and the 4x4 local unitaries.
    Abstract,
    /// Cavities and Jaynes–Cummings interactions.
    Cavity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub scheme: Scheme,
    pub params: Option<JCParams>,
}

impl TrialConfig {
    pub fn abstract_scheme(trials: u64, seed: u64) -> Self {
        Self { trials, seed, scheme: Scheme::Abstract, params: None }
    }

    pub fn cavity_scheme(trials: u64, seed: u64, params: JCParams) -> Self {
        Self { trials, seed, scheme: Scheme::Cavity, params: Some(params) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Validation("at least one trial is required".into()));
        }
        if self.scheme == Scheme::Cavity && self.params.is_none() {
            return Err(Error::Validation("cavity sampling needs Jaynes-Cummings parameters".into()));
        }
        Ok(())
    }
}

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Outcomes measured in one trial. A failed trial ends at its first nonzero
/// entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub pattern: Vec<usize>,
}

impl TrialOutcome {
    pub fn is_success(&self) -> bool {
        self.pattern.iter().all(|&o| o == 0)
    }
}

/// Order-independent aggregate of trial outcomes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub successes: u64,
    pub histogram: BTreeMap<Vec<usize>, u64>,
}

impl Tally {
    pub fn record(&mut self, outcome: TrialOutcome) {
        self.trials += 1;
        if outcome.is_success() {
            self.successes += 1;
        }
        *self.histogram.entry(outcome.pattern).or_insert(0) += 1;
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.successes += other.successes;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    pub empirical_p: f64,
    pub analytic_p: f64,
    pub std_error: f64,
    /// `(empirical − analytic) / std_error`. When the empirical standard
    /// error vanishes the analytic one is used; infinite only if both vanish
    /// and the estimates differ.
    pub z_score: f64,
    pub histogram: BTreeMap<Vec<usize>, u64>,
    pub seed: u64,
}

/// Pre-evolved state shared by all trials of one configuration.
#[derive(Clone, Debug)]
pub struct TrialSampler {
    evolved: StateVector,
    n: usize,
    analytic_p: f64,
    config: TrialConfig,
}

impl TrialSampler {
    pub fn new(spec: &WPrimeSpec, config: &TrialConfig) -> Result<Self> {
        Self::with_options(spec, config, &RunOptions::default())
    }

    pub fn with_options(spec: &WPrimeSpec, config: &TrialConfig, options: &RunOptions) -> Result<Self> {
        config.validate()?;
        let evolved = match (config.scheme, &config.params) {
            (Scheme::Abstract, _) => evolve(spec, &plan(spec)?, options)?,
            (Scheme::Cavity, Some(params)) => {
                let atomic = AtomicWPrimeSpec::from(spec.clone());
                let (_, steps) = physical_plan(&atomic, params)?;
                evolve_physical(&atomic, params, &steps, options)?
            }
            (Scheme::Cavity, None) => unreachable!("validated above"),
        };
        Ok(Self { evolved, n: spec.n(), analytic_p: analytic_success_probability(spec), config: config.clone() })
    }

    pub fn config(&self) -> &TrialConfig {
        &self.config
    }

    pub fn trial(&self, index: u64) -> Result<TrialOutcome> {
        let mut rng = trial_rng(self.config.seed, index);
        let site = self.n;
        let mut pattern = Vec::with_capacity(self.n - 1);
        // Slicing without renormalizing is enough: draws are taken relative
        // to the remaining norm.
        let mut current: Option<StateVector> = None;
        for _ in 0..self.n - 1 {
            let state = current.as_ref().unwrap_or(&self.evolved);
            let (outcome, _) = state.draw(site, &mut rng)?;
            pattern.push(outcome);
            if outcome != 0 {
                break;
            }
            current = Some(state.slice_site(site, 0)?);
        }
        Ok(TrialOutcome { pattern })
    }

    /// Runs trials `range` in order.
    pub fn tally(&self, range: core::ops::Range<u64>) -> Result<Tally> {
        let mut tally = Tally::default();
        for i in range {
            tally.record(self.trial(i)?);
        }
        Ok(tally)
    }

    pub fn stats(&self, tally: Tally) -> Result<TrialStats> {
        if tally.trials != self.config.trials {
            return Err(Error::Contract(format!(
                "tally covers {} trials, configuration asks for {}",
                tally.trials, self.config.trials
            )));
        }
        let m = tally.trials as f64;
        let empirical_p = tally.successes as f64 / m;
        let std_error = libm::sqrt(empirical_p * (1.0 - empirical_p) / m);
        let diff = empirical_p - self.analytic_p;
        let se = if std_error > 0.0 {
            std_error
        } else {
            libm::sqrt((self.analytic_p * (1.0 - self.analytic_p) / m).max(0.0))
        };
        let z_score = if diff.abs() <= 1e-12 {
            0.0
        } else if se > 0.0 {
            diff / se
        } else {
            diff.signum() * f64::INFINITY
        };
        Ok(TrialStats {
            trials: tally.trials,
            successes: tally.successes,
            empirical_p,
            analytic_p: self.analytic_p,
            std_error,
            z_score,
            histogram: tally.histogram,
            seed: self.config.seed,
        })
    }
}

pub fn run_trials(spec: &WPrimeSpec, config: &TrialConfig) -> Result<TrialStats> {
    let sampler = TrialSampler::new(spec, config)?;
    let tally = sampler.tally(0..config.trials)?;
    sampler.stats(tally)
}

/// Wilson score interval for the success rate at normal quantile `z`.
pub fn confidence_interval(stats: &TrialStats, z: f64) -> (f64, f64) {
    wilson(stats.successes, stats.trials, z)
}

pub fn wilson(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    let m = trials as f64;
    let p = successes as f64 / m;
    let z2 = z * z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = z / denom * libm::sqrt(p * (1.0 - p) / m + z2 / (4.0 * m * m));
    let mut lo = (center - half).clamp(0.0, 1.0).min(p);
    let mut hi = (center + half).clamp(0.0, 1.0).max(p);
    if successes == 0 {
        lo = 0.0;
    }
    if successes == trials {
        hi = 1.0;
    }
    (lo, hi)
}
