//! Multi-threaded trial sampling.
//!
//! Trials are cut into fixed-size chunks; each chunk is tallied on its own
//! and the tallies are merged. Since trial `i` always uses stream `i` and
//! merging only adds counts, the result does not depend on the thread count.

use rayon::prelude::*;
use wdistill_core::montecarlo::{Tally, TrialConfig, TrialSampler, TrialStats};
use wdistill_core::protocol::{RunOptions, WPrimeSpec};
use wdistill_core::Result;

const CHUNK: u64 = 4096;

pub fn run_trials_parallel(spec: &WPrimeSpec, config: &TrialConfig, options: &RunOptions) -> Result<TrialStats> {
    let sampler = TrialSampler::with_options(spec, config, options)?;
    let chunks = config.trials.div_ceil(CHUNK);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| sampler.tally(c * CHUNK..((c + 1) * CHUNK).min(config.trials)))
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    sampler.stats(tally)
}

#[cfg(test)]
mod tests {
    use super::*;
    use wdistill_core::montecarlo::run_trials;

    #[test]
    fn parallel_equals_serial_for_any_pool() {
        let spec = WPrimeSpec::from_real(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]).unwrap();
        let cfg = TrialConfig::abstract_scheme(10_000, 77);
        let serial = run_trials(&spec, &cfg).unwrap();
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| run_trials_parallel(&spec, &cfg, &RunOptions::default())).unwrap();
            assert_eq!(par, serial);
        }
    }
}
