#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use wdistill_core::protocol::{DistillationReport, WPrimeSpec};

/// Random W′ spec with magnitudes in [0.1, 1) before normalization and
/// uniformly random phases.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> WPrimeSpec {
    let coeffs = (0..n)
        .map(|_| Complex64::from_polar(rng.random_range(0.1..1.0), rng.random_range(0.0..TAU)))
        .collect();
    WPrimeSpec::renormalized(coeffs).unwrap().0
}

/// Exact branch probabilities keyed by the pattern cut after the first
/// failed ancilla, which is how sampled trials record them.
pub fn truncated_branches(r: &DistillationReport) -> BTreeMap<Vec<usize>, f64> {
    let mut out = BTreeMap::new();
    for b in &r.branches {
        let cut = b.pattern.iter().position(|&o| o == 1).map_or(b.pattern.len(), |i| i + 1);
        *out.entry(b.pattern[..cut].to_vec()).or_insert(0.0) += b.probability;
    }
    out
}
