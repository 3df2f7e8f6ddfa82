//! Success probability along a one-parameter family of specs.
//!
//! Row `k` (1-based, `k = 1..=steps`) uses `m = k / (n · steps)`: one
//! coefficient with `|c|² = m` and the other `n − 1` equal at
//! `(1 − m)/(n − 1)`. The last row is the uniform W state.

use std::fmt::Write;

use wdistill_core::protocol::{analytic_success_probability, run_exact_with, RunOptions, WPrimeSpec, PROBABILITY_TOL};

use crate::error::CliError;
use crate::report::fmt_f64;

pub const CSV_HEADER: &str = "min_coeff_sq,analytic_p,exact_p";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub min_coeff_sq: f64,
    pub analytic_p: f64,
    pub exact_p: f64,
}

pub fn family_spec(n: usize, m: f64) -> Result<WPrimeSpec, CliError> {
    let rest = ((1.0 - m) / (n - 1) as f64).sqrt();
    let mut coeffs = vec![rest; n - 1];
    coeffs.push(m.sqrt());
    Ok(WPrimeSpec::from_real(&coeffs)?)
}

pub fn sweep(n: usize, steps: usize, options: &RunOptions) -> Result<Vec<SweepRow>, CliError> {
    if n < 2 || steps < 2 {
        return Err(CliError::Usage(format!("sweep needs n >= 2 and steps >= 2, got n = {n}, steps = {steps}")));
    }
    (1..=steps)
        .map(|k| {
            let m = k as f64 / (n * steps) as f64;
            let spec = family_spec(n, m)?;
            let analytic_p = analytic_success_probability(&spec);
            let exact_p = run_exact_with(&spec, options)?.success_probability_exact;
            if (exact_p - analytic_p).abs() > PROBABILITY_TOL {
                return Err(CliError::Numerical(format!(
                    "row m = {m}: simulated {exact_p} vs analytic {analytic_p}"
                )));
            }
            Ok(SweepRow { min_coeff_sq: m, analytic_p, exact_p })
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{}", fmt_f64(r.min_coeff_sq), fmt_f64(r.analytic_p), fmt_f64(r.exact_p));
    }
    out
}
