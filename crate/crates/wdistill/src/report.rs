//! Machine-readable run reports.
//!
//! Reports are JSON documents with keys sorted at every level, every float
//! written with 17 significant digits in exponent form (`6.0000000000000000e-1`)
//! and a trailing newline, so two runs with the same inputs produce the same
//! bytes. User and particle numbers are 1-based.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use wdistill_core::cavity::{CavityReport, JCParams};
use wdistill_core::montecarlo::{Scheme, TrialStats};
use wdistill_core::protocol::{DistillationReport, PROBABILITY_TOL};

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchEntry {
    /// Outcome per measured ancilla or cavity, comma separated, in the
    /// order of `ancilla_users`.
    pub pattern: String,
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcParamsEntry {
    pub omega: f64,
    pub omega0: f64,
    pub epsilon: f64,
    pub fock_cutoff: usize,
}

impl From<&JCParams> for JcParamsEntry {
    fn from(p: &JCParams) -> Self {
        Self { omega: p.omega, omega0: p.omega0, epsilon: p.epsilon, fock_cutoff: p.fock_cutoff }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub user: usize,
    pub delta_t: f64,
    pub spectator_phase: f64,
    pub active_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingEntry {
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub empirical_p: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
    pub interval_z: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    /// Trial count per truncated outcome pattern.
    pub histogram: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    /// `abstract` or `cavity`.
    pub scheme: String,
    /// `exact` or `sampled`.
    pub mode: String,
    pub n: usize,
    pub min_index: usize,
    pub ancilla_users: Vec<usize>,
    pub success_probability_analytic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_probability_exact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity_with_w: Option<f64>,
    #[serde(default)]
    pub branches: Vec<BranchEntry>,
    pub normalization_factor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc_params: Option<JcParamsEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<StepEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingEntry>,
}

pub fn pattern_label(pattern: &[usize]) -> String {
    pattern.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(",")
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Abstract => "abstract",
        Scheme::Cavity => "cavity",
    }
}

/// Pulls probabilities that overshoot [0, 1] by rounding back into range.
/// Larger excursions are left alone for [`Report::validate`] to reject.
fn clamp_prob(p: f64) -> f64 {
    if (-PROBABILITY_TOL..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + PROBABILITY_TOL {
        1.0
    } else {
        p
    }
}

fn ancilla_users(n: usize, min_index: usize) -> Vec<usize> {
    (0..n).filter(|&k| k != min_index).map(|k| k + 1).collect()
}

impl Report {
    pub fn from_exact(r: &DistillationReport, normalization_factor: f64) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            scheme: "abstract".into(),
            mode: "exact".into(),
            n: r.n,
            min_index: r.min_index + 1,
            ancilla_users: ancilla_users(r.n, r.min_index),
            success_probability_analytic: clamp_prob(r.success_probability_analytic),
            success_probability_exact: Some(clamp_prob(r.success_probability_exact)),
            fidelity_with_w: Some(r.fidelity_with_w),
            branches: r
                .branches
                .iter()
                .map(|b| BranchEntry { pattern: pattern_label(&b.pattern), probability: clamp_prob(b.probability) })
                .collect(),
            normalization_factor,
            jc_params: None,
            steps: None,
            sampling: None,
        }
    }

    pub fn from_cavity(r: &CavityReport, normalization_factor: f64) -> Self {
        let mut report = Self::from_exact(&r.distillation, normalization_factor);
        report.scheme = "cavity".into();
        report.jc_params = Some((&r.params).into());
        report.steps = Some(
            r.steps
                .iter()
                .map(|s| StepEntry {
                    user: s.k + 1,
                    delta_t: s.delta_t,
                    spectator_phase: s.accrued_phases.spectator,
                    active_phase: s.accrued_phases.active,
                })
                .collect(),
        );
        report
    }

    pub fn from_sampled(
        stats: &TrialStats,
        n: usize,
        min_index: usize,
        scheme: Scheme,
        params: Option<&JCParams>,
        interval: (f64, f64, f64),
        normalization_factor: f64,
    ) -> Self {
        let (interval_z, interval_lo, interval_hi) = interval;
        Self {
            tool_version: TOOL_VERSION.into(),
            scheme: scheme_name(scheme).into(),
            mode: "sampled".into(),
            n,
            min_index: min_index + 1,
            ancilla_users: ancilla_users(n, min_index),
            success_probability_analytic: clamp_prob(stats.analytic_p),
            success_probability_exact: None,
            fidelity_with_w: None,
            branches: Vec::new(),
            normalization_factor,
            jc_params: params.map(Into::into),
            steps: None,
            sampling: Some(SamplingEntry {
                trials: stats.trials,
                seed: stats.seed,
                successes: stats.successes,
                empirical_p: stats.empirical_p,
                std_error: stats.std_error,
                z_score: stats.z_score.is_finite().then_some(stats.z_score),
                interval_z,
                interval_lo,
                interval_hi,
                histogram: stats.histogram.iter().map(|(k, &v)| (pattern_label(k), v)).collect(),
            }),
        }
    }

    /// Checks the invariants every emitted report must satisfy.
    pub fn validate(&self) -> Result<(), String> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(format!("{name} = {p} is not a probability"))
            }
        };
        if self.n < 2 || self.min_index < 1 || self.min_index > self.n {
            return Err(format!("bad n = {} / min_index = {}", self.n, self.min_index));
        }
        if self.ancilla_users.len() != self.n - 1 || self.ancilla_users.contains(&self.min_index) {
            return Err("ancilla users must be every user but min_index".into());
        }
        prob("success_probability_analytic", self.success_probability_analytic)?;
        if let Some(p) = self.success_probability_exact {
            prob("success_probability_exact", p)?;
        }
        if let Some(f) = self.fidelity_with_w {
            // fidelities may exceed 1 by rounding
            if !(0.0..=1.0 + 1e-12).contains(&f) {
                return Err(format!("fidelity {f} out of range"));
            }
        }
        for b in &self.branches {
            prob("branch probability", b.probability)?;
        }
        if let Some(s) = &self.sampling {
            prob("empirical_p", s.empirical_p)?;
            prob("interval_lo", s.interval_lo)?;
            prob("interval_hi", s.interval_hi)?;
            if s.successes > s.trials || s.histogram.values().sum::<u64>() != s.trials {
                return Err("histogram does not account for every trial".into());
            }
            if !(s.interval_lo <= s.empirical_p && s.empirical_p <= s.interval_hi) {
                return Err("interval does not contain the estimate".into());
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String, CliError> {
        // Value maps are BTreeMaps, so keys come out sorted at every level.
        let value = serde_json::to_value(self).map_err(|e| CliError::Numerical(format!("cannot encode report: {e}")))?;
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloatFormatter::default());
        value.serialize(&mut ser).map_err(|e| CliError::Numerical(format!("cannot encode report: {e}")))?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed report: {e}")))
    }
}

/// Formats every float as `{:.16e}`; everything else as pretty JSON.
#[derive(Default)]
pub struct FixedFloatFormatter {
    inner: PrettyFormatter<'static>,
}

pub fn fmt_f64(v: f64) -> String {
    // Adding 0.0 folds negative zero into positive zero.
    let v = v + 0.0;
    format!("{v:.16e}")
}

impl Formatter for FixedFloatFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use wdistill_core::protocol::{run_exact, WPrimeSpec};

    fn sample_report() -> Report {
        let spec = WPrimeSpec::from_real(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]).unwrap();
        Report::from_exact(&run_exact(&spec).unwrap(), 1.0)
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(fmt_f64(0.6), "5.9999999999999998e-1");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        let text = sample_report().to_text().unwrap();
        assert!(text.ends_with("}\n"));
        assert!(text.contains("\"min_index\": 3"));
    }

    #[test]
    fn keys_are_sorted() {
        let text = sample_report().to_text().unwrap();
        let top: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
    }

    #[test]
    fn round_trip() {
        let r = sample_report();
        let back = Report::parse(&r.to_text().unwrap()).unwrap();
        assert_eq!(back, r);
        back.validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_probability() {
        let mut r = sample_report();
        r.success_probability_analytic = 1.5;
        assert!(r.validate().is_err());
    }
}
