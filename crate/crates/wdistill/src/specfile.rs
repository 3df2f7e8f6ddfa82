//! W′ specification files.
//!
//! ```json
//! { "coefficients": [[0.70710678, 0], [0.54772256, 0], [0.4472136, 0]], "normalize": false }
//! ```
//!
//! Each coefficient is an `[re, im]` pair. Without `normalize`, the squared
//! norms must already sum to 1 within 1e-6; the coefficients are then
//! rescaled to unit norm at full precision.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use wdistill_core::protocol::{WPrimeSpec, ZERO_COEFF_TOL};

use crate::error::CliError;

/// Norm tolerance for coefficients typed into a file.
pub const FILE_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub coefficients: Vec<[f64; 2]>,
    #[serde(default)]
    pub normalize: bool,
}

/// A validated spec plus the rescaling that was applied to reach unit norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub spec: WPrimeSpec,
    pub normalization_factor: f64,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::InvalidSpec(format!("malformed spec file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn ingest(&self, allow_unnormalized: bool) -> Result<Ingested, CliError> {
        let coeffs: Vec<Complex64> = self.coefficients.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        if coeffs.len() < 2 {
            return Err(CliError::InvalidSpec(format!("need at least 2 coefficients, got {}", coeffs.len())));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CliError::InvalidSpec("coefficients must be finite".into()));
        }
        if let Some(i) = coeffs.iter().position(|z| z.norm() <= ZERO_COEFF_TOL) {
            return Err(CliError::InvalidSpec(format!("coefficient {} is zero", i + 1)));
        }
        let norm_sqr: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if !(self.normalize || allow_unnormalized) && (norm_sqr - 1.0).abs() > FILE_NORM_TOL {
            return Err(CliError::InvalidSpec(format!(
                "coefficients are not normalized (sum |c|^2 = {norm_sqr}); set \"normalize\": true or pass --allow-unnormalized"
            )));
        }
        let (spec, normalization_factor) = WPrimeSpec::renormalized(coeffs)?;
        Ok(Ingested { spec, normalization_factor })
    }
}
