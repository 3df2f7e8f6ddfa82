//! Local-operation distillation of a W′ state into the W state.
//!
//! Every user except the one holding the smallest coefficient magnitude
//! couples their particle to a fresh ancilla qubit with the 4x4 unitary
//!
//! ```text
//! ⎡ 1   0            0            0 ⎤
//! ⎢ 0   z_k         −√(1−|z_k|²)  0 ⎥     z_k = min_i |c_i| / c_k
//! ⎢ 0   √(1−|z_k|²)  z_k*         0 ⎥
//! ⎣ 0   0            0            1 ⎦
//! ```
//!
//! written in the basis `|0⟩_k|0⟩_a, |1⟩_k|0⟩_a, |0⟩_k|1⟩_a, |1⟩_k|1⟩_a`.
//! On the ancilla-`|0⟩` branch the coefficient `c_k` becomes the real number
//! `min_i |c_i|`. Post-selecting every ancilla on `|0⟩` leaves all terms with
//! equal magnitude; a phase gate on the skipped user's particle removes
//! `arg(c_j)` and the result is exactly `W_N`, reached with probability
//! `N · min_i |c_i|²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;


use crate::error::{Error, Result};
use crate::linalg::{is_unitary, DenseMatrix, ALGEBRAIC_TOL, C64};
use crate::statevec::{
    enumerate_branches, fidelity, SiteKind, StateVector, SubsystemLayout, DEFAULT_MAX_DIM,
    INGEST_NORM_TOL,
};

/// Magnitudes closer than this count as tied when picking the skipped user.
pub const MAGNITUDE_TIE_TOL: f64 = 1e-12;

/// Coefficients at or below this magnitude are treated as zero.
pub const ZERO_COEFF_TOL: f64 = 1e-12;

/// Coefficients `c_1..c_N` of `Σ_k c_k |0…1_k…0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct WPrimeSpec {
    coeffs: Vec<C64>,
}

impl WPrimeSpec {
    /// Requires `N ≥ 2`, finite entries and `Σ|c_i|² = 1` within 1e-9.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        check_shape(&coeffs)?;
        let norm_sqr: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > INGEST_NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { coeffs })
    }

    /// Rescales arbitrary coefficients to unit norm. Returns the spec and the
    /// factor that was multiplied in.
    pub fn renormalized(coeffs: Vec<C64>) -> Result<(Self, f64)> {
        check_shape(&coeffs)?;
        let norm = libm::sqrt(coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm_sqr: 0.0 });
        }
        let factor = 1.0 / norm;
        Ok((Self { coeffs: coeffs.into_iter().map(|z| z * factor).collect() }, factor))
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        let a = 1.0 / libm::sqrt(n as f64);
        Self::new(vec![C64::new(a, 0.0); n])
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn min_magnitude(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    /// 0-based index of the smallest magnitude; lowest index wins ties.
    pub fn min_index(&self) -> usize {
        let m = self.min_magnitude();
        self.coeffs.iter().position(|z| z.norm() <= m + MAGNITUDE_TIE_TOL).unwrap_or(0)
    }

    fn check_nonzero(&self) -> Result<()> {
        match self.coeffs.iter().position(|z| z.norm() <= ZERO_COEFF_TOL) {
            Some(index) => Err(Error::DegenerateCoefficient { index }),
            None => Ok(()),
        }
    }

    /// The W′ state itself on `N` qubits.
    pub fn to_state(&self) -> Result<StateVector> {
        single_excitation_state(self.coeffs.iter().copied(), DEFAULT_MAX_DIM)
    }
}

fn check_shape(coeffs: &[C64]) -> Result<()> {
    if coeffs.len() < 2 {
        return Err(Error::Validation(format!("need at least 2 coefficients, got {}", coeffs.len())));
    }
    if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Validation("coefficients must be finite".into()));
    }
    Ok(())
}

fn single_excitation_state(coeffs: impl ExactSizeIterator<Item = C64>, cap: usize) -> Result<StateVector> {
    let n = coeffs.len();
    let layout = SubsystemLayout::with_cap(vec![2; n], cap)?
        .with_kinds(vec![SiteKind::Particle; n])?;
    let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
    for (k, c) in coeffs.enumerate() {
        amps[1 << (n - 1 - k)] = c;
    }
    StateVector::from_amplitudes(layout, amps)
}

/// `|W_N⟩ = (|10…0⟩ + |010…0⟩ + … + |0…01⟩)/√N`.
pub fn make_w_state(n: usize) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::Validation(format!("W state needs n >= 2, got {n}")));
    }
    let a = C64::new(1.0 / libm::sqrt(n as f64), 0.0);
    single_excitation_state(core::iter::repeat_n(a, n), DEFAULT_MAX_DIM)
}

/// One user's local operation.
#[derive(Clone, Debug, PartialEq)]
pub struct StepPlan {
    /// 0-based user index.
    pub k: usize,
    pub z: C64,
    pub unitary: DenseMatrix,
}

/// The 4x4 unitary for a given ratio `z` with `|z| ≤ 1`.
pub fn step_unitary(z: C64) -> DenseMatrix {
    let s = libm::sqrt((1.0 - z.norm_sqr()).max(0.0));
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let s = C64::new(s, 0.0);
    DenseMatrix::from_rows(&[
        &[one, zero, zero, zero],
        &[zero, z, -s, zero],
        &[zero, s, z.conj(), zero],
        &[zero, zero, zero, one],
    ])
    .expect("4x4 literal")
}

pub fn build_step_unitary(spec: &WPrimeSpec, k: usize) -> Result<StepPlan> {
    if k >= spec.n() {
        return Err(Error::Index(format!("user {k} out of range for {} users", spec.n())));
    }
    let ck = spec.coeffs[k];
    if ck.norm() <= ZERO_COEFF_TOL {
        return Err(Error::DegenerateCoefficient { index: k });
    }
    if k == spec.min_index() {
        return Err(Error::MinIndexStep { index: k });
    }
    let z = C64::new(spec.min_magnitude(), 0.0) / ck;
    let unitary = step_unitary(z);
    if !is_unitary(&unitary, ALGEBRAIC_TOL)? {
        return Err(Error::Numerical(format!("step unitary for user {} is not unitary", k + 1)));
    }
    Ok(StepPlan { k, z, unitary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub min_index: usize,
    /// One step per user other than `min_index`, ascending.
    pub steps: Vec<StepPlan>,
}

pub fn plan(spec: &WPrimeSpec) -> Result<Plan> {
    spec.check_nonzero()?;
    let min_index = spec.min_index();
    let steps = (0..spec.n())
        .filter(|&k| k != min_index)
        .map(|k| build_step_unitary(spec, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan { min_index, steps })
}

/// Phase carried by each single-excitation term on top of its magnitude.
///
/// For the skipped user `j` the entry excludes `arg(c_j)`, which
/// [`phase_correction`] receives separately.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseLedger {
    pub phases: Vec<f64>,
}

impl PhaseLedger {
    pub fn zeros(n: usize) -> Self {
        Self { phases: vec![0.0; n] }
    }
}

/// Applies `diag(1, e^{iφ})` to one qubit-like site.
pub(crate) fn site_phase(state: &StateVector, site: usize, phi: f64) -> Result<StateVector> {
    let gate = DenseMatrix::from_diagonal(&[C64::new(1.0, 0.0), C64::from_polar(1.0, phi)]);
    state.apply_local(&gate, &[site])
}

/// Weight outside the single-excitation sector of an all-qubit state.
fn off_sector_weight(state: &StateVector) -> Result<f64> {
    if state.layout().dims().iter().any(|&d| d != 2) {
        return Err(Error::Contract("phase correction expects qubit sites only".into()));
    }
    Ok(state
        .amps()
        .iter()
        .enumerate()
        .filter(|(i, _)| i.count_ones() != 1)
        .map(|(_, z)| z.norm_sqr())
        .sum())
}

/// Rotates the global phase so the amplitude of `|10…0⟩` is real and positive.
pub(crate) fn normalize_global_phase(state: &StateVector) -> StateVector {
    let n = state.layout().num_sites();
    let lead = state.amps()[1 << (n - 1)];
    if lead.norm() == 0.0 {
        return state.clone();
    }
    state.scaled(lead.conj() / lead.norm())
}

pub(crate) fn check_single_excitation(state: &StateVector) -> Result<()> {
    let w = off_sector_weight(state)?;
    if w > ALGEBRAIC_TOL {
        return Err(Error::Contract(format!(
            "state has weight {w:e} outside the single-excitation sector"
        )));
    }
    Ok(())
}

/// Rotational correction after success: removes `arg(c_j)` (plus any
/// ledger phase) on particle `j` and the ledger phases on every other
/// particle, then fixes the global phase.
pub fn phase_correction(
    state: &StateVector,
    j: usize,
    c_j: C64,
    ledger: &PhaseLedger,
) -> Result<StateVector> {
    check_single_excitation(state)?;
    let n = state.layout().num_sites();
    if ledger.phases.len() != n || j >= n {
        return Err(Error::Shape(format!(
            "ledger of {} phases, skipped user {j}, for {n} particles",
            ledger.phases.len()
        )));
    }
    let mut out = state.clone();
    for (site, &phi) in ledger.phases.iter().enumerate() {
        let total = if site == j { phi + c_j.arg() } else { phi };
        if total != 0.0 {
            out = site_phase(&out, site, -total)?;
        }
    }
    Ok(normalize_global_phase(&out))
}

pub fn analytic_success_probability(spec: &WPrimeSpec) -> f64 {
    let m = spec.min_magnitude();
    (spec.n() as f64 * m * m).min(1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchRecord {
    /// Measured outcome per ancilla (or cavity), in ascending user order.
    pub pattern: Vec<usize>,
    pub probability: f64,
    /// Normalized state of the N particles on this branch; `None` if the
    /// branch has probability zero.
    pub particle_state: Option<StateVector>,
}

impl BranchRecord {
    pub fn is_success(&self) -> bool {
        self.pattern.iter().all(|&o| o == 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistillationReport {
    pub n: usize,
    /// 0-based index of the user that performs no step.
    pub min_index: usize,
    pub success_probability_exact: f64,
    pub success_probability_analytic: f64,
    pub branches: Vec<BranchRecord>,
    /// Corrected particle state after success.
    pub final_state: StateVector,
    pub fidelity_with_w: f64,
}

/// Tolerances every report must satisfy.
pub const PROBABILITY_TOL: f64 = 1e-10;
pub const FIDELITY_TOL: f64 = 1e-12;

impl DistillationReport {
    pub fn branch_total(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn check_invariants(&self) -> Result<()> {
        let total = self.branch_total();
        if (total - 1.0).abs() > PROBABILITY_TOL {
            return Err(Error::Numerical(format!("branch probabilities sum to {total}")));
        }
        let gap = (self.success_probability_exact - self.success_probability_analytic).abs();
        if gap > PROBABILITY_TOL {
            return Err(Error::Numerical(format!("simulated and analytic success differ by {gap:e}")));
        }
        if (1.0 - self.fidelity_with_w).abs() > FIDELITY_TOL {
            return Err(Error::Numerical(format!("output fidelity is {}", self.fidelity_with_w)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub max_dim: usize,
    /// Order in which the planned steps are applied, as indices into the
    /// step list. Defaults to ascending.
    pub step_order: Option<Vec<usize>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_dim: DEFAULT_MAX_DIM, step_order: None }
    }
}

impl RunOptions {
    pub(crate) fn order(&self, steps: usize) -> Result<Vec<usize>> {
        match &self.step_order {
            None => Ok((0..steps).collect()),
            Some(order) => {
                let mut sorted = order.clone();
                sorted.sort_unstable();
                if sorted != (0..steps).collect::<Vec<_>>() {
                    return Err(Error::Validation(format!(
                        "step order must be a permutation of 0..{steps}"
                    )));
                }
                Ok(order.clone())
            }
        }
    }
}

/// `|W′⟩ ⊗ |0⟩^{⊗ extra}` with the extra sites of the given dimension and kind.
pub(crate) fn with_ancillas(
    spec: &WPrimeSpec,
    particle_kind: SiteKind,
    extra_dim: usize,
    extra_kind: SiteKind,
    cap: usize,
) -> Result<StateVector> {
    let n = spec.n();
    let mut dims = vec![2; n];
    dims.extend(core::iter::repeat_n(extra_dim, n - 1));
    let mut kinds = vec![particle_kind; n];
    kinds.extend(core::iter::repeat_n(extra_kind, n - 1));
    let layout = SubsystemLayout::with_cap(dims, cap)?.with_kinds(kinds)?;
    let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
    let mut occ = vec![0; 2 * n - 1];
    for (k, &c) in spec.coeffs.iter().enumerate() {
        occ[k] = 1;
        amps[layout.flat_index(&occ)?] = c;
        occ[k] = 0;
    }
    StateVector::from_amplitudes(layout, amps)
}

/// Particles and ancillas after every planned unitary, before measurement.
pub fn evolve(spec: &WPrimeSpec, plan: &Plan, options: &RunOptions) -> Result<StateVector> {
    let n = spec.n();
    let mut state = with_ancillas(spec, SiteKind::Particle, 2, SiteKind::Ancilla, options.max_dim)?;
    for slot in options.order(plan.steps.len())? {
        let step = &plan.steps[slot];
        state = state.apply_local(&step.unitary, &[n + slot, step.k])?;
    }
    Ok(state)
}

/// Shared tail of both protocol variants: enumerate measurement branches on
/// the `N-1` ancilla-like sites, apply `repair` to the success branch and
/// compare with `W_N`.
pub(crate) fn finish(
    spec: &WPrimeSpec,
    min_index: usize,
    evolved: &StateVector,
    prune_null: bool,
    repair: impl Fn(&StateVector) -> Result<StateVector>,
) -> Result<DistillationReport> {
    let n = spec.n();
    let branches: Vec<BranchRecord> = enumerate_branches(evolved, n, n - 1, prune_null)?
        .into_iter()
        .map(|b| BranchRecord { pattern: b.pattern, probability: b.probability, particle_state: b.remainder })
        .collect();
    let success = branches
        .iter()
        .find(|b| b.is_success())
        .ok_or_else(|| Error::Contract("no success branch enumerated".into()))?;
    let post = success
        .particle_state
        .as_ref()
        .ok_or_else(|| Error::Contract("success branch has probability zero".into()))?;
    let final_state = repair(post)?;
    let fidelity_with_w = fidelity(&make_w_state(n)?, &final_state)?;
    Ok(DistillationReport {
        n,
        min_index,
        success_probability_exact: success.probability,
        success_probability_analytic: analytic_success_probability(spec),
        branches,
        final_state,
        fidelity_with_w,
    })
}

pub fn run_exact(spec: &WPrimeSpec) -> Result<DistillationReport> {
    run_exact_with(spec, &RunOptions::default())
}

pub fn run_exact_with(spec: &WPrimeSpec, options: &RunOptions) -> Result<DistillationReport> {
    let plan = plan(spec)?;
    let evolved = evolve(spec, &plan, options)?;
    let ledger = PhaseLedger::zeros(spec.n());
    let c_j = spec.coeffs[plan.min_index];
    finish(spec, plan.min_index, &evolved, false, |s| phase_correction(s, plan.min_index, c_j, &ledger))
}
