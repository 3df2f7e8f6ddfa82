//! Atom–cavity realization of the distillation protocol.
//!
//! Each ancilla qubit is replaced by a single-mode cavity prepared in the
//! vacuum. User `k` sends atom `k` through their cavity for a time `Δt_k`
//! under the Jaynes–Cummings Hamiltonian
//!
//! ```text
//! H = ω a†a + ω₀ S_z + ε (a S₊ + a† S₋),   S_z = ½(|e⟩⟨e| − |g⟩⟨g|)
//! ```
//!
//! At resonance the `|e,0⟩` component Rabi-oscillates into `|g,1⟩`, so
//! choosing `cos(ε Δt_k) = min_i |c_i| / |c_k|` and detecting the vacuum
//! equalizes the magnitudes. The free evolution leaves phases
//! `e^{±iωΔt_k/2}` on every term; they are recorded in a [`PhaseLedger`] and
//! removed afterwards with single-atom Ramsey phase shifts.
//!
//! Atomic levels map to qubit states as `|g⟩ ↔ 0`, `|e⟩ ↔ 1`. The atom–cavity
//! block is ordered atom ⊗ Fock: index `atom · (cutoff + 1) + n`.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Deref;


use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, C64};
use crate::protocol::{
    check_single_excitation, finish, normalize_global_phase, site_phase, with_ancillas,
    DistillationReport, PhaseLedger, RunOptions, WPrimeSpec, ZERO_COEFF_TOL,
};
use crate::statevec::{SiteKind, StateVector};

/// Relative tolerance on `|ω − ω₀|` for the closed-form propagator.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Population allowed on the artificially isolated `|e, cutoff⟩` level.
const TRUNCATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JCParams {
    pub omega: f64,
    pub omega0: f64,
    pub epsilon: f64,
    pub fock_cutoff: usize,
}

impl JCParams {
    pub fn new(omega: f64, omega0: f64, epsilon: f64, fock_cutoff: usize) -> Result<Self> {
        if !(omega.is_finite() && omega0.is_finite() && epsilon.is_finite()) {
            return Err(Error::Validation("Jaynes-Cummings parameters must be finite".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Validation(format!("coupling epsilon must be positive, got {epsilon}")));
        }
        if fock_cutoff < 1 {
            return Err(Error::Validation("fock cutoff must be at least 1".into()));
        }
        Ok(Self { omega, omega0, epsilon, fock_cutoff })
    }

    /// Cavity tuned to the atom: `ω₀ = ω`.
    pub fn resonant(omega: f64, epsilon: f64, fock_cutoff: usize) -> Result<Self> {
        Self::new(omega, omega, epsilon, fock_cutoff)
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega - self.omega0).abs() <= RESONANCE_TOL * self.omega.abs().max(1.0)
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    /// Dimension of the atom ⊗ cavity block.
    pub fn block_dim(&self) -> usize {
        2 * self.fock_dim()
    }
}

/// The W′ coefficients read over atomic levels.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicWPrimeSpec(pub WPrimeSpec);

impl From<WPrimeSpec> for AtomicWPrimeSpec {
    fn from(spec: WPrimeSpec) -> Self {
        Self(spec)
    }
}

impl Deref for AtomicWPrimeSpec {
    type Target = WPrimeSpec;

    fn deref(&self) -> &WPrimeSpec {
        &self.0
    }
}

/// Phases picked up during one interaction: `spectator` multiplies every term
/// whose excitation sits on another atom, `active` the term whose
/// excitation sits on the interacting atom.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AccruedPhases {
    pub spectator: f64,
    pub active: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityStepPlan {
    /// 0-based user index.
    pub k: usize,
    pub delta_t: f64,
    pub accrued_phases: AccruedPhases,
}

impl CavityStepPlan {
    /// Fills in the free-evolution phases for the given frequencies.
    pub fn with_frequencies(mut self, params: &JCParams) -> Self {
        self.accrued_phases = AccruedPhases {
            spectator: params.omega0 * self.delta_t / 2.0,
            active: -params.omega * self.delta_t / 2.0,
        };
        self
    }
}

#[inline]
fn idx(params: &JCParams, excited: bool, n: usize) -> usize {
    usize::from(excited) * params.fock_dim() + n
}

pub fn jc_hamiltonian(params: &JCParams) -> DenseMatrix {
    let f = params.fock_cutoff;
    let mut h = DenseMatrix::zeros(params.block_dim(), params.block_dim());
    for n in 0..=f {
        let nf = n as f64;
        h[(idx(params, false, n), idx(params, false, n))] = C64::new(params.omega * nf - params.omega0 / 2.0, 0.0);
        h[(idx(params, true, n), idx(params, true, n))] = C64::new(params.omega * nf + params.omega0 / 2.0, 0.0);
    }
    for n in 0..f {
        let g = C64::new(params.epsilon * libm::sqrt((n + 1) as f64), 0.0);
        h[(idx(params, true, n), idx(params, false, n + 1))] = g;
        h[(idx(params, false, n + 1), idx(params, true, n))] = g;
    }
    h
}

/// Closed-form `exp(-iHt)` of the resonant Jaynes–Cummings block.
///
/// `|g,0⟩` and `|e,cutoff⟩` only pick up phases; each pair
/// `{|e,n⟩, |g,n+1⟩}` evolves as a two-level system at Rabi frequency
/// `ε√(n+1)`. The pair formula keeps the (tolerated) residual detuning so it
/// stays the exact exponential of [`jc_hamiltonian`].
pub fn jc_propagator_closed(params: &JCParams, t: f64) -> Result<DenseMatrix> {
    if !params.is_resonant() {
        return Err(Error::OffResonance { omega: params.omega, omega0: params.omega0 });
    }
    let f = params.fock_cutoff;
    let mut u = DenseMatrix::zeros(params.block_dim(), params.block_dim());
    u[(idx(params, false, 0), idx(params, false, 0))] = C64::from_polar(1.0, params.omega0 * t / 2.0);
    let top = params.omega * f as f64 + params.omega0 / 2.0;
    u[(idx(params, true, f), idx(params, true, f))] = C64::from_polar(1.0, -top * t);

    for n in 0..f {
        let mean = params.omega * (n as f64 + 0.5);
        let half_detuning = (params.omega0 - params.omega) / 2.0;
        let g = params.epsilon * libm::sqrt((n + 1) as f64);
        let rabi = libm::sqrt(g * g + half_detuning * half_detuning);
        let (sin, cos) = (libm::sin(rabi * t), libm::cos(rabi * t));
        let sinc = if rabi == 0.0 { t } else { sin / rabi };
        let prefactor = C64::from_polar(1.0, -mean * t);
        let mi = C64::new(0.0, -1.0);
        let e = idx(params, true, n);
        let gn = idx(params, false, n + 1);
        u[(e, e)] = prefactor * (C64::new(cos, 0.0) + mi * (half_detuning * sinc));
        u[(gn, gn)] = prefactor * (C64::new(cos, 0.0) - mi * (half_detuning * sinc));
        u[(gn, e)] = prefactor * mi * (g * sinc);
        u[(e, gn)] = prefactor * mi * (g * sinc);
    }
    Ok(u)
}

/// Interaction time with `|c_k| cos(ε Δt_k) = min_i |c_i|`.
///
/// The returned plan has no accrued phases yet; see
/// [`CavityStepPlan::with_frequencies`].
pub fn optimal_interaction_time(spec: &AtomicWPrimeSpec, k: usize, epsilon: f64) -> Result<CavityStepPlan> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Validation(format!("coupling epsilon must be positive, got {epsilon}")));
    }
    if k >= spec.n() {
        return Err(Error::Index(format!("user {k} out of range for {} users", spec.n())));
    }
    let ck = spec.coeffs()[k].norm();
    if ck <= ZERO_COEFF_TOL {
        return Err(Error::DegenerateCoefficient { index: k });
    }
    let ratio = (spec.min_magnitude() / ck).clamp(0.0, 1.0);
    Ok(CavityStepPlan { k, delta_t: libm::acos(ratio) / epsilon, accrued_phases: AccruedPhases::default() })
}

/// Steps for every user except the skipped one, ascending, with phases.
pub fn physical_plan(spec: &AtomicWPrimeSpec, params: &JCParams) -> Result<(usize, Vec<CavityStepPlan>)> {
    if let Some(index) = spec.coeffs().iter().position(|z| z.norm() <= ZERO_COEFF_TOL) {
        return Err(Error::DegenerateCoefficient { index });
    }
    let j = spec.min_index();
    let steps = (0..spec.n())
        .filter(|&k| k != j)
        .map(|k| optimal_interaction_time(spec, k, params.epsilon).map(|s| s.with_frequencies(params)))
        .collect::<Result<Vec<_>>>()?;
    Ok((j, steps))
}

/// Phase of each single-excitation term after all steps, relative to its
/// post-selected magnitude (excluding `arg(c_j)` for the skipped user).
pub fn phase_ledger(spec: &AtomicWPrimeSpec, min_index: usize, steps: &[CavityStepPlan]) -> PhaseLedger {
    let mut phases: Vec<f64> = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| if i == min_index { 0.0 } else { c.arg() })
        .collect();
    for step in steps {
        for (i, p) in phases.iter_mut().enumerate() {
            *p += if i == step.k { step.accrued_phases.active } else { step.accrued_phases.spectator };
        }
    }
    PhaseLedger { phases }
}

/// Phase shift `diag(1, e^{iφ})` on one atom, as applied by a Ramsey zone.
pub fn ramsey_phase(state: &StateVector, site: usize, phi: f64) -> Result<StateVector> {
    let layout = state.layout();
    if site >= layout.num_sites() {
        return Err(Error::Index(format!("site {site} out of range")));
    }
    let atomic = matches!(layout.kind(site), SiteKind::Atom | SiteKind::Generic | SiteKind::Particle);
    if !atomic || layout.dim(site) != 2 {
        return Err(Error::Validation(format!("site {} is not an atom", layout.label(site))));
    }
    site_phase(state, site, phi)
}

/// Cancels the ledger phases with one Ramsey shift per atom, then fixes the
/// global phase.
pub fn ramsey_repair(state: &StateVector, min_index: usize, c_j: C64, ledger: &PhaseLedger) -> Result<StateVector> {
    check_single_excitation(state)?;
    let mut out = state.clone();
    for (site, &phi) in ledger.phases.iter().enumerate() {
        let total = if site == min_index { phi + c_j.arg() } else { phi };
        out = ramsey_phase(&out, site, -total)?;
    }
    Ok(normalize_global_phase(&out))
}

fn check_truncation(state: &StateVector, atom: usize, cavity: usize, cutoff: usize) -> Result<()> {
    let layout = state.layout();
    let weight: f64 = state
        .amps()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let occ = layout.occupation(*i);
            occ[atom] == 1 && occ[cavity] == cutoff
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if weight > TRUNCATION_TOL {
        return Err(Error::Truncation { cutoff });
    }
    Ok(())
}

/// Atoms and cavities after every planned interaction, before detection.
pub fn evolve_physical(
    spec: &AtomicWPrimeSpec,
    params: &JCParams,
    steps: &[CavityStepPlan],
    options: &RunOptions,
) -> Result<StateVector> {
    let n = spec.n();
    let mut state = with_ancillas(spec, SiteKind::Atom, params.fock_dim(), SiteKind::Cavity, options.max_dim)?;
    for slot in options.order(steps.len())? {
        let step = &steps[slot];
        let cavity = n + slot;
        check_truncation(&state, step.k, cavity, params.fock_cutoff)?;
        let u = jc_propagator_closed(params, step.delta_t)?;
        state = state.apply_local(&u, &[step.k, cavity])?;
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavityReport {
    pub distillation: DistillationReport,
    pub steps: Vec<CavityStepPlan>,
    pub params: JCParams,
    pub ledger: PhaseLedger,
}

pub fn run_physical(spec: &AtomicWPrimeSpec, params: &JCParams) -> Result<CavityReport> {
    run_physical_with(spec, params, &RunOptions::default())
}

pub fn run_physical_with(spec: &AtomicWPrimeSpec, params: &JCParams, options: &RunOptions) -> Result<CavityReport> {
    let (min_index, steps) = physical_plan(spec, params)?;
    let evolved = evolve_physical(spec, params, &steps, options)?;
    let ledger = phase_ledger(spec, min_index, &steps);
    let c_j = spec.coeffs()[min_index];
    let distillation = finish(spec, min_index, &evolved, true, |s| ramsey_repair(s, min_index, c_j, &ledger))?;
    Ok(CavityReport { distillation, steps, params: *params, ledger })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_hermitian, is_unitary, max_abs_diff, propagator, DenseMatrix};
    use core::f64::consts::PI;

    fn example_spec() -> AtomicWPrimeSpec {
        WPrimeSpec::from_real(&[0.5f64.sqrt(), 0.3f64.sqrt(), 0.2f64.sqrt()]).unwrap().into()
    }

    #[test]
    fn params_validation() {
        assert!(JCParams::resonant(5.0, 0.0, 1).is_err());
        assert!(JCParams::resonant(5.0, 1.0, 0).is_err());
        assert!(!JCParams::new(5.0, 5.1, 1.0, 1).unwrap().is_resonant());
    }

    #[test]
    fn decoupled_hamiltonian_is_bare_energies() {
        let p = JCParams { omega: 3.0, omega0: 2.0, epsilon: 0.0, fock_cutoff: 2 };
        let h = jc_hamiltonian(&p);
        let expect: Vec<C64> = [-1.0, 2.0, 5.0, 1.0, 4.0, 7.0].iter().map(|&x| C64::new(x, 0.0)).collect();
        assert_eq!(h, DenseMatrix::from_diagonal(&expect));
    }

    #[test]
    fn single_excitation_block() {
        let p = JCParams::resonant(5.0, 1.0, 1).unwrap();
        let h = jc_hamiltonian(&p);
        // {|e,0⟩, |g,1⟩} = indices {2, 1}
        assert_eq!(h[(2, 2)], C64::new(2.5, 0.0));
        assert_eq!(h[(1, 1)], C64::new(2.5, 0.0));
        assert_eq!(h[(1, 2)], C64::new(1.0, 0.0));
        assert_eq!(h[(0, 0)], C64::new(-2.5, 0.0));
        assert!(is_hermitian(&h, 1e-15).unwrap());
    }

    #[test]
    fn closed_form_basics() {
        let p = JCParams::resonant(5.0, 1.0, 1).unwrap();
        let u0 = jc_propagator_closed(&p, 0.0).unwrap();
        assert!(max_abs_diff(&u0, &DenseMatrix::identity(4)).unwrap() < 1e-15);
        let u = jc_propagator_closed(&p, PI / 2.0).unwrap();
        assert!((u[(1, 2)].norm() - 1.0).abs() < 1e-15);
        assert!(is_unitary(&u, 1e-12).unwrap());
        let off = JCParams::new(5.0, 6.0, 1.0, 1).unwrap();
        assert!(matches!(jc_propagator_closed(&off, 1.0), Err(Error::OffResonance { .. })));
    }

    #[test]
    fn closed_form_matches_exponential_with_higher_cutoff() {
        let p = JCParams::resonant(7.3, 0.8, 4).unwrap();
        for t in [0.1, 1.7, 5.2] {
            let closed = jc_propagator_closed(&p, t).unwrap();
            let oracle = propagator(&jc_hamiltonian(&p), t).unwrap();
            assert!(max_abs_diff(&closed, &oracle).unwrap() < 1e-10);
        }
    }

    #[test]
    fn interaction_times() {
        let spec = example_spec();
        let s = optimal_interaction_time(&spec, 0, 1.0).unwrap();
        assert!((s.delta_t - 0.4f64.sqrt().acos()).abs() < 1e-15);
        assert!((s.delta_t - 0.886_077_1).abs() < 1e-7);
        let s2 = optimal_interaction_time(&spec, 0, 2.0).unwrap();
        assert!((s2.delta_t * 2.0 - s.delta_t).abs() < 1e-15);
        assert_eq!(optimal_interaction_time(&spec, 2, 1.0).unwrap().delta_t, 0.0);
        assert!(optimal_interaction_time(&spec, 0, 0.0).is_err());
    }

    #[test]
    fn worked_example_physical() {
        let p = JCParams::resonant(50.0, 1.0, 1).unwrap();
        let r = run_physical(&example_spec(), &p).unwrap();
        assert!((r.distillation.success_probability_exact - 0.6).abs() < 1e-12);
        assert!((r.distillation.fidelity_with_w - 1.0).abs() < 1e-12);
        r.distillation.check_invariants().unwrap();
        assert_eq!(r.steps.len(), 2);
    }

    #[test]
    fn uniform_spec_needs_no_interaction() {
        let spec: AtomicWPrimeSpec = WPrimeSpec::uniform(4).unwrap().into();
        let r = run_physical(&spec, &JCParams::resonant(10.0, 1.0, 1).unwrap()).unwrap();
        assert!(r.steps.iter().all(|s| s.delta_t == 0.0));
        assert!((r.distillation.success_probability_exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ramsey_phase_periodic_and_restricted() {
        let w = crate::protocol::make_w_state(3).unwrap();
        assert_eq!(ramsey_phase(&w, 1, 0.0).unwrap(), w);
        let full = ramsey_phase(&w, 1, 2.0 * PI).unwrap();
        assert!(w.amps().iter().zip(full.amps()).all(|(a, b)| (a - b).norm() < 1e-15));

        let s = crate::statevec::StateVector::basis_state(
            crate::statevec::SubsystemLayout::qubits(2)
                .unwrap()
                .with_kinds(alloc::vec![SiteKind::Atom, SiteKind::Cavity])
                .unwrap(),
            &[0, 0],
        )
        .unwrap();
        assert!(matches!(ramsey_phase(&s, 1, 0.3), Err(Error::Validation(_))));
    }

    #[test]
    fn truncation_guard() {
        let layout = crate::statevec::SubsystemLayout::qubits(2)
            .unwrap()
            .with_kinds(alloc::vec![SiteKind::Atom, SiteKind::Cavity])
            .unwrap();
        let s = StateVector::basis_state(layout, &[1, 1]).unwrap();
        assert_eq!(check_truncation(&s, 0, 1, 1), Err(Error::Truncation { cutoff: 1 }));
    }
}
