//! Dense state vectors over a tensor product of sites with heterogeneous
//! local dimension.
//!
//! Flat indices are big-endian: site 0 is the most significant digit, so the
//! ket `|100⟩` on three qubits lives at flat index 4.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, C64};

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_MAX_DIM: usize = 1 << 20;

/// Normalization tolerance for externally supplied states.
pub const INGEST_NORM_TOL: f64 = 1e-9;

/// Normalization tolerance for states produced internally.
pub const INTERNAL_NORM_TOL: f64 = 1e-12;

/// What physically lives on a site. Only used for labelling and for
/// operations restricted to a particular kind of site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Generic,
    Particle,
    Ancilla,
    Atom,
    Cavity,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    kinds: Vec<SiteKind>,
    strides: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Validation("layout needs at least one site".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::Validation(format!("site dimension {d} is below 2")));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = match total.checked_mul(d) {
                Some(t) if t <= cap => t,
                _ => return Err(Error::TooLarge { dim: total.saturating_mul(d), cap }),
            };
        }
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let kinds = vec![SiteKind::Generic; dims.len()];
        Ok(Self { dims, kinds, strides, total })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn with_kinds(mut self, kinds: Vec<SiteKind>) -> Result<Self> {
        if kinds.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "{} site kinds for {} sites",
                kinds.len(),
                self.dims.len()
            )));
        }
        self.kinds = kinds;
        Ok(self)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, site: usize) -> usize {
        self.dims[site]
    }

    pub fn kind(&self, site: usize) -> SiteKind {
        self.kinds[site]
    }

    pub fn num_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    /// Human-readable site name, counting each kind from 1.
    pub fn label(&self, site: usize) -> String {
        let kind = self.kinds[site];
        let ordinal = self.kinds[..=site].iter().filter(|&&k| k == kind).count();
        let prefix = match kind {
            SiteKind::Generic => "q",
            SiteKind::Particle => "p",
            SiteKind::Ancilla => "a",
            SiteKind::Atom => "atom",
            SiteKind::Cavity => "cav",
        };
        format!("{prefix}{ordinal}")
    }

    pub fn flat_index(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.dims.len() {
            return Err(Error::Shape(format!(
                "occupation has {} entries for {} sites",
                occupation.len(),
                self.dims.len()
            )));
        }
        let mut idx = 0;
        for (site, (&o, &d)) in occupation.iter().zip(&self.dims).enumerate() {
            if o >= d {
                return Err(Error::Index(format!("occupation {o} at site {site} exceeds dimension {d}")));
            }
            idx += o * self.strides[site];
        }
        Ok(idx)
    }

    pub fn occupation(&self, flat: usize) -> Vec<usize> {
        self.dims.iter().zip(&self.strides).map(|(&d, &s)| (flat / s) % d).collect()
    }

    #[inline]
    fn digit(&self, flat: usize, site: usize) -> usize {
        (flat / self.strides[site]) % self.dims[site]
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.dims.len() {
            return Err(Error::Index(format!("site {site} out of range for {} sites", self.dims.len())));
        }
        Ok(())
    }

    fn without_site(&self, site: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        let mut kinds = self.kinds.clone();
        dims.remove(site);
        kinds.remove(site);
        Self::with_cap(dims, usize::MAX)?.with_kinds(kinds)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    layout: SubsystemLayout,
    amps: Vec<C64>,
}

/// Post-measurement state. A zero-probability outcome yields `Null` rather
/// than a zero vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Collapsed {
    State(StateVector),
    Null,
}

impl Collapsed {
    pub fn state(&self) -> Option<&StateVector> {
        match self {
            Collapsed::State(s) => Some(s),
            Collapsed::Null => None,
        }
    }

    pub fn into_state(self) -> Option<StateVector> {
        match self {
            Collapsed::State(s) => Some(s),
            Collapsed::Null => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub probability: f64,
    pub collapsed: Collapsed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub outcome: usize,
    pub probability: f64,
    pub collapsed: Collapsed,
}

/// Uniform draw in `[0, 1)` from the top 53 bits of one `u64`.
#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl StateVector {
    pub fn from_amplitudes(layout: SubsystemLayout, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a layout of dimension {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("amplitudes must be finite".into()));
        }
        Ok(Self { layout, amps })
    }

    /// Like [`from_amplitudes`](Self::from_amplitudes) but also requires unit norm.
    pub fn normalized_from(layout: SubsystemLayout, amps: Vec<C64>) -> Result<Self> {
        let s = Self::from_amplitudes(layout, amps)?;
        if !s.is_normalized(INGEST_NORM_TOL) {
            return Err(Error::Validation(format!("state norm squared is {}", s.norm_sqr())));
        }
        Ok(s)
    }

    pub fn basis_state(layout: SubsystemLayout, occupation: &[usize]) -> Result<Self> {
        let idx = layout.flat_index(occupation)?;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, occupation: &[usize]) -> Result<C64> {
        Ok(self.amps[self.layout.flat_index(occupation)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { layout: self.layout.clone(), amps: self.amps.iter().map(|z| z * s).collect() }
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = libm::sqrt(self.norm_sqr());
        if n == 0.0 {
            return Err(Error::Validation("cannot normalize the zero vector".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// Applies `op` to the listed sites (in that order, first listed site most
    /// significant in `op`'s basis) and the identity elsewhere.
    pub fn apply_local(&self, op: &DenseMatrix, sites: &[usize]) -> Result<Self> {
        for &s in sites {
            self.layout.check_site(s)?;
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::Validation(format!("site {s} listed twice")));
            }
        }
        let local_dim: usize = sites.iter().map(|&s| self.layout.dim(s)).product();
        if !op.is_square() || op.rows() != local_dim {
            return Err(Error::Shape(format!(
                "operator is {}x{} but the sites span dimension {local_dim}",
                op.rows(),
                op.cols()
            )));
        }

        // Flat offset of each local basis index relative to the block base.
        let offsets: Vec<usize> = (0..local_dim)
            .map(|mut l| {
                let mut off = 0;
                for &s in sites.iter().rev() {
                    let d = self.layout.dim(s);
                    off += (l % d) * self.layout.strides[s];
                    l /= d;
                }
                off
            })
            .collect();

        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut gathered = vec![C64::new(0.0, 0.0); local_dim];
        let entries = op.as_slice();
        for base in 0..self.amps.len() {
            if sites.iter().any(|&s| self.layout.digit(base, s) != 0) {
                continue;
            }
            for (g, &off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amps[base + off];
            }
            for (r, &off) in offsets.iter().enumerate() {
                let row = &entries[r * local_dim..(r + 1) * local_dim];
                out[base + off] = row.iter().zip(&gathered).map(|(a, b)| a * b).sum();
            }
        }
        Ok(Self { layout: self.layout.clone(), amps: out })
    }

    /// Born-rule probability of each outcome on `site`.
    pub fn site_probabilities(&self, site: usize) -> Result<Vec<f64>> {
        self.layout.check_site(site)?;
        let mut probs = vec![0.0; self.layout.dim(site)];
        for (i, z) in self.amps.iter().enumerate() {
            probs[self.layout.digit(i, site)] += z.norm_sqr();
        }
        Ok(probs)
    }

    pub fn project_site(&self, site: usize, outcome: usize) -> Result<Projection> {
        self.layout.check_site(site)?;
        if outcome >= self.layout.dim(site) {
            return Err(Error::Index(format!(
                "outcome {outcome} at site {site} of dimension {}",
                self.layout.dim(site)
            )));
        }
        let probability: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.layout.digit(*i, site) == outcome)
            .map(|(_, z)| z.norm_sqr())
            .sum();
        Ok(Projection { probability, collapsed: self.collapse(site, outcome, probability) })
    }

    fn collapse(&self, site: usize, outcome: usize, probability: f64) -> Collapsed {
        if !(probability > 0.0) {
            return Collapsed::Null;
        }
        let inv = 1.0 / libm::sqrt(probability);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &z)| if self.layout.digit(i, site) == outcome { z * inv } else { C64::new(0.0, 0.0) })
            .collect();
        Collapsed::State(Self { layout: self.layout.clone(), amps })
    }

    /// Draws one outcome on `site` with Born probabilities, consuming exactly
    /// one `u64` from `rng`.
    pub fn sample_site<R: RngCore + ?Sized>(&self, site: usize, rng: &mut R) -> Result<Sample> {
        let (outcome, probability) = self.draw(site, rng)?;
        Ok(Sample { outcome, probability, collapsed: self.collapse(site, outcome, probability) })
    }

    /// Outcome and its probability without building the collapsed state. The
    /// state need not be normalized; probabilities are taken relative to its
    /// norm.
    pub(crate) fn draw<R: RngCore + ?Sized>(&self, site: usize, rng: &mut R) -> Result<(usize, f64)> {
        let probs = self.site_probabilities(site)?;
        let total: f64 = probs.iter().sum();
        let u = uniform01(rng) * total;
        let mut acc = 0.0;
        let mut outcome = None;
        for (o, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = Some(o);
                break;
            }
        }
        // Rounding can leave u just past the last partial sum.
        let outcome = outcome
            .or_else(|| probs.iter().rposition(|&p| p > 0.0))
            .ok_or_else(|| Error::Validation("cannot sample from the zero vector".into()))?;
        Ok((outcome, probs[outcome] / total))
    }

    /// Restricts the state to `site = outcome` and removes that site from the
    /// layout. Amplitudes are not renormalized.
    pub fn slice_site(&self, site: usize, outcome: usize) -> Result<Self> {
        self.layout.check_site(site)?;
        if outcome >= self.layout.dim(site) {
            return Err(Error::Index(format!("outcome {outcome} at site {site}")));
        }
        let layout = self.layout.without_site(site)?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.layout.digit(*i, site) == outcome)
            .map(|(_, &z)| z)
            .collect();
        Ok(Self { layout, amps })
    }

    /// Product state `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector, cap: usize) -> Result<Self> {
        let mut dims = self.layout.dims.clone();
        dims.extend_from_slice(&other.layout.dims);
        let mut kinds = self.layout.kinds.clone();
        kinds.extend_from_slice(&other.layout.kinds);
        let layout = SubsystemLayout::with_cap(dims, cap)?.with_kinds(kinds)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Ok(Self { layout, amps })
    }
}

/// `⟨x|y⟩`, conjugating `x`.
pub fn inner_product(x: &StateVector, y: &StateVector) -> Result<C64> {
    if x.layout.dims != y.layout.dims {
        return Err(Error::Shape("inner product of states with different layouts".into()));
    }
    Ok(x.amps.iter().zip(&y.amps).map(|(a, b)| a.conj() * b).sum())
}

/// `|⟨x|y⟩|²`.
pub fn fidelity(x: &StateVector, y: &StateVector) -> Result<f64> {
    Ok(inner_product(x, y)?.norm_sqr())
}

/// One fully resolved measurement record from [`enumerate_branches`].
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub pattern: Vec<usize>,
    pub probability: f64,
    /// State of the unmeasured sites, `None` for zero-probability branches.
    pub remainder: Option<StateVector>,
}

/// Measures `count` consecutive sites starting at `first` in order and lists
/// every outcome pattern with its probability. Measured sites are removed
/// from the remainder. With `prune_null`, zero-probability subtrees are
/// dropped instead of listed.
pub fn enumerate_branches(
    state: &StateVector,
    first: usize,
    count: usize,
    prune_null: bool,
) -> Result<Vec<Branch>> {
    if first + count > state.layout.num_sites() {
        return Err(Error::Index(format!(
            "sites {first}..{} out of range for {} sites",
            first + count,
            state.layout.num_sites()
        )));
    }
    let dims: Vec<usize> = state.layout.dims[first..first + count].to_vec();
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(count);
    walk(Some(state.clone()), 1.0, first, &dims, prune_null, &mut prefix, &mut out)?;
    Ok(out)
}

fn walk(
    state: Option<StateVector>,
    probability: f64,
    site: usize,
    dims: &[usize],
    prune_null: bool,
    prefix: &mut Vec<usize>,
    out: &mut Vec<Branch>,
) -> Result<()> {
    if state.is_none() && prune_null {
        return Ok(());
    }
    let depth = prefix.len();
    if depth == dims.len() {
        out.push(Branch { pattern: prefix.clone(), probability, remainder: state });
        return Ok(());
    }
    for outcome in 0..dims[depth] {
        let (p, next) = match &state {
            Some(s) => {
                let proj = s.project_site(site, outcome)?;
                let next = match proj.collapsed {
                    Collapsed::State(c) => Some(c.slice_site(site, outcome)?),
                    Collapsed::Null => None,
                };
                (probability * proj.probability, next)
            }
            None => (0.0, None),
        };
        prefix.push(outcome);
        walk(next, p, site, dims, prune_null, prefix, out)?;
        prefix.pop();
    }
    Ok(())
}
