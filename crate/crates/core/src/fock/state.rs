use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{HyrepError, Result};

/// Default tolerance on the probability weight sitting at the top Fock level.
pub const DEFAULT_LEAK_TOL: f64 = 1e-10;

/// A multimode pure state in a truncated Fock basis.
///
/// Amplitudes are stored row-major with mode 0 as the slowest index. Every mode
/// has its own dimension (`cutoff + 1`); most constructors use a uniform cutoff.
/// The state may be unnormalized, e.g. after a homodyne projection.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(HyrepError::ShapeMismatch("zero-sized mode".into()));
        }
        let len: usize = dims.iter().product();
        if len != amps.len() {
            return Err(HyrepError::ShapeMismatch(format!(
                "dims {:?} need {} amplitudes, got {}",
                dims,
                len,
                amps.len()
            )));
        }
        Ok(Self { dims, amps })
    }

    /// Single-mode state from a coefficient vector.
    pub fn single_mode(amps: Vec<C64>) -> Self {
        Self { dims: vec![amps.len()], amps }
    }

    pub fn vacuum(nmodes: usize, cutoff: usize) -> Self {
        Self::fock(&vec![cutoff + 1; nmodes], &vec![0; nmodes])
    }

    /// Number state `|n_0, n_1, ...⟩`. Panics if an occupation exceeds its mode dimension.
    pub fn fock(dims: &[usize], occupations: &[usize]) -> Self {
        assert_eq!(dims.len(), occupations.len());
        let mut amps = vec![C64::new(0.0, 0.0); dims.iter().product()];
        let idx = flat_index(dims, occupations);
        amps[idx] = C64::new(1.0, 0.0);
        Self { dims: dims.to_vec(), amps }
    }

    pub fn nmodes(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Largest per-mode photon number representable.
    pub fn cutoff(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1) - 1
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        self.amps[flat_index(&self.dims, occupations)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(HyrepError::ZeroNorm);
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(())
    }

    pub fn scale(&mut self, factor: C64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub(crate) fn check_same_shape(&self, other: &PureState) -> Result<()> {
        if self.dims != other.dims {
            return Err(HyrepError::ShapeMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.nmodes() {
            return Err(HyrepError::InvalidMode { mode, nmodes: self.nmodes() });
        }
        Ok(())
    }

    /// Tensor product `self ⊗ other`; modes of `other` are appended.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState { dims, amps }
    }

    pub fn product(states: &[PureState]) -> PureState {
        let mut iter = states.iter();
        let first = iter.next().expect("empty product").clone();
        iter.fold(first, |acc, s| acc.tensor(s))
    }

    /// Copy into new per-mode dimensions, truncating or zero-padding each mode.
    /// No renormalization is applied.
    pub fn resized(&self, dims: &[usize]) -> Result<PureState> {
        if dims.len() != self.nmodes() {
            return Err(HyrepError::ShapeMismatch(format!(
                "cannot resize {}-mode state to {} modes",
                self.nmodes(),
                dims.len()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); dims.iter().product()];
        let mut occ = vec![0usize; self.nmodes()];
        for (i, a) in self.amps.iter().enumerate() {
            unflatten(&self.dims, i, &mut occ);
            if occ.iter().zip(dims).all(|(n, d)| n < d) {
                out[flat_index(dims, &occ)] = *a;
            }
        }
        Ok(PureState { dims: dims.to_vec(), amps: out })
    }

    /// Largest probability weight found at the top Fock level of any mode.
    pub fn top_level_weight(&self) -> f64 {
        let mut occ = vec![0usize; self.nmodes()];
        let mut worst = vec![0.0f64; self.nmodes()];
        for (i, a) in self.amps.iter().enumerate() {
            unflatten(&self.dims, i, &mut occ);
            for (m, (&n, &d)) in occ.iter().zip(&self.dims).enumerate() {
                if n + 1 == d && d > 1 {
                    worst[m] += a.norm_sqr();
                }
            }
        }
        worst.into_iter().fold(0.0, f64::max)
    }

    /// Probability distribution of the photon number in one mode.
    pub fn photon_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        let (outer, d, inner) = axis_split(&self.dims, mode);
        let mut probs = vec![0.0; d];
        for o in 0..outer {
            for (k, p) in probs.iter_mut().enumerate() {
                let base = (o * d + k) * inner;
                *p += self.amps[base..base + inner].iter().map(|a| a.norm_sqr()).sum::<f64>();
            }
        }
        Ok(probs)
    }

    pub fn mean_photon_number(&self, mode: usize) -> Result<f64> {
        let probs = self.photon_distribution(mode)?;
        let total: f64 = probs.iter().sum();
        Ok(probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total)
    }

    /// Weight on states whose total photon number has the given parity.
    pub fn parity_weight(&self, odd: bool) -> f64 {
        let mut occ = vec![0usize; self.nmodes()];
        let mut w = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            unflatten(&self.dims, i, &mut occ);
            if (occ.iter().sum::<usize>() % 2 == 1) == odd {
                w += a.norm_sqr();
            }
        }
        w
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&StateDump::from(self)).expect("state dump serializes")
    }
}

/// JSON debug dump of a [`PureState`].
#[derive(Debug, Serialize, Deserialize)]
pub struct StateDump {
    pub nmodes: usize,
    pub cutoff: usize,
    pub dims: Vec<usize>,
    pub amplitudes: Vec<[f64; 2]>,
}

impl From<&PureState> for StateDump {
    fn from(s: &PureState) -> Self {
        StateDump {
            nmodes: s.nmodes(),
            cutoff: s.cutoff(),
            dims: s.dims.clone(),
            amplitudes: s.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
    }
}

impl TryFrom<StateDump> for PureState {
    type Error = HyrepError;

    fn try_from(d: StateDump) -> Result<Self> {
        PureState::from_amplitudes(
            d.dims,
            d.amplitudes.into_iter().map(|[re, im]| C64::new(re, im)).collect(),
        )
    }
}

/// Incoherent mixture stored as explicit weighted pure branches.
#[derive(Clone, Debug, Default)]
pub struct BranchEnsemble {
    branches: Vec<(f64, PureState)>,
}

impl BranchEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a branch; the state is normalized and its squared norm folded into the weight.
    pub fn push(&mut self, weight: f64, state: PureState) -> Result<()> {
        if weight < 0.0 || !weight.is_finite() {
            return Err(crate::error::invalid("weight", format!("{weight} is not a valid weight")));
        }
        if let Some((_, first)) = self.branches.first() {
            first.check_same_shape(&state)?;
        }
        let n2 = state.norm_sqr();
        if n2 == 0.0 {
            return Ok(());
        }
        let state = state.normalized()?;
        self.branches.push((weight * n2, state));
        Ok(())
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }

    pub fn renormalize(&mut self) -> Result<()> {
        let total = self.total_weight();
        if !(total > 0.0) {
            return Err(HyrepError::ZeroNorm);
        }
        self.branches.iter_mut().for_each(|(w, _)| *w /= total);
        Ok(())
    }

    /// Applies `f` to every branch state.
    pub fn map_states(&self, mut f: impl FnMut(&PureState) -> Result<PureState>) -> Result<Self> {
        let branches = self
            .branches
            .iter()
            .map(|(w, s)| Ok((*w, f(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { branches })
    }

    /// Picks a branch with probability proportional to its weight; `u` is uniform on [0,1).
    pub fn pick(&self, u: f64) -> &PureState {
        let total = self.total_weight();
        let mut acc = 0.0;
        for (w, s) in &self.branches {
            acc += w / total;
            if u < acc {
                return s;
            }
        }
        &self.branches.last().expect("empty ensemble").1
    }
}

pub(crate) fn flat_index(dims: &[usize], occ: &[usize]) -> usize {
    occ.iter().zip(dims).fold(0, |acc, (&n, &d)| {
        debug_assert!(n < d);
        acc * d + n
    })
}

pub(crate) fn unflatten(dims: &[usize], mut idx: usize, occ: &mut [usize]) {
    for (o, &d) in occ.iter_mut().zip(dims).rev() {
        *o = idx % d;
        idx /= d;
    }
}

/// Splits the flat layout around `axis` into (outer, dim, inner) block sizes.
pub(crate) fn axis_split(dims: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = dims[..axis].iter().product();
    let inner = dims[axis + 1..].iter().product();
    (outer, dims[axis], inner)
}
