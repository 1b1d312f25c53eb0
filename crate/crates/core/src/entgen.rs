//! Heralded entanglement between the two memories of one segment.
//!
//! Each end holds a two-mode squeezed source `Σ √((1−p)pⁿ) |n⟩_mem |n⟩_ph`.
//! The photonic modes travel `L0/2` to a central balanced beam splitter
//! followed by two threshold detectors; success means exactly one click.
//! Fiber and detector losses act as one binomial loss channel per arm, so the
//! post-click memory state is an explicit mixture over lost-photon counts and
//! the number of photons in the clicking detector.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HyrepError, Result};
use crate::fock::{ops::beamsplitter_element, BranchEnsemble, PureState};

/// Maximum weight allowed beyond the per-source truncation.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Speed of light in fiber, km/s.
pub const FIBER_LIGHT_SPEED_KMS: f64 = 2.0e5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Pair-production probability.
    pub p: f64,
    /// Detector efficiency; also absorbs memory readout losses.
    pub eta_d: f64,
    pub l0_km: f64,
    pub latt_km: f64,
    pub c_kms: f64,
}

impl SourceParams {
    pub fn new(p: f64, eta_d: f64, l0_km: f64, latt_km: f64) -> Self {
        Self { p, eta_d, l0_km, latt_km, c_kms: FIBER_LIGHT_SPEED_KMS }
    }

    /// Fiber transmission of one arm, `exp(−(L0/2)/Latt)`.
    pub fn eta_t(&self) -> f64 {
        (-(self.l0_km / 2.0) / self.latt_km).exp()
    }

    /// Combined per-arm detection efficiency.
    pub fn eta(&self) -> f64 {
        self.eta_t() * self.eta_d
    }

    /// Classical communication time `L0/c` that sets the attempt period.
    pub fn attempt_time_s(&self) -> f64 {
        self.l0_km / self.c_kms
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(invalid("p", format!("must lie in (0,1), got {}", self.p)));
        }
        if !(self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return Err(invalid("eta_d", format!("must lie in (0,1], got {}", self.eta_d)));
        }
        if !(self.l0_km >= 0.0 && self.l0_km.is_finite()) {
            return Err(invalid("l0_km", format!("must be ≥ 0, got {}", self.l0_km)));
        }
        if !(self.latt_km > 0.0) {
            return Err(invalid("latt_km", format!("must be > 0, got {}", self.latt_km)));
        }
        if !(self.c_kms > 0.0) {
            return Err(invalid("c_kms", format!("must be > 0, got {}", self.c_kms)));
        }
        Ok(())
    }
}

/// How the central station decides that an attempt succeeded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Detection {
    /// Threshold detectors; exactly one of them clicks.
    #[default]
    SingleClick,
    /// Number-resolving detectors; exactly one photon in total.
    SinglePhoton,
}

#[derive(Clone, Debug)]
pub struct HeraldedOutcome {
    /// Post-click memory state on modes (a, b), canonicalized to the first detector.
    pub state: BranchEnsemble,
    /// Success probability per attempt (both click patterns accepted).
    pub p_succ: f64,
    pub attempt_time_s: f64,
}

/// Smallest truncation keeping the discarded source weight below [`TRUNCATION_TOL`].
pub fn default_truncation(p: f64) -> usize {
    let mut t = 3;
    while p.powi(t as i32 + 1) >= TRUNCATION_TOL && t < 64 {
        t += 1;
    }
    t
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn heralded_state(params: &SourceParams, truncation: usize) -> Result<HeraldedOutcome> {
    heralded_state_with(params, truncation, Detection::SingleClick)
}

pub fn heralded_state_with(params: &SourceParams, truncation: usize, detection: Detection) -> Result<HeraldedOutcome> {
    params.validate()?;
    let p = params.p;
    let discarded = p.powi(truncation as i32 + 1);
    if discarded >= TRUNCATION_TOL {
        return Err(HyrepError::TruncationTooSmall { truncation, p, discarded });
    }
    let eta = params.eta();
    let t = truncation;
    let source: Vec<f64> = (0..=t).map(|n| ((1.0 - p) * p.powi(n as i32)).sqrt()).collect();
    // loss[n][l]: amplitude for losing l of n photons
    let loss: Vec<Vec<f64>> = (0..=t)
        .map(|n| {
            (0..=n)
                .map(|l| (binomial(n, l) * eta.powi((n - l) as i32) * (1.0 - eta).powi(l as i32)).sqrt())
                .collect()
        })
        .collect();

    let dims = [t + 1, t + 1];
    let mut ensemble = BranchEnsemble::new();
    let mut p_first = 0.0;
    let max_clicks = if detection == Detection::SinglePhoton { 1 } else { 2 * t };
    for l1 in 0..=t {
        for l2 in 0..=t {
            for j in 1..=max_clicks {
                let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); dims[0] * dims[1]];
                let mut any = false;
                for n1 in l1..=t {
                    let r1 = n1 - l1;
                    if r1 > j {
                        break;
                    }
                    let r2 = j - r1;
                    let n2 = r2 + l2;
                    if n2 > t {
                        continue;
                    }
                    let amp = source[n1] * source[n2] * loss[n1][l1] * loss[n2][l2] * beamsplitter_element(j, j, r1);
                    amps[n1 * dims[1] + n2] = amp.into();
                    any = true;
                }
                if !any {
                    continue;
                }
                let branch = PureState::from_amplitudes(dims.to_vec(), amps)?;
                let w = branch.norm_sqr();
                if w == 0.0 {
                    continue;
                }
                p_first += w;
                ensemble.push(1.0, branch)?;
            }
        }
    }
    if !(p_first > 0.0) {
        return Err(HyrepError::ZeroNorm);
    }
    ensemble.renormalize()?;
    Ok(HeraldedOutcome { state: ensemble, p_succ: 2.0 * p_first, attempt_time_s: params.attempt_time_s() })
}

/// Heralded-state weight outside the single-excitation subspace.
pub fn multi_excitation_weight(params: &SourceParams) -> Result<f64> {
    if params.p == 0.0 {
        return Ok(0.0);
    }
    let out = heralded_state(params, default_truncation(params.p))?;
    let mut w = 0.0;
    for (bw, s) in out.state.branches() {
        let d1 = s.dims()[1];
        let mut single = 0.0;
        for (idx, a) in s.amplitudes().iter().enumerate() {
            if idx / d1 + idx % d1 == 1 {
                single += a.norm_sqr();
            }
        }
        w += bw * (1.0 - single);
    }
    Ok(w.max(0.0))
}
