//! Homodyne-conditioned breeding of squeezed cat states.
//!
//! Two copies are mixed on a balanced beam splitter and the X quadrature of
//! one output is measured; the other output is kept when the outcome falls in
//! `[−Δ, Δ]`. Starting from single photons, `m` rounds in the limit `Δ → 0`
//! give the wavefunction `e^{−x²/2} x^{2^m}`, close to `Ŝ(2)|cat(μ_m)⟩` with
//! `μ_m = √(2^m + 1/2)`.
//!
//! The two-mode variant runs on Bell-like pairs. Both rails are mixed with
//! their partner copy and measured; acceptance looks only at the symmetric
//! combination of the two outcomes. Working directly in the symmetric and
//! antisymmetric modes `(S, D)` makes this the single-mode scheme on `S` with
//! an unconditioned measurement on `D`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HyrepError, Result};
use crate::fock::{
    apply_beamsplitter, apply_squeeze, cat_single, condition, required_cutoff, Conditioning, PureState, Quadrature,
};
use crate::mc::{jackknife, run_trials};

/// Fock cap of the antisymmetric rail during two-mode breeding.
pub const DUAL_D_CUTOFF: usize = 4;

/// Unsqueezed cat amplitude approximated after `m` rounds.
pub fn mu(m: usize) -> f64 {
    (2f64.powi(m as i32) + 0.5).sqrt()
}

/// Smallest cutoff accepted by [`ideal_psi`].
pub fn ideal_cutoff(m: usize) -> usize {
    let n = 2f64.powi(m as i32);
    (n + 6.0 * n.sqrt() + 10.0).ceil() as usize
}

/// Smallest cutoff accepted by [`target_state`].
pub fn target_cutoff(m: usize) -> usize {
    required_cutoff(mu(m))
}

/// Fock rendering of the normalized `e^{−x²/2} x^{2^m}`.
pub fn ideal_psi(m: usize, cutoff: usize) -> Result<PureState> {
    let required = ideal_cutoff(m);
    if cutoff < required {
        return Err(HyrepError::InsufficientCutoff { required, given: cutoff });
    }
    // x̂ = (a + a†)/√2 applied 2^m times to the vacuum; exact while 2^m ≤ cutoff
    let dim = cutoff + 1;
    let mut v = vec![0.0f64; dim];
    v[0] = 1.0;
    for _ in 0..(1usize << m) {
        let mut next = vec![0.0; dim];
        for n in 0..dim {
            if v[n] == 0.0 {
                continue;
            }
            if n + 1 < dim {
                next[n + 1] += v[n] * ((n + 1) as f64 / 2.0).sqrt();
            }
            if n > 0 {
                next[n - 1] += v[n] * (n as f64 / 2.0).sqrt();
            }
        }
        let scale = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = next.into_iter().map(|x| x / scale).collect();
    }
    PureState::single_mode(v.into_iter().map(Into::into).collect()).normalized()
}

/// `Ŝ(2)|cat(μ_m)⟩`.
pub fn target_state(m: usize, cutoff: usize) -> Result<PureState> {
    let cat = cat_single(mu(m), cutoff)?;
    apply_squeeze(&cat, 0, 2.0)?.normalized()
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub accepted: bool,
    /// Normalized conditional state.
    pub state: PureState,
    /// Outcome that decides acceptance.
    pub outcome: f64,
    /// Weight of the outcome under the chosen [`Conditioning`].
    pub weight: f64,
}

/// One single-mode breeding step. The output keeps every photon, so no
/// truncation occurs: its cutoff is the sum of the input cutoffs.
pub fn breed_step(a: &PureState, b: &PureState, delta: f64, how: Conditioning<'_>) -> Result<StepOutcome> {
    breed_step_capped(a, b, delta, how, usize::MAX)
}

pub(crate) fn breed_step_capped(
    a: &PureState,
    b: &PureState,
    delta: f64,
    how: Conditioning<'_>,
    cap: usize,
) -> Result<StepOutcome> {
    check_delta(delta)?;
    if a.nmodes() != 1 || b.nmodes() != 1 {
        return Err(HyrepError::ShapeMismatch("single-mode breeding needs single-mode inputs".into()));
    }
    let n = (a.cutoff() + b.cutoff()).min(cap);
    let joint = a.resized(&[n + 1])?.tensor(&b.resized(&[n + 1])?);
    let mixed = apply_beamsplitter(&joint, 0, 1)?;
    let c = condition(&mixed, 1, Quadrature::X, (-delta, delta), how)?;
    Ok(StepOutcome { accepted: c.accepted, state: c.state, outcome: c.outcome, weight: c.weight })
}

/// One two-mode breeding step on states held in the `(S, D)` rail basis.
///
/// `cap_s` bounds the symmetric rail; the antisymmetric rail is held at
/// [`DUAL_D_CUTOFF`]. The antisymmetric outcome is drawn from its full
/// marginal, or forced to zero under [`Conditioning::Forced`].
pub fn breed_step_dual(
    a: &PureState,
    b: &PureState,
    delta: f64,
    how: Conditioning<'_>,
    cap_s: usize,
) -> Result<StepOutcome> {
    check_delta(delta)?;
    if a.nmodes() != 2 || b.nmodes() != 2 {
        return Err(HyrepError::ShapeMismatch("two-mode breeding needs (S, D) inputs".into()));
    }
    let ns = (a.dims()[0] + b.dims()[0] - 2).min(cap_s);
    let nd = (a.dims()[1] + b.dims()[1] - 2).min(DUAL_D_CUTOFF);
    let dims = [ns + 1, nd + 1];
    // modes: S, D, S', D'
    let joint = a.resized(&dims)?.tensor(&b.resized(&dims)?);
    let mixed = apply_beamsplitter(&apply_beamsplitter(&joint, 0, 2)?, 1, 3)?;
    let full = (f64::NEG_INFINITY, f64::INFINITY);
    let (s, d) = match how {
        Conditioning::Forced(x) => {
            let s = condition(&mixed, 2, Quadrature::X, (-delta, delta), Conditioning::Forced(x))?;
            let d = condition(&s.state, 2, Quadrature::X, full, Conditioning::Forced(0.0))?;
            (s, d)
        }
        Conditioning::Sampled(rng) => {
            let s = condition(&mixed, 2, Quadrature::X, (-delta, delta), Conditioning::Sampled(&mut *rng))?;
            let d = condition(&s.state, 2, Quadrature::X, full, Conditioning::Sampled(rng))?;
            (s, d)
        }
        Conditioning::Windowed(rng) => {
            let s = condition(&mixed, 2, Quadrature::X, (-delta, delta), Conditioning::Windowed(&mut *rng))?;
            let d = condition(&s.state, 2, Quadrature::X, full, Conditioning::Sampled(rng))?;
            (s, d)
        }
    };
    Ok(StepOutcome { accepted: s.accepted, state: d.state, outcome: s.outcome, weight: s.weight })
}

/// Rotates a two-mode state between the local `(a, b)` and rail `(S, D)` bases.
///
/// The balanced beam splitter is its own inverse, so the same map works both
/// ways. Output modes are cropped to `cutoff` and renormalized.
pub fn rotate_rails(state: &PureState, cutoff: usize) -> Result<PureState> {
    if state.nmodes() != 2 {
        return Err(HyrepError::ShapeMismatch("rail rotation needs a two-mode state".into()));
    }
    rotate_rails_raw(state)?.resized(&[cutoff + 1, cutoff + 1])?.normalized()
}

/// Exact rail rotation: both output modes are sized to hold every photon.
pub(crate) fn rotate_rails_raw(state: &PureState) -> Result<PureState> {
    let n = state.dims()[0] + state.dims()[1] - 2;
    apply_beamsplitter(&state.resized(&[n + 1, n + 1])?, 0, 1)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid("delta", format!("must be ≥ 0, got {delta}")));
    }
    Ok(())
}

/// Per-trial record of a breeding tree.
#[derive(Clone, Debug)]
pub(crate) struct TreeRecord {
    /// Sum of node weights per level, level 1 first.
    pub level_sums: Vec<f64>,
}

/// Grows a full binary tree of `levels` merges.
///
/// Returns the root state and its weight, the product of every node's
/// conditioning weight. A merge whose conditional state vanishes yields
/// weight 0 and keeps a placeholder state.
pub(crate) fn grow_tree<S: Clone, R: RngCore + ?Sized>(
    levels: usize,
    rng: &mut R,
    leaf: &mut dyn FnMut(&mut R) -> Result<S>,
    merge: &mut dyn FnMut(usize, &S, &S, &mut R) -> Result<(S, f64)>,
    rec: &mut TreeRecord,
) -> Result<(S, f64)> {
    if levels == 0 {
        return Ok((leaf(rng)?, 1.0));
    }
    let (a, wa) = grow_tree(levels - 1, rng, leaf, merge, rec)?;
    let (b, wb) = grow_tree(levels - 1, rng, leaf, merge, rec)?;
    let (out, w) = if wa * wb == 0.0 {
        (a, 0.0)
    } else {
        match merge(levels, &a, &b, rng) {
            Ok((s, q)) => (s, wa * wb * q),
            Err(HyrepError::ZeroNorm) => (a, 0.0),
            Err(e) => return Err(e),
        }
    };
    rec.level_sums[levels - 1] += w;
    Ok((out, w))
}

/// Per-level acceptance probabilities from mean node weights `E_i`:
/// `P_1 = E_1`, `P_i = E_i / E_{i−1}²`.
pub(crate) fn level_probs(mean_node_weights: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mean_node_weights.len());
    for (i, &e) in mean_node_weights.iter().enumerate() {
        let p = if i == 0 { e } else { e / mean_node_weights[i - 1].powi(2) };
        out.push(if p.is_finite() { p } else { 0.0 });
    }
    out
}

/// Output rate with memories: each level consumes two inputs per attempt,
/// fed by `2^m` sources in parallel, so the throughput is `Π P_i` per period.
pub fn rate_with_memory(level_probs: &[f64]) -> f64 {
    level_probs.iter().product()
}

/// Output rate without memories: all `2^{m−i}` merges of level `i` must
/// succeed in the same period.
pub fn rate_without_memory(level_probs: &[f64]) -> f64 {
    let m = level_probs.len();
    level_probs.iter().enumerate().map(|(i, p)| p.powi(1 << (m - 1 - i))).product()
}

/// Rate from the pairing-of-geometrics rule `T_{i+1} = (3/2) T_i / P_i`.
pub fn rate_pairing_rule(level_probs: &[f64]) -> f64 {
    level_probs.iter().map(|p| p / 1.5).product()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreedParams {
    pub m: usize,
    /// Acceptance half-width; 0 forces every outcome to exactly 0.
    pub delta: f64,
    /// Probability that a source emits two photons instead of one.
    pub contamination: f64,
    pub trials: usize,
    /// Whether intermediate states are stored, which sets the rate model.
    pub memory: bool,
}

impl BreedParams {
    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        if !(0.0..1.0).contains(&self.contamination) {
            return Err(invalid("contamination", format!("must lie in [0,1), got {}", self.contamination)));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be ≥ 1"));
        }
        if self.m > 6 {
            return Err(invalid("m", format!("at most 6 breeding rounds supported, got {}", self.m)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub mean_fidelity: f64,
    pub fidelity_se: f64,
    pub level_success_probs: Vec<f64>,
    /// Rate per source repetition period under the chosen memory model.
    pub rate: f64,
    pub rate_se: f64,
    /// Rate under the pairing rule, reported for comparison.
    pub rate_pairing: f64,
    pub samples: usize,
}

/// Monte Carlo of single-mode breeding against [`target_state`].
///
/// Every merge draws its outcome inside the window and carries the window
/// probability as an importance weight, so no trial is wasted.
pub fn run_generation(params: &BreedParams, seed: u64, workers: usize) -> Result<GenStats> {
    params.validate()?;
    let m = params.m;
    let tc = target_cutoff(m).max(2usize << m);
    let target = target_state(m, tc)?;
    let forced = params.delta == 0.0;
    let rows = run_trials(seed, params.trials, workers, |_, rng| {
        let mut rec = TreeRecord { level_sums: vec![0.0; m] };
        let one = PureState::fock(&[2], &[1]);
        let two = PureState::fock(&[3], &[2]);
        let mut leaf = |r: &mut rand_chacha::ChaCha8Rng| -> Result<PureState> {
            Ok(if r.random::<f64>() < params.contamination { two.clone() } else { one.clone() })
        };
        let mut merge = |_: usize, a: &PureState, b: &PureState, r: &mut rand_chacha::ChaCha8Rng| {
            let how = if forced { Conditioning::Forced(0.0) } else { Conditioning::Windowed(r) };
            let o = breed_step(a, b, params.delta, how)?;
            Ok((o.state, o.weight))
        };
        let (state, w) = grow_tree(m, rng, &mut leaf, &mut merge, &mut rec)?;
        let f = if w > 0.0 { target.inner(&state.resized(&[tc + 1])?)?.norm_sqr() } else { 0.0 };
        let mut row = rec.level_sums;
        row.push(w);
        row.push(w * f);
        Ok(row)
    })?;
    summarize(&rows, m, forced, params.memory)
}

fn summarize(rows: &[Vec<f64>], m: usize, forced: bool, memory: bool) -> Result<GenStats> {
    let node_mean = move |v: &[f64], i: usize| v[i] / (1usize << (m - 1 - i)) as f64;
    let probs_of = move |v: &[f64]| level_probs(&(0..m).map(|i| node_mean(v, i)).collect::<Vec<_>>());
    let (mean_fidelity, fidelity_se) = jackknife(rows, |v| v[m + 1] / v[m]);
    if !mean_fidelity.is_finite() {
        return Err(HyrepError::ZeroNorm);
    }
    let means: Vec<f64> = {
        let n = rows.len() as f64;
        (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
    };
    let (level_success_probs, rate, rate_se, rate_pairing) = if forced {
        // zero-width window: every acceptance probability vanishes
        (vec![0.0; m], 0.0, 0.0, 0.0)
    } else {
        let probs = probs_of(&means);
        let model = |p: &[f64]| if memory { rate_with_memory(p) } else { rate_without_memory(p) };
        let (rate, rate_se) = jackknife(rows, |v| model(&probs_of(v)));
        let pairing = rate_pairing_rule(&probs);
        (probs, rate, rate_se, pairing)
    };
    Ok(GenStats {
        mean_fidelity,
        fidelity_se: if fidelity_se.is_finite() { fidelity_se } else { 0.0 },
        level_success_probs,
        rate,
        rate_se: if rate_se.is_finite() { rate_se } else { 0.0 },
        rate_pairing,
        samples: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::fidelity;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn one() -> PureState {
        PureState::fock(&[2], &[1])
    }

    fn forced_chain(m: usize) -> PureState {
        let mut s = one();
        for _ in 0..m {
            s = breed_step(&s, &s, 0.0, Conditioning::Forced(0.0)).unwrap().state;
        }
        s
    }

    #[test]
    fn ideal_psi_low_orders() {
        let p0 = ideal_psi(0, ideal_cutoff(0)).unwrap();
        assert!((p0.amplitude(&[1]).re - 1.0).abs() < 1e-15);
        let p1 = ideal_psi(1, ideal_cutoff(1)).unwrap();
        let s3 = 3f64.sqrt();
        assert!((p1.amplitude(&[0]).re - 1.0 / s3).abs() < 1e-14);
        assert!((p1.amplitude(&[2]).re - 2f64.sqrt() / s3).abs() < 1e-14);
        assert!(matches!(ideal_psi(3, 20), Err(HyrepError::InsufficientCutoff { .. })));
    }

    #[test]
    fn ideal_psi_matches_closed_form_wavefunction() {
        // ψ_m(x) = Γ(2^m+1/2)^{-1/2} e^{-x²/2} x^{2^m}
        let m = 2;
        let psi = ideal_psi(m, 40).unwrap();
        let gamma_4_5: f64 = 11.631_728_396_567_45;
        for &x in &[-1.7, 0.3, 2.0] {
            let h = crate::fock::hermite_functions(41, x);
            let v: f64 = psi.amplitudes().iter().zip(&h).map(|(a, b)| a.re * b).sum();
            let closed = gamma_4_5.powf(-0.5) * (-0.5 * x * x).exp() * x.powi(4);
            assert!((v.abs() - closed.abs()).abs() < 1e-12, "{v} {closed}");
        }
    }

    #[test]
    fn forced_zero_pipeline_reproduces_closed_form() {
        for m in 1..=3 {
            let c = ideal_cutoff(m);
            let f = fidelity(&forced_chain(m).resized(&[c + 1]).unwrap(), &ideal_psi(m, c).unwrap()).unwrap();
            assert!(f > 1.0 - 1e-8, "m={m}: {f}");
        }
    }

    #[test]
    fn squeezed_cat_overlap() {
        for m in 2..=3 {
            let c = target_cutoff(m).max(ideal_cutoff(m));
            let f = fidelity(&ideal_psi(m, c).unwrap(), &target_state(m, c).unwrap()).unwrap();
            assert!(f >= 0.99, "m={m}: {f}");
        }
        assert!((mu(3) - 2.9155).abs() < 1e-4);
    }

    #[test]
    fn acceptance_matches_density_integral() {
        // |1,1⟩ after the beam splitter: the measured port is |0⟩ or |2⟩ with weight 1/2 each
        let delta = 0.1;
        let dens = |x: f64| {
            let g = (-x * x).exp() / PI.sqrt();
            0.5 * g + 0.5 * g * (2.0 * x * x - 1.0).powi(2) / 2.0
        };
        let steps = 20_000;
        let h = 2.0 * delta / steps as f64;
        let exact: f64 = (0..steps).map(|k| dens(-delta + (k as f64 + 0.5) * h) * h).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut hits = 0usize;
        for _ in 0..trials {
            if breed_step(&one(), &one(), delta, Conditioning::Sampled(&mut rng)).unwrap().accepted {
                hits += 1;
            }
        }
        let p = hits as f64 / trials as f64;
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!(p > 0.0 && p < 1.0);
        assert!((p - exact).abs() < 2.0 * se, "{p} vs {exact} ± {se}");
        let w = breed_step(&one(), &one(), delta, Conditioning::Windowed(&mut rng)).unwrap().weight;
        assert!((w - exact).abs() < 1e-6);
    }

    #[test]
    fn outputs_have_even_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = one();
        for _ in 0..3 {
            s = breed_step(&s, &s, 0.4, Conditioning::Windowed(&mut rng)).unwrap().state;
            assert!(s.parity_weight(true) < 1e-10);
        }
    }

    #[test]
    fn acceptance_drops_with_level() {
        let params = BreedParams { m: 3, delta: 0.2, contamination: 0.0, trials: 400, memory: true };
        let g = run_generation(&params, 1, 1).unwrap();
        let p = &g.level_success_probs;
        assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
    }

    #[test]
    fn deterministic_limit_fidelity() {
        let params = BreedParams { m: 2, delta: 0.0, contamination: 0.0, trials: 3, memory: true };
        let g = run_generation(&params, 9, 1).unwrap();
        let c = target_cutoff(2).max(ideal_cutoff(2));
        let f = fidelity(&ideal_psi(2, c).unwrap(), &target_state(2, c).unwrap()).unwrap();
        assert!((g.mean_fidelity - f).abs() < 1e-9);
        assert_eq!(g.rate, 0.0);
    }

    #[test]
    fn dual_rail_bell_inputs_breed_into_symmetric_rail() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut bell = PureState::vacuum(2, 1);
        bell.amplitudes_mut()[0] = 0.0.into();
        bell.amplitudes_mut()[1] = h.into();
        bell.amplitudes_mut()[2] = h.into();
        let rails = rotate_rails(&bell, 1).unwrap();
        assert!((rails.amplitude(&[1, 0]).norm_sqr() - 1.0).abs() < 1e-14);
        for m in 1..=2 {
            let mut s = rails.clone();
            for _ in 0..m {
                s = breed_step_dual(&s, &s, 0.0, Conditioning::Forced(0.0), 16).unwrap().state;
            }
            let c = ideal_cutoff(m);
            let expect = ideal_psi(m, c).unwrap().tensor(&PureState::vacuum(1, 0));
            let f = fidelity(&s.resized(&[c + 1, 1]).unwrap(), &expect).unwrap();
            assert!(f > 1.0 - 1e-6, "m={m}: {f}");
        }
    }

    #[test]
    fn rate_models() {
        let p = [0.5, 0.4, 0.3];
        assert!((rate_with_memory(&p) - 0.06).abs() < 1e-15);
        assert!((rate_without_memory(&p) - 0.5f64.powi(4) * 0.4f64.powi(2) * 0.3).abs() < 1e-15);
        assert!((rate_pairing_rule(&p) - 0.06 / 3.375).abs() < 1e-15);
        assert_eq!(level_probs(&[0.5, 0.1]), vec![0.5, 0.4]);
    }
}
