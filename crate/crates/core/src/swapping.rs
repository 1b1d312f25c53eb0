//! Entanglement swapping of two-mode cat states with linear optics and homodyne detection.
//!
//! The two central modes `B`, `B'` are mixed on a balanced beam splitter. The
//! sum port is measured in P and the difference port in X; an X outcome near
//! zero leaves `A` and `C` in a two-mode cat. With auxiliary single-mode cats
//! of amplitudes `2^{j/2}α` inserted before the X measurement, only the two
//! extremal X peaks fail.
//!
//! The exact engine works on [`CoherentSum`]s; the Fock engine handles the
//! non-ideal states produced by breeding.

use num_complex::Complex64 as C64;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::breeding::{mu, rotate_rails_raw};
use crate::cat_algebra::CoherentSum;
use crate::error::{invalid, HyrepError, Result};
use crate::fock::homodyne::simpson;
use crate::fock::{
    apply_beamsplitter, apply_single_mode, coherent, condition, homodyne_project, required_cutoff, squeeze_matrix,
    Conditioning, PDisplacer, PureState, Quadrature,
};
use crate::optim::{golden_min, nelder_mead};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapParams {
    /// Half-width of the accepted X window.
    pub delta_swap: f64,
    /// Number of auxiliary single-mode cats.
    pub k: usize,
    /// Nominal two-mode cat amplitude.
    pub alpha: f64,
}

impl SwapParams {
    /// Simple swapping with the window cut midway between the central and side peaks.
    pub fn simple(alpha: f64) -> Self {
        Self { delta_swap: default_delta(alpha), k: 0, alpha }
    }
}

/// Outcome of one swap.
#[derive(Clone, Debug)]
pub struct SwapResult<S> {
    pub accepted: bool,
    /// Normalized state on the outer modes `(A, C)`.
    pub out: S,
    pub x_outcome: f64,
    /// P outcomes in measurement order.
    pub p_outcomes: Vec<f64>,
    /// Phases `θ_j = −2^{1+j/2} α p_j` predicted for each P outcome.
    pub theta_phases: Vec<f64>,
    /// Weight of the X outcome under the chosen conditioning.
    pub weight: f64,
}

/// X cut midway between the central peak at 0 and the side peaks at `±2α`.
pub fn default_delta(alpha: f64) -> f64 {
    alpha.abs()
}

/// `k_n = 2√2 coth(2^n arccoth(1/√2))` via the doubling recurrence of coth.
pub fn k_n(n: usize) -> f64 {
    let mut c = 1.0 / SQRT_2;
    for _ in 0..n {
        c = (c * c + 1.0) / (2.0 * c);
    }
    2.0 * SQRT_2 * c
}

/// Predicted relative phase for P outcome `p` at auxiliary stage `j` (0 = main).
pub fn theta_for(alpha: f64, j: usize, p: f64) -> f64 {
    -(2f64.powf(1.0 + j as f64 / 2.0)) * alpha * p
}

// ---------------------------------------------------------------------------
// exact engine

/// Layout after the central beam splitter and auxiliary stages:
/// `[A, B, B', C, aux_1, …, aux_k]` with P on `B`, then on each former X port.
fn exact_pipeline(left: &CoherentSum, right: &CoherentSum, alpha: f64, k: usize) -> Result<(CoherentSum, Vec<usize>)> {
    if left.nmodes() != 2 || right.nmodes() != 2 {
        return Err(HyrepError::ShapeMismatch("swapping needs two two-mode states".into()));
    }
    let mut state = left.tensor(right);
    for j in 1..=k {
        let aux = CoherentSum::cat_single(2f64.powf(j as f64 / 2.0) * alpha).normalized()?;
        state = state.tensor(&aux);
    }
    state = state.bs_map(1, 2)?;
    let mut p_modes = vec![1];
    let mut x_mode = 2;
    for j in 1..=k {
        let aux_mode = 3 + j;
        state = state.bs_map(x_mode, aux_mode)?;
        p_modes.push(x_mode);
        x_mode = aux_mode;
    }
    p_modes.push(x_mode);
    Ok((state, p_modes))
}

/// Swap with prescribed outcomes; `p` holds `k + 1` P outcomes.
pub fn swap_exact(
    left: &CoherentSum,
    right: &CoherentSum,
    params: &SwapParams,
    p: &[f64],
    x: f64,
) -> Result<SwapResult<CoherentSum>> {
    if p.len() != params.k + 1 {
        return Err(invalid("p", format!("expected {} P outcomes, got {}", params.k + 1, p.len())));
    }
    let (state, modes) = exact_pipeline(left, right, params.alpha, params.k)?;
    let accepted = exact_accepts(&state, *modes.last().expect("x mode"), params, x);
    let x_mode = *modes.last().expect("x mode");
    let (mut out, _) = state.homodyne_project_exact(x_mode, Quadrature::X, x)?;
    // remaining measured modes in descending index order keep lower indices valid
    let mut ordered: Vec<(usize, f64)> = modes[..modes.len() - 1].iter().copied().zip(p.iter().copied()).collect();
    ordered.sort_by(|a, b| b.0.cmp(&a.0));
    for (mode, value) in ordered {
        out = out.homodyne_project_exact(mode, Quadrature::P, value)?.0;
    }
    let theta_phases = p.iter().enumerate().map(|(j, &v)| theta_for(params.alpha, j, v)).collect();
    Ok(SwapResult {
        accepted,
        out: out.normalized()?,
        x_outcome: x,
        p_outcomes: p.to_vec(),
        theta_phases,
        weight: 1.0,
    })
}

/// Simple swap with prescribed outcomes.
pub fn swap_simple_exact(left: &CoherentSum, right: &CoherentSum, params: &SwapParams, p0: f64, x: f64) -> Result<SwapResult<CoherentSum>> {
    swap_exact(left, right, &SwapParams { k: 0, ..*params }, &[p0], x)
}

/// Swap with `k ≥ 1` auxiliary cats and prescribed outcomes.
pub fn swap_aux(left: &CoherentSum, right: &CoherentSum, params: &SwapParams, p: &[f64], x: f64) -> Result<SwapResult<CoherentSum>> {
    if params.k == 0 {
        return Err(invalid("k", "auxiliary swapping needs k ≥ 1"));
    }
    swap_exact(left, right, params, p, x)
}

/// Distinct X positions of the coherent components on `mode`, ascending.
pub fn x_peaks(state: &CoherentSum, mode: usize) -> Vec<f64> {
    let mut peaks: Vec<f64> = state.terms().iter().map(|t| SQRT_2 * t.amps[mode].re).collect();
    peaks.sort_by(f64::total_cmp);
    peaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    peaks
}

/// Accepted X intervals. Without auxiliaries this is `[−δ, δ]`; with them,
/// every band between adjacent peak midpoints except the two extremal ones.
fn accepted_range(state: &CoherentSum, x_mode: usize, params: &SwapParams) -> (f64, f64) {
    if params.k == 0 {
        return (-params.delta_swap, params.delta_swap);
    }
    let peaks = x_peaks(state, x_mode);
    if peaks.len() < 3 {
        return (0.0, 0.0);
    }
    let lo = 0.5 * (peaks[0] + peaks[1]);
    let hi = 0.5 * (peaks[peaks.len() - 2] + peaks[peaks.len() - 1]);
    (lo, hi)
}

fn exact_accepts(state: &CoherentSum, x_mode: usize, params: &SwapParams, x: f64) -> bool {
    let (lo, hi) = accepted_range(state, x_mode, params);
    x >= lo && x <= hi
}

/// Probability that the swap is accepted, from the exact X density with
/// every P outcome integrated out.
pub fn acceptance_probability(left: &CoherentSum, right: &CoherentSum, params: &SwapParams) -> Result<f64> {
    let (state, modes) = exact_pipeline(left, right, params.alpha, params.k)?;
    let state = state.normalized()?;
    let x_mode = *modes.last().expect("x mode");
    let (lo, hi) = accepted_range(&state, x_mode, params);
    if hi <= lo {
        return Ok(0.0);
    }
    let cells = (((hi - lo) / 0.01).ceil() as usize).max(8);
    let density = |x: f64| state.homodyne_density_exact(x_mode, Quadrature::X, x).unwrap_or(0.0);
    Ok(simpson(density, lo, hi, cells).clamp(0.0, 1.0))
}

/// Acceptance of swapping two ideal `tmc(0, α)` states.
pub fn ideal_acceptance(params: &SwapParams) -> Result<f64> {
    let cat = CoherentSum::cat_two(params.alpha, 0.0).normalized()?;
    acceptance_probability(&cat, &cat, params)
}

/// Relative phase `θ` of a two-mode cat `e^{iθ}|β,β⟩ + e^{−iθ}|−β,−β⟩`,
/// read from its exact coefficients. Defined modulo π.
pub fn relative_phase(state: &CoherentSum, beta: f64) -> Result<f64> {
    let find = |s: f64| {
        state
            .terms()
            .iter()
            .find(|t| t.amps.iter().all(|a| (a - C64::new(s * beta, 0.0)).norm() < 1e-9))
            .map(|t| t.coeff)
    };
    match (find(1.0), find(-1.0)) {
        (Some(a), Some(b)) => Ok(0.5 * (a / b).arg()),
        _ => Err(invalid("state", format!("no ±{beta} two-mode cat components"))),
    }
}

/// Difference of two phases reduced to `(−π/2, π/2]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    if d > PI / 2.0 {
        d - PI
    } else {
        d
    }
}

// ---------------------------------------------------------------------------
// Fock engine

/// How the swap outcomes are chosen in the Fock engine.
pub enum SwapMeasurement<'a> {
    Forced { p: f64, x: f64 },
    /// P and X from their full distributions; accepted iff `|x| ≤ δ`.
    Sampled(&'a mut dyn RngCore),
    /// P from its full distribution, X restricted to the window with its probability as weight.
    Windowed(&'a mut dyn RngCore),
}

/// Simple swap of `left = (A, B)` with `right = (B', C)`.
///
/// The central modes are padded so the beam splitter is exact; the outer modes
/// keep their dimensions.
pub fn swap_fock(left: &PureState, right: &PureState, delta: f64, how: SwapMeasurement<'_>) -> Result<SwapResult<PureState>> {
    if !(delta >= 0.0) {
        return Err(invalid("delta_swap", format!("must be ≥ 0, got {delta}")));
    }
    if left.nmodes() != 2 || right.nmodes() != 2 {
        return Err(HyrepError::ShapeMismatch("swapping needs two two-mode states".into()));
    }
    let mid = left.dims()[1] + right.dims()[0] - 1;
    let l = left.resized(&[left.dims()[0], mid])?;
    let r = right.resized(&[mid, right.dims()[1]])?;
    let mixed = apply_beamsplitter(&l.tensor(&r), 1, 2)?;
    let window = (-delta, delta);
    let full = (f64::NEG_INFINITY, f64::INFINITY);
    let (p, x) = match how {
        SwapMeasurement::Forced { p, x } => {
            let pc = condition(&mixed, 1, Quadrature::P, full, Conditioning::Forced(p))?;
            let xc = condition(&pc.state, 1, Quadrature::X, window, Conditioning::Forced(x))?;
            (pc, xc)
        }
        SwapMeasurement::Sampled(rng) => {
            let pc = condition(&mixed, 1, Quadrature::P, full, Conditioning::Sampled(&mut *rng))?;
            let xc = condition(&pc.state, 1, Quadrature::X, window, Conditioning::Sampled(rng))?;
            (pc, xc)
        }
        SwapMeasurement::Windowed(rng) => {
            let pc = condition(&mixed, 1, Quadrature::P, full, Conditioning::Sampled(&mut *rng))?;
            let xc = condition(&pc.state, 1, Quadrature::X, window, Conditioning::Windowed(rng))?;
            (pc, xc)
        }
    };
    Ok(SwapResult {
        accepted: x.accepted,
        out: x.state,
        x_outcome: x.outcome,
        p_outcomes: vec![p.outcome],
        theta_phases: Vec::new(),
        weight: x.weight,
    })
}

/// Fock rendering of auxiliary swapping with prescribed outcomes, used as an
/// independent check of the exact engine. Each measured mode is projected as
/// soon as it is final, which keeps the tensors to four modes.
pub fn swap_aux_fock_forced(left: &PureState, right: &PureState, aux: &[PureState], p: &[f64], x: f64) -> Result<PureState> {
    if p.len() != aux.len() + 1 {
        return Err(invalid("p", format!("expected {} P outcomes, got {}", aux.len() + 1, p.len())));
    }
    let mid = left.dims()[1] + right.dims()[0] - 1;
    let l = left.resized(&[left.dims()[0], mid])?;
    let r = right.resized(&[mid, right.dims()[1]])?;
    let mixed = apply_beamsplitter(&l.tensor(&r), 1, 2)?;
    // [A, x, C] after the first P measurement
    let mut state = homodyne_project(&mixed, 1, Quadrature::P, p[0])?.0;
    for (j, a) in aux.iter().enumerate() {
        let d = state.dims()[1] + a.dims()[0] - 1;
        let dims = [state.dims()[0], d, state.dims()[2]];
        // [A, x, C, aux]
        let joint = state.resized(&dims)?.tensor(&a.resized(&[d])?);
        let mixed = apply_beamsplitter(&joint, 1, 3)?;
        let projected = homodyne_project(&mixed, 1, Quadrature::P, p[j + 1])?.0;
        // back to [A, x, C]
        state = move_last_to(&projected, 1)?;
    }
    homodyne_project(&state, 1, Quadrature::X, x)?.0.normalized()
}

/// Moves the last mode of a three-mode state to position `pos`.
fn move_last_to(state: &PureState, pos: usize) -> Result<PureState> {
    let d = state.dims();
    if d.len() != 3 || pos != 1 {
        return Err(HyrepError::ShapeMismatch("expected a three-mode state".into()));
    }
    let (a, c, x) = (d[0], d[1], d[2]);
    let src = state.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    for i in 0..a {
        for k in 0..c {
            for j in 0..x {
                out[(i * x + j) * c + k] = src[(i * c + k) * x + j];
            }
        }
    }
    PureState::from_amplitudes(vec![a, x, c], out)
}

// ---------------------------------------------------------------------------
// final target

/// `Ŝ_+(4/k)Ŝ_−(k/2)|tmc(φ, μ_m/√k)⟩` with `±` the symmetric and antisymmetric
/// modes, stored in the local `(a, b)` basis as its two phase components so
/// that φ can be optimized in closed form.
#[derive(Clone, Debug)]
pub struct FinalTarget {
    plus: PureState,
    minus: PureState,
    // Gram entries of the untruncated components
    n_plus: f64,
    n_minus: f64,
    cross: C64,
    beta: f64,
}

impl FinalTarget {
    /// Target after `n` swaps of states bred for `m` rounds, cropped to `cutoff`.
    pub fn new(m: usize, n: usize, cutoff: usize) -> Result<Self> {
        Self::with_k(m, k_n(n), cutoff)
    }

    /// Target for states held at local cutoff `c`, with headroom for the
    /// squeezed tails.
    pub fn for_local(m: usize, n: usize, c: usize) -> Result<Self> {
        let cutoff = (c + 8).max(required_cutoff(mu(m) / k_n(n).sqrt()));
        Self::new(m, n, cutoff)
    }

    /// The `k_n → 2√2` limit, equal to `Ŝ_a(√2)Ŝ_b(√2)|tmc(φ, μ_m/2^{3/4})⟩`.
    pub fn local_limit(m: usize, cutoff: usize) -> Result<Self> {
        Self::with_k(m, 2.0 * SQRT_2, cutoff)
    }

    pub fn with_k(m: usize, k: f64, cutoff: usize) -> Result<Self> {
        if !(k > 0.0) {
            return Err(invalid("k", format!("must be positive, got {k}")));
        }
        let beta = mu(m) / k.sqrt();
        let required = required_cutoff(beta);
        if cutoff < required {
            return Err(HyrepError::InsufficientCutoff { required, given: cutoff });
        }
        let inner = cutoff.max(required_cutoff(SQRT_2 * beta));
        let sq_s = squeeze_matrix(4.0 / k, inner + 1)?;
        let sq_d = squeeze_matrix(k / 2.0, inner + 1)?;
        let vac = PureState::fock(&[inner + 1], &[0]);
        let d = apply_single_mode(&vac, 0, &sq_d, inner + 1)?;
        let component = |sign: f64| -> Result<PureState> {
            let s = coherent(C64::new(sign * SQRT_2 * beta, 0.0), inner)?;
            let s = apply_single_mode(&s, 0, &sq_s, inner + 1)?;
            rotate_rails_raw(&s.tensor(&d))
        };
        let (plus_full, minus_full) = (component(1.0)?, component(-1.0)?);
        let n_plus = plus_full.norm_sqr();
        let n_minus = minus_full.norm_sqr();
        let cross = plus_full.inner(&minus_full)?;
        let dims = [cutoff + 1, cutoff + 1];
        Ok(Self { plus: plus_full.resized(&dims)?, minus: minus_full.resized(&dims)?, n_plus, n_minus, cross, beta })
    }

    /// Local cat amplitude before squeezing.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dims(&self) -> &[usize] {
        self.plus.dims()
    }

    fn norm_sqr(&self, phi: f64) -> f64 {
        self.n_plus + self.n_minus + 2.0 * (C64::from_polar(1.0, -2.0 * phi) * self.cross).re
    }

    /// The target at phase φ, normalized before cropping.
    pub fn state(&self, phi: f64) -> Result<PureState> {
        let n = self.norm_sqr(phi).sqrt();
        let (a, b) = (C64::from_polar(1.0 / n, phi), C64::from_polar(1.0 / n, -phi));
        let amps = self.plus.amplitudes().iter().zip(self.minus.amplitudes()).map(|(p, m)| a * p + b * m).collect();
        PureState::from_amplitudes(self.plus.dims().to_vec(), amps)
    }

    /// Fidelity of `psi` at phase φ.
    pub fn fidelity_at(&self, psi: &PureState, phi: f64) -> Result<f64> {
        let (a, b) = self.components(psi)?;
        Ok(self.fid_from(a, b, phi))
    }

    fn components(&self, psi: &PureState) -> Result<(C64, C64)> {
        Ok((self.plus.inner(psi)?, self.minus.inner(psi)?))
    }

    fn fid_from(&self, a: C64, b: C64, phi: f64) -> f64 {
        let ov = C64::from_polar(1.0, -phi) * a + C64::from_polar(1.0, phi) * b;
        (ov.norm_sqr() / self.norm_sqr(phi)).min(1.0)
    }

    /// Maximizes the fidelity over φ; returns `(fidelity, φ)`.
    pub fn best_phase(&self, psi: &PureState) -> Result<(f64, f64)> {
        let (a, b) = self.components(psi)?;
        Ok(self.best_phase_from(a, b))
    }

    fn best_phase_from(&self, a: C64, b: C64) -> (f64, f64) {
        // period π; coarse scan then golden refinement around the best cell
        let steps = 48;
        let h = PI / steps as f64;
        let (mut best_phi, mut best) = (0.0, f64::NEG_INFINITY);
        for i in 0..steps {
            let phi = i as f64 * h;
            let f = self.fid_from(a, b, phi);
            if f > best {
                best = f;
                best_phi = phi;
            }
        }
        let (phi, neg) = golden_min(|p| -self.fid_from(a, b, p), best_phi - h, best_phi + h, 1e-9);
        if -neg >= best {
            (-neg, phi.rem_euclid(PI))
        } else {
            (best, best_phi)
        }
    }
}

/// [`FinalTarget::new`] rendered at a fixed φ.
pub fn final_target(m: usize, n: usize, phi: f64, cutoff: usize) -> Result<PureState> {
    FinalTarget::new(m, n, cutoff)?.state(phi)
}

/// Fidelity after the best local P displacements and cat phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    pub fidelity: f64,
    pub phi: f64,
    /// P displacements applied to modes `a` and `b`.
    pub q: [f64; 2],
}

/// Maximizes the fidelity of `psi` with `target` over φ and two local P
/// displacements `exp(i q x̂)`.
pub fn corrected_fidelity(psi: &PureState, target: &FinalTarget) -> Result<Correction> {
    if psi.nmodes() != 2 {
        return Err(HyrepError::ShapeMismatch("corrections act on two-mode states".into()));
    }
    let dims = target.dims().to_vec();
    let psi = psi.resized(&dims)?;
    let disp_a = PDisplacer::shared(dims[0]);
    let disp_b = PDisplacer::shared(dims[1]);
    let shifted = |q: &[f64]| -> Result<PureState> {
        let s = apply_single_mode(&psi, 0, &disp_a.matrix(q[0]), dims[0])?;
        apply_single_mode(&s, 1, &disp_b.matrix(q[1]), dims[1])
    };
    let score = |q: &[f64]| -> f64 {
        match shifted(q).and_then(|s| target.best_phase(&s)) {
            Ok((f, _)) => -f,
            Err(_) => 0.0,
        }
    };
    let (q, _) = nelder_mead(score, &[0.0, 0.0], 0.2, 120, 1e-9);
    let (fidelity, phi) = target.best_phase(&shifted(&q)?)?;
    let (f0, phi0) = target.best_phase(&psi)?;
    if f0 >= fidelity {
        return Ok(Correction { fidelity: f0, phi: phi0, q: [0.0, 0.0] });
    }
    Ok(Correction { fidelity, phi, q: [q[0], q[1]] })
}
