use num_complex::Complex64 as C64;
use rand::{Rng, RngCore};

use super::hermite::fill_hermite_functions;
pub use super::hermite::Quadrature;
use super::state::{axis_split, PureState};
use crate::error::{HyrepError, Result};

/// Fine step of the inverse-CDF refinement.
pub const SAMPLE_STEP: f64 = 1e-3;
const COARSE_STEP: f64 = 0.05;

/// Contracts mode `mode` with the bra `⟨q|`, removing that mode.
pub fn homodyne_project(state: &PureState, mode: usize, quad: Quadrature, value: f64) -> Result<(PureState, f64)> {
    state.check_mode(mode)?;
    let (outer, d, inner) = axis_split(state.dims(), mode);
    let bra = super::hermite::quadrature_bra(d, quad, value);
    let src = state.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); outer * inner];
    for o in 0..outer {
        let dst = &mut out[o * inner..(o + 1) * inner];
        for (n, b) in bra.iter().enumerate() {
            let s = &src[(o * d + n) * inner..(o * d + n + 1) * inner];
            for (x, v) in dst.iter_mut().zip(s) {
                *x += b * v;
            }
        }
    }
    let mut dims = state.dims().to_vec();
    dims.remove(mode);
    if dims.is_empty() {
        dims.push(1);
    }
    let projected = PureState::from_amplitudes(dims, out)?;
    let density = projected.norm_sqr();
    Ok((projected, density))
}

pub fn homodyne_density(state: &PureState, mode: usize, quad: Quadrature, value: f64) -> Result<f64> {
    Ok(Marginal::new(state, mode, quad)?.density(value))
}

/// Single-mode marginal of a quadrature, held as the reduced density matrix of
/// the measured mode so repeated density evaluations stay cheap.
#[derive(Clone, Debug)]
pub struct Marginal {
    quad: Quadrature,
    dim: usize,
    // Hermitian; for P the (-i)^n phases are folded in.
    rho: Vec<C64>,
    buf_len: usize,
}

impl Marginal {
    pub fn new(state: &PureState, mode: usize, quad: Quadrature) -> Result<Self> {
        state.check_mode(mode)?;
        let (outer, d, inner) = axis_split(state.dims(), mode);
        let src = state.amplitudes();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        for o in 0..outer {
            for n in 0..d {
                let a = &src[(o * d + n) * inner..(o * d + n + 1) * inner];
                for m in n..d {
                    let b = &src[(o * d + m) * inner..(o * d + m + 1) * inner];
                    let v: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    rho[n * d + m] += v;
                }
            }
        }
        // rho[n,m] = Σ a_n* a_m ; density(q) = Σ_{nm} conj(bra_n) ... folded below
        for n in 0..d {
            for m in n..d {
                let mut v = rho[n * d + m];
                if quad == Quadrature::P {
                    // ⟨p|n⟩ = (-i)^n ψ_n, density uses conj(⟨p|n⟩)⟨p|m⟩ → i^n (-i)^m
                    v *= ipow(n as i64 - m as i64);
                }
                rho[n * d + m] = v;
                rho[m * d + n] = v.conj();
            }
        }
        // highest level carrying weight bounds the support of the marginal
        let total: f64 = (0..d).map(|n| rho[n * d + n].re).sum();
        let mut top = 0;
        for n in 0..d {
            if rho[n * d + n].re > 1e-18 * total.max(1e-300) {
                top = n;
            }
        }
        Ok(Self { quad, dim: d, rho, buf_len: top + 1 })
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quad
    }

    /// Total weight of the marginal (the input norm²).
    pub fn total(&self) -> f64 {
        (0..self.dim).map(|n| self.rho[n * self.dim + n].re).sum()
    }

    pub fn density(&self, q: f64) -> f64 {
        let mut h = [0.0f64; 128];
        let len = self.buf_len;
        if len <= h.len() {
            fill_hermite_functions(q, &mut h[..len]);
            self.density_with(&h[..len])
        } else {
            let mut v = vec![0.0; len];
            fill_hermite_functions(q, &mut v);
            self.density_with(&v)
        }
    }

    fn density_with(&self, h: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for (n, hn) in h.iter().enumerate() {
            let row = &self.rho[n * d..n * d + h.len()];
            acc += hn * hn * row[n].re;
            let off: f64 = row[n + 1..].iter().zip(&h[n + 1..]).map(|(r, hm)| r.re * hm).sum();
            acc += 2.0 * hn * off;
        }
        acc.max(0.0)
    }

    /// Half-width of an interval outside which the marginal is negligible.
    pub fn support_half_width(&self) -> f64 {
        (2.0 * (self.buf_len as f64 - 1.0) + 1.0).sqrt() + 8.0
    }

    /// Integral of the density over `[lo, hi]` (composite Simpson on the fine step).
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let cells = ((hi - lo) / COARSE_STEP).ceil().max(1.0) as usize * 4;
        simpson(|x| self.density(x), lo, hi, cells)
    }

    /// Draws an outcome from the density restricted to `[lo, hi]`.
    ///
    /// Returns the outcome and the probability mass of the interval.
    pub fn sample_in(&self, lo: f64, hi: f64, u: f64) -> Result<(f64, f64)> {
        sample_interval(|x| self.density(x), lo, hi, u)
    }

    pub fn sample(&self, u: f64) -> Result<f64> {
        let w = self.support_half_width();
        Ok(self.sample_in(-w, w, u)?.0)
    }
}

fn ipow(k: i64) -> C64 {
    match k.rem_euclid(4) {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, cells: usize) -> f64 {
    let cells = cells.max(2) + cells % 2;
    let h = (hi - lo) / cells as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..cells {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// Inverse-CDF sampling on an adaptive grid: Simpson cells of width ≈ 0.05
/// locate the outcome, then a `SAMPLE_STEP` trapezoid grid inside the chosen
/// cell refines it.
pub(crate) fn sample_interval(f: impl Fn(f64) -> f64, lo: f64, hi: f64, u: f64) -> Result<(f64, f64)> {
    if hi < lo {
        return Err(crate::error::invalid("interval", format!("[{lo}, {hi}] is empty")));
    }
    if hi == lo {
        return Ok((lo, 0.0));
    }
    let cells = ((hi - lo) / COARSE_STEP).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let mut masses = Vec::with_capacity(cells);
    let mut left = f(lo);
    for k in 0..cells {
        let a = lo + k as f64 * h;
        let mid = f(a + 0.5 * h);
        let right = f(a + h);
        masses.push((h / 6.0 * (left + 4.0 * mid + right)).max(0.0));
        left = right;
    }
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(HyrepError::ZeroNorm);
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut cell = cells - 1;
    for (k, m) in masses.iter().enumerate() {
        if acc + m >= target {
            cell = k;
            break;
        }
        acc += m;
    }
    let within = ((target - acc) / masses[cell].max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
    let a = lo + cell as f64 * h;
    let fine = ((h / SAMPLE_STEP).ceil() as usize).max(1);
    let fh = h / fine as f64;
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    let mut prev = f(a);
    for k in 1..=fine {
        let cur = f(a + k as f64 * fh);
        let last = *cum.last().expect("nonempty");
        cum.push(last + 0.5 * (prev + cur) * fh);
        prev = cur;
    }
    let ctot = *cum.last().expect("nonempty");
    if !(ctot > 0.0) {
        return Ok((a + within * h, total));
    }
    let t = within * ctot;
    let k = cum.partition_point(|&c| c < t).clamp(1, fine);
    let (c0, c1) = (cum[k - 1], cum[k]);
    let frac = if c1 > c0 { (t - c0) / (c1 - c0) } else { 0.5 };
    Ok((a + (k as f64 - 1.0 + frac) * fh, total))
}

/// Samples a homodyne outcome and returns it with the normalized conditional state.
pub fn homodyne_sample(
    state: &PureState,
    mode: usize,
    quad: Quadrature,
    rng: &mut (impl RngCore + ?Sized),
) -> Result<(f64, PureState)> {
    let marginal = Marginal::new(state, mode, quad)?;
    if !(marginal.total() > 0.0) {
        return Err(HyrepError::ZeroNorm);
    }
    let x = marginal.sample(rng.random::<f64>())?;
    let (cond, _) = homodyne_project(state, mode, quad, x)?;
    Ok((x, cond.normalized()?))
}

/// How a homodyne outcome is chosen when conditioning on an acceptance window.
pub enum Conditioning<'a> {
    /// Use this outcome; the weight is the density there.
    Forced(f64),
    /// Draw from the full marginal; the weight is 1 inside the window and 0 outside.
    Sampled(&'a mut dyn RngCore),
    /// Draw from the marginal restricted to the window; the weight is the window probability.
    Windowed(&'a mut dyn RngCore),
}

#[derive(Clone, Debug)]
pub struct Conditioned {
    pub outcome: f64,
    pub accepted: bool,
    pub weight: f64,
    /// Normalized post-measurement state on the remaining modes.
    pub state: PureState,
}

/// Measures `quad` on `mode` and conditions on the window `[lo, hi]`.
///
/// Infinite bounds accept every outcome. The input is treated as normalized.
pub fn condition(
    state: &PureState,
    mode: usize,
    quad: Quadrature,
    (lo, hi): (f64, f64),
    how: Conditioning<'_>,
) -> Result<Conditioned> {
    let inside = |x: f64| x >= lo && x <= hi;
    let (outcome, weight) = match how {
        Conditioning::Forced(x) => (x, homodyne_density(state, mode, quad, x)? / state.norm_sqr().max(f64::MIN_POSITIVE)),
        Conditioning::Sampled(rng) => {
            let m = Marginal::new(state, mode, quad)?;
            if !(m.total() > 0.0) {
                return Err(HyrepError::ZeroNorm);
            }
            let x = m.sample(rng.random::<f64>())?;
            (x, if inside(x) { 1.0 } else { 0.0 })
        }
        Conditioning::Windowed(rng) => {
            let m = Marginal::new(state, mode, quad)?;
            let total = m.total();
            if !(total > 0.0) {
                return Err(HyrepError::ZeroNorm);
            }
            if lo.is_infinite() || hi.is_infinite() {
                let w = m.support_half_width();
                (m.sample_in(lo.max(-w), hi.min(w), rng.random::<f64>())?.0, 1.0)
            } else {
                let (x, mass) = m.sample_in(lo, hi, rng.random::<f64>())?;
                (x, (mass / total).min(1.0))
            }
        }
    };
    let (cond, _) = homodyne_project(state, mode, quad, outcome)?;
    Ok(Conditioned { outcome, accepted: inside(outcome), weight, state: cond.normalized()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::ops::{cat_single, coherent};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn vacuum_and_single_photon_densities() {
        let vac = PureState::vacuum(1, 10);
        let one = PureState::fock(&[11], &[1]);
        for &x in &[-1.5, 0.0, 0.4, 2.2] {
            let dv = homodyne_density(&vac, 0, Quadrature::X, x).unwrap();
            assert!((dv - (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
            let d1 = homodyne_density(&one, 0, Quadrature::X, x).unwrap();
            assert!((d1 - 2.0 * x * x * (-x * x).exp() / PI.sqrt()).abs() < 1e-14);
            let (_, proj) = homodyne_project(&one, 0, Quadrature::X, x).unwrap();
            assert!((proj - d1).abs() < 1e-14);
        }
    }

    #[test]
    fn cat_density_integrates_to_one() {
        let cat = cat_single(2.0, 40).unwrap();
        let m = Marginal::new(&cat, 0, Quadrature::X).unwrap();
        assert!((m.integrate(-12.0, 12.0) - 1.0).abs() < 1e-6);
        let m = Marginal::new(&cat, 0, Quadrature::P).unwrap();
        assert!((m.integrate(-12.0, 12.0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn p_density_of_coherent_state_is_centered_on_imaginary_part() {
        // |α⟩ with α = i·1.5 has P mean √2·1.5
        let s = coherent(C64::new(0.0, 1.5), 40).unwrap();
        let m = Marginal::new(&s, 0, Quadrature::P).unwrap();
        let p0 = 2f64.sqrt() * 1.5;
        for &dp in &[-0.5f64, 0.0, 0.7] {
            let expect = (-(dp * dp)).exp() / PI.sqrt();
            assert!((m.density(p0 + dp) - expect).abs() < 1e-9, "{} {}", m.density(p0 + dp), expect);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_normalized() {
        let cat = cat_single(1.5, 30).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| homodyne_sample(&cat, 0, Quadrature::X, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        let a = draw(7);
        let b = draw(7);
        for ((xa, sa), (xb, _)) in a.iter().zip(&b) {
            assert_eq!(xa, xb);
            assert!((sa.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_norm_state_cannot_be_sampled() {
        let z = PureState::from_amplitudes(vec![3], vec![C64::new(0.0, 0.0); 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(homodyne_sample(&z, 0, Quadrature::X, &mut rng).unwrap_err(), HyrepError::ZeroNorm);
    }

    #[test]
    fn interval_sampler_returns_mass() {
        let (x, mass) = sample_interval(|x| (-x * x).exp() / PI.sqrt(), -0.5, 0.5, 0.5).unwrap();
        assert!(x.abs() < 1e-3);
        // erf(0.5)
        assert!((mass - 0.520_499_877_813_046_5).abs() < 1e-7, "{mass}");
    }

    #[test]
    fn conditioning_modes() {
        let one = PureState::fock(&[6], &[1]);
        let two = one.tensor(&one);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = condition(&two, 1, Quadrature::X, (-0.2, 0.2), Conditioning::Windowed(&mut rng)).unwrap();
        assert!(c.accepted && c.outcome.abs() <= 0.2);
        let x = 0.2f64;
        // ∫ 2x²e^{-x²}/√π over [-0.2, 0.2]
        let expect = (2.0 / PI.sqrt()) * simpson(|t| t * t * (-t * t).exp(), -x, x, 400);
        assert!((c.weight / expect - 1.0).abs() < 1e-5, "{} {}", c.weight, expect);
        let f = condition(&two, 1, Quadrature::X, (-0.2, 0.2), Conditioning::Forced(0.5)).unwrap();
        assert!(!f.accepted);
        assert!((f.weight - 0.5 * (-0.25f64).exp() / PI.sqrt()).abs() < 1e-14);
        let s = condition(&two, 0, Quadrature::X, (f64::NEG_INFINITY, f64::INFINITY), Conditioning::Sampled(&mut rng)).unwrap();
        assert!(s.accepted && s.weight == 1.0);
        assert!((s.state.norm() - 1.0).abs() < 1e-12);
    }
}
