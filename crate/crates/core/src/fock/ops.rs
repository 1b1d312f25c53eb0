use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::state::{axis_split, unflatten, BranchEnsemble, PureState};
use crate::error::{invalid, HyrepError, Result};

/// Cutoff rule for a computation whose largest coherent amplitude is `alpha_max`.
pub fn required_cutoff(alpha_max: f64) -> usize {
    let a = alpha_max.abs();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

fn check_cutoff(alpha_max: f64, cutoff: usize) -> Result<()> {
    let required = required_cutoff(alpha_max);
    if cutoff < required {
        return Err(HyrepError::InsufficientCutoff { required, given: cutoff });
    }
    Ok(())
}

/// Truncated coherent amplitudes `e^{-|α|²/2} α^n / √n!` without renormalization.
pub(crate) fn coherent_raw(alpha: C64, dim: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v.push(c);
    }
    v
}

pub fn coherent(alpha: C64, cutoff: usize) -> Result<PureState> {
    check_cutoff(alpha.norm(), cutoff)?;
    PureState::single_mode(coherent_raw(alpha, cutoff + 1)).normalized()
}

/// Normalized single-mode cat `|α⟩ + |−α⟩`.
pub fn cat_single(alpha: f64, cutoff: usize) -> Result<PureState> {
    check_cutoff(alpha, cutoff)?;
    let plus = coherent_raw(C64::new(alpha, 0.0), cutoff + 1);
    let minus = coherent_raw(C64::new(-alpha, 0.0), cutoff + 1);
    let amps = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    PureState::single_mode(amps).normalized()
}

/// Normalized two-mode cat `e^{iθ}|α,α⟩ + e^{−iθ}|−α,−α⟩`.
pub fn cat_two(alpha: f64, theta: f64, cutoff: usize) -> Result<PureState> {
    check_cutoff(alpha, cutoff)?;
    let plus = PureState::single_mode(coherent_raw(C64::new(alpha, 0.0), cutoff + 1));
    let minus = PureState::single_mode(coherent_raw(C64::new(-alpha, 0.0), cutoff + 1));
    let mut a = plus.tensor(&plus);
    let mut b = minus.tensor(&minus);
    a.scale(C64::from_polar(1.0, theta));
    b.scale(C64::from_polar(1.0, -theta));
    let amps = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x + y).collect();
    PureState::from_amplitudes(a.dims().to_vec(), amps)?.normalized()
}

// Blocks of the balanced beam splitter, one per total photon number N.
// Entry [k * (N+1) + n] is ⟨k, N−k| U |n, N−n⟩.
static BS_BLOCKS: OnceLock<RwLock<Vec<Arc<Vec<f64>>>>> = OnceLock::new();

fn bs_blocks(max_total: usize) -> Vec<Arc<Vec<f64>>> {
    let lock = BS_BLOCKS.get_or_init(|| RwLock::new(vec![Arc::new(vec![1.0])]));
    {
        let blocks = lock.read().expect("bs cache poisoned");
        if blocks.len() > max_total {
            return blocks[..=max_total].to_vec();
        }
    }
    let mut blocks = lock.write().expect("bs cache poisoned");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    while blocks.len() <= max_total {
        let total = blocks.len();
        let prev = blocks[total - 1].clone();
        let w = total + 1;
        let mut block = vec![0.0; w * w];
        // U|n,m⟩ = (a†+b†)/√(2n) U|n−1,m⟩, and U|0,m⟩ = (a†−b†)/√(2m) U|0,m−1⟩.
        for n in 0..=total {
            let src = if n > 0 { n - 1 } else { 0 };
            let sign = if n > 0 { 1.0 } else { -1.0 };
            let norm = if n > 0 { n as f64 } else { total as f64 }.sqrt();
            for k in 0..total {
                let c = prev[k * total + src];
                if c == 0.0 {
                    continue;
                }
                block[(k + 1) * w + n] += c * ((k + 1) as f64).sqrt() * h / norm;
                block[k * w + n] += sign * c * ((total - k) as f64).sqrt() * h / norm;
            }
        }
        blocks.push(Arc::new(block));
    }
    blocks[..=max_total].to_vec()
}

/// `⟨k, N−k| U_BS |n, N−n⟩` for the balanced beam splitter.
pub fn beamsplitter_element(total: usize, k: usize, n: usize) -> f64 {
    let blocks = bs_blocks(total);
    blocks[total][k * (total + 1) + n]
}

/// Flat offsets of every index with modes `skip` set to zero.
fn spectator_offsets(dims: &[usize], skip: &[usize]) -> Vec<usize> {
    let size: usize = dims.iter().product();
    let mut occ = vec![0usize; dims.len()];
    let mut out = Vec::new();
    for idx in 0..size {
        unflatten(dims, idx, &mut occ);
        if skip.iter().all(|&m| occ[m] == 0) {
            out.push(idx);
        }
    }
    out
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for m in (0..dims.len().saturating_sub(1)).rev() {
        s[m] = s[m + 1] * dims[m + 1];
    }
    s
}

/// Balanced beam splitter on modes `i`, `j` with `a_i → (a_i+a_j)/√2`, `a_j → (a_i−a_j)/√2`.
///
/// Amplitude pushed above either mode's cutoff is lost.
pub fn apply_beamsplitter(state: &PureState, i: usize, j: usize) -> Result<PureState> {
    state.check_mode(i)?;
    state.check_mode(j)?;
    if i == j {
        return Err(HyrepError::SameMode(i));
    }
    let dims = state.dims();
    let (di, dj) = (dims[i], dims[j]);
    let max_total = di + dj - 2;
    let blocks = bs_blocks(max_total);
    let st = strides(dims);
    let (si, sj) = (st[i], st[j]);
    let src = state.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); src.len()];
    let mut inbuf = vec![C64::new(0.0, 0.0); di.min(dj)];
    for base in spectator_offsets(dims, &[i, j]) {
        for total in 0..=max_total {
            let lo = total.saturating_sub(dj - 1);
            let hi = total.min(di - 1);
            let len = hi - lo + 1;
            let mut any = false;
            for (slot, n) in inbuf[..len].iter_mut().zip(lo..=hi) {
                *slot = src[base + n * si + (total - n) * sj];
                any |= *slot != C64::new(0.0, 0.0);
            }
            if !any {
                continue;
            }
            let block = &blocks[total];
            let w = total + 1;
            for k in lo..=hi {
                let row = &block[k * w + lo..k * w + hi + 1];
                let acc: C64 = row.iter().zip(&inbuf[..len]).map(|(b, v)| v * *b).sum();
                out[base + k * si + (total - k) * sj] = acc;
            }
        }
    }
    PureState::from_amplitudes(dims.to_vec(), out)
}

/// Applies a `d_out × d_in` row-major matrix to one mode.
pub fn apply_single_mode(state: &PureState, mode: usize, matrix: &[C64], d_out: usize) -> Result<PureState> {
    state.check_mode(mode)?;
    let (outer, d_in, inner) = axis_split(state.dims(), mode);
    if matrix.len() != d_out * d_in {
        return Err(HyrepError::ShapeMismatch(format!(
            "operator of {} entries does not fit {d_out}x{d_in}",
            matrix.len()
        )));
    }
    let src = state.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); outer * d_out * inner];
    for o in 0..outer {
        for k in 0..d_out {
            let row = &matrix[k * d_in..(k + 1) * d_in];
            let dst = &mut out[(o * d_out + k) * inner..(o * d_out + k + 1) * inner];
            for (n, m) in row.iter().enumerate() {
                if *m == C64::new(0.0, 0.0) {
                    continue;
                }
                let s = &src[(o * d_in + n) * inner..(o * d_in + n + 1) * inner];
                for (d, v) in dst.iter_mut().zip(s) {
                    *d += m * v;
                }
            }
        }
    }
    let mut dims = state.dims().to_vec();
    dims[mode] = d_out;
    PureState::from_amplitudes(dims, out)
}

type SqueezeKey = (u64, usize);
static SQUEEZE_CACHE: OnceLock<Mutex<HashMap<SqueezeKey, Arc<Vec<C64>>>>> = OnceLock::new();

/// Fock matrix of `Ŝ(s)`, which maps `ψ(x) → s^{1/4} ψ(√s x)`.
///
/// Built as `exp(r/2 (a² − a†²))` with `r = ln(s)/2` in a padded space and
/// cropped to `dim × dim`.
pub fn squeeze_matrix(s: f64, dim: usize) -> Result<Arc<Vec<C64>>> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(invalid("s", format!("squeeze factor must be positive, got {s}")));
    }
    let cache = SQUEEZE_CACHE.get_or_init(Default::default);
    if let Some(m) = cache.lock().expect("squeeze cache poisoned").get(&(s.to_bits(), dim)) {
        return Ok(m.clone());
    }
    let r = 0.5 * s.ln();
    let pad = 60 + 2 * dim;
    let big = dim + pad;
    let mut gen = DMatrix::<f64>::zeros(big, big);
    for n in 0..big.saturating_sub(2) {
        let v = 0.5 * r * (((n + 1) * (n + 2)) as f64).sqrt();
        gen[(n, n + 2)] = v;
        gen[(n + 2, n)] = -v;
    }
    let u = gen.exp();
    let mut m = vec![C64::new(0.0, 0.0); dim * dim];
    for k in 0..dim {
        for n in 0..dim {
            m[k * dim + n] = C64::new(u[(k, n)], 0.0);
        }
    }
    let m = Arc::new(m);
    cache.lock().expect("squeeze cache poisoned").insert((s.to_bits(), dim), m.clone());
    Ok(m)
}

/// Squeezes the X variance of mode `i` by the factor `s`.
pub fn apply_squeeze(state: &PureState, i: usize, s: f64) -> Result<PureState> {
    state.check_mode(i)?;
    let d = state.dims()[i];
    let m = squeeze_matrix(s, d)?;
    apply_single_mode(state, i, &m, d)
}

/// Momentum displacements `exp(i q x̂)` on a mode of fixed dimension, from the
/// eigendecomposition of a padded position operator.
#[derive(Clone, Debug)]
pub struct PDisplacer {
    dim: usize,
    eigvals: Vec<f64>,
    // rows = first `dim` Fock levels, cols = eigenvectors
    vecs: Vec<f64>,
}

impl PDisplacer {
    pub fn new(dim: usize) -> Self {
        let big = dim + 48;
        let mut x = DMatrix::<f64>::zeros(big, big);
        for n in 0..big - 1 {
            let v = ((n + 1) as f64 / 2.0).sqrt();
            x[(n, n + 1)] = v;
            x[(n + 1, n)] = v;
        }
        let eig = x.symmetric_eigen();
        let mut vecs = vec![0.0; dim * big];
        for r in 0..dim {
            for c in 0..big {
                vecs[r * big + c] = eig.eigenvectors[(r, c)];
            }
        }
        Self { dim, eigvals: eig.eigenvalues.iter().copied().collect(), vecs }
    }

    /// Process-wide cached instance for `dim`.
    pub fn shared(dim: usize) -> Arc<PDisplacer> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<PDisplacer>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(d) = cache.lock().expect("displacer cache poisoned").get(&dim) {
            return d.clone();
        }
        let d = Arc::new(PDisplacer::new(dim));
        cache.lock().expect("displacer cache poisoned").insert(dim, d.clone());
        d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `dim × dim` block of `exp(i q x̂)`, shifting P by `q`.
    pub fn matrix(&self, q: f64) -> Vec<C64> {
        let big = self.eigvals.len();
        let phases: Vec<C64> = self.eigvals.iter().map(|&w| C64::from_polar(1.0, q * w)).collect();
        let mut m = vec![C64::new(0.0, 0.0); self.dim * self.dim];
        for r in 0..self.dim {
            let vr = &self.vecs[r * big..(r + 1) * big];
            for c in 0..self.dim {
                let vc = &self.vecs[c * big..(c + 1) * big];
                m[r * self.dim + c] = vr.iter().zip(vc).zip(&phases).map(|((a, b), p)| p * (a * b)).sum();
            }
        }
        m
    }
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// `Σ_k w_k |⟨a_k|b⟩|²` for an ensemble against a pure reference.
pub fn ensemble_fidelity(a: &BranchEnsemble, b: &PureState) -> Result<f64> {
    let mut f = 0.0;
    for (w, s) in a.branches() {
        f += w * s.inner(b)?.norm_sqr();
    }
    Ok(f.min(1.0))
}
