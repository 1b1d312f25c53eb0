//! Exact finite superpositions of multimode coherent states.
//!
//! Every linear-optics step of the swapping analysis maps coherent products to
//! coherent products, so these sums carry the computation without truncation.

use num_complex::Complex64 as C64;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{HyrepError, Result};
use crate::fock::{ops::coherent_raw, required_cutoff, PureState, Quadrature};

/// Terms whose coefficient falls below this fraction of the largest are pruned.
pub const PRUNE_RELATIVE: f64 = 1e-15;
/// Amplitude distance under which two terms are treated as the same ket.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CoherentTerm {
    pub coeff: C64,
    pub amps: Vec<C64>,
}

/// `Σ_k c_k |α_k1⟩|α_k2⟩…`
#[derive(Clone, Debug, PartialEq)]
pub struct CoherentSum {
    nmodes: usize,
    terms: Vec<CoherentTerm>,
    discarded: f64,
}

/// `⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β)`.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// `⟨q|α⟩` for a quadrature eigenstate.
pub fn quadrature_kernel(quad: Quadrature, value: f64, alpha: C64) -> C64 {
    let q = C64::new(value, 0.0);
    let pref = PI.powf(-0.25);
    let e = match quad {
        Quadrature::X => -0.5 * q * q + SQRT_2 * alpha * q - 0.5 * alpha * alpha - 0.5 * alpha.norm_sqr(),
        Quadrature::P => {
            -0.5 * q * q - C64::i() * SQRT_2 * alpha * q + 0.5 * alpha * alpha - 0.5 * alpha.norm_sqr()
        }
    };
    pref * e.exp()
}

impl CoherentSum {
    pub fn new(nmodes: usize) -> Self {
        Self { nmodes, terms: Vec::new(), discarded: 0.0 }
    }

    /// A single product of coherent states.
    pub fn product(coeff: C64, amps: Vec<C64>) -> Self {
        let nmodes = amps.len();
        Self { nmodes, terms: vec![CoherentTerm { coeff, amps }], discarded: 0.0 }
    }

    /// Unnormalized `|α⟩ + |−α⟩`.
    pub fn cat_single(alpha: f64) -> Self {
        let mut s = Self::product(C64::new(1.0, 0.0), vec![C64::new(alpha, 0.0)]);
        s.push(C64::new(1.0, 0.0), vec![C64::new(-alpha, 0.0)]).expect("one mode");
        s
    }

    /// Unnormalized `e^{iθ}|α⟩|α⟩ + e^{−iθ}|−α⟩|−α⟩`.
    pub fn cat_two(alpha: f64, theta: f64) -> Self {
        let a = C64::new(alpha, 0.0);
        let mut s = Self::product(C64::from_polar(1.0, theta), vec![a, a]);
        s.push(C64::from_polar(1.0, -theta), vec![-a, -a]).expect("two modes");
        s
    }

    pub fn nmodes(&self) -> usize {
        self.nmodes
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Running bound on the squared weight of pruned terms.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    pub fn push(&mut self, coeff: C64, amps: Vec<C64>) -> Result<()> {
        if amps.len() != self.nmodes {
            return Err(HyrepError::ShapeMismatch(format!(
                "term with {} modes pushed into a {}-mode sum",
                amps.len(),
                self.nmodes
            )));
        }
        self.terms.push(CoherentTerm { coeff, amps });
        Ok(())
    }

    pub fn max_amplitude(&self) -> f64 {
        self.terms.iter().flat_map(|t| t.amps.iter()).map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        self.terms.iter_mut().for_each(|t| t.coeff *= factor);
        self
    }

    /// Tensor product; modes of `other` are appended.
    pub fn tensor(&self, other: &CoherentSum) -> CoherentSum {
        let mut out = CoherentSum::new(self.nmodes + other.nmodes);
        for a in &self.terms {
            for b in &other.terms {
                let mut amps = a.amps.clone();
                amps.extend_from_slice(&b.amps);
                out.terms.push(CoherentTerm { coeff: a.coeff * b.coeff, amps });
            }
        }
        out.discarded = self.discarded + other.discarded;
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        overlap(self, self).expect("same shape").re
    }

    pub fn normalized(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0) {
            return Err(HyrepError::ZeroNorm);
        }
        Ok(self.scaled(C64::new(n2.sqrt().recip(), 0.0)))
    }

    /// Beam splitter `(α_i, α_j) → ((α_i+α_j)/√2, (α_i−α_j)/√2)` on every term.
    pub fn bs_map(&self, i: usize, j: usize) -> Result<CoherentSum> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(HyrepError::SameMode(i));
        }
        let mut out = self.clone();
        for t in &mut out.terms {
            let (a, b) = (t.amps[i], t.amps[j]);
            t.amps[i] = (a + b) / SQRT_2;
            t.amps[j] = (a - b) / SQRT_2;
        }
        Ok(out)
    }

    /// Projects mode `mode` onto `⟨q|`; returns the sum on the remaining modes
    /// and the outcome density (its squared norm).
    pub fn homodyne_project_exact(&self, mode: usize, quad: Quadrature, value: f64) -> Result<(CoherentSum, f64)> {
        self.check_mode(mode)?;
        let mut out = CoherentSum::new(self.nmodes - 1);
        out.discarded = self.discarded;
        for t in &self.terms {
            let k = quadrature_kernel(quad, value, t.amps[mode]);
            let mut amps = t.amps.clone();
            amps.remove(mode);
            out.terms.push(CoherentTerm { coeff: t.coeff * k, amps });
        }
        out.merge_coincident();
        out.prune();
        let density = out.norm_sqr();
        Ok((out, density))
    }

    /// Density of a quadrature outcome on one mode (no state returned).
    pub fn homodyne_density_exact(&self, mode: usize, quad: Quadrature, value: f64) -> Result<f64> {
        Ok(self.homodyne_project_exact(mode, quad, value)?.1)
    }

    /// Renders the sum in a truncated Fock basis with uniform `cutoff`.
    pub fn to_fock(&self, cutoff: usize) -> Result<PureState> {
        let required = required_cutoff(self.max_amplitude());
        if cutoff < required {
            return Err(HyrepError::InsufficientCutoff { required, given: cutoff });
        }
        let dims = vec![cutoff + 1; self.nmodes.max(1)];
        let mut total = vec![C64::new(0.0, 0.0); dims.iter().product()];
        for t in &self.terms {
            let mut term = PureState::single_mode(vec![t.coeff]);
            for a in &t.amps {
                term = term.tensor(&PureState::single_mode(coherent_raw(*a, cutoff + 1)));
            }
            // the scalar seed contributes a unit leading dimension, so the flat layout matches
            for (dst, v) in total.iter_mut().zip(term.amplitudes()) {
                *dst += v;
            }
        }
        PureState::from_amplitudes(dims, total)
    }

    /// Combines terms whose amplitudes coincide within [`MERGE_TOL`].
    pub fn merge_coincident(&mut self) {
        let mut merged: Vec<CoherentTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match merged
                .iter_mut()
                .find(|m| m.amps.iter().zip(&t.amps).all(|(a, b)| (a - b).norm() < MERGE_TOL))
            {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        self.terms = merged;
    }

    fn prune(&mut self) {
        let max = self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return;
        }
        let cut = PRUNE_RELATIVE * max;
        let mut dropped = 0.0;
        self.terms.retain(|t| {
            let keep = t.coeff.norm() >= cut;
            if !keep {
                dropped += t.coeff.norm_sqr();
            }
            keep
        });
        self.discarded += dropped;
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.nmodes {
            return Err(HyrepError::InvalidMode { mode, nmodes: self.nmodes });
        }
        Ok(())
    }
}

/// `⟨a|b⟩` summed over all term pairs.
pub fn overlap(a: &CoherentSum, b: &CoherentSum) -> Result<C64> {
    if a.nmodes != b.nmodes {
        return Err(HyrepError::ShapeMismatch(format!("{} vs {} modes", a.nmodes, b.nmodes)));
    }
    let mut acc = C64::new(0.0, 0.0);
    for ta in &a.terms {
        for tb in &b.terms {
            let mut ov = ta.coeff.conj() * tb.coeff;
            for (x, y) in ta.amps.iter().zip(&tb.amps) {
                ov *= coherent_overlap(*x, *y);
            }
            acc += ov;
        }
    }
    Ok(acc)
}

/// Gram matrix `G_kl = ⟨term_k|term_l⟩` of the (coefficient-free) kets.
pub fn gram_matrix(s: &CoherentSum) -> Vec<C64> {
    let n = s.terms.len();
    let mut g = vec![C64::new(0.0, 0.0); n * n];
    for (k, a) in s.terms.iter().enumerate() {
        for (l, b) in s.terms.iter().enumerate() {
            g[k * n + l] = a.amps.iter().zip(&b.amps).map(|(x, y)| coherent_overlap(*x, *y)).product();
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{cat_single, fidelity};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn single_term_is_normalized() {
        for a in [r(0.0), r(1.3), C64::new(-0.4, 2.0)] {
            let s = CoherentSum::product(r(1.0), vec![a]);
            assert!((overlap(&s, &s).unwrap() - r(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn single_mode_cat_norm() {
        let c = CoherentSum::cat_single(2.0);
        let n = c.norm_sqr();
        assert!((n - 2.0 * (1.0 + (-8.0f64).exp())).abs() < 1e-14);
        assert!((n - 2.000671).abs() < 1e-6);
        let fock = c.to_fock(30).unwrap();
        assert!((fock.norm_sqr() - n).abs() < 1e-10);
    }

    #[test]
    fn two_mode_cat_norm_depends_on_theta() {
        for &theta in &[0.0, 0.4, 1.3] {
            let c = CoherentSum::cat_two(2.0, theta);
            let expect = 2.0 * (1.0 + (2.0 * theta).cos() * (-16.0f64).exp());
            assert!((c.norm_sqr() - expect).abs() < 1e-14);
            assert!((c.norm_sqr() - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bs_map_on_opposite_amplitudes() {
        let s = CoherentSum::product(r(1.0), vec![r(1.5), r(-1.5)]);
        let out = s.bs_map(0, 1).unwrap();
        assert!(out.terms()[0].amps[0].norm() < 1e-15);
        assert!((out.terms()[0].amps[1] - r(1.5 * SQRT_2)).norm() < 1e-14);
        assert_eq!(s.bs_map(1, 1).unwrap_err(), HyrepError::SameMode(1));
    }

    #[test]
    fn bs_map_twice_flips_nothing_but_order() {
        // (a,b) → ((a+b)/√2,(a−b)/√2) is an involution
        let s = CoherentSum::cat_two(1.2, 0.3).tensor(&CoherentSum::cat_single(0.7));
        let twice = s.bs_map(0, 2).unwrap().bs_map(0, 2).unwrap();
        let ov = overlap(&s, &twice).unwrap();
        assert!((ov.norm() - s.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn vacuum_projection_factor() {
        let s = CoherentSum::product(r(1.0), vec![r(0.0)]);
        let (out, dens) = s.homodyne_project_exact(0, Quadrature::X, 0.0).unwrap();
        assert!((out.terms()[0].coeff - r(PI.powf(-0.25))).norm() < 1e-15);
        assert!((dens - 1.0 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cat_renders_like_fock_constructor() {
        let c = CoherentSum::cat_single(2.0).normalized().unwrap().to_fock(40).unwrap();
        let f = fidelity(&c, &cat_single(2.0, 40).unwrap()).unwrap();
        assert!(f > 1.0 - 1e-10);
        let vac = CoherentSum::product(r(1.0), vec![r(0.0)]).to_fock(12).unwrap();
        assert_eq!(vac.amplitudes()[0], r(1.0));
        assert!(CoherentSum::cat_single(2.0).to_fock(20).is_err());
    }

    #[test]
    fn density_integrates_to_norm() {
        let s = CoherentSum::cat_two(1.5, 0.2).tensor(&CoherentSum::cat_single(1.0));
        let n2 = s.norm_sqr();
        for quad in [Quadrature::X, Quadrature::P] {
            let total = crate::fock::homodyne::simpson(
                |x| s.homodyne_density_exact(1, quad, x).unwrap(),
                -12.0,
                12.0,
                8000,
            );
            assert!((total - n2).abs() < 1e-8, "{quad:?}: {total} vs {n2}");
        }
    }

    #[test]
    fn gram_matrix_is_hermitian_psd_diagonal() {
        let s = CoherentSum::cat_two(0.8, 0.5).tensor(&CoherentSum::cat_two(0.3, -0.2));
        let g = gram_matrix(&s);
        let n = s.term_count();
        for k in 0..n {
            assert!((g[k * n + k] - r(1.0)).norm() < 1e-15);
            for l in 0..n {
                assert!((g[k * n + l] - g[l * n + k].conj()).norm() < 1e-15);
            }
        }
    }
}
