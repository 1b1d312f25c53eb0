//! Library results checked against independent closed forms.

use std::f64::consts::SQRT_2;

use hyrep::breeding::{ideal_cutoff, ideal_psi, mu, target_cutoff, target_state};
use hyrep::cat_algebra::{overlap, CoherentSum};
use hyrep::entgen::{heralded_state, SourceParams};
use hyrep::fock::{apply_beamsplitter, fidelity, hermite_functions, required_cutoff};
use hyrep::repeater::{empirical_waiting_time, waiting_time_model};
use hyrep::validation::random_coherent_sum;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

/// Real wavefunction of a single-mode Fock state at `x`.
fn wavefunction(amps: &[C64], x: f64) -> f64 {
    let h = hermite_functions(amps.len(), x);
    amps.iter().zip(&h).map(|(a, b)| a.re * b).sum()
}

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..=n).map(|k| if k == 0 || k == n { 0.5 } else { 1.0 } * f(lo + k as f64 * h)).sum::<f64>() * h
}

#[test]
fn bred_wavefunction_matches_gamma_normalized_closed_form() {
    for m in 1..=3u32 {
        let k = 2f64.powi(m as i32);
        let psi = ideal_psi(m as usize, ideal_cutoff(m as usize)).unwrap();
        let norm = gamma(k + 0.5).powf(-0.5);
        for x in [-2.1f64, -0.7, 0.4, 1.3, 2.6] {
            let closed = norm * (-0.5 * x * x).exp() * x.powi(k as i32);
            let v = wavefunction(psi.amplitudes(), x);
            assert!((v.abs() - closed.abs()).abs() < 1e-10, "m={m} x={x}: {v} vs {closed}");
        }
    }
}

#[test]
fn squeezed_cat_overlap_by_quadrature() {
    for m in 2..=3usize {
        let k = 2f64.powi(m as i32);
        let b = SQRT_2 * mu(m);
        // Ŝ(2)cat(μ): ψ(x) = 2^{1/4} φ(√2 x), φ a normalized real cat wavefunction
        let cat = |x: f64| (-(x - b).powi(2) / 2.0).exp() + (-(x + b).powi(2) / 2.0).exp();
        let cat_norm = trapezoid(|x| cat(x).powi(2), -20.0, 20.0, 40_000).sqrt();
        let target = |x: f64| 2f64.powf(0.25) * cat(SQRT_2 * x) / cat_norm;
        let psi = |x: f64| gamma(k + 0.5).powf(-0.5) * (-0.5 * x * x).exp() * x.powi(k as i32);
        let ov = trapezoid(|x| psi(x) * target(x), -20.0, 20.0, 40_000);
        let c = target_cutoff(m).max(ideal_cutoff(m));
        let lib = fidelity(&ideal_psi(m, c).unwrap(), &target_state(m, c).unwrap()).unwrap();
        assert!((ov * ov - lib).abs() < 1e-6, "m={m}: {} vs {lib}", ov * ov);
    }
}

#[test]
fn herald_probability_matches_thermal_click_model() {
    // each lossy arm is thermal with mean ηp/(1−p); a balanced beam splitter
    // keeps two identical thermal modes thermal and independent
    for &(p, eta_d, l0) in &[(1e-3, 0.5, 40.0), (0.02, 0.8, 10.0), (0.05, 1.0, 0.0)] {
        let src = SourceParams::new(p, eta_d, l0, 20.0);
        let nbar = src.eta() * p / (1.0 - p);
        let none = 1.0 / (1.0 + nbar);
        let expect = 2.0 * none * (1.0 - none);
        let got = heralded_state(&src, 12).unwrap().p_succ;
        assert!((got / expect - 1.0).abs() < 1e-6, "p={p}: {got} vs {expect}");
    }
}

#[test]
fn waiting_time_model_agrees_with_timing_simulation() {
    let q = 0.01;
    for ps in [[0.5, 0.5], [0.8, 0.3]] {
        let model = waiting_time_model(&[q], &ps, 1.0);
        let sim = empirical_waiting_time(q, &ps, 1.0, 20_000, 8).unwrap();
        assert!((sim / model - 1.0).abs() < 0.25, "{ps:?}: {sim} vs {model}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coherent_sums_agree_with_fock_engine(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nmodes = 1 + (seed % 2) as usize;
        let a = random_coherent_sum(&mut rng, nmodes, 6, 2.5).unwrap();
        let b = random_coherent_sum(&mut rng, nmodes, 6, 2.5).unwrap();
        let c = required_cutoff(2.5) + 10;
        let (fa, fb) = (a.to_fock(c).unwrap(), b.to_fock(c).unwrap());
        prop_assert!((a.norm_sqr() - fa.norm_sqr()).abs() < 1e-8 * a.norm_sqr().max(1.0));
        let scale = (a.norm_sqr() * b.norm_sqr()).sqrt().max(1.0);
        prop_assert!((overlap(&a, &b).unwrap() - fa.inner(&fb).unwrap()).norm() < 1e-8 * scale);
    }

    #[test]
    fn beam_splitter_agrees_across_engines(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_coherent_sum(&mut rng, 2, 4, 1.5).unwrap().normalized().unwrap();
        let c = required_cutoff(1.5 * SQRT_2) + 6;
        let exact = s.bs_map(0, 1).unwrap().to_fock(c).unwrap();
        let fock = apply_beamsplitter(&s.to_fock(c).unwrap(), 0, 1).unwrap();
        let f = fidelity(&exact, &fock).unwrap();
        prop_assert!(f > 1.0 - 1e-8, "{}", f);
    }
}

#[test]
fn coherent_overlap_closed_form() {
    let a = CoherentSum::product(C64::new(1.0, 0.0), vec![C64::new(0.7, -0.2)]);
    let b = CoherentSum::product(C64::new(1.0, 0.0), vec![C64::new(-0.3, 1.1)]);
    let (x, y) = (C64::new(0.7, -0.2), C64::new(-0.3, 1.1));
    let expect = (-0.5 * x.norm_sqr() - 0.5 * y.norm_sqr() + x.conj() * y).exp();
    assert!((overlap(&a, &b).unwrap() - expect).norm() < 1e-14);
}
