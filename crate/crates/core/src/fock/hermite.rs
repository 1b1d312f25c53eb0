//! Harmonic-oscillator eigenfunctions in the convention where the vacuum
//! X-wavefunction is `π^(-1/4) exp(-x²/2)`.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Quadrature observed by a homodyne detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Quadrature {
    X,
    P,
}

/// `ψ_0(x) … ψ_{len-1}(x)` via the stable three-term recurrence.
pub fn hermite_functions(len: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    fill_hermite_functions(x, &mut out);
    out
}

pub fn fill_hermite_functions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Components `⟨q|n⟩` of a quadrature eigenstate. For P these carry the phase `(-i)^n`.
pub fn quadrature_bra(len: usize, quad: Quadrature, value: f64) -> Vec<C64> {
    let h = hermite_functions(len, value);
    match quad {
        Quadrature::X => h.into_iter().map(|v| C64::new(v, 0.0)).collect(),
        Quadrature::P => h
            .into_iter()
            .enumerate()
            .map(|(n, v)| match n % 4 {
                0 => C64::new(v, 0.0),
                1 => C64::new(0.0, -v),
                2 => C64::new(-v, 0.0),
                _ => C64::new(0.0, v),
            })
            .collect(),
    }
}
