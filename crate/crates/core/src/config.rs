//! Flat key-value run configuration.
//!
//! Every key is optional and falls back to its default. Distances are in km,
//! times in seconds.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::breeding::BreedParams;
use crate::entgen::FIBER_LIGHT_SPEED_KMS;
use crate::error::{invalid, HyrepError, Result};
use crate::repeater::{ProtocolParams, SearchBudget, DEFAULT_MAX_M};
use crate::swapping::SwapParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for every random stream.
    pub seed: u64,
    /// Worker threads; 0 picks one per core.
    pub workers: usize,
    /// Monte Carlo trials per estimate.
    pub trials: usize,

    /// Breeding rounds for `breed`.
    pub m: usize,
    /// Breeding window half-width for `breed`.
    pub delta_gen: f64,
    /// Probability of a two-photon source event in `breed` and `fig2`.
    pub contamination: f64,
    /// Whether bred states are stored between rounds (rate model).
    pub memory: bool,

    /// Breeding rounds swept by `fig2`.
    pub fig2_m: Vec<usize>,
    pub fig2_contamination: Vec<f64>,
    pub fig2_delta: Vec<f64>,

    /// Two-mode cat amplitude for `swap`.
    pub alpha: f64,
    /// Swap window half-width; negative picks the default cut at `alpha`.
    pub delta_swap: f64,
    /// Auxiliary cats for `swap`.
    pub aux_k: usize,

    pub eta_d: f64,
    pub latt_km: f64,
    pub c_kms: f64,
    pub max_m: usize,
    pub f_target: f64,
    /// Distances swept by `fig3`.
    pub fig3_l_km: Vec<f64>,
    pub fig3_n: Vec<usize>,
    pub fig3_m: Vec<usize>,
    /// Simulations per `(n, m)` cell.
    pub evals_per_cell: usize,
    /// Starting point of the parameter search.
    pub p0: f64,
    pub delta_gen0: f64,
    pub delta_swap0: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            workers: 0,
            trials: 2000,
            m: 3,
            delta_gen: 0.6,
            contamination: 0.01,
            memory: true,
            fig2_m: vec![1, 2, 3],
            fig2_contamination: vec![0.0, 0.01],
            fig2_delta: vec![0.02, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0, 1.2],
            alpha: 2.5,
            delta_swap: -1.0,
            aux_k: 0,
            eta_d: 0.5,
            latt_km: 20.0,
            c_kms: FIBER_LIGHT_SPEED_KMS,
            max_m: DEFAULT_MAX_M,
            f_target: 0.90,
            fig3_l_km: vec![100.0, 200.0, 400.0, 600.0, 800.0, 1000.0],
            fig3_n: (0..=5).collect(),
            fig3_m: vec![2, 3],
            evals_per_cell: 200,
            p0: 3e-3,
            delta_gen0: 0.5,
            delta_swap0: 0.6,
        }
    }
}

fn check(ok: bool, key: &'static str, reason: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, reason.into()))
    }
}

fn unit_interval(v: f64) -> bool {
    v > 0.0 && v <= 1.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HyrepError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HyrepError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check(self.trials >= 1, "trials", "must be ≥ 1")?;
        check(self.m >= 1 && self.m <= 6, "m", format!("must lie in [1,6], got {}", self.m))?;
        check(self.delta_gen >= 0.0 && self.delta_gen.is_finite(), "delta_gen", format!("must be ≥ 0, got {}", self.delta_gen))?;
        check((0.0..1.0).contains(&self.contamination), "contamination", format!("must lie in [0,1), got {}", self.contamination))?;
        check(!self.fig2_m.is_empty() && self.fig2_m.iter().all(|&m| (1..=6).contains(&m)), "fig2_m", "needs values in [1,6]")?;
        check(
            !self.fig2_contamination.is_empty() && self.fig2_contamination.iter().all(|c| (0.0..1.0).contains(c)),
            "fig2_contamination",
            "needs values in [0,1)",
        )?;
        check(!self.fig2_delta.is_empty() && self.fig2_delta.iter().all(|d| *d >= 0.0 && d.is_finite()), "fig2_delta", "needs values ≥ 0")?;
        check(self.alpha > 0.0 && self.alpha <= 8.0, "alpha", format!("must lie in (0,8], got {}", self.alpha))?;
        check(self.delta_swap.is_finite(), "delta_swap", "must be finite")?;
        check(self.aux_k <= 4, "aux_k", format!("at most 4 auxiliary cats, got {}", self.aux_k))?;
        check(unit_interval(self.eta_d), "eta_d", format!("must lie in (0,1], got {}", self.eta_d))?;
        check(self.latt_km > 0.0, "latt_km", format!("must be > 0, got {}", self.latt_km))?;
        check(self.c_kms > 0.0, "c_kms", format!("must be > 0, got {}", self.c_kms))?;
        check((1..=6).contains(&self.max_m), "max_m", format!("must lie in [1,6], got {}", self.max_m))?;
        check(self.f_target > 0.0 && self.f_target < 1.0, "f_target", format!("must lie in (0,1), got {}", self.f_target))?;
        check(!self.fig3_l_km.is_empty() && self.fig3_l_km.iter().all(|l| *l > 0.0 && l.is_finite()), "fig3_l_km", "needs positive distances")?;
        check(!self.fig3_n.is_empty() && self.fig3_n.iter().all(|&n| n <= 10), "fig3_n", "needs values in [0,10]")?;
        check(
            !self.fig3_m.is_empty() && self.fig3_m.iter().all(|&m| m >= 1 && m <= self.max_m),
            "fig3_m",
            format!("needs values in [1,{}]", self.max_m),
        )?;
        check(self.evals_per_cell >= 1, "evals_per_cell", "must be ≥ 1")?;
        check(self.p0 > 0.0 && self.p0 < 1.0, "p0", format!("must lie in (0,1), got {}", self.p0))?;
        check(self.delta_gen0 > 0.0, "delta_gen0", format!("must be > 0, got {}", self.delta_gen0))?;
        check(self.delta_swap0 > 0.0, "delta_swap0", format!("must be > 0, got {}", self.delta_swap0))?;
        Ok(())
    }

    pub fn breed_params(&self) -> BreedParams {
        BreedParams { m: self.m, delta: self.delta_gen, contamination: self.contamination, trials: self.trials, memory: self.memory }
    }

    pub fn swap_params(&self) -> SwapParams {
        let delta_swap = if self.delta_swap < 0.0 { crate::swapping::default_delta(self.alpha) } else { self.delta_swap };
        SwapParams { delta_swap, k: self.aux_k, alpha: self.alpha }
    }

    /// Protocol template for the distance sweep; `n`, `m` and the tuned
    /// parameters are overwritten by the search.
    pub fn protocol(&self, l_km: f64) -> ProtocolParams {
        ProtocolParams {
            eta_d: self.eta_d,
            latt_km: self.latt_km,
            c_kms: self.c_kms,
            trials: self.trials,
            max_m: self.max_m,
            ..ProtocolParams::new(l_km, 0, self.fig3_m[0], self.p0, self.delta_gen0, self.delta_swap0)
        }
    }

    pub fn budget(&self) -> SearchBudget {
        SearchBudget {
            f_target: self.f_target,
            n_values: self.fig3_n.clone(),
            m_values: self.fig3_m.clone(),
            evals_per_cell: self.evals_per_cell,
            trials: self.trials,
            p0: self.p0,
            delta_gen0: self.delta_gen0,
            delta_swap0: self.delta_swap0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let cfg = RunConfig { seed: 99, fig2_delta: vec![0.1, 0.3], alpha: 3.25, ..Default::default() };
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(RunConfig::from_toml(&back.to_toml()).unwrap(), back);
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = RunConfig::from_toml("seed = 5\ntrials = 10\n").unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.fig2_m, RunConfig::default().fig2_m);
    }

    #[test]
    fn bad_values_name_the_key() {
        for (text, key) in [
            ("eta_d = 1.5", "eta_d"),
            ("contamination = -0.1", "contamination"),
            ("trials = 0", "trials"),
            ("fig3_m = [4]", "fig3_m"),
        ] {
            match RunConfig::from_toml(text) {
                Err(HyrepError::InvalidParameter { name, .. }) => assert_eq!(name, key),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(RunConfig::from_toml("no_such_key = 1"), Err(HyrepError::Config(_))));
        assert!(matches!(RunConfig::from_toml("seed = \"x\""), Err(HyrepError::Config(_))));
    }
}
