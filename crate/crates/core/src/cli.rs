//! Command implementations behind the `hyrep` binary.
//!
//! Each command turns a [`RunConfig`] into CSV or JSON text. Output is a pure
//! function of the configuration, so a fixed seed gives identical bytes for
//! any worker count.

use serde::Serialize;

use crate::breeding::run_generation;
use crate::config::RunConfig;
use crate::error::{HyrepError, Result};
use crate::repeater::{optimize, Optimum};
use crate::swapping::{ideal_acceptance, k_n};
use crate::validation::{run_checks, Check};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Fig2,
    Fig3,
    Breed,
    Swap,
    Validate,
}

/// Text produced by a command and whether its checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub text: String,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Fig2Row {
    pub m: usize,
    pub contamination: f64,
    pub delta: f64,
    pub fidelity: f64,
    pub fidelity_se: f64,
    pub rate: f64,
    pub trials: usize,
}

#[derive(Debug, Serialize)]
pub struct Fig3Row {
    #[serde(rename = "L_km")]
    pub l_km: f64,
    pub rate_per_min: f64,
    pub n_opt: usize,
    pub m_opt: usize,
    pub p: f64,
    pub delta_gen: f64,
    pub delta_swap: f64,
    pub fidelity: f64,
    pub fidelity_se: f64,
    pub infeasible: bool,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HyrepError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HyrepError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Breeding fidelity and rate over the configured `(m, contamination, Δ)` grid.
pub fn fig2_rows(cfg: &RunConfig) -> Result<Vec<Fig2Row>> {
    let mut rows = Vec::new();
    for &contamination in &cfg.fig2_contamination {
        for &m in &cfg.fig2_m {
            for &delta in &cfg.fig2_delta {
                let params = crate::breeding::BreedParams { m, delta, contamination, ..cfg.breed_params() };
                let g = run_generation(&params, cfg.seed, cfg.workers)?;
                rows.push(Fig2Row {
                    m,
                    contamination,
                    delta,
                    fidelity: g.mean_fidelity,
                    fidelity_se: g.fidelity_se,
                    rate: g.rate,
                    trials: g.samples,
                });
            }
        }
    }
    Ok(rows)
}

/// Optimized rate at the target fidelity over the configured distances.
pub fn fig3_rows(cfg: &RunConfig) -> Result<Vec<Fig3Row>> {
    let budget = cfg.budget();
    cfg.fig3_l_km
        .iter()
        .map(|&l| {
            let opt = optimize(&cfg.protocol(l), &budget, cfg.seed, cfg.workers)?;
            let (p, r) = (opt.params(), opt.result());
            Ok(Fig3Row {
                l_km: l,
                rate_per_min: 60.0 * opt.rate_per_s(),
                n_opt: p.n,
                m_opt: p.m,
                p: p.p,
                delta_gen: p.delta_gen,
                delta_swap: p.delta_swap,
                fidelity: r.mean_fidelity,
                fidelity_se: r.fidelity_se,
                infeasible: matches!(opt, Optimum::Infeasible { .. }),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SwapReport {
    alpha: f64,
    aux_k: usize,
    delta_swap: f64,
    acceptance: f64,
    k_n: Vec<f64>,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output> {
    cfg.validate()?;
    let ok = |text| Ok(Output { text, passed: true });
    match cmd {
        Command::Fig2 => ok(to_csv(&fig2_rows(cfg)?)?),
        Command::Fig3 => ok(to_csv(&fig3_rows(cfg)?)?),
        Command::Breed => {
            let params = cfg.breed_params();
            let stats = run_generation(&params, cfg.seed, cfg.workers)?;
            ok(to_json(&serde_json::json!({ "params": params, "stats": stats })))
        }
        Command::Swap => {
            let params = cfg.swap_params();
            let report = SwapReport {
                alpha: params.alpha,
                aux_k: params.k,
                delta_swap: params.delta_swap,
                acceptance: ideal_acceptance(&params)?,
                k_n: (0..6).map(k_n).collect(),
            };
            ok(to_json(&report))
        }
        Command::Validate => {
            let checks: Vec<Check> = run_checks(cfg.seed)?;
            let passed = checks.iter().all(|c| c.passed);
            Ok(Output { text: to_json(&checks), passed })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            trials: 40,
            fig2_m: vec![1, 2],
            fig2_contamination: vec![0.0, 0.01],
            fig2_delta: vec![0.3, 0.6],
            ..Default::default()
        }
    }

    #[test]
    fn fig2_csv_schema_and_determinism() {
        let cfg = small();
        let a = run(Command::Fig2, &cfg).unwrap().text;
        assert!(a.starts_with("m,contamination,delta,fidelity,fidelity_se,rate,trials\n"));
        assert_eq!(a.lines().count(), 1 + 8);
        let b = run(Command::Fig2, &RunConfig { workers: 2, ..cfg }).unwrap().text;
        assert_eq!(a, b);
    }

    #[test]
    fn csv_floats_round_trip() {
        let rows = [Fig2Row { m: 1, contamination: 0.1 + 0.2, delta: 1.0 / 3.0, fidelity: 0.9, fidelity_se: 1e-17, rate: 0.0, trials: 1 }];
        let text = to_csv(&rows).unwrap();
        let line = text.lines().nth(1).unwrap();
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[1], 0.1 + 0.2);
        assert_eq!(fields[2], 1.0 / 3.0);
        assert_eq!(fields[4], 1e-17);
    }

    #[test]
    fn swap_report_lists_k_n() {
        let out = run(Command::Swap, &RunConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.text).unwrap();
        assert!((v["k_n"][1].as_f64().unwrap() - 3.0).abs() < 1e-12);
        assert!((v["acceptance"].as_f64().unwrap() - 0.5).abs() < 1e-3);
    }
}
