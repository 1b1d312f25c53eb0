//! Seeded, order-stable Monte Carlo plumbing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};

/// Independent stream for one trial, derived from the master seed.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Runs `f` once per trial and returns results in trial order.
///
/// `workers == 0` uses the global pool. Output does not depend on the worker count.
pub fn run_trials<T, F>(master_seed: u64, trials: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    let job = || {
        (0..trials)
            .into_par_iter()
            .map(|t| f(t, &mut trial_rng(master_seed, t as u64)))
            .collect::<Result<Vec<T>>>()
    };
    if workers == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid("workers", e.to_string()))?
            .install(job)
    }
}

/// Delete-one jackknife of a statistic of column means.
///
/// Each row holds one trial's contributions; `stat` sees the column means.
/// Returns `(estimate, standard error)`.
pub fn jackknife(rows: &[Vec<f64>], stat: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let n = rows.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let k = rows[0].len();
    let mut totals = vec![0.0; k];
    for r in rows {
        totals.iter_mut().zip(r).for_each(|(t, v)| *t += v);
    }
    let means: Vec<f64> = totals.iter().map(|t| t / n as f64).collect();
    let full = stat(&means);
    if n < 2 {
        return (full, f64::NAN);
    }
    let mut buf = vec![0.0; k];
    let loo: Vec<f64> = rows
        .iter()
        .map(|r| {
            for j in 0..k {
                buf[j] = (totals[j] - r[j]) / (n - 1) as f64;
            }
            stat(&buf)
        })
        .collect();
    let finite: Vec<f64> = loo.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return (full, f64::NAN);
    }
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let var = finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (full, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn results_independent_of_worker_count() {
        let draw = |w| run_trials(42, 64, w, |_, rng| Ok(rng.random::<u64>())).unwrap();
        let one = draw(1);
        assert_eq!(one, draw(3));
        assert_eq!(one, draw(0));
        assert_ne!(one[0], one[1]);
    }

    #[test]
    fn jackknife_of_mean_matches_textbook_error() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let (m, se) = jackknife(&rows, |v| v[0]);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((m - mean).abs() < 1e-12);
        assert!((se - sd / n.sqrt()).abs() < 1e-10);
    }
}
