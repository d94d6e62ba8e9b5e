use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lm::{minimise, LmOptions};
use super::{Evaluator, SolveProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultistartOptions {
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the starting coordinates.
    pub scale: f64,
    pub lm: LmOptions,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            starts: 100,
            seed: 0,
            scale: 1.0,
            lm: LmOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartReport {
    pub problem: String,
    pub seed: u64,
    pub starts: usize,
    pub records: Vec<StartRecord>,
}

impl MultistartReport {
    pub fn successes(&self) -> impl Iterator<Item = &StartRecord> {
        self.records.iter().filter(|r| r.converged)
    }

    /// Smallest residual over all starts (infinite with no starts).
    pub fn best_residual(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.residual)
            .fold(f64::INFINITY, f64::min)
    }

    /// Wording for an empty result: evidence, not proof.
    pub fn negative_certificate(&self) -> String {
        format!(
            "no solution found under {} starts with best residual {:.3e} (seed {})",
            self.starts,
            self.best_residual(),
            self.seed
        )
    }
}

/// Starting point `index` for `seed`; independent of scheduling.
pub fn starting_point(p: &SolveProblem, seed: u64, index: usize, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..p.free_dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        })
        .collect()
}

/// Runs Levenberg–Marquardt from `starts` seeded normal points in parallel.
pub fn multistart(p: &SolveProblem, opts: &MultistartOptions) -> MultistartReport {
    let ev = Evaluator::new(p);
    let f = |x: &[f64]| ev.residual(x).ok();
    let records = (0..opts.starts)
        .into_par_iter()
        .map(|index| {
            let x0 = starting_point(p, opts.seed, index, opts.scale);
            let r = minimise(&f, &x0, &opts.lm);
            StartRecord {
                index,
                x: r.x,
                residual: r.residual,
                iterations: r.iterations,
                converged: r.converged,
            }
        })
        .collect();
    MultistartReport {
        problem: p.name.clone(),
        seed: opts.seed,
        starts: opts.starts,
        records,
    }
}
