use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    verify_addition_determinant, verify_bilinear_derivative, verify_deletion_determinant,
    verify_seed_wronskian, verify_tau_split, verify_wronskian_identity, VerificationReport,
};
use crate::error::Result;
use crate::soliton::{Grid, SolitonConfig};
use crate::transforms::{krein_adler_check, seed_constants_from_c};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuzzOptions {
    pub seed: u64,
    pub configs: usize,
    pub max_n: usize,
    pub grid_points: usize,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            configs: 50,
            max_n: 6,
            grid_points: 401,
        }
    }
}

/// Random configuration: `N` uniform in `1..=max_n`, `k` sorted uniform
/// draws from `(0.2, 4)`, `c` log-uniform in `(0.1, 10)`.
pub fn random_config(rng: &mut ChaCha8Rng, max_n: usize) -> SolitonConfig {
    let n = rng.gen_range(1..=max_n);
    loop {
        let mut k: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..4.0)).collect();
        k.sort_by(|a, b| a.total_cmp(b));
        let c: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.gen_range(-1.0..1.0)))
            .collect();
        if let Ok(cfg) = SolitonConfig::new(k, c) {
            return cfg;
        }
    }
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let size = rng.gen_range(1..=n);
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut d = all[..size].to_vec();
    d.sort_unstable();
    d
}

fn reports_for(index: usize, opts: &FuzzOptions) -> Result<Vec<VerificationReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let cfg = random_config(&mut rng, opts.max_n);
    let n = cfg.n();
    let k1 = cfg.k()[0];
    let grid = Grid::new(-6.0 / k1, 6.0 / k1, opts.grid_points)?;

    // Wronskian sets obey the Krein-Adler condition so that u~_D keeps a sign.
    let wronskian_set = loop {
        let d = random_subset(&mut rng, n);
        if krein_adler_check(n, &d) {
            break d;
        }
    };
    let j = rng.gen_range(0..n);
    let l = rng.gen_range(0..n);
    let deletion_set = random_subset(&mut rng, n);
    let addition_set = random_subset(&mut rng, n);
    let e: Vec<f64> = addition_set
        .iter()
        .map(|_| 10f64.powf(rng.gen_range(-1.0..1.0)))
        .collect();
    let split = rng.gen_range(0..n);

    let label = format!("config {index}: k = {:?}, c = {:?}", cfg.k(), cfg.c());
    let reports = vec![
        verify_wronskian_identity(&cfg, &wronskian_set, &grid)?,
        verify_bilinear_derivative(&cfg, j, l, &grid)?,
        verify_deletion_determinant(&cfg, &deletion_set, &grid)?,
        verify_addition_determinant(&cfg, &addition_set, &e, &grid)?,
        verify_tau_split(&cfg, split, &grid)?,
        verify_seed_wronskian(cfg.k(), &seed_constants_from_c(&cfg), &grid)?,
    ];
    Ok(reports
        .into_iter()
        .map(|r| {
            let ctx = match &r.context {
                Some(c) => format!("{label}; {c}"),
                None => label.clone(),
            };
            r.with_context(ctx)
        })
        .collect())
}

/// Every identity on `opts.configs` random configurations, in parallel.
/// Configuration `i` uses stream `i` of a ChaCha generator seeded with
/// `opts.seed`, so the output does not depend on scheduling.
pub fn run_identity_suite(opts: &FuzzOptions) -> Result<Vec<VerificationReport>> {
    let per_config = (0..opts.configs)
        .into_par_iter()
        .map(|i| reports_for(i, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_config.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic() {
        let opts = FuzzOptions {
            seed: 11,
            configs: 3,
            max_n: 3,
            grid_points: 41,
        };
        let a = run_identity_suite(&opts).unwrap();
        let b = run_identity_suite(&opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 18);
    }
}
