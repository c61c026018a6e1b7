use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reflectionless::soliton::{tau_det, tau_hirota};
use reflectionless::{CoefficientRule, SolitonConfig};

fn random_config(rng: &mut ChaCha8Rng, n: usize) -> SolitonConfig {
    let mut k: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..4.0)).collect();
    k.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let c = (0..n)
        .map(|_| 10f64.powf(rng.gen_range(-1.0..1.0)))
        .collect();
    SolitonConfig::new(k, c).unwrap()
}

#[test]
fn determinant_matches_exponential_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let n = 1 + trial % 10;
        let cfg = random_config(&mut rng, n);
        let rule = CoefficientRule::identity(n);
        for x in cfg.default_grid().points().into_iter().step_by(20) {
            let d = tau_det(&cfg, &rule, x, 0).unwrap();
            let h = tau_hirota(&cfg, &rule, x).unwrap();
            let rel = (d.ln_abs() - h.ln_abs).exp_m1().abs();
            worst = worst.max(rel);
            assert!(
                rel < 1e-11,
                "trial {trial} n={n} x={x}: {rel} k={:?}",
                cfg.k()
            );
        }
    }
    eprintln!("worst relative difference {worst:e}");
}
