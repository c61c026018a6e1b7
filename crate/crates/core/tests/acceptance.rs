//! Acceptance criteria AC1-AC11, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`); exits non-zero if any
//! criterion fails.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reflectionless::identities::{inner_tail, random_config};
use reflectionless::jet;
use reflectionless::numerics::{
    bound_spectrum, default_halfwidth, fit_halfwidth, kdv_residual, phase_shift_check,
    quadrature_line, scatter, transmission_product, ScatterOptions,
};
use reflectionless::soliton::{
    eigenfunction, eigenfunction_scaled, potential, tau_det, tau_hirota,
};
use reflectionless::transforms::{
    am_add, am_delete, darboux_ground, darboux_potential, generic_am, krein_adler_check,
    krein_adler_delete, AmMode, EigenOverlaps, SeedFunction,
};
use reflectionless::{CoefficientRule, Grid, Result, SolitonConfig};

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    rng.set_stream(stream);
    rng
}

fn fixed_n_config(rng: &mut ChaCha8Rng, n: usize) -> SolitonConfig {
    loop {
        let cfg = random_config(rng, n);
        if cfg.n() == n {
            return cfg;
        }
    }
}

fn spectrum_of(cfg: &SolitonConfig) -> Result<Vec<f64>> {
    let u = |x: f64| potential(cfg, x);
    let l = fit_halfwidth(&u, default_halfwidth(cfg))?;
    Ok(bound_spectrum(&u, l, 1e-3)?.energies)
}

/// Largest distance between computed energies and `-k^2`, or `None` when the
/// counts differ.
fn spectrum_error(found: &[f64], k: &[f64]) -> Option<f64> {
    if found.len() != k.len() {
        return None;
    }
    let mut exact: Vec<f64> = k.iter().map(|k| -k * k).collect();
    exact.sort_by(|a, b| a.total_cmp(b));
    Some(
        found
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    )
}

fn ac1() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let cfg = fixed_n_config(&mut rng, 1 + trial % 10);
        let rule = CoefficientRule::identity(cfg.n());
        for x in cfg.default_grid().points() {
            let d = tau_det(&cfg, &rule, x, 0)?;
            let h = tau_hirota(&cfg, &rule, x)?;
            let rel = if d.sign() == h.sign {
                (d.ln_abs() - h.ln_abs).exp_m1().abs()
            } else {
                f64::INFINITY
            };
            worst = worst.max(rel);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < 1e-11 && secs < 30.0,
        format!("max relative difference {worst:.3e} (< 1e-11), {secs:.1} s (< 30 s)"),
    ))
}

fn sech2_config(n: usize) -> Result<SolitonConfig> {
    let fact = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
    let k = (1..=n).map(|j| j as f64).collect();
    let c = (1..=n)
        .map(|j| fact(n + j) / (fact(j) * fact(j - 1) * fact(n - j)))
        .collect();
    SolitonConfig::new(k, c)
}

fn ac2() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=5 {
        let cfg = sech2_config(n)?;
        let nn = (n * (n + 1)) as f64;
        for x in Grid::new(-8.0, 8.0, 1601)?.points() {
            let dev = (potential(&cfg, x)? + nn / x.cosh().powi(2)).abs();
            worst = worst.max(dev);
        }
    }
    Ok((
        worst < 1e-10,
        format!("max |U_N + N(N+1) sech^2| {worst:.3e} (< 1e-10)"),
    ))
}

fn ac3() -> Outcome {
    let mut rng = rng(3);
    let mut worst = 0.0f64;
    let mut count_mismatch = 0;
    let trials = 10;
    for _ in 0..trials {
        let cfg = random_config(&mut rng, 4);
        match spectrum_error(&spectrum_of(&cfg)?, cfg.k()) {
            Some(e) => worst = worst.max(e),
            None => count_mismatch += 1,
        }
    }
    Ok((
        worst < 1e-3 && count_mismatch == 0,
        format!(
            "{trials} configs, max |E - (-k^2)| {worst:.3e} (< 1e-3), {count_mismatch} count mismatches"
        ),
    ))
}

fn ac4() -> Outcome {
    let mut rng = rng(4);
    let (mut r_max, mut unit_max, mut phase_max) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let cfg = random_config(&mut rng, 6);
        let opts = ScatterOptions::for_config(&cfg);
        let u = |x: f64| potential(&cfg, x);
        for &k in &[0.5, 1.7, 3.1] {
            let s = scatter(&u, k, &opts)?;
            r_max = r_max.max(s.reflection_amp.norm());
            unit_max = unit_max.max(s.unitarity_defect);
            let expected = transmission_product(&cfg, k);
            let dphi = (s.transmission_amp / expected).arg().abs();
            phase_max = phase_max.max(dphi);
        }
    }
    Ok((
        r_max < 1e-6 && unit_max < 1e-6 && phase_max < 1e-5,
        format!(
            "max |r| {r_max:.3e} (< 1e-6), unitarity defect {unit_max:.3e} (< 1e-6), \
             phase error {phase_max:.3e} (< 1e-5)"
        ),
    ))
}

fn ac5() -> Outcome {
    let mut rng = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let cfg = random_config(&mut rng, 5);
        for x in cfg.default_grid().points() {
            let u = potential(&cfg, x)?;
            for j in 0..cfg.n() {
                let kj = cfg.k()[j];
                // residual of the normalized jet; the scale cancels
                let phi = eigenfunction_scaled(&cfg, j, x, 2)?.jet;
                let c = phi.coeffs();
                let (f, f2) = (c[0], 2.0 * c[2]);
                let terms = [f2.abs(), (u * f).abs(), (kj * kj * f).abs()];
                let scale = terms.iter().fold(0.0f64, |m, t| m.max(*t));
                let residual = (-f2 + u * f + kj * kj * f).abs();
                if scale > 0.0 {
                    worst = worst.max(residual / scale);
                }
            }
        }
    }
    Ok((
        worst < 1e-9,
        format!("max relative residual {worst:.3e} (< 1e-9)"),
    ))
}

fn ac6() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_reflectionless");
    let out = Command::new(exe)
        .args(["verify", "--fuzz", "--seed", "0", "--configs", "50"])
        .output()
        .expect("run the command-line tool");
    let code = out.status.code().unwrap_or(-1);
    let report: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    let total = report["total"].as_u64().unwrap_or(0);
    let failed = report["failed"].as_u64().unwrap_or(u64::MAX);
    let mut names: BTreeMap<String, usize> = BTreeMap::new();
    if let Some(reports) = report["reports"].as_array() {
        for r in reports {
            *names
                .entry(r["name"].as_str().unwrap_or("?").to_string())
                .or_default() += 1;
        }
    }
    let all_kinds = [
        "wronskian_identity",
        "bilinear_derivative",
        "deletion_determinant",
        "addition_determinant",
        "tau_split",
        "seed_wronskian",
    ]
    .iter()
    .all(|k| names.get(*k).copied().unwrap_or(0) == 50);
    Ok((
        code == 0 && failed == 0 && total == 300 && all_kinds,
        format!("{failed} of {total} reports failed over 50 configs, exit code {code}"),
    ))
}

fn ac7() -> Outcome {
    let mut rng = rng(7);
    let (mut ka_dev, mut am_dev, mut spec_dev) = (0.0f64, 0.0f64, 0.0f64);
    let mut mismatches = 0;
    for _ in 0..10 {
        let cfg = random_config(&mut rng, 4);
        let n = cfg.n();
        let mut deleted: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if deleted.is_empty() || deleted.len() == n {
            deleted = vec![rng.gen_range(0..n)];
        }
        let base = |x: f64| potential(&cfg, x);
        let grid = Grid::new(-6.0 / cfg.k()[0], 6.0 / cfg.k()[0], 121)?;

        let am = am_delete(&cfg, &deleted)?;
        let overlaps = EigenOverlaps::new(&cfg, &deleted, false)?;
        for x in grid.points() {
            let engine = generic_am(&base, &overlaps, &AmMode::Delete, None, x, 0)?.potential;
            am_dev = am_dev.max((engine - potential(&am.after, x)?).abs());
        }
        match spectrum_error(&spectrum_of(&am.after)?, am.after.k()) {
            Some(e) => spec_dev = spec_dev.max(e),
            None => mismatches += 1,
        }

        let ka_set: Vec<usize> = if krein_adler_check(n, &deleted) {
            deleted.clone()
        } else {
            vec![n - 1]
        };
        let ka = krein_adler_delete(&cfg, &ka_set, false)?;
        let seeds = ka_set
            .iter()
            .map(|&d| SeedFunction::eigenfunction(&cfg, d))
            .collect::<Result<Vec<_>>>()?;
        for x in grid.points() {
            let engine = darboux_potential(&base, &seeds, x)?;
            ka_dev = ka_dev.max((engine - potential(&ka.after, x)?).abs());
        }
        match spectrum_error(&spectrum_of(&ka.after)?, ka.after.k()) {
            Some(e) => spec_dev = spec_dev.max(e),
            None => mismatches += 1,
        }
    }
    Ok((
        ka_dev < 1e-9 && am_dev < 1e-9 && spec_dev < 1e-3 && mismatches == 0,
        format!(
            "Krein-Adler vs Wronskian engine {ka_dev:.3e}, AM vs overlap engine {am_dev:.3e} \
             (< 1e-9); surviving spectrum error {spec_dev:.3e} (< 1e-3), {mismatches} count mismatches"
        ),
    ))
}

fn ac8() -> Outcome {
    let mut rng = rng(8);
    let mut spec_dev = 0.0f64;
    let mut exact = true;
    for _ in 0..10 {
        let cfg = random_config(&mut rng, 4);
        let mut params = BTreeMap::new();
        for j in 0..cfg.n() {
            if rng.gen_bool(0.6) {
                params.insert(j, 10f64.powf(rng.gen_range(-1.0..1.0)));
            }
        }
        let out = am_add(&cfg, &params)?;
        for j in 0..cfg.n() {
            let expected = match params.get(&j) {
                Some(&e) => cfg.c()[j] * (e / (e + 1.0)),
                None => cfg.c()[j],
            };
            exact &= out.after.c()[j] == expected && out.after.k()[j] == cfg.k()[j];
        }
        let before = spectrum_of(&cfg)?;
        let after = spectrum_of(&out.after)?;
        if before.len() != after.len() {
            spec_dev = f64::INFINITY;
            continue;
        }
        for (a, b) in before.iter().zip(&after) {
            spec_dev = spec_dev.max((a - b).abs());
        }
    }
    Ok((
        spec_dev < 1e-3 && exact,
        format!(
            "spectra before/after differ by {spec_dev:.3e} (< 1e-3); c rescaled by e/(e+1) exactly: {exact}"
        ),
    ))
}

fn ac9() -> Outcome {
    let cfg = sech2_config(2)?;
    let out = darboux_ground(&cfg)?;
    let exact = out.after.k() == [1.0] && out.after.c() == [2.0];
    let rule = CoefficientRule::eigenfunction(cfg.k(), 1)?;
    let mut worst = 0.0f64;
    for x in Grid::new(-8.0, 8.0, 1601)?.points() {
        let t = tau_det(&cfg, &rule, x, 2)?;
        let from_tilde = -2.0 * jet::jet_log_d2(&t.scaled().jet)?;
        let u1 = potential(&out.after, x)?;
        worst = worst.max((u1 - from_tilde).abs());
        worst = worst.max((u1 + 2.0 / x.cosh().powi(2)).abs());
    }
    Ok((
        exact && worst < 1e-10,
        format!(
            "result k = {:?}, c = {:?} (exactly (1), (2): {exact}); max |U1 + 2 (log u~_2)''| {worst:.3e} (< 1e-10)",
            out.after.k(),
            out.after.c()
        ),
    ))
}

fn ac10() -> Outcome {
    let mut rng = rng(10);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let cfg = random_config(&mut rng, 4);
        for x in Grid::new(-6.0, 6.0, 61)?.points() {
            for t in Grid::new(-0.3, 0.3, 7)?.points() {
                worst = worst.max(kdv_residual(&cfg, x, t)?);
            }
        }
    }
    let pair = SolitonConfig::new(vec![1.0, 2.0], vec![1.0, 1.0])?;
    let shift = phase_shift_check(&pair, 3.0)?.max_deviation;
    Ok((
        worst < 1e-8 && shift < 1e-3,
        format!(
            "max KdV residual {worst:.3e} (< 1e-8); phase shift deviation {shift:.3e} (< 1e-3)"
        ),
    ))
}

fn ac11() -> Outcome {
    let mut rng = rng(11);
    let (mut diag, mut off, mut tail) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let cfg = random_config(&mut rng, 3);
        let n = cfg.n();
        let phi = |j: usize, x: f64| {
            eigenfunction(&cfg, j, x, 0)
                .map(|p| p.value())
                .unwrap_or(f64::NAN)
        };
        for j in 0..n {
            for l in j..n {
                let v = quadrature_line(&|x| phi(j, x) * phi(l, x), 1e-12)?;
                if j == l {
                    diag = diag.max((v - 1.0 / cfg.c()[j]).abs());
                } else {
                    off = off.max(v.abs());
                }
                let x0 = rng.gen_range(-3.0..3.0) / cfg.k()[0];
                let q = reflectionless::numerics::quadrature_to_infinity(
                    &|x| phi(j, x) * phi(l, x),
                    x0,
                    1e-12,
                )?;
                tail = tail.max((q - inner_tail(&cfg, j, l, x0)?).abs());
            }
        }
    }
    Ok((
        diag < 1e-8 && off < 1e-8 && tail < 1e-8,
        format!(
            "|(phi_j,phi_j) - 1/c_j| {diag:.3e}, |(phi_j,phi_l)| {off:.3e}, \
             closed-form tail vs quadrature {tail:.3e} (all < 1e-8)"
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("AC1 determinant vs exponential sum", ac1),
        ("AC2 sech^2 reduction", ac2),
        ("AC3 bound spectrum", ac3),
        ("AC4 reflectionless scattering", ac4),
        ("AC5 Schrodinger residual", ac5),
        ("AC6 identity suite", ac6),
        ("AC7 closure of deletions", ac7),
        ("AC8 addition iso-spectrality", ac8),
        ("AC9 ground-state Darboux chain", ac9),
        ("AC10 KdV residual and phase shift", ac10),
        ("AC11 normalization", ac11),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
