//! Executable checks of the determinant, Wronskian and overlap identities
//! satisfied by soliton tau functions.
//!
//! Proportionality identities are scored by the relative spread
//! (`std / |mean|`) of the pointwise ratio of the two sides; pointwise
//! identities by their largest scaled residual.

mod fuzz;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{self, Jet, JetOf, ScaledJet, ScaledJetOf};
use crate::real::{DoubleDouble, Real};
use crate::soliton::{
    eigenfunction_scaled, eigenfunction_scaled_in, potential, tau_det, tau_det_in, tau_ratio,
    CoefficientRule, Grid, SolitonConfig,
};
use crate::transforms::{c_from_seed_constants, free_wave_jet, wronskian_of};

pub use fuzz::{random_config, run_identity_suite, FuzzOptions};

/// Default tolerance for proportionality identities.
pub const CONSTANCY_TOL: f64 = 1e-9;
/// Default tolerance for pointwise residuals.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Points where either side is smaller than this are excluded.
pub const UNDERFLOW_FLOOR: f64 = 1e-280;

/// Scalar type for the sides of identities that are determinants of nearly
/// singular matrices (Wronskians and Gram matrices of clustered wavenumbers),
/// where f64 elimination alone loses the digits the tolerances need.
type Wide = DoubleDouble;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    /// The identity being checked, as a formula.
    pub equation: String,
    pub grid: Grid,
    pub max_abs_deviation: f64,
    /// `std / |mean|` of the ratio of both sides, for proportionality checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured_constant: Option<f64>,
    pub tolerance: f64,
    pub excluded_points: usize,
    /// Secondary measures that must also stay within `tolerance`.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub pass: bool,
}

impl VerificationReport {
    /// The measure compared against the tolerance.
    pub fn measure(&self) -> f64 {
        self.constancy.unwrap_or(self.max_abs_deviation)
    }

    fn evaluate(mut self) -> Self {
        let evaluated = self.grid.n - self.excluded_points;
        let extras_ok = self.extra.values().all(|v| *v <= self.tolerance);
        self.pass = evaluated > 0 && self.measure() <= self.tolerance && extras_ok;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self.evaluate()
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }
}

/// A signed magnitude `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy)]
struct Signed {
    ln_abs: f64,
    sign: f64,
}

impl Signed {
    fn of<T: Real>(s: &ScaledJetOf<T>) -> Self {
        Self {
            ln_abs: s.ln_abs_value().to_f64(),
            sign: s.sign(),
        }
    }

    fn negligible(&self) -> bool {
        self.sign == 0.0 || self.ln_abs < UNDERFLOW_FLOOR.ln()
    }
}

fn ratio_report(
    name: &str,
    equation: &str,
    grid: &Grid,
    sides: &[(Signed, Signed)],
) -> VerificationReport {
    let ratios: Vec<f64> = sides
        .iter()
        .filter(|(l, r)| !l.negligible() && !r.negligible())
        .map(|(l, r)| l.sign * r.sign * (l.ln_abs - r.ln_abs).exp())
        .collect();
    let excluded = sides.len() - ratios.len();
    let n = ratios.len().max(1) as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let max_dev = ratios
        .iter()
        .map(|r| (r / mean - 1.0).abs())
        .fold(0.0, f64::max);
    VerificationReport {
        name: name.into(),
        equation: equation.into(),
        grid: *grid,
        max_abs_deviation: max_dev,
        constancy: Some(var.sqrt() / mean.abs()),
        measured_constant: Some(mean),
        tolerance: CONSTANCY_TOL,
        excluded_points: excluded,
        extra: BTreeMap::new(),
        context: None,
        pass: false,
    }
    .evaluate()
}

fn residual_report(
    name: &str,
    equation: &str,
    grid: &Grid,
    residuals: &[Option<f64>],
) -> VerificationReport {
    let excluded = residuals.iter().filter(|r| r.is_none()).count();
    let max_dev = residuals.iter().flatten().fold(0.0, |m: f64, r| m.max(*r));
    VerificationReport {
        name: name.into(),
        equation: equation.into(),
        grid: *grid,
        max_abs_deviation: max_dev,
        constancy: None,
        measured_constant: None,
        tolerance: RESIDUAL_TOL,
        excluded_points: excluded,
        extra: BTreeMap::new(),
        context: None,
        pass: false,
    }
    .evaluate()
}

fn check_set(n: usize, set: &[usize]) -> Result<()> {
    for (i, &d) in set.iter().enumerate() {
        if d >= n {
            return Err(Error::Usage(format!("index {d} out of range for N = {n}")));
        }
        if set[..i].contains(&d) {
            return Err(Error::Usage(format!("index {d} repeated")));
        }
    }
    if set.is_empty() {
        return Err(Error::Usage("index set must not be empty".into()));
    }
    Ok(())
}

fn ln_tau(cfg: &SolitonConfig, rule: &CoefficientRule, x: f64) -> Result<Signed> {
    let t = tau_det(cfg, rule, x, 0)?;
    Ok(Signed {
        ln_abs: t.ln_abs(),
        sign: t.sign(),
    })
}

/// `int_x^inf phi_j phi_l = (v~_jl / u) e^{-(k_j+k_l) x} / (k_j + k_l)` as a
/// scaled jet in `x`.
pub fn inner_tail_scaled(
    cfg: &SolitonConfig,
    j: usize,
    l: usize,
    x: f64,
    order: usize,
) -> Result<ScaledJet> {
    inner_tail_scaled_in(cfg, j, l, x, order)
}

/// [`inner_tail_scaled`] carried out in the scalar type `T`.
pub fn inner_tail_scaled_in<T: Real>(
    cfg: &SolitonConfig,
    j: usize,
    l: usize,
    x: f64,
    order: usize,
) -> Result<ScaledJetOf<T>> {
    let rule = CoefficientRule::bilinear(cfg.k(), j, l)?;
    let ksum = T::from_f64(cfg.k()[j]) + T::from_f64(cfg.k()[l]);
    let num = tau_det_in::<T>(cfg, &rule, x, order)?;
    let den = tau_det_in::<T>(cfg, &CoefficientRule::identity(cfg.n()), x, order)?;
    Ok(tau_ratio(&num, &den)?
        .mul_exp_shape(-ksum)
        .mul_scalar_ln(1.0, -ksum * T::from_f64(x) - ksum.ln()))
}

/// `int_x^inf phi_j(y) phi_l(y) dy` in closed form.
pub fn inner_tail(cfg: &SolitonConfig, j: usize, l: usize, x: f64) -> Result<f64> {
    Ok(inner_tail_scaled(cfg, j, l, x, 0)?.value())
}

/// `W[phi_d1, ..., phi_dM] / (u~_D e^{-sum k_d x} / u)` is constant.
pub fn verify_wronskian_identity(
    cfg: &SolitonConfig,
    deleted: &[usize],
    grid: &Grid,
) -> Result<VerificationReport> {
    check_set(cfg.n(), deleted)?;
    let rule = CoefficientRule::deletion(cfg.k(), deleted, 1)?;
    let ident = CoefficientRule::identity(cfg.n());
    let ksum: f64 = deleted.iter().map(|&d| cfg.k()[d]).sum();
    let sides = grid
        .points()
        .into_iter()
        .map(|x| {
            let columns = deleted
                .iter()
                .map(|&d| eigenfunction_scaled_in::<Wide>(cfg, d, x, deleted.len() - 1))
                .collect::<Result<Vec<_>>>()?;
            let lhs = Signed::of(&wronskian_of(&columns, 0)?);
            let num = ln_tau(cfg, &rule, x)?;
            let den = ln_tau(cfg, &ident, x)?;
            let rhs = Signed {
                ln_abs: num.ln_abs - ksum * x - den.ln_abs,
                sign: num.sign * den.sign,
            };
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ratio_report(
        "wronskian_identity",
        "W[phi_d1..phi_dM] ∝ u~_D e^{-sum k_d x} / u",
        grid,
        &sides,
    )
    .with_context(format!("D = {deleted:?}")))
}

/// Local amplitude envelope `sqrt(f^2 + (f'/k)^2)`, non-zero at nodes.
fn envelope(f: &Jet, k: f64) -> f64 {
    let c = f.coeffs();
    (c[0] * c[0] + (c[1] / k).powi(2)).sqrt()
}

/// `phi_j phi_l = -d/dx [(v~_jl/u) e^{-(k_j+k_l)x}/(k_j+k_l)]`.
///
/// The residual is scaled by the size of the compared terms: the product of
/// the local amplitude envelopes plus `(k_j+k_l) |tail|`, the magnitude from
/// which the tail derivative is formed. The unscaled residual is reported as
/// `absolute_deviation` and must also stay within tolerance.
pub fn verify_bilinear_derivative(
    cfg: &SolitonConfig,
    j: usize,
    l: usize,
    grid: &Grid,
) -> Result<VerificationReport> {
    check_set(cfg.n(), &[j])?;
    check_set(cfg.n(), &[l])?;
    let (kj, kl) = (cfg.k()[j], cfg.k()[l]);
    let residuals = grid
        .points()
        .into_iter()
        .map(|x| {
            let pj = eigenfunction_scaled(cfg, j, x, 1)?;
            let pl = eigenfunction_scaled(cfg, l, x, 1)?;
            let tail = inner_tail_scaled(cfg, j, l, x, 1)?;
            // bring everything to the product's scale
            let ln_ref = pj.ln_scale + pl.ln_scale;
            if ln_ref < UNDERFLOW_FLOOR.ln() {
                return Ok(None);
            }
            let prod = pj.jet.coeffs()[0] * pl.jet.coeffs()[0];
            let rel = (tail.ln_scale - ln_ref).exp();
            let dtail = tail.jet.coeffs()[1] * rel;
            let scale = envelope(&pj.jet, kj) * envelope(&pl.jet, kl)
                + (kj + kl) * (tail.jet.coeffs()[0] * rel).abs();
            let residual = (prod + dtail).abs();
            Ok(Some((residual / scale, residual * ln_ref.exp())))
        })
        .collect::<Result<Vec<_>>>()?;
    let scaled: Vec<Option<f64>> = residuals.iter().map(|r| r.map(|r| r.0)).collect();
    let absolute = residuals.iter().flatten().fold(0.0, |m: f64, r| m.max(r.1));
    let mut report = residual_report(
        "bilinear_derivative",
        "phi_j phi_l = -d/dx[(v~_jl/u) e^{-(k_j+k_l)x}/(k_j+k_l)]",
        grid,
        &scaled,
    );
    report.extra.insert("absolute_deviation".into(), absolute);
    Ok(report.evaluate().with_context(format!("j = {j}, l = {l}")))
}

/// Determinant of a symmetric matrix of positive-diagonal scaled entries,
/// with the diagonal magnitudes factored out symmetrically.
fn scaled_det<T: Real>(entries: &[Vec<ScaledJetOf<T>>]) -> Result<Signed> {
    let m = entries.len();
    let half = T::from_f64(0.5);
    let sigma: Vec<T> = (0..m)
        .map(|j| half * entries[j][j].ln_abs_value())
        .collect();
    let x = entries[0][0].center();
    let matrix: Vec<Vec<JetOf<T>>> = (0..m)
        .map(|j| {
            (0..m)
                .map(|l| {
                    let e = &entries[j][l];
                    let v = e.jet.value() * (e.ln_scale - sigma[j] - sigma[l]).exp();
                    JetOf::constant(x, v, 0)
                })
                .collect()
        })
        .collect();
    let det = jet::det(&matrix)?.value();
    let sigma_sum = sigma.iter().fold(T::zero(), |acc, &s| acc + s);
    Ok(Signed {
        ln_abs: (det.abs().ln() + T::from_f64(2.0) * sigma_sum).to_f64(),
        sign: det.sign(),
    })
}

/// `det(int_x^inf phi_dj phi_dl) ∝ (w~_D/u) e^{-2 sum k_d x}`.
pub fn verify_deletion_determinant(
    cfg: &SolitonConfig,
    deleted: &[usize],
    grid: &Grid,
) -> Result<VerificationReport> {
    check_set(cfg.n(), deleted)?;
    let rule = CoefficientRule::deletion(cfg.k(), deleted, 2)?;
    let ident = CoefficientRule::identity(cfg.n());
    let ksum: f64 = deleted.iter().map(|&d| cfg.k()[d]).sum();
    let sides = grid
        .points()
        .into_iter()
        .map(|x| {
            let entries = deleted
                .iter()
                .map(|&a| {
                    deleted
                        .iter()
                        .map(|&b| inner_tail_scaled_in::<Wide>(cfg, a, b, x, 0))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let lhs = scaled_det(&entries)?;
            let num = ln_tau(cfg, &rule, x)?;
            let den = ln_tau(cfg, &ident, x)?;
            let rhs = Signed {
                ln_abs: num.ln_abs - den.ln_abs - 2.0 * ksum * x,
                sign: num.sign * den.sign,
            };
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ratio_report(
        "deletion_determinant",
        "det(int_x^inf phi_dj phi_dl) ∝ (w~_D/u) e^{-2 sum k_d x}",
        grid,
        &sides,
    )
    .with_context(format!("D = {deleted:?}")))
}

/// `det(e_j delta_jl + <phi^_dj, phi^_dl>) ∝ z~_D/u` with the unit-norm
/// eigenfunctions `phi^_j = sqrt(c_j) phi_j`.
pub fn verify_addition_determinant(
    cfg: &SolitonConfig,
    added: &[usize],
    e: &[f64],
    grid: &Grid,
) -> Result<VerificationReport> {
    check_set(cfg.n(), added)?;
    if e.len() != added.len() {
        return Err(Error::Usage(format!(
            "{} addition parameters for {} indices",
            e.len(),
            added.len()
        )));
    }
    let params: BTreeMap<usize, f64> = added.iter().copied().zip(e.iter().copied()).collect();
    let rule = CoefficientRule::addition(cfg.n(), &params)?;
    let ident = CoefficientRule::identity(cfg.n());
    let m = added.len();
    let sides = grid
        .points()
        .into_iter()
        .map(|x| {
            let mut matrix = vec![Vec::with_capacity(m); m];
            for a in 0..m {
                for b in 0..m {
                    let (da, db) = (added[a], added[b]);
                    let w = 0.5 * (cfg.c()[da].ln() + cfg.c()[db].ln());
                    let tail = inner_tail_scaled(cfg, da, db, x, 0)?.mul_scalar_ln(1.0, w);
                    let delta = if a == b { 1.0 + e[a] } else { 0.0 };
                    matrix[a].push(Jet::constant(x, delta - tail.value(), 0));
                }
            }
            let det = jet::det(&matrix)?.value();
            let lhs = Signed {
                ln_abs: det.abs().ln(),
                sign: det.signum(),
            };
            let num = ln_tau(cfg, &rule, x)?;
            let den = ln_tau(cfg, &ident, x)?;
            let rhs = Signed {
                ln_abs: num.ln_abs - den.ln_abs,
                sign: num.sign * den.sign,
            };
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ratio_report(
        "addition_determinant",
        "det(e_j delta_jl + <phi^_dj, phi^_dl>) ∝ z~_D/u",
        grid,
        &sides,
    )
    .with_context(format!("D = {added:?}, e = {e:?}")))
}

/// `u = u|_{c_j -> 0} + (c_j/2k_j) e^{-2k_j x} w~_j`, relative residual.
pub fn verify_tau_split(cfg: &SolitonConfig, j: usize, grid: &Grid) -> Result<VerificationReport> {
    check_set(cfg.n(), &[j])?;
    let (kj, cj) = (cfg.k()[j], cfg.c()[j]);
    let ident = CoefficientRule::identity(cfg.n());
    let dropped = CoefficientRule::drop_soliton(cfg.n(), j)?;
    let squared = CoefficientRule::squared(cfg.k(), j)?;
    let residuals = grid
        .points()
        .into_iter()
        .map(|x| {
            let u = ln_tau(cfg, &ident, x)?;
            let a = ln_tau(cfg, &dropped, x)?;
            let w = ln_tau(cfg, &squared, x)?;
            let b = (cj / (2.0 * kj)).ln() - 2.0 * kj * x + w.ln_abs;
            // (a + b) / u - 1 with everything positive
            let hi = a.ln_abs.max(b);
            let sum = hi + ((a.ln_abs - hi).exp() + (b - hi).exp()).ln();
            Ok(Some((sum - u.ln_abs).exp_m1().abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(residual_report(
        "tau_split",
        "u = u|_{c_j=0} + (c_j/2k_j) e^{-2k_j x} w~_j",
        grid,
        &residuals,
    )
    .with_context(format!("j = {j}")))
}

/// For free seeds `psi_j = e^{k_j x} + c~_j e^{-k_j x}` with alternating
/// signs: `W[psi] = prod_{j>l}(k_j - k_l) e^{sum k x} u` for the matched
/// configuration, the Wronskian is positive, and `-2 (log W)''` equals the
/// soliton potential.
///
/// The report's main measure is `max |W / (prod dk e^{sum k x} u) - 1|`;
/// `extra` carries the largest potential mismatch and the number of grid
/// points with a non-positive Wronskian.
pub fn verify_seed_wronskian(
    k: &[f64],
    c_tilde: &[f64],
    grid: &Grid,
) -> Result<VerificationReport> {
    let c = c_from_seed_constants(k, c_tilde)?;
    let cfg = SolitonConfig::new(k.to_vec(), c)?;
    let mut ln_dk = 0.0;
    for j in 0..k.len() {
        for l in 0..j {
            ln_dk += (k[j] - k[l]).ln();
        }
    }
    let ksum: f64 = k.iter().sum();
    let ident = CoefficientRule::identity(k.len());
    let mut nonpositive = 0usize;
    let mut potential_dev = 0.0f64;
    let mut residuals = Vec::new();
    for x in grid.points() {
        let columns: Vec<ScaledJetOf<Wide>> = k
            .iter()
            .zip(c_tilde)
            .map(|(&kj, &ct)| free_wave_jet(kj, ct, x, k.len() + 1))
            .collect();
        let w = wronskian_of(&columns, 2)?;
        if w.sign() <= 0.0 {
            nonpositive += 1;
            residuals.push(None);
            continue;
        }
        let u = ln_tau(&cfg, &ident, x)?;
        let ratio = (w.ln_abs_value().to_f64() - ln_dk - ksum * x - u.ln_abs).exp_m1();
        residuals.push(Some(ratio.abs()));
        let uw = -2.0 * jet::jet_log_d2(&w.jet)?.to_f64();
        let us = potential(&cfg, x)?;
        potential_dev = potential_dev.max((uw - us).abs());
    }
    let mut report = residual_report(
        "seed_wronskian",
        "W[psi_1..psi_N] = prod_{j>l}(k_j-k_l) e^{sum k x} u",
        grid,
        &residuals,
    );
    report.tolerance = CONSTANCY_TOL;
    report
        .extra
        .insert("potential_deviation".into(), potential_dev);
    report
        .extra
        .insert("nonpositive_points".into(), nonpositive as f64);
    Ok(report
        .evaluate()
        .with_context(format!("k = {k:?}, c~ = {c_tilde:?}")))
}

/// Every identity on one configuration with a representative choice of
/// indices: each single index, the full index set, and all pairs for the
/// bilinear form.
pub fn verify_all(cfg: &SolitonConfig, grid: &Grid) -> Result<Vec<VerificationReport>> {
    let n = cfg.n();
    let mut out = Vec::new();
    if n == 0 {
        return Ok(out);
    }
    let full: Vec<usize> = (0..n).collect();
    let mut sets: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    if n > 1 {
        sets.push(full.clone());
    }
    for d in &sets {
        if crate::transforms::krein_adler_check(n, d) || d.len() == 1 {
            out.push(verify_wronskian_identity(cfg, d, grid)?);
        }
    }
    for j in 0..n {
        for l in j..n {
            out.push(verify_bilinear_derivative(cfg, j, l, grid)?);
        }
    }
    for d in &sets {
        out.push(verify_deletion_determinant(cfg, d, grid)?);
    }
    for d in &sets {
        out.push(verify_addition_determinant(
            cfg,
            d,
            &vec![1.0; d.len()],
            grid,
        )?);
    }
    for j in 0..n {
        out.push(verify_tau_split(cfg, j, grid)?);
    }
    let c_tilde = crate::transforms::seed_constants_from_c(cfg);
    out.push(verify_seed_wronskian(cfg.k(), &c_tilde, grid)?);
    Ok(out)
}
