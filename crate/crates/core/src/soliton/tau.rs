//! Determinant and exponential-sum evaluations of the tau function
//! `u(x) = det(delta_mn + c_m exp(-(k_m + k_n) x) / (k_m + k_n))`.

use super::{CoefficientRule, SolitonConfig};
use crate::error::{Error, Result};
use crate::jet::{self, JetOf, ScaledJetOf};
use crate::real::Real;

/// Largest soliton number accepted by [`tau_hirota`].
pub const HIROTA_MAX_N: usize = 24;

/// Jet of a tau function at `x`, stored in gauged form:
/// `u(x + h) = exp(gauge_exponent + gauge_slope * h) * jet(h)`.
///
/// Any `exp(a x + b)` gauge drops out of `-2 (log u)''`.
#[derive(Debug, Clone, PartialEq)]
pub struct TauEvalOf<T: Real> {
    pub x: f64,
    pub jet: JetOf<T>,
    pub gauge_exponent: T,
    pub gauge_slope: T,
}

pub type TauEval = TauEvalOf<f64>;

impl<T: Real> TauEvalOf<T> {
    pub fn ln_abs(&self) -> T {
        self.gauge_exponent + self.jet.value().abs().ln()
    }

    pub fn sign(&self) -> f64 {
        self.jet.value().sign()
    }

    /// `u(x)`; overflows to infinity for strongly gauged values.
    pub fn value(&self) -> T {
        self.jet.value() * self.gauge_exponent.exp()
    }

    /// Fold the gauge slope into the jet.
    pub fn scaled(&self) -> ScaledJetOf<T> {
        let shape = JetOf::exp_shape(self.gauge_slope, self.x, self.jet.order());
        ScaledJetOf::new(&self.jet * &shape, self.gauge_exponent)
    }
}

/// A real number stored as `sign * exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: f64,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

/// Non-zero effective coefficients after time flows and the rule.
struct Active<T: Real> {
    k: Vec<T>,
    /// `ln |c_m / (2 k_m)| - 2 k_m x`
    ln_b: Vec<T>,
    sign: Vec<f64>,
    /// `ln ((k_j - k_l)/(k_j + k_l))^2`
    ln_theta: Vec<Vec<T>>,
}

fn active_terms<T: Real>(cfg: &SolitonConfig, rule: &CoefficientRule, x: f64) -> Result<Active<T>> {
    if !x.is_finite() {
        return Err(Error::Range { kx: f64::INFINITY });
    }
    if rule.len() != cfg.n() {
        return Err(Error::Usage(format!(
            "rule of length {} applied to {} coefficients",
            rule.len(),
            cfg.n()
        )));
    }
    let (k_all, c_all) = cfg.parts();
    let two = T::from_f64(2.0);
    let xt = T::from_f64(x);
    let mut k = Vec::new();
    let mut ln_b = Vec::new();
    let mut sign = Vec::new();
    for (m, (&km, &cm)) in k_all.iter().zip(c_all).enumerate() {
        let Some((factor_sign, ln_factor)) = rule.ln_factor::<T>(m) else {
            continue;
        };
        if cm == 0.0 {
            continue;
        }
        let kt = T::from_f64(km);
        let mut ln_c = T::from_f64(cm.abs()).ln() + ln_factor;
        for (&flow, &t) in cfg.times() {
            let mut power = T::one();
            for _ in 0..flow {
                power *= two * kt;
            }
            ln_c += power * T::from_f64(t);
        }
        if !ln_c.is_finite() {
            return Err(Error::Validation(format!(
                "effective c[{m}] has non-finite logarithm {:?}",
                ln_c.to_f64()
            )));
        }
        let lb = ln_c - (two * kt).ln() - two * kt * xt;
        if !lb.is_finite() {
            return Err(Error::Range { kx: (km * x).abs() });
        }
        k.push(kt);
        ln_b.push(lb);
        sign.push(cm.signum() * factor_sign);
    }
    let n = k.len();
    let mut ln_theta = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        for l in 0..n {
            if j != l {
                ln_theta[j][l] = two * ((k[j] - k[l]).abs().ln() - (k[j] + k[l]).ln());
            }
        }
    }
    Ok(Active {
        k,
        ln_b,
        sign,
        ln_theta,
    })
}

/// `ln |b'_m|` for every index relative to the reference set.
fn reflected_weights<T: Real>(active: &Active<T>, reference: &[bool]) -> Vec<T> {
    let n = active.k.len();
    (0..n)
        .map(|m| {
            let coupling = (0..n)
                .filter(|&l| l != m && reference[l])
                .fold(T::zero(), |acc, l| acc + active.ln_theta[m][l]);
            if reference[m] {
                -active.ln_b[m] - coupling
            } else {
                active.ln_b[m] + coupling
            }
        })
        .collect()
}

/// Reference set at which the exponential-sum term `prod b_m prod theta` is
/// locally maximal under single-index flips. Factoring that term out leaves
/// a determinant whose diagonal weights are all at most one in magnitude.
fn reference_set<T: Real>(active: &Active<T>) -> Vec<bool> {
    let n = active.k.len();
    let mut reference: Vec<bool> = active.ln_b.iter().map(|&b| b.to_f64() > 0.0).collect();
    for _ in 0..(4 * n * n + 8) {
        let gains = reflected_weights(active, &reference);
        let best = gains
            .iter()
            .map(|g| g.to_f64())
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        match best {
            Some((m, gain)) if gain > 1e-12 => reference[m] = !reference[m],
            _ => break,
        }
    }
    reference
}

/// Jet of the tau function at `x` with `rule` applied to the (time-flowed)
/// norming constants.
///
/// The determinant is evaluated relative to an adaptively chosen set `L` of
/// "active" solitons: `u = det(B_LL) * det(I + Y)` where `det(B_LL)` has a
/// closed product form and `Y` is the Cauchy-like matrix with wavenumbers
/// `-k_m` for `m` in `L`. With `L` empty this is the plain matrix; with `L`
/// everything it is the x-reflected form. Either way the remaining matrix
/// entries stay bounded and no pair of nearly equal wavenumbers has to
/// cancel inside the elimination.
pub fn tau_det(
    cfg: &SolitonConfig,
    rule: &CoefficientRule,
    x: f64,
    order: usize,
) -> Result<TauEval> {
    tau_det_in(cfg, rule, x, order)
}

/// [`tau_det`] carried out in the scalar type `T`.
pub fn tau_det_in<T: Real>(
    cfg: &SolitonConfig,
    rule: &CoefficientRule,
    x: f64,
    order: usize,
) -> Result<TauEvalOf<T>> {
    let active = active_terms::<T>(cfg, rule, x)?;
    let n = active.k.len();
    if n == 0 {
        return Ok(TauEvalOf {
            x,
            jet: JetOf::one(x, order),
            gauge_exponent: T::zero(),
            gauge_slope: T::zero(),
        });
    }
    let reference = reference_set(&active);
    let weights = reflected_weights(&active, &reference);
    let kappa: Vec<T> = (0..n)
        .map(|m| {
            if reference[m] {
                -active.k[m]
            } else {
                active.k[m]
            }
        })
        .collect();
    let two = T::from_f64(2.0);

    let mut gauge_exponent = T::zero();
    let mut gauge_slope = T::zero();
    let mut sign = 1.0;
    for m in (0..n).filter(|&m| reference[m]) {
        gauge_exponent += active.ln_b[m];
        gauge_slope -= two * active.k[m];
        sign *= active.sign[m];
        for l in ((m + 1)..n).filter(|&l| reference[l]) {
            gauge_exponent += active.ln_theta[m][l];
        }
    }

    let rows: Vec<JetOf<T>> = (0..n)
        .map(|m| {
            let amplitude = T::from_f64(active.sign[m]) * two * kappa[m] * weights[m].exp();
            JetOf::exp_shape(-two * kappa[m], x, order).scale(amplitude)
        })
        .collect();
    let matrix: Vec<Vec<JetOf<T>>> = (0..n)
        .map(|m| {
            (0..n)
                .map(|l| {
                    let mut entry = rows[m].scale(T::one() / (kappa[m] + kappa[l]));
                    if m == l {
                        entry = &entry + &JetOf::one(x, order);
                    }
                    entry
                })
                .collect()
        })
        .collect();
    let det = jet::det(&matrix)?.scale(T::from_f64(sign));

    let mut out = TauEvalOf {
        x,
        jet: det,
        gauge_exponent,
        gauge_slope,
    };
    let c0 = out.jet.value().abs();
    if c0 > T::zero() && c0.is_finite() {
        out.jet = out.jet.scale(T::one() / c0);
        out.gauge_exponent += c0.ln();
    }
    Ok(out)
}

struct SignedLogSum {
    pos: (f64, f64),
    neg: (f64, f64),
}

impl SignedLogSum {
    fn new() -> Self {
        Self {
            pos: (f64::NEG_INFINITY, 0.0),
            neg: (f64::NEG_INFINITY, 0.0),
        }
    }

    fn push(&mut self, exponent: f64, sign: f64) {
        let acc = if sign > 0.0 {
            &mut self.pos
        } else {
            &mut self.neg
        };
        if exponent > acc.0 {
            acc.1 = acc.1 * (acc.0 - exponent).exp() + 1.0;
            acc.0 = exponent;
        } else {
            acc.1 += (exponent - acc.0).exp();
        }
    }

    fn finish(self) -> LogValue {
        let ln_pos = self.pos.0 + self.pos.1.ln();
        let ln_neg = self.neg.0 + self.neg.1.ln();
        if ln_neg == f64::NEG_INFINITY {
            return LogValue {
                ln_abs: ln_pos,
                sign: 1.0,
            };
        }
        if ln_pos == ln_neg {
            return LogValue {
                ln_abs: f64::NEG_INFINITY,
                sign: 0.0,
            };
        }
        let (hi, lo, sign) = if ln_pos > ln_neg {
            (ln_pos, ln_neg, 1.0)
        } else {
            (ln_neg, ln_pos, -1.0)
        };
        LogValue {
            ln_abs: hi + (-(lo - hi).exp()).ln_1p(),
            sign,
        }
    }
}

/// Exponents and signs of all subset terms for the given weights, by a
/// lowest-bit recursion (each entry is a sum of at most `n` pieces).
fn subset_terms(
    eta: &[f64],
    sign: &[f64],
    ln_theta: &dyn Fn(usize, usize) -> f64,
) -> Vec<(f64, f64)> {
    let n = eta.len();
    let mut out = vec![(0.0, 1.0); 1 << n];
    for mask in 1usize..(1 << n) {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut e = out[rest].0 + eta[low];
        let mut bits = rest;
        while bits != 0 {
            let l = bits.trailing_zeros() as usize;
            e += ln_theta(low, l);
            bits &= bits - 1;
        }
        out[mask] = (e, out[rest].1 * sign[low]);
    }
    out
}

/// The tau function as the sum over all `2^N` subsets
/// `exp(sum mu_j eta_j + sum_{j<l} a_jl mu_j mu_l)`, accumulated in log space.
///
/// Independent of [`tau_det`]; used as its oracle.
pub fn tau_hirota(cfg: &SolitonConfig, rule: &CoefficientRule, x: f64) -> Result<LogValue> {
    if cfg.n() > HIROTA_MAX_N {
        return Err(Error::Usage(format!(
            "exponential sum over 2^{} terms exceeds the N <= {HIROTA_MAX_N} budget",
            cfg.n()
        )));
    }
    let active = active_terms::<f64>(cfg, rule, x)?;
    let n = active.k.len();
    let split = n.min(12);
    let theta = |a: usize, b: usize| active.ln_theta[a][b];

    let low_terms = subset_terms(&active.ln_b[..split], &active.sign[..split], &theta);
    let high_n = n - split;
    let mut sum = SignedLogSum::new();
    for (mask_low, &(e_low, s_low)) in low_terms.iter().enumerate() {
        if high_n == 0 {
            sum.push(e_low, s_low);
            continue;
        }
        let eta_high: Vec<f64> = (0..high_n)
            .map(|b| {
                let idx = split + b;
                let mut e = active.ln_b[idx];
                let mut bits = mask_low;
                while bits != 0 {
                    let a = bits.trailing_zeros() as usize;
                    e += active.ln_theta[a][idx];
                    bits &= bits - 1;
                }
                e
            })
            .collect();
        let high_theta = |a: usize, b: usize| active.ln_theta[split + a][split + b];
        let high_terms = subset_terms(&eta_high, &active.sign[split..], &high_theta);
        for &(e_high, s_high) in &high_terms {
            sum.push(e_low + e_high, s_low * s_high);
        }
    }
    Ok(sum.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: &[f64], c: &[f64]) -> SolitonConfig {
        SolitonConfig::new(k.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn single_entry_determinant() {
        let c = cfg(&[1.0], &[2.0]);
        let t = tau_det(&c, &CoefficientRule::identity(1), 0.0, 0).unwrap();
        assert!((t.value() - 2.0).abs() < 1e-15);
        let h = tau_hirota(&c, &CoefficientRule::identity(1), 0.0).unwrap();
        assert!((h.value() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_soliton_sech_squared_parameters() {
        let c = cfg(&[1.0, 2.0], &[6.0, 12.0]);
        let t = tau_det(&c, &CoefficientRule::identity(2), 0.0, 2).unwrap();
        assert!((t.value() - 8.0).abs() < 1e-13, "{}", t.value());
        let h = tau_hirota(&c, &CoefficientRule::identity(2), 0.0).unwrap();
        assert!((h.value() - 8.0).abs() < 1e-13);
    }

    #[test]
    fn empty_configuration() {
        let c = SolitonConfig::empty();
        let h = tau_hirota(&c, &CoefficientRule::identity(0), 3.0).unwrap();
        assert_eq!(h.value(), 1.0);
        let t = tau_det(&c, &CoefficientRule::identity(0), 3.0, 2).unwrap();
        assert_eq!(t.jet.coeffs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn hirota_budget() {
        let k: Vec<f64> = (1..=25).map(|j| j as f64).collect();
        let c = cfg(&k, &[1.0; 25]);
        assert!(matches!(
            tau_hirota(&c, &CoefficientRule::identity(25), 0.0),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn hirota_split_matches_direct_sum() {
        // 14 solitons exercises the two-level enumeration.
        let k: Vec<f64> = (0..14).map(|j| 0.3 + 0.2 * j as f64).collect();
        let c: Vec<f64> = (0..14).map(|j| 0.5 + 0.1 * j as f64).collect();
        let config = cfg(&k, &c);
        let rule = CoefficientRule::identity(14);
        let x = 0.7;
        let h = tau_hirota(&config, &rule, x).unwrap();
        let d = tau_det(&config, &rule, x, 0).unwrap();
        assert!(
            (h.ln_abs - d.ln_abs()).abs() < 1e-11,
            "{} vs {}",
            h.ln_abs,
            d.ln_abs()
        );
    }

    #[test]
    fn signed_rules_agree() {
        let config = cfg(&[0.5, 1.2, 2.0], &[1.5, 0.7, 3.0]);
        for j in 0..3 {
            let rule = CoefficientRule::eigenfunction(config.k(), j).unwrap();
            for &x in &[-6.0, -1.0, 0.0, 0.8, 5.0] {
                let d = tau_det(&config, &rule, x, 0).unwrap();
                let h = tau_hirota(&config, &rule, x).unwrap();
                let dv = d.sign() * (d.ln_abs() - h.ln_abs).exp();
                assert!(
                    (dv - h.sign).abs() < 1e-11,
                    "j={j} x={x}: {dv} vs {}",
                    h.sign
                );
            }
        }
    }

    #[test]
    fn non_finite_x_is_range_error() {
        let c = cfg(&[1.0], &[1.0]);
        assert!(matches!(
            tau_det(&c, &CoefficientRule::identity(1), f64::NAN, 0),
            Err(Error::Range { .. })
        ));
    }
}
