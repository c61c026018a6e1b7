use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::SolitonConfig;

/// Largest `|U|` tolerated at the ends of a truncated domain.
pub const BOUNDARY_DECAY: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Negative eigenvalues, ascending.
    pub energies: Vec<f64>,
    pub grid_step: f64,
    pub domain_halfwidth: f64,
}

/// Default truncation: `12 / k_1` beyond the outermost soliton centre (or 12
/// for the empty configuration).
pub fn default_halfwidth(cfg: &SolitonConfig) -> f64 {
    cfg.k()
        .first()
        .map_or(12.0, |k1| 12.0 / k1 + cfg.core_reach())
}

/// Smallest halfwidth of the form `start * 1.25^n` at which `|U|` has fallen
/// below [`BOUNDARY_DECAY`] at both ends.
///
/// Only the ends are probed, so `start` must already contain every well.
pub fn fit_halfwidth(potential: &dyn Fn(f64) -> Result<f64>, start: f64) -> Result<f64> {
    let mut l = start;
    for _ in 0..60 {
        let (left, right) = (potential(-l)?.abs(), potential(l)?.abs());
        if left < BOUNDARY_DECAY && right < BOUNDARY_DECAY {
            return Ok(l);
        }
        l *= 1.25;
    }
    Err(Error::DomainTooSmall {
        x: l,
        value: potential(l)?.abs().max(potential(-l)?.abs()),
        threshold: BOUNDARY_DECAY,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix below `lambda`
/// (Sturm sequence count).
fn count_below(diag: &[f64], off2: f64, lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &d) in diag.iter().enumerate() {
        q = if i == 0 {
            d - lambda
        } else {
            d - lambda - off2 / q
        };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + lambda.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Negative eigenvalues of `-d^2/dx^2 + U` on `[-L, L]` with Dirichlet ends,
/// from the three-point finite-difference Hamiltonian with step `h`.
///
/// `potential` is treated as a black box.
pub fn bound_spectrum(
    potential: &(dyn Fn(f64) -> Result<f64> + Sync),
    domain_halfwidth: f64,
    grid_step: f64,
) -> Result<SpectrumResult> {
    let l = domain_halfwidth;
    if !(l > 0.0 && grid_step > 0.0 && grid_step < l) {
        return Err(Error::Usage(format!(
            "bad spectrum domain: halfwidth {l}, step {grid_step}"
        )));
    }
    for x in [-l, l] {
        let v = potential(x)?;
        if !(v.abs() < BOUNDARY_DECAY) {
            return Err(Error::DomainTooSmall {
                x,
                value: v.abs(),
                threshold: BOUNDARY_DECAY,
            });
        }
    }
    let intervals = (2.0 * l / grid_step).round() as usize;
    let h = 2.0 * l / intervals as f64;
    let inv_h2 = 1.0 / (h * h);
    let diag = (1..intervals)
        .into_par_iter()
        .map(|i| Ok(2.0 * inv_h2 + potential(-l + h * i as f64)?))
        .collect::<Result<Vec<f64>>>()?;
    let off2 = inv_h2 * inv_h2;

    let lower = diag.iter().fold(0.0f64, |m, d| m.min(d - 2.0 * inv_h2)) - 1.0;
    let count = count_below(&diag, off2, 0.0);
    let energies = (0..count)
        .into_par_iter()
        .map(|idx| {
            // idx-th eigenvalue: smallest lambda with count_below > idx
            let (mut lo, mut hi) = (lower, 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if count_below(&diag, off2, mid) > idx {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect();
    Ok(SpectrumResult {
        energies,
        grid_step: h,
        domain_halfwidth: l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sech_squared_levels() {
        let u = |x: f64| Ok(-6.0 / x.cosh().powi(2));
        let s = bound_spectrum(&u, 12.0, 1e-3).unwrap();
        assert_eq!(s.energies.len(), 2);
        assert!((s.energies[0] + 4.0).abs() < 5e-4);
        assert!((s.energies[1] + 1.0).abs() < 5e-4);
    }

    #[test]
    fn free_and_undecayed() {
        let zero = |_x: f64| Ok(0.0);
        assert!(bound_spectrum(&zero, 10.0, 1e-2)
            .unwrap()
            .energies
            .is_empty());
        let wide = |x: f64| Ok(-1.0 / (1.0 + x * x));
        assert!(matches!(
            bound_spectrum(&wide, 10.0, 1e-2),
            Err(Error::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn fitted_halfwidth_reaches_the_decayed_region() {
        let u = |x: f64| Ok(-2.0 / (x - 10.0).cosh().powi(2));
        let l = fit_halfwidth(&u, 12.0).unwrap();
        assert!(l > 20.0 && l < 30.0, "{l}");
        assert_eq!(fit_halfwidth(&u, 80.0).unwrap(), 80.0);
        let s = bound_spectrum(&u, l, 1e-3).unwrap();
        assert_eq!(s.energies.len(), 1);
        assert!((s.energies[0] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn default_halfwidth_covers_displaced_solitons() {
        // centre at ln(c/2k)/(2k) = 30
        let cfg = SolitonConfig::new(vec![1.0], vec![2.0 * 60f64.exp()]).unwrap();
        assert!((default_halfwidth(&cfg) - 42.0).abs() < 1e-9);
        assert_eq!(default_halfwidth(&SolitonConfig::empty()), 12.0);
    }

    #[test]
    fn second_order_convergence() {
        let u = |x: f64| Ok(-6.0 / x.cosh().powi(2));
        let e1 = bound_spectrum(&u, 12.0, 0.02).unwrap().energies[0] + 4.0;
        let e2 = bound_spectrum(&u, 12.0, 0.01).unwrap().energies[0] + 4.0;
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "{ratio}");
    }
}
