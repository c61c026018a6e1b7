use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::{dt_potential, potential, potential_jet, SolitonConfig};

/// `|U_t - 6 U U_x + U_xxx|` at `(x, t)`, with `t` the KdV time `t_3`.
/// Space derivatives come from an order-3 jet, `U_t` from
/// [`dt_potential`].
pub fn kdv_residual(cfg: &SolitonConfig, x: f64, t: f64) -> Result<f64> {
    if cfg.n() == 0 {
        return Ok(0.0);
    }
    let at_t = cfg.clone().with_kdv_time(t);
    let u = potential_jet(&at_t, x, 3)?;
    let c = u.coeffs();
    let (u0, ux, uxxx) = (c[0], c[1], 6.0 * c[3]);
    let ut = dt_potential(&at_t, x)?;
    Ok((ut - 6.0 * u0 * ux + uxxx).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftReport {
    pub t: f64,
    /// Predicted shift `ln((k_2-k_1)^2/(k_2+k_1)^2)`.
    pub a12: f64,
    /// Measured potential minima `[slow, fast]` at `-t` and `+t`.
    pub centers_before: [f64; 2],
    pub centers_after: [f64; 2],
    /// Free-motion centres plus the predicted offsets.
    pub predicted_before: [f64; 2],
    pub predicted_after: [f64; 2],
    pub max_deviation: f64,
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Two-soliton collision: locate the potential minima at `t = -T` and
/// `t = +T` and compare with free motion
/// `x_j(t) = (ln(c_j/2k_j) + 8 k_j^3 t)/(2 k_j)` plus the asymptotic offsets
/// `a12/(2k_2)` for the fast soliton before and `a12/(2k_1)` for the slow
/// one after the collision.
pub fn phase_shift_check(cfg: &SolitonConfig, t: f64) -> Result<PhaseShiftReport> {
    if cfg.n() != 2 {
        return Err(Error::Usage(format!(
            "phase shift needs N = 2, got N = {}",
            cfg.n()
        )));
    }
    let t = t.abs();
    let (k, c) = (cfg.k(), cfg.c());
    let a12 = 2.0 * ((k[1] - k[0]) / (k[1] + k[0])).ln();
    let free = |j: usize, time: f64| {
        ((c[j] / (2.0 * k[j])).ln() + 8.0 * k[j].powi(3) * time) / (2.0 * k[j])
    };
    let predicted_before = [free(0, -t), free(1, -t) + a12 / (2.0 * k[1])];
    let predicted_after = [free(0, t) + a12 / (2.0 * k[0]), free(1, t)];
    for p in [predicted_before, predicted_after] {
        if (p[1] - p[0]).abs() < 5.0 / k[0] {
            return Err(Error::Domain(format!(
                "solitons not separated at t = +-{t}: centres {:.3} and {:.3} closer than 5/k1",
                p[0], p[1]
            )));
        }
    }
    let locate = |time: f64, guess: [f64; 2]| -> Result<[f64; 2]> {
        let at = cfg.clone().with_kdv_time(time);
        let u = |x: f64| potential(&at, x);
        let mut out = [0.0; 2];
        for j in 0..2 {
            let w = 2.0 / k[j];
            out[j] = golden_min(&u, guess[j] - w, guess[j] + w, 1e-9)?;
        }
        Ok(out)
    };
    let centers_before = locate(-t, predicted_before)?;
    let centers_after = locate(t, predicted_after)?;
    let max_deviation = (0..2)
        .flat_map(|j| {
            [
                (centers_before[j] - predicted_before[j]).abs(),
                (centers_after[j] - predicted_after[j]).abs(),
            ]
        })
        .fold(0.0, f64::max);
    Ok(PhaseShiftReport {
        t,
        a12,
        centers_before,
        centers_after,
        predicted_before,
        predicted_after,
        max_deviation,
    })
}
