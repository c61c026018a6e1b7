use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::SolitonConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterOptions {
    pub domain_halfwidth: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl ScatterOptions {
    /// Half-width `20/k_1` beyond the outermost soliton centre, relative
    /// tolerance `1e-10`.
    pub fn for_config(cfg: &SolitonConfig) -> Self {
        Self {
            domain_halfwidth: cfg
                .k()
                .first()
                .map_or(20.0, |k1| 20.0 / k1 + cfg.core_reach()),
            ..Self::default()
        }
    }
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            domain_halfwidth: 20.0,
            rtol: 1e-10,
            atol: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub k: f64,
    pub reflection_amp: Complex64,
    pub transmission_amp: Complex64,
    pub unitarity_defect: f64,
    pub steps: usize,
}

type State = [Complex64; 2];

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for &(c, k) in terms {
        out[0] += k[0] * (h * c);
        out[1] += k[1] * (h * c);
    }
    out
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Scattering amplitudes of `-psi'' + U psi = k^2 psi`.
///
/// Integrates from `+L`, where `psi = e^{ikx}` (pure transmitted wave with
/// unit amplitude), leftwards to `-L` and reads off
/// `psi = A e^{ikx} + B e^{-ikx}` there; then `t = 1/A`, `r = B/A`.
/// `potential` is treated as a black box.
pub fn scatter(
    potential: &dyn Fn(f64) -> Result<f64>,
    k: f64,
    opts: &ScatterOptions,
) -> Result<ScatteringResult> {
    if !(k > 0.0) {
        return Err(Error::Usage(format!(
            "scattering wavenumber must be positive, got {k}"
        )));
    }
    let l = opts.domain_halfwidth;
    let ik = Complex64::new(0.0, k);
    let k2 = k * k;
    let rhs = |x: f64, y: &State| -> Result<State> {
        let u = potential(x)?;
        Ok([y[1], y[0] * (u - k2)])
    };

    let mut x = l;
    let mut y: State = [(ik * l).exp(), ik * (ik * l).exp()];
    let mut h = -(0.05 / k.max(1.0)).min(0.05);
    let mut steps = 0;
    let mut k_first = rhs(x, &y)?;
    while x > -l {
        if steps >= opts.max_steps {
            return Err(Error::Solver(format!(
                "scattering integration exceeded {} steps at x = {x}, step {h:e}",
                opts.max_steps
            )));
        }
        if x + h < -l {
            h = -l - x;
        }
        let mut ks: [State; 7] = [k_first; 7];
        for s in 1..7 {
            let terms: Vec<(f64, &State)> = (0..s).map(|j| (A[s][j], &ks[j])).collect();
            let ys = axpy(&y, h, &terms);
            ks[s] = rhs(x + C[s] * h, &ys)?;
        }
        let y5 = axpy(&y, h, &(0..7).map(|j| (B5[j], &ks[j])).collect::<Vec<_>>());
        let y4 = axpy(&y, h, &(0..7).map(|j| (B4[j], &ks[j])).collect::<Vec<_>>());
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let scale = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            err = err.max((y5[i] - y4[i]).norm() / scale);
        }
        if !err.is_finite() {
            return Err(Error::Solver(format!(
                "non-finite error estimate at x = {x}"
            )));
        }
        if err <= 1.0 {
            x += h;
            y = y5;
            k_first = ks[6];
            steps += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 * l {
            return Err(Error::Solver(format!("step size underflow at x = {x}")));
        }
    }

    let e_plus = (ik * x).exp();
    let a = (y[1] + ik * y[0]) / (e_plus * 2.0 * ik);
    let b = e_plus * (ik * y[0] - y[1]) / (2.0 * ik);
    let t = a.inv();
    let r = b / a;
    Ok(ScatteringResult {
        k,
        reflection_amp: r,
        transmission_amp: t,
        unitarity_defect: (r.norm_sqr() + t.norm_sqr() - 1.0).abs(),
        steps,
    })
}

/// `prod_j (ik - k_j) / (ik + k_j)`.
pub fn transmission_product(cfg: &SolitonConfig, k: f64) -> Complex64 {
    let ik = Complex64::new(0.0, k);
    cfg.k().iter().fold(Complex64::new(1.0, 0.0), |acc, &kj| {
        acc * (ik - kj) / (ik + kj)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_line() {
        let zero = |_x: f64| Ok(0.0);
        let s = scatter(&zero, 1.3, &ScatterOptions::default()).unwrap();
        assert!(s.reflection_amp.norm() < 1e-12);
        assert!((s.transmission_amp - 1.0).norm() < 1e-7, "{s:?}");
    }

    #[test]
    fn single_soliton_is_reflectionless() {
        let u = |x: f64| Ok(-2.0 / x.cosh().powi(2));
        let cfg = SolitonConfig::new(vec![1.0], vec![2.0]).unwrap();
        for &k in &[0.5, 1.7, 3.1] {
            let s = scatter(&u, k, &ScatterOptions::for_config(&cfg)).unwrap();
            assert!(s.reflection_amp.norm() < 1e-6);
            assert!(s.unitarity_defect < 1e-6);
            let expected = transmission_product(&cfg, k);
            assert!((s.transmission_amp.arg() - expected.arg()).abs() < 1e-5);
        }
    }

    #[test]
    fn step_potential_reflects() {
        let u = |x: f64| Ok(if x.abs() < 1.0 { 0.5 } else { 0.0 });
        let s = scatter(&u, 1.0, &ScatterOptions::default()).unwrap();
        assert!(s.reflection_amp.norm() > 1e-3);
        assert!(s.unitarity_defect < 1e-6);
    }
}
