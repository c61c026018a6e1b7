use super::{tau_det, tau_det_in, CoefficientRule, SolitonConfig, TauEval, TauEvalOf};
use crate::error::{Error, Result};
use crate::jet::{self, Jet, JetOf, ScaledJet, ScaledJetOf};
use crate::real::Real;

/// `num / den` as a scaled jet, with both gauges folded in.
pub fn tau_ratio<T: Real>(num: &TauEvalOf<T>, den: &TauEvalOf<T>) -> Result<ScaledJetOf<T>> {
    let shape = JetOf::exp_shape(num.gauge_slope - den.gauge_slope, num.x, num.jet.order());
    let q = jet::jet_div(&(&num.jet * &shape), &den.jet)?;
    Ok(ScaledJetOf::new(q, num.gauge_exponent - den.gauge_exponent))
}

fn identity_tau(cfg: &SolitonConfig, x: f64, order: usize) -> Result<TauEval> {
    tau_det(cfg, &CoefficientRule::identity(cfg.n()), x, order)
}

/// Jet of `log|u|'` then differentiated once more: the potential jet
/// `U = -2 (log u)''` to the requested order.
pub fn potential_jet(cfg: &SolitonConfig, x: f64, order: usize) -> Result<Jet> {
    let tau = identity_tau(cfg, x, order + 2)?;
    let dlog = jet::log_derivative(&tau.jet)?;
    Ok(dlog.derivative().scale(-2.0))
}

/// `U(x) = -2 d^2/dx^2 log u(x)`.
///
/// Singular parameter sets (sign-changing `u`) are evaluated as
/// `-2 (log|u|)''`.
pub fn potential(cfg: &SolitonConfig, x: f64) -> Result<f64> {
    let tau = identity_tau(cfg, x, 2)?;
    let a = if tau.jet.value() < 0.0 {
        tau.jet.scale(-1.0)
    } else {
        tau.jet
    };
    if a.value() == 0.0 {
        return Err(Error::SingularJet {
            center: x,
            value: 0.0,
        });
    }
    Ok(-2.0 * jet::jet_log_d2(&a)?)
}

fn check_index(cfg: &SolitonConfig, j: usize) -> Result<()> {
    if j >= cfg.n() {
        Err(Error::Usage(format!(
            "eigenfunction index {j} out of range for N = {}",
            cfg.n()
        )))
    } else {
        Ok(())
    }
}

/// Eigenfunction `phi_j = u~_j / u * exp(-k_j x)` as a scaled jet, safe far
/// outside the soliton cores.
pub fn eigenfunction_scaled(
    cfg: &SolitonConfig,
    j: usize,
    x: f64,
    order: usize,
) -> Result<ScaledJet> {
    eigenfunction_scaled_in(cfg, j, x, order)
}

/// [`eigenfunction_scaled`] carried out in the scalar type `T`.
pub fn eigenfunction_scaled_in<T: Real>(
    cfg: &SolitonConfig,
    j: usize,
    x: f64,
    order: usize,
) -> Result<ScaledJetOf<T>> {
    check_index(cfg, j)?;
    let kj = T::from_f64(cfg.k()[j]);
    let rule = CoefficientRule::eigenfunction(cfg.k(), j)?;
    let num = tau_det_in::<T>(cfg, &rule, x, order)?;
    let den = tau_det_in::<T>(cfg, &CoefficientRule::identity(cfg.n()), x, order)?;
    Ok(tau_ratio(&num, &den)?
        .mul_exp_shape(-kj)
        .mul_scalar_ln(1.0, -kj * T::from_f64(x)))
}

/// Jet of the j-th bound-state eigenfunction (zero-based `j`), normalized by
/// `phi_j(x) exp(k_j x) -> 1` as `x -> +inf`. Then `(phi_j, phi_j) = 1/c_j`.
pub fn eigenfunction(cfg: &SolitonConfig, j: usize, x: f64, order: usize) -> Result<Jet> {
    Ok(eigenfunction_scaled(cfg, j, x, order)?.to_jet())
}

/// `dU/dt_3` at the configuration's current times.
///
/// With `c_j(t) = c_j exp(8 k_j^3 t)`, `u` is affine in each `c_j` so
/// `u_t / u = sum_j 8 k_j^3 (c_j/2k_j) e^{-2k_j x} w~_j / u`, and
/// `U_t = -2 (u_t/u)''`.
pub fn dt_potential(cfg: &SolitonConfig, x: f64) -> Result<f64> {
    let flowed = cfg.apply_time_flows()?;
    if flowed.n() == 0 {
        return Ok(0.0);
    }
    let den = identity_tau(&flowed, x, 2)?;
    let mut total: Option<ScaledJet> = None;
    for j in 0..flowed.n() {
        let (kj, cj) = (flowed.k()[j], flowed.c()[j]);
        let rule = CoefficientRule::squared(flowed.k(), j)?;
        let num = tau_det(&flowed, &rule, x, 2)?;
        let term = tau_ratio(&num, &den)?
            .mul_exp_shape(-2.0 * kj)
            .mul_scalar_ln(
                1.0,
                (8.0 * kj.powi(3) * cj / (2.0 * kj)).ln() - 2.0 * kj * x,
            );
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term),
        });
    }
    let s = total.expect("n >= 1").to_jet();
    Ok(-2.0 * 2.0 * s.coeffs()[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: &[f64], c: &[f64]) -> SolitonConfig {
        SolitonConfig::new(k.to_vec(), c.to_vec()).unwrap()
    }

    fn sech2_config(n: usize) -> SolitonConfig {
        let fact = |m: usize| (1..=m).map(|i| i as f64).product::<f64>();
        let k = (1..=n).map(|j| j as f64).collect();
        let c = (1..=n)
            .map(|j| fact(n + j) / (fact(j) * fact(j - 1) * fact(n - j)))
            .collect();
        SolitonConfig::new(k, c).unwrap()
    }

    #[test]
    fn single_soliton_values() {
        let c = cfg(&[1.0], &[2.0]);
        assert!((potential(&c, 0.0).unwrap() + 2.0).abs() < 1e-14);
        let phi = eigenfunction(&c, 0, 0.0, 0).unwrap();
        assert!((phi.value() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sech_squared_reduction() {
        for n in 1..=5 {
            let c = sech2_config(n);
            let nn = (n * (n + 1)) as f64;
            for i in 0..=160 {
                let x = -8.0 + 0.1 * i as f64;
                let u = potential(&c, x).unwrap();
                let exact = -nn / x.cosh().powi(2);
                assert!((u - exact).abs() < 1e-10, "N={n} x={x}: {u} vs {exact}");
            }
        }
    }

    #[test]
    fn potential_vanishes_far_out() {
        let c = cfg(&[0.5, 1.3, 2.2], &[0.3, 4.0, 1.1]);
        for &x in &[-60.0, 60.0] {
            assert!(potential(&c, x).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn eigenfunction_asymptote_and_ground_state_sign() {
        let c = cfg(&[0.6, 1.1, 1.9], &[2.0, 0.5, 3.0]);
        for j in 0..3 {
            let kj = c.k()[j];
            let far = eigenfunction_scaled(&c, j, 40.0 / kj, 0).unwrap();
            let tail = (far.ln_abs_value() + kj * 40.0 / kj).exp() * far.sign();
            assert!((tail - 1.0).abs() < 1e-10, "j={j}: {tail}");
        }
        for i in 0..200 {
            let x = -20.0 + 0.2 * i as f64;
            assert!(eigenfunction(&c, 2, x, 0).unwrap().value() > 0.0);
        }
    }

    #[test]
    fn schrodinger_residual() {
        let c = cfg(&[0.4, 0.9, 2.1], &[1.0, 7.0, 0.2]);
        for j in 0..3 {
            let kj = c.k()[j];
            for i in 0..41 {
                let x = -10.0 + 0.5 * i as f64;
                let phi = eigenfunction_scaled(&c, j, x, 2).unwrap().to_jet();
                let u = potential(&c, x).unwrap();
                let d2 = phi.derivative_value(2);
                let r = -d2 + u * phi.value() + kj * kj * phi.value();
                let scale = phi.max_abs_coeff() * (1.0 + u.abs() + kj * kj);
                assert!(r.abs() <= 1e-11 * scale, "j={j} x={x}: {r}");
            }
        }
    }

    #[test]
    fn translation_gauge() {
        let d = 0.37;
        let k = 1.3;
        let a = cfg(&[k], &[0.8]);
        let b = cfg(&[k], &[0.8 * (2.0 * k * d).exp()]);
        for &x in &[-2.0, 0.0, 1.5] {
            let ua = potential(&a, x).unwrap();
            let ub = potential(&b, x + d).unwrap();
            assert!((ua - ub).abs() < 1e-12);
        }
    }

    #[test]
    fn dt_potential_matches_finite_difference() {
        let base = cfg(&[0.5, 1.0, 1.6], &[1.3, 0.4, 2.5]);
        let h = 1e-5;
        for &x in &[-3.0, -0.5, 0.0, 1.2, 4.0] {
            let analytic = dt_potential(&base, x).unwrap();
            let at = |t: f64| potential(&base.clone().with_kdv_time(t), x).unwrap();
            // fourth-order central difference
            let fd = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            assert!((analytic - fd).abs() < 1e-7, "x={x}: {analytic} vs {fd}");
        }
        assert_eq!(dt_potential(&SolitonConfig::empty(), 0.3).unwrap(), 0.0);
    }
}
