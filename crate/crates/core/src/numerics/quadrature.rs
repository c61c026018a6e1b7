use crate::error::{Error, Result};

/// Integrand magnitude below which an infinite tail is truncated.
pub const TAIL_CUTOFF: f64 = 1e-14;

const MAX_DEPTH: usize = 50;
const MAX_EVALS: usize = 4_000_000;

struct Simpson<'a> {
    f: &'a dyn Fn(f64) -> f64,
    evals: usize,
}

impl Simpson<'_> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        self.evals += 1;
        if self.evals > MAX_EVALS {
            return Err(Error::Solver(format!(
                "quadrature exceeded {MAX_EVALS} integrand evaluations"
            )));
        }
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(Error::Solver(format!("integrand is {v} at x = {x}")));
        }
        Ok(v)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && delta.abs() > 15.0 * tol {
                return Err(Error::Solver(format!(
                    "quadrature did not converge on [{a}, {b}] (estimate {delta:e})"
                )));
            }
            return Ok(left + right + delta / 15.0);
        }
        Ok(self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?)
    }
}

/// Adaptive Simpson integral of `f` over `[a, b]` with Richardson
/// extrapolation, to absolute tolerance `tol`.
pub fn quadrature(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return Ok(-quadrature(f, b, a, tol)?);
    }
    let mut s = Simpson { f, evals: 0 };
    // a few fixed panels first so narrow features are not missed
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { lo + h };
        let fa = s.eval(lo)?;
        let fm = s.eval(0.5 * (lo + hi))?;
        let fb = s.eval(hi)?;
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += s.refine(lo, hi, fa, fm, fb, whole, tol / panels as f64, 0)?;
    }
    Ok(total)
}

/// `int_a^inf f`, truncated once `|f|` stays below [`TAIL_CUTOFF`] and the
/// last panel is negligible. `f` must decay at `+inf`.
pub fn quadrature_to_infinity(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    // find where f is last seen to be non-negligible on a geometric probe
    let mut last_big = a;
    let mut step = 1.0;
    while step <= 8192.0 {
        let y = a + step;
        if f(y).abs() >= TAIL_CUTOFF {
            last_big = y;
        }
        step *= 2.0;
    }
    let width = 1.0;
    let mut total = 0.0;
    for i in 0..200_000usize {
        let lo = a + width * i as f64;
        let hi = lo + width;
        let panel_tol = 0.6 * tol / ((i + 1) as f64).powi(2);
        let part = quadrature(f, lo, hi, panel_tol)?;
        total += part;
        let negligible = [lo, 0.5 * (lo + hi), hi]
            .iter()
            .all(|&y| f(y).abs() < TAIL_CUTOFF);
        if hi > last_big && negligible && part.abs() < tol {
            return Ok(total);
        }
    }
    Err(Error::Solver(format!(
        "integrand does not decay to {TAIL_CUTOFF:e} on [{a}, inf)"
    )))
}

/// `int_{-inf}^b f`.
pub fn quadrature_from_neg_infinity(f: &dyn Fn(f64) -> f64, b: f64, tol: f64) -> Result<f64> {
    quadrature_to_infinity(&|y| f(-y), -b, tol)
}

/// `int_{-inf}^inf f`.
pub fn quadrature_line(f: &dyn Fn(f64) -> f64, tol: f64) -> Result<f64> {
    Ok(quadrature_from_neg_infinity(f, 0.0, 0.5 * tol)?
        + quadrature_to_infinity(f, 0.0, 0.5 * tol)?)
}
