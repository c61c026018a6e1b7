use super::SeedFunction;
use crate::error::{Error, Result};
use crate::identities::{inner_tail_scaled, inner_tail_scaled_in};
use crate::jet::{self, Jet, JetOf, ScaledJet, ScaledJetOf};
use crate::numerics::{quadrature_from_neg_infinity, quadrature_line, quadrature_to_infinity};
use crate::real::{DoubleDouble, Real};
use crate::soliton::SolitonConfig;

/// Overlap integrals of a family of seed functions.
///
/// Jets are of `<f, g>(x)` and related antiderivatives in `x`; their
/// derivative coefficients come from the product `f g`.
pub trait OverlapProvider: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn seed(&self, j: usize) -> &SeedFunction;

    /// `int_x^inf phi_j phi_l`.
    fn tail(&self, j: usize, l: usize, x: f64, order: usize) -> Result<ScaledJet>;

    /// [`tail`](Self::tail) in double-double precision, for providers that
    /// can evaluate it that way. The overlap determinant is then formed at
    /// that precision, which matters for nearly parallel seeds.
    fn tail_wide(
        &self,
        _j: usize,
        _l: usize,
        _x: f64,
        _order: usize,
    ) -> Option<Result<ScaledJetOf<DoubleDouble>>> {
        None
    }

    /// `(phi_j, phi_l)` over the whole line.
    fn total(&self, j: usize, l: usize) -> Result<f64>;

    /// `<phi_j, phi_l>(x) = int_{-inf}^x phi_j phi_l`.
    fn lower(&self, j: usize, l: usize, x: f64, order: usize) -> Result<ScaledJet> {
        let total = ScaledJet::new(Jet::constant(x, self.total(j, l)?, order), 0.0);
        Ok(total.add(&self.tail(j, l, x, order)?.neg()))
    }

    /// `<phi_j, psi>(x)` for a target solution `psi`.
    fn lower_with(
        &self,
        j: usize,
        target: &SeedFunction,
        x: f64,
        order: usize,
    ) -> Result<ScaledJet> {
        lower_by_quadrature(self.seed(j), target, x, order, 1e-13)
    }
}

fn product_value(a: &SeedFunction, b: &SeedFunction, y: f64) -> f64 {
    match (a.eval(y, 0), b.eval(y, 0)) {
        (Ok(p), Ok(q)) => p.mul(&q).value(),
        _ => f64::NAN,
    }
}

/// Jet of an antiderivative of `a b` with the given value at `x`; `sign`
/// is `+1` for `int_{-inf}^x` and `-1` for `int_x^inf`.
fn antiderivative_jet(
    a: &SeedFunction,
    b: &SeedFunction,
    value: f64,
    sign: f64,
    x: f64,
    order: usize,
) -> Result<ScaledJet> {
    if order == 0 {
        return Ok(ScaledJet::from_jet(Jet::constant(x, value, 0)));
    }
    let prod = a.eval(x, order - 1)?.mul(&b.eval(x, order - 1)?);
    let integrand = prod.to_jet().scale(sign);
    Ok(ScaledJet::from_jet(integrand.integrate(value)))
}

fn lower_by_quadrature(
    a: &SeedFunction,
    b: &SeedFunction,
    x: f64,
    order: usize,
    tol: f64,
) -> Result<ScaledJet> {
    let value = quadrature_from_neg_infinity(&|y| product_value(a, b, y), x, tol)?;
    antiderivative_jet(a, b, value, 1.0, x, order)
}

/// Closed-form overlaps of bound-state eigenfunctions of one configuration.
///
/// With `normalized`, the seeds are `sqrt(c_j) phi_j`, which have unit norm.
pub struct EigenOverlaps {
    cfg: SolitonConfig,
    indices: Vec<usize>,
    seeds: Vec<SeedFunction>,
    normalized: bool,
}

impl EigenOverlaps {
    pub fn new(cfg: &SolitonConfig, indices: &[usize], normalized: bool) -> Result<Self> {
        let seeds = indices
            .iter()
            .map(|&j| {
                let s = SeedFunction::eigenfunction(cfg, j)?;
                if !normalized {
                    return Ok(s);
                }
                let ln_root = 0.5 * cfg.c()[j].ln();
                Ok(SeedFunction::new(
                    format!("phi_hat_{j}"),
                    s.energy,
                    move |x, o| Ok(s.eval(x, o)?.mul_scalar_ln(1.0, ln_root)),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            indices: indices.to_vec(),
            seeds,
            normalized,
        })
    }

    fn ln_weight(&self, j: usize, l: usize) -> f64 {
        if self.normalized {
            0.5 * (self.cfg.c()[self.indices[j]].ln() + self.cfg.c()[self.indices[l]].ln())
        } else {
            0.0
        }
    }
}

impl OverlapProvider for EigenOverlaps {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn seed(&self, j: usize) -> &SeedFunction {
        &self.seeds[j]
    }

    fn tail(&self, j: usize, l: usize, x: f64, order: usize) -> Result<ScaledJet> {
        let t = inner_tail_scaled(&self.cfg, self.indices[j], self.indices[l], x, order)?;
        Ok(t.mul_scalar_ln(1.0, self.ln_weight(j, l)))
    }

    fn tail_wide(
        &self,
        j: usize,
        l: usize,
        x: f64,
        order: usize,
    ) -> Option<Result<ScaledJetOf<DoubleDouble>>> {
        let (a, b) = (self.indices[j], self.indices[l]);
        Some(inner_tail_scaled_in(&self.cfg, a, b, x, order).map(|t| {
            let w = if self.normalized {
                let half = DoubleDouble::from_f64(0.5);
                half * (DoubleDouble::from_f64(self.cfg.c()[a]).ln()
                    + DoubleDouble::from_f64(self.cfg.c()[b]).ln())
            } else {
                DoubleDouble::zero()
            };
            t.mul_scalar_ln(1.0, w)
        }))
    }

    fn total(&self, j: usize, l: usize) -> Result<f64> {
        if self.indices[j] != self.indices[l] {
            return Ok(0.0);
        }
        Ok(if self.normalized {
            1.0
        } else {
            1.0 / self.cfg.c()[self.indices[j]]
        })
    }

    /// Closed form when `target` is an unnormalized eigenfunction of the same
    /// configuration (matched by index and energy).
    fn lower_with(
        &self,
        j: usize,
        target: &SeedFunction,
        x: f64,
        order: usize,
    ) -> Result<ScaledJet> {
        match target.eigen_index {
            Some(m) if m < self.cfg.n() && target.energy == -self.cfg.k()[m].powi(2) => {
                let d = self.indices[j];
                let weight = if self.normalized {
                    0.5 * self.cfg.c()[d].ln()
                } else {
                    0.0
                };
                let tail = inner_tail_scaled(&self.cfg, d, m, x, order)?.mul_scalar_ln(1.0, weight);
                let total = if d == m {
                    (weight - self.cfg.c()[m].ln()).exp()
                } else {
                    0.0
                };
                let total = ScaledJet::new(Jet::constant(x, total, order), 0.0);
                Ok(total.add(&tail.neg()))
            }
            _ => lower_by_quadrature(self.seed(j), target, x, order, 1e-13),
        }
    }
}

/// Overlaps of arbitrary seed functions by adaptive quadrature. The seeds
/// must decay at both ends for `tail` and `total`, and at `-inf` for
/// `lower`.
pub struct QuadratureOverlaps {
    seeds: Vec<SeedFunction>,
    tol: f64,
}

impl QuadratureOverlaps {
    pub fn new(seeds: Vec<SeedFunction>, tol: f64) -> Self {
        Self { seeds, tol }
    }
}

impl OverlapProvider for QuadratureOverlaps {
    fn len(&self) -> usize {
        self.seeds.len()
    }

    fn seed(&self, j: usize) -> &SeedFunction {
        &self.seeds[j]
    }

    fn tail(&self, j: usize, l: usize, x: f64, order: usize) -> Result<ScaledJet> {
        let (a, b) = (&self.seeds[j], &self.seeds[l]);
        let value = quadrature_to_infinity(&|y| product_value(a, b, y), x, self.tol)?;
        antiderivative_jet(a, b, value, -1.0, x, order)
    }

    fn total(&self, j: usize, l: usize) -> Result<f64> {
        let (a, b) = (&self.seeds[j], &self.seeds[l]);
        quadrature_line(&|y| product_value(a, b, y), self.tol)
    }

    fn lower(&self, j: usize, l: usize, x: f64, order: usize) -> Result<ScaledJet> {
        lower_by_quadrature(&self.seeds[j], &self.seeds[l], x, order, self.tol)
    }
}

/// Multiple Abraham-Moses transformation. `Add(e)` carries one `e_j > 0`
/// per seed; `Delete` uses `e_j = (phi_j, phi_j)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AmMode {
    Add(Vec<f64>),
    Delete,
}

#[derive(Debug, Clone)]
pub struct AmImage {
    pub potential: f64,
    pub target: Option<ScaledJet>,
}

type Entry<'a, T> = dyn Fn(usize, usize) -> Result<ScaledJetOf<T>> + 'a;

/// Jet of the overlap matrix `F_jl = e_j delta_jl +- <phi_j, phi_l>`.
fn overlap_matrix<T: Real>(
    overlaps: &dyn OverlapProvider,
    mode: &AmMode,
    x: f64,
    order: usize,
    tail: &Entry<'_, T>,
    lower: &Entry<'_, T>,
) -> Result<Vec<Vec<ScaledJetOf<T>>>> {
    let m = overlaps.len();
    if let AmMode::Add(e) = mode {
        if e.len() != m {
            return Err(Error::Usage(format!(
                "{} addition parameters for {m} seeds",
                e.len()
            )));
        }
        if let Some(bad) = e.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::Validation(format!(
                "addition parameter e = {bad} must be positive"
            )));
        }
    }
    let constant = |v: f64| ScaledJetOf::new(JetOf::constant(x, T::from_f64(v), order), T::zero());
    let mut f = vec![Vec::with_capacity(m); m];
    for j in 0..m {
        for l in 0..m {
            let entry = match mode {
                // e_j delta_jl - <phi_j, phi_l> = tail_jl + (e_j delta_jl - total_jl)
                AmMode::Delete => {
                    let t = tail(j, l)?;
                    if j == l {
                        t
                    } else {
                        t.add(&constant(-overlaps.total(j, l)?))
                    }
                }
                AmMode::Add(e) => {
                    let low = lower(j, l)?;
                    if j == l {
                        low.add(&constant(e[j]))
                    } else {
                        low
                    }
                }
            };
            f[j].push(entry);
        }
    }
    Ok(f)
}

/// `F = S G S` with `S = diag(exp(sigma))` taken from the diagonal.
fn rescale<T: Real>(f: &[Vec<ScaledJetOf<T>>]) -> (Vec<T>, Vec<Vec<JetOf<T>>>) {
    let m = f.len();
    let half = T::from_f64(0.5);
    let sigma: Vec<T> = (0..m)
        .map(|j| {
            let d = &f[j][j];
            if d.value() > T::zero() {
                half * d.ln_abs_value()
            } else {
                T::zero()
            }
        })
        .collect();
    let g = (0..m)
        .map(|j| {
            (0..m)
                .map(|l| {
                    f[j][l]
                        .jet
                        .scale((f[j][l].ln_scale - sigma[j] - sigma[l]).exp())
                })
                .collect()
        })
        .collect();
    (sigma, g)
}

fn cholesky_ok(a: &[Vec<f64>]) -> bool {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// Potential and (optionally) target image after the multiple
/// Abraham-Moses transformation:
/// `U - 2 (log det F)''` and `psi -+ sum_jl phi_j (F^-1)_jl <phi_l, psi>`,
/// upper signs for addition.
pub fn generic_am(
    base: &dyn Fn(f64) -> Result<f64>,
    overlaps: &dyn OverlapProvider,
    mode: &AmMode,
    target: Option<&SeedFunction>,
    x: f64,
    order: usize,
) -> Result<AmImage> {
    let m = overlaps.len();
    let u0 = base(x)?;
    if m == 0 {
        let target = target.map(|t| t.eval(x, order)).transpose()?;
        return Ok(AmImage {
            potential: u0,
            target,
        });
    }
    let work = order.max(2);
    let f = overlap_matrix::<f64>(
        overlaps,
        mode,
        x,
        work,
        &|j, l| overlaps.tail(j, l, x, work),
        &|j, l| overlaps.lower(j, l, x, work),
    )?;
    let (sigma, g) = rescale(&f);
    let values: Vec<Vec<f64>> = g
        .iter()
        .map(|r| r.iter().map(|e| e.value()).collect())
        .collect();
    if !cholesky_ok(&values) {
        return Err(Error::Regularity {
            x,
            reason: "overlap matrix is not positive definite".into(),
        });
    }
    let log_d2 = if overlaps.tail_wide(0, 0, x, 0).is_some() {
        let wide_tail = |j: usize, l: usize| -> Result<ScaledJetOf<DoubleDouble>> {
            overlaps
                .tail_wide(j, l, x, work)
                .expect("provider has wide tails")
        };
        let wide_lower = |j: usize, l: usize| -> Result<ScaledJetOf<DoubleDouble>> {
            let total = DoubleDouble::from_f64(overlaps.total(j, l)?);
            let total = ScaledJetOf::new(JetOf::constant(x, total, work), DoubleDouble::zero());
            Ok(total.add(&wide_tail(j, l)?.neg()))
        };
        let fw = overlap_matrix(overlaps, mode, x, work, &wide_tail, &wide_lower)?;
        jet::jet_log_d2(&jet::det(&rescale(&fw).1)?)?.to_f64()
    } else {
        jet::jet_log_d2(&jet::det(&g)?)?
    };
    let potential = u0 - 2.0 * log_d2;

    let target = match target {
        None => None,
        Some(psi) => {
            let sign = match mode {
                AmMode::Add(_) => -1.0,
                AmMode::Delete => 1.0,
            };
            let g_order: Vec<Vec<Jet>> = g
                .iter()
                .map(|r| r.iter().map(|e| e.truncate(order)).collect())
                .collect();
            let rhs = (0..m)
                .map(|l| {
                    let s = overlaps.lower_with(l, psi, x, order)?;
                    Ok(s.jet.scale((s.ln_scale - sigma[l]).exp()))
                })
                .collect::<Result<Vec<_>>>()?;
            let y = jet::solve(&g_order, &rhs)?;
            let mut image = psi.eval(x, order)?;
            for j in 0..m {
                let phi = overlaps.seed(j).eval(x, order)?;
                let term = ScaledJet::new(&phi.jet * &y[j], phi.ln_scale - sigma[j]);
                image = image.add(&term.mul_scalar_ln(sign, 0.0));
            }
            Some(image)
        }
    };
    Ok(AmImage { potential, target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::potential;
    use crate::transforms::{am_add, am_delete};
    use std::collections::BTreeMap;

    fn cfg() -> SolitonConfig {
        SolitonConfig::new(vec![0.5, 1.2, 1.9], vec![0.8, 3.0, 1.4]).unwrap()
    }

    #[test]
    fn single_deletion_matches_rewrite() {
        let base = cfg();
        let basep = |x: f64| potential(&base, x);
        for d in 0..3 {
            let after = am_delete(&base, &[d]).unwrap().after;
            let ov = EigenOverlaps::new(&base, &[d], false).unwrap();
            for i in 0..=30 {
                let x = -9.0 + 0.6 * i as f64;
                let img = generic_am(&basep, &ov, &AmMode::Delete, None, x, 2).unwrap();
                let expect = potential(&after, x).unwrap();
                assert!((img.potential - expect).abs() < 1e-10, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn single_addition_matches_rewrite() {
        let base = cfg();
        let basep = |x: f64| potential(&base, x);
        let e = 2.5;
        for d in 0..3 {
            let mut p = BTreeMap::new();
            p.insert(d, e);
            let after = am_add(&base, &p).unwrap().after;
            // normalized seeds carry the e/(e+1) rescale
            let ov = EigenOverlaps::new(&base, &[d], true).unwrap();
            for i in 0..=30 {
                let x = -9.0 + 0.6 * i as f64;
                let img = generic_am(&basep, &ov, &AmMode::Add(vec![e]), None, x, 2).unwrap();
                let expect = potential(&after, x).unwrap();
                assert!((img.potential - expect).abs() < 1e-10, "d={d} x={x}");
            }
        }
    }

    #[test]
    fn deleting_an_eigenfunction_maps_another_to_an_eigenfunction() {
        let base = cfg();
        let basep = |x: f64| potential(&base, x);
        let ov = EigenOverlaps::new(&base, &[1], false).unwrap();
        let target = SeedFunction::eigenfunction(&base, 2).unwrap();
        let after = am_delete(&base, &[1]).unwrap().after;
        let k = base.k()[2];
        for &x in &[-3.0, 0.0, 2.0] {
            let img = generic_am(&basep, &ov, &AmMode::Delete, Some(&target), x, 2).unwrap();
            let psi = img.target.unwrap().to_jet();
            let u = potential(&after, x).unwrap();
            let r = -psi.derivative_value(2) + u * psi.value() + k * k * psi.value();
            assert!(r.abs() < 1e-9 * psi.max_abs_coeff().max(1e-3), "x={x}: {r}");
        }
    }
}
