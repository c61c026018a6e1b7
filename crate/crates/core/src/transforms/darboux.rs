use num_complex::Complex64;

use super::SeedFunction;
use crate::error::{Error, Result};
use crate::jet::{self, JetOf, ScaledJet, ScaledJetOf};
use crate::real::Real;

/// Jet of `W[f_1, ..., f_M] = det(f_k^(i))` at `x`. The empty Wronskian is 1.
pub fn wronskian(fns: &[SeedFunction], x: f64, order: usize) -> Result<ScaledJet> {
    let m = fns.len();
    if m == 0 {
        return Ok(ScaledJet::one(x, order));
    }
    let columns = fns
        .iter()
        .map(|f| f.eval(x, m - 1 + order))
        .collect::<Result<Vec<_>>>()?;
    wronskian_of(&columns, order)
}

/// Wronskian of functions given as jets of order at least
/// `columns.len() - 1 + order`, all at the same centre.
pub fn wronskian_of<T: Real>(columns: &[ScaledJetOf<T>], order: usize) -> Result<ScaledJetOf<T>> {
    let m = columns.len();
    if m == 0 {
        return Err(Error::Usage(
            "Wronskian of no functions needs a centre".into(),
        ));
    }
    let matrix: Vec<Vec<JetOf<T>>> = (0..m)
        .map(|i| {
            columns
                .iter()
                .map(|col| col.jet.nth_derivative(i, order))
                .collect()
        })
        .collect();
    let ln_scale = columns.iter().fold(T::zero(), |acc, c| acc + c.ln_scale);
    Ok(ScaledJetOf::new(jet::det(&matrix)?, ln_scale))
}

fn nonvanishing(w: ScaledJet, x: f64) -> Result<ScaledJet> {
    if w.jet.value().abs() < jet::DIVISION_THRESHOLD || !w.jet.value().is_finite() {
        return Err(Error::Singularity { x });
    }
    Ok(w)
}

fn ratio(num: &ScaledJet, den: &ScaledJet, x: f64) -> Result<ScaledJet> {
    num.div(den).map_err(|e| match e {
        Error::SingularJet { .. } => Error::Singularity { x },
        other => other,
    })
}

/// `W[seeds, target] / W[seeds]`: the image of `target` under the multiple
/// Darboux transformation with the given seeds, in caller order.
pub fn generic_darboux(
    seeds: &[SeedFunction],
    target: &SeedFunction,
    x: f64,
    order: usize,
) -> Result<ScaledJet> {
    let den = nonvanishing(wronskian(seeds, x, order)?, x)?;
    let mut all = seeds.to_vec();
    all.push(target.clone());
    let num = wronskian(&all, x, order)?;
    ratio(&num, &den, x)
}

/// `W[seeds without seed j] / W[seeds]`, an eigenfunction of the deformed
/// Hamiltonian at the energy of seed `j`.
pub fn deleted_seed_image(
    seeds: &[SeedFunction],
    j: usize,
    x: f64,
    order: usize,
) -> Result<ScaledJet> {
    if j >= seeds.len() {
        return Err(Error::Usage(format!("seed index {j} out of range")));
    }
    let den = nonvanishing(wronskian(seeds, x, order)?, x)?;
    let rest: Vec<SeedFunction> = seeds
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, s)| s.clone())
        .collect();
    let num = wronskian(&rest, x, order)?;
    ratio(&num, &den, x)
}

/// `U(x) - 2 (log |W[seeds]|)''(x)` for a base potential `base`.
pub fn darboux_potential(
    base: &dyn Fn(f64) -> Result<f64>,
    seeds: &[SeedFunction],
    x: f64,
) -> Result<f64> {
    let w = nonvanishing(wronskian(seeds, x, 2)?, x)?;
    let abs = w.jet.scale(w.sign());
    Ok(base(x)? - 2.0 * jet::jet_log_d2(&abs)?)
}

/// Image of the free plane wave `e^{ikx}`, assembled from the images of
/// `cos(kx)` and `sin(kx)`.
pub fn plane_wave_image(seeds: &[SeedFunction], k: f64, x: f64) -> Result<Complex64> {
    let re = generic_darboux(seeds, &SeedFunction::cosine(k), x, 0)?.value();
    let im = generic_darboux(seeds, &SeedFunction::sine(k), x, 0)?.value();
    Ok(Complex64::new(re, im))
}
