//! Deformations of soliton potentials.
//!
//! The deletion and addition schemes are closed-form rewrites of the norming
//! constants. The generic multiple Darboux and Abraham-Moses engines work on
//! arbitrary seed functions and serve as independent routes to the same
//! potentials.

mod am;
mod darboux;
mod seed;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::{CoefficientRule, SolitonConfig};

pub use am::{generic_am, AmImage, AmMode, EigenOverlaps, OverlapProvider, QuadratureOverlaps};
pub use darboux::{
    darboux_potential, deleted_seed_image, generic_darboux, plane_wave_image, wronskian,
    wronskian_of,
};
pub use seed::{c_from_seed_constants, free_wave_jet, seed_constants_from_c, SeedFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    DarbouxGround,
    KreinAdler,
    AmDelete,
    AmAdd,
    GenericDarboux,
    GenericAm,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scheme::DarbouxGround => "darboux_ground",
            Scheme::KreinAdler => "krein_adler",
            Scheme::AmDelete => "am_delete",
            Scheme::AmAdd => "am_add",
            Scheme::GenericDarboux => "generic_darboux",
            Scheme::GenericAm => "generic_am",
        };
        f.write_str(name)
    }
}

/// Outcome of a closed-form transformation.
///
/// `after` keeps the hierarchy times of `before`: the rewrite factors do not
/// depend on time, so they commute with the flows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformResult {
    pub before: SolitonConfig,
    pub after: SolitonConfig,
    pub scheme: Scheme,
    /// Zero-based deleted indices, ascending.
    pub deleted: Vec<usize>,
    pub xi_exponent: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub am_params: Option<BTreeMap<usize, f64>>,
    /// Set when the Krein-Adler condition was overridden; `after` may then
    /// carry non-positive constants and is not a valid configuration.
    pub singular: bool,
}

fn deletion_set(n: usize, deleted: &[usize]) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = deleted.iter().copied().collect();
    if set.len() != deleted.len() {
        return Err(Error::Usage("deleted indices must be distinct".into()));
    }
    if let Some(&bad) = set.iter().find(|&&d| d >= n) {
        return Err(Error::Usage(format!(
            "deleted index {bad} out of range for N = {n}"
        )));
    }
    Ok(set.into_iter().collect())
}

/// Apply the deletion rule with exponent `xi` and drop the deleted solitons.
fn delete_with(
    cfg: &SolitonConfig,
    deleted: &[usize],
    xi: u32,
    scheme: Scheme,
    validate: bool,
) -> Result<TransformResult> {
    let deleted = deletion_set(cfg.n(), deleted)?;
    let rule = CoefficientRule::deletion(cfg.k(), &deleted, xi)?;
    let c_new = rule.apply(cfg.c())?;
    let (k, c): (Vec<f64>, Vec<f64>) = (0..cfg.n())
        .filter(|m| !deleted.contains(m))
        .map(|m| (cfg.k()[m], c_new[m]))
        .unzip();
    let after = if validate {
        SolitonConfig::new(k, c)?
    } else {
        SolitonConfig::new_unchecked(k, c)
    };
    let after = after.with_times(cfg.times().clone())?;
    Ok(TransformResult {
        before: cfg.clone(),
        after,
        scheme,
        deleted,
        xi_exponent: Some(xi),
        am_params: None,
        singular: !validate,
    })
}

/// Delete the ground state (the largest `k`) by a single Darboux step.
/// The result is again a soliton potential, with `c_m` rescaled by
/// `(k_N - k_m)/(k_N + k_m)`.
pub fn darboux_ground(cfg: &SolitonConfig) -> Result<TransformResult> {
    if cfg.n() == 0 {
        return Err(Error::Usage("no bound state to delete from N = 0".into()));
    }
    let mut out = delete_with(cfg, &[cfg.n() - 1], 1, Scheme::DarbouxGround, true)?;
    out.singular = false;
    Ok(out)
}

/// First zero-based index `m` at which `prod_j (d_j - m) < 0`, if any.
pub fn krein_adler_violation(n: usize, deleted: &[usize]) -> Option<usize> {
    (0..n).find(|&m| {
        deleted
            .iter()
            .map(|&d| d as f64 - m as f64)
            .product::<f64>()
            < 0.0
    })
}

/// The condition `prod_j (d_j - m) >= 0` for every level `m` under which
/// deleting the eigenstates in `deleted` leaves a regular potential.
pub fn krein_adler_check(n: usize, deleted: &[usize]) -> bool {
    krein_adler_violation(n, deleted).is_none()
}

/// Multiple Darboux deletion with the eigenfunctions in `deleted` as seeds.
///
/// With `allow_singular` the condition is not enforced and the rewritten
/// constants are returned unvalidated.
pub fn krein_adler_delete(
    cfg: &SolitonConfig,
    deleted: &[usize],
    allow_singular: bool,
) -> Result<TransformResult> {
    let set = deletion_set(cfg.n(), deleted)?;
    if let Some(m) = krein_adler_violation(cfg.n(), &set) {
        if !allow_singular {
            return Err(Error::Validation(format!(
                "Krein-Adler condition fails at level m = {m}: prod (d - m) < 0 for D = {set:?}"
            )));
        }
        return delete_with(cfg, &set, 1, Scheme::KreinAdler, false);
    }
    delete_with(cfg, &set, 1, Scheme::KreinAdler, true)
}

/// Abraham-Moses deletion; any set is admissible.
pub fn am_delete(cfg: &SolitonConfig, deleted: &[usize]) -> Result<TransformResult> {
    delete_with(cfg, deleted, 2, Scheme::AmDelete, true)
}

/// Abraham-Moses addition on existing eigenstates: `c_j -> e_j/(e_j+1) c_j`.
pub fn am_add(cfg: &SolitonConfig, params: &BTreeMap<usize, f64>) -> Result<TransformResult> {
    let rule = CoefficientRule::addition(cfg.n(), params)?;
    let c = rule.apply(cfg.c())?;
    let after = SolitonConfig::new(cfg.k().to_vec(), c)?.with_times(cfg.times().clone())?;
    Ok(TransformResult {
        before: cfg.clone(),
        after,
        scheme: Scheme::AmAdd,
        deleted: Vec::new(),
        xi_exponent: None,
        am_params: Some(params.clone()),
        singular: false,
    })
}
