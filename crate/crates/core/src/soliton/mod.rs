//! Spectral data of reflectionless potentials and everything evaluated from it:
//! tau functions, potentials, eigenfunctions and KdV-hierarchy time flows.

mod fields;
mod rule;
mod tau;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fields::{
    dt_potential, eigenfunction, eigenfunction_scaled, eigenfunction_scaled_in, potential,
    potential_jet, tau_ratio,
};
pub use rule::{eigenfunction_rule, CoefficientRule};
pub use tau::{tau_det, tau_det_in, tau_hirota, LogValue, TauEval, TauEvalOf, HIROTA_MAX_N};

/// Wavenumbers `k` (strictly ascending, positive) and norming constants `c`
/// (positive) of an N-soliton potential, plus optional hierarchy times keyed
/// by the odd flow index `3, 5, 7, ...`.
///
/// Indices are zero-based throughout the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct SolitonConfig {
    k: Vec<f64>,
    c: Vec<f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    times: BTreeMap<u32, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    k: Vec<f64>,
    c: Vec<f64>,
    #[serde(default)]
    times: BTreeMap<u32, f64>,
}

impl TryFrom<RawConfig> for SolitonConfig {
    type Error = String;

    fn try_from(raw: RawConfig) -> std::result::Result<Self, String> {
        SolitonConfig::new(raw.k, raw.c)
            .and_then(|cfg| cfg.with_times(raw.times))
            .map_err(|e| match e {
                Error::Validation(msg) => msg,
                other => other.to_string(),
            })
    }
}

impl SolitonConfig {
    pub fn new(k: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if k.len() != c.len() {
            return Err(Error::Validation(format!(
                "k has {} entries but c has {}",
                k.len(),
                c.len()
            )));
        }
        for (i, &kj) in k.iter().enumerate() {
            if !(kj.is_finite() && kj > 0.0) {
                return Err(Error::Validation(format!("k[{i}] = {kj} is not positive")));
            }
            if i > 0 && !(kj > k[i - 1]) {
                return Err(Error::Validation("k not strictly ascending".into()));
            }
        }
        for (i, &cj) in c.iter().enumerate() {
            if !(cj.is_finite() && cj > 0.0) {
                return Err(Error::Validation(format!("c[{i}] = {cj} is not positive")));
            }
        }
        Ok(Self {
            k,
            c,
            times: BTreeMap::new(),
        })
    }

    /// The trivial potential `U = 0`.
    pub fn empty() -> Self {
        Self {
            k: Vec::new(),
            c: Vec::new(),
            times: BTreeMap::new(),
        }
    }

    /// Skips validation. Used for formally transformed parameter sets whose
    /// norming constants may be negative.
    pub(crate) fn new_unchecked(k: Vec<f64>, c: Vec<f64>) -> Self {
        Self {
            k,
            c,
            times: BTreeMap::new(),
        }
    }

    pub fn with_times(mut self, times: BTreeMap<u32, f64>) -> Result<Self> {
        for (&flow, &t) in &times {
            if flow < 3 || flow % 2 == 0 {
                return Err(Error::Validation(format!(
                    "times: flow index {flow} is not an odd integer >= 3"
                )));
            }
            if !t.is_finite() {
                return Err(Error::Validation(format!(
                    "times[{flow}] = {t} is not finite"
                )));
            }
        }
        self.times = times;
        Ok(self)
    }

    /// Set the KdV time `t = t_3`, keeping higher flows.
    pub fn with_kdv_time(mut self, t: f64) -> Self {
        self.times.insert(3, t);
        self
    }

    pub fn n(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn times(&self) -> &BTreeMap<u32, f64> {
        &self.times
    }

    /// Bound-state energies `-k_j^2`, ascending in `j` means descending in energy.
    pub fn energies(&self) -> Vec<f64> {
        self.k.iter().map(|k| -k * k).collect()
    }

    pub fn is_valid(&self) -> bool {
        SolitonConfig::new(self.k.clone(), self.c.clone()).is_ok()
    }

    /// Default evaluation window `[-10/k1, 10/k1]` with 2001 points.
    /// Distance from the origin within which every soliton core lies:
    /// `max_j (|ln(c_j/2k_j)| + sum_l |ln theta_jl|) / (2 k_j)` with
    /// `theta_jl = ((k_j - k_l)/(k_j + k_l))^2`, whatever the order of the
    /// others. Time flows are not applied.
    pub fn core_reach(&self) -> f64 {
        let (k, c) = (&self.k, &self.c);
        (0..k.len())
            .map(|j| {
                let coupling: f64 = (0..k.len())
                    .filter(|&l| l != j)
                    .map(|l| (2.0 * ((k[j] - k[l]) / (k[j] + k[l])).abs().ln()).abs())
                    .sum();
                ((c[j] / (2.0 * k[j])).ln().abs() + coupling) / (2.0 * k[j])
            })
            .fold(0.0, f64::max)
    }

    pub fn default_grid(&self) -> Grid {
        let half = match self.k.first() {
            Some(k1) => 10.0 / k1,
            None => 10.0,
        };
        Grid::new(-half, half, 2001).expect("valid default grid")
    }

    /// Apply the hierarchy flows `c_j -> c_j exp(sum_n (2 k_j)^n t_n)`.
    /// The returned configuration has no pending times.
    pub fn apply_time_flows(&self) -> Result<SolitonConfig> {
        apply_time_flows(self)
    }

    pub(crate) fn parts(&self) -> (&[f64], &[f64]) {
        (&self.k, &self.c)
    }
}

/// See [`SolitonConfig::apply_time_flows`]. Iso-spectral: `k` is untouched.
pub fn apply_time_flows(cfg: &SolitonConfig) -> Result<SolitonConfig> {
    let mut c = cfg.c.clone();
    for (j, cj) in c.iter_mut().enumerate() {
        let kj = cfg.k[j];
        let exponent: f64 = cfg
            .times
            .iter()
            .map(|(&flow, &t)| (2.0 * kj).powi(flow as i32) * t)
            .sum();
        let flowed = *cj * exponent.exp();
        if !flowed.is_finite() || (flowed == 0.0 && *cj != 0.0) {
            return Err(Error::Range { kx: exponent.abs() });
        }
        *cj = flowed;
    }
    Ok(SolitonConfig {
        k: cfg.k.clone(),
        c,
        times: BTreeMap::new(),
    })
}

/// Uniform grid of `n >= 2` points on `[xmin, xmax]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub xmin: f64,
    pub xmax: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(xmin: f64, xmax: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 points, got {n}"
            )));
        }
        if !(xmin < xmax) || !xmin.is_finite() || !xmax.is_finite() {
            return Err(Error::Validation(format!(
                "grid bounds must satisfy xmin < xmax, got [{xmin}, {xmax}]"
            )));
        }
        Ok(Self { xmin, xmax, n })
    }

    pub fn points(&self) -> Vec<f64> {
        let step = (self.xmax - self.xmin) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                if i + 1 == self.n {
                    self.xmax
                } else {
                    self.xmin + step * i as f64
                }
            })
            .collect()
    }
}
