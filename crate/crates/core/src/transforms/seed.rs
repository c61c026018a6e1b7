use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetOf, ScaledJet, ScaledJetOf};
use crate::real::Real;
use crate::soliton::{eigenfunction_scaled, SolitonConfig};

type Evaluator = dyn Fn(f64, usize) -> Result<ScaledJet> + Send + Sync;

/// A solution of some Schrödinger equation at energy `energy`, evaluated
/// lazily as a jet of any order.
#[derive(Clone)]
pub struct SeedFunction {
    evaluator: Arc<Evaluator>,
    pub energy: f64,
    pub label: String,
    /// Set for bound-state eigenfunctions of a soliton configuration, which
    /// admit closed-form overlaps.
    pub eigen_index: Option<usize>,
}

impl fmt::Debug for SeedFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeedFunction")
            .field("label", &self.label)
            .field("energy", &self.energy)
            .finish()
    }
}

/// `a e^{alpha x} + b e^{beta x}` as a scaled jet.
fn two_exponentials<T: Real>(
    alpha: T,
    a: T,
    beta: T,
    b: T,
    x: f64,
    order: usize,
) -> ScaledJetOf<T> {
    let xt = T::from_f64(x);
    let first = ScaledJetOf::new(JetOf::exp_shape(alpha, x, order).scale(a), alpha * xt);
    if b == T::zero() {
        return first;
    }
    let second = ScaledJetOf::new(JetOf::exp_shape(beta, x, order).scale(b), beta * xt);
    if a == T::zero() {
        return second;
    }
    first.add(&second)
}

/// Jet of `e^{kx} + c~ e^{-kx}` in the scalar type `T`.
pub fn free_wave_jet<T: Real>(k: f64, c_tilde: f64, x: f64, order: usize) -> ScaledJetOf<T> {
    let k = T::from_f64(k);
    two_exponentials(k, T::one(), -k, T::from_f64(c_tilde), x, order)
}

impl SeedFunction {
    pub fn new<F>(label: impl Into<String>, energy: f64, evaluator: F) -> Self
    where
        F: Fn(f64, usize) -> Result<ScaledJet> + Send + Sync + 'static,
    {
        Self {
            evaluator: Arc::new(evaluator),
            energy,
            label: label.into(),
            eigen_index: None,
        }
    }

    pub fn eval(&self, x: f64, order: usize) -> Result<ScaledJet> {
        (self.evaluator)(x, order)
    }

    /// Bound state `phi_j` of `cfg` (zero-based `j`).
    pub fn eigenfunction(cfg: &SolitonConfig, j: usize) -> Result<Self> {
        if j >= cfg.n() {
            return Err(Error::Usage(format!(
                "eigenfunction index {j} out of range"
            )));
        }
        let energy = -cfg.k()[j] * cfg.k()[j];
        let cfg = cfg.clone();
        let mut seed = Self::new(format!("phi_{j}"), energy, move |x, order| {
            eigenfunction_scaled(&cfg, j, x, order)
        });
        seed.eigen_index = Some(j);
        Ok(seed)
    }

    /// `e^{kx} + c~ e^{-kx}`, a solution of the free equation at `-k^2`.
    pub fn free_wave(k: f64, c_tilde: f64) -> Self {
        Self::new(
            format!("e^({k}x) + {c_tilde} e^(-{k}x)"),
            -k * k,
            move |x, order| Ok(free_wave_jet(k, c_tilde, x, order)),
        )
    }

    /// `e^{alpha x}`; free solution at energy `-alpha^2`.
    pub fn exponential(alpha: f64) -> Self {
        Self::new(format!("e^({alpha}x)"), -alpha * alpha, move |x, order| {
            Ok(ScaledJet::new(Jet::exp_shape(alpha, x, order), alpha * x))
        })
    }

    /// `cos(kx)`; free solution at energy `k^2`.
    pub fn cosine(k: f64) -> Self {
        Self::new(format!("cos({k}x)"), k * k, move |x, order| {
            Ok(ScaledJet::new(trig_jet(k, x, order, false), 0.0))
        })
    }

    /// `sin(kx)`; free solution at energy `k^2`.
    pub fn sine(k: f64) -> Self {
        Self::new(format!("sin({k}x)"), k * k, move |x, order| {
            Ok(ScaledJet::new(trig_jet(k, x, order, true), 0.0))
        })
    }
}

fn trig_jet(k: f64, x: f64, order: usize, sine: bool) -> Jet {
    let (s, c) = (k * x).sin_cos();
    // n-th derivative of cos is k^n cos(kx + n pi/2)
    let mut coeffs = Vec::with_capacity(order + 1);
    let mut factor = 1.0;
    for n in 0..=order {
        if n > 0 {
            factor *= k / n as f64;
        }
        let phase = if sine { (n + 3) % 4 } else { n % 4 };
        let v = match phase {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        };
        coeffs.push(factor * v);
    }
    Jet::from_vec(x, coeffs)
}

fn seed_factor(k: &[f64], j: usize) -> f64 {
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    let prod: f64 = (0..k.len())
        .filter(|&l| l != j)
        .map(|l| (k[j] + k[l]) / (k[j] - k[l]).abs())
        .product();
    2.0 * k[j] * sign * prod
}

/// Norming constants of the potential built from the free seeds
/// `psi_j = e^{k_j x} + c~_j e^{-k_j x}`:
/// `c_j = 2 k_j c~_j (-1)^j prod_{l != j} (k_j + k_l)/|k_j - k_l|` (zero-based `j`).
///
/// With this map `W[psi_1..psi_N] = prod_{j>l} (k_j - k_l) e^{sum k x} u(x)`.
pub fn c_from_seed_constants(k: &[f64], c_tilde: &[f64]) -> Result<Vec<f64>> {
    if k.len() != c_tilde.len() {
        return Err(Error::Usage("k and c~ lengths differ".into()));
    }
    for (j, &ct) in c_tilde.iter().enumerate() {
        let ok = if j % 2 == 0 { ct > 0.0 } else { ct < 0.0 };
        if !ok {
            return Err(Error::Validation(format!(
                "seed constant c~[{j}] = {ct} violates the alternating sign pattern"
            )));
        }
    }
    Ok((0..k.len())
        .map(|j| seed_factor(k, j) * c_tilde[j])
        .collect())
}

/// Inverse of [`c_from_seed_constants`].
pub fn seed_constants_from_c(cfg: &SolitonConfig) -> Vec<f64> {
    (0..cfg.n())
        .map(|j| cfg.c()[j] / seed_factor(cfg.k(), j))
        .collect()
}
