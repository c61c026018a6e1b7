use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SolitonConfig;
use crate::error::{Error, Result};
use crate::real::Real;

/// Per-index multiplicative rewrite `c_m -> factors[m] * c_m`.
///
/// Every tilde-variant of the tau function is the plain determinant evaluated
/// after one of these rewrites. Factors may be negative; a factor of exactly
/// zero removes soliton `m` from the determinant.
///
/// Rules built by the constructors below also remember how each factor was
/// formed, so [`CoefficientRule::ln_factor`] can rebuild it at higher
/// precision. Equality compares the `f64` factors only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientRule {
    pub factors: Vec<f64>,
    #[serde(skip)]
    exact: Option<Exact>,
}

/// `factor_m = scalars[m] * prod_d ((k_d - k_m)/(k_d + k_m))^powers[d]`.
#[derive(Debug, Clone)]
struct Exact {
    k: Vec<f64>,
    powers: Vec<u32>,
    scalars: Vec<f64>,
}

impl Exact {
    fn scalar(scalars: Vec<f64>) -> Self {
        Self {
            k: Vec::new(),
            powers: vec![0; scalars.len()],
            scalars,
        }
    }

    fn pairs(k: &[f64], powers: Vec<u32>) -> Self {
        Self {
            k: k.to_vec(),
            powers,
            scalars: vec![1.0; k.len()],
        }
    }

    fn compose(&self, other: &Exact) -> Option<Exact> {
        let k = match (self.k.is_empty(), other.k.is_empty()) {
            (true, _) => other.k.clone(),
            (_, true) => self.k.clone(),
            _ if self.k == other.k => self.k.clone(),
            _ => return None,
        };
        Some(Exact {
            k,
            powers: self
                .powers
                .iter()
                .zip(&other.powers)
                .map(|(a, b)| a + b)
                .collect(),
            scalars: self
                .scalars
                .iter()
                .zip(&other.scalars)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

impl PartialEq for CoefficientRule {
    fn eq(&self, other: &Self) -> bool {
        self.factors == other.factors
    }
}

fn pair_ratio(k: &[f64], j: usize, m: usize) -> f64 {
    (k[j] - k[m]) / (k[j] + k[m])
}

fn check_index(n: usize, j: usize) -> Result<()> {
    if j >= n {
        Err(Error::Usage(format!(
            "soliton index {j} out of range for N = {n}"
        )))
    } else {
        Ok(())
    }
}

impl CoefficientRule {
    /// A rule with only the given `f64` factors.
    pub fn from_factors(factors: Vec<f64>) -> Self {
        Self {
            factors,
            exact: None,
        }
    }

    fn with_exact(factors: Vec<f64>, exact: Exact) -> Self {
        Self {
            factors,
            exact: Some(exact),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::with_exact(vec![1.0; n], Exact::scalar(vec![1.0; n]))
    }

    /// `(sign, ln |factor_m|)` evaluated in `T`, or `None` for a zero factor.
    pub fn ln_factor<T: Real>(&self, m: usize) -> Option<(f64, T)> {
        let f = self.factors[m];
        if f == 0.0 {
            return None;
        }
        let Some(exact) = &self.exact else {
            return Some((f.signum(), T::from_f64(f.abs()).ln()));
        };
        let s = exact.scalars[m];
        let mut sign = s.signum();
        let mut ln = T::from_f64(s.abs()).ln();
        for (d, &p) in exact.powers.iter().enumerate() {
            if p == 0 {
                continue;
            }
            let (kd, km) = (T::from_f64(exact.k[d]), T::from_f64(exact.k[m]));
            let diff = kd - km;
            if p % 2 == 1 {
                sign *= diff.sign();
            }
            ln += ((diff.abs()).ln() - (kd + km).ln()) * T::from_f64(p as f64);
        }
        Some((sign, ln))
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `c_m -> c_m (k_j - k_m)/(k_j + k_m)`: the numerator determinant of the
    /// j-th eigenfunction.
    pub fn eigenfunction(k: &[f64], j: usize) -> Result<Self> {
        check_index(k.len(), j)?;
        let mut powers = vec![0; k.len()];
        powers[j] = 1;
        Ok(Self::with_exact(
            (0..k.len()).map(|m| pair_ratio(k, j, m)).collect(),
            Exact::pairs(k, powers),
        ))
    }

    /// Squared eigenfunction factors, the antiderivative numerator of `phi_j^2`.
    pub fn squared(k: &[f64], j: usize) -> Result<Self> {
        Self::bilinear(k, j, j)
    }

    /// `c_m -> c_m (k_j-k_m)/(k_j+k_m) (k_l-k_m)/(k_l+k_m)`.
    pub fn bilinear(k: &[f64], j: usize, l: usize) -> Result<Self> {
        check_index(k.len(), j)?;
        check_index(k.len(), l)?;
        let mut powers = vec![0; k.len()];
        powers[j] += 1;
        powers[l] += 1;
        Ok(Self::with_exact(
            (0..k.len())
                .map(|m| pair_ratio(k, j, m) * pair_ratio(k, l, m))
                .collect(),
            Exact::pairs(k, powers),
        ))
    }

    /// Product of `((k_d - k_m)/(k_d + k_m))^xi` over the deleted set.
    pub fn deletion(k: &[f64], deleted: &[usize], xi: u32) -> Result<Self> {
        let mut factors = vec![1.0; k.len()];
        let mut powers = vec![0; k.len()];
        for &d in deleted {
            check_index(k.len(), d)?;
            powers[d] += xi;
            for (m, f) in factors.iter_mut().enumerate() {
                *f *= pair_ratio(k, d, m).powi(xi as i32);
            }
        }
        Ok(Self::with_exact(factors, Exact::pairs(k, powers)))
    }

    /// `c_d -> e_d/(e_d + 1) c_d` for each `d` in `params`.
    pub fn addition(n: usize, params: &BTreeMap<usize, f64>) -> Result<Self> {
        let mut factors = vec![1.0; n];
        for (&d, &e) in params {
            check_index(n, d)?;
            if !(e > 0.0) {
                return Err(Error::Validation(format!("e[{d}] = {e} must be positive")));
            }
            factors[d] = if e.is_infinite() { 1.0 } else { e / (e + 1.0) };
        }
        Ok(Self::with_exact(factors.clone(), Exact::scalar(factors)))
    }

    /// `c_j -> 0`.
    pub fn drop_soliton(n: usize, j: usize) -> Result<Self> {
        check_index(n, j)?;
        let mut factors = vec![1.0; n];
        factors[j] = 0.0;
        Ok(Self::with_exact(factors.clone(), Exact::scalar(factors)))
    }

    /// Pointwise product: applying the result equals applying both rules.
    pub fn compose(&self, other: &CoefficientRule) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::Usage(format!(
                "cannot compose rules of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| a * b)
            .collect();
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a.compose(b),
            _ => None,
        };
        Ok(Self { factors, exact })
    }

    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.len() {
            return Err(Error::Usage(format!(
                "rule of length {} applied to {} coefficients",
                self.len(),
                c.len()
            )));
        }
        Ok(c.iter().zip(&self.factors).map(|(c, f)| c * f).collect())
    }
}

/// Rule whose tau function is the eigenfunction numerator for soliton `j`.
pub fn eigenfunction_rule(cfg: &SolitonConfig, j: usize) -> Result<CoefficientRule> {
    CoefficientRule::eigenfunction(cfg.k(), j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenfunction_rules() {
        assert_eq!(
            CoefficientRule::eigenfunction(&[1.0], 0).unwrap().factors,
            vec![0.0]
        );
        assert_eq!(
            CoefficientRule::eigenfunction(&[1.0, 2.0], 1)
                .unwrap()
                .factors,
            vec![1.0 / 3.0, 0.0]
        );
        let f = CoefficientRule::eigenfunction(&[1.0, 2.0, 3.0], 0)
            .unwrap()
            .factors;
        assert_eq!(f[0], 0.0);
        assert!((f[1] + 1.0 / 3.0).abs() < 1e-16);
        assert!((f[2] + 0.5).abs() < 1e-16);
        assert!(CoefficientRule::eigenfunction(&[1.0], 1).is_err());
    }

    #[test]
    fn squared_rule_is_square_of_eigen_rule() {
        let k = [0.4, 1.1, 2.5];
        for j in 0..3 {
            let e = CoefficientRule::eigenfunction(&k, j).unwrap();
            let s = CoefficientRule::squared(&k, j).unwrap();
            assert_eq!(e.compose(&e).unwrap(), s);
        }
    }

    #[test]
    fn addition_factors() {
        let mut p = BTreeMap::new();
        p.insert(0, 1.0);
        assert_eq!(
            CoefficientRule::addition(2, &p).unwrap().factors,
            vec![0.5, 1.0]
        );
        p.insert(0, 3.0);
        assert_eq!(
            CoefficientRule::addition(2, &p).unwrap().factors,
            vec![0.75, 1.0]
        );
        p.insert(1, -1.0);
        assert!(CoefficientRule::addition(2, &p).is_err());
    }

    #[test]
    fn exact_factors_match_f64_factors() {
        use crate::real::DoubleDouble;
        let k = [0.4, 1.1, 1.1000001, 2.5];
        let rules = [
            CoefficientRule::bilinear(&k, 1, 3).unwrap(),
            CoefficientRule::deletion(&k, &[0, 2], 2).unwrap(),
            CoefficientRule::eigenfunction(&k, 2)
                .unwrap()
                .compose(&CoefficientRule::drop_soliton(4, 0).unwrap())
                .unwrap(),
            CoefficientRule::from_factors(vec![-0.5, 1.0, 2.0, 0.0]),
        ];
        for rule in &rules {
            for m in 0..4 {
                let f = rule.factors[m];
                match rule.ln_factor::<DoubleDouble>(m) {
                    None => assert_eq!(f, 0.0),
                    Some((sign, ln)) => {
                        let v = sign * ln.to_f64().exp();
                        assert!((v - f).abs() <= 1e-14 * f.abs(), "{v} vs {f}");
                    }
                }
            }
        }
    }

    #[test]
    fn compose_length_mismatch() {
        let a = CoefficientRule::identity(2);
        let b = CoefficientRule::identity(3);
        assert!(a.compose(&b).is_err());
        assert!(a.apply(&[1.0]).is_err());
    }
}
