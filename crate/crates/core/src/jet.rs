//! Truncated Taylor expansions ("jets") of scalar functions of one variable.
//!
//! A [`Jet`] of order `K` centred at `x0` stores `coeffs[n] = f^(n)(x0) / n!`
//! for `n = 0..=K`. Sums, products and quotients are exact for every retained
//! coefficient, so derivatives of determinants, ratios and logarithms come out
//! without finite differencing.
//!
//! [`ScaledJet`] pairs a jet with a separate logarithmic scale so that
//! functions growing like `exp(±k x)` can be combined far from the origin
//! without overflow.
//!
//! Both are generic over the coefficient type; [`Jet`] and [`ScaledJet`] are
//! the `f64` forms and [`DoubleDouble`](crate::real::DoubleDouble) coefficients
//! are used where cancellation would otherwise eat the f64 digits.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::real::Real;

/// Constant terms smaller than this are treated as zero by [`jet_div`].
pub const DIVISION_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct JetOf<T: Real> {
    center: f64,
    coeffs: Vec<T>,
}

pub type Jet = JetOf<f64>;

impl<T: Real> JetOf<T> {
    pub fn new(center: f64, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage("a jet needs at least one coefficient".into()));
        }
        Ok(Self { center, coeffs })
    }

    pub(crate) fn from_vec(center: f64, coeffs: Vec<T>) -> Self {
        debug_assert!(!coeffs.is_empty());
        Self { center, coeffs }
    }

    pub fn constant(center: f64, value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    pub fn zero(center: f64, order: usize) -> Self {
        Self::constant(center, T::zero(), order)
    }

    pub fn one(center: f64, order: usize) -> Self {
        Self::constant(center, T::one(), order)
    }

    /// The independent variable `x` itself.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut jet = Self::constant(center, T::from_f64(center), order);
        if order >= 1 {
            jet.coeffs[1] = T::one();
        }
        jet
    }

    /// `exp(rate * (x - center))`, i.e. the shape of an exponential with unit
    /// value at the centre.
    pub fn exp_shape(rate: T, center: f64, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut term = T::one();
        coeffs.push(term);
        for n in 1..=order {
            term = term * rate / T::from_f64(n as f64);
            coeffs.push(term);
        }
        Self { center, coeffs }
    }

    /// Convert the coefficients to another scalar type.
    pub fn cast<U: Real>(&self) -> JetOf<U> {
        JetOf {
            center: self.center,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| U::from_f64(c.to_f64()))
                .collect(),
        }
    }

    /// Coefficients rounded to `f64`.
    pub fn to_f64(&self) -> Jet {
        JetOf {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c.to_f64()).collect(),
        }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn value(&self) -> T {
        self.coeffs[0]
    }

    /// `f^(n)(center)`; zero beyond the jet order.
    pub fn derivative_value(&self, n: usize) -> T {
        match self.coeffs.get(n) {
            Some(&c) => c * T::from_f64(factorial(n)),
            None => T::zero(),
        }
    }

    /// Jet of `f'` (one order lower).
    pub fn derivative(&self) -> Self {
        assert!(
            self.order() >= 1,
            "derivative of an order-0 jet is undefined"
        );
        let coeffs = (1..self.coeffs.len())
            .map(|n| self.coeffs[n] * T::from_f64(n as f64))
            .collect();
        Self::from_vec(self.center, coeffs)
    }

    /// Jet of `f^(i)` truncated to `order`. Requires `self.order() >= i + order`.
    pub fn nth_derivative(&self, i: usize, order: usize) -> Self {
        assert!(
            self.order() >= i + order,
            "jet of order {} cannot supply derivative {} to order {}",
            self.order(),
            i,
            order
        );
        let coeffs = (0..=order)
            .map(|n| {
                let falling: f64 = ((n + 1)..=(n + i)).map(|m| m as f64).product();
                self.coeffs[n + i] * T::from_f64(falling)
            })
            .collect();
        Self::from_vec(self.center, coeffs)
    }

    /// Antiderivative with the given value at the centre (one order higher).
    pub fn integrate(&self, value_at_center: T) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(value_at_center);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, &c)| c / T::from_f64((n + 1) as f64)),
        );
        Self::from_vec(self.center, coeffs)
    }

    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order());
        Self::from_vec(self.center, self.coeffs[..=order].to_vec())
    }

    pub fn scale(&self, factor: T) -> Self {
        Self::from_vec(
            self.center,
            self.coeffs.iter().map(|&c| c * factor).collect(),
        )
    }

    /// Evaluate the truncated polynomial at `center + h`.
    pub fn eval_offset(&self, h: T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, &c| acc * h + c)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, &c| {
            let a = c.abs();
            if a > m {
                a
            } else {
                m
            }
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.center != other.center {
            return Err(Error::Usage(format!(
                "jet centres differ: {} vs {}",
                self.center, other.center
            )));
        }
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Usage(format!(
                "jet orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|m| m as f64).product()
}

pub fn jet_add<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> Result<JetOf<T>> {
    a.check_compatible(b)?;
    Ok(add_unchecked(a, b))
}

pub fn jet_mul<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> Result<JetOf<T>> {
    a.check_compatible(b)?;
    Ok(mul_unchecked(a, b))
}

pub fn jet_scale<T: Real>(a: &JetOf<T>, factor: T) -> JetOf<T> {
    a.scale(factor)
}

/// Quotient `a / b` through the common order.
pub fn jet_div<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> Result<JetOf<T>> {
    a.check_compatible(b)?;
    let b0 = b.coeffs[0];
    if !(b0.abs().to_f64() >= DIVISION_THRESHOLD) {
        return Err(Error::SingularJet {
            center: b.center,
            value: b0.to_f64(),
        });
    }
    let mut out: Vec<T> = Vec::with_capacity(a.coeffs.len());
    for n in 0..a.coeffs.len() {
        let mut acc = a.coeffs[n];
        for i in 1..=n {
            acc -= b.coeffs[i] * out[n - i];
        }
        out.push(acc / b0);
    }
    Ok(JetOf::from_vec(a.center, out))
}

/// Jet of `exp(rate * x)` at `x0`.
pub fn jet_exp(rate: f64, x0: f64, order: usize) -> Jet {
    Jet::exp_shape(rate, x0, order).scale((rate * x0).exp())
}

/// Second derivative of `log a` at the centre: `2 a2/a0 - (a1/a0)^2`.
pub fn jet_log_d2<T: Real>(a: &JetOf<T>) -> Result<T> {
    if a.order() < 2 {
        return Err(Error::Usage(format!(
            "second log-derivative needs order >= 2, got {}",
            a.order()
        )));
    }
    let a0 = a.coeffs[0];
    if !(a0.to_f64() > 0.0) {
        return Err(Error::Domain(format!(
            "log of non-positive value {:e} at x = {}",
            a0.to_f64(),
            a.center
        )));
    }
    let r1 = a.coeffs[1] / a0;
    let r2 = a.coeffs[2] / a0;
    Ok(T::from_f64(2.0) * r2 - r1 * r1)
}

/// Jet of `(log a)' = a'/a`, one order lower. The sign of `a` is irrelevant.
pub fn log_derivative<T: Real>(a: &JetOf<T>) -> Result<JetOf<T>> {
    let d = a.derivative();
    jet_div(&d, &a.truncate(d.order()))
}

fn add_unchecked<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> JetOf<T> {
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&x, &y)| x + y)
        .collect();
    JetOf::from_vec(a.center, coeffs)
}

fn sub_unchecked<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> JetOf<T> {
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(&x, &y)| x - y)
        .collect();
    JetOf::from_vec(a.center, coeffs)
}

fn mul_unchecked<T: Real>(a: &JetOf<T>, b: &JetOf<T>) -> JetOf<T> {
    let len = a.coeffs.len();
    let mut out = vec![T::zero(); len];
    for (i, &ai) in a.coeffs.iter().enumerate() {
        if ai == T::zero() {
            continue;
        }
        for (j, &bj) in b.coeffs[..len - i].iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    JetOf::from_vec(a.center, out)
}

// Operator forms panic on mismatched centres or orders; the checked free
// functions above return errors instead.

impl<T: Real> Add for &JetOf<T> {
    type Output = JetOf<T>;
    fn add(self, rhs: &JetOf<T>) -> JetOf<T> {
        jet_add(self, rhs).expect("jet addition")
    }
}

impl<T: Real> Sub for &JetOf<T> {
    type Output = JetOf<T>;
    fn sub(self, rhs: &JetOf<T>) -> JetOf<T> {
        self.check_compatible(rhs).expect("jet subtraction");
        sub_unchecked(self, rhs)
    }
}

impl<T: Real> Mul for &JetOf<T> {
    type Output = JetOf<T>;
    fn mul(self, rhs: &JetOf<T>) -> JetOf<T> {
        jet_mul(self, rhs).expect("jet multiplication")
    }
}

impl<T: Real> Mul<T> for &JetOf<T> {
    type Output = JetOf<T>;
    fn mul(self, rhs: T) -> JetOf<T> {
        self.scale(rhs)
    }
}

impl<T: Real> Neg for &JetOf<T> {
    type Output = JetOf<T>;
    fn neg(self) -> JetOf<T> {
        self.scale(-T::one())
    }
}

impl<T: Real> Add for JetOf<T> {
    type Output = JetOf<T>;
    fn add(self, rhs: JetOf<T>) -> JetOf<T> {
        &self + &rhs
    }
}

impl<T: Real> Sub for JetOf<T> {
    type Output = JetOf<T>;
    fn sub(self, rhs: JetOf<T>) -> JetOf<T> {
        &self - &rhs
    }
}

impl<T: Real> Mul for JetOf<T> {
    type Output = JetOf<T>;
    fn mul(self, rhs: JetOf<T>) -> JetOf<T> {
        &self * &rhs
    }
}

/// A jet multiplied by `exp(ln_scale)`.
///
/// The stored jet is kept with `|coeffs[0]|` near one whenever the constant
/// term is non-zero, so the scale carries the magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledJetOf<T: Real> {
    pub jet: JetOf<T>,
    pub ln_scale: T,
}

pub type ScaledJet = ScaledJetOf<f64>;

impl<T: Real> ScaledJetOf<T> {
    pub fn new(jet: JetOf<T>, ln_scale: T) -> Self {
        let mut out = Self { jet, ln_scale };
        out.normalize();
        out
    }

    pub fn from_jet(jet: JetOf<T>) -> Self {
        Self::new(jet, T::zero())
    }

    pub fn one(center: f64, order: usize) -> Self {
        Self {
            jet: JetOf::one(center, order),
            ln_scale: T::zero(),
        }
    }

    pub fn order(&self) -> usize {
        self.jet.order()
    }

    pub fn center(&self) -> f64 {
        self.jet.center
    }

    /// Rounded to `f64` coefficients and scale.
    pub fn to_f64(&self) -> ScaledJet {
        ScaledJetOf {
            jet: self.jet.to_f64(),
            ln_scale: self.ln_scale.to_f64(),
        }
    }

    /// Move the magnitude of the jet into the scale.
    pub fn normalize(&mut self) {
        let c0 = self.jet.coeffs[0].abs();
        let m = if c0 > T::zero() {
            c0
        } else {
            self.jet.max_abs_coeff()
        };
        if m > T::zero() && m.is_finite() {
            self.jet = self.jet.scale(T::one() / m);
            self.ln_scale += m.ln();
        }
    }

    pub fn sign(&self) -> f64 {
        self.jet.coeffs[0].sign()
    }

    /// `ln |f(center)|`; `-inf` when the constant term vanishes.
    pub fn ln_abs_value(&self) -> T {
        self.jet.coeffs[0].abs().ln() + self.ln_scale
    }

    pub fn value(&self) -> T {
        self.jet.coeffs[0] * self.ln_scale.exp()
    }

    /// Plain jet `exp(ln_scale) * jet`. May overflow or underflow.
    pub fn to_jet(&self) -> JetOf<T> {
        self.jet.scale(self.ln_scale.exp())
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            jet: self.jet.truncate(order),
            ln_scale: self.ln_scale,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(&self.jet * &other.jet, self.ln_scale + other.ln_scale)
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(Self::new(
            jet_div(&self.jet, &other.jet)?,
            self.ln_scale - other.ln_scale,
        ))
    }

    pub fn add(&self, other: &Self) -> Self {
        let scale = if self.ln_scale > other.ln_scale {
            self.ln_scale
        } else {
            other.ln_scale
        };
        let a = self.jet.scale((self.ln_scale - scale).exp());
        let b = other.jet.scale((other.ln_scale - scale).exp());
        Self::new(&a + &b, scale)
    }

    pub fn neg(&self) -> Self {
        Self {
            jet: -&self.jet,
            ln_scale: self.ln_scale,
        }
    }

    /// Multiply by `exp(rate * (x - center))`.
    pub fn mul_exp_shape(&self, rate: T) -> Self {
        let shape = JetOf::exp_shape(rate, self.center(), self.order());
        Self::new(&self.jet * &shape, self.ln_scale)
    }

    /// Multiply by a positive or negative scalar given as `sign * exp(ln_abs)`.
    pub fn mul_scalar_ln(&self, sign: f64, ln_abs: T) -> Self {
        Self {
            jet: self.jet.scale(T::from_f64(sign)),
            ln_scale: self.ln_scale + ln_abs,
        }
    }
}

/// Determinant of a square matrix of jets sharing centre and order.
///
/// Gaussian elimination with partial pivoting on the constant terms. A
/// vanishing pivot (possible when only higher coefficients survive) falls
/// back to cofactor expansion for small matrices.
pub fn det<T: Real>(matrix: &[Vec<JetOf<T>>]) -> Result<JetOf<T>> {
    let n = matrix.len();
    if n == 0 {
        return Err(Error::Usage(
            "determinant of an empty matrix needs an explicit centre; use det_or_one".into(),
        ));
    }
    let proto = &matrix[0][0];
    for row in matrix {
        if row.len() != n {
            return Err(Error::Usage("determinant of a non-square matrix".into()));
        }
        for entry in row {
            proto.check_compatible(entry)?;
        }
    }
    match det_lu(matrix) {
        Err(Error::SingularJet { .. }) if n <= 8 => Ok(det_laplace(matrix)),
        other => other,
    }
}

/// Like [`det`] but returns the unit jet for the empty matrix.
pub fn det_or_one<T: Real>(
    matrix: &[Vec<JetOf<T>>],
    center: f64,
    order: usize,
) -> Result<JetOf<T>> {
    if matrix.is_empty() {
        Ok(JetOf::one(center, order))
    } else {
        det(matrix)
    }
}

pub(crate) fn det_laplace<T: Real>(matrix: &[Vec<JetOf<T>>]) -> JetOf<T> {
    let n = matrix.len();
    let center = matrix[0][0].center;
    let order = matrix[0][0].order();
    // minors[S] = det of the last |S| rows restricted to the columns in S.
    let mut minors: Vec<Option<JetOf<T>>> = vec![None; 1 << n];
    minors[0] = Some(JetOf::one(center, order));
    let mut masks: Vec<usize> = (1..(1usize << n)).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        let size = mask.count_ones() as usize;
        let row = n - size;
        let mut acc = JetOf::zero(center, order);
        let mut position = 0;
        for col in 0..n {
            if mask & (1 << col) == 0 {
                continue;
            }
            let entry = &matrix[row][col];
            let minor = minors[mask & !(1 << col)].as_ref().expect("minor computed");
            let term = mul_unchecked(entry, minor);
            acc = if position % 2 == 0 {
                add_unchecked(&acc, &term)
            } else {
                sub_unchecked(&acc, &term)
            };
            position += 1;
        }
        minors[mask] = Some(acc);
    }
    minors[(1 << n) - 1].take().expect("full determinant")
}

fn pivot_row<T: Real>(a: &[Vec<JetOf<T>>], k: usize) -> usize {
    (k..a.len())
        .max_by(|&i, &j| {
            a[i][k].coeffs[0]
                .abs()
                .partial_cmp(&a[j][k].coeffs[0].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty range")
}

pub(crate) fn det_lu<T: Real>(matrix: &[Vec<JetOf<T>>]) -> Result<JetOf<T>> {
    let n = matrix.len();
    let mut a: Vec<Vec<JetOf<T>>> = matrix.to_vec();
    let center = a[0][0].center;
    let order = a[0][0].order();
    let mut det = JetOf::one(center, order);
    for k in 0..n {
        let p = pivot_row(&a, k);
        if p != k {
            a.swap(p, k);
            det = -&det;
        }
        let pivot = a[k][k].clone();
        det = mul_unchecked(&det, &pivot);
        let (top, rest) = a.split_at_mut(k + 1);
        for row in rest {
            let factor = jet_div(&row[k], &pivot)?;
            for (entry, p) in row[k + 1..].iter_mut().zip(&top[k][k + 1..]) {
                *entry = sub_unchecked(entry, &mul_unchecked(&factor, p));
            }
        }
    }
    Ok(det)
}

/// Solve `A y = b` over jets by Gaussian elimination with partial pivoting.
pub fn solve<T: Real>(matrix: &[Vec<JetOf<T>>], rhs: &[JetOf<T>]) -> Result<Vec<JetOf<T>>> {
    let n = matrix.len();
    if rhs.len() != n || matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Usage("solve: dimension mismatch".into()));
    }
    let mut a: Vec<Vec<JetOf<T>>> = matrix.to_vec();
    let mut b: Vec<JetOf<T>> = rhs.to_vec();
    for k in 0..n {
        let p = pivot_row(&a, k);
        a.swap(p, k);
        b.swap(p, k);
        let (top, rest) = a.split_at_mut(k + 1);
        let (b_top, b_rest) = b.split_at_mut(k + 1);
        for (row, bi) in rest.iter_mut().zip(b_rest) {
            let factor = jet_div(&row[k], &top[k][k])?;
            for (entry, p) in row[k + 1..].iter_mut().zip(&top[k][k + 1..]) {
                *entry = sub_unchecked(entry, &mul_unchecked(&factor, p));
            }
            *bi = sub_unchecked(bi, &mul_unchecked(&factor, &b_top[k]));
        }
    }
    let mut y: Vec<Option<JetOf<T>>> = vec![None; n];
    for k in (0..n).rev() {
        let mut acc = b[k].clone();
        for j in (k + 1)..n {
            let yj = y[j].as_ref().expect("back substitution order");
            acc = sub_unchecked(&acc, &mul_unchecked(&a[k][j], yj));
        }
        y[k] = Some(jet_div(&acc, &a[k][k])?);
    }
    Ok(y.into_iter().map(|v| v.expect("solved")).collect())
}
