//! Truncated formal power series: the coefficientwise product, the Borel
//! transform, additive convolution, and the identity
//! `Bf̃ ⊙ Bg̃ = B(e₁ ⊙ f̃ ⊙ g̃)` with `e₁(t) = t eᵗ`.
//!
//! A series stores the coefficients of `x^offset, …, x^{order−1}`; everything
//! from `x^order` on is unknown, and results never claim more than their
//! operands determine.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient field.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    fn from_u64(n: u64) -> Self;
    /// `|x|` as a float, exactly zero iff `x` is zero.
    fn magnitude(&self) -> f64;
}

impl Scalar for Complex64 {
    fn from_u64(n: u64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Scalar for BigRational {
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
    fn magnitude(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.abs().to_f64().unwrap_or(f64::INFINITY).max(f64::MIN_POSITIVE)
        }
    }
}

/// `n!` in `T`.
pub fn factorial<T: Scalar>(n: usize) -> T {
    let mut acc = T::one();
    for k in 2..=n {
        acc = acc * T::from_u64(k as u64);
    }
    acc
}

fn factorials<T: Scalar>(n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(T::one());
    for k in 1..=n {
        let next = out[k - 1].clone() * T::from_u64(k as u64);
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormalSeries<T> {
    coeffs: Vec<T>,
    offset: usize,
    order: usize,
}

impl<T: Scalar> FormalSeries<T> {
    /// `Σ coeffs[i] x^{offset+i} + O(x^{offset+len})`.
    pub fn new(coeffs: Vec<T>, offset: usize) -> Self {
        let order = offset + coeffs.len();
        FormalSeries { coeffs, offset, order }
    }

    /// Like [`new`](Self::new) with an explicit truncation order, which must
    /// equal `offset + coeffs.len()`.
    pub fn with_order(coeffs: Vec<T>, offset: usize, order: usize) -> Result<Self> {
        if offset + coeffs.len() != order {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients from x^{offset} do not reach order {order}",
                coeffs.len()
            )));
        }
        Ok(FormalSeries { coeffs, offset, order })
    }

    /// First `order` coefficients of `Σ c(n) xⁿ`, starting at `offset`.
    pub fn from_fn(offset: usize, order: usize, mut c: impl FnMut(usize) -> T) -> Self {
        let coeffs = (offset..order.max(offset)).map(&mut c).collect();
        FormalSeries {
            coeffs,
            offset,
            order: order.max(offset),
        }
    }

    /// `e₁(t) = t eᵗ = Σ t^{n+1}/n!`, known to `O(t^order)`.
    pub fn e1(order: usize) -> Self {
        let facts = factorials::<T>(order);
        Self::from_fn(1, order, |n| T::one() / facts[n - 1].clone())
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `xⁿ`; `None` beyond the truncation.
    pub fn coeff(&self, n: usize) -> Option<T> {
        if n >= self.order {
            None
        } else if n < self.offset {
            Some(T::zero())
        } else {
            Some(self.coeffs[n - self.offset].clone())
        }
    }

    /// Drop everything from `x^order` on.
    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order).max(self.offset);
        FormalSeries {
            coeffs: self.coeffs[..order - self.offset].to_vec(),
            offset: self.offset,
            order,
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> FormalSeries<U> {
        FormalSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
            offset: self.offset,
            order: self.order,
        }
    }

    fn get(&self, n: usize) -> T {
        self.coeff(n).expect("index inside truncation")
    }

    /// Largest coefficient discrepancy over the common range.
    pub fn max_difference(&self, other: &Self) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.order.min(other.order);
        (lo..hi)
            .map(|n| (self.get(n) - other.get(n)).magnitude())
            .fold(0.0, f64::max)
    }
}

/// `Σ aₙbₙxⁿ`.
pub fn hadamard_coeff<T: Scalar>(f: &FormalSeries<T>, g: &FormalSeries<T>) -> FormalSeries<T> {
    let offset = f.offset.max(g.offset);
    let order = f.order.min(g.order);
    FormalSeries::from_fn(offset, order, |n| f.get(n) * g.get(n))
}

/// Cauchy product.
pub fn mul<T: Scalar>(f: &FormalSeries<T>, g: &FormalSeries<T>) -> FormalSeries<T> {
    let offset = f.offset + g.offset;
    let order = (f.order + g.offset).min(g.order + f.offset);
    FormalSeries::from_fn(offset, order, |n| {
        let mut acc = T::zero();
        for p in f.offset..=(n - g.offset) {
            acc = acc + f.get(p) * g.get(n - p);
        }
        acc
    })
}

/// `Σ cₙ t^{n+1} ↦ Σ cₙ ξⁿ/n!`.
pub fn borel<T: Scalar>(f: &FormalSeries<T>) -> Result<FormalSeries<T>> {
    if f.offset == 0 {
        return Err(Error::InvalidParameter(
            "the Borel transform needs a series without constant term".into(),
        ));
    }
    let facts = factorials::<T>(f.order);
    Ok(FormalSeries::from_fn(f.offset - 1, f.order - 1, |n| {
        f.get(n + 1) / facts[n].clone()
    }))
}

/// `f * g(ξ) = ∫₀^ξ f(ξ₁) g(ξ − ξ₁) dξ₁`, termwise
/// `ξ^p * ξ^q = p! q!/(p+q+1)! ξ^{p+q+1}`.
pub fn convolve<T: Scalar>(f: &FormalSeries<T>, g: &FormalSeries<T>) -> FormalSeries<T> {
    let offset = f.offset + g.offset + 1;
    let order = (f.order + g.offset).min(g.order + f.offset) + 1;
    let facts = factorials::<T>(order);
    FormalSeries::from_fn(offset, order, |n| {
        let mut acc = T::zero();
        for p in f.offset..=(n - 1 - g.offset) {
            let q = n - 1 - p;
            acc = acc + f.get(p) * g.get(q) * facts[p].clone() * facts[q].clone();
        }
        acc / facts[n].clone()
    })
}

/// `‖Bf̃ ⊙ Bg̃ − B(kernel ⊙ f̃ ⊙ g̃)‖` over `ξ⁰ … ξ^{n−1}`; the identity holds
/// for `kernel = e₁`.
pub fn bridge_residual<T: Scalar>(
    f: &FormalSeries<T>,
    g: &FormalSeries<T>,
    kernel: &FormalSeries<T>,
    n: usize,
) -> Result<f64> {
    if f.offset == 0 || g.offset == 0 {
        return Err(Error::InvalidParameter(
            "both series need zero constant term".into(),
        ));
    }
    let needed = n + 1;
    for (name, s) in [("f̃", f), ("g̃", g), ("kernel", kernel)] {
        if s.order < needed {
            return Err(Error::InvalidParameter(format!(
                "{name} is known to order {}, need {needed}",
                s.order
            )));
        }
    }
    let lhs = hadamard_coeff(&borel(f)?, &borel(g)?).truncate(n);
    let rhs = borel(&hadamard_coeff(&hadamard_coeff(kernel, f), g))?.truncate(n);
    Ok(lhs.max_difference(&rhs))
}

/// Both sides of `Bf̃ ⊙ Bg̃ = B(e₁ ⊙ f̃ ⊙ g̃)` to order `n`; returns the
/// largest discrepancy, exactly zero over the rationals.
pub fn bridge_identity_check<T: Scalar>(f: &FormalSeries<T>, g: &FormalSeries<T>, n: usize) -> Result<f64> {
    bridge_residual(f, g, &FormalSeries::e1(n + 1), n)
}

/// `‖B(f̃·g̃) − Bf̃ * Bg̃‖` to order `n`.
pub fn convolution_residual<T: Scalar>(f: &FormalSeries<T>, g: &FormalSeries<T>, n: usize) -> Result<f64> {
    let lhs = borel(&mul(f, g))?.truncate(n);
    let rhs = convolve(&borel(f)?, &borel(g)?).truncate(n);
    Ok(lhs.max_difference(&rhs))
}

/// Exact conversion of a float series to rationals.
pub fn to_rational(f: &FormalSeries<Complex64>) -> Result<FormalSeries<BigRational>> {
    if f.coeffs.iter().any(|c| c.im != 0.0) {
        return Err(Error::InvalidParameter(
            "only real coefficients have an exact rational form".into(),
        ));
    }
    let coeffs = f
        .coeffs
        .iter()
        .map(|c| {
            BigRational::from_float(c.re)
                .ok_or_else(|| Error::InvalidParameter(format!("{} is not finite", c.re)))
        })
        .collect::<Result<_>>()?;
    Ok(FormalSeries {
        coeffs,
        offset: f.offset,
        order: f.order,
    })
}

pub fn to_complex(f: &FormalSeries<BigRational>) -> FormalSeries<Complex64> {
    f.map(|q| Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0))
}
