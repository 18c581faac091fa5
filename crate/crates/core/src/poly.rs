//! Univariate polynomials over a generic coefficient type. Instantiated with
//! `BigRational` by the moment engine and with floats in tests.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{FromPrimitive, One, Zero};

/// Coefficient requirements: a commutative ring with exact division by small
/// integers (fields qualify).
pub trait Coeff:
    Clone
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + FromPrimitive
    + fmt::Display
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + PartialOrd
        + Zero
        + One
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
        + Neg<Output = T>
        + FromPrimitive
        + fmt::Display
{
}

/// Coefficients ascending: coeffs[k] multiplies t^k.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, Zero::is_zero) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::new(vec![T::zero()])
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// coefficient of t^k (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn eval(&self, t: &T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t.clone() + c.clone();
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        Self::new(coeffs)
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn add_constant(&self, c: &T) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] = coeffs[0].clone() + c.clone();
        Self::new(coeffs)
    }

    /// Antiderivative with zero constant term: int_0^t self(s) ds.
    pub fn integrate(&self) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(T::zero());
        for (k, c) in self.coeffs.iter().enumerate() {
            let div = T::from_usize(k + 1).expect("small integer");
            coeffs.push(c.clone() / div);
        }
        Self::new(coeffs)
    }
}

impl<T: Coeff> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() && self.coeffs.len() > 1 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})*t")?,
                _ => write!(f, "({c})*t^{k}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
