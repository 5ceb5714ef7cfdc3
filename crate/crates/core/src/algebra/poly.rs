//! Dense univariate complex polynomials, ascending coefficient order.

use crate::scalar::{lit, Real};
use crate::C;
use num_traits::Zero;

/// Univariate polynomial with complex coefficients, stored ascending.
///
/// The zero polynomial is the empty coefficient vector; otherwise the
/// leading (last) coefficient is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly<T: Real> {
    coeffs: Vec<C<T>>,
}

impl<T: Real> CPoly<T> {
    /// Builds a polynomial, trimming trailing zero coefficients.
    pub fn new(mut coeffs: Vec<C<T>>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: C<T>) -> Self {
        Self::new(vec![c])
    }

    /// Monic product of `(z - r)` over the given roots.
    pub fn from_roots(roots: &[C<T>]) -> Self {
        let one = C::new(T::one(), T::zero());
        let mut coeffs = vec![one];
        for &r in roots {
            coeffs.push(C::zero());
            for k in (1..coeffs.len()).rev() {
                let prev = coeffs[k - 1];
                coeffs[k] = coeffs[k] * (-r) + prev;
            }
            coeffs[0] = coeffs[0] * (-r);
        }
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero for constants and for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C<T> {
        self.coeffs.get(k).copied().unwrap_or_else(C::zero)
    }

    pub fn leading(&self) -> C<T> {
        self.coeffs.last().copied().unwrap_or_else(C::zero)
    }

    /// Horner evaluation.
    pub fn eval(&self, z: C<T>) -> C<T> {
        let mut acc = C::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Horner evaluation of the polynomial and its derivative.
    pub fn eval_with_derivative(&self, z: C<T>) -> (C<T>, C<T>) {
        let mut p = C::zero();
        let mut dp = C::zero();
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * C::new(lit::<T>(k as f64), T::zero()))
            .collect();
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![C::<T>::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff_norm(&self) -> T {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Magnitude scale of the polynomial near `z`: sum of |a_k| |z|^k.
    /// Used as the denominator of backward-error estimates.
    pub fn magnitude_scale(&self, z: C<T>) -> T {
        let az = z.norm();
        let mut pow = T::one();
        let mut acc = T::zero();
        for c in &self.coeffs {
            acc = acc + c.norm() * pow;
            pow = pow * az;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn from_roots_and_eval() {
        let r = [C64::new(1.0, 0.0), C64::new(-2.0, 1.0)];
        let p = CPoly::from_roots(&r);
        assert_eq!(p.degree(), 2);
        for &root in &r {
            assert!(p.eval(root).norm() < 1e-14);
        }
        assert!(p.eval(C64::new(0.5, 0.5)).norm() > 1e-3);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let p = CPoly::new(vec![
            C64::new(1.0, 0.5),
            C64::new(-2.0, 0.0),
            C64::new(0.0, 3.0),
            C64::new(1.0, 0.0),
        ]);
        let z = C64::new(0.3, -0.7);
        let h = 1e-7;
        let fd = (p.eval(z + C64::new(h, 0.0)) - p.eval(z - C64::new(h, 0.0))) / (2.0 * h);
        let (_, dp) = p.eval_with_derivative(z);
        assert!((fd - dp).norm() < 1e-6);
        assert!((p.derivative().eval(z) - dp).norm() < 1e-12);
    }

    #[test]
    fn trims_leading_zeros() {
        let p = CPoly::new(vec![C64::new(2.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(p.degree(), 0);
        assert!(CPoly::<f64>::new(vec![]).is_zero());
    }
}
