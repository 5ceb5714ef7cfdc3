//! Bivariate complex polynomials and their restriction to the line at
//! infinity of the projective plane.

use super::poly::CPoly;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::C;
use num_traits::Zero;
use std::collections::BTreeMap;

/// Monomial exponent pairs `(i, j)` with `i + j <= degree`, in the canonical
/// lexicographic order used throughout the crate.
pub fn monomials(degree: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for i in 0..=degree {
        for j in 0..=(degree - i) {
            out.push((i, j));
        }
    }
    out
}

/// Bivariate polynomial in the affine coordinates `(l1, l2)`, sparse over
/// exponent pairs, with a declared total degree.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPoly<T: Real> {
    coeffs: BTreeMap<(u32, u32), C<T>>,
    total_degree: u32,
}

impl<T: Real> BiPoly<T> {
    /// Builds from entries, pruning zeros; the declared degree is the
    /// largest `i + j` present.
    pub fn new(entries: impl IntoIterator<Item = ((u32, u32), C<T>)>) -> Self {
        let coeffs: BTreeMap<_, _> = entries
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let total_degree = coeffs.keys().map(|&(i, j)| i + j).max().unwrap_or(0);
        Self {
            coeffs,
            total_degree,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.total_degree
    }

    pub fn coeff(&self, i: u32, j: u32) -> C<T> {
        self.coeffs.get(&(i, j)).copied().unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &C<T>)> {
        self.coeffs.iter()
    }

    pub fn eval(&self, l1: C<T>, l2: C<T>) -> C<T> {
        let d = self.total_degree as usize;
        let mut p1 = Vec::with_capacity(d + 1);
        let mut p2 = Vec::with_capacity(d + 1);
        let one = C::new(T::one(), T::zero());
        p1.push(one);
        p2.push(one);
        for k in 0..d {
            p1.push(p1[k] * l1);
            p2.push(p2[k] * l2);
        }
        let mut acc = C::zero();
        for (&(i, j), &c) in &self.coeffs {
            acc = acc + c * p1[i as usize] * p2[j as usize];
        }
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<(u32, u32), C<T>> = BTreeMap::new();
        for (&(i1, j1), &c1) in &self.coeffs {
            for (&(i2, j2), &c2) in &other.coeffs {
                let e = out.entry((i1 + i2, j1 + j2)).or_insert_with(C::zero);
                *e = *e + c1 * c2;
            }
        }
        Self::new(out)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(self.coeffs.iter().map(|(&k, &c)| (k, c * s)))
    }

    pub fn max_coeff_norm(&self) -> T {
        self.coeffs
            .values()
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Normalization convention: largest coefficient magnitude is 1 and the
    /// first coefficient (in `(i, j)` order) attaining it is real positive.
    pub fn normalize(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let max = self.max_coeff_norm();
        let threshold = max * (T::one() - lit::<T>(1e-12));
        let pivot = self
            .coeffs
            .values()
            .find(|c| c.norm() >= threshold)
            .copied()
            .expect("nonzero polynomial has a maximal coefficient");
        // multiplying by conj(pivot)/(|pivot| * max) sends the pivot to
        // |pivot|/max (real positive, ~1) and caps all magnitudes at 1
        let factor = pivot.conj() / (pivot.norm() * max);
        self.scale(factor)
    }
}

/// The restriction of the homogenized polynomial to the line at infinity,
/// in the chart `[1 : x : 0]`.
#[derive(Debug, Clone)]
pub struct TopForm<T: Real> {
    /// `t(x)` = sum of total-degree monomials evaluated at `(1, x)`.
    pub poly: CPoly<T>,
    /// Declared total degree of the curve.
    pub curve_degree: u32,
}

impl<T: Real> TopForm<T> {
    /// Intersection multiplicity at `[0:1:0]`, the point missed by the
    /// chart: the drop from the curve degree to the degree of `t` in `x`.
    pub fn chart_deficiency(&self) -> u32 {
        if self.poly.is_zero() {
            self.curve_degree
        } else {
            self.curve_degree - self.poly.degree() as u32
        }
    }
}

/// Restriction of `P` to the line at infinity: `t(x)` built from the
/// monomials of total degree equal to `P.total_degree()`, evaluated at
/// `(1, x)`, so `x` is the coordinate of `[1 : x : 0]`.
pub fn top_form<T: Real>(p: &BiPoly<T>) -> Result<TopForm<T>> {
    if p.is_zero() {
        return Err(Error::InvalidArgument(
            "top form of the zero polynomial".into(),
        ));
    }
    let d = p.total_degree();
    let mut coeffs = vec![C::<T>::zero(); d as usize + 1];
    for (&(i, j), &c) in p.iter() {
        if i + j == d {
            coeffs[j as usize] = c;
        }
    }
    Ok(TopForm {
        poly: CPoly::new(coeffs),
        curve_degree: d,
    })
}
