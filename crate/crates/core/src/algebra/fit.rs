//! Least-squares machinery: Householder QR over complex scalars, used both
//! for value regression and for the null-vector fits that reconstruct
//! curves from on-curve samples. Orthogonalized columns keep the degree-6
//! Vandermonde systems tractable; normal equations would square their
//! condition numbers.

use super::bipoly::{monomials, BiPoly};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::C;
use num_traits::Zero;

/// Column-major dense complex matrix for the QR routines.
pub(crate) struct ColMatrix<T: Real> {
    pub rows: usize,
    pub cols: Vec<Vec<C<T>>>,
}

/// In-place Householder QR. Afterwards the upper triangle of the columns
/// holds R; `rhs` (if any) is overwritten by Q^H rhs.
fn householder_qr<T: Real>(a: &mut ColMatrix<T>, mut rhs: Option<&mut Vec<C<T>>>) {
    let m = a.rows;
    let n = a.cols.len();
    for k in 0..n.min(m) {
        // Householder vector for column k below the diagonal
        let alpha = {
            let col = &a.cols[k];
            let norm = col[k..].iter().map(|c| c.norm_sqr()).fold(T::zero(), |x, y| x + y).sqrt();
            if norm.is_zero() {
                continue;
            }
            let pivot = col[k];
            let phase = if pivot.is_zero() {
                C::new(T::one(), T::zero())
            } else {
                pivot / pivot.norm()
            };
            -phase * norm
        };
        let mut v: Vec<C<T>> = a.cols[k][k..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm_sq = v.iter().map(|c| c.norm_sqr()).fold(T::zero(), |x, y| x + y);
        if vnorm_sq.is_zero() {
            continue;
        }
        let two = lit::<T>(2.0);
        // apply I - 2 v v^H / |v|^2 to the remaining columns and the rhs
        for j in k..n {
            let dot = {
                let col = &a.cols[j];
                v.iter()
                    .zip(&col[k..])
                    .map(|(vi, ci)| vi.conj() * *ci)
                    .fold(C::<T>::zero(), |x, y| x + y)
            };
            let f = dot * two / vnorm_sq;
            let col = &mut a.cols[j];
            for (vi, ci) in v.iter().zip(col[k..].iter_mut()) {
                *ci = *ci - *vi * f;
            }
        }
        if let Some(b) = rhs.as_deref_mut() {
            let dot = v
                .iter()
                .zip(&b[k..])
                .map(|(vi, ci)| vi.conj() * *ci)
                .fold(C::<T>::zero(), |x, y| x + y);
            let f = dot * two / vnorm_sq;
            for (vi, ci) in v.iter().zip(b[k..].iter_mut()) {
                *ci = *ci - *vi * f;
            }
        }
        // column k is now alpha e_k below-diagonal-zero
        a.cols[k][k] = alpha;
        for i in k + 1..m {
            a.cols[k][i] = C::zero();
        }
    }
}

fn back_substitute<T: Real>(r: &ColMatrix<T>, y: &[C<T>]) -> Result<Vec<C<T>>> {
    let n = r.cols.len();
    let mut x = vec![C::<T>::zero(); n];
    for k in (0..n).rev() {
        let mut acc = y[k];
        for j in k + 1..n {
            acc = acc - r.cols[j][k] * x[j];
        }
        let d = r.cols[k][k];
        if d.norm() < T::epsilon() * lit::<T>(16.0) {
            return Err(Error::RankDeficient(format!("pivot {k} vanishes")));
        }
        x[k] = acc / d;
    }
    Ok(x)
}

fn forward_substitute_adjoint<T: Real>(r: &ColMatrix<T>, y: &[C<T>]) -> Result<Vec<C<T>>> {
    // solve R^H x = y (R^H is lower triangular)
    let n = r.cols.len();
    let mut x = vec![C::<T>::zero(); n];
    for k in 0..n {
        let mut acc = y[k];
        for j in 0..k {
            acc = acc - r.cols[k][j].conj() * x[j];
        }
        let d = r.cols[k][k].conj();
        if d.norm() < T::epsilon() * lit::<T>(16.0) {
            return Err(Error::RankDeficient(format!("pivot {k} vanishes")));
        }
        x[k] = acc / d;
    }
    Ok(x)
}

/// Least-squares solution of `A x ~ b`; returns `(x, residual_norm)`.
pub fn solve_least_squares<T: Real>(
    columns: Vec<Vec<C<T>>>,
    b: Vec<C<T>>,
) -> Result<(Vec<C<T>>, T)> {
    let rows = b.len();
    let ncols = columns.len();
    if rows < ncols {
        return Err(Error::InvalidArgument(
            "least squares needs at least as many samples as unknowns".into(),
        ));
    }
    let mut a = ColMatrix { rows, cols: columns };
    let mut rhs = b;
    householder_qr(&mut a, Some(&mut rhs));
    let x = back_substitute(&a, &rhs[..ncols])?;
    let residual = rhs[ncols..]
        .iter()
        .map(|c| c.norm_sqr())
        .fold(T::zero(), |p, q| p + q)
        .sqrt();
    Ok((x, residual))
}

/// Approximate smallest right singular vector of the column matrix, via QR
/// followed by inverse iteration on `R^H R`. Returns `(v, sigma_min)`.
pub fn min_singular_vector<T: Real>(columns: Vec<Vec<C<T>>>) -> Result<(Vec<C<T>>, T)> {
    let rows = columns.first().map_or(0, |c| c.len());
    let ncols = columns.len();
    if rows < ncols || ncols == 0 {
        return Err(Error::InvalidArgument(
            "null-vector fit needs at least as many samples as unknowns".into(),
        ));
    }
    let mut a = ColMatrix { rows, cols: columns };
    householder_qr(&mut a, None);

    // regularized copy of R for the inverse-iteration solves; exactly
    // singular systems keep their null direction, the floor only makes
    // the triangular solves well-posed
    let rmax = (0..ncols)
        .map(|k| a.cols[k][k].norm())
        .fold(T::zero(), |x, y| x.max(y));
    let floor = rmax.max(T::one()) * T::epsilon() * lit::<T>(256.0);
    let mut solver = ColMatrix {
        rows: a.rows,
        cols: a.cols.clone(),
    };
    for k in 0..ncols {
        if solver.cols[k][k].norm() < floor {
            solver.cols[k][k] = C::new(floor, T::zero());
        }
    }

    // deterministic start, slightly asymmetric
    let mut v: Vec<C<T>> = (0..ncols)
        .map(|k| C::new(T::one() + lit::<T>(0.01 * (k as f64 + 1.0)), lit::<T>(0.003 * k as f64)))
        .collect();
    normalize(&mut v);
    let mut sigma_prev = T::infinity();
    for _ in 0..200 {
        let y = forward_substitute_adjoint(&solver, &v)?;
        let mut z = back_substitute(&solver, &y)?;
        normalize(&mut z);
        v = z;
        let sigma = r_apply_norm(&a, &v);
        if (sigma_prev - sigma).abs() <= sigma * lit::<T>(1e-6) + T::epsilon() {
            sigma_prev = sigma;
            break;
        }
        sigma_prev = sigma;
    }
    Ok((v, sigma_prev))
}

fn r_apply_norm<T: Real>(r: &ColMatrix<T>, v: &[C<T>]) -> T {
    let n = v.len();
    let mut acc = T::zero();
    for i in 0..n {
        let mut row = C::<T>::zero();
        for j in i..n {
            row = row + r.cols[j][i] * v[j];
        }
        acc = acc + row.norm_sqr();
    }
    acc.sqrt()
}

fn normalize<T: Real>(v: &mut [C<T>]) {
    let n = v.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    if !n.is_zero() {
        for c in v.iter_mut() {
            *c = *c / n;
        }
    }
}

/// Result of a bivariate value fit.
#[derive(Debug, Clone)]
pub struct BivariateFit<T: Real> {
    /// Least-squares polynomial, max-coefficient normalized.
    pub poly: BiPoly<T>,
    /// Residual norm of the unnormalized least-squares system.
    pub residual: T,
}

/// Least-squares fit of sampled values by a polynomial of total degree
/// `<= degree`, returned under the max-coefficient normalization.
pub fn fit_bivariate<T: Real>(
    samples: &[((C<T>, C<T>), C<T>)],
    degree: u32,
) -> Result<BivariateFit<T>> {
    let monos = monomials(degree);
    if samples.len() < 2 * monos.len() {
        return Err(Error::InvalidArgument(format!(
            "need at least {} samples for degree {} (got {})",
            2 * monos.len(),
            degree,
            samples.len()
        )));
    }
    let m = samples.len();
    let mut columns: Vec<Vec<C<T>>> = Vec::with_capacity(monos.len());
    let mut scales: Vec<T> = Vec::with_capacity(monos.len());
    for &(i, j) in &monos {
        let mut col = Vec::with_capacity(m);
        for &((l1, l2), _) in samples {
            col.push(l1.powu(i) * l2.powu(j));
        }
        let s = col.iter().map(|c| c.norm()).fold(T::zero(), |a, b| a.max(b));
        let s = if s.is_zero() { T::one() } else { s };
        for c in col.iter_mut() {
            *c = *c / s;
        }
        scales.push(s);
        columns.push(col);
    }
    let b: Vec<C<T>> = samples.iter().map(|&(_, v)| v).collect();
    let (x, residual) = match solve_least_squares(columns, b) {
        Ok(ok) => ok,
        Err(Error::RankDeficient(detail)) => {
            // name the monomial behind the deficient pivot
            let k: usize = detail
                .split_whitespace()
                .nth(1)
                .and_then(|s| s.parse().ok())
                .unwrap_or(0);
            let (i, j) = monos.get(k).copied().unwrap_or((0, 0));
            return Err(Error::RankDeficient(format!(
                "monomial l1^{i} l2^{j} (column {k})"
            )));
        }
        Err(e) => return Err(e),
    };
    let entries = monos
        .iter()
        .zip(x.iter().zip(&scales))
        .map(|(&(i, j), (&c, &s))| ((i, j), c / s));
    let poly = BiPoly::new(entries).normalize();
    Ok(BivariateFit { poly, residual })
}
