//! Milnor coordinates for the moduli space of quadratic rational maps:
//! fixed-point multipliers, representative maps, the `Per_1` lines, their
//! points at infinity, and the two-neutral-fixed-points construction that
//! escapes to the line at infinity.

use crate::algebra::{cubic_roots, poly_roots, CPoly};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::sphere::{HomogeneousLift, SpherePoint};
use crate::C;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;

/// A point of moduli space in the affine chart `(sigma1, sigma2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuliPoint<T: Real> {
    pub sigma1: C<T>,
    pub sigma2: C<T>,
}

impl<T: Real> ModuliPoint<T> {
    pub fn new(sigma1: C<T>, sigma2: C<T>) -> Self {
        Self { sigma1, sigma2 }
    }

    /// Projective representative `[sigma1 : sigma2 : 1]`.
    pub fn projective(&self) -> ProjPoint<T> {
        ProjPoint::new([self.sigma1, self.sigma2, C::new(T::one(), T::zero())])
    }

    /// Euclidean norm of the affine pair.
    pub fn norm(&self) -> T {
        (self.sigma1.norm_sqr() + self.sigma2.norm_sqr()).sqrt()
    }

    /// A quadratic rational map in this conjugacy class, built from the
    /// pair of fixed-point multipliers best conditioned for `normal_form`.
    pub fn representative(&self) -> Result<QuadraticRationalMap<T>> {
        let data = multiplier_cubic(self)?;
        let mut mults = data.multipliers;
        mults.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
        let mut best: Option<(T, C<T>, C<T>)> = None;
        for &(i, j) in &pairs {
            let margin = (C::new(T::one(), T::zero()) - mults[i] * mults[j]).norm();
            if best.as_ref().map_or(true, |(m, _, _)| margin > *m) {
                best = Some((margin, mults[i], mults[j]));
            }
        }
        let (margin, alpha, beta) = best.unwrap();
        if margin < lit::<T>(1e-9) {
            return Err(Error::DegenerateParameter(format!(
                "every multiplier pair has alpha*beta = 1 at ({}, {})",
                self.sigma1, self.sigma2
            )));
        }
        normal_form(alpha, beta)
    }
}

/// A point of the projective plane compactifying moduli space.
#[derive(Debug, Clone, Copy)]
pub struct ProjPoint<T: Real> {
    pub s: [C<T>; 3],
}

impl<T: Real> ProjPoint<T> {
    pub fn new(s: [C<T>; 3]) -> Self {
        Self { s }
    }

    pub fn is_at_infinity(&self) -> bool {
        self.s[2].is_zero()
    }

    pub fn to_affine(&self) -> Option<ModuliPoint<T>> {
        if self.s[2].is_zero() {
            None
        } else {
            Some(ModuliPoint::new(
                self.s[0] / self.s[2],
                self.s[1] / self.s[2],
            ))
        }
    }

    /// Fubini-Study chordal distance, scale-invariant in both arguments.
    pub fn distance(&self, other: &Self) -> T {
        let u = &self.s;
        let v = &other.s;
        let w01 = u[0] * v[1] - u[1] * v[0];
        let w02 = u[0] * v[2] - u[2] * v[0];
        let w12 = u[1] * v[2] - u[2] * v[1];
        let num = (w01.norm_sqr() + w02.norm_sqr() + w12.norm_sqr()).sqrt();
        let nu = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
        let nv = (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt();
        num / (nu * nv)
    }
}

/// Degree-2 rational map `num/den` with coefficient triples stored
/// descending: `num = a2 z^2 + a1 z + a0`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticRationalMap<T: Real> {
    pub num: [C<T>; 3],
    pub den: [C<T>; 3],
}

impl<T: Real> QuadraticRationalMap<T> {
    pub fn new(num: [C<T>; 3], den: [C<T>; 3]) -> Result<Self> {
        let f = Self { num, den };
        f.check_nondegenerate()?;
        Ok(f)
    }

    /// The polynomial `z^2 + c` as a rational map.
    pub fn polynomial(c: C<T>) -> Self {
        let zero = C::zero();
        let one = C::new(T::one(), T::zero());
        Self {
            num: [one, zero, c],
            den: [zero, zero, one],
        }
    }

    pub fn lift(&self) -> HomogeneousLift<T> {
        HomogeneousLift {
            a: self.num,
            b: self.den,
        }
    }

    /// Resultant of the two quadratics; zero iff they share a root or the
    /// map drops degree.
    pub fn resultant(&self) -> C<T> {
        let [a2, a1, a0] = self.num;
        let [b2, b1, b0] = self.den;
        let m = a2 * b0 - a0 * b2;
        (m * m) - (a2 * b1 - a1 * b2) * (a1 * b0 - a0 * b1)
    }

    fn coeff_scale(&self) -> T {
        self.num
            .iter()
            .chain(self.den.iter())
            .map(|c| c.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        let scale = self.coeff_scale();
        if scale.is_zero() {
            return Err(Error::DegenerateMap("zero coefficients".into()));
        }
        let res = self.resultant().norm() / (scale * scale * scale * scale);
        if res < lit::<T>(1e-12) {
            return Err(Error::DegenerateMap(format!(
                "resultant ~ 0 (relative {:e})",
                res.to_f64().unwrap_or(f64::NAN)
            )));
        }
        if (self.num[0].norm() + self.den[0].norm()) / scale < lit::<T>(1e-14) {
            return Err(Error::DegenerateMap("degree drops below 2".into()));
        }
        Ok(())
    }

    pub fn apply(&self, p: &SpherePoint<T>) -> SpherePoint<T> {
        self.lift().apply(p)
    }

    /// Conjugate by the Mobius map `(m11 z + m12)/(m21 z + m22)`.
    pub fn conjugate(&self, m: [[C<T>; 2]; 2]) -> Self {
        // M o f: postcompose the lift with the matrix
        let comp = |c1: C<T>, c2: C<T>, p: &[C<T>; 3], q: &[C<T>; 3]| {
            [
                c1 * p[0] + c2 * q[0],
                c1 * p[1] + c2 * q[1],
                c1 * p[2] + c2 * q[2],
            ]
        };
        let num1 = comp(m[0][0], m[0][1], &self.num, &self.den);
        let den1 = comp(m[1][0], m[1][1], &self.num, &self.den);
        // f o M^{-1}: substitute (x, y) -> (m22 x - m12 y, -m21 x + m11 y)
        let (p, q) = (m[1][1], -m[0][1]);
        let (r, s) = (-m[1][0], m[0][0]);
        let two = T::one() + T::one();
        let subst = |c: &[C<T>; 3]| {
            let [c2, c1, c0] = *c;
            [
                c2 * p * p + c1 * p * r + c0 * r * r,
                (c2 * p * q + c0 * r * s).scale(two) + c1 * (p * s + q * r),
                c2 * q * q + c1 * q * s + c0 * s * s,
            ]
        };
        Self {
            num: subst(&num1),
            den: subst(&den1),
        }
    }
}

/// Multipliers of the three fixed points together with their symmetric
/// functions.
#[derive(Debug, Clone)]
pub struct FixedPointData<T: Real> {
    pub multipliers: Vec<C<T>>,
    pub sigma1: C<T>,
    pub sigma2: C<T>,
    pub sigma3: C<T>,
}

pub(crate) fn symmetric_functions<T: Real>(m: &[C<T>]) -> (C<T>, C<T>, C<T>) {
    let s1 = m[0] + m[1] + m[2];
    let s2 = m[0] * m[1] + m[0] * m[2] + m[1] * m[2];
    let s3 = m[0] * m[1] * m[2];
    (s1, s2, s3)
}

/// Fixed-point multipliers of the class `(sigma1, sigma2)`: the roots of
/// the cubic `t^3 - sigma1 t^2 + sigma2 t - (sigma1 - 2)`, whose constant
/// term is pinned by the holomorphic index relation `sigma3 = sigma1 - 2`.
pub fn multiplier_cubic<T: Real>(pt: &ModuliPoint<T>) -> Result<FixedPointData<T>> {
    let two = C::new(lit::<T>(2.0), T::zero());
    let multipliers = cubic_roots(-pt.sigma1, pt.sigma2, -(pt.sigma1 - two)).to_vec();
    let (s1, s2, s3) = symmetric_functions(&multipliers);
    let scale = T::one() + pt.sigma1.norm() + pt.sigma2.norm();
    if (s1 - pt.sigma1).norm() > lit::<T>(1e-9) * scale
        || (s2 - pt.sigma2).norm() > lit::<T>(1e-9) * scale
    {
        return Err(Error::RootFinding {
            iterations: 0,
            residual: ((s1 - pt.sigma1).norm() + (s2 - pt.sigma2).norm())
                .to_f64()
                .unwrap_or(f64::NAN),
        });
    }
    Ok(FixedPointData {
        multipliers,
        sigma1: s1,
        sigma2: s2,
        sigma3: s3,
    })
}

/// Representative map with fixed points 0 and infinity of multipliers
/// `alpha` and `beta`: `f(z) = z (z + alpha) / (beta z + 1)`.
pub fn normal_form<T: Real>(alpha: C<T>, beta: C<T>) -> Result<QuadraticRationalMap<T>> {
    let one = C::new(T::one(), T::zero());
    if (one - alpha * beta).norm() < lit::<T>(1e-12) * (T::one() + (alpha * beta).norm()) {
        return Err(Error::DegenerateParameter(format!(
            "alpha*beta = 1 (alpha = {alpha}, beta = {beta}): fixed points collide"
        )));
    }
    let zero = C::zero();
    QuadraticRationalMap::new([one, alpha, zero], [zero, beta, one])
}

/// Multiplier of the third fixed point given the other two, from the
/// holomorphic index relation.
pub fn third_multiplier<T: Real>(alpha: C<T>, beta: C<T>) -> Result<C<T>> {
    let one = C::new(T::one(), T::zero());
    let two = C::new(lit::<T>(2.0), T::zero());
    let denom = one - alpha * beta;
    if denom.norm() < lit::<T>(1e-14) * (T::one() + (alpha * beta).norm()) {
        return Err(Error::DegenerateParameter(
            "alpha*beta = 1: index relation degenerates".into(),
        ));
    }
    Ok((two - alpha - beta) / denom)
}

/// Fixed points of `f` on the sphere (roots of `z den(z) - num(z)`, plus
/// infinity once per unit of degree drop), as unit projective points.
pub fn fixed_points<T: Real>(f: &QuadraticRationalMap<T>) -> Result<Vec<SpherePoint<T>>> {
    f.check_nondegenerate()?;
    let [a2, a1, a0] = f.num;
    let [b2, b1, b0] = f.den;
    let phi = CPoly::new(vec![-a0, b0 - a1, b1 - a2, b2]);
    let finite_degree = if phi.is_zero() { 0 } else { phi.degree() };
    let drop = 3 - finite_degree;
    let mut pts: Vec<SpherePoint<T>> = if finite_degree >= 1 {
        poly_roots(&phi)?
            .into_iter()
            .map(SpherePoint::from_affine)
            .collect()
    } else {
        Vec::new()
    };
    for _ in 0..drop {
        pts.push(SpherePoint::infinity());
    }
    if pts.len() != 3 {
        return Err(Error::DegenerateMap(format!(
            "expected 3 fixed points, got {}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Class of `f` in Milnor coordinates: multipliers of the three fixed
/// points (chart-corrected at infinity), folded into `(sigma1, sigma2)`.
/// The computed `sigma3` is checked against the index relation.
pub fn sigma_of_map<T: Real>(f: &QuadraticRationalMap<T>) -> Result<ModuliPoint<T>> {
    let pts = fixed_points(f)?;
    let lift = f.lift();
    let mults: Vec<C<T>> = pts
        .iter()
        .map(|p| lift.cycle_multiplier(std::slice::from_ref(p)))
        .collect();
    let (s1, s2, s3) = symmetric_functions(&mults);
    let two = C::new(lit::<T>(2.0), T::zero());
    let scale = T::one() + s1.norm() + s2.norm() + s3.norm();
    if (s3 - (s1 - two)).norm() > lit::<T>(1e-9) * scale {
        return Err(Error::DegenerateMap(format!(
            "index relation violated: sigma3 - (sigma1 - 2) = {}",
            s3 - (s1 - two)
        )));
    }
    Ok(ModuliPoint::new(s1, s2))
}

/// Coefficients `(A, B, C)` of the line `Per_1(w)` in the affine chart:
/// `A l1 + B l2 + C = 0` with `A = w^2 + 1`, `B = -w`, `C = -(w^3 + 2)`.
pub fn per1_line<T: Real>(w: C<T>) -> (C<T>, C<T>, C<T>) {
    let one = C::new(T::one(), T::zero());
    let two = C::new(lit::<T>(2.0), T::zero());
    (w * w + one, -w, -(w * w * w + two))
}

/// The intersection of `Per_1(w)` with the line at infinity,
/// `[w : w^2 + 1 : 0]`.
pub fn per1_infinity_point<T: Real>(w: C<T>) -> ProjPoint<T> {
    let one = C::new(T::one(), T::zero());
    ProjPoint::new([w, w * w + one, C::zero()])
}

/// Exact check that `Per_1(w)` contains `[w : w^2+1 : 0]`, over rational
/// `w`; no tolerance involved.
pub fn per1_contains_infinity_point_exact(w: Ratio<i128>) -> bool {
    let one = Ratio::from_integer(1i128);
    let a = w * w + one;
    let b = -w;
    (a * w + b * (w * w + one)).is_zero()
}

/// Affine intersection point of `Per_1(w1)` and `Per_1(w2)`.
pub fn per1_intersection<T: Real>(w1: C<T>, w2: C<T>) -> Result<ModuliPoint<T>> {
    let (a1, b1, c1) = per1_line(w1);
    let (a2, b2, c2) = per1_line(w2);
    let det = a1 * b2 - a2 * b1;
    let scale = (a1.norm() + b1.norm()) * (a2.norm() + b2.norm()) + T::one();
    if det.norm() < lit::<T>(1e-14) * scale {
        return Err(Error::DegenerateParameter(format!(
            "Per_1 lines for w1 = {w1}, w2 = {w2} are coincident or meet at infinity"
        )));
    }
    let s1 = (-c1 * b2 + c2 * b1) / det;
    let s2 = (-a1 * c2 + a2 * c1) / det;
    let pt = ModuliPoint::new(s1, s2);
    let r1 = (a1 * s1 + b1 * s2 + c1).norm();
    let r2 = (a2 * s1 + b2 * s2 + c2).norm();
    let allowed = lit::<T>(1e-12) * (T::one() + s1.norm() + s2.norm()) * scale;
    if r1 > allowed || r2 > allowed {
        return Err(Error::DegenerateParameter(format!(
            "intersection residuals {:e}, {:e} out of range",
            r1.to_f64().unwrap_or(f64::NAN),
            r2.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(pt)
}

/// The parameter with two neutral fixed points of angles `theta0` and
/// `theta - theta0`, together with the multiplier of its third fixed
/// point. As `theta -> 0` it escapes along `Per_1(e^{2 pi i theta0})`
/// toward `[1 : 2 cos(2 pi theta0) : 0]`.
pub fn lambda_theta<T: Real>(theta0: T, theta: T) -> Result<(ModuliPoint<T>, C<T>)> {
    if theta0 <= T::zero() || theta0 >= T::one() {
        return Err(Error::InvalidArgument("need 0 < theta0 < 1".into()));
    }
    let tau = T::TAU();
    let e = |t: T| C::from_polar(T::one(), tau * t);
    let w1 = e(theta0);
    let w2 = e(theta - theta0);
    let pt = per1_intersection(w1, w2)?;
    let two = C::new(lit::<T>(2.0), T::zero());
    let one = C::new(T::one(), T::zero());
    let gamma = (two - w1 - w2) / (one - e(theta));
    Ok((pt, gamma))
}

/// Limit direction of `lambda_theta(theta0, .)` on the line at infinity.
pub fn lambda_theta_limit<T: Real>(theta0: T) -> ProjPoint<T> {
    let one = C::new(T::one(), T::zero());
    let x = lit::<T>(2.0) * (T::TAU() * theta0).cos();
    ProjPoint::new([one, C::new(x, T::zero()), C::zero()])
}

/// The cluster point `[1 : 2 cos(2 pi p/q) : 0]` of the `Per_n` curves
/// on the line at infinity.
pub fn infinity_point<T: Real>(p: u32, q: u32) -> Result<ProjPoint<T>> {
    check_pq(p, q)?;
    let x = lit::<T>(2.0) * (T::TAU() * lit::<T>(p as f64) / lit::<T>(q as f64)).cos();
    let one = C::new(T::one(), T::zero());
    Ok(ProjPoint::new([one, C::new(x, T::zero()), C::zero()]))
}

/// Validates `1 <= p <= q/2` with `p` and `q` coprime.
pub fn check_pq(p: u32, q: u32) -> Result<()> {
    if p < 1 || 2 * p > q || p.gcd(&q) != 1 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= p <= q/2 with gcd(p, q) = 1, got p/q = {p}/{q}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_in_square, stream_rng};
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted_by_norm(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        v
    }

    #[test]
    fn multiplier_cubic_squaring_class() {
        // (2, 0) is the class of z^2: multipliers {0, 0, 2}
        let data = multiplier_cubic(&ModuliPoint::new(c(2.0, 0.0), c(0.0, 0.0))).unwrap();
        let m = sorted_by_norm(data.multipliers);
        assert!(m[0].norm() < 1e-7 && m[1].norm() < 1e-7);
        assert!((m[2] - c(2.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn multiplier_cubic_basilica_class() {
        // (2, -4) is the class of z^2 - 1: multipliers {0, 1+sqrt5, 1-sqrt5}
        let data = multiplier_cubic(&ModuliPoint::new(c(2.0, 0.0), c(-4.0, 0.0))).unwrap();
        let s5 = 5.0f64.sqrt();
        let mut expected = vec![c(0.0, 0.0), c(1.0 + s5, 0.0), c(1.0 - s5, 0.0)];
        for m in data.multipliers {
            let k = expected
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| (m - **a).norm().partial_cmp(&(m - **b).norm()).unwrap())
                .map(|(k, _)| k)
                .unwrap();
            assert!((m - expected[k]).norm() < 1e-9);
            expected.remove(k);
        }
    }

    #[test]
    fn multiplier_cubic_triple_parabolic() {
        // (3, 3): t^3 - 3t^2 + 3t - 1 = (t - 1)^3
        let data = multiplier_cubic(&ModuliPoint::new(c(3.0, 0.0), c(3.0, 0.0))).unwrap();
        for m in data.multipliers {
            // a triple root is only determined to ~eps^(1/3)
            assert!((m - c(1.0, 0.0)).norm() < 1e-3);
        }
    }

    #[test]
    fn sigma_of_squaring_map() {
        let f = QuadraticRationalMap::polynomial(c(0.0, 0.0));
        let pt = sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - c(2.0, 0.0)).norm() < 1e-10);
        assert!(pt.sigma2.norm() < 1e-10);
    }

    #[test]
    fn sigma_of_quadratic_polynomial_family() {
        // sigma(z^2 + c) = (2, 4c); cross-check Per_1(0) = {sigma1 = 2}
        let mut rng = stream_rng(21, 0);
        for _ in 0..50 {
            let cc = complex_in_square(&mut rng, 2.0);
            let f = QuadraticRationalMap::polynomial(cc);
            let pt = sigma_of_map(&f).unwrap();
            assert!((pt.sigma1 - c(2.0, 0.0)).norm() < 1e-9);
            assert!((pt.sigma2 - cc * 4.0).norm() < 1e-9);
            let (a, b, cl) = per1_line(c(0.0, 0.0));
            assert!((a * pt.sigma1 + b * pt.sigma2 + cl).norm() < 1e-9);
        }
    }

    #[test]
    fn sigma_of_inverse_square() {
        // z -> 1/z^2: fixed points are the cube roots of 1, each with
        // multiplier -2, so sigma1 = -6; the index relation must hold.
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let f = QuadraticRationalMap::new([zero, zero, one], [one, zero, zero]).unwrap();
        let pt = sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - c(-6.0, 0.0)).norm() < 1e-9);
        assert!((pt.sigma2 - c(12.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn index_relation_on_random_maps() {
        let mut rng = stream_rng(21, 1);
        let mut checked = 0;
        while checked < 200 {
            let mut coeff = || complex_in_square(&mut rng, 1.0);
            let f = match QuadraticRationalMap::new(
                [coeff(), coeff(), coeff()],
                [coeff(), coeff(), coeff()],
            ) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let pts = fixed_points(&f).unwrap();
            let lift = f.lift();
            let m: Vec<C64> = pts
                .iter()
                .map(|p| lift.cycle_multiplier(std::slice::from_ref(p)))
                .collect();
            let (s1, _, s3) = symmetric_functions(&m);
            assert!(
                (s3 - (s1 - c(2.0, 0.0))).norm() < 1e-8 * (1.0 + s1.norm() + s3.norm()),
                "index relation violated: {}",
                (s3 - (s1 - c(2.0, 0.0))).norm()
            );
            checked += 1;
        }
    }

    #[test]
    fn normal_form_basics() {
        // (0, 0) -> z^2
        let f = normal_form(c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let pt = sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - c(2.0, 0.0)).norm() < 1e-10);
        assert!(pt.sigma2.norm() < 1e-10);
        // (2, 0.5) -> alpha*beta = 1 is rejected
        assert!(normal_form(c(2.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn normal_form_third_multiplier_round_trip() {
        // (0.5, 0.25): gamma = (2 - 0.75)/(1 - 0.125) = 10/7
        let alpha = c(0.5, 0.0);
        let beta = c(0.25, 0.0);
        let gamma = third_multiplier(alpha, beta).unwrap();
        assert!((gamma - c(10.0 / 7.0, 0.0)).norm() < 1e-14);
        let f = normal_form(alpha, beta).unwrap();
        let pt = sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - (alpha + beta + gamma)).norm() < 1e-9);
    }

    #[test]
    fn third_multiplier_examples() {
        assert!((third_multiplier(c(0.0, 0.0), c(0.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let s5 = 5.0f64.sqrt();
        let g = third_multiplier(c(1.0 + s5, 0.0), c(1.0 - s5, 0.0)).unwrap();
        assert!(g.norm() < 1e-15);
        // unit-circle pair matches the displayed closed form
        let tau = std::f64::consts::TAU;
        let (t0, t) = (0.23, 0.011);
        let w1 = C64::from_polar(1.0, tau * t0);
        let w2 = C64::from_polar(1.0, tau * (t - t0));
        let g = third_multiplier(w1, w2).unwrap();
        let expect = (c(2.0, 0.0) - w1 - w2) / (c(1.0, 0.0) - C64::from_polar(1.0, tau * t));
        assert!((g - expect).norm() < 1e-13);
    }

    #[test]
    fn round_trip_multiplier_multiset() {
        let mut rng = stream_rng(21, 2);
        let mut done = 0;
        while done < 200 {
            let alpha = complex_in_square(&mut rng, 1.5);
            let beta = complex_in_square(&mut rng, 1.5);
            if (c(1.0, 0.0) - alpha * beta).norm() < 1e-2 {
                continue;
            }
            let gamma = third_multiplier(alpha, beta).unwrap();
            let f = normal_form(alpha, beta).unwrap();
            let pt = sigma_of_map(&f).unwrap();
            let data = multiplier_cubic(&pt).unwrap();
            let mut expected = vec![alpha, beta, gamma];
            for m in data.multipliers {
                let k = expected
                    .iter()
                    .enumerate()
                    .min_by(|(_, a), (_, b)| {
                        (m - **a).norm().partial_cmp(&(m - **b).norm()).unwrap()
                    })
                    .map(|(k, _)| k)
                    .unwrap();
                assert!(
                    (m - expected[k]).norm() < 1e-8 * (1.0 + m.norm()),
                    "multiplier {m} missed {}",
                    expected[k]
                );
                expected.remove(k);
            }
            done += 1;
        }
    }

    #[test]
    fn per1_line_examples() {
        let (a, b, cl) = per1_line(c(0.0, 0.0));
        assert_eq!((a, b, cl), (c(1.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)));
        let (a, b, cl) = per1_line(c(1.0, 0.0));
        assert_eq!((a, b, cl), (c(2.0, 0.0), c(-1.0, 0.0), c(-3.0, 0.0)));
    }

    #[test]
    fn per1_contains_its_infinity_point() {
        let mut rng = stream_rng(21, 3);
        for _ in 0..20 {
            let w = complex_in_square(&mut rng, 2.0);
            let (a, b, _) = per1_line(w);
            let p = per1_infinity_point(w);
            assert!((a * p.s[0] + b * p.s[1]).norm() < 1e-13 * (1.0 + w.norm().powi(3)));
        }
        for num in -30i128..=30 {
            for den in 1i128..=5 {
                assert!(per1_contains_infinity_point_exact(Ratio::new(num, den)));
            }
        }
    }

    #[test]
    fn per1_intersections() {
        // (0, w) -> (2, 2w - w^2)
        let w = c(0.7, -0.3);
        let pt = per1_intersection(c(0.0, 0.0), w).unwrap();
        assert!((pt.sigma1 - c(2.0, 0.0)).norm() < 1e-12);
        assert!((pt.sigma2 - (w * 2.0 - w * w)).norm() < 1e-12);
        // (0, 1) -> (2, 1), the class of z^2 + 1/4
        let pt = per1_intersection(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((pt.sigma2 - c(1.0, 0.0)).norm() < 1e-12);
        // same line twice
        assert!(per1_intersection(w, w).is_err());
        // reciprocal w's share the infinity point
        assert!(per1_intersection(c(2.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn lambda_theta_escapes_with_unbounded_gamma() {
        let (pt, gamma) = lambda_theta(0.3, 1e-3).unwrap();
        assert!(gamma.norm() >= 100.0);
        let d = pt.projective().distance(&lambda_theta_limit(0.3));
        assert!(d <= 1e-2, "projective distance {d}");
    }

    #[test]
    fn lambda_theta_limit_direction_quarter() {
        // theta0 = 1/4: 2 cos(pi/2) = 0, direction [1 : 0 : 0]
        let lim = lambda_theta_limit::<f64>(0.25);
        assert!(lim.s[1].norm() < 1e-15);
        let d = lim.distance(&ProjPoint::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        assert!(d < 1e-15);
    }

    #[test]
    fn lambda_theta_half_is_finite_with_neutral_pair() {
        let (pt, _) = lambda_theta::<f64>(0.5, 0.1).unwrap();
        assert!(pt.norm().is_finite());
        let data = multiplier_cubic(&pt).unwrap();
        let units = data
            .multipliers
            .iter()
            .filter(|m| (m.norm() - 1.0).abs() < 1e-7)
            .count();
        assert!(units >= 2);
    }

    #[test]
    fn lambda_theta_direction_monotone_convergence() {
        for &theta0 in &[0.1, 0.3, 0.45] {
            let lim = lambda_theta_limit(theta0);
            let mut prev = f64::INFINITY;
            for k in 5..=20 {
                let theta = (2.0f64).powi(-k);
                let (pt, _) = lambda_theta(theta0, theta).unwrap();
                let d = pt.projective().distance(&lim);
                assert!(
                    d <= prev * (1.0 + 1e-9),
                    "theta0 {theta0}, k {k}: {d} vs {prev}"
                );
                prev = d;
            }
        }
    }

    #[test]
    fn infinity_point_values() {
        let p = infinity_point::<f64>(1, 2).unwrap();
        assert!((p.s[1] - c(-2.0, 0.0)).norm() < 1e-15);
        let p = infinity_point::<f64>(1, 3).unwrap();
        assert!((p.s[1] - c(-1.0, 0.0)).norm() < 1e-14);
        let p = infinity_point::<f64>(1, 4).unwrap();
        assert!(p.s[1].norm() < 1e-15);
        assert!(infinity_point::<f64>(0, 1).is_err());
        assert!(infinity_point::<f64>(2, 4).is_err());
        assert!(infinity_point::<f64>(2, 3).is_err());
    }

    #[test]
    fn representative_is_in_the_class() {
        let mut rng = stream_rng(21, 4);
        for _ in 0..30 {
            let pt = ModuliPoint::new(
                complex_in_square(&mut rng, 3.0),
                complex_in_square(&mut rng, 3.0),
            );
            let f = pt.representative().unwrap();
            let back = sigma_of_map(&f).unwrap();
            assert!((back.sigma1 - pt.sigma1).norm() < 1e-7 * (1.0 + pt.norm()));
            assert!((back.sigma2 - pt.sigma2).norm() < 1e-7 * (1.0 + pt.norm()));
        }
    }

    #[test]
    fn conjugation_preserves_sigma() {
        let mut rng = stream_rng(21, 5);
        for _ in 0..20 {
            let cc = complex_in_square(&mut rng, 1.0);
            let f = QuadraticRationalMap::polynomial(cc);
            let m = [
                [
                    complex_in_square(&mut rng, 1.0),
                    complex_in_square(&mut rng, 1.0),
                ],
                [
                    complex_in_square(&mut rng, 1.0),
                    complex_in_square(&mut rng, 1.0),
                ],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.norm() < 0.1 {
                continue;
            }
            let g = f.conjugate(m);
            let p1 = sigma_of_map(&f).unwrap();
            let p2 = sigma_of_map(&g).unwrap();
            assert!((p1.sigma1 - p2.sigma1).norm() < 1e-8 * (1.0 + p1.norm()));
            assert!((p1.sigma2 - p2.sigma2).norm() < 1e-8 * (1.0 + p1.norm()));
        }
    }
}
