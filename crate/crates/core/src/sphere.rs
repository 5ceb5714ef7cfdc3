//! Points on the Riemann sphere in homogeneous coordinates, with the
//! chart bookkeeping needed to evaluate cycle multipliers and spherical
//! derivatives without ever special-casing infinity.

use crate::scalar::Real;
use crate::C;
use num_traits::Zero;

/// A point `[x : y]` of the projective line, kept unit-normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint<T: Real> {
    pub x: C<T>,
    pub y: C<T>,
}

/// Local chart at a point: `z = x/y` near the origin side, `w = y/x`
/// near infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    Z,
    W,
}

impl<T: Real> SpherePoint<T> {
    pub fn new(x: C<T>, y: C<T>) -> Self {
        Self { x, y }.normalized()
    }

    pub fn from_affine(z: C<T>) -> Self {
        Self::new(z, C::new(T::one(), T::zero()))
    }

    pub fn infinity() -> Self {
        Self {
            x: C::new(T::one(), T::zero()),
            y: C::zero(),
        }
    }

    pub fn is_infinity(&self) -> bool {
        self.y.is_zero()
    }

    /// Affine coordinate; `None` at infinity.
    pub fn to_affine(&self) -> Option<C<T>> {
        if self.y.is_zero() {
            None
        } else {
            Some(self.x / self.y)
        }
    }

    fn normalized(self) -> Self {
        let n = (self.x.norm_sqr() + self.y.norm_sqr()).sqrt();
        if n.is_zero() {
            return Self::infinity();
        }
        Self {
            x: self.x / n,
            y: self.y / n,
        }
    }

    /// Chordal distance, `|x1 y2 - x2 y1|` for unit representatives;
    /// ranges over `[0, 1]`.
    pub fn chordal(&self, other: &Self) -> T {
        (self.x * other.y - other.x * self.y).norm()
    }

    /// The better-conditioned chart at this point.
    pub fn chart(&self) -> Chart {
        if self.x.norm() <= self.y.norm() {
            Chart::Z
        } else {
            Chart::W
        }
    }

    /// Coordinate in the given chart.
    pub fn coord(&self, chart: Chart) -> C<T> {
        match chart {
            Chart::Z => self.x / self.y,
            Chart::W => self.y / self.x,
        }
    }
}

/// Homogeneous degree-2 pair `(P, Q)` lifting a quadratic rational map.
///
/// `P(x, y) = a2 x^2 + a1 x y + a0 y^2`, similarly `Q` with `b`.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneousLift<T: Real> {
    pub a: [C<T>; 3],
    pub b: [C<T>; 3],
}

impl<T: Real> HomogeneousLift<T> {
    /// Raw (unnormalized) image of a unit-normalized point.
    pub fn apply_raw(&self, p: &SpherePoint<T>) -> (C<T>, C<T>) {
        let xx = p.x * p.x;
        let xy = p.x * p.y;
        let yy = p.y * p.y;
        let u = self.a[0] * xx + self.a[1] * xy + self.a[2] * yy;
        let v = self.b[0] * xx + self.b[1] * xy + self.b[2] * yy;
        (u, v)
    }

    pub fn apply(&self, p: &SpherePoint<T>) -> SpherePoint<T> {
        let (u, v) = self.apply_raw(p);
        SpherePoint::new(u, v)
    }

    /// The two chart-gradient combinations
    /// `A = P_x Q - P Q_x` and `B = P_y Q - P Q_y` at a unit point,
    /// together with the raw image. Every chart derivative of the map is
    /// a ratio of these.
    fn gradients(&self, p: &SpherePoint<T>) -> (C<T>, C<T>, C<T>, C<T>) {
        let two = C::new(T::one() + T::one(), T::zero());
        let (u, v) = self.apply_raw(p);
        let px = two * self.a[0] * p.x + self.a[1] * p.y;
        let py = self.a[1] * p.x + two * self.a[2] * p.y;
        let qx = two * self.b[0] * p.x + self.b[1] * p.y;
        let qy = self.b[1] * p.x + two * self.b[2] * p.y;
        let big_a = px * v - u * qx;
        let big_b = py * v - u * qy;
        (big_a, big_b, u, v)
    }

    /// Derivative of `chart_out . f . chart_in^{-1}` at `p`, the exact
    /// chain-rule factor for cycle multipliers.
    pub fn chart_derivative(&self, p: &SpherePoint<T>, chart_in: Chart, chart_out: Chart) -> C<T> {
        let (big_a, big_b, u, v) = self.gradients(p);
        match (chart_in, chart_out) {
            (Chart::Z, Chart::Z) => p.y * big_a / (v * v),
            (Chart::Z, Chart::W) => -(p.y * big_a) / (u * u),
            (Chart::W, Chart::Z) => p.x * big_b / (v * v),
            (Chart::W, Chart::W) => -(p.x * big_b) / (u * u),
        }
    }

    /// Norm of the derivative in the spherical (chordal) metric; chart-free.
    pub fn spherical_derivative(&self, p: &SpherePoint<T>) -> T {
        let (big_a, big_b, u, v) = self.gradients(p);
        let image_sq = u.norm_sqr() + v.norm_sqr();
        if p.x.norm() <= p.y.norm() {
            big_a.norm() / (p.y.norm() * image_sq)
        } else {
            big_b.norm() / (p.x.norm() * image_sq)
        }
    }

    /// Multiplier of the cycle through the given (unit-normalized,
    /// consecutively mapped) points, via chart-corrected products.
    pub fn cycle_multiplier(&self, cycle: &[SpherePoint<T>]) -> C<T> {
        let n = cycle.len();
        let mut acc = C::new(T::one(), T::zero());
        for i in 0..n {
            let chart_in = cycle[i].chart();
            let chart_out = cycle[(i + 1) % n].chart();
            acc = acc * self.chart_derivative(&cycle[i], chart_in, chart_out);
        }
        acc
    }
}
