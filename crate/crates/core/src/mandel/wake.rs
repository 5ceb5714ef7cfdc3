//! Wake membership: the region between the two parameter rays landing at
//! a limb root, closed by a far-field arc and the chord between the ray
//! tips.

use super::gleason::CenterSet;
use super::ray::{trace_ray, RayPolyline};
use crate::angles::characteristic_angles;
use crate::error::{Error, Result};
use crate::moduli::check_pq;
use crate::C64;

#[derive(Debug, Clone)]
pub struct WakeConfig {
    pub g_hi: f64,
    pub g_lo: f64,
    pub steps_per_halving: u32,
    pub arc_segments: usize,
    /// Distance to the boundary polygon below which membership is
    /// declared indeterminate.
    pub tube_tol: f64,
}

impl Default for WakeConfig {
    fn default() -> Self {
        Self {
            g_hi: 4.0,
            g_lo: 1e-6,
            steps_per_halving: 12,
            arc_segments: 64,
            tube_tol: 1e-7,
        }
    }
}

/// The closed boundary polygon of the `p/q` wake.
#[derive(Debug, Clone)]
pub struct Wake {
    pub p: u32,
    pub q: u32,
    pub ray_minus: RayPolyline,
    pub ray_plus: RayPolyline,
    pub polygon: Vec<C64>,
    pub tube_tol: f64,
}

/// Traces the two characteristic rays of the `p/q` limb and closes the
/// region: far-field arc from angle `2 pi t-` to `2 pi t+`, down the
/// plus ray, across the chord at the tips, back up the minus ray.
/// Accepts any coprime `1 <= p < q`; the `p <= q/2` convention only
/// matters for the doubled counts.
pub fn build_wake(p: u32, q: u32, cfg: &WakeConfig) -> Result<Wake> {
    let (t_minus, t_plus) = characteristic_angles(p, q)?;
    let ray_minus = trace_ray(t_minus, cfg.g_hi, cfg.g_lo, cfg.steps_per_halving)?;
    let ray_plus = trace_ray(t_plus, cfg.g_hi, cfg.g_lo, cfg.steps_per_halving)?;
    if ray_minus.truncated || ray_plus.truncated {
        return Err(Error::Sampling(format!(
            "wake {p}/{q}: characteristic ray truncated before potential {}",
            cfg.g_lo
        )));
    }
    let radius = cfg.g_hi.exp();
    let a0 = std::f64::consts::TAU * (*t_minus.numer() as f64) / (*t_minus.denom() as f64);
    let a1 = std::f64::consts::TAU * (*t_plus.numer() as f64) / (*t_plus.denom() as f64);
    let mut polygon = Vec::with_capacity(
        cfg.arc_segments + ray_minus.vertices.len() + ray_plus.vertices.len() + 2,
    );
    for k in 0..=cfg.arc_segments {
        let a = a0 + (a1 - a0) * k as f64 / cfg.arc_segments as f64;
        polygon.push(C64::from_polar(radius, a));
    }
    // down the plus ray toward its tip, chord to the minus tip, back out
    polygon.extend(ray_plus.vertices.iter().copied());
    polygon.extend(ray_minus.vertices.iter().rev().copied());
    Ok(Wake {
        p,
        q,
        ray_minus,
        ray_plus,
        polygon,
        tube_tol: cfg.tube_tol,
    })
}

fn segment_distance(p: C64, a: C64, b: C64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

impl Wake {
    /// Even-odd membership of `c`; points within the tube tolerance of
    /// the boundary come back indeterminate so the caller can refine.
    pub fn contains(&self, c: C64) -> Result<bool> {
        let n = self.polygon.len();
        let mut nearest = f64::INFINITY;
        for k in 0..n {
            let a = self.polygon[k];
            let b = self.polygon[(k + 1) % n];
            nearest = nearest.min(segment_distance(c, a, b));
            if nearest < self.tube_tol {
                return Err(Error::Indeterminate(format!(
                    "point {c} within {:.1e} of the {}/{} wake boundary",
                    self.tube_tol, self.p, self.q
                )));
            }
        }
        let mut inside = false;
        for k in 0..n {
            let a = self.polygon[k];
            let b = self.polygon[(k + 1) % n];
            if (a.im > c.im) != (b.im > c.im) {
                let x_cross = a.re + (c.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if c.re < x_cross {
                    inside = !inside;
                }
            }
        }
        Ok(inside)
    }
}

/// Component counts of the `p/q` limb at period `n`: raw wake count and
/// the convention that doubles it for `q >= 3` (the conjugate limb merges
/// at the same infinity point).
#[derive(Debug, Clone, Copy)]
pub struct LimbCount {
    pub p: u32,
    pub q: u32,
    pub n: u32,
    pub count: u64,
    pub doubled: u64,
    pub indeterminate: u64,
}

pub fn limb_count(p: u32, q: u32, n: u32) -> Result<LimbCount> {
    check_pq(p, q)?;
    let centers = super::gleason::gleason_roots(n)?;
    let wake = build_wake(p, q, &WakeConfig::default())?;
    limb_count_with(&centers, &wake)
}

/// Counts centers inside an already-built wake; errors when more than
/// 0.1% of the memberships come back indeterminate.
pub fn limb_count_with(centers: &CenterSet, wake: &Wake) -> Result<LimbCount> {
    let mut count = 0u64;
    let mut indeterminate = 0u64;
    for &c in &centers.centers {
        match wake.contains(c) {
            Ok(true) => count += 1,
            Ok(false) => {}
            Err(_) => indeterminate += 1,
        }
    }
    if indeterminate as f64 > 0.001 * centers.centers.len() as f64 {
        return Err(Error::Indeterminate(format!(
            "{indeterminate} of {} centers within the ray tube; refine g_lo",
            centers.centers.len()
        )));
    }
    let doubled = if wake.q == 2 { count } else { 2 * count };
    Ok(LimbCount {
        p: wake.p,
        q: wake.q,
        n: centers.n,
        count,
        doubled,
        indeterminate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mandel::gleason_roots;

    #[test]
    fn half_wake_contains_basilica_not_origin() {
        let wake = build_wake(1, 2, &WakeConfig::default()).unwrap();
        assert!(wake.contains(C64::new(-1.0, 0.0)).unwrap());
        assert!(!wake.contains(C64::new(0.0, 0.0)).unwrap());
        // deep in the antenna
        assert!(wake.contains(C64::new(-1.9, 0.0)).unwrap());
        // far outside everything
        assert!(!wake.contains(C64::new(3.0, 3.0)).unwrap());
    }

    #[test]
    fn third_wake_contains_rabbit() {
        let wake = build_wake(1, 3, &WakeConfig::default()).unwrap();
        let rabbit = C64::new(-0.122_561_166_876_654, 0.744_861_766_619_744);
        assert!(wake.contains(rabbit).unwrap());
        assert!(!wake.contains(C64::new(0.0, 0.0)).unwrap());
        assert!(!wake.contains(C64::new(-1.0, 0.0)).unwrap());
    }

    #[test]
    fn limb_counts_at_small_periods() {
        // period 2: only the basilica, in the 1/2 wake, not doubled
        let lc = limb_count(1, 2, 2).unwrap();
        assert_eq!((lc.count, lc.doubled), (1, 1));
        // period 3: the rabbit alone in the 1/3 wake, doubled by convention
        let lc = limb_count(1, 3, 3).unwrap();
        assert_eq!((lc.count, lc.doubled), (1, 2));
        // period 3 in the 1/2 wake: the airplane
        let lc = limb_count(1, 2, 3).unwrap();
        assert_eq!((lc.count, lc.doubled), (1, 1));
    }

    #[test]
    fn wake_counts_consistent_at_period_four() {
        let centers = gleason_roots(4).unwrap();
        let mut total = 0u64;
        for (p, q) in [(1u32, 2u32), (1, 3), (1, 4)] {
            let wake = build_wake(p, q, &WakeConfig::default()).unwrap();
            let lc = limb_count_with(&centers, &wake).unwrap();
            total += lc.doubled;
        }
        assert_eq!(total, 6, "D table at n = 4 must sum to d(4)");
    }

    #[test]
    fn rejects_bad_rotation_numbers() {
        assert!(build_wake(0, 2, &WakeConfig::default()).is_err());
        assert!(build_wake(2, 4, &WakeConfig::default()).is_err());
        // the conjugate wake itself is fine, only the doubled count
        // convention restricts to p <= q/2
        assert!(build_wake(2, 3, &WakeConfig::default()).is_ok());
        assert!(limb_count(2, 3, 3).is_err());
    }
}
