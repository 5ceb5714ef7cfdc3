//! External parameter rays of the Mandelbrot set by potential-level
//! Newton continuation.

use crate::error::{Error, Result};
use crate::C64;
use num_rational::Ratio;

/// A traced external ray: vertices ordered by strictly decreasing
/// potential.
#[derive(Debug, Clone)]
pub struct RayPolyline {
    pub angle: Ratio<i128>,
    pub vertices: Vec<C64>,
    pub potentials: Vec<f64>,
    /// Continuation stalled before reaching the requested potential.
    pub truncated: bool,
}

/// Working escape magnitude: targets sit at log-radius in
/// `[LOG_TARGET, 2 LOG_TARGET]`.
const LOG_TARGET: f64 = 14.0;

fn doubled_angle(angle: Ratio<i128>, times: u32) -> Ratio<i128> {
    let den = *angle.denom();
    let mut num = *angle.numer();
    for _ in 0..times {
        num = (num * 2) % den;
    }
    Ratio::new_raw(num, den)
}

/// Solves `f_c^n(c) = target` by Newton from `start`.
fn newton_level(start: C64, n: u32, target: C64) -> Option<C64> {
    let mut c = start;
    for _ in 0..60 {
        let mut z = c;
        let mut dz = C64::new(1.0, 0.0);
        for _ in 0..n {
            dz = z * dz * 2.0 + 1.0;
            z = z * z + c;
        }
        if !z.re.is_finite() || !z.im.is_finite() || dz.norm() < 1e-290 {
            return None;
        }
        let step = (z - target) / dz;
        c -= step;
        if !c.re.is_finite() || c.norm() > 1e4 {
            return None;
        }
        if step.norm() < 1e-13 * (1.0 + c.norm()) {
            return Some(c);
        }
    }
    None
}

fn target_for(angle: Ratio<i128>, g: f64) -> (u32, C64) {
    // escape depth putting 2^n g into [LOG_TARGET, 2 LOG_TARGET]; the
    // exponent sum is taken in log space so potentials far below f64
    // range of 2^n stay representable
    let n = if g >= LOG_TARGET {
        0
    } else {
        (LOG_TARGET.log2() - g.log2()).ceil() as u32
    };
    let level_angle = doubled_angle(angle, n);
    let theta =
        std::f64::consts::TAU * (*level_angle.numer() as f64) / (*level_angle.denom() as f64);
    let scale = (n as f64 + g.log2()).exp2();
    (n, C64::from_polar(scale.exp(), theta))
}

/// Traces the external ray of the given angle from potential `g_hi` down
/// to `g_lo`, with `steps_per_halving` levels per potential halving and
/// adaptive refinement on Newton failures. A ray that stalls above
/// `g_lo` is returned with `truncated = true`.
pub fn trace_ray(
    angle: Ratio<i128>,
    g_hi: f64,
    g_lo: f64,
    steps_per_halving: u32,
) -> Result<RayPolyline> {
    if *angle.denom() <= 0 || *angle.numer() < 0 || angle >= Ratio::new_raw(1, 1) {
        return Err(Error::InvalidArgument(
            "ray angle must lie in [0, 1)".into(),
        ));
    }
    if angle.denom() % 2 == 0 {
        return Err(Error::InvalidArgument(
            "ray angle must be periodic under doubling (odd denominator)".into(),
        ));
    }
    if !(g_lo > 0.0 && g_hi > g_lo) {
        return Err(Error::InvalidArgument("need g_hi > g_lo > 0".into()));
    }
    let theta = std::f64::consts::TAU * (*angle.numer() as f64) / (*angle.denom() as f64);
    let mut c = C64::from_polar(g_hi.exp(), theta);
    let base_factor = (0.5f64).powf(1.0 / steps_per_halving as f64);

    let mut vertices = Vec::new();
    let mut potentials = Vec::new();
    let mut truncated = false;

    // lock onto the ray at the starting potential
    let (n0, t0) = target_for(angle, g_hi);
    match newton_level(c, n0, t0) {
        Some(cc) => c = cc,
        None => {
            return Err(Error::Sampling(format!(
                "ray {angle} failed to start at potential {g_hi}"
            )))
        }
    }
    vertices.push(c);
    potentials.push(g_hi);

    let mut g = g_hi;
    while g > g_lo {
        let mut factor = base_factor;
        let mut advanced = false;
        // halve the step until the Newton solve lands
        for _ in 0..14 {
            let g_next = (g * factor).max(g_lo);
            let (n, target) = target_for(angle, g_next);
            if let Some(cc) = newton_level(c, n, target) {
                c = cc;
                g = g_next;
                vertices.push(c);
                potentials.push(g);
                advanced = true;
                break;
            }
            factor = factor.sqrt();
        }
        if !advanced {
            truncated = true;
            break;
        }
    }
    Ok(RayPolyline {
        angle,
        vertices,
        potentials,
        truncated,
    })
}

impl RayPolyline {
    pub fn tip(&self) -> C64 {
        *self.vertices.last().expect("traced ray has vertices")
    }

    /// CSV rows `angle,potential,re,im`.
    pub fn csv(&self) -> String {
        let mut out = String::from("angle,potential,re,im\n");
        for (v, g) in self.vertices.iter().zip(&self.potentials) {
            out.push_str(&format!(
                "{}/{},{},{},{}\n",
                self.angle.numer(),
                self.angle.denom(),
                g,
                v.re,
                v.im
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ray(num: i128, den: i128) -> RayPolyline {
        trace_ray(Ratio::new_raw(num, den), 4.0, 1e-6, 12).unwrap()
    }

    #[test]
    fn zero_ray_lands_at_the_cusp() {
        // parabolic cusp landing approaches like 1/log^2(1/g)
        let r = trace_ray(Ratio::new_raw(0, 1), 4.0, 1e-12, 12).unwrap();
        assert!(!r.truncated);
        for v in &r.vertices {
            assert!(v.im.abs() < 1e-9 && v.re > 0.0, "vertex {v} off the axis");
        }
        let tip = r.tip();
        assert!((tip.re - 0.25).abs() < 1e-2, "tip {tip}");
        // potentials strictly decreasing
        for w in r.potentials.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn one_third_ray_lands_near_minus_three_quarters() {
        // the simple parabolic landing approaches like 1/log(1/g), so the
        // 1e-2 neighborhood of the limb root needs a very deep potential
        let root = C64::new(-0.75, 0.0);
        let mut prev = f64::INFINITY;
        for g_lo in [1e-6, 1e-24, 1e-120] {
            let r = trace_ray(Ratio::new_raw(1, 3), 4.0, g_lo, 12).unwrap();
            assert!(!r.truncated);
            let d = (r.tip() - root).norm();
            assert!(d < prev, "approach not monotone: {d} after {prev}");
            prev = d;
        }
        assert!(prev < 1e-2, "tip distance {prev} at g = 1e-120");
    }

    #[test]
    fn one_seventh_ray_approaches_the_third_limb_root() {
        // the cardioid point of internal angle 1/3
        let root = C64::new(-0.125, 0.649_519_052_838_329);
        let mut prev = f64::INFINITY;
        for g_lo in [1e-6, 1e-24, 1e-120] {
            let r = trace_ray(Ratio::new_raw(1, 7), 4.0, g_lo, 12).unwrap();
            assert!(!r.truncated);
            let d = (r.tip() - root).norm();
            assert!(d < prev, "approach not monotone: {d} after {prev}");
            prev = d;
        }
        assert!(prev < 1e-2, "tip distance {prev} at g = 1e-120");
    }

    #[test]
    fn conjugate_rays_mirror() {
        let a = ray(1, 7);
        let b = ray(6, 7);
        assert_eq!(a.vertices.len(), b.vertices.len());
        for (u, v) in a.vertices.iter().zip(&b.vertices) {
            assert!((u - v.conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_angles() {
        assert!(trace_ray(Ratio::new_raw(1, 2), 4.0, 1e-6, 8).is_err());
        assert!(trace_ray(Ratio::new_raw(3, 3), 4.0, 1e-6, 8).is_err());
        assert!(trace_ray(Ratio::new_raw(1, 3), 1e-6, 4.0, 8).is_err());
    }
}
