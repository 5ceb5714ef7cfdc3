//! Connectedness-locus renders of the lines `Per_1(t)`: every pixel is a
//! class on the line, realized through `normal_form` with the marked
//! fixed-point multiplier `t`, and classified by iterating both critical
//! orbits.

use crate::algebra::quadratic_roots;
use crate::error::{Error, Result};
use crate::moduli::{normal_form, QuadraticRationalMap};
use crate::sphere::SpherePoint;
use crate::C64;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct RenderSpec {
    /// Multiplier of the marked fixed point; `|t| < 1`.
    pub t: C64,
    pub nx: usize,
    pub ny: usize,
    /// Window `[x0, x1] x [y0, y1]` in the `sigma2 / 4` coordinate of the
    /// line (the `c` plane when `t = 0`).
    pub window: [f64; 4],
    pub max_iter: u32,
    pub attract_radius: f64,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            t: C64::new(0.0, 0.0),
            nx: 512,
            ny: 512,
            window: [-2.5, 1.0, -1.5, 1.5],
            max_iter: 2048,
            attract_radius: 1e-6,
        }
    }
}

/// Per-pixel classification: attraction time of the second-fastest
/// critical orbit into the marked fixed point, or `None` when at most
/// one critical orbit is attracted (the pixel is in the connectedness
/// locus).
#[derive(Debug, Clone)]
pub struct Render {
    pub spec: RenderSpec,
    pub attract_time: Vec<Option<u32>>,
}

/// The class on `Per_1(t)` with slice coordinate `u = sigma2 / 4`,
/// realized as `normal_form(t, beta)`, plus its two critical points.
pub fn slice_map(t: C64, u: C64) -> Result<(QuadraticRationalMap<f64>, [SpherePoint<f64>; 2])> {
    let one = C64::new(1.0, 0.0);
    let sigma2 = u * 4.0;
    let sigma1 = (t * sigma2 + t * t * t + 2.0) / (t * t + one);
    // multiplier cubic factors as (x - t)(x^2 + (t - sigma1) x + c0)
    let c0 = sigma2 + t * (t - sigma1);
    let [r1, r2] = quadratic_roots(one, t - sigma1, c0);
    let beta = if r1.norm() >= r2.norm() { r1 } else { r2 };
    let f = normal_form(t, beta).or_else(|_| {
        let other = if r1.norm() >= r2.norm() { r2 } else { r1 };
        normal_form(t, other)
    })?;
    // critical points: roots of beta z^2 + 2 z + t, projectively
    let b = C64::new(2.0, 0.0);
    let disc = (b * b - f.den[1] * t * 4.0).sqrt();
    let s = if (b + disc).norm() >= (b - disc).norm() {
        b + disc
    } else {
        b - disc
    };
    let qq = -s * 0.5;
    let crit1 = SpherePoint::new(qq, f.den[1]);
    let crit2 = SpherePoint::new(t, qq);
    Ok((f, [crit1, crit2]))
}

fn attract_time(
    f: &QuadraticRationalMap<f64>,
    start: &SpherePoint<f64>,
    max_iter: u32,
    radius: f64,
) -> Option<u32> {
    let lift = f.lift();
    let origin = SpherePoint::from_affine(C64::new(0.0, 0.0));
    let mut p = *start;
    for k in 0..max_iter {
        if p.chordal(&origin) < radius {
            return Some(k);
        }
        p = lift.apply(&p);
    }
    None
}

/// Renders the connectedness-locus approximation of `Per_1(t)`: a pixel
/// leaves the locus exactly when both critical orbits fall into the
/// attracting fixed point of multiplier `t`.
pub fn render_slice(spec: &RenderSpec) -> Result<Render> {
    if spec.nx * spec.ny > 2048 * 2048 {
        return Err(Error::InvalidArgument("render capped at 2048^2".into()));
    }
    if spec.t.norm() >= 1.0 {
        return Err(Error::InvalidArgument(
            "slice renders need |t| < 1 (attracting marked point)".into(),
        ));
    }
    let [x0, x1, y0, y1] = spec.window;
    let dx = (x1 - x0) / spec.nx as f64;
    let dy = (y1 - y0) / spec.ny as f64;
    let rows: Vec<Vec<Option<u32>>> = (0..spec.ny)
        .into_par_iter()
        .map(|j| {
            let y = y0 + (j as f64 + 0.5) * dy;
            (0..spec.nx)
                .map(|i| {
                    let x = x0 + (i as f64 + 0.5) * dx;
                    let u = C64::new(x, y);
                    match slice_map(spec.t, u) {
                        Ok((f, crits)) => {
                            let times: Vec<Option<u32>> = crits
                                .iter()
                                .map(|c| attract_time(&f, c, spec.max_iter, spec.attract_radius))
                                .collect();
                            match (times[0], times[1]) {
                                // both orbits attracted: outside the locus;
                                // shade by the later arrival
                                (Some(a), Some(b)) => Some(a.max(b)),
                                _ => None,
                            }
                        }
                        // no usable representative: treat as outside
                        Err(_) => Some(0),
                    }
                })
                .collect()
        })
        .collect();
    let mut attract = Vec::with_capacity(spec.nx * spec.ny);
    for row in rows {
        attract.extend(row);
    }
    Ok(Render {
        spec: spec.clone(),
        attract_time: attract,
    })
}

impl Render {
    pub fn in_locus_count(&self) -> usize {
        self.attract_time.iter().filter(|t| t.is_none()).count()
    }

    /// Pixel-counting area of the rendered locus.
    pub fn area_estimate(&self) -> f64 {
        let [x0, x1, y0, y1] = self.spec.window;
        let cell = ((x1 - x0) / self.spec.nx as f64) * ((y1 - y0) / self.spec.ny as f64);
        self.in_locus_count() as f64 * cell
    }

    /// In-locus pixel count inside a sub-window.
    pub fn count_in_window(&self, win: [f64; 4]) -> usize {
        let [x0, x1, y0, y1] = self.spec.window;
        let dx = (x1 - x0) / self.spec.nx as f64;
        let dy = (y1 - y0) / self.spec.ny as f64;
        let mut count = 0;
        for j in 0..self.spec.ny {
            let y = y0 + (j as f64 + 0.5) * dy;
            if y < win[2] || y > win[3] {
                continue;
            }
            for i in 0..self.spec.nx {
                let x = x0 + (i as f64 + 0.5) * dx;
                if x < win[0] || x > win[1] {
                    continue;
                }
                if self.attract_time[j * self.spec.nx + i].is_none() {
                    count += 1;
                }
            }
        }
        count
    }

    /// Binary PPM (P6): locus pixels black, escape shaded by attraction
    /// time. No timestamps or comments, so identical renders are
    /// byte-identical.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.spec.nx, self.spec.ny).into_bytes();
        let maxi = self.spec.max_iter as f64;
        for t in &self.attract_time {
            match t {
                None => out.extend_from_slice(&[0, 0, 0]),
                Some(k) => {
                    let v = (*k as f64 + 1.0).ln() / (maxi + 1.0).ln();
                    let r = (40.0 + 215.0 * v) as u8;
                    let g = (20.0 + 160.0 * v.powf(1.4)) as u8;
                    let b = (90.0 + 165.0 * (1.0 - v)) as u8;
                    out.extend_from_slice(&[r, g, b]);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_map_at_origin_of_polynomial_slice() {
        // t = 0, u = c = 0: the class of z^2
        let (f, crits) = slice_map(C64::new(0.0, 0.0), C64::new(0.0, 0.0)).unwrap();
        let pt = crate::moduli::sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - C64::new(2.0, 0.0)).norm() < 1e-10);
        assert!(pt.sigma2.norm() < 1e-10);
        // one critical orbit must sit at the superattracting fixed point
        let origin = SpherePoint::from_affine(C64::new(0.0, 0.0));
        assert!(crits.iter().any(|c| c.chordal(&origin) < 1e-12));
    }

    #[test]
    fn polynomial_slice_classification_matches_escape() {
        // compare the normal-form classification against direct z^2 + c
        // escape on a probe set straddling the boundary
        let probes = [
            (C64::new(0.0, 0.0), true),
            (C64::new(-1.0, 0.0), true),
            (C64::new(0.3, 0.5), true), // period-4 bulb
            (C64::new(0.5, 0.5), false),
            (C64::new(0.26, 0.0), false),
            (C64::new(-1.9, 0.0), true),
            (C64::new(-0.122, 0.745), true),
        ];
        for (c, inside) in probes {
            let (f, crits) = slice_map(C64::new(0.0, 0.0), c).unwrap();
            let both: Vec<_> = crits
                .iter()
                .map(|p| attract_time(&f, p, 4096, 1e-6))
                .collect();
            let in_locus = !(both[0].is_some() && both[1].is_some());
            assert_eq!(in_locus, inside, "at c = {c}");
            // oracle: plain escape iteration
            let mut z = C64::new(0.0, 0.0);
            let mut escaped = false;
            for _ in 0..4096 {
                z = z * z + c;
                if z.norm_sqr() > 4.0 {
                    escaped = true;
                    break;
                }
            }
            assert_eq!(!escaped, inside, "oracle at c = {c}");
        }
    }

    #[test]
    fn real_t_render_conjugation_symmetric() {
        let spec = RenderSpec {
            t: C64::new(0.4, 0.0),
            nx: 48,
            ny: 48,
            window: [-2.0, 1.0, -1.2, 1.2],
            max_iter: 400,
            attract_radius: 1e-6,
        };
        let r = render_slice(&spec).unwrap();
        for j in 0..spec.ny {
            let jc = spec.ny - 1 - j;
            for i in 0..spec.nx {
                let a = r.attract_time[j * spec.nx + i].is_none();
                let b = r.attract_time[jc * spec.nx + i].is_none();
                assert_eq!(a, b, "pixel ({i}, {j}) breaks conjugation symmetry");
            }
        }
    }

    #[test]
    fn ppm_header_and_size() {
        let spec = RenderSpec {
            nx: 16,
            ny: 8,
            max_iter: 64,
            ..Default::default()
        };
        let r = render_slice(&spec).unwrap();
        let ppm = r.to_ppm();
        assert!(ppm.starts_with(b"P6\n16 8\n255\n"));
        assert_eq!(ppm.len(), b"P6\n16 8\n255\n".len() + 16 * 8 * 3);
    }

    #[test]
    fn rejects_oversize_and_nonattracting() {
        let mut spec = RenderSpec::default();
        spec.nx = 3000;
        spec.ny = 3000;
        assert!(render_slice(&spec).is_err());
        let mut spec = RenderSpec::default();
        spec.t = C64::new(1.1, 0.0);
        assert!(render_slice(&spec).is_err());
    }
}
