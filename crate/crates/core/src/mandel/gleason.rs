//! Hyperbolic centers of the Mandelbrot set: the roots of the critical
//! orbit relation, found by Aberth iteration with scale-free evaluation.
//!
//! The center polynomial of level n has degree 2^{n-1} and doubly
//! exponential values off the Mandelbrot set, so it is never expanded:
//! evaluation runs through the orbit recursion with explicit base-2
//! exponent tracking.

use crate::error::{Error, Result};
use crate::spectra::pern_degree;
use crate::C64;

/// Parameters of exact critical-orbit period `n`, one per hyperbolic
/// component.
#[derive(Debug, Clone)]
pub struct CenterSet {
    pub n: u32,
    pub centers: Vec<C64>,
}

impl CenterSet {
    pub fn csv(&self) -> String {
        let mut out = String::from("re,im,period\n");
        for c in &self.centers {
            out.push_str(&format!("{},{},{}\n", c.re, c.im, self.n));
        }
        out
    }
}

/// Complex value `m * 2^e` with the mantissa kept near unit size.
#[derive(Debug, Clone, Copy)]
struct ScaledC {
    m: C64,
    e: i64,
}

#[inline]
fn exponent_of(x: f64) -> i64 {
    ((x.to_bits() >> 52) & 0x7ff) as i64 - 1023
}

impl ScaledC {
    fn from(z: C64) -> Self {
        Self { m: z, e: 0 }.renorm()
    }

    fn renorm(mut self) -> Self {
        let a = self.m.re.abs().max(self.m.im.abs());
        if a == 0.0 {
            self.e = 0;
            return self;
        }
        let k = exponent_of(a);
        if k.abs() > 16 {
            let f = (2.0f64).powi(-k as i32);
            self.m *= f;
            self.e += k;
        }
        self
    }

    fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }

    /// `a + b`, dropping the smaller term when the scales are 2^60 apart.
    fn add(a: Self, b: Self) -> Self {
        if a.is_zero() {
            return b;
        }
        if b.is_zero() {
            return a;
        }
        let (hi, lo) = if a.e >= b.e { (a, b) } else { (b, a) };
        let shift = hi.e - lo.e;
        if shift > 60 {
            return hi;
        }
        let f = (2.0f64).powi(-(shift as i32));
        Self {
            m: hi.m + lo.m * f,
            e: hi.e,
        }
        .renorm()
    }

    fn mul(a: Self, b: Self) -> Self {
        Self {
            m: a.m * b.m,
            e: a.e + b.e,
        }
        .renorm()
    }

    fn ratio(num: Self, den: Self) -> Option<C64> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(C64::new(0.0, 0.0));
        }
        let shift = num.e - den.e;
        if shift > 900 {
            return None; // ratio overflows: treat as divergence
        }
        if shift < -900 {
            return Some(C64::new(0.0, 0.0));
        }
        Some(num.m / den.m * (2.0f64).powi(shift as i32))
    }
}

/// Newton ratio `p_n(c) / p'_n(c)` for the critical-orbit polynomial
/// `p_1 = c`, `p_{k+1} = p_k^2 + c`, evaluated scale-free.
fn newton_ratio(c: C64, n: u32) -> Option<C64> {
    let cs = ScaledC::from(c);
    let mut z = cs;
    let mut dz = ScaledC::from(C64::new(1.0, 0.0));
    let two = ScaledC::from(C64::new(2.0, 0.0));
    for _ in 1..n {
        dz = ScaledC::add(ScaledC::mul(two, ScaledC::mul(z, dz)), ScaledC::from(C64::new(1.0, 0.0)));
        z = ScaledC::add(ScaledC::mul(z, z), cs);
    }
    ScaledC::ratio(z, dz)
}

/// Plain evaluation of `p_k(c)`; safe on the bounded region the roots
/// inhabit.
fn orbit_value(c: C64, k: u32) -> C64 {
    let mut z = c;
    for _ in 1..k {
        z = z * z + c;
    }
    z
}

fn newton_polish(c: &mut C64, n: u32, steps: u32) {
    for _ in 0..steps {
        match newton_ratio(*c, n) {
            Some(r) if r.norm() < 1.0 => *c -= r,
            _ => break,
        }
    }
}

/// All centers of exact period `n`, `n <= 16`. The root count is checked
/// against `d(n)` after lower-period roots are classified away; missing
/// roots trigger a grid-refined Newton retry before the call fails.
pub fn gleason_roots(n: u32) -> Result<CenterSet> {
    if n < 1 || n > 16 {
        return Err(Error::InvalidArgument("need 1 <= n <= 16".into()));
    }
    if n == 1 {
        return Ok(CenterSet {
            n,
            centers: vec![C64::new(0.0, 0.0)],
        });
    }
    let degree = 1usize << (n - 1);
    let mut z = equipotential_init(degree);
    // coincident starts (failed continuation solves) would freeze onto a
    // shared root: spread them so the repulsion term can act
    {
        let mut order: Vec<usize> = (0..degree).collect();
        order.sort_by(|&a, &b| (z[a].re, z[a].im).partial_cmp(&(z[b].re, z[b].im)).unwrap());
        for w in order.windows(2) {
            if (z[w[1]] - z[w[0]]).norm() < 1e-9 {
                let k = w[1] as f64;
                z[w[1]] += C64::from_polar(3e-6, 2.399_963 * k);
            }
        }
    }
    let mut done = vec![false; degree];
    let step_tol = 1e-13;
    let max_sweeps = 3000usize;
    let mut converged = 0usize;

    for _sweep in 0..max_sweeps {
        let mut moved = false;
        for i in 0..degree {
            if done[i] {
                continue;
            }
            moved = true;
            let zi = z[i];
            let newton = match newton_ratio(zi, n) {
                Some(r) => r,
                None => {
                    // critical point of p_n: nudge
                    z[i] += C64::new(1e-7, 1.3e-7);
                    continue;
                }
            };
            if newton.norm() == 0.0 {
                done[i] = true;
                converged += 1;
                continue;
            }
            let mut s_re = 0.0f64;
            let mut s_im = 0.0f64;
            let mut coincident = false;
            for (j, zj) in z.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dx = zi.re - zj.re;
                let dy = zi.im - zj.im;
                let d2 = dx * dx + dy * dy;
                if d2 > 1e-28 {
                    let inv = 1.0 / d2;
                    s_re += dx * inv;
                    s_im -= dy * inv;
                } else {
                    coincident = true;
                }
            }
            if coincident {
                z[i] += C64::from_polar(1e-8, 2.399_963 * i as f64);
                continue;
            }
            let s = C64::new(s_re, s_im);
            let denom = C64::new(1.0, 0.0) - newton * s;
            let w = if denom.norm() < 1e-12 {
                newton
            } else {
                newton / denom
            };
            z[i] = zi - w;
            if w.norm() <= step_tol * (1.0 + z[i].norm()) {
                done[i] = true;
                converged += 1;
            }
        }
        if !moved {
            break;
        }
        if std::env::var_os("M2LAB_GLEASON_TRACE").is_some() && _sweep % 50 == 0 {
            eprintln!("sweep {_sweep}: {} unconverged", degree - converged);
        }
    }
    let _ = converged;

    for c in z.iter_mut() {
        newton_polish(c, n, 6);
    }

    // distinctness, with a grid-refined Newton refill for any collisions
    let mut roots = dedupe(&z, 1e-8);
    if roots.len() < degree {
        refill(&mut roots, degree, n)?;
    }
    if roots.len() != degree {
        return Err(Error::RootFinding {
            iterations: max_sweeps,
            residual: (degree - roots.len()) as f64,
        });
    }

    // classify exact periods via the divisor relations
    let mut centers: Vec<C64> = Vec::new();
    let mut per_divisor: Vec<(u32, usize)> = Vec::new();
    for k in (1..=n).filter(|k| n % k == 0) {
        let mut count = 0usize;
        if k == n {
            for &c in &roots {
                let lower = (1..n)
                    .filter(|j| n % j == 0)
                    .any(|j| orbit_value(c, j).norm() < 1e-8);
                if !lower {
                    centers.push(c);
                    count += 1;
                }
            }
        } else {
            count = roots
                .iter()
                .filter(|&&c| {
                    orbit_value(c, k).norm() < 1e-8
                        && !(1..k)
                            .filter(|j| k % j == 0)
                            .any(|j| orbit_value(c, j).norm() < 1e-8)
                })
                .count();
        }
        per_divisor.push((k, count));
    }
    for &(k, count) in &per_divisor {
        let expect = pern_degree(k)? as usize;
        if count != expect {
            return Err(Error::CenterCount {
                period: k,
                found: count,
                expected: expect,
            });
        }
    }
    centers.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    Ok(CenterSet { n, centers })
}

/// Newton solve of `f_c^{lvl}(c) = target` seeded from `start`.
fn level_solve(start: C64, lvl: u32, target: C64) -> Option<C64> {
    let mut c = start;
    for _ in 0..60 {
        let mut zz = c;
        let mut dz = C64::new(1.0, 0.0);
        for _ in 0..lvl {
            dz = zz * dz * 2.0 + 1.0;
            zz = zz * zz + c;
        }
        if !zz.re.is_finite() || !zz.im.is_finite() || dz.norm() < 1e-280 {
            return None;
        }
        let step = (zz - target) / dz;
        c -= step;
        if !c.re.is_finite() || c.norm() > 1e3 {
            return None;
        }
        if step.norm() < 1e-12 * (1.0 + c.norm()) {
            return Some(c);
        }
    }
    None
}

/// Starting configuration hugging the boundary of the Mandelbrot set:
/// points on the equipotential `G = 2/degree` at equally spaced external
/// angles, walked around by Newton continuation. Centers concentrate
/// along the boundary by equidistribution, so the simultaneous iteration
/// starts where the roots are instead of collapsing a far circle for
/// hundreds of sweeps.
fn equipotential_init(degree: usize) -> Vec<C64> {
    let tau = std::f64::consts::TAU;
    let g = 2.0 / degree as f64;
    let lvl = (14.0f64.log2() - g.log2()).ceil() as u32;
    let radius = ((lvl as f64 + g.log2()).exp2()).exp();
    let target_at = |theta: f64| {
        let level_angle = (theta * (lvl as f64).exp2()).fract();
        C64::from_polar(radius, tau * level_angle)
    };
    // descend to the equipotential along the first angle
    let theta0 = 0.5 / degree as f64;
    let mut c = C64::from_polar(4f64.exp(), tau * theta0);
    let steps = 16 * ((4.0f64 / g).log2().ceil() as usize);
    for k in 1..=steps {
        let gk = 4.0 * (g / 4.0).powf(k as f64 / steps as f64);
        let lv = (14.0f64.log2() - gk.log2()).ceil() as u32;
        let rad = ((lv as f64 + gk.log2()).exp2()).exp();
        let la = (theta0 * (lv as f64).exp2()).fract();
        match level_solve(c, lv, C64::from_polar(rad, tau * la)) {
            Some(cc) => c = cc,
            None => break,
        }
    }
    // walk the circle of angles with substeps; a failed solve keeps the
    // previous point, which the simultaneous iteration sorts out later
    let substeps = 3usize;
    let mut out = Vec::with_capacity(degree);
    for j in 0..degree {
        for s in 0..substeps {
            let theta = theta0
                + (j as f64 + s as f64 / substeps as f64) / degree as f64;
            if let Some(cc) = level_solve(c, lvl, target_at(theta)) {
                c = cc;
            }
        }
        out.push(c);
    }
    out
}

fn dedupe(z: &[C64], tol: f64) -> Vec<C64> {
    let mut sorted: Vec<C64> = z.to_vec();
    sorted.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    let mut out: Vec<C64> = Vec::with_capacity(sorted.len());
    'outer: for c in sorted {
        // only nearby in sorted order can collide
        for prev in out.iter().rev().take(32) {
            if (c - prev).norm() < tol {
                continue 'outer;
            }
        }
        out.push(c);
    }
    out
}

/// Newton from progressively denser grid starts until the expected root
/// count is reached.
fn refill(roots: &mut Vec<C64>, degree: usize, n: u32) -> Result<()> {
    for level in 0..6 {
        if roots.len() >= degree {
            return Ok(());
        }
        let res = 64 << level;
        for jy in 0..res {
            for jx in 0..res {
                let c0 = C64::new(
                    -2.1 + 2.85 * (jx as f64 + 0.5) / res as f64,
                    -1.25 + 2.5 * (jy as f64 + 0.5) / res as f64,
                );
                let mut c = c0;
                let mut ok = false;
                for _ in 0..60 {
                    match newton_ratio(c, n) {
                        Some(r) => {
                            c -= r;
                            if r.norm() < 1e-13 * (1.0 + c.norm()) {
                                ok = true;
                                break;
                            }
                        }
                        None => break,
                    }
                }
                if ok && roots.iter().all(|r| (c - r).norm() > 1e-8) {
                    roots.push(c);
                    if roots.len() >= degree {
                        return Ok(());
                    }
                }
            }
        }
    }
    Ok(())
}
