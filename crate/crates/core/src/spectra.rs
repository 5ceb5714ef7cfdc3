//! Periodic cycles and multiplier spectra of quadratic rational maps,
//! numeric reconstruction of the `Per_n(w)` curves, and their
//! intersection multiplicities with the line at infinity.

use crate::algebra::{min_singular_vector, monomials, poly_roots, poly_roots_with, top_form, BiPoly, CPoly};
use crate::error::{Error, Result};
use crate::moduli::{check_pq, ModuliPoint};
use crate::moduli::QuadraticRationalMap;
use crate::rng::{complex_in_square, gaussian_complex, stream_rng};
use crate::sphere::SpherePoint;
use crate::C64;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::algebra::monomials as curve_monomials;

/// Bound on the cycle period handled by the dense dynatomic route:
/// the period-n equation has degree `2^n + 1`.
pub const MAX_PERIOD: u32 = 8;

#[derive(Debug, Clone)]
pub struct SpectraConfig {
    /// Relative clustering tolerance for cycle grouping.
    pub cluster_tol: f64,
    /// Chordal tolerance matching a point to its exact period.
    pub period_tol: f64,
    /// Distance of a lower-period multiplier to 1 that flags a parabolic
    /// collision.
    pub parabolic_tol: f64,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            cluster_tol: 1e-7,
            period_tol: 1e-7,
            parabolic_tol: 1e-3,
        }
    }
}

/// One multiplier per exact-period-`n` cycle.
#[derive(Debug, Clone)]
pub struct CycleSpectrum {
    pub period: u32,
    pub multipliers: Vec<C64>,
    /// A lower-period cycle has multiplier within tolerance of 1; exact-
    /// period classification is then fragile.
    pub parabolic_warning: bool,
}

fn convolve(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Homogeneous iterate `(P_n, Q_n)` of the lift of `f`, coefficients
/// ascending, rescaled at every step to dodge overflow.
fn iterate_lift(f: &QuadraticRationalMap<f64>, n: u32) -> (Vec<C64>, Vec<C64>) {
    let [a2, a1, a0] = f.num;
    let [b2, b1, b0] = f.den;
    let mut p = vec![a0, a1, a2];
    let mut q = vec![b0, b1, b2];
    for _ in 1..n {
        let pp = convolve(&p, &p);
        let pq = convolve(&p, &q);
        let qq = convolve(&q, &q);
        let mut np = vec![C64::zero(); pp.len()];
        let mut nq = vec![C64::zero(); pp.len()];
        for k in 0..pp.len() {
            np[k] = a2 * pp[k] + a1 * pq[k] + a0 * qq[k];
            nq[k] = b2 * pp[k] + b1 * pq[k] + b0 * qq[k];
        }
        let scale = np
            .iter()
            .chain(nq.iter())
            .map(|c| c.norm())
            .fold(0.0f64, f64::max);
        let inv = 1.0 / scale;
        for c in np.iter_mut().chain(nq.iter_mut()) {
            *c *= inv;
        }
        p = np;
        q = nq;
    }
    (p, q)
}

/// All points of period dividing `n` on the sphere, with multiplicity;
/// their count is always `2^n + 1` (degree drop of the period equation
/// accounts for orbits through infinity).
pub fn period_dividing_points(
    f: &QuadraticRationalMap<f64>,
    n: u32,
) -> Result<Vec<SpherePoint<f64>>> {
    if n < 1 || n > MAX_PERIOD {
        return Err(Error::InvalidArgument(format!(
            "period must be in 1..={MAX_PERIOD}"
        )));
    }
    f.check_nondegenerate()?;
    let (p, q) = iterate_lift(f, n);
    // phi(z) = z * Q_n(z) - P_n(z)
    let mut phi = vec![C64::zero(); q.len() + 1];
    for (k, &c) in q.iter().enumerate() {
        phi[k + 1] = c;
    }
    for (k, &c) in p.iter().enumerate() {
        phi[k] -= c;
    }
    let phi = CPoly::new(phi);
    let full_degree = (1usize << n) + 1;
    let finite_degree = if phi.is_zero() { 0 } else { phi.degree() };
    let drop = full_degree - finite_degree;
    let mut pts: Vec<SpherePoint<f64>> = if finite_degree >= 1 {
        // coefficient-route roots are only a warm start; the pointwise
        // relation pins them to the true periodic points
        let warm = poly_roots_with(
            &phi,
            &crate::algebra::RootFindConfig {
                residual_factor: 1e14,
                ..Default::default()
            },
        )
        .ok()
        .and_then(|rough| refine_periodic_multiset(f, rough, n).ok());
        let refined = match warm {
            Some(r) => r,
            None => {
                // cold start on moderate circles; the pointwise iteration
                // is a complete solver and reaches far roots (orbits
                // passing near poles) on its own, whereas the composed
                // coefficients are noise-dominated at the top for such
                // maps and give no usable bound
                let mut result = None;
                let mut last = None;
                for radius in [6.0, 60.0, 600.0] {
                    let init: Vec<C64> = (0..finite_degree)
                        .map(|j| {
                            let ang = std::f64::consts::TAU * (j as f64 + 0.29)
                                / finite_degree as f64
                                + 0.4;
                            C64::from_polar(
                                radius * (1.0 + 0.03 * ((j % 7) as f64 - 3.0)),
                                ang,
                            )
                        })
                        .collect();
                    match refine_periodic_multiset(f, init, n) {
                        Ok(r) => {
                            result = Some(r);
                            break;
                        }
                        Err(e) => last = Some(e),
                    }
                }
                match result {
                    Some(r) => r,
                    None => return Err(last.expect("cold start attempted")),
                }
            }
        };
        refined.into_iter().map(SpherePoint::from_affine).collect()
    } else {
        Vec::new()
    };
    for _ in 0..drop {
        pts.push(SpherePoint::infinity());
    }
    Ok(pts)
}

fn divisors(n: u32) -> Vec<u32> {
    (1..=n).filter(|k| n % k == 0).collect()
}

/// Pointwise value and derivative of the period-`n` relation
/// `Phi(z) = z Q_n(z) - P_n(z)`, through the orbit recursion with joint
/// rescaling. The expanded coefficients of `Phi` can be badly conditioned
/// on clustered root sets; this evaluation is not. Also returns the
/// cancellation scale `|z Q_n| + |P_n|` for backward-error tests.
fn period_relation(f: &QuadraticRationalMap<f64>, z: C64, n: u32) -> (C64, C64, f64) {
    let [a2, a1, a0] = f.num;
    let [b2, b1, b0] = f.den;
    let mut p = (a2 * z + a1) * z + a0;
    let mut q = (b2 * z + b1) * z + b0;
    let mut dp = a2 * z * 2.0 + a1;
    let mut dq = b2 * z * 2.0 + b1;
    for _ in 1..n {
        let npv = a2 * p * p + a1 * p * q + a0 * q * q;
        let nqv = b2 * p * p + b1 * p * q + b0 * q * q;
        let ndp = (a2 * p * 2.0 + a1 * q) * dp + (a1 * p + a0 * q * 2.0) * dq;
        let ndq = (b2 * p * 2.0 + b1 * q) * dp + (b1 * p + b0 * q * 2.0) * dq;
        // joint rescale keeps the Newton ratio and the relation invariant
        let s = 1.0 / npv.norm().max(nqv.norm()).max(1e-300);
        p = npv * s;
        q = nqv * s;
        dp = ndp * s;
        dq = ndq * s;
    }
    let phi = z * q - p;
    let dphi = q + z * dq - dp;
    let scale = (z * q).norm() + p.norm();
    (phi, dphi, scale)
}

/// Simultaneous refinement of the full multiset of finite period-`n`
/// points, Aberth-style with the pointwise relation; mutual repulsion
/// keeps approximations from collapsing onto shared roots.
fn refine_periodic_multiset(
    f: &QuadraticRationalMap<f64>,
    mut z: Vec<C64>,
    n: u32,
) -> Result<Vec<C64>> {
    let m = z.len();
    let res_tol = 64.0 * f64::EPSILON;
    let step_tol = 64.0 * f64::EPSILON;
    // no permanent freeze: a transiently small step while the rest of
    // the configuration drifts must not lock a point off its root
    for _sweep in 0..500 {
        let mut moving = 0;
        for i in 0..m {
            let zi = z[i];
            let (phi, dphi, scale) = period_relation(f, zi, n);
            if phi.norm() <= res_tol * scale {
                continue;
            }
            let newton = if dphi.norm() < 1e-290 {
                C64::new(1e-9, 1.3e-9)
            } else {
                phi / dphi
            };
            let mut s_re = 0.0;
            let mut s_im = 0.0;
            for (j, zj) in z.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dx = zi.re - zj.re;
                let dy = zi.im - zj.im;
                let d2 = dx * dx + dy * dy;
                if d2 > 1e-300 {
                    let inv = 1.0 / d2;
                    s_re += dx * inv;
                    s_im -= dy * inv;
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * C64::new(s_re, s_im);
            let mut w = if denom.norm() < 1e-12 {
                newton
            } else {
                newton / denom
            };
            // block runaway steps without strangling the collective
            // far-field jump (w ~ z when the repulsion denominator is
            // nearly singular)
            let cap = 2.0 * (1.0 + zi.norm());
            if w.norm() > cap {
                w *= cap / w.norm();
            }
            z[i] = zi - w;
            if w.norm() > step_tol * (1.0 + z[i].norm()) {
                moving += 1;
            }
        }
        if moving == 0 {
            return Ok(z);
        }
    }
    // accept whatever satisfies the backward test; report the worst rest
    let mut worst = 0.0f64;
    for &zi in &z {
        let (phi, _, scale) = period_relation(f, zi, n);
        worst = worst.max(phi.norm() / scale.max(1e-300));
    }
    if worst > 1e4 * f64::EPSILON {
        return Err(Error::RootFinding {
            iterations: 500,
            residual: worst,
        });
    }
    Ok(z)
}

/// Smallest `k | n` with `f^k(pt) ~ pt`.
fn exact_period(
    f: &QuadraticRationalMap<f64>,
    pt: &SpherePoint<f64>,
    n: u32,
    tol: f64,
) -> u32 {
    let lift = f.lift();
    let mut cur = *pt;
    for k in 1..=n {
        cur = lift.apply(&cur);
        if n % k == 0 && cur.chordal(pt) < tol {
            return k;
        }
    }
    n
}

/// Groups exact-period-`k` points into cycles by following the map and
/// matching images against the remaining points.
fn group_cycles(
    f: &QuadraticRationalMap<f64>,
    points: &[SpherePoint<f64>],
    k: u32,
    cluster_tol: f64,
) -> Result<Vec<Vec<SpherePoint<f64>>>> {
    let lift = f.lift();
    if points.len() % k as usize != 0 {
        return Err(Error::CycleGrouping(format!(
            "{} exact-period-{k} points do not split into {k}-cycles",
            points.len()
        )));
    }
    let mut remaining: Vec<SpherePoint<f64>> = points.to_vec();
    let mut cycles = Vec::new();
    while let Some(start) = remaining.pop() {
        let mut orbit = vec![start];
        let mut cur = start;
        for _ in 1..k {
            let img = lift.apply(&cur);
            let mut best = (f64::INFINITY, usize::MAX);
            let mut second = f64::INFINITY;
            for (i, cand) in remaining.iter().enumerate() {
                let d = img.chordal(cand);
                if d < best.0 {
                    second = best.0;
                    best = (d, i);
                } else if d < second {
                    second = d;
                }
            }
            if best.1 == usize::MAX || best.0 > cluster_tol.max(1e-5) {
                return Err(Error::CycleGrouping(format!(
                    "image of a period-{k} point matches nothing within {:.1e}; raise the clustering tolerance",
                    cluster_tol.max(1e-5)
                )));
            }
            if second < best.0 + cluster_tol && second.is_finite() {
                return Err(Error::CycleGrouping(format!(
                    "two period-{k} points within {:.1e} of one image; clustering tolerance ambiguous",
                    cluster_tol
                )));
            }
            cur = remaining.remove(best.1);
            orbit.push(cur);
        }
        // closure check
        let back = lift.apply(&cur);
        if back.chordal(&start) > cluster_tol.max(1e-5) * 10.0 {
            return Err(Error::CycleGrouping(format!(
                "period-{k} orbit fails to close (gap {:.1e})",
                back.chordal(&start)
            )));
        }
        cycles.push(orbit);
    }
    Ok(cycles)
}

/// Multiplier spectrum of the exact-period-`n` cycles of `f`. Lower
/// periods are classified per point, removed, and scanned for parabolic
/// collisions; grouping retries with doubled tolerance before giving up.
pub fn periodic_cycles(f: &QuadraticRationalMap<f64>, n: u32) -> Result<CycleSpectrum> {
    periodic_cycles_with(f, n, &SpectraConfig::default())
}

pub fn periodic_cycles_with(
    f: &QuadraticRationalMap<f64>,
    n: u32,
    cfg: &SpectraConfig,
) -> Result<CycleSpectrum> {
    let pts = period_dividing_points(f, n)?;
    let lift = f.lift();
    // the classification and grouping tolerances double together until
    // every divisor class splits into clean cycles
    let mut last_err: Option<crate::error::Error> = None;
    for attempt in 0..7 {
        let tol_factor = (1u32 << attempt) as f64;
        let period_tol = cfg.period_tol * tol_factor;
        let cluster_tol = cfg.cluster_tol * tol_factor;
        let mut by_period: Vec<Vec<SpherePoint<f64>>> = vec![Vec::new(); n as usize + 1];
        for pt in &pts {
            let k = exact_period(f, pt, n, period_tol);
            by_period[k as usize].push(*pt);
        }
        let attempt_result = (|| -> Result<CycleSpectrum> {
            let mut parabolic_warning = false;
            for &k in divisors(n).iter().filter(|&&k| k < n) {
                let cycles = group_cycles(f, &by_period[k as usize], k, cluster_tol)?;
                for cyc in &cycles {
                    let m = lift.cycle_multiplier(cyc);
                    if (m - C64::new(1.0, 0.0)).norm() < cfg.parabolic_tol {
                        parabolic_warning = true;
                    }
                }
            }
            let cycles = group_cycles(f, &by_period[n as usize], n, cluster_tol)?;
            let mut multipliers: Vec<C64> =
                cycles.iter().map(|c| lift.cycle_multiplier(c)).collect();
            multipliers.sort_by(|a, b| {
                (a.re, a.im)
                    .partial_cmp(&(b.re, b.im))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            Ok(CycleSpectrum {
                period: n,
                multipliers,
                parabolic_warning,
            })
        })();
        match attempt_result {
            Ok(s) => return Ok(s),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt ran"))
}

/// The conjugacy-invariant product over exact-`n` cycles of
/// `(w - multiplier)`; vanishes exactly on `Per_n(w)`.
pub fn pern_value(pt: &ModuliPoint<f64>, n: u32, w: C64) -> Result<C64> {
    let (v, _) = pern_value_scaled(pt, n, w)?;
    Ok(v)
}

/// `pern_value` together with the magnitude scale of the product, for
/// relative convergence tests during root hunting.
pub fn pern_value_scaled(pt: &ModuliPoint<f64>, n: u32, w: C64) -> Result<(C64, f64)> {
    let f = pt.representative()?;
    let spec = periodic_cycles(&f, n)?;
    let mut value = C64::new(1.0, 0.0);
    let mut scale = 1.0f64;
    for &m in &spec.multipliers {
        value *= w - m;
        scale *= 1.0 + w.norm() + m.norm();
    }
    Ok((value, scale))
}

/// Degree `d(n)` of `Per_n(w)`: Mobius inversion of
/// `sum_{k | n} d(k) = 2^{n-1}`.
pub fn pern_degree(n: u32) -> Result<u64> {
    if n < 1 || n > 32 {
        return Err(Error::InvalidArgument("need 1 <= n <= 32".into()));
    }
    let mut d = vec![0u64; n as usize + 1];
    for k in 1..=n as usize {
        let lower: u64 = (1..k).filter(|j| k % j == 0).map(|j| d[j]).sum();
        d[k] = (1u64 << (k - 1)) - lower;
    }
    Ok(d[n as usize])
}

/// A reconstructed `Per_n(w)` curve.
#[derive(Debug, Clone)]
pub struct PernCurve {
    pub n: u32,
    pub w: C64,
    pub degree: u32,
    pub poly: BiPoly<f64>,
    /// RMS of |P| over held-out on-curve points, after normalization.
    pub residual: f64,
}

/// Curve JSON schema: `{n, w, degree, monomials: [{i, j, re, im}], residual}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveJson {
    pub n: u32,
    pub w: [f64; 2],
    pub degree: u32,
    pub monomials: Vec<MonomialJson>,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonomialJson {
    pub i: u32,
    pub j: u32,
    pub re: f64,
    pub im: f64,
}

impl PernCurve {
    pub fn to_json(&self) -> CurveJson {
        CurveJson {
            n: self.n,
            w: [self.w.re, self.w.im],
            degree: self.degree,
            monomials: self
                .poly
                .iter()
                .map(|(&(i, j), c)| MonomialJson {
                    i,
                    j,
                    re: c.re,
                    im: c.im,
                })
                .collect(),
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub seed: u64,
    /// On-curve samples per unknown coefficient used for the fit.
    pub fit_oversampling: usize,
    /// Additional held-out samples per unknown coefficient.
    pub holdout_oversampling: usize,
    /// Held-out RMS residual threshold.
    pub residual_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            seed: 2,
            fit_oversampling: 6,
            holdout_oversampling: 2,
            residual_threshold: 1e-8,
        }
    }
}

fn near_root_of_unity(w: C64) -> bool {
    for q in 1..=12u32 {
        for p in 0..q {
            let root = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 / q as f64);
            if (w - root).norm() < 1e-3 {
                return true;
            }
        }
    }
    false
}

/// Hunts points on `Per_n(w)` by Newton along random affine lines
/// through moduli space; every accepted sample lies on the curve itself.
fn harvest_curve_points(
    n: u32,
    w: C64,
    want: usize,
    seed: u64,
) -> Result<Vec<(C64, C64)>> {
    let per_line_starts = 3usize;
    let max_batches = 40usize;
    let lines_per_batch = (want / 2).max(8);
    let mut points: Vec<(C64, C64)> = Vec::new();
    for batch in 0..max_batches {
        let found: Vec<Vec<(C64, C64)>> = (0..lines_per_batch)
            .into_par_iter()
            .map(|l| {
                let stream = (batch * lines_per_batch + l) as u64;
                let mut rng = stream_rng(seed, stream);
                let base = (
                    complex_in_square(&mut rng, 3.0),
                    complex_in_square(&mut rng, 4.0),
                );
                let mut d1 = gaussian_complex(&mut rng);
                let mut d2 = gaussian_complex(&mut rng);
                let norm = (d1.norm_sqr() + d2.norm_sqr()).sqrt();
                d1 /= norm;
                d2 /= norm;
                let g = |t: C64| -> Option<(C64, f64)> {
                    let pt = ModuliPoint::new(base.0 + t * d1, base.1 + t * d2);
                    pern_value_scaled(&pt, n, w).ok()
                };
                let mut line_points = Vec::new();
                for _ in 0..per_line_starts {
                    let mut t = crate::rng::complex_in_disk(&mut rng, 5.0);
                    let mut ok = false;
                    for _ in 0..60 {
                        let h = 1e-6 * (1.0 + t.norm());
                        let (v0, scale) = match g(t) {
                            Some(v) => v,
                            None => break,
                        };
                        if v0.norm() <= 5e-13 * scale {
                            ok = true;
                            break;
                        }
                        let vp = match g(t + C64::new(h, 0.0)) {
                            Some(v) => v.0,
                            None => break,
                        };
                        let vm = match g(t - C64::new(h, 0.0)) {
                            Some(v) => v.0,
                            None => break,
                        };
                        let dv = (vp - vm) / (2.0 * h);
                        if dv.norm() < 1e-14 {
                            break;
                        }
                        let step = v0 / dv;
                        t -= step;
                        if t.norm() > 40.0 {
                            break;
                        }
                        if step.norm() < 1e-13 * (1.0 + t.norm()) {
                            if let Some((v, scale)) = g(t) {
                                ok = v.norm() <= 5e-13 * scale;
                            }
                            break;
                        }
                    }
                    if ok {
                        let s1 = base.0 + t * d1;
                        let s2 = base.1 + t * d2;
                        if s1.norm() <= 10.0 && s2.norm() <= 20.0 {
                            line_points.push((s1, s2));
                        }
                    }
                }
                line_points
            })
            .collect();
        for lp in found {
            for p in lp {
                let dup = points.iter().any(|q| {
                    (q.0 - p.0).norm_sqr() + (q.1 - p.1).norm_sqr() < 1e-12
                });
                if !dup {
                    points.push(p);
                }
            }
        }
        if points.len() >= want {
            points.truncate(want);
            return Ok(points);
        }
    }
    Err(Error::FitResidual {
        residual: f64::NAN,
        threshold: f64::NAN,
        detail: format!(
            "root hunting found only {} of {} on-curve samples",
            points.len(),
            want
        ),
    })
}

/// Reconstructs `Per_n(w)` by fitting the null direction of the design
/// system built from on-curve samples.
pub fn fit_pern_curve(n: u32, w: C64) -> Result<PernCurve> {
    fit_pern_curve_with(n, w, &FitConfig::default())
}

pub fn fit_pern_curve_with(n: u32, w: C64, cfg: &FitConfig) -> Result<PernCurve> {
    if !(2..=4).contains(&n) {
        return Err(Error::InvalidArgument(
            "curve fitting kept to 2 <= n <= 4 (degree <= 6)".into(),
        ));
    }
    if near_root_of_unity(w) {
        return Err(Error::InvalidArgument(format!(
            "w = {w} within 1e-3 of a root of unity: Per_n(w) may share parabolic components"
        )));
    }
    let degree = pern_degree(n)? as u32;
    let monos = monomials(degree);
    let n_fit = cfg.fit_oversampling * monos.len();
    let n_hold = cfg.holdout_oversampling * monos.len();
    let pts = harvest_curve_points(n, w, n_fit + n_hold, cfg.seed)?;
    let (fit_pts, hold_pts) = pts.split_at(n_fit);

    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(monos.len());
    let mut scales: Vec<f64> = Vec::with_capacity(monos.len());
    for &(i, j) in &monos {
        let mut col: Vec<C64> = fit_pts
            .iter()
            .map(|&(s1, s2)| s1.powu(i) * s2.powu(j))
            .collect();
        let s = col.iter().map(|c| c.norm()).fold(0.0f64, f64::max).max(1e-300);
        for c in col.iter_mut() {
            *c /= s;
        }
        scales.push(s);
        columns.push(col);
    }
    let (v, sigma_min) = min_singular_vector(columns)?;
    let poly = BiPoly::new(
        monos
            .iter()
            .zip(v.iter().zip(&scales))
            .map(|(&(i, j), (&c, &s))| ((i, j), c / s)),
    )
    .normalize();

    let residual = (hold_pts
        .iter()
        .map(|&(s1, s2)| poly.eval(s1, s2).norm_sqr())
        .sum::<f64>()
        / hold_pts.len() as f64)
        .sqrt();
    if residual > cfg.residual_threshold {
        return Err(Error::FitResidual {
            residual,
            threshold: cfg.residual_threshold,
            detail: format!(
                "sigma_min {sigma_min:.3e}, {} fit points, {} held out",
                fit_pts.len(),
                hold_pts.len()
            ),
        });
    }
    if poly.total_degree() != degree {
        return Err(Error::FitResidual {
            residual,
            threshold: cfg.residual_threshold,
            detail: format!(
                "fitted degree {} differs from d({n}) = {degree}",
                poly.total_degree()
            ),
        });
    }
    Ok(PernCurve {
        n,
        w,
        degree,
        poly,
        residual,
    })
}

/// Intersection multiplicities of a fitted curve with the line at
/// infinity, keyed by the admissible `(p, q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfinityMultiplicities {
    pub atoms: Vec<(u32, u32, u32)>,
}

impl InfinityMultiplicities {
    pub fn multiplicity(&self, p: u32, q: u32) -> u32 {
        self.atoms
            .iter()
            .find(|&&(ap, aq, _)| ap == p && aq == q)
            .map_or(0, |&(_, _, m)| m)
    }

    pub fn total(&self) -> u32 {
        self.atoms.iter().map(|&(_, _, m)| m).sum()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("p,q,multiplicity\n");
        for &(p, q, m) in &self.atoms {
            out.push_str(&format!("{p},{q},{m}\n"));
        }
        out
    }
}

/// Reads the multiplicities from the top form of the fitted curve: roots
/// are matched to `2 cos(2 pi p/q)` with `q <= n`. Roots of a
/// multiplicity-m cluster splay like the m-th root of the coefficient
/// error, so assignment uses a wide window while the cluster mean must
/// land within 1e-6 of its target.
pub fn infinity_multiplicities(curve: &PernCurve) -> Result<InfinityMultiplicities> {
    let tf = top_form(&curve.poly)?;
    if tf.chart_deficiency() != 0 {
        return Err(Error::UnmatchedInfinityRoot {
            root: "[0:1:0]".into(),
            n: curve.n,
        });
    }
    let roots = poly_roots(&tf.poly)?;
    // admissible targets x = 2 cos(2 pi p/q), q <= n
    let mut targets: Vec<(u32, u32, f64)> = Vec::new();
    for q in 2..=curve.n {
        for p in 1..=q / 2 {
            if check_pq(p, q).is_ok() {
                targets.push((
                    p,
                    q,
                    2.0 * (std::f64::consts::TAU * p as f64 / q as f64).cos(),
                ));
            }
        }
    }
    let assign_window = 0.02;
    let mean_tol = 1e-6;
    let mut clusters: Vec<Vec<C64>> = vec![Vec::new(); targets.len()];
    for root in roots {
        let mut best = (f64::INFINITY, usize::MAX);
        for (k, &(_, _, x)) in targets.iter().enumerate() {
            let d = (root - C64::new(x, 0.0)).norm();
            if d < best.0 {
                best = (d, k);
            }
        }
        if best.0 > assign_window {
            return Err(Error::UnmatchedInfinityRoot {
                root: format!("{root}"),
                n: curve.n,
            });
        }
        clusters[best.1].push(root);
    }
    let mut atoms = Vec::new();
    for (k, cluster) in clusters.iter().enumerate() {
        if cluster.is_empty() {
            continue;
        }
        let mean = cluster.iter().sum::<C64>() / cluster.len() as f64;
        let (p, q, x) = targets[k];
        if (mean - C64::new(x, 0.0)).norm() > mean_tol {
            return Err(Error::UnmatchedInfinityRoot {
                root: format!("cluster mean {mean} vs 2cos(2pi {p}/{q})"),
                n: curve.n,
            });
        }
        atoms.push((p, q, cluster.len() as u32));
    }
    let result = InfinityMultiplicities { atoms };
    if result.total() != curve.degree {
        return Err(Error::UnmatchedInfinityRoot {
            root: format!(
                "multiplicities sum to {} but the curve degree is {}",
                result.total(),
                curve.degree
            ),
            n: curve.n,
        });
    }
    Ok(result)
}

/// Where a Lelong estimate takes its multiplicity from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LelongRoute {
    /// Curve fit (`n <= 4`).
    Curve,
    /// Hyperbolic-center counting in the polynomial slice (`n <= 14`).
    Centers,
}

#[derive(Debug, Clone, Copy)]
pub struct LelongEstimate {
    pub n: u32,
    pub p: u32,
    pub q: u32,
    pub multiplicity: u64,
    /// `2^{-n} * multiplicity`.
    pub value: f64,
    /// The limiting Lelong number: `1/6` for `q = 2`, else `1/(2^q - 1)`.
    pub target: f64,
    pub route: LelongRoute,
}

/// Lelong-number approximant `2^{-n} D_{p/q}(n)` with its limit target.
pub fn lelong_estimate(n: u32, p: u32, q: u32) -> Result<LelongEstimate> {
    check_pq(p, q)?;
    let (multiplicity, route) = if n <= 4 {
        if n < 2 {
            return Err(Error::InvalidArgument("need n >= 2".into()));
        }
        let curve = fit_pern_curve(n, C64::new(0.0, 0.0))?;
        let mults = infinity_multiplicities(&curve)?;
        (mults.multiplicity(p, q) as u64, LelongRoute::Curve)
    } else {
        let counts = crate::mandel::limb_count(p, q, n)?;
        (counts.doubled, LelongRoute::Centers)
    };
    let target = if q == 2 {
        1.0 / 6.0
    } else {
        1.0 / (((1u64 << q) - 1) as f64)
    };
    Ok(LelongEstimate {
        n,
        p,
        q,
        multiplicity,
        value: multiplicity as f64 / (1u64 << n) as f64,
        target,
        route: if n <= 4 {
            LelongRoute::Curve
        } else {
            route
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::sigma_of_map;
    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn squaring_map_two_cycle() {
        let f = QuadraticRationalMap::polynomial(c(0.0, 0.0));
        let s = periodic_cycles(&f, 2).unwrap();
        assert_eq!(s.multipliers.len(), 1);
        assert!((s.multipliers[0] - c(4.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn basilica_superattracting_two_cycle() {
        let f = QuadraticRationalMap::polynomial(c(-1.0, 0.0));
        let s = periodic_cycles(&f, 2).unwrap();
        assert_eq!(s.multipliers.len(), 1);
        assert!(s.multipliers[0].norm() < 1e-9);
    }

    #[test]
    fn period_three_cycle_count() {
        // (2^3 + 1) points, 3 fixed, no exact 2s among them: 2 cycles
        let f = QuadraticRationalMap::polynomial(c(0.0, 0.1));
        let s = periodic_cycles(&f, 3).unwrap();
        assert_eq!(s.multipliers.len(), 2);
    }

    #[test]
    fn point_count_is_two_to_n_plus_one() {
        let mut rng = stream_rng(31, 0);
        let mut done = 0;
        while done < 6 {
            let mut coeff = || crate::rng::complex_in_square(&mut rng, 1.0);
            let f = match QuadraticRationalMap::new(
                [coeff(), coeff(), coeff()],
                [coeff(), coeff(), coeff()],
            ) {
                Ok(f) => f,
                Err(_) => continue,
            };
            for n in 1..=6u32 {
                let pts = period_dividing_points(&f, n).unwrap();
                assert_eq!(pts.len(), (1usize << n) + 1, "period {n}");
            }
            done += 1;
        }
    }

    #[test]
    fn spectrum_is_conjugacy_invariant() {
        let mut rng = stream_rng(31, 1);
        let mut done = 0;
        while done < 5 {
            let cc = crate::rng::complex_in_square(&mut rng, 0.8);
            let f = QuadraticRationalMap::polynomial(cc);
            let m = [
                [
                    crate::rng::complex_in_square(&mut rng, 1.0),
                    crate::rng::complex_in_square(&mut rng, 1.0),
                ],
                [
                    crate::rng::complex_in_square(&mut rng, 1.0),
                    crate::rng::complex_in_square(&mut rng, 1.0),
                ],
            ];
            if (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm() < 0.2 {
                continue;
            }
            let g = f.conjugate(m);
            for n in [2u32, 3, 4] {
                let sf = periodic_cycles(&f, n).unwrap();
                let sg = periodic_cycles(&g, n).unwrap();
                assert_eq!(sf.multipliers.len(), sg.multipliers.len());
                let mut pool = sg.multipliers.clone();
                for mf in &sf.multipliers {
                    let (k, d) = pool
                        .iter()
                        .enumerate()
                        .map(|(k, mg)| (k, (mf - mg).norm()))
                        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                        .unwrap();
                    assert!(d < 1e-8 * (1.0 + mf.norm()), "n = {n}: {d:.2e}");
                    pool.remove(k);
                }
            }
            done += 1;
        }
    }

    #[test]
    fn pern_value_examples() {
        // basilica class lies on Per_2(0)
        let basilica = ModuliPoint::new(c(2.0, 0.0), c(-4.0, 0.0));
        let v = pern_value(&basilica, 2, c(0.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-8, "|{v}|");
        // the squaring class has 2-cycle multiplier 4: value (0 - 4)
        let square = ModuliPoint::new(c(2.0, 0.0), c(0.0, 0.0));
        let v = pern_value(&square, 2, c(0.0, 0.0)).unwrap();
        assert!((v - c(-4.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn pern_value_representative_independent() {
        use crate::moduli::{normal_form, sigma_of_map as som};
        // same class through two different multiplier pairs
        let alpha = c(0.4, 0.2);
        let beta = c(-0.7, 0.1);
        let gamma = crate::moduli::third_multiplier(alpha, beta).unwrap();
        let f1 = normal_form(alpha, beta).unwrap();
        let f2 = normal_form(gamma, alpha).unwrap();
        let p1 = som(&f1).unwrap();
        let p2 = som(&f2).unwrap();
        assert!((p1.sigma1 - p2.sigma1).norm() < 1e-9);
        for n in [2u32, 3] {
            let v1 = pern_value(&p1, n, c(0.3, 0.1)).unwrap();
            let v2 = pern_value(&p2, n, c(0.3, 0.1)).unwrap();
            assert!((v1 - v2).norm() < 1e-9 * (1.0 + v1.norm()), "n = {n}");
        }
    }

    #[test]
    fn pern_degree_table() {
        let expect: [u64; 16] = [
            1, 1, 3, 6, 15, 27, 63, 120, 252, 495, 1023, 2010, 4095, 8127, 16365, 32640,
        ];
        for (k, &d) in expect.iter().enumerate() {
            assert_eq!(pern_degree(k as u32 + 1).unwrap(), d);
        }
        assert!(pern_degree(0).is_err());
    }

    #[test]
    fn pern_degree_mass_growth() {
        // d(n)/2^{n-1} -> 1
        for n in 4..=16u32 {
            let ratio = pern_degree(n).unwrap() as f64 / (1u64 << (n - 1)) as f64;
            assert!(ratio <= 1.0);
            assert!(
                ratio >= 1.0 - (2.0f64).powi(-(n as i32 / 2 - 1)),
                "n = {n}: {ratio}"
            );
        }
        for n in 12..=16u32 {
            let ratio = pern_degree(n).unwrap() as f64 / (1u64 << (n - 1)) as f64;
            assert!(ratio > 0.98);
        }
    }

    #[test]
    fn fit_per2_zero_line_through_basilica() {
        let curve = fit_pern_curve(2, c(0.0, 0.0)).unwrap();
        assert_eq!(curve.degree, 1);
        assert!(curve.residual < 1e-8);
        let v = curve.poly.eval(c(2.0, 0.0), c(-4.0, 0.0));
        assert!(v.norm() < 1e-7, "Per_2(0) misses the basilica: |{v}|");
    }

    #[test]
    fn fit_per2_random_w_single_infinity_point() {
        let w = c(0.37, 0.21);
        let curve = fit_pern_curve(2, w).unwrap();
        assert_eq!(curve.degree, 1);
        let mults = infinity_multiplicities(&curve).unwrap();
        assert_eq!(mults.atoms, vec![(1, 2, 1)]);
    }

    #[test]
    fn fit_per3_zero_cubic_through_airplane_and_rabbit() {
        let curve = fit_pern_curve(3, c(0.0, 0.0)).unwrap();
        assert_eq!(curve.degree, 3);
        assert!(curve.residual < 1e-8);
        // vanishes at (2, 4c) for the three period-3 centers of z^2 + c
        let centers = poly_roots(&CPoly::new(vec![
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(2.0, 0.0),
            c(1.0, 0.0),
        ]))
        .unwrap();
        for cc in centers {
            let v = curve.poly.eval(c(2.0, 0.0), cc * 4.0);
            assert!(v.norm() < 1e-6, "Per_3(0) misses center {cc}: |{v}|");
        }
        let mults = infinity_multiplicities(&curve).unwrap();
        assert_eq!(mults.multiplicity(1, 2), 1);
        assert_eq!(mults.multiplicity(1, 3), 2);
        assert_eq!(mults.total(), 3);
    }

    #[test]
    fn curve_json_round_trip_fields() {
        let curve = fit_pern_curve(2, c(0.0, 0.0)).unwrap();
        let j = curve.to_json();
        assert_eq!(j.n, 2);
        assert_eq!(j.degree, 1);
        assert!(!j.monomials.is_empty());
        let s = serde_json::to_string(&j).unwrap();
        let back: CurveJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.monomials.len(), j.monomials.len());
    }

    #[test]
    fn fit_guards() {
        assert!(fit_pern_curve(5, c(0.0, 0.0)).is_err());
        assert!(fit_pern_curve(1, c(0.0, 0.0)).is_err());
        // w a root of unity is excluded from fits
        assert!(fit_pern_curve(2, c(1.0, 0.0)).is_err());
        assert!(fit_pern_curve(3, c(-0.5, 3.0f64.sqrt() / 2.0)).is_err());
    }

    #[test]
    fn lelong_estimate_small_n() {
        let e = lelong_estimate(3, 1, 3).unwrap();
        assert_eq!(e.multiplicity, 2);
        assert!((e.value - 0.25).abs() < 1e-12);
        assert!((e.target - 1.0 / 7.0).abs() < 1e-15);
        assert!(lelong_estimate(3, 0, 1).is_err());
        assert!(lelong_estimate(6, 2, 4).is_err());
    }

    #[test]
    fn conjugacy_check_via_sigma() {
        // sanity: sigma of the basilica representative is (2, -4)
        let f = QuadraticRationalMap::polynomial(c(-1.0, 0.0));
        let pt = sigma_of_map(&f).unwrap();
        assert!((pt.sigma1 - c(2.0, 0.0)).norm() < 1e-9);
        assert!((pt.sigma2 - c(-4.0, 0.0)).norm() < 1e-9);
    }
}
