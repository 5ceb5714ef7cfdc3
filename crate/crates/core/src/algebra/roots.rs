//! Polynomial root finding: simultaneous Aberth-Ehrlich iteration with a
//! companion-matrix QR fallback for the rare non-converging batches.

use super::poly::CPoly;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use crate::C;
use num_traits::Zero;

#[derive(Debug, Clone)]
pub struct RootFindConfig {
    /// Cap on Aberth sweeps before falling back to the companion matrix.
    pub max_sweeps: usize,
    /// Backward-error acceptance: |p(z)| <= factor * eps * scale(z).
    pub residual_factor: f64,
    /// Newton polish steps applied to every accepted root.
    pub polish_steps: usize,
}

impl Default for RootFindConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 600,
            residual_factor: 2e6,
            polish_steps: 3,
        }
    }
}

/// All roots of `p`, with multiplicity, under the default configuration.
pub fn poly_roots<T: Real>(p: &CPoly<T>) -> Result<Vec<C<T>>> {
    poly_roots_with(p, &RootFindConfig::default())
}

pub fn poly_roots_with<T: Real>(p: &CPoly<T>, cfg: &RootFindConfig) -> Result<Vec<C<T>>> {
    if p.is_zero() || p.degree() < 1 {
        return Err(Error::InvalidArgument(
            "root finding needs degree >= 1".into(),
        ));
    }
    if p.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "root finding needs finite coefficients".into(),
        ));
    }

    // factor out exact roots at the origin
    let mut zeros_at_origin = 0usize;
    let coeffs = p.coeffs();
    while coeffs[zeros_at_origin].is_zero() {
        zeros_at_origin += 1;
    }
    let work = CPoly::new(coeffs[zeros_at_origin..].to_vec());
    let mut roots = vec![C::<T>::zero(); zeros_at_origin];
    if work.degree() == 0 {
        return Ok(roots);
    }

    // scale-invariant coefficients
    let scale = work.max_coeff_norm();
    let work = work.scale(C::new(T::one() / scale, T::zero()));

    let tol = lit::<T>(cfg.residual_factor) * T::epsilon();
    let mut found = match work.degree() {
        1 => vec![-work.coeff(0) / work.coeff(1)],
        2 => quadratic_roots(work.coeff(2), work.coeff(1), work.coeff(0)).to_vec(),
        _ => {
            let mut r = match aberth(&work, cfg, None) {
                Ok(r) => r,
                Err(_) => companion_roots(&work)?,
            };
            polish(&work, &mut r, cfg.polish_steps);
            if worst_relative_residual(&work, &r) > tol {
                // clusters leave stragglers: restart the simultaneous
                // iteration from the current approximations, whose mutual
                // repulsion resolves them
                r = aberth(&work, cfg, Some(r))?;
                polish(&work, &mut r, cfg.polish_steps);
            }
            r
        }
    };

    polish(&work, &mut found, 1);
    let worst = worst_relative_residual(&work, &found);
    if worst > tol {
        return Err(Error::RootFinding {
            iterations: cfg.max_sweeps,
            residual: worst.to_f64().unwrap_or(f64::NAN),
        });
    }
    roots.extend(found);
    Ok(roots)
}

/// Closed-form roots of the monic cubic `z^3 + a z^2 + b z + c`
/// (Cardano on the depressed form). Root sums stay accurate to rounding
/// even at triple roots, where iterative solvers smear the cluster.
pub fn cubic_roots<T: Real>(a: C<T>, b: C<T>, c: C<T>) -> [C<T>; 3] {
    let third = lit::<T>(1.0 / 3.0);
    let shift = a * third;
    // depressed cubic t^3 + p t + q
    let p = b - a * a * third;
    let q = c + (a * a * lit::<T>(2.0 / 27.0) - b * third) * a;
    let half_q = q * lit::<T>(0.5);
    let disc = half_q * half_q + p * p * p * lit::<T>(1.0 / 27.0);
    let sq = disc.sqrt();
    // pick the better-conditioned cube-root branch
    let u3 = if (-half_q + sq).norm() >= (-half_q - sq).norm() {
        -half_q + sq
    } else {
        -half_q - sq
    };
    let u = u3.powf(third);
    let omega = C::new(lit::<T>(-0.5), lit::<T>(0.75).sqrt());
    let mut roots = [C::zero(); 3];
    for (k, r) in roots.iter_mut().enumerate() {
        let uk = match k {
            0 => u,
            1 => u * omega,
            _ => u * omega * omega,
        };
        let t = if uk.norm() < T::epsilon() {
            uk
        } else {
            uk - p / (uk * lit::<T>(3.0))
        };
        *r = t - shift;
    }
    roots
}

/// Numerically stable quadratic formula, `a z^2 + b z + c`.
pub fn quadratic_roots<T: Real>(a: C<T>, b: C<T>, c: C<T>) -> [C<T>; 2] {
    let disc = b * b - a * c * lit::<T>(4.0);
    let sq = disc.sqrt();
    // pick the sign that avoids cancellation in b +/- sq
    let s = if (b + sq).norm() >= (b - sq).norm() {
        b + sq
    } else {
        b - sq
    };
    let half = lit::<T>(0.5);
    if s.is_zero() {
        // b = 0 and disc = 0
        return [C::zero(), C::zero()];
    }
    let q = -s * half;
    [q / a, c / q]
}

fn worst_relative_residual<T: Real>(p: &CPoly<T>, roots: &[C<T>]) -> T {
    let floor = T::min_positive_value();
    roots
        .iter()
        .map(|&z| p.eval(z).norm() / p.magnitude_scale(z).max(floor))
        .fold(T::zero(), |a, b| a.max(b))
}

fn polish<T: Real>(p: &CPoly<T>, roots: &mut [C<T>], steps: usize) {
    for z in roots.iter_mut() {
        for _ in 0..steps {
            let (v, dv) = p.eval_with_derivative(*z);
            if dv.is_zero() {
                break;
            }
            let step = v / dv;
            let cand = *z - step;
            if p.eval(cand).norm() < v.norm() {
                *z = cand;
            } else {
                break;
            }
        }
    }
}

/// Fujiwara bound: every root lies within this radius.
fn root_radius_bound<T: Real>(p: &CPoly<T>) -> T {
    let n = p.degree();
    let an = p.leading().norm();
    let mut r = T::zero();
    for k in 0..n {
        let mut q = p.coeff(k).norm() / an;
        if k == 0 {
            q = q * lit::<T>(0.5);
        }
        let expo = T::one() / lit::<T>((n - k) as f64);
        r = r.max(q.powf(expo));
    }
    r * lit::<T>(2.0) + lit::<T>(1e-3)
}

fn aberth<T: Real>(
    p: &CPoly<T>,
    cfg: &RootFindConfig,
    warm_start: Option<Vec<C<T>>>,
) -> Result<Vec<C<T>>> {
    let n = p.degree();
    let radius = root_radius_bound(p);
    let center = -p.coeff(n - 1) / (p.leading() * lit::<T>(n as f64));
    let tau = lit::<T>(std::f64::consts::TAU);

    // circle start with an irrational phase offset and staggered radii so
    // symmetric polynomials cannot stall the iteration
    let mut z: Vec<C<T>> = warm_start.unwrap_or_else(|| {
        (0..n)
            .map(|j| {
                let angle = tau * (lit::<T>(j as f64) + lit::<T>(0.37)) / lit::<T>(n as f64)
                    + lit::<T>(0.4);
                let stagger = T::one() + lit::<T>(0.05) * lit::<T>(((j % 5) as f64 - 2.0) / 2.0);
                center + C::from_polar(radius * stagger, angle)
            })
            .collect()
    });
    // split any coincident warm-start approximations so the repulsion
    // term stays finite
    for i in 0..n {
        for j in 0..i {
            if (z[i] - z[j]).norm() < T::epsilon() * lit::<T>(16.0) {
                let kick = lit::<T>(1e-10) * (T::one() + z[i].norm());
                z[i] = z[i] + C::new(kick, kick * lit::<T>(1.618));
            }
        }
    }

    let mut done = vec![false; n];
    let step_tol = T::epsilon() * lit::<T>(64.0);
    let res_tol = lit::<T>(cfg.residual_factor) * T::epsilon();
    let floor = T::min_positive_value();

    for _sweep in 0..cfg.max_sweeps {
        let mut active = 0usize;
        for i in 0..n {
            if done[i] {
                continue;
            }
            active += 1;
            let zi = z[i];
            let (v, dv) = p.eval_with_derivative(zi);
            if v.norm() <= res_tol * p.magnitude_scale(zi).max(floor) {
                done[i] = true;
                continue;
            }
            let newton = if dv.is_zero() {
                // nudge off the critical point
                C::new(T::epsilon().sqrt(), T::epsilon().sqrt())
            } else {
                v / dv
            };
            let mut repulsion = C::<T>::zero();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    let nrm = d.norm_sqr();
                    if nrm > floor {
                        repulsion = repulsion + d.conj() / nrm;
                    }
                }
            }
            let denom = C::new(T::one(), T::zero()) - newton * repulsion;
            let w = if denom.norm() < lit::<T>(1e-12) {
                newton
            } else {
                newton / denom
            };
            z[i] = zi - w;
            if w.norm() <= step_tol * (T::one() + z[i].norm()) {
                done[i] = true;
            }
        }
        if active == 0 {
            return Ok(z);
        }
    }
    if done.iter().all(|&d| d) {
        return Ok(z);
    }
    Err(Error::RootFinding {
        iterations: cfg.max_sweeps,
        residual: worst_relative_residual(p, &z).to_f64().unwrap_or(f64::NAN),
    })
}

// ---------------------------------------------------------------------------
// companion matrix fallback: complex Hessenberg QR with Wilkinson shifts
// ---------------------------------------------------------------------------

struct Dense<T: Real> {
    n: usize,
    a: Vec<C<T>>,
}

impl<T: Real> Dense<T> {
    fn at(&self, i: usize, j: usize) -> C<T> {
        self.a[i * self.n + j]
    }
    fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.a[i * self.n + j] = v;
    }
}

fn companion_roots<T: Real>(p: &CPoly<T>) -> Result<Vec<C<T>>> {
    let n = p.degree();
    let lead = p.leading();
    let mut h = Dense {
        n,
        a: vec![C::<T>::zero(); n * n],
    };
    for i in 0..n.saturating_sub(1) {
        h.set(i + 1, i, C::new(T::one(), T::zero()));
    }
    for i in 0..n {
        h.set(i, n - 1, -p.coeff(i) / lead);
    }
    balance(&mut h);
    hessenberg_eigenvalues(h)
}

/// Parlett-Reinsch balancing restricted to powers of two.
fn balance<T: Real>(h: &mut Dense<T>) {
    let n = h.n;
    let two = lit::<T>(2.0);
    for _ in 0..8 {
        let mut changed = false;
        for i in 0..n {
            let mut row = T::zero();
            let mut col = T::zero();
            for j in 0..n {
                if j != i {
                    row = row + h.at(i, j).norm();
                    col = col + h.at(j, i).norm();
                }
            }
            if row.is_zero() || col.is_zero() {
                continue;
            }
            let mut f = T::one();
            let mut c = col;
            let s = row + col;
            while c < row / two {
                f = f * two;
                c = c * two * two;
            }
            while c > row * two {
                f = f / two;
                c = c / (two * two);
            }
            if (row / f + col * f) < lit::<T>(0.95) * s {
                changed = true;
                for j in 0..n {
                    let v = h.at(i, j) / f;
                    h.set(i, j, v);
                    let w = h.at(j, i) * f;
                    h.set(j, i, w);
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn givens<T: Real>(a: C<T>, b: C<T>) -> (T, C<T>) {
    let na = a.norm();
    let nb = b.norm();
    if nb.is_zero() {
        return (T::one(), C::zero());
    }
    let r = (na * na + nb * nb).sqrt();
    if na.is_zero() {
        return (T::zero(), b.conj() / nb);
    }
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

fn hessenberg_eigenvalues<T: Real>(mut h: Dense<T>) -> Result<Vec<C<T>>> {
    let n = h.n;
    let mut eigs: Vec<C<T>> = Vec::with_capacity(n);
    let mut hi = n as isize - 1;
    let eps = T::epsilon();
    let mut stall = 0usize;
    let mut total_steps = 0usize;
    let max_steps = 80 * n + 200;

    while hi >= 0 {
        let hiu = hi as usize;
        // deflation scan
        let mut lo = 0usize;
        for m in (1..=hiu).rev() {
            let sub = h.at(m, m - 1).norm();
            if sub <= eps * (h.at(m - 1, m - 1).norm() + h.at(m, m).norm()) {
                h.set(m, m - 1, C::zero());
                lo = m;
                break;
            }
        }
        if lo == hiu {
            eigs.push(h.at(hiu, hiu));
            hi -= 1;
            stall = 0;
            continue;
        }
        if lo + 1 == hiu {
            let (e1, e2) = two_by_two_eigs(
                h.at(lo, lo),
                h.at(lo, hiu),
                h.at(hiu, lo),
                h.at(hiu, hiu),
            );
            eigs.push(e1);
            eigs.push(e2);
            hi -= 2;
            stall = 0;
            continue;
        }

        total_steps += 1;
        stall += 1;
        if total_steps > max_steps {
            return Err(Error::RootFinding {
                iterations: total_steps,
                residual: f64::NAN,
            });
        }
        let mut shift = {
            let (e1, e2) = two_by_two_eigs(
                h.at(hiu - 1, hiu - 1),
                h.at(hiu - 1, hiu),
                h.at(hiu, hiu - 1),
                h.at(hiu, hiu),
            );
            let d = h.at(hiu, hiu);
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        if stall % 12 == 0 {
            // exceptional shift to break limit cycles
            shift = h.at(hiu, hiu)
                + C::new(
                    lit::<T>(1.379) * h.at(hiu, hiu - 1).norm(),
                    lit::<T>(0.912) * h.at(hiu - 1, hiu - 2).norm(),
                );
        }

        // explicit shifted QR sweep on the active window [lo, hiu]:
        // Q^H (H - mu I) = R, then H <- R Q + mu I
        for i in lo..=hiu {
            let v = h.at(i, i) - shift;
            h.set(i, i, v);
        }
        let mut rots: Vec<(T, C<T>)> = Vec::with_capacity(hiu - lo);
        for i in lo..hiu {
            let (c, s) = givens(h.at(i, i), h.at(i + 1, i));
            rots.push((c, s));
            for j in i..=hiu {
                let x = h.at(i, j);
                let y = h.at(i + 1, j);
                h.set(i, j, x * c + y * s);
                h.set(i + 1, j, -(x * s.conj()) + y * c);
            }
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let j = lo + idx;
            let imax = (j + 1).min(hiu);
            for i in lo..=imax {
                let x = h.at(i, j);
                let y = h.at(i, j + 1);
                h.set(i, j, x * c + y * s.conj());
                h.set(i, j + 1, -(x * s) + y * c);
            }
        }
        for i in lo..=hiu {
            let v = h.at(i, i) + shift;
            h.set(i, i, v);
        }
    }
    Ok(eigs)
}

fn two_by_two_eigs<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> (C<T>, C<T>) {
    let half = lit::<T>(0.5);
    let tr = (a + d) * half;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    (tr + disc, tr - disc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .unwrap()
        });
        v
    }

    #[test]
    fn factored_quadratic() {
        // z^2 - 1 -> {1, -1}
        let p = CPoly::new(vec![C64::new(-1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let r = sorted(poly_roots(&p).unwrap());
        assert!((r[0] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn double_root() {
        // (z - 2)^2 -> {2, 2}
        let p = CPoly::new(vec![C64::new(4.0, 0.0), C64::new(-4.0, 0.0), C64::new(1.0, 0.0)]);
        let r = poly_roots(&p).unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z - C64::new(2.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn period_three_center_polynomial() {
        // c^3 + 2c^2 + c + 1: one real root and a conjugate pair, frozen from
        // a bisection oracle on the real root and the quadratic formula on
        // the deflated factor.
        let p = CPoly::new(vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        // oracle: bisection on the real root
        let f = |c: f64| c * c * c + 2.0 * c * c + c + 1.0;
        let (mut a, mut b) = (-2.0, -1.0);
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if f(a) * f(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let real_root = 0.5 * (a + b);
        // synthetic division by (c - real_root), then the quadratic formula
        let b1 = 2.0 + real_root;
        let b0 = 1.0 + real_root * b1;
        assert!(b1 * b1 - 4.0 * b0 < 0.0, "remaining pair must be complex");
        let im = (4.0 * b0 - b1 * b1).sqrt() / 2.0;
        let re = -b1 / 2.0;

        let roots = poly_roots(&p).unwrap();
        let mut expected = vec![
            C64::new(real_root, 0.0),
            C64::new(re, im),
            C64::new(re, -im),
        ];
        for z in roots {
            let k = expected
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| {
                    (z - **x).norm().partial_cmp(&(z - **y).norm()).unwrap()
                })
                .map(|(k, _)| k)
                .unwrap();
            assert!((z - expected[k]).norm() < 1e-9, "root {z} vs {}", expected[k]);
            expected.remove(k);
        }
        assert!((real_root + 1.754_877_666_246_693).abs() < 1e-12);
        assert!((re + 0.122_561_166_876_654).abs() < 1e-12);
        assert!((im - 0.744_861_766_619_744).abs() < 1e-12);
    }

    #[test]
    fn random_planted_roots_recovered() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, 0);
        for trial in 0..40 {
            let deg = 2 + (trial % 11);
            let planted: Vec<C64> = (0..deg)
                .map(|_| {
                    C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
                })
                .collect();
            let p = CPoly::from_roots(&planted);
            let mut found = poly_roots(&p).unwrap();
            for &want in &planted {
                let (k, dist) = found
                    .iter()
                    .enumerate()
                    .map(|(k, z)| (k, (z - want).norm()))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                assert!(
                    dist < 1e-8 * (1.0 + want.norm()),
                    "trial {trial}: planted {want} missed by {dist:.2e}"
                );
                found.remove(k);
            }
        }
    }

    #[test]
    fn companion_fallback_agrees_with_aberth() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(13, 1);
        for _ in 0..10 {
            let deg = 6;
            let coeffs: Vec<C64> = (0..=deg)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let p = CPoly::new(coeffs);
            let a = sorted(aberth(&p, &RootFindConfig::default(), None).unwrap());
            let c = sorted(companion_roots(&p).unwrap());
            for (x, y) in a.iter().zip(&c) {
                assert!((x - y).norm() < 1e-7, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn zero_roots_factored_out() {
        // z^2 (z - 1)
        let p = CPoly::new(vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
        ]);
        let r = poly_roots(&p).unwrap();
        assert_eq!(r.iter().filter(|z| z.norm() == 0.0).count(), 2);
        assert!(r.iter().any(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn rejects_constants_and_nan() {
        assert!(poly_roots(&CPoly::constant(C64::new(3.0, 0.0))).is_err());
        let p = CPoly::new(vec![C64::new(f64::NAN, 0.0), C64::new(1.0, 0.0)]);
        assert!(poly_roots(&p).is_err());
    }
}
