//! Lyapunov exponent of a quadratic rational map with respect to its
//! maximal entropy measure, by backward-orbit Monte Carlo: pulling a
//! generic point back along uniformly chosen preimages equidistributes
//! toward the measure, and the exponent is the mean log of the spherical
//! derivative there.

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::moduli::{ModuliPoint, QuadraticRationalMap};
use crate::rng::{gaussian_complex, stream_rng};
use crate::sphere::SpherePoint;
use crate::C64;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct SamplingConfig {
    pub samples: u64,
    pub burn_in: u32,
    pub chains: u32,
    pub seed: u64,
    /// Fraction of nonfinite integrand draws tolerated before the chain
    /// is declared to be hitting critical points.
    pub max_bad_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            burn_in: 64,
            chains: 32,
            seed: 7,
            max_bad_fraction: 1e-3,
        }
    }
}

/// Monte Carlo estimate of the Lyapunov exponent, in nats.
#[derive(Debug, Clone, Copy)]
pub struct LyapEstimate {
    pub value: f64,
    /// Standard error from the variance of independent chain means.
    pub stderr: f64,
    pub samples: u64,
    pub burn_in: u32,
}

/// One backward step: uniformly chosen preimage of `p` under `f`,
/// solved projectively (the quadratic in `z` with a possible root at
/// infinity when its leading coefficient drops).
fn backward_step<R: Rng>(
    f: &QuadraticRationalMap<f64>,
    p: &SpherePoint<f64>,
    rng: &mut R,
) -> SpherePoint<f64> {
    // num(z) * y_p - den(z) * x_p = 0
    let a = f.num[0] * p.y - f.den[0] * p.x;
    let b = f.num[1] * p.y - f.den[1] * p.x;
    let c = f.num[2] * p.y - f.den[2] * p.x;
    let disc = (b * b - a * c * 4.0).sqrt();
    let s = if (b + disc).norm() >= (b - disc).norm() {
        b + disc
    } else {
        b - disc
    };
    let q = -s * 0.5;
    if rng.gen::<bool>() {
        SpherePoint::new(q, a)
    } else {
        SpherePoint::new(c, q)
    }
}

fn chain_mean(
    f: &QuadraticRationalMap<f64>,
    cfg: &SamplingConfig,
    chain: u32,
    per_chain: u64,
) -> Result<f64> {
    let mut rng = stream_rng(cfg.seed, chain as u64);
    let lift = f.lift();
    let mut p = SpherePoint::new(gaussian_complex(&mut rng), gaussian_complex(&mut rng));
    for _ in 0..cfg.burn_in {
        p = backward_step(f, &p, &mut rng);
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut kept = 0u64;
    let mut bad = 0u64;
    let bad_cap = ((per_chain as f64 * cfg.max_bad_fraction).ceil() as u64).max(8);
    while kept < per_chain {
        p = backward_step(f, &p, &mut rng);
        let d = lift.spherical_derivative(&p);
        let v = d.ln();
        if v.is_finite() {
            let y = v - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            kept += 1;
        } else {
            bad += 1;
            if bad > bad_cap {
                return Err(Error::Sampling(format!(
                    "chain {chain}: {bad} nonfinite derivative logs; orbit stuck on critical points"
                )));
            }
        }
    }
    Ok(sum / per_chain as f64)
}

/// Lyapunov exponent of `f` for the maximal entropy measure.
pub fn lyap(f: &QuadraticRationalMap<f64>, cfg: &SamplingConfig) -> Result<LyapEstimate> {
    f.check_nondegenerate()?;
    if cfg.samples < 1_000 {
        return Err(Error::InvalidArgument(
            "backward-orbit sampling needs at least 1000 samples".into(),
        ));
    }
    let chains = cfg.chains.max(2);
    let per_chain = cfg.samples / chains as u64;
    let means: Result<Vec<f64>> = (0..chains)
        .into_par_iter()
        .map(|k| chain_mean(f, cfg, k, per_chain))
        .collect();
    let means = means?;
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        / (means.len() as f64 - 1.0);
    let stderr = (var / means.len() as f64).sqrt();
    if !m.is_finite() {
        return Err(Error::Sampling("nonfinite Lyapunov mean".into()));
    }
    Ok(LyapEstimate {
        value: m,
        stderr,
        samples: per_chain * chains as u64,
        burn_in: cfg.burn_in,
    })
}

/// Lyapunov exponent of a moduli class: representative-independent up to
/// the Monte Carlo error.
pub fn lyap_at(pt: &ModuliPoint<f64>, cfg: &SamplingConfig) -> Result<LyapEstimate> {
    let f = pt.representative()?;
    lyap(&f, cfg)
}

/// A 1-complex-dimensional affine slice of moduli space:
/// `zeta -> base + zeta * direction`.
#[derive(Debug, Clone, Copy)]
pub struct SliceSpec {
    pub base: (C64, C64),
    pub direction: (C64, C64),
}

impl SliceSpec {
    /// The polynomial line `Per_1(0) = {sigma1 = 2}` in the coordinate
    /// `zeta = sigma2`.
    pub fn per1_zero() -> Self {
        Self {
            base: (C64::new(2.0, 0.0), C64::new(0.0, 0.0)),
            direction: (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        }
    }

    pub fn point(&self, zeta: C64) -> ModuliPoint<f64> {
        ModuliPoint::new(
            self.base.0 + zeta * self.direction.0,
            self.base.1 + zeta * self.direction.1,
        )
    }
}

/// Lyapunov field on a slice grid: per-cell estimates with their
/// standard errors; failed cells are masked out. Cell RNG streams are
/// keyed by `(seed, cell index)`, so the field is schedule-independent.
pub fn potential_slice(
    slice: &SliceSpec,
    grid: GridSpec,
    cfg: &SamplingConfig,
) -> Result<(GridField<f64>, GridField<f64>)> {
    grid.validate()?;
    if grid.nx > 512 || grid.ny > 512 {
        return Err(Error::InvalidArgument(
            "potential slices capped at 512 x 512".into(),
        ));
    }
    let cells: Vec<Option<(f64, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let i = idx % grid.nx;
            let j = idx / grid.nx;
            let (x, y) = grid.center(i, j);
            let pt = slice.point(C64::new(x, y));
            let cell_cfg = SamplingConfig {
                seed: cfg.seed.wrapping_add(0x9e37_79b9).wrapping_mul(idx as u64 | 1),
                chains: cfg.chains.min(8).max(2),
                ..cfg.clone()
            };
            lyap_at(&pt, &cell_cfg).ok().map(|e| (e.value, e.stderr))
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut errors = Vec::with_capacity(grid.len());
    let mut mask = Vec::with_capacity(grid.len());
    for cell in cells {
        match cell {
            Some((v, e)) => {
                values.push(v);
                errors.push(e);
                mask.push(true);
            }
            None => {
                values.push(0.0);
                errors.push(0.0);
                mask.push(false);
            }
        }
    }
    Ok((
        GridField {
            spec: grid,
            values,
            mask: mask.clone(),
        },
        GridField {
            spec: grid,
            values: errors,
            mask,
        },
    ))
}

/// Escape-rate Green's function of the Mandelbrot set at `c` (equals the
/// Green's function of the filled Julia set at the critical value); the
/// independent oracle for polynomial-slice Lyapunov values via
/// `L = log 2 + G(c)/2` (the critical point itself sits at potential
/// `G(c)/2`).
pub fn mandelbrot_green(c: C64, max_iter: u32) -> f64 {
    let mut z = c;
    for k in 1..=max_iter {
        z = z * z + c;
        if z.norm_sqr() > 1e200 {
            return z.norm().ln() / (2.0f64).powi(k as i32);
        }
    }
    0.0
}
