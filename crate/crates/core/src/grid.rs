//! Rectangular slice grids: sampled potentials, discrete Laplacian
//! measures, ball masses and box-partition comparisons.
//!
//! Cell `(i, j)` is centered at `(x0 + i dx, y0 + j dy)`; storage is
//! row-major in `j` (the y index varies slowest).

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 1 || self.ny < 1 || self.dx <= 0.0 || self.dy <= 0.0 {
            return Err(Error::InvalidArgument(
                "grid needs positive extents and spacing".into(),
            ));
        }
        Ok(())
    }
}

/// Scalar field on a grid with a validity mask.
#[derive(Debug, Clone)]
pub struct GridField<T: Real> {
    pub spec: GridSpec,
    pub values: Vec<T>,
    pub mask: Vec<bool>,
}

impl<T: Real> GridField<T> {
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> Option<T>) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let (x, y) = spec.center(i, j);
                match f(x, y) {
                    Some(v) => {
                        values.push(v);
                        mask.push(true);
                    }
                    None => {
                        values.push(T::zero());
                        mask.push(false);
                    }
                }
            }
        }
        Self { spec, values, mask }
    }

    pub fn valid(&self, i: usize, j: usize) -> bool {
        self.mask[self.spec.index(i, j)]
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.spec.index(i, j)]
    }
}

/// Cell weights on a grid: nonnegative for genuine measures; the
/// discrete Laplacian output may carry reported negative cells beyond
/// the noise floor.
#[derive(Debug, Clone)]
pub struct GridMeasure<T: Real> {
    pub spec: GridSpec,
    pub weights: Vec<T>,
}

impl<T: Real> GridMeasure<T> {
    pub fn zeros(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            weights: vec![T::zero(); n],
        }
    }

    /// Point masses binned onto the grid; masses falling outside are
    /// dropped and their total returned alongside.
    pub fn from_atoms(spec: GridSpec, atoms: &[((f64, f64), T)]) -> (Self, T) {
        let mut m = Self::zeros(spec);
        let mut dropped = T::zero();
        for &((x, y), w) in atoms {
            let fi = (x - spec.x0) / spec.dx + 0.5;
            let fj = (y - spec.y0) / spec.dy + 0.5;
            if fi < 0.0 || fj < 0.0 || fi >= spec.nx as f64 || fj >= spec.ny as f64 {
                dropped = dropped + w;
                continue;
            }
            let idx = spec.index(fi as usize, fj as usize);
            m.weights[idx] = m.weights[idx] + w;
        }
        (m, dropped)
    }

    pub fn total_mass(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &b| a + b)
    }
}

/// Diagnostics from the discrete Laplacian: how much negative mass was
/// clipped as noise and how much survived beyond the noise floor.
#[derive(Debug, Clone)]
pub struct DdcDiagnostics<T: Real> {
    pub clipped_within_noise: T,
    pub negative_beyond_noise: T,
    /// Worst offending cells `(i, j, raw_weight)`, most negative first.
    pub worst_negative_cells: Vec<(usize, usize, T)>,
}

/// Output of `discrete_ddc`: the clipped measure, the raw signed weights
/// (for linearity checks and diagnostics), and the negative-mass report.
#[derive(Debug, Clone)]
pub struct DdcOutput<T: Real> {
    pub measure: GridMeasure<T>,
    pub raw: Vec<T>,
    pub diagnostics: DdcDiagnostics<T>,
}

/// Five-point discrete `dd^c`: cell weight
/// `(1/2pi) [ (f_E - 2f_C + f_W) dy/dx + (f_N - 2f_C + f_S) dx/dy ]`,
/// the flux integral of the Laplacian over the cell. Positive for
/// subharmonic potentials up to sampling noise.
///
/// `noise` supplies the per-cell standard error of a Monte Carlo field;
/// negatives within `3 sigma` of zero are clipped, larger ones are kept
/// in the diagnostics and trip an error when they exceed 5% of the
/// positive mass.
pub fn discrete_ddc<T: Real>(
    field: &GridField<T>,
    noise: Option<&GridField<T>>,
) -> Result<DdcOutput<T>> {
    let spec = field.spec;
    spec.validate()?;
    if spec.nx < 3 || spec.ny < 3 {
        return Err(Error::InvalidArgument(
            "discrete ddc needs at least a 3x3 grid".into(),
        ));
    }
    let inv_2pi = lit::<T>(1.0 / std::f64::consts::TAU);
    let rx = lit::<T>(spec.dy / spec.dx);
    let ry = lit::<T>(spec.dx / spec.dy);
    let two = lit::<T>(2.0);
    let mut raw = vec![T::zero(); spec.len()];
    let mut weights = vec![T::zero(); spec.len()];
    let mut clipped = T::zero();
    let mut beyond = T::zero();
    let mut worst: Vec<(usize, usize, T)> = Vec::new();
    let mut positive = T::zero();

    for j in 1..spec.ny - 1 {
        for i in 1..spec.nx - 1 {
            let stencil_ok = field.valid(i, j)
                && field.valid(i - 1, j)
                && field.valid(i + 1, j)
                && field.valid(i, j - 1)
                && field.valid(i, j + 1);
            if !stencil_ok {
                continue;
            }
            let fc = field.at(i, j);
            let lap = (field.at(i + 1, j) - two * fc + field.at(i - 1, j)) * rx
                + (field.at(i, j + 1) - two * fc + field.at(i, j - 1)) * ry;
            let w = lap * inv_2pi;
            let idx = spec.index(i, j);
            raw[idx] = w;
            if w >= T::zero() {
                weights[idx] = w;
                positive = positive + w;
            } else {
                let floor = noise.map_or(T::zero(), |n| {
                    // stderr of the 5-point combination: sqrt(sum of
                    // squared stencil coefficients) per uniform sigma
                    let s = n.at(i, j)
                        .max(n.at(i - 1, j))
                        .max(n.at(i + 1, j))
                        .max(n.at(i, j - 1))
                        .max(n.at(i, j + 1));
                    lit::<T>(3.0) * lit::<T>(20f64.sqrt()) * s * inv_2pi * rx.max(ry)
                });
                if -w <= floor {
                    clipped = clipped - w;
                } else {
                    // beyond the noise floor: reported, not clipped
                    weights[idx] = w;
                    beyond = beyond - w;
                    worst.push((i, j, w));
                }
            }
        }
    }
    worst.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    worst.truncate(16);
    // the under-sampling alarm applies to Monte Carlo fields, where the
    // noise floor is known; deterministic fields may legitimately carry
    // negative curvature and only get the diagnostics
    let limit_percent = 5.0;
    if noise.is_some() && beyond > positive * lit::<T>(limit_percent / 100.0) && beyond > T::epsilon()
    {
        return Err(Error::NegativeMass {
            negative: beyond.to_f64().unwrap_or(f64::NAN),
            total: positive.to_f64().unwrap_or(f64::NAN),
            limit_percent,
        });
    }
    Ok(DdcOutput {
        measure: GridMeasure { spec, weights },
        raw,
        diagnostics: DdcDiagnostics {
            clipped_within_noise: clipped,
            negative_beyond_noise: beyond,
            worst_negative_cells: worst,
        },
    })
}

/// Mass of the cells whose centers lie in the ball `B((cx, cy), r)`.
#[derive(Debug, Clone, Copy)]
pub struct BallMass<T: Real> {
    pub mass: T,
    /// The ball sticks out of the grid rectangle; the result is partial.
    pub clipped: bool,
}

pub fn ball_mass<T: Real>(measure: &GridMeasure<T>, center: (f64, f64), r: f64) -> BallMass<T> {
    let spec = measure.spec;
    let (cx, cy) = center;
    let x_min = spec.x0 - 0.5 * spec.dx;
    let y_min = spec.y0 - 0.5 * spec.dy;
    let x_max = spec.x0 + (spec.nx as f64 - 0.5) * spec.dx;
    let y_max = spec.y0 + (spec.ny as f64 - 0.5) * spec.dy;
    let clipped =
        cx - r < x_min || cx + r > x_max || cy - r < y_min || cy + r > y_max;
    let mut mass = T::zero();
    let r2 = r * r;
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            let (x, y) = spec.center(i, j);
            let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if d2 <= r2 {
                mass = mass + measure.weights[spec.index(i, j)];
            }
        }
    }
    BallMass { mass, clipped }
}

/// Per-box mass table and total-variation-style distance on a uniform
/// box partition of the common lattice.
#[derive(Debug, Clone)]
pub struct CompareReport<T: Real> {
    pub boxes: (usize, usize),
    pub box_masses: Vec<(T, T)>,
    /// Sum over boxes of |mass_a - mass_b|.
    pub distance: T,
    pub total_a: T,
    pub total_b: T,
}

pub fn compare_measures<T: Real>(
    a: &GridMeasure<T>,
    b: &GridMeasure<T>,
    boxes: (usize, usize),
) -> Result<CompareReport<T>> {
    if a.spec != b.spec {
        return Err(Error::InvalidArgument(
            "compared measures must share the lattice".into(),
        ));
    }
    let (bx, by) = boxes;
    if bx == 0 || by == 0 || bx > a.spec.nx || by > a.spec.ny {
        return Err(Error::InvalidArgument("bad box partition".into()));
    }
    let spec = a.spec;
    let mut table = vec![(T::zero(), T::zero()); bx * by];
    for j in 0..spec.ny {
        let v = (j * by / spec.ny).min(by - 1);
        for i in 0..spec.nx {
            let u = (i * bx / spec.nx).min(bx - 1);
            let idx = spec.index(i, j);
            let slot = &mut table[v * bx + u];
            slot.0 = slot.0 + a.weights[idx];
            slot.1 = slot.1 + b.weights[idx];
        }
    }
    let distance = table
        .iter()
        .fold(T::zero(), |acc, &(ma, mb)| acc + (ma - mb).abs());
    Ok(CompareReport {
        boxes,
        box_masses: table,
        distance,
        total_a: a.total_mass(),
        total_b: b.total_mass(),
    })
}

/// Sidecar metadata for the flat binary grid format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub seed: u64,
}

impl GridField<f64> {
    /// Writes `<base>.f64` (little-endian doubles, row-major, NaN for
    /// masked cells) and `<base>.json` with the lattice and seed.
    pub fn write_binary(&self, base: &Path, seed: u64) -> Result<()> {
        let mut bin = Vec::with_capacity(self.values.len() * 8);
        for (v, &ok) in self.values.iter().zip(&self.mask) {
            let x = if ok { *v } else { f64::NAN };
            bin.extend_from_slice(&x.to_le_bytes());
        }
        std::fs::File::create(base.with_extension("f64"))?.write_all(&bin)?;
        let sidecar = GridSidecar {
            nx: self.spec.nx,
            ny: self.spec.ny,
            x0: self.spec.x0,
            y0: self.spec.y0,
            dx: self.spec.dx,
            dy: self.spec.dy,
            seed,
        };
        let json = serde_json::to_vec_pretty(&sidecar)?;
        std::fs::File::create(base.with_extension("json"))?.write_all(&json)?;
        Ok(())
    }

    pub fn read_binary(base: &Path) -> Result<(Self, u64)> {
        let sidecar: GridSidecar =
            serde_json::from_slice(&std::fs::read(base.with_extension("json"))?)?;
        let spec = GridSpec {
            nx: sidecar.nx,
            ny: sidecar.ny,
            x0: sidecar.x0,
            y0: sidecar.y0,
            dx: sidecar.dx,
            dy: sidecar.dy,
        };
        spec.validate()?;
        let mut bytes = Vec::new();
        std::fs::File::open(base.with_extension("f64"))?.read_to_end(&mut bytes)?;
        if bytes.len() != spec.len() * 8 {
            return Err(Error::InvalidArgument(format!(
                "binary grid holds {} bytes, lattice wants {}",
                bytes.len(),
                spec.len() * 8
            )));
        }
        let mut values = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for chunk in bytes.chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            mask.push(v.is_finite());
            values.push(if v.is_finite() { v } else { 0.0 });
        }
        Ok((Self { spec, values, mask }, sidecar.seed))
    }
}

/// Measure CSV export: `i,j,x,y,weight` rows.
pub fn measure_csv<T: Real>(m: &GridMeasure<T>) -> String {
    let mut out = String::from("i,j,x,y,weight\n");
    for j in 0..m.spec.ny {
        for i in 0..m.spec.nx {
            let (x, y) = m.spec.center(i, j);
            let w = m.weights[m.spec.index(i, j)];
            out.push_str(&format!("{i},{j},{x},{y},{w}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_spec(n: usize, half: f64) -> GridSpec {
        let d = 2.0 * half / (n as f64 - 1.0);
        GridSpec {
            nx: n,
            ny: n,
            x0: -half,
            y0: -half,
            dx: d,
            dy: d,
        }
    }

    #[test]
    fn log_singularity_has_unit_mass() {
        // field = log|z - z0|, dd^c mass in any disc containing z0 is 1
        let z0 = (0.05, -0.1);
        let spec = unit_spec(101, 2.0);
        let f = GridField::from_fn(spec, |x, y| {
            Some(0.5 * (((x - z0.0).powi(2) + (y - z0.1).powi(2)) as f64).ln())
        });
        let out = discrete_ddc(&f, None).unwrap();
        for r in [0.5, 1.0, 1.5] {
            let bm = ball_mass(&out.measure, z0, r);
            assert!(!bm.clipped);
            assert!((bm.mass - 1.0).abs() < 0.02, "r = {r}: mass {}", bm.mass);
        }
    }

    #[test]
    fn harmonic_field_has_tiny_mass() {
        // real part of (x + iy)^3 is harmonic
        let spec = unit_spec(81, 1.0);
        let f = GridField::from_fn(spec, |x, y| Some(x * x * x - 3.0 * x * y * y));
        let out = discrete_ddc(&f, None).unwrap();
        assert!(out.measure.total_mass() < 0.01);
        let l1: f64 = out.raw.iter().map(|w| w.abs()).sum();
        assert!(l1 < 0.01, "harmonic raw l1 mass {l1}");
    }

    #[test]
    fn ddc_is_linear_on_raw_weights() {
        let spec = unit_spec(41, 1.0);
        let f = GridField::from_fn(spec, |x, y| Some((x * x + y * y).exp()));
        let g = GridField::from_fn(spec, |x, y| Some((x - 0.3).powi(2) * y));
        let (alpha, beta) = (0.7, -2.3);
        let combo = GridField::from_fn(spec, |x, y| {
            Some(alpha * (x * x + y * y).exp() + beta * (x - 0.3).powi(2) * y)
        });
        let df = discrete_ddc(&f, None).unwrap().raw;
        let dg = discrete_ddc(&g, None).unwrap().raw;
        let dc = discrete_ddc(&combo, None).unwrap().raw;
        for k in 0..dc.len() {
            assert!((dc[k] - (alpha * df[k] + beta * dg[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_perturbation_leaves_region_mass() {
        // mass over a region changes by < 1% when adding a harmonic part
        let spec = unit_spec(81, 1.0);
        let f = GridField::from_fn(spec, |x, y| {
            Some(0.5 * ((x * x + y * y) as f64 + 1e-12).ln())
        });
        let g = GridField::from_fn(spec, |x, y| {
            Some(0.5 * ((x * x + y * y) as f64 + 1e-12).ln() + 2.0 * (x * x - y * y) + 0.3 * x)
        });
        let mf = discrete_ddc(&f, None).unwrap().measure;
        let mg = discrete_ddc(&g, None).unwrap().measure;
        let bf = ball_mass(&mf, (0.0, 0.0), 0.7).mass;
        let bg = ball_mass(&mg, (0.0, 0.0), 0.7).mass;
        assert!((bf - bg).abs() < 0.01 * bf.max(1.0));
    }

    #[test]
    fn uniform_measure_ball_scaling() {
        let spec = unit_spec(101, 1.0);
        let mut m = GridMeasure::<f64>::zeros(spec);
        for w in m.weights.iter_mut() {
            *w = 1.0;
        }
        let m1 = ball_mass(&m, (0.0, 0.0), 0.2).mass;
        let m2 = ball_mass(&m, (0.0, 0.0), 0.4).mass;
        assert!((m1 / m2 - 0.25).abs() < 0.03);
    }

    #[test]
    fn ball_clipping_flagged() {
        let spec = unit_spec(11, 1.0);
        let m = GridMeasure::<f64>::zeros(spec);
        assert!(ball_mass(&m, (0.9, 0.9), 0.5).clipped);
        assert!(!ball_mass(&m, (0.0, 0.0), 0.5).clipped);
    }

    #[test]
    fn compare_identical_and_mismatched() {
        let spec = unit_spec(32, 1.0);
        let mut a = GridMeasure::zeros(spec);
        for (k, w) in a.weights.iter_mut().enumerate() {
            *w = (k % 7) as f64;
        }
        let r = compare_measures(&a, &a, (16, 16)).unwrap();
        assert_eq!(r.distance, 0.0);
        let mut b = a.clone();
        for w in b.weights.iter_mut() {
            *w = *w * 2.0;
        }
        let r = compare_measures(&a, &b, (16, 16)).unwrap();
        assert!((r.distance - a.total_mass()).abs() < 1e-9);
    }

    #[test]
    fn binary_round_trip() {
        let dir = std::env::temp_dir().join("m2lab_grid_test");
        std::fs::create_dir_all(&dir).unwrap();
        let base = dir.join("field");
        let spec = unit_spec(9, 1.0);
        let mut f = GridField::from_fn(spec, |x, y| Some(x * y + 0.5));
        f.mask[3] = false;
        f.write_binary(&base, 99).unwrap();
        let (g, seed) = GridField::read_binary(&base).unwrap();
        assert_eq!(seed, 99);
        assert_eq!(g.spec, f.spec);
        assert_eq!(g.mask, f.mask);
        for (a, b) in f.values.iter().zip(&g.values).enumerate().filter_map(|(k, ab)| {
            if f.mask[k] {
                Some(ab)
            } else {
                None
            }
        }) {
            assert_eq!(a, b);
        }
    }
}
