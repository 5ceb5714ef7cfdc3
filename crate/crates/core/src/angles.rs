//! Exact combinatorics of the angle-doubling map: rotational cycles,
//! characteristic angle pairs, limb harmonic masses, and the totient
//! series feeding the Lelong and self-intersection atom tables.
//!
//! Everything here is integer arithmetic on numerators modulo `2^q - 1`;
//! 128-bit headroom covers `q <= 63`.

use crate::error::{Error, Result};
use crate::moduli::check_pq;
use num_integer::Integer;
use num_rational::Ratio;

pub type Angle = Ratio<i128>;

const MAX_Q: u32 = 63;

fn modulus(q: u32) -> i128 {
    (1i128 << q) - 1
}

fn angle(num: i128, q: u32) -> Angle {
    // keep the denominator 2^q - 1 uncollapsed
    Ratio::new_raw(num, modulus(q))
}

/// The unique angle-doubling cycle with rotation number `p/q`, stored as
/// sorted numerators over `2^q - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationalCycle {
    pub p: u32,
    pub q: u32,
    /// Sorted numerators; angle `k` is `numerators[k] / (2^q - 1)`.
    pub numerators: Vec<i128>,
}

impl RotationalCycle {
    pub fn angles(&self) -> Vec<Angle> {
        self.numerators.iter().map(|&n| angle(n, self.q)).collect()
    }

    /// Rotation number of the doubling map restricted to a sorted orbit:
    /// the constant shift of sorted positions, if there is one.
    fn rotation_shift(sorted: &[i128], q: u32) -> Option<u32> {
        let n = modulus(q);
        let len = sorted.len();
        let mut shift: Option<usize> = None;
        for (s, &x) in sorted.iter().enumerate() {
            let image = (2 * x) % n;
            let pos = sorted.binary_search(&image).ok()?;
            let k = (pos + len - s) % len;
            match shift {
                None => shift = Some(k),
                Some(prev) if prev != k => return None,
                _ => {}
            }
        }
        shift.map(|k| k as u32)
    }
}

/// Builds the rotational `p/q` cycle directly: sorted position `s` carries
/// the binary word read along the orbit of the circular rotation by `p`,
/// with a 1 exactly on the top `p` positions. Verifies the doubling and
/// rotation properties before returning.
pub fn rotational_cycle(p: u32, q: u32) -> Result<RotationalCycle> {
    if q < 2 || q > MAX_Q || p < 1 || p >= q || p.gcd(&q) != 1 {
        return Err(Error::InvalidArgument(format!(
            "rotation number needs coprime 1 <= p < q <= {MAX_Q}, got {p}/{q}"
        )));
    }
    let qs = q as usize;
    let mut numerators = Vec::with_capacity(qs);
    for s in 0..qs {
        let mut x: i128 = 0;
        for j in 0..qs {
            let pos = (s + j * p as usize) % qs;
            let bit = if pos >= qs - p as usize { 1i128 } else { 0 };
            x = (x << 1) | bit;
        }
        numerators.push(x);
    }
    numerators.sort_unstable();
    let cycle = RotationalCycle { p, q, numerators };
    // the construction must produce a genuine doubling orbit rotated by p
    let shift = RotationalCycle::rotation_shift(&cycle.numerators, q);
    if shift != Some(p) || cycle.numerators.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!(
            "internal: rotation word construction failed for {p}/{q}"
        )));
    }
    Ok(cycle)
}

/// Brute-force enumeration of every rotational cycle of denominator
/// `2^q - 1`: the independent certificate of existence and uniqueness.
/// Feasible for `q <= ~22`.
pub fn enumerate_rotational_cycles(q: u32) -> Result<Vec<RotationalCycle>> {
    if q < 2 || q > 22 {
        return Err(Error::InvalidArgument(
            "brute-force enumeration kept to q <= 22".into(),
        ));
    }
    let n = modulus(q);
    let mut seen = vec![false; n as usize];
    let mut found = Vec::new();
    for start in 1..n {
        if seen[start as usize] {
            continue;
        }
        let mut orbit = vec![start];
        seen[start as usize] = true;
        let mut x = (2 * start) % n;
        while x != start {
            seen[x as usize] = true;
            orbit.push(x);
            x = (2 * x) % n;
        }
        if orbit.len() != q as usize {
            continue;
        }
        orbit.sort_unstable();
        if let Some(p) = RotationalCycle::rotation_shift(&orbit, q) {
            if p >= 1 && p < q && p.gcd(&q) == 1 {
                found.push(RotationalCycle {
                    p,
                    q,
                    numerators: orbit,
                });
            }
        }
    }
    found.sort_by_key(|c| c.p);
    Ok(found)
}

/// The adjacent pair of the rotational cycle at minimal circular gap.
/// The gap is exactly `1/(2^q - 1)`, i.e. consecutive numerators; for
/// `q = 2` (where both circular distances agree) this consecutive-
/// numerator convention picks `(1/3, 2/3)`.
pub fn characteristic_angles(p: u32, q: u32) -> Result<(Angle, Angle)> {
    let cycle = rotational_cycle(p, q)?;
    for w in cycle.numerators.windows(2) {
        if w[1] - w[0] == 1 {
            return Ok((angle(w[0], q), angle(w[1], q)));
        }
    }
    Err(Error::InvalidArgument(format!(
        "internal: no consecutive-numerator gap in the {p}/{q} cycle"
    )))
}

/// Harmonic measure of the `p/q` limb: `1/(2^q - 1)`, certified by the
/// characteristic gap.
pub fn limb_mass(p: u32, q: u32) -> Result<Angle> {
    check_pq(p, q)?;
    let (lo, hi) = characteristic_angles(p, q)?;
    let gap = hi - lo;
    let expect = Ratio::new(1i128, modulus(q));
    if gap.reduced() != expect {
        return Err(Error::InvalidArgument(format!(
            "internal: characteristic gap {gap} differs from 1/(2^{q}-1)"
        )));
    }
    Ok(expect)
}

/// Euler totient.
pub fn totient(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Partial Lambert-type sum and its tail bound.
#[derive(Debug, Clone, Copy)]
pub struct LambertSum {
    /// `sum_{n=1..Q} phi(n) x^n / (1 - x^n)`.
    pub partial: f64,
    /// Bound on the dropped tail: `sum_{n>Q} n x^n / (1 - x)`.
    pub tail_bound: f64,
}

/// Truncated series `sum phi(n) x^n/(1-x^n)`; the full sum is
/// `x/(1-x)^2`.
pub fn lambert_sum(x: f64, q_max: u32) -> Result<LambertSum> {
    if !(0.0..1.0).contains(&x) || x <= 0.0 {
        return Err(Error::InvalidArgument("need x in (0, 1)".into()));
    }
    if q_max < 1 {
        return Err(Error::InvalidArgument("need Q >= 1".into()));
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n in 1..=q_max {
        let xn = x.powi(n as i32);
        kahan_add(&mut sum, &mut comp, totient(n as u64) as f64 * xn / (1.0 - xn));
    }
    // sum_{n>Q} n x^n = x^{Q+1} ((Q+1) - Q x) / (1-x)^2
    let q = q_max as f64;
    let tail_bound = x.powi(q_max as i32 + 1) * ((q + 1.0) - q * x) / (1.0 - x).powi(3);
    Ok(LambertSum {
        partial: sum,
        tail_bound,
    })
}

/// A weighted atom at the infinity point `[1 : 2cos(2 pi p/q) : 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfinityAtom {
    pub p: u32,
    pub q: u32,
    pub weight: f64,
}

/// Weighted point masses on the line at infinity.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    pub atoms: Vec<InfinityAtom>,
    /// Bound on the mass dropped beyond `q_max`.
    pub tail_bound: f64,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        // smallest weights first keeps the accumulation tight
        for atom in self.atoms.iter().rev() {
            kahan_add(&mut sum, &mut comp, atom.weight);
        }
        sum
    }

    pub fn weight_at(&self, p: u32, q: u32) -> Option<f64> {
        self.atoms
            .iter()
            .find(|a| a.p == p && a.q == q)
            .map(|a| a.weight)
    }
}

fn admissible_pairs(q_max: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for q in 2..=q_max {
        for p in 1..=q / 2 {
            if p.gcd(&q) == 1 && 2 * p <= q {
                out.push((p, q));
            }
        }
    }
    out
}

/// Lelong weights of the extended bifurcation current on the line at
/// infinity: `1/6` at `infinity_{1/2}`, `1/(2^q - 1)` elsewhere. The
/// total tends to `1/2` as `q_max` grows.
pub fn lelong_table(q_max: u32) -> Result<AtomicMeasure> {
    if !(2..=MAX_Q).contains(&q_max) {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= q_max <= {MAX_Q}"
        )));
    }
    let atoms = admissible_pairs(q_max)
        .into_iter()
        .map(|(p, q)| InfinityAtom {
            p,
            q,
            weight: if q == 2 {
                1.0 / 6.0
            } else {
                1.0 / (modulus(q) as f64)
            },
        })
        .collect();
    // phi(q)/2 atoms of weight 1/(2^q-1) per level: tail below
    // (1/2) sum_{q>Q} q 2^{1-q} * 8/7
    let qf = q_max as f64;
    let tail_bound = (4.0 / 7.0) * (qf + 2.0) * (0.5f64).powi(q_max as i32);
    Ok(AtomicMeasure { atoms, tail_bound })
}

/// Squared-weight atoms of the self-intersection of the extended current:
/// `1/36` at `infinity_{1/2}`, `1/(2^q - 1)^2` elsewhere.
pub fn squared_atom_table(q_max: u32) -> Result<AtomicMeasure> {
    let base = lelong_table(q_max)?;
    let atoms = base
        .atoms
        .into_iter()
        .map(|a| InfinityAtom {
            weight: a.weight * a.weight,
            ..a
        })
        .collect();
    let qf = q_max as f64;
    let tail_bound = (qf + 2.0) * (0.25f64).powi(q_max as i32);
    Ok(AtomicMeasure { atoms, tail_bound })
}

/// The series and mass bookkeeping behind the positivity of the measure
/// at infinity: totient sums, the hyperbolic-component count bound, and
/// the resulting lower bound for the mass at infinity.
#[derive(Debug, Clone, Copy)]
pub struct KiwiReesReport {
    /// `sum_{q>=2} phi(q)/(2^q-1)`; equals 1 exactly in the limit.
    pub s1: f64,
    /// `sum_{q>=2} phi(q)/(2^q-1)^2`.
    pub s2: f64,
    /// The threshold `25/56` that `s2` must stay below.
    pub s2_threshold: f64,
    /// Upper bound `5/48 - s2/16` for the bifurcation-measure mass.
    pub mu_bif_upper: f64,
    /// Total squared-atom mass `A(q_max)`.
    pub atom_mass: f64,
    /// Lower bound `1/4 - mu_bif_upper - atom_mass` for the mass at
    /// infinity.
    pub mu_inf_lower: f64,
    pub s2_below_threshold: bool,
    pub mu_inf_positive: bool,
}

pub fn kiwi_rees_check(q_max: u32) -> Result<KiwiReesReport> {
    if !(3..=MAX_Q).contains(&q_max) {
        return Err(Error::InvalidArgument(format!(
            "need 3 <= q_max <= {MAX_Q}"
        )));
    }
    let (mut s1, mut c1) = (0.0, 0.0);
    let (mut s2, mut c2) = (0.0, 0.0);
    for q in 2..=q_max {
        let m = modulus(q) as f64;
        let phi = totient(q as u64) as f64;
        kahan_add(&mut s1, &mut c1, phi / m);
        kahan_add(&mut s2, &mut c2, phi / (m * m));
    }
    let s2_threshold = 25.0 / 56.0;
    let mu_bif_upper = 5.0 / 48.0 - s2 / 16.0;
    let atom_mass = squared_atom_table(q_max)?.total_mass();
    let mu_inf_lower = 0.25 - mu_bif_upper - atom_mass;
    Ok(KiwiReesReport {
        s1,
        s2,
        s2_threshold,
        mu_bif_upper,
        atom_mass,
        mu_inf_lower,
        s2_below_threshold: s2 < s2_threshold,
        mu_inf_positive: mu_inf_lower > 0.0,
    })
}

/// CSV table of the exact limb combinatorics up to `q_max`:
/// `q,p,t_minus,t_plus,limb_mass,lelong_weight,squared_weight`, angles
/// and masses as exact fractions.
pub fn limb_table_csv(q_max: u32) -> Result<String> {
    let mut out = String::from("q,p,t_minus,t_plus,limb_mass,lelong_weight,squared_weight\n");
    for (p, q) in admissible_pairs(q_max.min(22)) {
        let (lo, hi) = characteristic_angles(p, q)?;
        let mass = limb_mass(p, q)?;
        let n = modulus(q);
        let (lw_num, lw_den): (i128, i128) = if q == 2 { (1, 6) } else { (1, n) };
        out.push_str(&format!(
            "{q},{p},{}/{},{}/{},{}/{},{}/{},{}/{}\n",
            lo.numer(),
            lo.denom(),
            hi.numer(),
            hi.denom(),
            mass.numer(),
            mass.denom(),
            lw_num,
            lw_den,
            1,
            lw_den.checked_mul(lw_den).unwrap_or(i128::MAX),
        ));
    }
    Ok(out)
}
