//! The extension operator of the moment curve over `Z_p`, realised as a
//! finite exponential sum, and a direct check of the square-function
//! inequality
//!
//! ```text
//! ‖E f‖_{L^{2m}(B)} ≤ (m!)^{1/2m} ‖(Σ_I |E_I f|²)^{1/2}‖_{L^{2m}(B)},   B = B(0, p^{αn})
//! ```
//!
//! A function at resolution `A` is constant on the `p^A` balls of radius `p^{-A}`.
//! For frequencies with `|x_i| ≤ p^A` the integrand depends on `t` only mod `p^A`,
//! so `E f` is an exact average. `E f` is also invariant under integral
//! translations of `x`, so the `L^{2m}` norm over `B` is an exact sum over the
//! `p^{αn·n}` unit cells of `B`.

use std::collections::HashMap;

use num::complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{checked_pow, is_prime, PhaseTable};

/// Largest grid `p^A` accepted for a single function.
const MAX_SAMPLES: u64 = 1 << 22;
/// Grid cells per summation block. Fixed so that totals do not depend on the thread count.
const BLOCK: usize = 1024;

/// `f` on `Z_p`, constant on balls of radius `p^{-A}`; `samples[t] = f(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    p: u64,
    resolution: u32,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(p: u64, resolution: u32, samples: Vec<Complex64>) -> Result<Self> {
        let q = grid_size(p, resolution)?;
        if samples.len() as u64 != q {
            return Err(LabError::Resolution(format!(
                "{} samples given, p^A = {q} expected",
                samples.len()
            )));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LabError::InvalidInput("non-finite sample".into()));
        }
        Ok(Self {
            p,
            resolution,
            samples,
        })
    }

    pub fn from_fn(p: u64, resolution: u32, f: impl FnMut(u64) -> Complex64) -> Result<Self> {
        let q = grid_size(p, resolution)?;
        Self::new(p, resolution, (0..q).map(f).collect())
    }

    pub fn constant(p: u64, resolution: u32, value: Complex64) -> Result<Self> {
        Self::from_fn(p, resolution, |_| value)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// `p^A`.
    pub fn grid(&self) -> u64 {
        self.samples.len() as u64
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn scaled(&self, lambda: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|z| z * lambda).collect(),
            ..self.clone()
        }
    }

    /// The same function viewed at resolution `A + 1`.
    pub fn refined(&self) -> Result<Self> {
        let q = self.grid();
        Self::from_fn(self.p, self.resolution + 1, |t| self.samples[(t % q) as usize])
    }
}

fn grid_size(p: u64, resolution: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(LabError::NotPrime(p));
    }
    let q = checked_pow(p, resolution).ok_or(LabError::ModulusOverflow {
        p,
        precision: resolution,
    })?;
    if q > MAX_SAMPLES {
        return Err(LabError::InvalidInput(format!("grid p^A = {q} is too large")));
    }
    Ok(q)
}

/// The interval `I = B(c, p^{-α})`, `0 ≤ c < p^α`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntervalIndex {
    pub alpha: u32,
    pub class: u64,
}

impl IntervalIndex {
    pub fn new(p: u64, alpha: u32, class: u64) -> Result<Self> {
        let pa = checked_pow(p, alpha).ok_or(LabError::ModulusOverflow { p, precision: alpha })?;
        if class >= pa {
            return Err(LabError::InvalidInput(format!("class {class} is not below p^α = {pa}")));
        }
        Ok(Self { alpha, class })
    }

    /// All `p^α` intervals in class order.
    pub fn all(p: u64, alpha: u32) -> Vec<Self> {
        (0..p.pow(alpha)).map(|class| Self { alpha, class }).collect()
    }
}

/// `E f(x) = p^{-A} Σ_t e((a_1 t + … + a_n t^n)/p^A) f(t)` with `x_i = a_i / p^A`.
pub fn extension_op(f: &GridFunction, numerators: &[i128]) -> Result<Complex64> {
    if numerators.is_empty() {
        return Err(LabError::InvalidInput("frequency has no coordinates".into()));
    }
    let q = f.grid();
    let table = PhaseTable::new(q);
    let a: Vec<u64> = numerators.iter().map(|&v| v.rem_euclid(q as i128) as u64).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for (t, &ft) in f.samples.iter().enumerate() {
        sum += table.get(phase_index(&a, t as u64, q)) * ft;
    }
    Ok(sum / q as f64)
}

fn phase_index(a: &[u64], t: u64, q: u64) -> u64 {
    let mut k = 0u64;
    let mut power = 1u64;
    for &ai in a {
        power = ((power as u128 * t as u128) % q as u128) as u64;
        k = ((k as u128 + ai as u128 * power as u128) % q as u128) as u64;
    }
    k
}

/// `f χ_I`.
pub fn restrict(f: &GridFunction, interval: IntervalIndex) -> Result<GridFunction> {
    if f.resolution < interval.alpha {
        return Err(LabError::Resolution(format!(
            "resolution {} is coarser than the interval scale {}",
            f.resolution, interval.alpha
        )));
    }
    let pa = f.p.pow(interval.alpha);
    let samples = f
        .samples
        .iter()
        .enumerate()
        .map(|(t, &z)| {
            if t as u64 % pa == interval.class {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Ok(GridFunction { samples, ..f.clone() })
}

/// `(m!)^{1/2m}`.
pub fn sf_constant(m: u32) -> f64 {
    let log_fact: f64 = (2..=m).map(|k| (k as f64).ln()).sum();
    (log_fact / (2.0 * m as f64)).exp()
}

/// Both sides of the inequality for one `(f, n, m, α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SFReport {
    pub p: u64,
    pub n: u32,
    pub m: u32,
    pub alpha: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    /// `lhs / (constant · rhs)`; zero when both sides vanish.
    pub ratio: f64,
    /// `p ≤ n`: the run is allowed but the inequality is not claimed.
    pub hypothesis_violated: bool,
}

impl SFReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.ratio <= 1.0 + tol
    }
}

/// Inequality for a single `m`.
pub fn verify_sf_inequality(f: &GridFunction, n: u32, m: u32, alpha: u32) -> Result<SFReport> {
    if m == 0 || m > n {
        return Err(LabError::InvalidInput(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    let mut all = verify_sf_batch(std::slice::from_ref(f), n, alpha)?;
    Ok(all.remove(0).swap_remove(m as usize - 1))
}

/// All `m = 1..=n` for every function in `fs`, sharing one pass over the grid.
/// `result[i][m-1]` belongs to `fs[i]`.
pub fn verify_sf_batch(fs: &[GridFunction], n: u32, alpha: u32) -> Result<Vec<Vec<SFReport>>> {
    let first = fs
        .first()
        .ok_or_else(|| LabError::InvalidInput("no functions given".into()))?;
    let (p, res) = (first.p, first.resolution);
    if fs.iter().any(|f| f.p != p || f.resolution != res) {
        return Err(LabError::Resolution("functions in a batch must share p and A".into()));
    }
    if n == 0 || alpha == 0 {
        return Err(LabError::InvalidInput("n and α must be positive".into()));
    }
    let level = alpha * n;
    if res < level {
        return Err(LabError::Resolution(format!(
            "resolution {res} is below α·n = {level}"
        )));
    }
    let q = first.grid();
    let big_q = p.pow(level);
    let cells = big_q
        .checked_pow(n)
        .filter(|&c| c <= 1 << 32)
        .ok_or_else(|| LabError::InvalidInput("x-grid is too large".into()))?;
    let step = q / big_q;
    let pa = p.pow(alpha);
    let width = (q / pa) as usize;
    let nu = n as usize;

    // Interval-major order of t so each E_I f is a contiguous dot product.
    let order: Vec<u64> = (0..pa).flat_map(|c| (0..q / pa).map(move |s| c + pa * s)).collect();
    let tpow: Vec<Vec<u64>> = (1..=nu)
        .map(|i| order.iter().map(|&t| crate::field::pow_mod(t, i as u64, q)).collect())
        .collect();
    let samples: Vec<Vec<Complex64>> = fs
        .iter()
        .map(|f| order.iter().map(|&t| f.samples[t as usize]).collect())
        .collect();
    let table = PhaseTable::new(q);
    let nf = fs.len();
    // Per function and m: (Σ |Ef|^{2m}, Σ (Σ_I |E_I f|²)^m).
    let slots = nf * nu * 2;

    let block_count = (cells as usize).div_ceil(BLOCK);
    let partials: Vec<Vec<f64>> = (0..block_count)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0f64; slots];
            let mut phase = vec![Complex64::new(0.0, 0.0); q as usize];
            let mut a = vec![0u64; nu];
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(cells as usize);
            for cell in lo..hi {
                let mut rest = cell as u64;
                for slot in a.iter_mut() {
                    *slot = (rest % big_q) * step;
                    rest /= big_q;
                }
                for (k, ph) in phase.iter_mut().enumerate() {
                    let mut idx = 0u64;
                    for (i, &ai) in a.iter().enumerate() {
                        idx += ai * tpow[i][k] % q;
                    }
                    *ph = table.get(idx);
                }
                for (fi, fs) in samples.iter().enumerate() {
                    let mut total = Complex64::new(0.0, 0.0);
                    let mut square = 0.0;
                    for (ph, fv) in phase.chunks_exact(width).zip(fs.chunks_exact(width)) {
                        let mut e = Complex64::new(0.0, 0.0);
                        for (u, v) in ph.iter().zip(fv) {
                            e += u * v;
                        }
                        let e = e / q as f64;
                        total += e;
                        square += e.norm_sqr();
                    }
                    let full = total.norm_sqr();
                    let (mut lp, mut rp) = (1.0, 1.0);
                    let base = fi * nu * 2;
                    for m in 0..nu {
                        lp *= full;
                        rp *= square;
                        acc[base + 2 * m] += lp;
                        acc[base + 2 * m + 1] += rp;
                    }
                }
            }
            acc
        })
        .collect();
    let totals = pairwise_sum(&partials, slots);

    Ok((0..nf)
        .map(|fi| {
            (1..=n)
                .map(|m| {
                    let base = fi * nu * 2 + 2 * (m as usize - 1);
                    let lhs = totals[base].powf(1.0 / (2.0 * m as f64));
                    let rhs = totals[base + 1].powf(1.0 / (2.0 * m as f64));
                    let constant = sf_constant(m);
                    let ratio = if lhs == 0.0 && rhs == 0.0 {
                        0.0
                    } else {
                        lhs / (constant * rhs)
                    };
                    SFReport {
                        p,
                        n,
                        m,
                        alpha,
                        lhs,
                        rhs,
                        constant,
                        ratio,
                        hypothesis_violated: p <= n as u64,
                    }
                })
                .collect()
        })
        .collect())
}

/// Fixed-shape pairwise reduction of equal-length vectors.
fn pairwise_sum(parts: &[Vec<f64>], len: usize) -> Vec<f64> {
    match parts.len() {
        0 => vec![0.0; len],
        1 => parts[0].clone(),
        k => {
            let (l, r) = parts.split_at(k / 2);
            let (l, r) = (pairwise_sum(l, len), pairwise_sum(r, len));
            l.iter().zip(&r).map(|(a, b)| a + b).collect()
        }
    }
}

/// Test functions for the inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Independent standard complex Gaussians.
    Gaussian,
    /// The indicator of one interval.
    SingleInterval,
    /// The indicator of two adjacent intervals.
    TwoInterval,
    AllOnes,
}

impl Ensemble {
    pub const ADVERSARIAL: [Ensemble; 3] = [Self::SingleInterval, Self::TwoInterval, Self::AllOnes];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::SingleInterval => "single-interval",
            Self::TwoInterval => "two-interval",
            Self::AllOnes => "all-ones",
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, p: u64, resolution: u32, alpha: u32, rng: &mut R) -> Result<GridFunction> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let pa = p.pow(alpha);
        match self {
            Self::Gaussian => {
                let scale = std::f64::consts::FRAC_1_SQRT_2;
                GridFunction::from_fn(p, resolution, |_| {
                    let re: f64 = StandardNormal.sample(&mut *rng);
                    let im: f64 = StandardNormal.sample(&mut *rng);
                    Complex64::new(re * scale, im * scale)
                })
            }
            Self::SingleInterval => {
                GridFunction::from_fn(p, resolution, |t| if t % pa == 0 { one } else { zero })
            }
            Self::TwoInterval => {
                GridFunction::from_fn(p, resolution, |t| if t % pa <= 1 { one } else { zero })
            }
            Self::AllOnes => GridFunction::constant(p, resolution, one),
        }
    }
}

/// Result of the support test for one pair of interval tuples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffDiagOutcome {
    /// `(J_j)` is a rearrangement of `(I_j)`.
    PermutationMatched,
    /// No representatives bring `Σγ(s_j)` within `p^{-αn}` of `Σγ(t_j)`.
    Vanishes,
    /// Representatives that do, although the tuples are not rearrangements.
    NearCollision { s: Vec<u64>, t: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffDiagCheck {
    pub outcome: OffDiagOutcome,
    pub pairs_checked: u128,
    pub sampled: bool,
}

/// Representatives mod `p^{αn}` of each interval.
fn representatives(p: u64, n: u32, interval: IntervalIndex) -> impl Iterator<Item = u64> {
    let pa = p.pow(interval.alpha);
    let count = p.pow(interval.alpha * (n - 1));
    (0..count).map(move |s| interval.class + pa * s)
}

fn gamma_sum(values: &[u64], n: u32, q: u64) -> Vec<u64> {
    let mut out = vec![0u64; n as usize];
    for &v in values {
        let mut power = 1u64;
        for slot in out.iter_mut() {
            power = power * v % q;
            *slot = (*slot + power) % q;
        }
    }
    out
}

/// Every tuple of representatives, one drawn from each interval.
fn tuples_of(p: u64, n: u32, intervals: &[IntervalIndex]) -> Vec<Vec<u64>> {
    let mut out: Vec<Vec<u64>> = vec![Vec::new()];
    for &iv in intervals {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                representatives(p, n, iv).map(move |r| {
                    let mut next = prefix.clone();
                    next.push(r);
                    next
                })
            })
            .collect();
    }
    out
}

fn is_rearrangement(i: &[IntervalIndex], j: &[IntervalIndex]) -> bool {
    let mut a = i.to_vec();
    let mut b = j.to_vec();
    a.sort();
    b.sort();
    a == b
}

/// The support condition behind the vanishing of off-diagonal terms: for
/// non-matched interval tuples, `Σγ(s_j) − Σγ(t_j)` never lies in
/// `B(0, p^{-αn})`. Enumerates representatives mod `p^{αn}`; with a budget
/// below the representative count only a prefix of the `t`-side is scanned.
pub fn offdiag_support_check(
    p: u64,
    n: u32,
    alpha: u32,
    i: &[IntervalIndex],
    j: &[IntervalIndex],
    budget: Option<u128>,
) -> Result<OffDiagCheck> {
    if !is_prime(p) {
        return Err(LabError::NotPrime(p));
    }
    if i.len() != j.len() || i.is_empty() || i.len() > n as usize {
        return Err(LabError::InvalidInput("need two tuples of equal length m ≤ n".into()));
    }
    if p <= n as u64 {
        return Err(LabError::Hypothesis(format!("support check needs p > n (p = {p}, n = {n})")));
    }
    if i.iter().chain(j).any(|iv| iv.alpha != alpha || iv.class >= p.pow(alpha)) {
        return Err(LabError::InvalidInput("intervals must all be at scale α".into()));
    }
    if is_rearrangement(i, j) {
        return Ok(OffDiagCheck {
            outcome: OffDiagOutcome::PermutationMatched,
            pairs_checked: 0,
            sampled: false,
        });
    }
    let q = checked_pow(p, alpha * n).ok_or(LabError::ModulusOverflow {
        p,
        precision: alpha * n,
    })?;
    let s_side = tuples_of(p, n, i);
    let t_side = tuples_of(p, n, j);
    let total = s_side.len() as u128 * t_side.len() as u128;
    let (t_limit, sampled) = match budget {
        Some(b) if b < total => (((b / s_side.len() as u128).max(1)) as usize, true),
        _ => (t_side.len(), false),
    };
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(s_side.len());
    for (k, s) in s_side.iter().enumerate() {
        seen.entry(gamma_sum(s, n, q)).or_insert(k);
    }
    for t in t_side.iter().take(t_limit) {
        if let Some(&k) = seen.get(&gamma_sum(t, n, q)) {
            return Ok(OffDiagCheck {
                outcome: OffDiagOutcome::NearCollision {
                    s: s_side[k].clone(),
                    t: t.clone(),
                },
                pairs_checked: total,
                sampled,
            });
        }
    }
    Ok(OffDiagCheck {
        outcome: OffDiagOutcome::Vanishes,
        pairs_checked: s_side.len() as u128 * t_limit as u128,
        sampled,
    })
}

/// Summary of the support test over every pair of interval `m`-tuples.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffDiagScan {
    pub p: u64,
    pub n: u32,
    pub m: u32,
    pub alpha: u32,
    pub tuple_pairs: u64,
    pub matched: u64,
    pub vanishing: u64,
    pub near_collisions: u64,
    pub representative_pairs: u128,
    pub witnesses: Vec<(Vec<u64>, Vec<u64>)>,
}

pub fn offdiag_scan(p: u64, n: u32, m: u32, alpha: u32) -> Result<OffDiagScan> {
    if m == 0 || m > n {
        return Err(LabError::InvalidInput(format!("need 1 ≤ m ≤ n, got m = {m}")));
    }
    let intervals = IntervalIndex::all(p, alpha);
    let mut tuples: Vec<Vec<IntervalIndex>> = vec![Vec::new()];
    for _ in 0..m {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                intervals.iter().map(move |&iv| {
                    let mut next = t.clone();
                    next.push(iv);
                    next
                })
            })
            .collect();
    }
    let checks: Vec<OffDiagCheck> = tuples
        .par_iter()
        .flat_map_iter(|i| tuples.iter().map(move |j| (i, j)))
        .map(|(i, j)| offdiag_support_check(p, n, alpha, i, j, None))
        .collect::<Result<_>>()?;
    let mut scan = OffDiagScan {
        p,
        n,
        m,
        alpha,
        tuple_pairs: checks.len() as u64,
        matched: 0,
        vanishing: 0,
        near_collisions: 0,
        representative_pairs: 0,
        witnesses: Vec::new(),
    };
    for c in checks {
        scan.representative_pairs += c.pairs_checked;
        match c.outcome {
            OffDiagOutcome::PermutationMatched => scan.matched += 1,
            OffDiagOutcome::Vanishes => scan.vanishing += 1,
            OffDiagOutcome::NearCollision { s, t } => {
                scan.near_collisions += 1;
                if scan.witnesses.len() < 16 {
                    scan.witnesses.push((s, t));
                }
            }
        }
    }
    Ok(scan)
}
