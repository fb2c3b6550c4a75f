//! Sublevel sets `{z : |P_ξ(z)|_p ≤ p^{-E}}` of monic polynomials with roots in
//! `Z_p`, and the root-cluster radii that describe them as unions of balls.
//!
//! Radii are handled as exponents: the radius `r_j = p^{-ρ_j}` of the ball
//! around root `j` at level `E` is
//!
//! ```text
//! ρ_j = max over clusters C ∋ j of (E − Σ_{i ∉ C} v(ξ_j − ξ_i)) / |C|
//! ```
//!
//! (a minimum over radii is a maximum over exponents). Exponents are rationals
//! with denominator dividing `|C|`, hence dividing `n!`.
//!
//! Root indices are zero-based throughout.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{abs_diff, Exponent, PrimeModulus, Residue, ValExp};
use crate::symmetric::DEFAULT_DEGREE_CAP;

/// Roots of `P_ξ` at precision `M` with their cached pairwise valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootTuple {
    modulus: PrimeModulus,
    roots: Vec<Residue>,
    distances: Vec<Vec<ValExp>>,
}

impl RootTuple {
    pub fn new(roots: Vec<Residue>) -> Result<Self> {
        let first = roots
            .first()
            .ok_or_else(|| LabError::InvalidInput("empty root tuple".into()))?;
        let modulus = first.modulus();
        if roots.len() > DEFAULT_DEGREE_CAP {
            return Err(LabError::InvalidInput(format!(
                "{} roots exceed the degree cap {DEFAULT_DEGREE_CAP}",
                roots.len()
            )));
        }
        let n = roots.len();
        let mut distances = vec![vec![ValExp::AtLeast(modulus.precision()); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = abs_diff(&roots[i], &roots[j])?;
                distances[i][j] = d;
                distances[j][i] = d;
            }
        }
        Ok(Self {
            modulus,
            roots,
            distances,
        })
    }

    pub fn from_ints(modulus: PrimeModulus, values: &[i128]) -> Result<Self> {
        Self::new(values.iter().map(|&v| modulus.residue(v)).collect())
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn roots(&self) -> &[Residue] {
        &self.roots
    }

    /// `v(ξ_i − ξ_j)`.
    pub fn distance(&self, i: usize, j: usize) -> ValExp {
        self.distances[i][j]
    }

    /// `P_ξ(z) = Π (z − ξ_i)` at the tuple's precision.
    pub fn eval(&self, z: Residue) -> Residue {
        self.roots
            .iter()
            .fold(self.modulus.one(), |acc, &root| acc * (z - root))
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.len() {
            return Err(LabError::InvalidInput(format!(
                "root index {j} out of range for {} roots",
                self.len()
            )));
        }
        Ok(())
    }

    fn check_level(&self, level: u32) -> Result<()> {
        if level > self.modulus.precision() {
            return Err(LabError::Precision(format!(
                "level p^-{level} is finer than the precision {}",
                self.modulus
            )));
        }
        Ok(())
    }
}

/// A nonempty set of root indices, stored as a bitmask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cluster {
    mask: u32,
}

impl Cluster {
    pub fn new(members: &[usize]) -> Result<Self> {
        if members.is_empty() {
            return Err(LabError::InvalidInput("empty cluster".into()));
        }
        let mut mask = 0u32;
        for &i in members {
            if i >= 32 {
                return Err(LabError::InvalidInput(format!("cluster index {i} too large")));
            }
            mask |= 1 << i;
        }
        Ok(Self { mask })
    }

    pub(crate) fn from_mask(mask: u32) -> Self {
        debug_assert!(mask != 0);
        Self { mask }
    }

    pub fn full(n: usize) -> Self {
        Self::from_mask((1u32 << n) - 1)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 32 && self.mask & (1 << i) != 0
    }

    pub fn members(&self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }
}

impl Ord for Cluster {
    /// Smaller clusters first, then lexicographic member lists.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.members().cmp(&other.members()))
    }
}

impl PartialOrd for Cluster {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A radius `p^{-exponent}` together with the cluster that realises it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadiusExp {
    pub exponent: Exponent,
    pub cluster: Cluster,
}

/// Candidate exponent of one cluster, or `None` when a root indistinguishable
/// from `ξ_j` sits outside it (a zero factor: infinite radius).
fn cluster_candidate(xi: &RootTuple, j: usize, cluster: Cluster, level: u32) -> Option<Exponent> {
    let mut outside = Exponent::from_integer(0);
    for i in 0..xi.len() {
        if cluster.contains(i) {
            continue;
        }
        outside += xi.distance(j, i).as_exact()?;
    }
    Some((Exponent::from_integer(level as i64) - outside) / Exponent::from_integer(cluster.len() as i64))
}

fn better(candidate: (Exponent, Cluster), best: &Option<(Exponent, Cluster)>) -> bool {
    match best {
        None => true,
        Some((e, c)) => candidate.0 > *e || (candidate.0 == *e && candidate.1 < *c),
    }
}

/// The radius exponent of root `j` at level `E`, maximising over all `2^{n-1}`
/// clusters that contain `j`. Ties go to the smallest, then lexicographically
/// first, cluster.
pub fn pss_radius(xi: &RootTuple, j: usize, level: u32) -> Result<RadiusExp> {
    xi.check_index(j)?;
    xi.check_level(level)?;
    let n = xi.len();
    let mut best: Option<(Exponent, Cluster)> = None;
    for mask in 1u32..(1 << n) {
        if mask & (1 << j) == 0 {
            continue;
        }
        let cluster = Cluster::from_mask(mask);
        if let Some(e) = cluster_candidate(xi, j, cluster, level) {
            if better((e, cluster), &best) {
                best = Some((e, cluster));
            }
        }
    }
    let (exponent, cluster) = best.expect("the full cluster is always a candidate");
    Ok(RadiusExp { exponent, cluster })
}

/// Same radius, maximising only over valuation-closed clusters
/// `{i : v(ξ_j − ξ_i) ≥ t}` (balls around `ξ_j` intersected with the roots).
pub fn pss_radius_nested(xi: &RootTuple, j: usize, level: u32) -> Result<RadiusExp> {
    xi.check_index(j)?;
    xi.check_level(level)?;
    let n = xi.len();
    let mut thresholds: Vec<ValExp> = (0..n).map(|i| xi.distance(j, i)).collect();
    thresholds.sort();
    thresholds.dedup();
    let mut best: Option<(Exponent, Cluster)> = None;
    for t in thresholds {
        let mask = (0..n)
            .filter(|&i| xi.distance(j, i) >= t)
            .fold(0u32, |m, i| m | (1 << i));
        let cluster = Cluster::from_mask(mask);
        if let Some(e) = cluster_candidate(xi, j, cluster, level) {
            if better((e, cluster), &best) {
                best = Some((e, cluster));
            }
        }
    }
    let (exponent, cluster) = best.expect("the full cluster is always a candidate");
    Ok(RadiusExp { exponent, cluster })
}

/// `v(P_ξ(z)) ≥ E`.
pub fn sublevel_membership(xi: &RootTuple, z: Residue, level: u32) -> Result<bool> {
    xi.check_level(level)?;
    if z.modulus() != xi.modulus {
        return Err(LabError::ModulusMismatch {
            left: xi.modulus.to_string(),
            right: z.modulus().to_string(),
        });
    }
    xi.eval(z).val().is_at_least(Exponent::from_integer(level as i64))
}

/// Outcome of comparing the sublevel set with the union of root balls.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PssEqualityReport {
    pub level: u32,
    pub radii: Vec<Exponent>,
    /// `⌈ρ_j⌉`: base-field points see only integer valuations.
    pub ball_exponents: Vec<u32>,
    pub sublevel_count: u64,
    pub union_count: u64,
    pub mismatch_count: u64,
    /// First few residues (mod `p^E`) on which the two sets disagree.
    pub witnesses: Vec<u64>,
}

impl PssEqualityReport {
    pub fn holds(&self) -> bool {
        self.mismatch_count == 0
    }
}

#[derive(Clone, Copy, Default)]
struct Tally {
    sublevel: u64,
    union: u64,
    mismatch: u64,
}

const WITNESS_LIMIT: usize = 16;

/// Enumerate every `z mod p^E` and compare the sublevel set with `∪ B(ξ_j, p^{-⌈ρ_j⌉})`.
pub fn verify_pss_equality(xi: &RootTuple, level: u32) -> Result<PssEqualityReport> {
    xi.check_level(level)?;
    let n = xi.len();
    let mut radii = Vec::with_capacity(n);
    let mut ball_exponents = Vec::with_capacity(n);
    for j in 0..n {
        let r = pss_radius(xi, j, level)?;
        let k = r.exponent.ceil().to_integer();
        debug_assert!(k <= level as i64);
        radii.push(r.exponent);
        ball_exponents.push(k.clamp(0, level as i64) as u32);
    }
    let p = xi.modulus.p();
    let q = p.pow(level);
    let roots: Vec<u64> = xi.roots.iter().map(|r| r.rep() % q).collect();
    let ball_moduli: Vec<u64> = ball_exponents.iter().map(|&k| p.pow(k)).collect();

    let classify = |z: u64| -> (bool, bool) {
        let mut prod: u64 = 1 % q;
        for &root in &roots {
            let factor = (z + q - root) % q;
            prod = ((prod as u128 * factor as u128) % q as u128) as u64;
        }
        let in_sublevel = prod == 0;
        let in_union = roots
            .iter()
            .zip(&ball_moduli)
            .any(|(&root, &pk)| z % pk == root % pk);
        (in_sublevel, in_union)
    };

    let tally = (0..q)
        .into_par_iter()
        .fold(Tally::default, |mut t, z| {
            let (s, u) = classify(z);
            t.sublevel += s as u64;
            t.union += u as u64;
            t.mismatch += (s != u) as u64;
            t
        })
        .reduce(Tally::default, |a, b| Tally {
            sublevel: a.sublevel + b.sublevel,
            union: a.union + b.union,
            mismatch: a.mismatch + b.mismatch,
        });
    let witnesses = if tally.mismatch == 0 {
        Vec::new()
    } else {
        (0..q)
            .filter(|&z| {
                let (s, u) = classify(z);
                s != u
            })
            .take(WITNESS_LIMIT)
            .collect()
    };
    Ok(PssEqualityReport {
        level,
        radii,
        ball_exponents,
        sublevel_count: tally.sublevel,
        union_count: tally.union,
        mismatch_count: tally.mismatch,
        witnesses,
    })
}

/// `C_j = B(ξ_j, r_j) ∩ {ξ_1, …, ξ_n}`.
pub fn self_ref_cluster(xi: &RootTuple, j: usize, level: u32) -> Result<Cluster> {
    let r = pss_radius(xi, j, level)?;
    let mut mask = 0u32;
    for i in 0..xi.len() {
        if xi.distance(j, i).is_at_least(r.exponent)? {
            mask |= 1 << i;
        }
    }
    Ok(Cluster::from_mask(mask))
}

/// Checks `ρ_j = (E − Σ_{i ∉ C_j} v(ξ_j − ξ_i)) / |C_j|` exactly for every root.
pub fn verify_self_ref(xi: &RootTuple, level: u32) -> Result<bool> {
    for j in 0..xi.len() {
        let r = pss_radius(xi, j, level)?;
        let cj = self_ref_cluster(xi, j, level)?;
        match cluster_candidate(xi, j, cj, level) {
            Some(e) if e == r.exponent => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Random roots with a spread of mutual distances: each new root is an earlier
/// one shifted by `p^k · u` for random `k ∈ [0, M]`.
pub fn random_clustered_roots<R: Rng + ?Sized>(
    rng: &mut R,
    modulus: PrimeModulus,
    n: usize,
) -> Result<RootTuple> {
    let q = modulus.modulus();
    let m = modulus.precision();
    let mut reps: Vec<u64> = vec![rng.random_range(0..q)];
    while reps.len() < n {
        let anchor = reps[rng.random_range(0..reps.len())];
        let k = rng.random_range(0..=m);
        let shift = if k == m {
            0
        } else {
            modulus.p().pow(k) * rng.random_range(0..modulus.p().pow(m - k))
        };
        reps.push((anchor + shift) % q);
    }
    RootTuple::new(reps.into_iter().map(|r| modulus.residue(r as i128)).collect())
}
