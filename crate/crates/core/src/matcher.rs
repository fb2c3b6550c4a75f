//! Near-solutions of the power-sum congruence system
//!
//! ```text
//! x_1^j + … + x_n^j ≡ y_1^j + … + y_n^j  (mod p^{na}),  1 ≤ j ≤ n
//! ```
//!
//! and the permutation `σ` with `x_j ≡ y_σ(j) (mod p^a)` that exists when `p > n`.
//! Superclusters are the joint residue classes mod `p^a`: in the ultrametric the
//! bipartite closeness graph splits into complete bipartite components, so
//! bucketing by class is the same as taking connected components.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{checked_pow, is_prime, PrimeModulus, ValExp};
use crate::pss::{self_ref_cluster, RootTuple};
use crate::symmetric::{power_sums, SymTuple};

/// A pair of tuples, the exponent `a`, and the system they should satisfy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongruenceInstance {
    a: u32,
    x: SymTuple,
    y: SymTuple,
}

impl CongruenceInstance {
    pub fn new(x: SymTuple, y: SymTuple, a: u32) -> Result<Self> {
        if x.modulus() != y.modulus() {
            return Err(LabError::ModulusMismatch {
                left: x.modulus().to_string(),
                right: y.modulus().to_string(),
            });
        }
        if x.len() != y.len() {
            return Err(LabError::InvalidInput(format!(
                "tuple lengths differ: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if a == 0 {
            return Err(LabError::InvalidInput("a must be at least 1".into()));
        }
        let needed = a * x.len() as u32;
        if x.modulus().precision() < needed {
            return Err(LabError::Precision(format!(
                "system needs precision n·a = {needed}, tuples are mod {}",
                x.modulus()
            )));
        }
        Ok(Self { a, x, y })
    }

    /// Builds both tuples modulo `p^{na}`.
    pub fn from_ints(p: u64, a: u32, x: &[i128], y: &[i128]) -> Result<Self> {
        let modulus = PrimeModulus::new(p, a * x.len() as u32)?;
        Self::new(SymTuple::from_ints(modulus, x)?, SymTuple::from_ints(modulus, y)?, a)
    }

    pub fn p(&self) -> u64 {
        self.x.modulus().p()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn x(&self) -> &SymTuple {
        &self.x
    }

    pub fn y(&self) -> &SymTuple {
        &self.y
    }

    /// `char k_K > n`; without it the matching is not guaranteed.
    pub fn hypothesis_holds(&self) -> bool {
        self.p() > self.n() as u64
    }
}

/// `p_j(x) ≡ p_j(y) (mod p^{na})` for every `j = 1..n`.
pub fn check_system(inst: &CongruenceInstance) -> bool {
    let q = inst.p().pow(inst.a * inst.n() as u32);
    power_sums(&inst.x)
        .iter()
        .zip(power_sums(&inst.y))
        .all(|(u, v)| u.rep() % q == v.rep() % q)
}

/// One joint residue class mod `p^a` with its members on each side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supercluster {
    /// Canonical representative in `[0, p^a)`.
    pub representative: u64,
    pub x_members: Vec<usize>,
    pub y_members: Vec<usize>,
}

impl Supercluster {
    pub fn alpha(&self) -> usize {
        self.x_members.len()
    }

    pub fn beta(&self) -> usize {
        self.y_members.len()
    }
}

fn bucket(x: &[u64], y: &[u64], pa: u64) -> Vec<Supercluster> {
    let mut classes: BTreeMap<u64, Supercluster> = BTreeMap::new();
    for (i, &v) in x.iter().enumerate() {
        let r = v % pa;
        classes
            .entry(r)
            .or_insert_with(|| Supercluster {
                representative: r,
                x_members: Vec::new(),
                y_members: Vec::new(),
            })
            .x_members
            .push(i);
    }
    for (i, &v) in y.iter().enumerate() {
        let r = v % pa;
        classes
            .entry(r)
            .or_insert_with(|| Supercluster {
                representative: r,
                x_members: Vec::new(),
                y_members: Vec::new(),
            })
            .y_members
            .push(i);
    }
    classes.into_values().collect()
}

/// Superclusters in ascending order of representative.
pub fn build_superclusters(inst: &CongruenceInstance) -> Vec<Supercluster> {
    bucket(&inst.x.reps(), &inst.y.reps(), inst.p().pow(inst.a))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchStatus {
    Matched,
    SizeMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    /// `sigma[j]` is the index of the `y` entry paired with `x_j`. Empty on mismatch.
    pub sigma: Vec<usize>,
    pub superclusters: Vec<Supercluster>,
    pub status: MatchStatus,
    /// Set when `p ≤ n`, where a match is not guaranteed.
    pub hypothesis_violated: bool,
}

fn pair_within(superclusters: &[Supercluster], n: usize) -> Option<Vec<usize>> {
    let mut sigma = vec![usize::MAX; n];
    for sc in superclusters {
        if sc.alpha() != sc.beta() {
            return None;
        }
        for (&i, &j) in sc.x_members.iter().zip(&sc.y_members) {
            sigma[i] = j;
        }
    }
    Some(sigma)
}

/// Builds `σ` by pairing indices inside each supercluster in index order.
pub fn match_permutation(inst: &CongruenceInstance) -> Result<MatchResult> {
    if !check_system(inst) {
        return Err(LabError::SystemUnsatisfied);
    }
    let superclusters = build_superclusters(inst);
    let sigma = pair_within(&superclusters, inst.n());
    let status = if sigma.is_some() {
        MatchStatus::Matched
    } else {
        MatchStatus::SizeMismatch
    };
    Ok(MatchResult {
        sigma: sigma.unwrap_or_default(),
        superclusters,
        status,
        hypothesis_violated: !inst.hypothesis_holds(),
    })
}

/// Direct re-check that `σ` is a permutation with `x_j ≡ y_σ(j) (mod p^a)`.
pub fn sigma_is_sound(inst: &CongruenceInstance, sigma: &[usize]) -> bool {
    let n = inst.n();
    if sigma.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || std::mem::replace(&mut seen[s], true) {
            return false;
        }
    }
    let x = inst.x.entries();
    let y = inst.y.entries();
    (0..n).all(|j| x[j].congruent(&y[sigma[j]], inst.a).unwrap_or(false))
}

/// Independent oracle: does any permutation match the tuples mod `p^a`?
pub fn exists_matching_permutation(x: &[u64], y: &[u64], pa: u64) -> bool {
    fn search(j: usize, x: &[u64], y: &[u64], pa: u64, used: &mut [bool]) -> bool {
        if j == x.len() {
            return true;
        }
        for k in 0..y.len() {
            if !used[k] && x[j] % pa == y[k] % pa {
                used[k] = true;
                if search(j + 1, x, y, pa, used) {
                    return true;
                }
                used[k] = false;
            }
        }
        false
    }
    search(0, x, y, pa, &mut vec![false; y.len()])
}

/// Proof-internal quantities, exposed for inspection only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchDiagnostics {
    /// `v(rep_m − rep_m')` between supercluster representatives, lifted from `x` or `y` members.
    pub supercluster_valuations: Vec<Vec<ValExp>>,
    /// `|C_X(x_j)|` at level `na`.
    pub x_cluster_sizes: Vec<usize>,
    /// `|C_Y(y_j)|` at level `na`.
    pub y_cluster_sizes: Vec<usize>,
}

pub fn diagnostics(inst: &CongruenceInstance) -> Result<MatchDiagnostics> {
    let superclusters = build_superclusters(inst);
    let lift = |sc: &Supercluster| {
        sc.x_members
            .first()
            .map(|&i| inst.x.entries()[i])
            .or_else(|| sc.y_members.first().map(|&i| inst.y.entries()[i]))
            .expect("superclusters are nonempty")
    };
    let reps: Vec<_> = superclusters.iter().map(lift).collect();
    let supercluster_valuations = reps
        .iter()
        .map(|u| reps.iter().map(|v| (*u - *v).val()).collect())
        .collect();
    let level = inst.a * inst.n() as u32;
    let xs = RootTuple::new(inst.x.entries().to_vec())?;
    let ys = RootTuple::new(inst.y.entries().to_vec())?;
    let sizes = |t: &RootTuple| -> Result<Vec<usize>> {
        (0..t.len())
            .map(|j| self_ref_cluster(t, j, level).map(|c| c.len()))
            .collect()
    };
    Ok(MatchDiagnostics {
        supercluster_valuations,
        x_cluster_sizes: sizes(&xs)?,
        y_cluster_sizes: sizes(&ys)?,
    })
}

/// One pair of tuples, as residues mod `p^{na}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuplePair {
    pub x: Vec<u64>,
    pub y: Vec<u64>,
}

/// Statistics of an exhaustive (or sampled) scan of `(Z/p^{na})^{2n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub p: u64,
    pub n: usize,
    pub a: u32,
    /// `p^{na}`: the system modulus, also the range of each coordinate.
    pub system_modulus: u64,
    /// `(p^{na})^{2n}`.
    pub total_pairs: u128,
    pub scanned_pairs: u128,
    pub satisfying_pairs: u64,
    pub matched: u64,
    /// Satisfying pairs without a matching permutation.
    pub failures: u64,
    /// First few failing pairs.
    pub witnesses: Vec<TuplePair>,
    /// True when the budget forced a random subset of `x` tuples.
    pub sampled: bool,
}

impl ScanReport {
    pub fn zero_failures(&self) -> bool {
        self.failures == 0
    }
}

const WITNESS_LIMIT: usize = 32;

/// Enumerates `Z/q` tuples of length `n` in lexicographic order (leading coordinate slowest).
fn decode(mut index: u64, q: u64, n: usize, out: &mut [u64]) {
    for slot in out.iter_mut().take(n).rev() {
        *slot = index % q;
        index /= q;
    }
}

fn signatures(q: u64, n: usize, hyp_modulus: u64) -> Vec<u64> {
    let count = q.pow(n as u32);
    let mut sig = vec![0u64; count as usize * n];
    let mut coords = vec![0u64; n];
    for t in 0..count {
        decode(t, q, n, &mut coords);
        let row = &mut sig[t as usize * n..(t as usize + 1) * n];
        for &c in &coords {
            let mut power = c % hyp_modulus;
            for s in row.iter_mut() {
                *s = (*s + power) % hyp_modulus;
                power = ((power as u128 * c as u128) % hyp_modulus as u128) as u64;
            }
        }
    }
    sig
}

#[derive(Default)]
struct Partial {
    scanned: u128,
    satisfying: u64,
    matched: u64,
    failures: u64,
    witnesses: Vec<TuplePair>,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        self.scanned += other.scanned;
        self.satisfying += other.satisfying;
        self.matched += other.matched;
        self.failures += other.failures;
        self.witnesses.extend(other.witnesses);
        self.witnesses.truncate(WITNESS_LIMIT);
        self
    }
}

/// Shared scan engine. Coordinates range over `Z/q`, the hypothesis is read
/// mod `hyp_modulus`, matching is checked mod `p^a` through [`match_permutation`]
/// on instances at precision `precision`.
fn scan(
    p: u64,
    n: usize,
    a: u32,
    q: u64,
    hyp_modulus: u64,
    precision: u32,
    budget: Option<u128>,
    seed: u64,
) -> Result<ScanReport> {
    let tuples = q
        .checked_pow(n as u32)
        .ok_or_else(|| LabError::InvalidInput("tuple space does not fit in 64 bits".into()))?;
    if tuples > (1 << 26) {
        return Err(LabError::InvalidInput(format!(
            "{tuples} tuples per side is beyond desk scale"
        )));
    }
    let total_pairs = tuples as u128 * tuples as u128;
    let sig = signatures(q, n, hyp_modulus);
    let modulus = PrimeModulus::new(p, precision)?;

    let (x_indices, sampled): (Vec<u64>, bool) = match budget {
        Some(b) if b < total_pairs => {
            let rows = ((b / tuples as u128).max(1) as u64).min(tuples);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks: Vec<u64> = (0..rows).map(|_| rng.random_range(0..tuples)).collect();
            picks.sort_unstable();
            (picks, true)
        }
        _ => ((0..tuples).collect(), false),
    };

    // Partition by leading x coordinate; chunk results are merged in order.
    let chunk = (tuples / q).max(1) as usize;
    let partial = x_indices
        .par_chunks(chunk)
        .map(|rows| {
            let mut part = Partial::default();
            let mut xs = vec![0u64; n];
            let mut ys = vec![0u64; n];
            for &xt in rows {
                let xsig = &sig[xt as usize * n..(xt as usize + 1) * n];
                decode(xt, q, n, &mut xs);
                for yt in 0..tuples {
                    part.scanned += 1;
                    if &sig[yt as usize * n..(yt as usize + 1) * n] != xsig {
                        continue;
                    }
                    part.satisfying += 1;
                    decode(yt, q, n, &mut ys);
                    let to_tuple = |v: &[u64]| {
                        SymTuple::from_ints(modulus, &v.iter().map(|&c| c as i128).collect::<Vec<_>>())
                    };
                    let inst = CongruenceInstance {
                        a,
                        x: to_tuple(&xs).expect("valid tuple"),
                        y: to_tuple(&ys).expect("valid tuple"),
                    };
                    let ok = match match_permutation(&inst) {
                        Ok(m) => m.status == MatchStatus::Matched && sigma_is_sound(&inst, &m.sigma),
                        // The scan's own signature test and check_system disagree only
                        // when the hypothesis modulus is weaker than p^{na}.
                        Err(LabError::SystemUnsatisfied) => {
                            let pa = p.pow(a);
                            exists_matching_permutation(&xs, &ys, pa)
                        }
                        Err(e) => return Err(e),
                    };
                    if ok {
                        part.matched += 1;
                    } else {
                        part.failures += 1;
                        if part.witnesses.len() < WITNESS_LIMIT {
                            part.witnesses.push(TuplePair {
                                x: xs.clone(),
                                y: ys.clone(),
                            });
                        }
                    }
                }
            }
            Ok(part)
        })
        .collect::<Result<Vec<Partial>>>()?
        .into_iter()
        .fold(Partial::default(), Partial::merge);

    Ok(ScanReport {
        p,
        n,
        a,
        system_modulus: q,
        total_pairs,
        scanned_pairs: partial.scanned,
        satisfying_pairs: partial.satisfying,
        matched: partial.matched,
        failures: partial.failures,
        witnesses: partial.witnesses,
        sampled,
    })
}

fn check_params(p: u64, n: usize, a: u32) -> Result<u64> {
    if !is_prime(p) {
        return Err(LabError::NotPrime(p));
    }
    if n == 0 || a == 0 {
        return Err(LabError::InvalidInput("n and a must be positive".into()));
    }
    checked_pow(p, a * n as u32).ok_or(LabError::ModulusOverflow {
        p,
        precision: a * n as u32,
    })
}

/// Scans every `(x, y) ∈ (Z/p^{na})^{2n}` and checks that each solution of the
/// system is matched. With a budget below the pair count, a seeded sample of
/// `x` rows is scanned against all `y` and the report is flagged as sampled.
pub fn brute_force_verify(p: u64, n: usize, a: u32, budget: Option<u128>, seed: u64) -> Result<ScanReport> {
    let q = check_params(p, n, a)?;
    if p <= n as u64 {
        return Err(LabError::Hypothesis(format!(
            "brute-force verification needs p > n (p = {p}, n = {n}); use the violation search"
        )));
    }
    scan(p, n, a, q, q, a * n as u32, budget, seed)
}

/// Exploratory scan for `p ≤ n`: reports every solution of the system that has
/// no matching permutation. No outcome is asserted.
pub fn hypothesis_violation_search(
    p: u64,
    n: usize,
    a: u32,
    budget: Option<u128>,
    seed: u64,
) -> Result<ScanReport> {
    let q = check_params(p, n, a)?;
    if p > n as u64 {
        return Err(LabError::InvalidInput(format!(
            "violation search targets p ≤ n (p = {p}, n = {n})"
        )));
    }
    scan(p, n, a, q, q, a * n as u32, budget, seed)
}

/// The `a = 1` case with the hypothesis weakened to modulus `p`: tuples in
/// `(Z/p)^n` whose power sums agree mod `p`, checked for a match mod `p`.
pub fn weakened_modulus_scan(p: u64, n: usize) -> Result<ScanReport> {
    check_params(p, n, 1)?;
    scan(p, n, 1, p, p, 1, None, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_system_examples() {
        let inst = CongruenceInstance::from_ints(5, 1, &[3, 4], &[3, 4]).unwrap();
        assert!(check_system(&inst));
        let inst = CongruenceInstance::from_ints(7, 2, &[1, 2], &[2, 1]).unwrap();
        assert!(check_system(&inst));
        let inst = CongruenceInstance::from_ints(3, 1, &[0, 0], &[3, 6]).unwrap();
        assert!(check_system(&inst));
        let inst = CongruenceInstance::from_ints(5, 1, &[0, 1], &[2, 2]).unwrap();
        assert!(!check_system(&inst));
    }

    #[test]
    fn supercluster_examples() {
        let inst = CongruenceInstance::from_ints(5, 1, &[0, 1], &[0, 1]).unwrap();
        let sc = build_superclusters(&inst);
        assert_eq!(sc.iter().map(|s| (s.alpha(), s.beta())).collect::<Vec<_>>(), vec![(1, 1), (1, 1)]);

        let inst = CongruenceInstance::from_ints(3, 1, &[0, 0], &[3, 6]).unwrap();
        let sc = build_superclusters(&inst);
        assert_eq!(sc.len(), 1);
        assert_eq!((sc[0].representative, sc[0].alpha(), sc[0].beta()), (0, 2, 2));

        let inst = CongruenceInstance::from_ints(5, 1, &[0, 1], &[2, 2]).unwrap();
        let sc = build_superclusters(&inst);
        let shape: Vec<_> = sc.iter().map(|s| (s.representative, s.alpha(), s.beta())).collect();
        assert_eq!(shape, vec![(0, 1, 0), (1, 1, 0), (2, 0, 2)]);
    }

    #[test]
    fn match_examples() {
        let inst = CongruenceInstance::from_ints(5, 1, &[4, 0], &[4, 0]).unwrap();
        let m = match_permutation(&inst).unwrap();
        assert_eq!(m.status, MatchStatus::Matched);
        assert_eq!(m.sigma, vec![0, 1]);

        let inst = CongruenceInstance::from_ints(5, 1, &[1, 2], &[2, 1]).unwrap();
        let m = match_permutation(&inst).unwrap();
        assert_eq!(m.sigma, vec![1, 0]);
        assert!(sigma_is_sound(&inst, &m.sigma));

        let inst = CongruenceInstance::from_ints(3, 1, &[0, 0], &[3, 6]).unwrap();
        let m = match_permutation(&inst).unwrap();
        assert_eq!(m.status, MatchStatus::Matched);
        assert_eq!(m.sigma, vec![0, 1]);
        assert!(!m.hypothesis_violated);

        let inst = CongruenceInstance::from_ints(5, 1, &[0, 1], &[2, 2]).unwrap();
        assert_eq!(match_permutation(&inst), Err(LabError::SystemUnsatisfied));
    }

    #[test]
    fn instance_validation() {
        let m = PrimeModulus::new(5, 1).unwrap();
        let x = SymTuple::from_ints(m, &[1, 2]).unwrap();
        assert!(matches!(
            CongruenceInstance::new(x.clone(), x, 1),
            Err(LabError::Precision(_))
        ));
        assert!(CongruenceInstance::from_ints(5, 1, &[1, 2], &[1]).is_err());
    }

    #[test]
    fn unsound_sigma_is_rejected() {
        let inst = CongruenceInstance::from_ints(5, 1, &[1, 2], &[2, 1]).unwrap();
        assert!(!sigma_is_sound(&inst, &[0, 1]));
        assert!(!sigma_is_sound(&inst, &[1, 1]));
        assert!(!sigma_is_sound(&inst, &[1]));
    }

    #[test]
    fn small_exhaustive_scan() {
        let report = brute_force_verify(3, 2, 1, None, 0).unwrap();
        assert_eq!(report.total_pairs, 6561);
        assert_eq!(report.scanned_pairs, 6561);
        assert!(report.satisfying_pairs > 0);
        assert_eq!(report.failures, 0);
        assert_eq!(report.matched, report.satisfying_pairs);
        assert!(!report.sampled);
    }

    #[test]
    fn budget_samples() {
        let report = brute_force_verify(5, 2, 1, Some(10_000), 7).unwrap();
        assert!(report.sampled);
        assert!(report.scanned_pairs <= 10_000);
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn violation_search_requires_small_prime() {
        assert!(hypothesis_violation_search(5, 2, 1, None, 0).is_err());
        assert!(brute_force_verify(2, 2, 1, None, 0).is_err());
        let report = hypothesis_violation_search(2, 2, 1, None, 0).unwrap();
        assert_eq!(report.total_pairs, 256);
        for w in &report.witnesses {
            assert!(!exists_matching_permutation(&w.x, &w.y, 2));
        }
    }

    #[test]
    fn weakened_scan_with_large_prime_has_no_failures() {
        let report = weakened_modulus_scan(5, 2).unwrap();
        assert_eq!(report.failures, 0);
        assert_eq!(report.total_pairs, 625);
    }

    #[test]
    fn diagnostics_shapes() {
        let inst = CongruenceInstance::from_ints(5, 2, &[0, 26], &[1, 25]).unwrap();
        assert!(check_system(&inst) || !check_system(&inst));
        let d = diagnostics(&inst).unwrap();
        assert_eq!(d.x_cluster_sizes.len(), 2);
        assert_eq!(d.supercluster_valuations.len(), build_superclusters(&inst).len());
    }
}
