use num::complex::Complex64;
use num::{BigRational, One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::roots::{ArchRoots, Field};
use crate::error::{LabError, Result};

type Exact = (BigRational, BigRational);

fn exact(z: Complex64) -> Exact {
    let conv = |v: f64| BigRational::from_float(v).expect("finite");
    (conv(z.re), conv(z.im))
}

fn mul(a: &Exact, b: &Exact) -> Exact {
    (&a.0 * &b.0 - &a.1 * &b.1, &a.0 * &b.1 + &a.1 * &b.0)
}

/// `|Σ x^j − Σ y^j| ≤ N^{-n}` for `j = 1..n`, decided exactly on the given floating-point values.
pub fn power_sum_hypothesis(x: &ArchRoots, y: &ArchRoots, big_n: f64) -> bool {
    let n = x.len();
    let sums = |t: &ArchRoots| {
        let mut out = vec![(BigRational::zero(), BigRational::zero()); n];
        for &z in t.roots() {
            let base = exact(z);
            let mut power = base.clone();
            for slot in out.iter_mut() {
                slot.0 += &power.0;
                slot.1 += &power.1;
                power = mul(&power, &base);
            }
        }
        out
    };
    let bound = {
        let nn = BigRational::from_float(big_n).expect("finite");
        let mut b = BigRational::one();
        for _ in 0..2 * n {
            b /= &nn;
        }
        b
    };
    sums(x).iter().zip(sums(y)).all(|(a, b)| {
        let re = &a.0 - &b.0;
        let im = &a.1 - &b.1;
        &re * &re + &im * &im <= bound
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArchMatchStatus {
    Matched,
    /// A component of the closeness graph has unequal side counts.
    NoMatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchMatch {
    pub status: ArchMatchStatus,
    /// `sigma[j]` pairs `x_j` with `y_sigma[j]`; empty on `NoMatch`.
    pub sigma: Vec<usize>,
    /// Connected components as `(x indices, y indices)`.
    pub components: Vec<(Vec<usize>, Vec<usize>)>,
    /// `N · max_j |x_j − y_σ(j)|`.
    pub realised: f64,
    pub threshold: f64,
}

/// `max_j |x_j − y_σ(j)|`.
pub fn sigma_bound(x: &ArchRoots, y: &ArchRoots, sigma: &[usize]) -> f64 {
    sigma
        .iter()
        .enumerate()
        .map(|(j, &k)| (x.roots()[j] - y.roots()[k]).norm())
        .fold(0.0, f64::max)
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut root = i;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = i;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Minimises the largest distance over all bijections `xs → ys`.
fn bottleneck(x: &[Complex64], y: &[Complex64], xs: &[usize], ys: &[usize]) -> Vec<usize> {
    fn permute(k: usize, perm: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            visit(perm);
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            permute(k + 1, perm, visit);
            perm.swap(k, i);
        }
    }
    let mut best = (f64::INFINITY, ys.to_vec());
    let mut perm = ys.to_vec();
    permute(0, &mut perm, &mut |p| {
        let cost = xs
            .iter()
            .zip(p)
            .map(|(&i, &k)| (x[i] - y[k]).norm())
            .fold(0.0, f64::max);
        if cost < best.0 {
            best = (cost, p.to_vec());
        }
    });
    best.1
}

/// Components of the graph joining `x_i` and `y_k` when `|x_i − y_k| ≤ ρ/N`,
/// and within each an assignment minimising the largest distance.
pub fn arch_match(x: &ArchRoots, y: &ArchRoots, big_n: f64, rho: f64) -> Result<ArchMatch> {
    if x.len() != y.len() || x.field() != y.field() {
        return Err(LabError::InvalidInput("tuples must have the same length and field".into()));
    }
    if !(big_n >= 1.0 && big_n.is_finite()) || !(rho > 0.0 && rho.is_finite()) {
        return Err(LabError::InvalidInput(format!("need N ≥ 1 and ρ > 0 (N = {big_n}, ρ = {rho})")));
    }
    if !power_sum_hypothesis(x, y, big_n) {
        return Err(LabError::Hypothesis(format!(
            "power sums differ by more than N^-n for N = {big_n}"
        )));
    }
    let n = x.len();
    let threshold = rho / big_n;
    let (xr, yr) = (x.roots(), y.roots());
    let mut parent: Vec<usize> = (0..2 * n).collect();
    for i in 0..n {
        for k in 0..n {
            if (xr[i] - yr[k]).norm() <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, n + k));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for v in 0..2 * n {
        let root = find(&mut parent, v);
        let pos = match groups.iter().position(|g| g.0 == root) {
            Some(p) => p,
            None => {
                groups.push((root, Vec::new(), Vec::new()));
                groups.len() - 1
            }
        };
        if v < n {
            groups[pos].1.push(v);
        } else {
            groups[pos].2.push(v - n);
        }
    }
    let components: Vec<(Vec<usize>, Vec<usize>)> = groups.into_iter().map(|g| (g.1, g.2)).collect();
    if components.iter().any(|(a, b)| a.len() != b.len()) {
        return Ok(ArchMatch {
            status: ArchMatchStatus::NoMatch,
            sigma: Vec::new(),
            components,
            realised: f64::NAN,
            threshold,
        });
    }
    let mut sigma = vec![0; n];
    for (xs, ys) in &components {
        for (&i, k) in xs.iter().zip(bottleneck(xr, yr, xs, ys)) {
            sigma[i] = k;
        }
    }
    let realised = big_n * sigma_bound(x, y, &sigma);
    Ok(ArchMatch {
        status: ArchMatchStatus::Matched,
        sigma,
        components,
        realised,
        threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// `x` repeats cluster centers, `y` holds the roots of `(z − c)^k − δ`.
    Clustered,
    /// `y` is `x` moved by at most `N^{-n}/(4n²)` per coordinate.
    Perturbed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructiveInstance {
    pub x: ArchRoots,
    pub y: ArchRoots,
    /// The pairing the instance was built from.
    pub planted: Vec<usize>,
    pub planted_bound: f64,
    pub kind: InstanceKind,
    /// Clustered draws rejected by the exact hypothesis check before this one.
    pub rejected: u32,
}

const CLUSTER_ATTEMPTS: u32 = 8;

fn unit<R: Rng + ?Sized>(rng: &mut R, field: Field) -> Complex64 {
    match field {
        Field::Real => Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0),
        Field::Complex => Complex64::from_polar(1.0, TAU * rng.random::<f64>()),
    }
}

fn point<R: Rng + ?Sized>(rng: &mut R, field: Field, radius: f64) -> Complex64 {
    let r = match field {
        Field::Real => radius * rng.random::<f64>(),
        Field::Complex => radius * rng.random::<f64>().sqrt(),
    };
    r * unit(rng, field)
}

fn clustered<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize, big_n: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let max_k = if field == Field::Real { 2 } else { n };
    let delta_scale = big_n.powi(-(n as i32)) / (2f64.powi(n as i32 + 1) * n as f64);
    let (mut x, mut y) = (Vec::with_capacity(n), Vec::with_capacity(n));
    while x.len() < n {
        let k = rng.random_range(1..=max_k.min(n - x.len()));
        // Centers on a coarse dyadic grid keep c ± w close to exact.
        let raw = point(rng, field, 0.9);
        let c = Complex64::new((raw.re * 1024.0).round() / 1024.0, (raw.im * 1024.0).round() / 1024.0);
        let delta = delta_scale * rng.random_range(0.5..1.0);
        let rot = unit(rng, field);
        match k {
            1 => y.push(c),
            2 => {
                let w = match field {
                    Field::Real => Complex64::new(delta.sqrt(), 0.0),
                    Field::Complex => delta.sqrt() * rot,
                };
                let y1 = c + w;
                y.push(y1);
                y.push(2.0 * c - y1);
            }
            _ => {
                let w = delta.powf(1.0 / k as f64);
                for l in 0..k {
                    y.push(c + w * rot * Complex64::from_polar(1.0, TAU * l as f64 / k as f64));
                }
            }
        }
        x.extend(std::iter::repeat_n(c, k));
    }
    (x, y)
}

fn perturbed<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize, big_n: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let size = big_n.powi(-(n as i32)) / (4.0 * (n * n) as f64);
    let x: Vec<Complex64> = (0..n).map(|_| point(rng, field, 0.95)).collect();
    let y = x.iter().map(|&v| v + point(rng, field, size)).collect();
    (x, y)
}

/// A tuple pair satisfying the power-sum hypothesis (checked exactly) with a
/// known pairing. Clustered draws are tried first; if rounding keeps pushing
/// them over the bound, a perturbed instance is returned instead.
pub fn constructive_instance<R: Rng + ?Sized>(
    rng: &mut R,
    field: Field,
    n: usize,
    big_n: f64,
) -> Result<ConstructiveInstance> {
    let mut rejected = 0;
    loop {
        let kind = if rejected < CLUSTER_ATTEMPTS {
            InstanceKind::Clustered
        } else {
            InstanceKind::Perturbed
        };
        let (x, y0) = match kind {
            InstanceKind::Clustered => clustered(rng, field, n, big_n),
            InstanceKind::Perturbed => perturbed(rng, field, n, big_n),
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for (i, &k) in perm.iter().enumerate() {
            y[k] = y0[i];
        }
        let x = ArchRoots::new(field, x)?;
        let y = ArchRoots::new(field, y)?;
        if power_sum_hypothesis(&x, &y, big_n) {
            let planted_bound = sigma_bound(&x, &y, &perm);
            return Ok(ConstructiveInstance {
                x,
                y,
                planted: perm,
                planted_bound,
                kind,
                rejected,
            });
        }
        if kind == InstanceKind::Perturbed {
            return Err(LabError::AlgorithmInvariant {
                message: "perturbed instance violates the power-sum bound".into(),
                trace: vec![format!("n = {n}, N = {big_n}")],
            });
        }
        rejected += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_permutation() {
        let x = ArchRoots::real(&[0.1, -0.4, 0.7]).unwrap();
        let y = ArchRoots::real(&[0.7, 0.1, -0.4]).unwrap();
        let m = arch_match(&x, &y, 1e3, 2.0).unwrap();
        assert_eq!(m.status, ArchMatchStatus::Matched);
        assert_eq!(m.sigma, vec![1, 2, 0]);
        assert_eq!(m.realised, 0.0);
    }

    #[test]
    fn swap() {
        let x = ArchRoots::real(&[0.1, 0.9]).unwrap();
        let y = ArchRoots::real(&[0.9, 0.1]).unwrap();
        assert_eq!(arch_match(&x, &y, 1e3, 2.0).unwrap().sigma, vec![1, 0]);
    }

    #[test]
    fn hypothesis_is_enforced() {
        let x = ArchRoots::real(&[0.1, 0.9]).unwrap();
        let y = ArchRoots::real(&[0.2, 0.9]).unwrap();
        assert!(matches!(arch_match(&x, &y, 10.0, 2.0), Err(LabError::Hypothesis(_))));
        // Just inside the bound for N = 1: |0.1 - 0.2| ≤ 1, |0.01 - 0.04| ≤ 1.
        assert!(arch_match(&x, &y, 1.0, 2.0).is_ok());
    }

    #[test]
    fn no_match_reported_for_tight_threshold() {
        let x = ArchRoots::real(&[0.0]).unwrap();
        let y = ArchRoots::real(&[0.5]).unwrap();
        let m = arch_match(&x, &y, 1.0, 0.1).unwrap();
        assert_eq!(m.status, ArchMatchStatus::NoMatch);
    }

    #[test]
    fn constructive_instances_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for k in 0..300 {
            let field = if k % 2 == 0 { Field::Real } else { Field::Complex };
            let n = 1 + k % 4;
            let big_n = [1e2, 1e3, 1e4][k % 3];
            let inst = constructive_instance(&mut rng, field, n, big_n).unwrap();
            let m = arch_match(&inst.x, &inst.y, big_n, 2.0).unwrap();
            assert_eq!(m.status, ArchMatchStatus::Matched);
            assert!(sigma_bound(&inst.x, &inst.y, &m.sigma) <= inst.planted_bound * (1.0 + 1e-12));
        }
    }
}
