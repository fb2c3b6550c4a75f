use num::complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{LabError, Result};

/// Root tuples are capped like their p-adic counterparts.
pub const ROOT_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// Points of the closed unit ball of `R` or `C`. Real roots have zero imaginary part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchRoots {
    field: Field,
    roots: Vec<Complex64>,
}

impl ArchRoots {
    pub fn new(field: Field, roots: Vec<Complex64>) -> Result<Self> {
        if roots.is_empty() || roots.len() > ROOT_CAP {
            return Err(LabError::InvalidInput(format!(
                "need 1 to {ROOT_CAP} roots, got {}",
                roots.len()
            )));
        }
        for z in &roots {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LabError::InvalidInput("non-finite root".into()));
            }
            if z.norm() > 1.0 {
                return Err(LabError::InvalidInput(format!("root {z} outside the unit ball")));
            }
            if field == Field::Real && z.im != 0.0 {
                return Err(LabError::InvalidInput(format!("root {z} is not real")));
            }
        }
        Ok(Self { field, roots })
    }

    pub fn real(values: &[f64]) -> Result<Self> {
        Self::new(Field::Real, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn complex(values: &[Complex64]) -> Result<Self> {
        Self::new(Field::Complex, values.to_vec())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// `P(z) = Π (z − ξ_i)`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.roots.iter().map(|r| z - r).product()
    }
}

/// `min_{C ∋ j} (ε / Π_{i∉C} |ξ_j − ξ_i|)^{1/|C|}`; clusters leaving out a root equal to `ξ_j` are skipped.
pub fn arch_pss_radius(xi: &ArchRoots, j: usize, eps: f64) -> Result<f64> {
    if j >= xi.len() {
        return Err(LabError::InvalidInput(format!("index {j} out of range")));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(LabError::InvalidInput(format!("ε = {eps} is outside (0, 1]")));
    }
    Ok(radius_unchecked(xi, j, eps))
}

/// `λ^{1/n} r(ε) ≤ r(λε) ≤ λ r(ε)` for every root, relative tolerance `tol`.
pub fn scaling_holds(xi: &ArchRoots, eps: f64, lambda: f64, tol: f64) -> Result<bool> {
    let n = xi.len() as f64;
    for j in 0..xi.len() {
        let r = arch_pss_radius(xi, j, eps)?;
        let r_big = radius_unchecked(xi, j, eps * lambda);
        if lambda.powf(1.0 / n) * r > r_big * (1.0 + tol) || r_big > lambda * r * (1.0 + tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The radius formula without the `ε ≤ 1` restriction, which the scaling bound steps over.
fn radius_unchecked(xi: &ArchRoots, j: usize, eps: f64) -> f64 {
    let n = xi.len();
    let dist: Vec<f64> = xi.roots.iter().map(|r| (xi.roots[j] - r).norm()).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask & (1 << j) == 0 {
            continue;
        }
        let size = mask.count_ones() as f64;
        let denom: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| dist[i]).product();
        if denom > 0.0 {
            best = best.min((eps / denom).powf(1.0 / size));
        }
    }
    best
}

/// `(r_j, v, λ r_j)` where `v` is the cluster formula evaluated on
/// `C_{j,λ} = {ξ_i : |ξ_i − ξ_j| ≤ λ r_j}`; expected `r_j ≤ v ≤ λ r_j`.
pub fn approx_self_ref(xi: &ArchRoots, j: usize, eps: f64, lambda: f64) -> Result<(f64, f64, f64)> {
    let r = arch_pss_radius(xi, j, eps)?;
    let mut size = 0;
    let mut denom = 1.0;
    for z in &xi.roots {
        let d = (xi.roots[j] - z).norm();
        if d <= lambda * r {
            size += 1;
        } else {
            denom *= d;
        }
    }
    let v = (eps / denom).powf(1.0 / size as f64);
    Ok((r, v, lambda * r))
}

/// Sampling density for [`sandwich_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    /// Points per axis of the uniform grid on `[-2, 2]` or `[-2, 2]²`.
    pub per_axis: usize,
    /// Radial scales per root, log-spaced from `2^{-n-2} r_j` to `2^{n+2} r_j`.
    pub radial: usize,
    /// Directions per scale in the complex case.
    pub angular: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        Self {
            per_axis: 201,
            radial: 48,
            angular: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub samples: u64,
    /// Points inside `∪ B(ξ_j, 2^{-n} r_j)` with `|P(z)| > ε`.
    pub inner_violations: u64,
    /// Points with `|P(z)| ≤ ε` outside `∪ B(ξ_j, 2^n r_j)`.
    pub outer_violations: u64,
    /// Points of the sublevel set that were sampled.
    pub sublevel_hits: u64,
    pub witnesses: Vec<Complex64>,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.inner_violations == 0 && self.outer_violations == 0
    }
}

/// Samples the plane (or line) and checks
/// `∪ B(ξ_j, 2^{-n} r_j) ⊆ {|P| ≤ ε} ⊆ ∪ B(ξ_j, 2^n r_j)` pointwise.
pub fn sandwich_check(xi: &ArchRoots, eps: f64, grid: SampleGrid, tol: f64) -> Result<SandwichReport> {
    let n = xi.len();
    let radii: Vec<f64> = (0..n).map(|j| arch_pss_radius(xi, j, eps)).collect::<Result<_>>()?;
    let scale = 2f64.powi(n as i32);
    let mut points = Vec::new();
    let axis = |k: usize| -2.0 + 4.0 * k as f64 / (grid.per_axis.max(2) - 1) as f64;
    match xi.field {
        Field::Real => points.extend((0..grid.per_axis).map(|k| Complex64::new(axis(k), 0.0))),
        Field::Complex => {
            for a in 0..grid.per_axis {
                for b in 0..grid.per_axis {
                    points.push(Complex64::new(axis(a), axis(b)));
                }
            }
        }
    }
    let lo = (1.0 / (4.0 * scale)).ln();
    let hi = (4.0 * scale).ln();
    for (j, &r) in radii.iter().enumerate() {
        for k in 0..grid.radial {
            let f = (lo + (hi - lo) * k as f64 / (grid.radial.max(2) - 1) as f64).exp();
            match xi.field {
                Field::Real => {
                    points.push(xi.roots[j] + f * r);
                    points.push(xi.roots[j] - f * r);
                }
                Field::Complex => {
                    for a in 0..grid.angular {
                        let theta = TAU * (a as f64 + 0.5 * (k % 2) as f64) / grid.angular as f64;
                        points.push(xi.roots[j] + Complex64::from_polar(f * r, theta));
                    }
                }
            }
        }
        // The boundaries of both balls.
        for f in [1.0 / scale, scale] {
            points.push(xi.roots[j] + f * r);
        }
    }

    let mut report = SandwichReport {
        samples: points.len() as u64,
        inner_violations: 0,
        outer_violations: 0,
        sublevel_hits: 0,
        witnesses: Vec::new(),
    };
    for z in points {
        let value = xi.eval(z).norm();
        let nearest = radii
            .iter()
            .zip(&xi.roots)
            .map(|(r, c)| (z - c).norm() / r)
            .fold(f64::INFINITY, f64::min);
        let mut bad = false;
        if nearest <= 1.0 / scale && value > eps * (1.0 + tol) {
            report.inner_violations += 1;
            bad = true;
        }
        if value <= eps {
            report.sublevel_hits += 1;
            if nearest > scale * (1.0 + tol) {
                report.outer_violations += 1;
                bad = true;
            }
        }
        if bad && report.witnesses.len() < 8 {
            report.witnesses.push(z);
        }
    }
    Ok(report)
}

fn random_point<R: Rng + ?Sized>(rng: &mut R, field: Field, radius: f64) -> Complex64 {
    match field {
        Field::Real => Complex64::new(rng.random_range(-radius..=radius), 0.0),
        Field::Complex => Complex64::from_polar(radius * rng.random::<f64>().sqrt(), TAU * rng.random::<f64>()),
    }
}

/// Roots with repeated entries and tight clusters at scales down to `1e-6`.
pub fn random_arch_roots<R: Rng + ?Sized>(rng: &mut R, field: Field, n: usize) -> Result<ArchRoots> {
    let mut roots: Vec<Complex64> = Vec::with_capacity(n);
    for _ in 0..n {
        let z = if roots.is_empty() {
            random_point(rng, field, 1.0)
        } else {
            let pick = roots[rng.random_range(0..roots.len())];
            match rng.random_range(0..10) {
                0..=2 => pick,
                3..=5 => {
                    let scale = 10f64.powf(-rng.random_range(1.0..6.0));
                    pick + random_point(rng, field, scale)
                }
                _ => random_point(rng, field, 1.0),
            }
        };
        let norm = z.norm();
        roots.push(if norm > 1.0 { z / norm } else { z });
    }
    ArchRoots::new(field, roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn radius_examples() {
        let xi = ArchRoots::real(&[0.3, 0.3, 0.3]).unwrap();
        for j in 0..3 {
            assert!((arch_pss_radius(&xi, j, 1e-3).unwrap() - 0.1).abs() < 1e-12);
        }
        let xi = ArchRoots::real(&[0.0, 1.0]).unwrap();
        assert!((arch_pss_radius(&xi, 0, 1e-4).unwrap() - 1e-4).abs() < 1e-18);
        assert!(arch_pss_radius(&xi, 0, 0.0).is_err());
        assert!(ArchRoots::real(&[1.5]).is_err());
    }

    #[test]
    fn sandwich_examples() {
        let single = ArchRoots::complex(&[Complex64::new(0.2, -0.1)]).unwrap();
        let r = arch_pss_radius(&single, 0, 1e-2).unwrap();
        assert!((r - 1e-2).abs() < 1e-15);
        assert!(sandwich_check(&single, 1e-2, SampleGrid::default(), 1e-9).unwrap().holds());

        let repeated = ArchRoots::real(&[-0.5; 4]).unwrap();
        let rep = sandwich_check(&repeated, 1e-4, SampleGrid::default(), 1e-9).unwrap();
        assert!(rep.holds());
        assert!(rep.sublevel_hits > 0);
    }

    #[test]
    fn random_sandwich_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in 0..40 {
            let field = if k % 2 == 0 { Field::Real } else { Field::Complex };
            let xi = random_arch_roots(&mut rng, field, 1 + k % 5).unwrap();
            for eps in [1e-2, 1e-4, 1e-6] {
                let rep = sandwich_check(&xi, eps, SampleGrid::default(), 1e-9).unwrap();
                assert!(rep.holds(), "{xi:?} {eps} {rep:?}");
                for lambda in [2.0, 10.0, 100.0] {
                    assert!(scaling_holds(&xi, eps, lambda, 1e-12).unwrap());
                }
            }
        }
    }

    #[test]
    fn approximate_self_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..100 {
            let xi = random_arch_roots(&mut rng, Field::Complex, 1 + k % 5).unwrap();
            for j in 0..xi.len() {
                for lambda in [1.0, 2.0, 4.0] {
                    let (r, v, hi) = approx_self_ref(&xi, j, 1e-3, lambda).unwrap();
                    assert!(r <= v * (1.0 + 1e-12) && v <= hi * (1.0 + 1e-12), "{r} {v} {hi}");
                }
            }
        }
    }
}
