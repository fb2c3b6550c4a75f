use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Closed ball in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclBall {
    center: Vec<f64>,
    radius: f64,
}

impl EuclBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(LabError::InvalidInput("center must be a finite point".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(LabError::InvalidInput(format!("radius {radius} is not positive")));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Same center, radius scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Self {
        Self {
            center: self.center.clone(),
            radius: self.radius * factor,
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains_point(&self, z: &[f64], tol: f64) -> bool {
        let d: f64 = self.center.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        d <= self.radius * (1.0 + tol)
    }

    /// `other ⊆ self`, up to relative tolerance.
    pub fn contains(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) + other.radius <= self.radius * (1.0 + tol)
    }

    /// Smallest `s` with `other ⊆ s · self`.
    pub fn dilation_to_contain(&self, other: &Self) -> f64 {
        (self.distance(other) + other.radius) / self.radius
    }

    /// Closed balls meet.
    pub fn intersects(&self, other: &Self) -> bool {
        self.distance(other) <= self.radius + other.radius
    }

    /// Disjoint, allowing overlap up to relative tolerance.
    pub fn disjoint_within(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) >= (self.radius + other.radius) * (1.0 - tol)
    }
}

/// For meeting balls, the dilate of `b2` with radius `2 rad b1 + rad b2`, which contains `b1`.
pub fn triangle_dilate(b1: &EuclBall, b2: &EuclBall) -> EuclBall {
    EuclBall {
        center: b2.center.clone(),
        radius: 2.0 * b1.radius + b2.radius,
    }
}

fn by_radius_desc(family: &[EuclBall], members: &[usize]) -> Vec<usize> {
    let mut order = members.to_vec();
    order.sort_by(|&a, &b| family[b].radius.total_cmp(&family[a].radius).then(a.cmp(&b)));
    order
}

/// Greedy Vitali selection on the `factor`-dilates of `members`: largest radius
/// first, ties by index, keeping each ball disjoint from those already kept.
/// Returns kept indices in ascending order.
pub fn classical_vitali(family: &[EuclBall], members: &[usize], factor: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for i in by_radius_desc(family, members) {
        let b = family[i].dilate(factor);
        if kept.iter().all(|&k| !family[k].dilate(factor).intersects(&b)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongSep {
    /// Indices into the input family, ascending.
    pub selected: Vec<usize>,
    /// `(3R)^M` for the terminal round `M`.
    pub lambda: f64,
    pub rounds: u32,
}

/// Iterated Vitali selection: round `m` selects among the `R (3R)^m`-dilates
/// until nothing more is dropped. The `λR`-dilates of the output are pairwise
/// disjoint and every input ball lies in the `λ`-dilate of some selected ball.
pub fn strong_sep_select(family: &[EuclBall], r: f64) -> Result<StrongSep> {
    if family.is_empty() {
        return Err(LabError::InvalidInput("empty family".into()));
    }
    if r < 1.0 {
        return Err(LabError::InvalidInput(format!("R = {r} is below 1")));
    }
    let mut current: Vec<usize> = (0..family.len()).collect();
    let mut lambda = 1.0;
    let mut rounds = 0;
    loop {
        let next = classical_vitali(family, &current, r * lambda);
        if next == current {
            return Ok(StrongSep {
                selected: current,
                lambda,
                rounds,
            });
        }
        current = next;
        lambda *= 3.0 * r;
        rounds += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball(c: &[f64], r: f64) -> EuclBall {
        EuclBall::new(c.to_vec(), r).unwrap()
    }

    #[test]
    fn triangle_fact_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut tested = 0;
        while tested < 500 {
            let d = rng.random_range(1..=3);
            let c1: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let c2: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b1 = ball(&c1, rng.random_range(0.01..1.0));
            let b2 = ball(&c2, rng.random_range(0.01..1.0));
            if b1.intersects(&b2) {
                assert!(triangle_dilate(&b1, &b2).contains(&b1, 1e-12));
                tested += 1;
            }
        }
    }

    #[test]
    fn strong_sep_examples() {
        let one = vec![ball(&[0.0], 1.0)];
        let out = strong_sep_select(&one, 5.0).unwrap();
        assert_eq!((out.selected, out.lambda, out.rounds), (vec![0], 1.0, 0));

        let far = vec![ball(&[0.0, 0.0], 1.0), ball(&[100.0, 0.0], 1.0)];
        let out = strong_sep_select(&far, 2.0).unwrap();
        assert_eq!(out.selected, vec![0, 1]);
    }

    #[test]
    fn strong_sep_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let d = rng.random_range(1..=3);
            let family: Vec<EuclBall> = (0..n)
                .map(|_| {
                    let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    ball(&c, 10f64.powf(rng.random_range(-3.0..0.0)))
                })
                .collect();
            let r = rng.random_range(1.0..4.0);
            let out = strong_sep_select(&family, r).unwrap();
            assert!((out.rounds as usize) < n);
            for (a, &i) in out.selected.iter().enumerate() {
                for &j in &out.selected[a + 1..] {
                    let s = out.lambda * r;
                    assert!(family[i].dilate(s).disjoint_within(&family[j].dilate(s), 1e-9));
                }
            }
            for b in &family {
                assert!(out
                    .selected
                    .iter()
                    .any(|&i| family[i].dilate(out.lambda).contains(b, 1e-9)));
            }
        }
    }
}
