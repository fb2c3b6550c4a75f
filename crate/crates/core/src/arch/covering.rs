//! Paired Vitali selection for two mutually covering ball families.
//!
//! Step A is the recursive pairing: take the largest surviving ball on either
//! side, pair it with the largest ball on the other side whose `λ`-dilate meets
//! it, then drop every survivor meeting `C_ℓ ρ^m` times the new pair, with `m`
//! the smallest value at which the survivor sets stop shrinking. Step B runs
//! [`strong_sep_select`] on dilates of the chosen `X` balls and keeps the
//! matching `Y` balls.
//!
//! The output constant `R` is computed from the run rather than fixed in
//! advance; it always lies below an envelope that depends only on `(n, λ, d)`.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::balls::{strong_sep_select, EuclBall, StrongSep};
use crate::error::{LabError, Result};

const TOL: f64 = 1e-9;

/// Constants of the construction for `n` balls per side in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VitaliParams {
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
    /// `λ n^{1/d}`: radius ratio forced by volume counting.
    pub c: f64,
    /// `2C + λ`: comparability of paired balls.
    pub c_bar: f64,
    /// `max(2 λ C̄², 8 λ C̄)`: separation parameter of step A.
    pub rho: f64,
    /// `6 C̄²`: separation factor handed to the strong selection.
    pub sep: f64,
    /// Upper bound for the step-A covering dilation.
    pub cover_bound: f64,
    /// `log10` of the upper bound for the returned `R`.
    pub log10_r_envelope: f64,
}

impl VitaliParams {
    pub fn new(n: usize, d: usize, lambda: f64) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(LabError::InvalidInput("n and d must be positive".into()));
        }
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(LabError::InvalidInput(format!("λ = {lambda} must be at least 1")));
        }
        let c = lambda * (n as f64).powf(1.0 / d as f64);
        let c_bar = 2.0 * c + lambda;
        let rho = (2.0 * lambda * c_bar * c_bar).max(8.0 * lambda * c_bar);
        let sep = 6.0 * c_bar * c_bar;
        let cover_bound =
            2.0 * c_bar * (lambda * (rho.powi(2 * n as i32) + 2.0 * c) + 2.0 * c * c_bar);
        if !cover_bound.is_finite() {
            return Err(LabError::InvalidInput(format!(
                "constants overflow for n = {n}, λ = {lambda}"
            )));
        }
        let log10_r_envelope = (4.0 * c_bar * c_bar * cover_bound).log10()
            + (n as f64 - 1.0) * (3.0 * sep).log10();
        Ok(Self {
            n,
            d,
            lambda,
            c,
            c_bar,
            rho,
            sep,
            cover_bound,
            log10_r_envelope,
        })
    }
}

/// How the mutual-covering hypothesis was confirmed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCheck {
    /// Every ball sits inside a single `λ`-dilate from the other side.
    pub ballwise: bool,
    /// Points tested for the balls that needed a union.
    pub sampled_points: u64,
}

fn probe_points(b: &EuclBall) -> Vec<Vec<f64>> {
    let d = b.dim();
    let mut dirs: Vec<Vec<f64>> = vec![vec![0.0; d]];
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut v = vec![0.0; d];
            v[i] = s;
            dirs.push(v);
        }
    }
    for mask in 0..(1u32 << d) {
        let v = (0..d)
            .map(|i| if mask & (1 << i) != 0 { 1.0 } else { -1.0 } / (d as f64).sqrt())
            .collect();
        dirs.push(v);
    }
    let mut out = Vec::new();
    for scale in [0.5, 1.0] {
        for v in &dirs {
            out.push(b.center().iter().zip(v).map(|(c, u)| c + scale * b.radius() * u).collect());
        }
    }
    out
}

/// `∪ B_X ⊆ ∪ λ B_Y` and `∪ B_Y ⊆ ∪ λ B_X`, confirmed ball by ball where
/// possible and otherwise on probe points.
pub fn check_mutual_covering(bx: &[EuclBall], by: &[EuclBall], lambda: f64) -> Result<CoverCheck> {
    let mut check = CoverCheck {
        ballwise: true,
        sampled_points: 0,
    };
    for (from, to, side) in [(bx, by, "X"), (by, bx, "Y")] {
        for (i, b) in from.iter().enumerate() {
            if to.iter().any(|t| t.dilate(lambda).contains(b, TOL)) {
                continue;
            }
            check.ballwise = false;
            for z in probe_points(b) {
                check.sampled_points += 1;
                if !to.iter().any(|t| t.dilate(lambda).contains_point(&z, TOL)) {
                    return Err(LabError::Hypothesis(format!(
                        "ball {side}{i} is not covered by the λ-dilates of the other family (point {z:?})"
                    )));
                }
            }
        }
    }
    Ok(check)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VitaliOutcome {
    pub params: VitaliParams,
    /// `(index in B_X, index in B_Y)` for each selected pair.
    pub pairs: Vec<(usize, usize)>,
    pub r: f64,
    pub step_a_pairs: Vec<(usize, usize)>,
    /// `C_1, …, C_L`.
    pub step_a_constants: Vec<f64>,
    /// Dilation with which the step-A pairs cover both families.
    pub cover_dilation: f64,
    pub separation: StrongSep,
    pub precondition: CoverCheck,
    pub trace: Vec<String>,
}

fn invariant(message: String, trace: &[String]) -> LabError {
    LabError::AlgorithmInvariant {
        message,
        trace: trace.to_vec(),
    }
}

fn argmax_radius(family: &[EuclBall], members: &[usize]) -> Option<usize> {
    members
        .iter()
        .copied()
        .max_by(|&a, &b| family[a].radius().total_cmp(&family[b].radius()).then(b.cmp(&a)))
}

/// Survivors that avoid `factor · anchor`.
fn avoiding(family: &[EuclBall], members: &[usize], anchor: &EuclBall, factor: f64) -> Vec<usize> {
    let big = anchor.dilate(factor);
    members.iter().copied().filter(|&i| !family[i].intersects(&big)).collect()
}

pub fn vitali_variant(bx: &[EuclBall], by: &[EuclBall], lambda: f64) -> Result<VitaliOutcome> {
    if bx.is_empty() || by.is_empty() {
        return Err(LabError::InvalidInput("both families must be nonempty".into()));
    }
    let d = bx[0].dim();
    if bx.iter().chain(by).any(|b| b.dim() != d) {
        return Err(LabError::InvalidInput("balls must share one dimension".into()));
    }
    let n = bx.len().max(by.len());
    let params = VitaliParams::new(n, d, lambda)?;
    let precondition = check_mutual_covering(bx, by, lambda)?;
    let (c, c_bar, rho) = (params.c, params.c_bar, params.rho);

    let mut trace = Vec::new();
    let mut surv_x: Vec<usize> = (0..bx.len()).collect();
    let mut surv_y: Vec<usize> = (0..by.len()).collect();
    let mut c_prev = 1.0;
    let mut step_a_pairs = Vec::new();
    let mut step_a_constants = Vec::new();

    while !surv_x.is_empty() && !surv_y.is_empty() {
        let xs = argmax_radius(bx, &surv_x).expect("nonempty");
        let ys = argmax_radius(by, &surv_y).expect("nonempty");
        let x_leads = bx[xs].radius() >= by[ys].radius();
        let (ix, iy) = if x_leads {
            let meeting: Vec<usize> = surv_y
                .iter()
                .copied()
                .filter(|&k| by[k].dilate(lambda).intersects(&bx[xs]))
                .collect();
            let k = argmax_radius(by, &meeting).ok_or_else(|| {
                invariant(format!("no surviving λ·B_Y meets X{xs}"), &trace)
            })?;
            (xs, k)
        } else {
            let meeting: Vec<usize> = surv_x
                .iter()
                .copied()
                .filter(|&k| bx[k].dilate(lambda).intersects(&by[ys]))
                .collect();
            let k = argmax_radius(bx, &meeting).ok_or_else(|| {
                invariant(format!("no surviving λ·B_X meets Y{ys}"), &trace)
            })?;
            (k, ys)
        };
        let (lead, other) = if x_leads {
            (bx[ix].radius(), by[iy].radius())
        } else {
            (by[iy].radius(), bx[ix].radius())
        };
        if lead > c * other * (1.0 + TOL) {
            return Err(invariant(
                format!("radius ratio {} exceeds C = {c} for X{ix}/Y{iy}", lead / other),
                &trace,
            ));
        }
        if !by[iy].dilate(c_bar).contains(&bx[ix], TOL) || !bx[ix].dilate(c_bar).contains(&by[iy], TOL) {
            return Err(invariant(format!("X{ix} and Y{iy} are not C̄-comparable"), &trace));
        }

        let mut chosen = None;
        for m in 0..=2 * n as i32 {
            let f0 = c_prev * rho.powi(m);
            let f1 = f0 * rho;
            let sx = avoiding(bx, &surv_x, &bx[ix], f0);
            let sy = avoiding(by, &surv_y, &by[iy], f0);
            if sx == avoiding(bx, &surv_x, &bx[ix], f1) && sy == avoiding(by, &surv_y, &by[iy], f1) {
                chosen = Some((m, f0, sx, sy));
                break;
            }
        }
        let (m, c_next, sx, sy) = chosen.ok_or_else(|| invariant("no stabilising m in [0, 2n]".into(), &trace))?;
        trace.push(format!(
            "pair {}: X{ix} (r={:.3e}) with Y{iy} (r={:.3e}), m={m}, C={c_next:.3e}, survivors {}+{}",
            step_a_pairs.len() + 1,
            bx[ix].radius(),
            by[iy].radius(),
            sx.len(),
            sy.len()
        ));
        step_a_pairs.push((ix, iy));
        step_a_constants.push(c_next);
        c_prev = c_next;
        surv_x = sx;
        surv_y = sy;
    }

    // Smallest dilation with which single step-A balls cover each family.
    let mut cover_dilation: f64 = 1.0;
    for (family, side) in [(bx, 0), (by, 1)] {
        for b in family {
            let best = step_a_pairs
                .iter()
                .map(|&(i, k)| if side == 0 { &bx[i] } else { &by[k] })
                .map(|anchor| anchor.dilation_to_contain(b))
                .fold(f64::INFINITY, f64::min);
            cover_dilation = cover_dilation.max(best);
        }
    }
    if cover_dilation > params.cover_bound * (1.0 + TOL) {
        return Err(invariant(
            format!("covering dilation {cover_dilation:.3e} exceeds the bound {:.3e}", params.cover_bound),
            &trace,
        ));
    }

    let widen = 2.0 * c_bar * cover_dilation;
    let dilated: Vec<EuclBall> = step_a_pairs.iter().map(|&(i, _)| bx[i].dilate(widen)).collect();
    let separation = strong_sep_select(&dilated, params.sep)?;
    let r = 2.0 * c_bar * separation.lambda * widen;
    let pairs = separation.selected.iter().map(|&s| step_a_pairs[s]).collect();
    trace.push(format!(
        "strong separation: {} of {} pairs after {} rounds, R={r:.3e}",
        separation.selected.len(),
        step_a_pairs.len(),
        separation.rounds
    ));
    if r.log10() > params.log10_r_envelope + 1e-9 {
        return Err(invariant(format!("R = {r:.3e} exceeds its envelope"), &trace));
    }

    Ok(VitaliOutcome {
        params,
        pairs,
        r,
        step_a_pairs,
        step_a_constants,
        cover_dilation,
        separation,
        precondition,
        trace,
    })
}

/// The three output properties, each checked directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VitaliVerification {
    /// `2R`-dilates of the selected balls are pairwise disjoint on each side.
    pub separated: bool,
    /// Each ball of each family lies in the `R`-dilate of a selected ball on its side.
    pub covering: bool,
    /// `B_X^ℓ ⊆ R·B_Y^ℓ` and `B_Y^ℓ ⊆ R·B_X^ℓ`.
    pub comparable: bool,
}

impl VitaliVerification {
    pub fn holds(&self) -> bool {
        self.separated && self.covering && self.comparable
    }
}

pub fn verify_vitali_output(
    bx: &[EuclBall],
    by: &[EuclBall],
    pairs: &[(usize, usize)],
    r: f64,
    tol: f64,
) -> VitaliVerification {
    let mut separated = true;
    for (a, &(i, k)) in pairs.iter().enumerate() {
        for &(j, l) in &pairs[a + 1..] {
            separated &= bx[i].dilate(2.0 * r).disjoint_within(&bx[j].dilate(2.0 * r), tol);
            separated &= by[k].dilate(2.0 * r).disjoint_within(&by[l].dilate(2.0 * r), tol);
        }
    }
    let covering = bx
        .iter()
        .all(|b| pairs.iter().any(|&(i, _)| bx[i].dilate(r).contains(b, tol)))
        && by
            .iter()
            .all(|b| pairs.iter().any(|&(_, k)| by[k].dilate(r).contains(b, tol)));
    let comparable = pairs
        .iter()
        .all(|&(i, k)| by[k].dilate(r).contains(&bx[i], tol) && bx[i].dilate(r).contains(&by[k], tol));
    VitaliVerification {
        separated,
        covering,
        comparable,
    }
}

fn random_ball<R: Rng + ?Sized>(rng: &mut R, d: usize, parent: Option<&EuclBall>) -> EuclBall {
    match parent {
        Some(p) => {
            let r = p.radius() * rng.random_range(0.05..0.9);
            let center = p
                .center()
                .iter()
                .map(|c| c + rng.random_range(-1.0..1.0) * (p.radius() - r) / (d as f64).sqrt())
                .collect();
            EuclBall::new(center, r).expect("positive radius")
        }
        None => {
            let center = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            EuclBall::new(center, 10f64.powf(rng.random_range(-2.5..-0.3))).expect("positive radius")
        }
    }
}

/// Two families of at most `n` balls in `R^d`, each ball inside a single
/// `λ`-dilate of a ball from the other family.
pub fn random_family_pair<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    lambda: f64,
) -> (Vec<EuclBall>, Vec<EuclBall>) {
    let base = rng.random_range(1..=n);
    let mut bx: Vec<EuclBall> = Vec::new();
    for _ in 0..base {
        let parent = if !bx.is_empty() && rng.random_bool(0.3) {
            Some(bx[rng.random_range(0..bx.len())].clone())
        } else {
            None
        };
        bx.push(random_ball(rng, d, parent.as_ref()));
    }
    // Partner for each X ball: radius s·r and offset δ with |δ| + r ≤ λ s r and |δ| + s r ≤ λ r.
    let mut by: Vec<EuclBall> = bx
        .iter()
        .map(|b| {
            let s = lambda.powf(rng.random_range(-0.5..=0.5));
            let slack = (lambda * s - 1.0).min(lambda - s).max(0.0) * b.radius();
            let mut dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            let len = slack * rng.random::<f64>() * 0.999;
            dir.iter_mut().for_each(|v| *v *= len / norm);
            let center = b.center().iter().zip(&dir).map(|(c, v)| c + v).collect();
            EuclBall::new(center, b.radius() * s).expect("positive radius")
        })
        .collect();
    // Extra balls nested inside existing ones keep the covering intact.
    while bx.len() < n && rng.random_bool(0.3) {
        let parent = bx[rng.random_range(0..bx.len())].clone();
        bx.push(random_ball(rng, d, Some(&parent)));
    }
    while by.len() < n && rng.random_bool(0.3) {
        let parent = by[rng.random_range(0..by.len())].clone();
        by.push(random_ball(rng, d, Some(&parent)));
    }
    bx.shuffle(rng);
    by.shuffle(rng);
    (bx, by)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ball(c: &[f64], r: f64) -> EuclBall {
        EuclBall::new(c.to_vec(), r).unwrap()
    }

    #[test]
    fn single_ball() {
        let b = vec![ball(&[0.0, 0.0], 1.0)];
        let out = vitali_variant(&b, &b, 1.0).unwrap();
        assert_eq!(out.pairs, vec![(0, 0)]);
        assert!(verify_vitali_output(&b, &b, &out.pairs, out.r, 1e-9).holds());
    }

    #[test]
    fn identical_families_pair_each_ball_with_itself() {
        let fam = vec![ball(&[0.0], 0.1), ball(&[5.0], 0.3), ball(&[0.05], 0.01)];
        let out = vitali_variant(&fam, &fam, 1.0).unwrap();
        for &(i, k) in &out.step_a_pairs {
            assert_eq!(i, k);
        }
        assert!(verify_vitali_output(&fam, &fam, &out.pairs, out.r, 1e-9).holds());
    }

    #[test]
    fn precondition_failure() {
        let bx = vec![ball(&[0.0], 1.0)];
        let by = vec![ball(&[10.0], 1.0)];
        assert!(matches!(vitali_variant(&bx, &by, 2.0), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn envelope_depends_only_on_parameters() {
        let a = VitaliParams::new(5, 2, 2.0).unwrap();
        let b = VitaliParams::new(5, 2, 2.0).unwrap();
        assert_eq!(a, b);
        assert!(VitaliParams::new(5, 2, 0.5).is_err());
    }

    #[test]
    fn random_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for k in 0..200 {
            let n = 1 + k % 8;
            let d = 1 + k % 3;
            let lambda = [1.0, 2.0, 3.0][k % 3];
            let (bx, by) = random_family_pair(&mut rng, n, d, lambda);
            let out = vitali_variant(&bx, &by, lambda).unwrap();
            assert!(out.precondition.ballwise);
            let v = verify_vitali_output(&bx, &by, &out.pairs, out.r, 1e-9);
            assert!(v.holds(), "{v:?} {:?}", out.trace);
            assert!((out.separation.rounds as usize) < out.step_a_pairs.len().max(1));
            assert!(out.r.log10() <= out.params.log10_r_envelope + 1e-9);
        }
    }
}
