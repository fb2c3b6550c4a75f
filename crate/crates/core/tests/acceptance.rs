//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use momentlab::arch::{
    arch_match, check_mutual_covering, constructive_instance, random_arch_roots, random_family_pair, sandwich_check,
    scaling_holds, sigma_bound, verify_vitali_output, vitali_variant, ArchMatchStatus, Field, InstanceKind,
    SampleGrid, VitaliParams,
};
use momentlab::field::PrimeModulus;
use momentlab::matcher::brute_force_verify;
use momentlab::pss::{random_clustered_roots, verify_pss_equality, verify_self_ref};
use momentlab::sqfn::{offdiag_scan, verify_sf_batch, Ensemble, GridFunction, SFReport};
use momentlab::symmetric::{elementary_symmetric, newton_power_to_elementary, power_sums, SymTuple};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rng(seed: u64, i: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(momentlab::harness::derive_seed(seed, &[i]))
}

fn sf_rows(p: u64, n: u32, alpha: u32, gaussians: usize, adversarial: bool, seed: u64) -> Vec<SFReport> {
    let res = alpha * n;
    let mut fs: Vec<GridFunction> = (0..gaussians)
        .into_par_iter()
        .map(|i| Ensemble::Gaussian.sample(p, res, alpha, &mut rng(seed, i as u64)).unwrap())
        .collect();
    if adversarial {
        for e in Ensemble::ADVERSARIAL {
            fs.push(e.sample(p, res, alpha, &mut rng(seed, u64::MAX)).unwrap());
        }
    }
    verify_sf_batch(&fs, n, alpha).unwrap().into_iter().flatten().collect()
}

fn ratio_check(rows: &[SFReport], tol: f64) -> Outcome {
    let worst = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let bad = rows.iter().filter(|r| !r.holds(tol)).count();
    let mut by_m: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for r in rows {
        let e = by_m.entry((r.alpha, r.m)).or_insert(f64::MIN);
        *e = e.max(r.ratio);
    }
    let detail = format!("{} rows, max ratio {worst:.12}, max by (α, m) {by_m:?}", rows.len());
    if bad == 0 {
        Ok(detail)
    } else {
        Err(format!("{bad} rows above 1 + {tol:e}; {detail}"))
    }
}

fn ac1(rows: &mut Vec<SFReport>) -> Outcome {
    for alpha in [1, 2] {
        rows.extend(sf_rows(5, 2, alpha, 100, true, 1000 + alpha as u64));
    }
    ratio_check(rows, 1e-9)
}

fn ac2(rows: &mut Vec<SFReport>) -> Outcome {
    rows.extend(sf_rows(5, 3, 1, 20, false, 2000));
    ratio_check(rows, 1e-9)
}

fn ac3(rows: &[SFReport]) -> Outcome {
    let m1: Vec<&SFReport> = rows.iter().filter(|r| r.m == 1).collect();
    let dev = m1.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    let detail = format!("{} m = 1 rows, max |ratio − 1| = {dev:.3e}", m1.len());
    if dev <= 1e-10 && !m1.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac4() -> Outcome {
    let mut parts = Vec::new();
    for (p, n, a) in [(3, 2, 1), (5, 2, 1), (3, 2, 2)] {
        let r = brute_force_verify(p, n, a, None, 0).map_err(|e| e.to_string())?;
        parts.push(format!(
            "({p},{n},{a}): {} pairs, {} solutions, {} failures",
            r.scanned_pairs, r.satisfying_pairs, r.failures
        ));
        if r.sampled || r.failures != 0 || r.scanned_pairs != r.total_pairs {
            return Err(parts.join("; "));
        }
    }
    Ok(parts.join("; "))
}

fn ac5() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for p in [3, 5] {
        let s = offdiag_scan(p, 2, 2, 1).map_err(|e| e.to_string())?;
        ok &= s.near_collisions == 0 && s.matched + s.vanishing == s.tuple_pairs;
        parts.push(format!(
            "p={p}: {} tuple pairs, {} matched, {} vanish, {} near-collisions",
            s.tuple_pairs, s.matched, s.vanishing, s.near_collisions
        ));
    }
    if ok {
        Ok(parts.join("; "))
    } else {
        Err(parts.join("; "))
    }
}

/// `(p, n, E)` with `p ∈ {5, 7}`, `n ≤ 4`, `E ≤ 6`.
fn pss_params(r: &mut ChaCha8Rng) -> (u64, usize, u32) {
    ([5, 7][r.random_range(0..2)], r.random_range(1..=4), r.random_range(1..=6))
}

fn ac6() -> Outcome {
    let failures: Vec<String> = (0..1000u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut r = rng(6000, i);
            let (p, n, e) = pss_params(&mut r);
            let xi = random_clustered_roots(&mut r, PrimeModulus::new(p, e).unwrap(), n).unwrap();
            let rep = verify_pss_equality(&xi, e).unwrap();
            (!rep.holds()).then(|| format!("p={p} E={e} roots={:?}", xi.roots().iter().map(|z| z.rep()).collect::<Vec<_>>()))
        })
        .collect();
    match failures.first() {
        None => Ok("1000 tuples, sublevel set equals ball union in every case".into()),
        Some(w) => Err(format!("{} mismatches, first {w}", failures.len())),
    }
}

fn ac7() -> Outcome {
    let failures = (0..10_000u64)
        .into_par_iter()
        .filter(|&i| {
            let mut r = rng(7000, i);
            let (p, n, e) = pss_params(&mut r);
            let xi = random_clustered_roots(&mut r, PrimeModulus::new(p, e).unwrap(), n).unwrap();
            !verify_self_ref(&xi, e).unwrap()
        })
        .count();
    if failures == 0 {
        Ok("10000 tuples, zero failures".into())
    } else {
        Err(format!("{failures} failures"))
    }
}

fn ac8() -> Outcome {
    let mut cases = 0;
    let mut failures = 0;
    for p in [5u64, 7, 11] {
        for n in 1..(p as usize).min(9) {
            cases += 1;
            failures += (0..10_000u64)
                .into_par_iter()
                .filter(|&i| {
                    let mut r = rng(8000 + p * 100 + n as u64, i);
                    let modulus = PrimeModulus::new(p, 1 + (i % 6) as u32).unwrap();
                    let vals: Vec<i128> = (0..n).map(|_| r.random_range(0..modulus.modulus()) as i128).collect();
                    let x = SymTuple::from_ints(modulus, &vals).unwrap();
                    newton_power_to_elementary(&power_sums(&x)).unwrap() != elementary_symmetric(&x)
                })
                .count();
        }
    }
    let detail = format!("{cases} (p, n) cases × 10000 tuples, M = 1..6, {failures} failures");
    if failures == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac9() -> Outcome {
    let results: Vec<(u64, u64, bool)> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(9000, i);
            let field = if i % 2 == 0 { Field::Real } else { Field::Complex };
            let n = r.random_range(1..=5);
            let xi = random_arch_roots(&mut r, field, n).unwrap();
            let mut samples = 0;
            let mut violations = 0;
            let mut scaling = true;
            for eps in [1e-2, 1e-4, 1e-6] {
                let rep = sandwich_check(&xi, eps, SampleGrid::default(), 1e-9).unwrap();
                samples += rep.samples;
                violations += rep.inner_violations + rep.outer_violations;
                for lambda in [2.0, 10.0, 100.0] {
                    scaling &= scaling_holds(&xi, eps, lambda, 1e-12).unwrap();
                }
            }
            (samples, violations, scaling)
        })
        .collect();
    let samples: u64 = results.iter().map(|r| r.0).sum();
    let violations: u64 = results.iter().map(|r| r.1).sum();
    let scaling_failures = results.iter().filter(|r| !r.2).count();
    let detail = format!(
        "1000 ensembles, {samples} sample points, {violations} sandwich violations, {scaling_failures} scaling failures"
    );
    if violations == 0 && scaling_failures == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac10() -> Outcome {
    let results: Vec<Result<(bool, f64, f64, u32), String>> = (0..1000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(10_000, i);
            let (n, d) = (r.random_range(1..=8), r.random_range(1..=3));
            let lambda = [1.0, 2.0, 3.0][r.random_range(0..3)];
            let (bx, by) = random_family_pair(&mut r, n, d, lambda);
            let pre = check_mutual_covering(&bx, &by, lambda).map_err(|e| e.to_string())?;
            if !pre.ballwise {
                return Err(format!("family {i}: precondition not certified ballwise"));
            }
            let out = vitali_variant(&bx, &by, lambda).map_err(|e| format!("family {i}: {e}"))?;
            let v = verify_vitali_output(&bx, &by, &out.pairs, out.r, 1e-9);
            let envelope = VitaliParams::new(n, d, lambda).unwrap().log10_r_envelope;
            let rounds_ok = (out.separation.rounds as usize) < n.max(1);
            Ok((v.holds() && rounds_ok, out.r.log10(), envelope, out.separation.rounds))
        })
        .collect();
    let mut max_log_r = f64::MIN;
    let mut max_rounds = 0;
    let mut failures = 0;
    for (i, res) in results.iter().enumerate() {
        let (ok, log_r, envelope, rounds) = res.clone().map_err(|e| format!("family {i}: {e}"))?;
        failures += usize::from(!ok || log_r > envelope);
        max_log_r = max_log_r.max(log_r);
        max_rounds = max_rounds.max(rounds);
    }
    let detail = format!("1000 family pairs, {failures} failures, max log10 R = {max_log_r:.2}, max rounds {max_rounds}");
    if failures == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ac11() -> Outcome {
    let results: Vec<(usize, bool, f64, bool)> = (0..10_000u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng(11_000, i);
            let n = 1 + (i % 4) as usize;
            let big_n = [1e2, 1e3, 1e4][(i / 4 % 3) as usize];
            let field = if (i / 12) % 2 == 0 { Field::Real } else { Field::Complex };
            let inst = constructive_instance(&mut r, field, n, big_n).unwrap();
            let m = arch_match(&inst.x, &inst.y, big_n, 2.0).unwrap();
            let recovered = m.status == ArchMatchStatus::Matched
                && sigma_bound(&inst.x, &inst.y, &m.sigma) <= inst.planted_bound * (1.0 + 1e-12);
            (n, recovered, m.realised, inst.kind == InstanceKind::Perturbed)
        })
        .collect();
    let recovered = results.iter().filter(|r| r.1).count();
    let perturbed = results.iter().filter(|r| r.3).count();
    let mut max_by_n: BTreeMap<usize, f64> = BTreeMap::new();
    for r in results.iter().filter(|r| r.1) {
        let e = max_by_n.entry(r.0).or_insert(0.0);
        *e = e.max(r.2);
    }
    let per_n: Vec<String> = max_by_n.iter().map(|(n, v)| format!("n={n}: {v:.4e}")).collect();
    let detail = format!(
        "{recovered}/10000 recovered, {perturbed} perturbed fallbacks, max N·max|x−y| {}",
        per_n.join(", ")
    );
    if recovered == results.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(id: &str, start: Instant, outcome: &Outcome) -> bool {
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(d) => println!("{id} PASS ({secs:.1}s) {d}"),
        Err(d) => println!("{id} FAIL ({secs:.1}s) {d}"),
    }
    outcome.is_ok()
}

fn main() {
    let mut all = true;
    let mut sf = Vec::new();

    let t = Instant::now();
    all &= report("AC1", t, &ac1(&mut sf));
    let t = Instant::now();
    let mut sf_n3 = Vec::new();
    all &= report("AC2", t, &ac2(&mut sf_n3));
    sf.extend(sf_n3);
    let t = Instant::now();
    all &= report("AC3", t, &ac3(&sf));

    let criteria: [Criterion; 8] = [
        ("AC4", ac4),
        ("AC5", ac5),
        ("AC6", ac6),
        ("AC7", ac7),
        ("AC8", ac8),
        ("AC9", ac9),
        ("AC10", ac10),
        ("AC11", ac11),
    ];
    for (id, f) in criteria {
        let t = Instant::now();
        all &= report(id, t, &f());
    }
    if !all {
        std::process::exit(1);
    }
}
