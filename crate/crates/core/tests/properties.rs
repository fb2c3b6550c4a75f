use num::rational::Ratio;
use num::complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use momentlab::arch::{
    arch_match, constructive_instance, random_arch_roots, random_family_pair, sigma_bound, triangle_dilate,
    verify_vitali_output, vitali_variant, ArchMatchStatus, EuclBall, Field, VitaliParams,
};
use momentlab::field::{ball_relation, char_e, BallRelation, PrimeModulus, UltraBall, ValExp};
use momentlab::harness::{CampaignConfig, CampaignKind};
use momentlab::matcher::{check_system, match_permutation, sigma_is_sound, CongruenceInstance, MatchStatus};
use momentlab::pss::{pss_radius, pss_radius_nested, RootTuple};
use momentlab::sqfn::{extension_op, verify_sf_inequality, Ensemble, GridFunction};
use momentlab::symmetric::{
    elementary_symmetric, eval_poly, monic_from_roots, newton_power_to_elementary, power_sums, SymTuple,
};

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![2u64, 3, 5, 7])
}

fn odd_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![5u64, 7, 11, 13])
}

proptest! {
    #[test]
    fn ultrametric_inequality(p in prime(), m in 1u32..6, x in any::<u32>(), y in any::<u32>(), z in any::<u32>()) {
        let md = PrimeModulus::new(p, m).unwrap();
        let (x, y, z) = (md.residue(x as i128), md.residue(y as i128), md.residue(z as i128));
        prop_assert!((x - z).val() >= (x - y).val().min((y - z).val()));
    }

    #[test]
    fn character_is_additive(p in prime(), k in 1i32..5, a in -1000i128..1000, b in -1000i128..1000) {
        let lhs = char_e(p, a + b, k).unwrap();
        let rhs = char_e(p, a, k).unwrap() * char_e(p, b, k).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn ball_relation_matches_enumeration(
        p in prime(), m in 1u32..5, c1 in any::<u16>(), c2 in any::<u16>(), k1 in 0u32..5, k2 in 0u32..5,
    ) {
        let md = PrimeModulus::new(p, m).unwrap();
        let ball = |c: u16, k: u32| UltraBall::new(md.residue(c as i128), ValExp::exact(k.min(m) as i64)).unwrap();
        let (a, b) = (ball(c1, k1), ball(c2, k2));
        let mut in_a = Vec::new();
        let mut in_b = Vec::new();
        for z in md.residues() {
            in_a.push(a.contains(&z).unwrap());
            in_b.push(b.contains(&z).unwrap());
        }
        let a_sub_b = in_a.iter().zip(&in_b).all(|(&x, &y)| !x || y);
        let b_sub_a = in_a.iter().zip(&in_b).all(|(&x, &y)| !y || x);
        let meet = in_a.iter().zip(&in_b).any(|(&x, &y)| x && y);
        let expected = match (a_sub_b, b_sub_a, meet) {
            (true, true, _) => BallRelation::Equal,
            (true, false, _) => BallRelation::ASubsetB,
            (false, true, _) => BallRelation::BSubsetA,
            (false, false, false) => BallRelation::Disjoint,
            (false, false, true) => unreachable!("ultrametric balls cannot overlap partially"),
        };
        prop_assert_eq!(ball_relation(&a, &b).unwrap(), expected);
    }

    #[test]
    fn newton_round_trip_and_symmetry(
        p in odd_prime(), m in 1u32..7, vals in prop::collection::vec(any::<u32>(), 1..5), rot in 0usize..4,
    ) {
        prop_assume!((vals.len() as u64) < p);
        let md = PrimeModulus::new(p, m).unwrap();
        let ints: Vec<i128> = vals.iter().map(|&v| v as i128).collect();
        let x = SymTuple::from_ints(md, &ints).unwrap();
        prop_assert_eq!(newton_power_to_elementary(&power_sums(&x)).unwrap(), elementary_symmetric(&x));
        let n = x.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let px = x.permuted(&perm);
        prop_assert_eq!(power_sums(&px), power_sums(&x));
        prop_assert_eq!(elementary_symmetric(&px), elementary_symmetric(&x));
        let coeffs = monic_from_roots(&x);
        for &r in x.entries() {
            prop_assert!(eval_poly(&coeffs, r).is_zero());
        }
    }

    #[test]
    fn congruent_power_sums_give_congruent_elementary(
        p in odd_prime(), e in 1u32..5, vals in prop::collection::vec(any::<u16>(), 1..5),
        shifts in prop::collection::vec(any::<u16>(), 4),
    ) {
        prop_assume!((vals.len() as u64) < p);
        let md = PrimeModulus::new(p, 6).unwrap();
        let pe = (p as i128).pow(e);
        let x: Vec<i128> = vals.iter().map(|&v| v as i128).collect();
        let y: Vec<i128> = x.iter().rev().zip(&shifts).map(|(&v, &s)| v + pe * s as i128).collect();
        let (x, y) = (SymTuple::from_ints(md, &x).unwrap(), SymTuple::from_ints(md, &y).unwrap());
        for (a, b) in power_sums(&x).iter().zip(power_sums(&y)) {
            prop_assert!(a.congruent(&b, e).unwrap());
        }
        let ex = newton_power_to_elementary(&power_sums(&x)).unwrap();
        let ey = newton_power_to_elementary(&power_sums(&y)).unwrap();
        for (a, b) in ex.iter().zip(&ey) {
            prop_assert!(a.congruent(b, e).unwrap());
        }
    }

    #[test]
    fn pss_radius_bounds(p in prop::sample::select(vec![5u64, 7]), vals in prop::collection::vec(0u32..2401, 1..5)) {
        let md = PrimeModulus::new(p, 6).unwrap();
        let ints: Vec<i128> = vals.iter().map(|&v| v as i128).collect();
        let xi = RootTuple::from_ints(md, &ints).unwrap();
        let n = xi.len() as i64;
        for j in 0..xi.len() {
            let mut last = None;
            for level in 1..=6u32 {
                let r = pss_radius(&xi, j, level).unwrap();
                prop_assert!(r.exponent >= Ratio::new(level as i64, n));
                prop_assert_eq!(r.exponent, pss_radius_nested(&xi, j, level).unwrap().exponent);
                if let Some(prev) = last {
                    prop_assert!(r.exponent >= prev);
                }
                last = Some(r.exponent);
            }
        }
    }

    #[test]
    fn permuted_tuples_are_matched(
        p in prop::sample::select(vec![3u64, 5, 7]), a in 1u32..3, vals in prop::collection::vec(any::<u16>(), 2..4),
        lifts in prop::collection::vec(any::<u8>(), 3), rot in 1usize..3,
    ) {
        let n = vals.len();
        prop_assume!((n as u64) < p);
        let big = (p as i128).pow(a * n as u32);
        let x: Vec<i128> = vals.iter().map(|&v| v as i128).collect();
        let y: Vec<i128> = (0..n).map(|i| x[(i + rot) % n] + big * lifts[i] as i128).collect();
        let inst = CongruenceInstance::from_ints(p, a, &x, &y).unwrap();
        prop_assert!(check_system(&inst));
        let res = match_permutation(&inst).unwrap();
        prop_assert_eq!(res.status, MatchStatus::Matched);
        prop_assert!(sigma_is_sound(&inst, &res.sigma));

        let perm: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let px: Vec<i128> = perm.iter().map(|&i| x[i]).collect();
        let pinst = CongruenceInstance::from_ints(p, a, &px, &y).unwrap();
        let pres = match_permutation(&pinst).unwrap();
        let pa = p.pow(a);
        let yr = inst.y().reps();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(yr[pres.sigma[k]] % pa, yr[res.sigma[i]] % pa);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sf_scaling_and_orthogonality(seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0, alpha in 1u32..3) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Ensemble::Gaussian.sample(3, 2 * alpha, alpha, &mut rng).unwrap();
        let base = verify_sf_inequality(&f, 2, 2, alpha).unwrap();
        let scaled = verify_sf_inequality(&f.scaled(Complex64::new(re, im)), 2, 2, alpha).unwrap();
        prop_assert!((base.ratio - scaled.ratio).abs() <= 1e-12);
        prop_assert!(base.holds(1e-9));
        let m1 = verify_sf_inequality(&f, 2, 1, alpha).unwrap();
        prop_assert!((m1.ratio - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn extension_is_periodic_in_integral_shifts(seed in any::<u64>(), a in prop::collection::vec(-500i128..500, 2), u in prop::collection::vec(-3i128..3, 2)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Ensemble::Gaussian.sample(5, 2, 1, &mut rng).unwrap();
        let q = f.grid() as i128;
        let shifted: Vec<i128> = a.iter().zip(&u).map(|(ai, ui)| ai + ui * q).collect();
        let d = extension_op(&f, &a).unwrap() - extension_op(&f, &shifted).unwrap();
        prop_assert!(d.norm() <= 1e-12);
    }

    #[test]
    fn triangle_dilation_contains(c1 in prop::collection::vec(-1.0f64..1.0, 2), c2 in prop::collection::vec(-1.0f64..1.0, 2), r1 in 0.05f64..1.0, r2 in 0.05f64..1.0) {
        let b1 = EuclBall::new(c1, r1).unwrap();
        let b2 = EuclBall::new(c2, r2).unwrap();
        prop_assume!(b1.intersects(&b2));
        let big = triangle_dilate(&b1, &b2);
        prop_assert!(big.contains(&b1, 1e-12));
        prop_assert!((big.radius() - (2.0 * r1 + r2)).abs() <= 1e-12);
    }

    #[test]
    fn vitali_output_properties(seed in any::<u64>(), n in 1usize..9, d in 1usize..4, lambda in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (bx, by) = random_family_pair(&mut rng, n, d, lambda);
        let out = vitali_variant(&bx, &by, lambda).unwrap();
        prop_assert!(verify_vitali_output(&bx, &by, &out.pairs, out.r, 1e-9).holds());
        prop_assert!(out.r.log10() <= VitaliParams::new(n, d, lambda).unwrap().log10_r_envelope);
        prop_assert!((out.separation.rounds as usize) < n);
    }

    #[test]
    fn arch_match_is_sound(seed in any::<u64>(), n in 1usize..5, complex in any::<bool>(), big_n in prop::sample::select(vec![1e2, 1e3, 1e4])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = if complex { Field::Complex } else { Field::Real };
        let inst = constructive_instance(&mut rng, field, n, big_n).unwrap();
        let m = arch_match(&inst.x, &inst.y, big_n, 2.0).unwrap();
        prop_assert_eq!(m.status, ArchMatchStatus::Matched);
        let mut seen = m.sigma.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!((m.realised - big_n * sigma_bound(&inst.x, &inst.y, &m.sigma)).abs() <= 1e-12 * big_n);
    }

    #[test]
    fn random_arch_roots_stay_in_unit_ball(seed in any::<u64>(), n in 1usize..8, complex in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let field = if complex { Field::Complex } else { Field::Real };
        let xi = random_arch_roots(&mut rng, field, n).unwrap();
        prop_assert!(xi.roots().iter().all(|z| z.norm() <= 1.0 + 1e-15));
        prop_assert!(complex || xi.roots().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn config_toml_round_trip(seed in any::<u64>(), count in 0usize..1000, ps in prop::collection::vec(prop::sample::select(vec![3u64, 5, 7]), 0..3)) {
        let mut cfg = CampaignConfig::builtin(CampaignKind::Sf);
        cfg.seed = Some(seed >> 1);
        cfg.ensemble.count = count;
        cfg.grid.p = ps;
        let text = toml::to_string(&cfg).unwrap();
        prop_assert_eq!(CampaignConfig::from_toml(&text).unwrap(), cfg);
    }
}

#[test]
fn grid_function_rejects_wrong_length() {
    assert!(GridFunction::new(5, 2, vec![Complex64::new(0.0, 0.0); 24]).is_err());
}
