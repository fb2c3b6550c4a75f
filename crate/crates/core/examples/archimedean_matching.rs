//! Recovering the pairing of near-solutions over R and C.

use momentlab::arch::{arch_match, constructive_instance, power_sum_hypothesis, Field};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> momentlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for field in [Field::Real, Field::Complex] {
        for big_n in [1e2, 1e3, 1e4] {
            let inst = constructive_instance(&mut rng, field, 3, big_n)?;
            assert!(power_sum_hypothesis(&inst.x, &inst.y, big_n));
            let m = arch_match(&inst.x, &inst.y, big_n, 2.0)?;
            println!(
                "{field:?} N = {big_n:e}: {:?} sigma {:?} (planted {:?}), N·max|x - y| = {:.4}",
                m.status, m.sigma, inst.planted, m.realised
            );
        }
    }
    Ok(())
}
