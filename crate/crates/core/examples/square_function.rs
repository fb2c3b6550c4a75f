//! The square-function inequality on random and adversarial functions.

use momentlab::sqfn::{sf_constant, verify_sf_batch, Ensemble};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> momentlab::Result<()> {
    let (p, n, alpha) = (5, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut fs = Vec::new();
    let mut names = Vec::new();
    for i in 0..5 {
        fs.push(Ensemble::Gaussian.sample(p, alpha * n, alpha, &mut rng)?);
        names.push(format!("gaussian-{i}"));
    }
    for e in Ensemble::ADVERSARIAL {
        fs.push(e.sample(p, alpha * n, alpha, &mut rng)?);
        names.push(e.name().to_string());
    }
    let reports = verify_sf_batch(&fs, n, alpha)?;
    for (name, per_m) in names.iter().zip(&reports) {
        for r in per_m {
            println!("{name:>16} m = {}: lhs {:.6} rhs {:.6} ratio {:.9}", r.m, r.lhs, r.rhs, r.ratio);
        }
    }
    println!("constants: m = 1 -> {}, m = 2 -> {:.6}", sf_constant(1), sf_constant(2));
    Ok(())
}
