//! Paired covering of two mutually covering ball families.

use momentlab::arch::{random_family_pair, verify_vitali_output, vitali_variant, VitaliParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> momentlab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, d, lambda) = (6, 2, 2.0);
    let params = VitaliParams::new(n, d, lambda)?;
    println!("C = {:.3}, C̄ = {:.3}, ρ = {:.3}, log10 R envelope = {:.2}", params.c, params.c_bar, params.rho, params.log10_r_envelope);
    for _ in 0..3 {
        let (bx, by) = random_family_pair(&mut rng, n, d, lambda);
        let out = vitali_variant(&bx, &by, lambda)?;
        let v = verify_vitali_output(&bx, &by, &out.pairs, out.r, 1e-9);
        println!(
            "{} + {} balls -> pairs {:?}, log10 R = {:.2}, rounds {}, verified {}",
            bx.len(),
            by.len(),
            out.pairs,
            out.r.log10(),
            out.separation.rounds,
            v.holds()
        );
    }
    Ok(())
}
