//! Solutions of the power-sum congruence system are permutations mod p^a.

use momentlab::matcher::{brute_force_verify, check_system, match_permutation, weakened_modulus_scan, CongruenceInstance};

fn main() -> momentlab::Result<()> {
    let inst = CongruenceInstance::from_ints(7, 2, &[1, 50], &[50 + 2401, 1 + 3 * 2401])?;
    println!("system holds: {}", check_system(&inst));
    let m = match_permutation(&inst)?;
    println!("sigma = {:?}, {} superclusters", m.sigma, m.superclusters.len());

    for (p, n, a) in [(3, 2, 1), (5, 2, 1)] {
        let r = brute_force_verify(p, n, a, None, 0)?;
        println!(
            "(p, n, a) = ({p}, {n}, {a}): {} pairs, {} solutions, {} failures",
            r.scanned_pairs, r.satisfying_pairs, r.failures
        );
    }
    let w = weakened_modulus_scan(5, 2)?;
    println!("modulus-p scan for p = 5, n = 2: {} solutions, {} unmatched", w.satisfying_pairs, w.failures);
    Ok(())
}
