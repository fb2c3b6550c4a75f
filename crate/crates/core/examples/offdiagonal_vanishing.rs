//! Interval tuples that are not rearrangements of each other give vanishing cross terms.

use momentlab::sqfn::{offdiag_support_check, offdiag_scan, IntervalIndex};

fn main() -> momentlab::Result<()> {
    for p in [3, 5] {
        let s = offdiag_scan(p, 2, 2, 1)?;
        println!(
            "p = {p}: {} tuple pairs, {} matched, {} vanish, {} near-collisions",
            s.tuple_pairs, s.matched, s.vanishing, s.near_collisions
        );
    }
    let iv = |c| IntervalIndex::new(5, 1, c).unwrap();
    let check = offdiag_support_check(5, 2, 1, &[iv(0), iv(1)], &[iv(0), iv(2)], None)?;
    println!("I = (0, 1), J = (0, 2): {:?} after {} pairs", check.outcome, check.pairs_checked);
    Ok(())
}
