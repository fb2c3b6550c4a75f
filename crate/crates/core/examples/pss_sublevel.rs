//! Sublevel sets of a polynomial with clustered roots as unions of balls.

use momentlab::field::PrimeModulus;
use momentlab::pss::{pss_radius, self_ref_cluster, verify_pss_equality, verify_self_ref, RootTuple};

fn main() -> momentlab::Result<()> {
    let md = PrimeModulus::new(5, 6)?;
    let xi = RootTuple::from_ints(md, &[0, 25, 125, 7])?;
    for level in [2, 4, 6] {
        let report = verify_pss_equality(&xi, level)?;
        println!(
            "E = {level}: radii exponents {:?}, |sublevel| = {}, |union| = {}, equal = {}",
            report.radii.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
            report.sublevel_count,
            report.union_count,
            report.holds()
        );
    }
    for j in 0..xi.len() {
        let r = pss_radius(&xi, j, 5)?;
        let c = self_ref_cluster(&xi, j, 5)?;
        println!("root {j}: exponent {} via cluster {:?}, self-ref cluster {:?}", r.exponent, r.cluster.members(), c.members());
    }
    println!("self-referential identity holds: {}", verify_self_ref(&xi, 5)?);
    Ok(())
}
