//! Residues mod p^M, valuations and the nested-or-disjoint structure of balls.

use momentlab::field::{abs_diff, ball_relation, PrimeModulus, UltraBall, ValExp};

fn main() -> momentlab::Result<()> {
    let md = PrimeModulus::new(5, 4)?;
    for v in [0, 1, 25, 50, 125, 625] {
        let r = md.residue(v);
        println!("v_5({v}) = {}, |{v}|_5 = {}", r.val(), r.val().abs_value(5));
    }
    let (x, y) = (md.residue(3), md.residue(53));
    println!("v_5(3 - 53) = {}", abs_diff(&x, &y)?);

    let big = UltraBall::new(md.residue(3), ValExp::exact(1))?;
    let small = UltraBall::new(md.residue(28), ValExp::exact(2))?;
    let other = UltraBall::new(md.residue(4), ValExp::exact(1))?;
    println!("B(28, 5^-2) vs B(3, 5^-1): {:?}", ball_relation(&small, &big)?);
    println!("B(3, 5^-1) vs B(4, 5^-1): {:?}", ball_relation(&big, &other)?);
    println!("B(3, 5^-1) splits into {} children", big.children()?.len());
    Ok(())
}
