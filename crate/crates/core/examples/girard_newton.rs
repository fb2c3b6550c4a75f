//! Power sums to elementary symmetric polynomials and back, mod 7^5.

use momentlab::field::PrimeModulus;
use momentlab::symmetric::{elementary_symmetric, monic_from_roots, newton_power_to_elementary, power_sums, SymTuple};

fn main() -> momentlab::Result<()> {
    let md = PrimeModulus::new(7, 5)?;
    let x = SymTuple::from_ints(md, &[3, 10, 49, 1000])?;
    let p = power_sums(&x);
    let e = elementary_symmetric(&x);
    let rec = newton_power_to_elementary(&p)?;
    println!("x      = {:?}", x.reps());
    println!("p_j(x) = {:?}", p.iter().map(|r| r.rep()).collect::<Vec<_>>());
    println!("e_j(x) = {:?}", e.iter().map(|r| r.rep()).collect::<Vec<_>>());
    println!("Newton = {:?}", rec.iter().map(|r| r.rep()).collect::<Vec<_>>());
    println!("monic coefficients = {:?}", monic_from_roots(&x).iter().map(|r| r.rep()).collect::<Vec<_>>());

    let small = PrimeModulus::new(3, 4)?;
    let y = SymTuple::from_ints(small, &[1, 2, 4])?;
    println!("p = 3, n = 3: {}", newton_power_to_elementary(&power_sums(&y)).unwrap_err());
    Ok(())
}
