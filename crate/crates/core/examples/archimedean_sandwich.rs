//! Real and complex sublevel sets squeezed between dilates of root balls.

use momentlab::arch::{approx_self_ref, arch_pss_radius, sandwich_check, scaling_holds, ArchRoots, SampleGrid};
use num::complex::Complex64;

fn main() -> momentlab::Result<()> {
    let real = ArchRoots::real(&[0.1, 0.1001, -0.5, 0.9])?;
    let complex = ArchRoots::complex(&[Complex64::new(0.2, 0.2), Complex64::new(0.2, 0.2005), Complex64::new(-0.6, 0.1)])?;
    for (name, xi) in [("real", &real), ("complex", &complex)] {
        for eps in [1e-2, 1e-4, 1e-6] {
            let radii: Vec<f64> = (0..xi.len()).map(|j| arch_pss_radius(xi, j, eps).unwrap()).collect();
            let rep = sandwich_check(xi, eps, SampleGrid::default(), 1e-9)?;
            println!(
                "{name} ε = {eps:e}: radii {:?}, {} samples, {} violations, scaling ok {}",
                radii.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>(),
                rep.samples,
                rep.inner_violations + rep.outer_violations,
                scaling_holds(xi, eps, 10.0, 1e-12)?
            );
        }
    }
    let (r, v, upper) = approx_self_ref(&real, 0, 1e-4, 4.0)?;
    println!("approximate self-reference: {r:.4e} ≤ {v:.4e} ≤ {upper:.4e}");
    Ok(())
}
