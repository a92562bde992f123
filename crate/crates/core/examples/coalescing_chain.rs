//! Coalescing two-point chain for a lazy cyclic walk: marginals match the
//! one-point walk while mass accumulates on the diagonal.

use foliated_flows::kernels::{check_compatibility, check_diagonal_preserving, coalesce_two_point, cyclic_walk, diagonal_mass};
use foliated_flows::Result;

/// Diagonal mass reached from the pair (0, 1) after each power.
pub fn run_example() -> Result<Vec<f64>> {
    let walk = cyclic_walk(3, 0.3)?;
    let pair = coalesce_two_point(&walk)?;
    let mut masses = Vec::new();
    for p in 1..=20u32 {
        let k1 = walk.power(p);
        let k2 = pair.power(p);
        let compat = check_compatibility(&k2, &k1)?;
        let diag = check_diagonal_preserving(&k2, &k1)?;
        let mass = diagonal_mass(k2.matrix.row(1), 3);
        if p % 5 == 0 {
            println!("power {p:>2}: compatibility {compat:.1e}, diagonal {diag:.1e}, diagonal mass {mass:.4}");
        }
        masses.push(mass);
    }
    Ok(masses)
}

fn main() -> Result<()> {
    let masses = run_example()?;
    println!("final diagonal mass {:.6}", masses.last().copied().unwrap_or(0.0));
    Ok(())
}
