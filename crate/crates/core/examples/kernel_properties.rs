//! Discretized cylinder kernels: foliation, compatibility and diagonal
//! preservation of the two-point kernel, plus the semigroup law.

use std::f64::consts::FRAC_PI_4;

use foliated_flows::kernels::{
    build_cylinder_kernel, check_compatibility, check_diagonal_preserving, check_foliated, independent_product,
    product_kernel_flow, LeafGrid,
};
use foliated_flows::Result;

/// Largest defect seen across every check of the flow kernel, and the
/// diagonal defect of the independent product for contrast.
pub fn run_example() -> Result<(f64, f64)> {
    let grid = LeafGrid::new(8, vec![(1.0, 0.0), (2.0, 0.0)])?;
    let step = build_cylinder_kernel(&grid, FRAC_PI_4)?;
    let mut worst = 0.0f64;
    for k in 1..=2u32 {
        let k1 = build_cylinder_kernel(&grid, k as f64 * FRAC_PI_4)?;
        let k2 = product_kernel_flow(&k1)?;
        let composed = step.power(k);
        let defects = [
            ("row sums", k1.matrix.row_sum_defect()),
            ("foliated", check_foliated(&k1)?),
            ("compatibility", check_compatibility(&k2, &k1)?),
            ("diagonal", check_diagonal_preserving(&k2, &k1)?),
            ("semigroup", composed.matrix.max_abs_diff(&k1.matrix)?),
        ];
        for (name, d) in defects {
            println!("t = {k}·π/4  {name:<14} {d:.2e}");
            worst = worst.max(d);
        }
    }
    let indep = independent_product(&step)?;
    let indep_diag = check_diagonal_preserving(&indep, &step)?;
    println!("independent product diagonal defect {indep_diag:.3}");
    Ok((worst, indep_diag))
}

fn main() -> Result<()> {
    let (worst, _) = run_example()?;
    println!("worst flow-kernel defect {worst:.2e}");
    Ok(())
}
