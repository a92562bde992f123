//! When the perturbation does not depend on the angle, averaging is exact:
//! the vertical motion solves the averaged ODE path by path.

use foliated_flows::averaging::{averaging_error, AveragingSetup};
use foliated_flows::geometry::{AngularModulation, CylPoint, FoliatedModel, PerturbationField, VerticalDrift};
use foliated_flows::Result;

/// Averaging error for each ε.
pub fn run_example() -> Result<Vec<(f64, f64)>> {
    let field = PerturbationField::new(1.0, VerticalDrift::Sine, AngularModulation::None);
    let setup = AveragingSetup {
        replicas: 50,
        seed: 3,
        ..AveragingSetup::new(field, CylPoint::new(0.0, 1.0, 1.0)?, 1.0)
    };
    let model = FoliatedModel::RotationJumpCylinder;
    [0.1, 0.01]
        .into_iter()
        .map(|eps| {
            let est = averaging_error(&model, &setup, eps)?;
            println!("eps {eps:<5} error {:.3e}", est.estimate);
            Ok((eps, est.estimate))
        })
        .collect()
}

fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
