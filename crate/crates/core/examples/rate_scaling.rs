//! Averaging error against ε with the theoretical bound G and a log-log
//! slope fit.

use foliated_flows::averaging::{averaging_error, fit_rate_exponent, AveragingSetup};
use foliated_flows::geometry::{AngularModulation, CylPoint, FoliatedModel, PerturbationField, VerticalDrift};
use foliated_flows::Result;

/// Fitted slope of ln error against ln ε.
pub fn run_example() -> Result<f64> {
    let field = PerturbationField::new(1.0, VerticalDrift::Zero, AngularModulation::Cosine);
    let setup = AveragingSetup {
        replicas: 200,
        seed: 17,
        ..AveragingSetup::new(field, CylPoint::new(0.0, 1.0, 0.0)?, 1.0)
    };
    let model = FoliatedModel::RotationJumpCylinder;
    let mut pairs = Vec::new();
    for eps in [0.2, 0.1, 0.05, 0.025, 0.0125] {
        let est = averaging_error(&model, &setup, eps)?;
        println!(
            "eps {eps:<7} error {:.4} ± {:.4}  G {:.4} ({:?} branch)",
            est.estimate, est.std_error, est.bound.g_bound, est.bound.active
        );
        pairs.push((eps, est.estimate));
    }
    let fit = fit_rate_exponent(&pairs)?;
    Ok(fit.slope.unwrap_or(f64::NAN))
}

fn main() -> Result<()> {
    println!("fitted slope {:.3}", run_example()?);
    Ok(())
}
