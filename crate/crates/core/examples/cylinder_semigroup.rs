//! Monte Carlo check of E[cos θ_t] = cos(θ + t)·e^{-2t} for rotation with
//! antipodal jumps.

use foliated_flows::drivers::{DriverPath, StreamKey};
use foliated_flows::flows::evolve_cylinder;
use foliated_flows::geometry::CylPoint;
use foliated_flows::stats::mean_std_err;
use foliated_flows::Result;

/// Returns `(t, estimate, std_error, exact)` rows.
pub fn run_example() -> Result<Vec<(f64, f64, f64, f64)>> {
    let start = CylPoint::new(0.3, 1.0, 0.0)?;
    let mut rows = Vec::new();
    for t in [0.25, 0.5, 1.0, 2.0] {
        let samples = (0..20_000u64)
            .map(|r| {
                let driver = DriverPath::jumps(StreamKey::common(11, r), 1.0, t)?;
                Ok(evolve_cylinder(&start, &driver, t)?.theta.cos())
            })
            .collect::<Result<Vec<f64>>>()?;
        let m = mean_std_err(&samples);
        rows.push((t, m.mean, m.std_error, (start.theta + t).cos() * (-2.0 * t).exp()));
    }
    Ok(rows)
}

fn main() -> Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "estimate", "std err", "exact");
    for (t, est, se, exact) in run_example()? {
        println!("{t:>6} {est:>10.5} {se:>10.5} {exact:>10.5}");
    }
    Ok(())
}
