//! Irrational winding on the torus: every point stays on its own line.

use foliated_flows::drivers::{sample_brownian, StreamKey};
use foliated_flows::flows::{check_leaf_invariance, torus_trajectory};
use foliated_flows::geometry::{FoliatedModel, TorusPoint, TorusWinding};
use foliated_flows::Result;

pub fn run_example() -> Result<f64> {
    let winding = TorusWinding::dense();
    let model = FoliatedModel::TorusWinding(winding);
    let start = TorusPoint::from_lift([0.1, 0.7])?;
    let mut worst = 0.0f64;
    for replica in 0..8 {
        let driver = sample_brownian(StreamKey::common(7, replica), 20.0, 1e-3)?;
        let path = torus_trajectory(&winding, &start, &driver)?;
        let defect = check_leaf_invariance(&model, &path)?;
        println!("replica {replica}: {} samples, max leaf defect {defect:.2e}", path.times.len());
        worst = worst.max(defect);
    }
    Ok(worst)
}

fn main() -> Result<()> {
    let worst = run_example()?;
    println!("worst defect over all replicas: {worst:.2e}");
    Ok(())
}
