//! Coalescing Brownian motions on stacked circles: points sharing a leaf
//! merge, points on different leaves never do.

use std::f64::consts::PI;

use foliated_flows::drivers::StreamKey;
use foliated_flows::flows::evolve_coalescing_circle;
use foliated_flows::geometry::CylPoint;
use foliated_flows::Result;

/// `(same-leaf merges, cross-leaf merges)` over all replicas.
pub fn run_example() -> Result<(u64, u64)> {
    let starts = [CylPoint::new(0.0, 1.0, 0.0)?, CylPoint::new(PI, 1.0, 0.0)?, CylPoint::new(0.0, 2.0, 0.0)?];
    let replicas = 200u64;
    let (mut same, mut cross) = (0, 0);
    for r in 0..replicas {
        let keys: Vec<StreamKey> = (0..3).map(|i| StreamKey::independent(5, r, i)).collect();
        let series = evolve_coalescing_circle(1.0, &starts, &keys, 20.0, 0.01, Some(500))?;
        let fin = &series.final_state;
        same += u64::from(fin.hit_time(0, 1).is_some());
        cross += u64::from(fin.hit_time(0, 2).is_some()) + u64::from(fin.hit_time(1, 2).is_some());
    }
    println!("{replicas} replicas: pair (0,1) merged {same} times, cross-leaf merges {cross}");
    Ok((same, cross))
}

fn main() -> Result<()> {
    run_example()?;
    Ok(())
}
