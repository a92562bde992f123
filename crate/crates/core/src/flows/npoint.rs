use std::collections::BTreeMap;

use crate::drivers::{sample_brownian, step_count, DriverPath, StreamKey};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, CylPoint, FoliatedModel, ModelPoint, TorusPoint};

use super::{CylinderPath, Frame, NPointSeries, NPointState, Partition};

/// n-point motion of the flow: every point consumes the same driver.
///
/// Sampled on the uniform `dt` grid; for the cylinder every jump time is
/// added to the grid. Points that start identical form one class at `t = 0`
/// and, sharing the noise, stay identical.
pub fn n_point_motion(
    model: &FoliatedModel,
    starts: &[ModelPoint],
    key: StreamKey,
    horizon: f64,
    dt: f64,
) -> Result<NPointSeries> {
    model.validate()?;
    let n = starts.len();
    let mut frames = Vec::new();
    match model {
        FoliatedModel::TorusWinding(torus) => {
            let lifts = starts
                .iter()
                .map(|p| match p {
                    ModelPoint::Torus(t) => t.lift(),
                    _ => Err(Error::InvalidInput("torus model expects torus points".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            let driver = sample_brownian(key, horizon, dt)?;
            let grid = driver.brownian.as_ref().expect("brownian driver");
            let v = torus.direction();
            for (k, &b) in grid.values().iter().enumerate() {
                let points = lifts
                    .iter()
                    .map(|l| TorusPoint::from_lift([l[0] + v[0] * b, l[1] + v[1] * b]).map(ModelPoint::Torus))
                    .collect::<Result<Vec<_>>>()?;
                frames.push(((k as f64 * dt).min(horizon), points));
            }
        }
        FoliatedModel::RotationJumpCylinder => {
            let cyl = cylinder_starts(starts)?;
            let driver = DriverPath::jumps(key, 1.0, horizon)?;
            let paths = cyl
                .iter()
                .map(|p| CylinderPath::unperturbed(*p, &driver, horizon))
                .collect::<Result<Vec<_>>>()?;
            let mut times: Vec<f64> = (0..=step_count(horizon, dt))
                .map(|k| (k as f64 * dt).min(horizon))
                .chain(driver.jump_times.iter().copied())
                .collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            for t in times {
                let points = paths
                    .iter()
                    .zip(&cyl)
                    .map(|(path, p)| ModelPoint::Cyl(CylPoint { theta: path.theta(t), r: p.r, z: p.z }))
                    .collect();
                frames.push((t, points));
            }
        }
        FoliatedModel::CoalescingCircle { sigma } => {
            let cyl = cylinder_starts(starts)?;
            let driver = sample_brownian(key, horizon, dt)?;
            let grid = driver.brownian.as_ref().expect("brownian driver");
            for (k, &b) in grid.values().iter().enumerate() {
                let points = cyl
                    .iter()
                    .map(|p| ModelPoint::Cyl(CylPoint { theta: normalize_angle(p.theta + sigma * b), r: p.r, z: p.z }))
                    .collect();
                frames.push(((k as f64 * dt).min(horizon), points));
            }
        }
    }

    let mut state = NPointState {
        points: Vec::new(),
        partition: Partition::singletons(n),
        hit_times: BTreeMap::new(),
    };
    for i in 0..n {
        for j in (i + 1)..n {
            if starts[i] == starts[j] && !state.partition.same(i, j) {
                state.merge(i, j, 0.0);
            }
        }
    }
    let classes = state.partition.class_ids();
    let frames: Vec<Frame> = frames
        .into_iter()
        .map(|(t, points)| Frame {
            t,
            points,
            classes: classes.clone(),
        })
        .collect();
    state.points = frames.last().map(|f| f.points.clone()).unwrap_or_default();
    Ok(NPointSeries {
        model: model.kind(),
        frames,
        final_state: state,
    })
}

fn cylinder_starts(starts: &[ModelPoint]) -> Result<Vec<CylPoint>> {
    starts
        .iter()
        .map(|p| {
            p.as_cyl()
                .copied()
                .ok_or_else(|| Error::InvalidInput("cylinder models expect cylinder points".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{evolve_cylinder, evolve_torus};
    use crate::geometry::{circular_distance, TorusWinding};

    #[test]
    fn identical_starts_stay_identical() {
        let m = FoliatedModel::TorusWinding(TorusWinding::dense());
        let p = ModelPoint::Torus(TorusPoint::from_lift([0.2, 0.3]).unwrap());
        let s = n_point_motion(&m, &[p, p], StreamKey::common(1, 0), 10.0, 0.01).unwrap();
        assert!(s.frames.iter().all(|f| f.points[0] == f.points[1]));
        assert_eq!(s.final_state.hit_time(0, 1), Some(0.0));

        let c = ModelPoint::Cyl(CylPoint::new(0.4, 1.0, 0.0).unwrap());
        let s = n_point_motion(&FoliatedModel::RotationJumpCylinder, &[c, c], StreamKey::common(1, 0), 10.0, 0.01).unwrap();
        assert!(s.frames.iter().all(|f| f.points[0] == f.points[1]));
    }

    #[test]
    fn single_point_matches_evolve() {
        let key = StreamKey::common(2, 5);
        let tw = TorusWinding::dense();
        let start = TorusPoint::from_lift([0.5, 0.5]).unwrap();
        let s = n_point_motion(&FoliatedModel::TorusWinding(tw), &[ModelPoint::Torus(start)], key, 4.0, 0.01).unwrap();
        let d = sample_brownian(key, 4.0, 0.01).unwrap();
        let last = s.frames.last().unwrap();
        assert_eq!(last.points[0], ModelPoint::Torus(evolve_torus(&tw, &start, &d, 4.0).unwrap()));

        let c = CylPoint::new(0.1, 2.0, 1.0).unwrap();
        let s = n_point_motion(&FoliatedModel::RotationJumpCylinder, &[ModelPoint::Cyl(c)], key, 4.0, 0.01).unwrap();
        let d = DriverPath::jumps(key, 1.0, 4.0).unwrap();
        assert_eq!(s.frames.last().unwrap().points[0], ModelPoint::Cyl(evolve_cylinder(&c, &d, 4.0).unwrap()));
    }

    #[test]
    fn same_leaf_gap_is_invariant() {
        let a = CylPoint::new(0.3, 1.0, 0.0).unwrap();
        let b = CylPoint::new(1.1, 1.0, 0.0).unwrap();
        let s = n_point_motion(
            &FoliatedModel::RotationJumpCylinder,
            &[ModelPoint::Cyl(a), ModelPoint::Cyl(b)],
            StreamKey::common(4, 4),
            25.0,
            0.05,
        )
        .unwrap();
        for f in &s.frames {
            let (p, q) = (f.points[0].as_cyl().unwrap(), f.points[1].as_cyl().unwrap());
            assert!((circular_distance(p.theta, q.theta) - 0.8).abs() < 1e-9);
        }
    }

    #[test]
    fn jump_times_are_sampled() {
        let c = ModelPoint::Cyl(CylPoint::new(0.0, 1.0, 0.0).unwrap());
        let key = StreamKey::common(6, 1);
        let s = n_point_motion(&FoliatedModel::RotationJumpCylinder, &[c], key, 10.0, 0.5).unwrap();
        let d = DriverPath::jumps(key, 1.0, 10.0).unwrap();
        for t in &d.jump_times {
            assert!(s.frames.iter().any(|f| f.t == *t));
        }
    }
}
