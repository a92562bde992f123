use crate::drivers::DriverPath;
use crate::error::Result;
use crate::geometry::{ModelKind, ModelPoint, TorusPoint, TorusWinding};

use super::Trajectory;

/// `φ_t(x) = x + v·B_t` on the universal cover, displayed mod `Z²`.
pub fn evolve_torus(model: &TorusWinding, start: &TorusPoint, driver: &DriverPath, t: f64) -> Result<TorusPoint> {
    let b = driver.brownian_at(t)?;
    let [x, y] = start.lift()?;
    let v = model.direction();
    TorusPoint::from_lift([x + v[0] * b, y + v[1] * b])
}

/// Trajectory sampled on the driver's Brownian grid.
pub fn torus_trajectory(model: &TorusWinding, start: &TorusPoint, driver: &DriverPath) -> Result<Trajectory> {
    let [x, y] = start.lift()?;
    let v = model.direction();
    let grid = driver
        .brownian
        .as_ref()
        .ok_or_else(|| crate::Error::InvalidInput("torus flow needs a Brownian driver".into()))?;
    let values = grid.values();
    let mut times = Vec::with_capacity(values.len());
    let mut states = Vec::with_capacity(values.len());
    for (k, &b) in values.iter().enumerate() {
        times.push((k as f64 * grid.dt).min(driver.horizon));
        states.push(ModelPoint::Torus(TorusPoint::from_lift([x + v[0] * b, y + v[1] * b])?));
    }
    Ok(Trajectory {
        model: ModelKind::TorusWinding,
        key: driver.key,
        times,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{sample_brownian, StreamKey};
    use crate::flows::check_leaf_invariance;
    use crate::geometry::FoliatedModel;

    #[test]
    fn zero_noise_is_identity() {
        let m = TorusWinding::dense();
        let d = sample_brownian(StreamKey::common(0, 0), 1.0, 0.1).unwrap();
        let s = TorusPoint::from_lift([0.2, 0.9]).unwrap();
        assert_eq!(evolve_torus(&m, &s, &d, 0.0).unwrap(), s);
    }

    #[test]
    fn full_wrap_along_axis() {
        let m = TorusWinding::new([1.0, 0.0]).unwrap();
        let s = TorusPoint::from_lift([0.25, 0.5]).unwrap();
        // hand-built driver with B_1 = 1
        let mut d = sample_brownian(StreamKey::common(0, 0), 1.0, 1.0).unwrap();
        d = DriverPath::read_binary(d.key, {
            let mut bytes = d.to_bytes();
            let off = 8 * 4;
            bytes[off..off + 8].copy_from_slice(&1.0f64.to_le_bytes());
            std::io::Cursor::new(bytes)
        })
        .unwrap();
        let e = evolve_torus(&m, &s, &d, 1.0).unwrap();
        assert!((e.a - s.a).abs() < 1e-15 && e.b == s.b);
        assert_eq!(e.lift.unwrap(), [1.25, 0.5]);
    }

    #[test]
    fn trajectory_stays_on_leaf() {
        let m = TorusWinding::dense();
        let d = sample_brownian(StreamKey::common(5, 1), 100.0, 0.01).unwrap();
        let s = TorusPoint::from_lift([0.1, 0.4]).unwrap();
        let tr = torus_trajectory(&m, &s, &d).unwrap();
        let defect = check_leaf_invariance(&FoliatedModel::TorusWinding(m), &tr).unwrap();
        assert!(defect <= 1e-9, "{defect}");
        assert!(tr.states.iter().all(|p| p.as_torus().unwrap().is_consistent()));
    }

    #[test]
    fn cocycle_on_grid() {
        let m = TorusWinding::dense();
        let d = sample_brownian(StreamKey::common(9, 0), 5.0, 0.01).unwrap();
        let s = TorusPoint::from_lift([0.3, 0.3]).unwrap();
        let direct = evolve_torus(&m, &s, &d, 3.5).unwrap();
        let mid = evolve_torus(&m, &s, &d, 1.25).unwrap();
        let composed = evolve_torus(&m, &mid, &d.shifted(1.25).unwrap(), 2.25).unwrap();
        let (a, b) = (direct.lift.unwrap(), composed.lift.unwrap());
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
}
