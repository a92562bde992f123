//! Seeded driving noise: Brownian increments and Poisson jump clocks.
//!
//! Every stream is addressed by a [`StreamKey`]. The key is hashed to a
//! 64-bit seed for a ChaCha8 generator, and the Brownian and jump channels
//! use distinct ChaCha streams of that seed, so a single key can drive both
//! without the two ever overlapping. Nothing depends on draw order across
//! keys, which keeps replicas reproducible under any thread schedule.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Whether a stream is meant to be shared across points or private to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Common,
    Independent,
}

/// Address of one noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub experiment_seed: u64,
    pub replica_id: u64,
    pub point_id: u64,
    pub role: Role,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
enum Channel {
    Brownian = 0,
    Jumps = 1,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(experiment_seed: u64, replica_id: u64, point_id: u64, role: Role) -> Self {
        Self {
            experiment_seed,
            replica_id,
            point_id,
            role,
        }
    }

    /// Shared stream of a replica (point id 0).
    pub fn common(experiment_seed: u64, replica_id: u64) -> Self {
        Self::new(experiment_seed, replica_id, 0, Role::Common)
    }

    /// Private stream of one point within a replica.
    pub fn independent(experiment_seed: u64, replica_id: u64, point_id: u64) -> Self {
        Self::new(experiment_seed, replica_id, point_id, Role::Independent)
    }

    /// 64-bit seed derived from all four fields.
    pub fn seed(&self) -> u64 {
        let role = match self.role {
            Role::Common => 0x636f_6d6d_6f6e,
            Role::Independent => 0x696e_6465_70,
        };
        [self.replica_id, self.point_id, role]
            .iter()
            .fold(splitmix64(self.experiment_seed), |h, &x| splitmix64(h ^ x))
    }

    fn rng(&self, channel: Channel) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed());
        rng.set_stream(channel as u64);
        rng
    }
}

/// Brownian increments on a uniform grid together with their prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    pub dt: f64,
    pub increments: Vec<f64>,
    /// `B` at grid times `k·dt` (the last entry is `B` at the horizon).
    prefix: Vec<f64>,
}

impl BrownianIncrements {
    fn from_increments(dt: f64, increments: Vec<f64>) -> Self {
        let mut prefix = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for inc in &increments {
            acc += inc;
            prefix.push(acc);
        }
        Self {
            dt,
            increments,
            prefix,
        }
    }

    /// Path values at the grid times.
    pub fn values(&self) -> &[f64] {
        &self.prefix
    }
}

/// One realization of the driving noise over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    pub key: StreamKey,
    pub seed: u64,
    pub horizon: f64,
    pub brownian: Option<BrownianIncrements>,
    /// Strictly increasing arrival times in `[0, horizon]`.
    pub jump_times: Vec<f64>,
}

fn validate_horizon(horizon: f64) -> Result<()> {
    ensure_finite("horizon", horizon)?;
    if horizon < 0.0 {
        return Err(Error::InvalidInput(format!("horizon must be >= 0, got {horizon}")));
    }
    Ok(())
}

/// Number of grid steps covering `[0, horizon]`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    let ratio = horizon / dt;
    let nearest = ratio.round();
    // treat ratios within rounding of an integer as exact
    if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Brownian path with independent `N(0, dt)` increments; `B₀ = 0`.
///
/// When `horizon` is not a multiple of `dt` the final increment covers the
/// shorter remaining step and has variance equal to its length.
pub fn sample_brownian(key: StreamKey, horizon: f64, dt: f64) -> Result<DriverPath> {
    validate_horizon(horizon)?;
    ensure_finite("dt", dt)?;
    if dt <= 0.0 {
        return Err(Error::InvalidInput(format!("dt must be > 0, got {dt}")));
    }
    if horizon > 0.0 && dt > horizon {
        return Err(Error::InvalidInput(format!(
            "step dt = {dt} exceeds horizon {horizon}"
        )));
    }
    let n = step_count(horizon, dt);
    let mut rng = key.rng(Channel::Brownian);
    let scale = dt.sqrt();
    let last_len = horizon - (n.saturating_sub(1)) as f64 * dt;
    let increments = (0..n)
        .map(|k| {
            let z: f64 = StandardNormal.sample(&mut rng);
            if k + 1 == n && (last_len - dt).abs() > 1e-9 * dt {
                z * last_len.max(0.0).sqrt()
            } else {
                z * scale
            }
        })
        .collect();
    Ok(DriverPath {
        key,
        seed: key.seed(),
        horizon,
        brownian: Some(BrownianIncrements::from_increments(dt, increments)),
        jump_times: Vec::new(),
    })
}

/// Arrival times of a Poisson process of the given rate on `[0, horizon]`.
pub fn sample_poisson_jumps(key: StreamKey, rate: f64, horizon: f64) -> Result<Vec<f64>> {
    validate_horizon(horizon)?;
    ensure_finite("rate", rate)?;
    if rate <= 0.0 {
        return Err(Error::InvalidInput(format!("jump rate must be > 0, got {rate}")));
    }
    let exp = Exp::new(rate).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut rng = key.rng(Channel::Jumps);
    let mut times = Vec::new();
    let mut t = 0.0;
    loop {
        let gap: f64 = exp.sample(&mut rng);
        t += gap;
        if t > horizon {
            break;
        }
        // an exponential gap of exactly 0 would break strict monotonicity
        if times.last().is_some_and(|&last| t <= last) {
            continue;
        }
        times.push(t);
    }
    Ok(times)
}

impl DriverPath {
    /// Jump-only driver, as consumed by the rotation-jump cylinder.
    pub fn jumps(key: StreamKey, rate: f64, horizon: f64) -> Result<Self> {
        Ok(Self {
            key,
            seed: key.seed(),
            horizon,
            brownian: None,
            jump_times: sample_poisson_jumps(key, rate, horizon)?,
        })
    }

    /// Brownian path and unit-rate jump clock from the same key.
    pub fn brownian_with_jumps(key: StreamKey, horizon: f64, dt: f64, rate: f64) -> Result<Self> {
        let mut path = sample_brownian(key, horizon, dt)?;
        path.jump_times = sample_poisson_jumps(key, rate, horizon)?;
        Ok(path)
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        ensure_finite("t", t)?;
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
        }
        if t > self.horizon * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Brownian value at time `t`; linear between grid points.
    pub fn brownian_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let b = self
            .brownian
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("driver has no Brownian component".into()))?;
        let values = b.values();
        if values.len() == 1 {
            return Ok(0.0);
        }
        let x = t / b.dt;
        let k = x.round();
        if (x - k).abs() <= 1e-9 * k.max(1.0) {
            return Ok(values[(k as usize).min(values.len() - 1)]);
        }
        let lo = (x.floor() as usize).min(values.len() - 2);
        let t_lo = lo as f64 * b.dt;
        let t_hi = ((lo + 1) as f64 * b.dt).min(self.horizon);
        let w = ((t - t_lo) / (t_hi - t_lo)).clamp(0.0, 1.0);
        Ok(values[lo] + w * (values[lo + 1] - values[lo]))
    }

    /// Number of jumps in `[0, t]`.
    pub fn jump_count(&self, t: f64) -> usize {
        self.jump_times.partition_point(|&s| s <= t)
    }

    /// Driver seen from time origin `s`: `B'_u = B_{s+u} − B_s`, jumps in
    /// `(s, horizon]` shifted by `−s`. `s` must lie on the Brownian grid.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        self.check_time(s)?;
        let brownian = match &self.brownian {
            None => None,
            Some(b) => {
                let x = s / b.dt;
                let k = x.round();
                if (x - k).abs() > 1e-9 * k.max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "shift {s} is not on the Brownian grid of step {}",
                        b.dt
                    )));
                }
                let k = k as usize;
                Some(BrownianIncrements::from_increments(
                    b.dt,
                    b.increments[k.min(b.increments.len())..].to_vec(),
                ))
            }
        };
        Ok(Self {
            key: self.key,
            seed: self.seed,
            horizon: self.horizon - s,
            brownian,
            jump_times: self
                .jump_times
                .iter()
                .filter(|&&u| u > s)
                .map(|u| u - s)
                .collect(),
        })
    }

    /// Little-endian dump: seed, horizon, dt, increment count, increments,
    /// jump count, jump times. A jump-only path records `dt = 0`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        let (dt, incs): (f64, &[f64]) = match &self.brownian {
            Some(b) => (b.dt, &b.increments),
            None => (0.0, &[]),
        };
        w.write_all(&dt.to_le_bytes())?;
        w.write_all(&(incs.len() as u64).to_le_bytes())?;
        for x in incs {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(self.jump_times.len() as u64).to_le_bytes())?;
        for x in &self.jump_times {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    /// Inverse of [`DriverPath::write_binary`]; the key is not stored and
    /// must be supplied by the caller.
    pub fn read_binary<R: Read>(key: StreamKey, mut r: R) -> Result<Self> {
        fn u64_of<R: Read>(r: &mut R) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        fn f64_of<R: Read>(r: &mut R) -> Result<f64> {
            Ok(f64::from_bits(u64_of(r)?))
        }
        let seed = u64_of(&mut r)?;
        let horizon = f64_of(&mut r)?;
        let dt = f64_of(&mut r)?;
        let n = u64_of(&mut r)? as usize;
        let increments = (0..n).map(|_| f64_of(&mut r)).collect::<Result<Vec<_>>>()?;
        let m = u64_of(&mut r)? as usize;
        let jump_times = (0..m).map(|_| f64_of(&mut r)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            key,
            seed,
            horizon,
            brownian: (dt > 0.0).then(|| BrownianIncrements::from_increments(dt, increments)),
            jump_times,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{correlation, mean_std_err, sample_variance};

    fn key(replica: u64) -> StreamKey {
        StreamKey::common(7, replica)
    }

    #[test]
    fn zero_horizon_is_empty() {
        let p = sample_brownian(key(0), 0.0, 0.1).unwrap();
        assert!(p.brownian.as_ref().unwrap().increments.is_empty());
        assert_eq!(p.brownian_at(0.0).unwrap(), 0.0);
        assert!(sample_poisson_jumps(key(0), 1.0, 0.0).unwrap().is_empty());
    }

    #[test]
    fn same_key_same_bits() {
        let a = sample_brownian(key(3), 2.0, 0.01).unwrap();
        let b = sample_brownian(key(3), 2.0, 0.01).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = DriverPath::brownian_with_jumps(key(3), 2.0, 0.01, 1.0).unwrap();
        let d = DriverPath::brownian_with_jumps(key(3), 2.0, 0.01, 1.0).unwrap();
        assert_eq!(c.to_bytes(), d.to_bytes());
    }

    #[test]
    fn increment_count_is_ceiling() {
        let p = sample_brownian(key(0), 1.05, 0.1).unwrap();
        assert_eq!(p.brownian.as_ref().unwrap().increments.len(), 11);
        let q = sample_brownian(key(0), 1.0, 0.1).unwrap();
        assert_eq!(q.brownian.as_ref().unwrap().increments.len(), 10);
    }

    #[test]
    fn invalid_steps_rejected() {
        assert!(sample_brownian(key(0), 1.0, 2.0).is_err());
        assert!(sample_brownian(key(0), 1.0, 0.0).is_err());
        assert!(sample_brownian(key(0), f64::NAN, 0.1).is_err());
        assert!(sample_poisson_jumps(key(0), 0.0, 1.0).is_err());
        assert!(sample_poisson_jumps(key(0), -1.0, 1.0).is_err());
    }

    #[test]
    fn beyond_horizon_rejected() {
        let p = sample_brownian(key(0), 1.0, 0.1).unwrap();
        assert!(matches!(p.brownian_at(1.5), Err(Error::BeyondHorizon { .. })));
    }

    #[test]
    fn variance_of_b1() {
        let n = 100_000;
        let b1: Vec<f64> = (0..n)
            .map(|i| sample_brownian(key(i), 1.0, 0.25).unwrap().brownian_at(1.0).unwrap())
            .collect();
        let var = sample_variance(&b1);
        let tol = 4.0 / (2.0 * n as f64).sqrt();
        assert!((var - 1.0).abs() <= tol, "var = {var}");
    }

    #[test]
    fn poisson_mean_count() {
        let n = 100_000u64;
        let counts: Vec<f64> = (0..n)
            .map(|i| sample_poisson_jumps(key(i), 1.0, 2.0).unwrap().len() as f64)
            .collect();
        let m = mean_std_err(&counts).mean;
        assert!((m - 2.0).abs() <= 4.0 * (2.0 / n as f64).sqrt(), "mean = {m}");
    }

    #[test]
    fn odd_jump_probability_matches_antipodal_weight() {
        let n = 100_000u64;
        let odd: Vec<f64> = (0..n)
            .map(|i| (sample_poisson_jumps(key(i), 1.0, 1.0).unwrap().len() % 2) as f64)
            .collect();
        let s = mean_std_err(&odd);
        let expected = (1.0 - (-2.0f64).exp()) / 2.0;
        assert!((s.mean - expected).abs() <= 3.0 * s.std_error, "{} vs {expected}", s.mean);
    }

    #[test]
    fn distinct_points_are_uncorrelated() {
        let n = 20_000u64;
        let (x, y): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let a = sample_brownian(StreamKey::independent(1, i, 0), 1.0, 0.5).unwrap();
                let b = sample_brownian(StreamKey::independent(1, i, 1), 1.0, 0.5).unwrap();
                (a.brownian_at(1.0).unwrap(), b.brownian_at(1.0).unwrap())
            })
            .unzip();
        let rho = correlation(&x, &y);
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "rho = {rho}");
    }

    #[test]
    fn refinement_matches_coarse_moments() {
        // pairs of fine increments must look like coarse increments
        let n = 20_000u64;
        let mut coarse = Vec::new();
        let mut fine = Vec::new();
        for i in 0..n {
            let c = sample_brownian(key(i), 1.0, 0.1).unwrap();
            let f = sample_brownian(key(i + n), 1.0, 0.05).unwrap();
            coarse.extend_from_slice(&c.brownian.unwrap().increments);
            let fi = f.brownian.unwrap().increments;
            fine.extend(fi.chunks(2).map(|p| p[0] + p[1]));
        }
        let vc = sample_variance(&coarse);
        let vf = sample_variance(&fine);
        let tol = 4.0 * 0.1 * (2.0 / coarse.len() as f64).sqrt() * 2.0;
        assert!((vc - 0.1).abs() < tol && (vf - 0.1).abs() < tol, "{vc} {vf}");
        let kc: f64 = coarse.iter().map(|x| x.powi(4)).sum::<f64>() / coarse.len() as f64;
        let kf: f64 = fine.iter().map(|x| x.powi(4)).sum::<f64>() / fine.len() as f64;
        // fourth moment 3·dt² = 0.03
        assert!((kc - 0.03).abs() < 0.002 && (kf - 0.03).abs() < 0.002, "{kc} {kf}");
    }

    #[test]
    fn binary_round_trip() {
        let p = DriverPath::brownian_with_jumps(key(11), 3.0, 0.1, 1.0).unwrap();
        let q = DriverPath::read_binary(p.key, p.to_bytes().as_slice()).unwrap();
        assert_eq!(p, q);
        let j = DriverPath::jumps(key(12), 1.0, 5.0).unwrap();
        assert_eq!(j, DriverPath::read_binary(j.key, j.to_bytes().as_slice()).unwrap());
    }

    #[test]
    fn shifted_driver_restarts_at_zero() {
        let p = DriverPath::brownian_with_jumps(key(2), 4.0, 0.01, 1.0).unwrap();
        let s = p.shifted(1.5).unwrap();
        assert_eq!(s.brownian_at(0.0).unwrap(), 0.0);
        let lhs = s.brownian_at(2.0).unwrap();
        let rhs = p.brownian_at(3.5).unwrap() - p.brownian_at(1.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        assert_eq!(s.jump_count(2.5), p.jump_count(4.0) - p.jump_count(1.5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn jump_times_strictly_increasing(seed in any::<u64>(), horizon in 0.0..50.0f64, rate in 0.1..5.0f64) {
                let t = sample_poisson_jumps(StreamKey::common(seed, 0), rate, horizon).unwrap();
                prop_assert!(t.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(t.iter().all(|&x| (0.0..=horizon).contains(&x)));
            }
        }
    }
}
