//! Rotation + antipodal-jump flow on the circle foliation of `R³ \ z-axis`,
//! optionally perturbed transversally by `ε·K`.
//!
//! Between jumps the angle moves at unit speed, so
//! `θ_s = θ₀ + s + π·N(s)` and `cos θ_s = (−1)^{N(s)} cos(θ₀ + s)`. The
//! radial perturbation `ε(λ₀ + a·cos θ)` is therefore integrated in closed
//! form segment by segment. Only the vertical drift `ε·k₃(z)` needs a
//! numeric stepper (RK4).

use std::f64::consts::PI;

use crate::drivers::DriverPath;
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, CylPoint, PerturbationField};
use crate::ode::rk4_scalar;

/// Transversal perturbation strength, field and ODE step for `ξ^ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub eps: f64,
    pub field: PerturbationField,
    pub ode_dt: f64,
}

impl Perturbation {
    pub fn new(eps: f64, field: PerturbationField, ode_dt: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be >= 0, got {eps}")));
        }
        if !(ode_dt > 0.0 && ode_dt.is_finite()) {
            return Err(Error::InvalidInput(format!("ode step must be > 0, got {ode_dt}")));
        }
        field.validate()?;
        Ok(Self { eps, field, ode_dt })
    }

    fn none() -> Self {
        Self {
            eps: 0.0,
            field: PerturbationField::default(),
            ode_dt: 1.0,
        }
    }
}

/// One realized cylinder path on `[0, horizon]`, queryable at any time.
#[derive(Debug, Clone)]
pub struct CylinderPath {
    start: CylPoint,
    horizon: f64,
    perturbation: Perturbation,
    jumps: Vec<f64>,
    /// `∫₀^{τ_k} cos θ_s ds` at `τ₀ = 0` and every jump time.
    cos_prefix: Vec<f64>,
}

impl CylinderPath {
    pub fn unperturbed(start: CylPoint, driver: &DriverPath, horizon: f64) -> Result<Self> {
        Self::new(start, driver, horizon, Perturbation::none())
    }

    pub fn new(start: CylPoint, driver: &DriverPath, horizon: f64, perturbation: Perturbation) -> Result<Self> {
        driver.check_time(horizon)?;
        let jumps: Vec<f64> = driver
            .jump_times
            .iter()
            .copied()
            .take_while(|&s| s <= horizon)
            .collect();
        let th = start.theta;
        let mut cos_prefix = Vec::with_capacity(jumps.len() + 1);
        cos_prefix.push(0.0);
        let mut prev = 0.0;
        for (k, &tau) in jumps.iter().enumerate() {
            let seg = (th + tau).sin() - (th + prev).sin();
            let signed = if k % 2 == 0 { seg } else { -seg };
            cos_prefix.push(cos_prefix[k] + signed);
            prev = tau;
        }
        Ok(Self {
            start,
            horizon,
            perturbation,
            jumps,
            cos_prefix,
        })
    }

    pub fn start(&self) -> &CylPoint {
        &self.start
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jumps
    }

    fn jumps_upto(&self, s: f64) -> usize {
        self.jumps.partition_point(|&u| u <= s)
    }

    /// `θ_s` reduced to `[0, 2π)`.
    pub fn theta(&self, s: f64) -> f64 {
        let parity = self.jumps_upto(s) % 2;
        normalize_angle(self.start.theta + s + PI * parity as f64)
    }

    /// `∫₀^s cos θ_u du`, exact.
    pub fn cos_integral_from_zero(&self, s: f64) -> f64 {
        let k = self.jumps_upto(s);
        let tau = if k == 0 { 0.0 } else { self.jumps[k - 1] };
        let th = self.start.theta;
        let seg = (th + s).sin() - (th + tau).sin();
        self.cos_prefix[k] + if k % 2 == 0 { seg } else { -seg }
    }

    /// `∫_a^b cos θ_u du`, exact.
    pub fn cos_integral(&self, a: f64, b: f64) -> f64 {
        self.cos_integral_from_zero(b) - self.cos_integral_from_zero(a)
    }

    /// Radius at time `s` (may be ≤ 0 if the path has left the manifold).
    pub fn radius(&self, s: f64) -> f64 {
        let p = &self.perturbation;
        if p.eps == 0.0 {
            return self.start.r;
        }
        let a = p.field.angular.amplitude();
        let drift = p.field.lambda0 * s + if a != 0.0 { a * self.cos_integral_from_zero(s) } else { 0.0 };
        self.start.r + p.eps * drift
    }

    /// First time in `[0, until]` at which `r ≤ 0`, if any.
    pub fn exit_time(&self, until: f64) -> Option<f64> {
        let p = &self.perturbation;
        if p.eps == 0.0 {
            return None;
        }
        if p.field.angular.amplitude() == 0.0 {
            let rate = p.eps * p.field.lambda0;
            return (rate < 0.0).then(|| self.start.r / -rate).filter(|&t| t <= until);
        }
        // scan at ode step resolution plus every jump, then bisect
        let step = p.ode_dt.min(0.1);
        let mut checkpoints: Vec<f64> = self.jumps.iter().copied().filter(|&s| s <= until).collect();
        let n = (until / step).ceil() as usize;
        checkpoints.extend((1..=n).map(|k| (k as f64 * step).min(until)));
        checkpoints.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for s in checkpoints {
            if self.radius(s) <= 0.0 {
                let (mut lo, mut hi) = (prev, s);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.radius(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(hi);
            }
            prev = s;
        }
        None
    }

    /// Vertical coordinate `ξ^ε` at each of the sorted `times`, integrated
    /// by RK4 with steps of at most `ode_dt` that land on every time.
    pub fn vertical_at(&self, times: &[f64]) -> Vec<f64> {
        let p = &self.perturbation;
        let z0 = self.start.z;
        if p.eps == 0.0 || p.field.k3 == crate::geometry::VerticalDrift::Zero {
            return vec![z0; times.len()];
        }
        let eps = p.eps;
        let k3 = p.field.k3;
        let f = move |z: f64| eps * k3.eval(z);
        let mut out = Vec::with_capacity(times.len());
        let (mut s, mut z) = (0.0f64, z0);
        for &target in times {
            while target - s > 1e-12 * target.max(1.0) {
                let h = p.ode_dt.min(target - s);
                z = rk4_scalar(&f, z, h);
                s += h;
            }
            s = s.max(target);
            out.push(z);
        }
        out
    }

    /// State at time `s`; errors if the path left the manifold before `s`.
    pub fn state_at(&self, s: f64) -> Result<CylPoint> {
        if s > self.horizon * (1.0 + 1e-12) {
            return Err(Error::BeyondHorizon {
                t: s,
                horizon: self.horizon,
            });
        }
        if let Some(time) = self.exit_time(s) {
            return Err(Error::ExitedManifold { time });
        }
        let z = self.vertical_at(&[s])[0];
        Ok(CylPoint {
            theta: self.theta(s),
            r: self.radius(s),
            z,
        })
    }
}

/// `θ_t = θ + t + π·N(t) mod 2π`, `(r, z)` unchanged.
pub fn evolve_cylinder(start: &CylPoint, driver: &DriverPath, t: f64) -> Result<CylPoint> {
    CylinderPath::unperturbed(*start, driver, t)?.state_at(t)
}

/// Perturbed flow `φ^ε_t`: same angular motion, radial drift
/// `ε(λ₀ + a·cos θ)` integrated exactly, vertical drift `ε·k₃(z)` by RK4.
pub fn evolve_cylinder_perturbed(
    start: &CylPoint,
    driver: &DriverPath,
    t: f64,
    perturbation: &Perturbation,
) -> Result<CylPoint> {
    CylinderPath::new(*start, driver, t, *perturbation)?.state_at(t)
}
