//! Pathwise `A₁..A₄` decomposition and Monte Carlo averaging error.
//!
//! For the cylinder model every time integral is evaluated in closed form:
//! the radial integrand `λ₀ + a·cos θ` integrates exactly between jumps,
//! and the vertical one satisfies `ε∫k₃(z_s) ds = z_b − z_a` along the
//! perturbed path, while the restarted unperturbed flow keeps `z` fixed.
//! The unperturbed restart at `t_n` shares the perturbed path's driver, so
//! its angle coincides with the perturbed angle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drivers::{DriverPath, StreamKey};
use crate::error::{ensure_finite, Error, Result};
use crate::flows::{CylinderPath, Perturbation};
use crate::geometry::{CylPoint, FoliatedModel, PerturbationField, VerticalCoord, VerticalRegion};
use crate::stats::{mean_std_err, pairwise_sum};

use super::{
    eval_rate_bounds, make_partition, solve_averaged_ode, FChoice, InvariantMeasure, InvariantMeasureSpec, RateBound,
    RateEvaluation,
};

/// Slack for the triangle inequality, which is checked on rounded sums.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Everything an averaging run needs besides `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingSetup {
    pub field: PerturbationField,
    pub start: CylPoint,
    pub t: f64,
    pub p: f64,
    pub replicas: u64,
    pub seed: u64,
    pub f_choice: FChoice,
    /// RK4 step in slow time; the fast-time step is `ode_step / ε`.
    pub ode_step: f64,
    pub region: VerticalRegion,
    pub measure: InvariantMeasureSpec,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl AveragingSetup {
    pub fn new(field: PerturbationField, start: CylPoint, t: f64) -> Self {
        Self {
            field,
            start,
            t,
            p: 2.0,
            replicas: 1000,
            seed: 0,
            f_choice: FChoice::Sqrt,
            ode_step: 1e-3,
            region: VerticalRegion::default(),
            measure: InvariantMeasureSpec::default(),
            c1: None,
            c2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.field.validate()?;
        self.region.validate()?;
        self.measure.validate()?;
        CylPoint::new(self.start.theta, self.start.r, self.start.z)?;
        ensure_finite("t", self.t)?;
        if self.t <= 0.0 {
            return Err(Error::InvalidInput(format!("t must be > 0, got {}", self.t)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!("p must be in [1, inf), got {}", self.p)));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidInput("at least one replica is required".into()));
        }
        if !(self.ode_step > 0.0 && self.ode_step.is_finite()) {
            return Err(Error::InvalidInput(format!("ode_step must be > 0, got {}", self.ode_step)));
        }
        self.rate_bound().validate()
    }

    pub fn rate_bound(&self) -> RateBound {
        RateBound::for_field(&self.field, &self.region, self.c1, self.c2)
    }

    fn v0(&self) -> VerticalCoord {
        VerticalCoord::new(vec![self.start.r, self.start.z])
    }
}

/// The four terms and the defect for one vertical component of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub component: usize,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub delta: f64,
    /// `sup|dπ_i(K)|·t·f(ε)`
    pub a4_bound: f64,
}

impl ErrorDecomposition {
    pub fn abs_sum(&self) -> f64 {
        self.a1.abs() + self.a2.abs() + self.a3.abs() + self.a4.abs()
    }

    pub fn triangle_holds(&self) -> bool {
        self.delta.abs() <= self.abs_sum() + TRIANGLE_SLACK
    }

    pub fn a4_holds(&self) -> bool {
        self.a4.abs() <= self.a4_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaDecomposition {
    pub replica: u64,
    pub eps: f64,
    /// Slow time actually covered; below `t` if the path left the manifold.
    pub t_effective: f64,
    pub exited_at: Option<f64>,
    pub components: Vec<ErrorDecomposition>,
}

fn run_replica(
    setup: &AveragingSetup,
    measure: &InvariantMeasure,
    eps: f64,
    key: StreamKey,
    replica: u64,
) -> Result<(ReplicaDecomposition, Option<VerticalCoord>)> {
    let horizon = setup.t / eps;
    let driver = DriverPath::jumps(key, 1.0, horizon)?;
    let perturbation = Perturbation::new(eps, setup.field, setup.ode_step / eps)?;
    let path = CylinderPath::new(setup.start, &driver, horizon, perturbation)?;
    let exited_at = path.exit_time(horizon);
    let end = exited_at.unwrap_or(horizon);
    let t_eff = if exited_at.is_some() { eps * end } else { setup.t };
    let part = make_partition(eps, t_eff, setup.f_choice, setup.p)?;
    let n = part.n_intervals;
    let dt = part.delta_t;
    let t_n = part.tail_start().min(end);

    let mut times: Vec<f64> = (0..=n).map(|k| part.point(k).min(end)).collect();
    times.push(end);
    let zs = path.vertical_at(&times);
    let z_end = zs[n + 1];

    let field = &setup.field;
    let a = field.angular.amplitude();
    let lambda0 = field.lambda0;
    let m_cos = measure.average(f64::cos).value;
    let q1 = lambda0 + a * m_cos;

    let radial_a2: Vec<f64> = (0..n)
        .map(|k| eps * a * (path.cos_integral(times[k], times[k + 1]) - m_cos * dt))
        .collect();
    let radial = ErrorDecomposition {
        component: 0,
        a1: 0.0,
        a2: pairwise_sum(&radial_a2),
        a3: q1 * (eps * n as f64 * dt - t_eff),
        a4: eps * (lambda0 * (end - t_n) + a * path.cos_integral(t_n, end)),
        delta: a * (eps * path.cos_integral(0.0, end) - m_cos * t_eff),
        a4_bound: field.component_sup(0, &setup.region) * t_eff * part.f_value,
    };

    let k3 = |z: f64| field.vertical(z);
    let vertical_a1: Vec<f64> = (0..n).map(|k| (zs[k + 1] - zs[k]) - eps * dt * k3(zs[k])).collect();
    let riemann: Vec<f64> = (0..n).map(|k| eps * dt * k3(zs[k])).collect();
    let vertical = ErrorDecomposition {
        component: 1,
        a1: pairwise_sum(&vertical_a1),
        a2: 0.0,
        a3: pairwise_sum(&riemann) - (z_end - zs[0]),
        a4: z_end - zs[n],
        delta: 0.0,
        a4_bound: field.component_sup(1, &setup.region) * t_eff * part.f_value,
    };

    let decomposition = ReplicaDecomposition {
        replica,
        eps,
        t_effective: t_eff,
        exited_at,
        components: vec![radial, vertical],
    };
    let end_point = exited_at
        .is_none()
        .then(|| VerticalCoord::new(vec![path.radius(horizon), z_end]));
    Ok((decomposition, end_point))
}

fn require_cylinder(model: &FoliatedModel, operation: &'static str) -> Result<()> {
    match model {
        FoliatedModel::RotationJumpCylinder => Ok(()),
        other => Err(Error::Unsupported {
            operation,
            model: other.kind().name(),
        }),
    }
}

/// Realized `A₁..A₄` and `δ_i` for both vertical components of one path.
pub fn decompose_error(
    model: &FoliatedModel,
    setup: &AveragingSetup,
    eps: f64,
    key: StreamKey,
) -> Result<ReplicaDecomposition> {
    require_cylinder(model, "decompose_error")?;
    setup.validate()?;
    let measure = InvariantMeasure::build(&setup.measure)?;
    Ok(run_replica(setup, &measure, eps, key, key.replica_id)?.0)
}

/// Monte Carlo estimate of `(E|π(y^ε_{t/ε}) − v(t)|^p)^{1/p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingEstimate {
    pub eps: f64,
    pub t: f64,
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: RateEvaluation,
    pub replicas: u64,
    /// Replicas whose path left the manifold before `t/ε`.
    pub exited: u64,
    pub averaged_end: VerticalCoord,
    pub decompositions: Vec<ReplicaDecomposition>,
}

impl AveragingEstimate {
    pub fn all_bounds_hold(&self) -> bool {
        self.decompositions
            .iter()
            .flat_map(|d| &d.components)
            .all(|c| c.triangle_holds() && c.a4_holds())
    }
}

/// Replica `k` uses `StreamKey::common(seed, k)`, so every `ε` sees the
/// same jump sequences.
pub fn averaging_error(model: &FoliatedModel, setup: &AveragingSetup, eps: f64) -> Result<AveragingEstimate> {
    require_cylinder(model, "averaging_error")?;
    setup.validate()?;
    make_partition(eps, setup.t, setup.f_choice, setup.p)?;
    let measure = InvariantMeasure::build(&setup.measure)?;
    let averaged = solve_averaged_ode(&setup.field, &measure, &setup.v0(), setup.t, setup.ode_step, &setup.region)?;
    if let Some(t0) = averaged.exit_time {
        return Err(Error::InvalidInput(format!(
            "t = {} is past the time {t0} at which the averaged solution leaves V",
            setup.t
        )));
    }
    let v_t = averaged.final_value().clone();

    let results: Vec<Result<(ReplicaDecomposition, Option<VerticalCoord>)>> = (0..setup.replicas)
        .into_par_iter()
        .map(|k| run_replica(setup, &measure, eps, StreamKey::common(setup.seed, k), k))
        .collect();
    let mut decompositions = Vec::with_capacity(results.len());
    let mut powers = Vec::with_capacity(results.len());
    let mut first_exit = f64::INFINITY;
    for r in results {
        let (d, end) = r?;
        match end {
            Some(y) => powers.push(y.distance(&v_t).powf(setup.p)),
            None => first_exit = first_exit.min(d.exited_at.unwrap_or(f64::INFINITY)),
        }
        decompositions.push(d);
    }
    if powers.is_empty() {
        return Err(Error::ExitedManifold { time: first_exit });
    }
    let exited = setup.replicas - powers.len() as u64;
    if exited > 0 {
        log::warn!("{exited} of {} replicas left the manifold at eps = {eps}", setup.replicas);
    }
    let m = mean_std_err(&powers);
    let estimate = m.mean.powf(1.0 / setup.p);
    // delta method for x ↦ x^{1/p}
    let std_error = if m.mean > 0.0 {
        m.std_error * m.mean.powf(1.0 / setup.p - 1.0) / setup.p
    } else {
        0.0
    };
    Ok(AveragingEstimate {
        eps,
        t: setup.t,
        p: setup.p,
        estimate,
        std_error,
        bound: eval_rate_bounds(&setup.rate_bound(), eps, setup.t)?,
        replicas: setup.replicas,
        exited,
        averaged_end: v_t,
        decompositions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AngularModulation, VerticalDrift};
    use approx::assert_abs_diff_eq;

    fn setup(field: PerturbationField, replicas: u64) -> AveragingSetup {
        AveragingSetup {
            replicas,
            seed: 11,
            ..AveragingSetup::new(field, CylPoint::new(0.3, 1.0, 1.0).unwrap(), 1.0)
        }
    }

    const CYL: FoliatedModel = FoliatedModel::RotationJumpCylinder;

    #[test]
    fn commuting_field_has_no_radial_defect() {
        let s = setup(PerturbationField::new(1.0, VerticalDrift::Zero, AngularModulation::None), 1);
        for eps in [0.3, 0.1, 0.01] {
            let d = decompose_error(&CYL, &s, eps, StreamKey::common(4, 2)).unwrap();
            assert_eq!(d.components[0].delta, 0.0);
            assert!(d.components.iter().all(|c| c.triangle_holds() && c.a4_holds()));
        }
    }

    #[test]
    fn terms_sum_to_defect() {
        let s = setup(PerturbationField::new(1.0, VerticalDrift::Sine, AngularModulation::Cosine), 1);
        for rep in 0..20 {
            let d = decompose_error(&CYL, &s, 0.05, StreamKey::common(8, rep)).unwrap();
            for c in &d.components {
                assert_abs_diff_eq!(c.a1 + c.a2 + c.a3 + c.a4, c.delta, epsilon = 1e-10);
                assert!(c.triangle_holds() && c.a4_holds());
            }
        }
    }

    #[test]
    fn radial_defect_oracle() {
        // δ₁ = ε·∫₀^{t/ε} cos θ_s ds, checked against fine midpoint quadrature
        let s = setup(PerturbationField::new(1.0, VerticalDrift::Zero, AngularModulation::Cosine), 1);
        let eps = 0.1;
        let key = StreamKey::common(5, 0);
        let d = decompose_error(&CYL, &s, eps, key).unwrap();
        let driver = DriverPath::jumps(key, 1.0, 10.0).unwrap();
        let path = CylinderPath::unperturbed(s.start, &driver, 10.0).unwrap();
        let n = 200_000;
        let h = 10.0 / n as f64;
        let quad: f64 = (0..n).map(|k| path.theta((k as f64 + 0.5) * h).cos() * h).sum();
        let tol = eps * 2.0 * h * (driver.jump_times.len() + 1) as f64;
        assert_abs_diff_eq!(d.components[0].delta, eps * quad, epsilon = tol);
    }

    #[test]
    fn commuting_averaging_is_exact() {
        let s = setup(PerturbationField::new(1.0, VerticalDrift::Sine, AngularModulation::None), 20);
        for eps in [0.1, 0.01] {
            let est = averaging_error(&CYL, &s, eps).unwrap();
            assert!(est.estimate <= 1e-8, "{}", est.estimate);
            assert!(est.all_bounds_hold());
        }
    }

    #[test]
    fn tangential_only_perturbation() {
        let s = setup(PerturbationField::new(0.0, VerticalDrift::Zero, AngularModulation::None), 10);
        let est = averaging_error(&CYL, &s, 0.1).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.averaged_end.components, vec![1.0, 1.0]);
    }

    #[test]
    fn exited_paths_are_flagged() {
        let mut s = setup(PerturbationField::new(-3.0, VerticalDrift::Zero, AngularModulation::None), 1);
        s.region.r_min = 1e-3;
        let d = decompose_error(&CYL, &s, 0.1, StreamKey::common(1, 1)).unwrap();
        assert_abs_diff_eq!(d.exited_at.unwrap(), 1.0 / 0.3, epsilon = 1e-12);
        assert!(d.t_effective < 1.0);
        // the averaged solution also leaves V, so the error is undefined
        assert!(averaging_error(&CYL, &s, 0.1).is_err());
    }

    #[test]
    fn torus_is_unsupported() {
        let s = setup(PerturbationField::default(), 1);
        let m = FoliatedModel::TorusWinding(Default::default());
        assert!(matches!(averaging_error(&m, &s, 0.1), Err(Error::Unsupported { .. })));
    }

    #[test]
    fn log_partition_keeps_pathwise_bounds() {
        let mut s = setup(PerturbationField::new(1.0, VerticalDrift::Sine, AngularModulation::Cosine), 50);
        s.f_choice = FChoice::Log;
        let est = averaging_error(&CYL, &s, 0.05).unwrap();
        assert!(est.all_bounds_hold());
    }
}
