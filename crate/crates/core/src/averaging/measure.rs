//! Leaf averages `Q^g` and the averaged transversal ODE.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::drivers::{DriverPath, StreamKey};
use crate::error::{ensure_finite, Error, Result};
use crate::flows::CylinderPath;
use crate::geometry::{CylPoint, PerturbationField, VerticalCoord, VerticalRegion, VERTICAL_DIM};
use crate::ode::rk4_vec;
use crate::stats::{mean_std_err, pairwise_sum};

fn default_nodes() -> usize {
    64
}

fn default_sample_dt() -> f64 {
    0.01
}

/// How the invariant probability measure of a circle leaf is represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InvariantMeasureSpec {
    /// Normalized Lebesgue measure, integrated with an equispaced rule on
    /// `nodes` points (exact for trigonometric polynomials of degree
    /// below `nodes`).
    AnalyticUniform {
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Time average of the unperturbed rotation-jump angle over
    /// `[burn_in, burn_in + horizon]`; `burn_in` defaults to 10% of horizon.
    Empirical {
        horizon: f64,
        #[serde(default)]
        burn_in: Option<f64>,
        #[serde(default = "default_sample_dt")]
        dt: f64,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for InvariantMeasureSpec {
    fn default() -> Self {
        Self::AnalyticUniform { nodes: default_nodes() }
    }
}

impl InvariantMeasureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::AnalyticUniform { nodes } if nodes == 0 => {
                Err(Error::InvalidInput("quadrature needs at least one node".into()))
            }
            Self::AnalyticUniform { .. } => Ok(()),
            Self::Empirical { horizon, burn_in, dt, .. } => {
                ensure_finite("measure horizon", horizon)?;
                if horizon <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "empirical measure horizon must be > 0, got {horizon}"
                    )));
                }
                if !(dt > 0.0 && dt <= horizon) {
                    return Err(Error::InvalidInput(format!("sample step must lie in (0, horizon], got {dt}")));
                }
                if let Some(b) = burn_in {
                    if !(b >= 0.0 && b.is_finite()) {
                        return Err(Error::InvalidInput(format!("burn-in must be >= 0, got {b}")));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Equally weighted angle samples standing in for the leaf measure.
///
/// The rotation-jump angle process does not depend on `(r, z)`, so one
/// sample set serves every leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasure {
    thetas: Vec<f64>,
    batches: Option<usize>,
}

/// Leaf average, with a batch-means standard error for empirical measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafAverage {
    pub value: f64,
    pub std_error: Option<f64>,
}

impl InvariantMeasure {
    pub fn build(spec: &InvariantMeasureSpec) -> Result<Self> {
        spec.validate()?;
        match *spec {
            InvariantMeasureSpec::AnalyticUniform { nodes } => Ok(Self {
                thetas: (0..nodes).map(|k| TAU * k as f64 / nodes as f64).collect(),
                batches: None,
            }),
            InvariantMeasureSpec::Empirical { horizon, burn_in, dt, seed } => {
                let burn = burn_in.unwrap_or(0.1 * horizon);
                let driver = DriverPath::jumps(StreamKey::common(seed, u64::MAX), 1.0, burn + horizon)?;
                let start = CylPoint { theta: 0.0, r: 1.0, z: 0.0 };
                let path = CylinderPath::unperturbed(start, &driver, burn + horizon)?;
                let n = ((horizon / dt).round() as usize).max(1);
                let h = horizon / n as f64;
                let thetas = (0..n).map(|k| path.theta(burn + (k as f64 + 0.5) * h)).collect();
                Ok(Self { thetas, batches: Some(20.min(n)) })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        vec![1.0 / self.thetas.len() as f64; self.thetas.len()]
    }

    /// Average of an angular function.
    pub fn average<G: Fn(f64) -> f64>(&self, g: G) -> LeafAverage {
        let values: Vec<f64> = self.thetas.iter().map(|&t| g(t)).collect();
        let value = pairwise_sum(&values) / values.len() as f64;
        let std_error = self.batches.map(|b| {
            let size = values.len() / b;
            let means: Vec<f64> = values
                .chunks(size)
                .take(b)
                .map(|c| pairwise_sum(c) / c.len() as f64)
                .collect();
            mean_std_err(&means).std_error
        });
        LeafAverage { value, std_error }
    }
}

/// `Q^g(v) = ∫ g dμ` over the leaf `(r, z)`.
pub fn leaf_average<G: Fn(&CylPoint) -> f64>(g: G, leaf: (f64, f64), spec: &InvariantMeasureSpec) -> Result<LeafAverage> {
    let (r, z) = leaf;
    CylPoint::new(0.0, r, z)?;
    let measure = InvariantMeasure::build(spec)?;
    Ok(measure.average(|theta| g(&CylPoint { theta, r, z })))
}

/// `(Q^{dπ₁(K)}, Q^{dπ₂(K)})` at a vertical coordinate.
pub fn averaged_vector_field(field: &PerturbationField, measure: &InvariantMeasure, v: &[f64]) -> Result<Vec<f64>> {
    let [r, z] = v else {
        return Err(Error::ShapeMismatch(format!("expected {VERTICAL_DIM} vertical components, got {}", v.len())));
    };
    if !(*r > 0.0 && r.is_finite() && z.is_finite()) {
        return Err(Error::InvalidInput(format!("averaged field evaluated off the manifold at r = {r}, z = {z}")));
    }
    Ok((0..VERTICAL_DIM)
        .map(|i| measure.average(|theta| field.component(i, &CylPoint { theta, r: *r, z: *z })).value)
        .collect())
}

/// Solution of the averaged ODE, cut at the first exit from `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedTrajectory {
    pub times: Vec<f64>,
    pub values: Vec<VerticalCoord>,
    pub exit_time: Option<f64>,
}

impl AveragedTrajectory {
    pub fn final_value(&self) -> &VerticalCoord {
        self.values.last().expect("trajectory holds the initial value")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds the initial time")
    }
}

/// `dv/dt = Q(v)` by classical RK4 up to `horizon` or the first exit from
/// `region`, located by bisection on the last step.
pub fn solve_averaged_ode(
    field: &PerturbationField,
    measure: &InvariantMeasure,
    v0: &VerticalCoord,
    horizon: f64,
    step: f64,
    region: &VerticalRegion,
) -> Result<AveragedTrajectory> {
    region.validate()?;
    if !region.contains(v0) {
        return Err(Error::InvalidInput(format!("initial vertical coordinate {:?} lies outside V", v0.components)));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidInput(format!("ODE horizon must be >= 0, got {horizon}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!("ODE step must be > 0, got {step}")));
    }
    let f = |v: &[f64]| averaged_vector_field(field, measure, v);
    let mut times = vec![0.0];
    let mut values = vec![v0.clone()];
    let mut t = 0.0;
    let mut v = v0.components.clone();
    while horizon - t > 1e-12 * horizon.max(1.0) {
        let h = step.min(horizon - t);
        let next = rk4_vec(&f, &v, h)?;
        if region.contains(&VerticalCoord::new(next.clone())) {
            t += h;
            v = next;
            times.push(t);
            values.push(VerticalCoord::new(v.clone()));
            continue;
        }
        let (mut lo, mut hi) = (0.0, h);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let trial = rk4_vec(&f, &v, mid)?;
            if region.contains(&VerticalCoord::new(trial)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        times.push(t + lo);
        values.push(VerticalCoord::new(rk4_vec(&f, &v, lo)?));
        return Ok(AveragedTrajectory {
            times,
            values,
            exit_time: Some(t + hi),
        });
    }
    Ok(AveragedTrajectory {
        times,
        values,
        exit_time: None,
    })
}
