//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! kind = "rates"          # simulate | kernel-check | average | rates | coalesce
//! seed = 7                # master seed; every stream key derives from it
//! replicas = 1000         # optional, per-kind default otherwise
//! out = "results/rates"   # optional artifact directory
//!
//! [model]
//! name = "rotation-jump-cylinder"
//!
//! [averaging]
//! eps = [0.2, 0.1, 0.05, 0.025, 0.0125]
//! t = 1.0
//! field = { lambda0 = 1.0, k3 = "zero", angular = "cosine" }
//! ```
//!
//! Every section has defaults (see the `Default` impls); unknown keys are
//! rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::averaging::{make_partition, AveragingSetup, FChoice, InvariantMeasureSpec};
use crate::error::{Error, Result};
use crate::geometry::{
    AngularModulation, CylPoint, FoliatedModel, ModelKind, ModelPoint, PerturbationField, TorusPoint,
    VerticalDrift, VerticalRegion,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    KernelCheck,
    Average,
    Rates,
    Coalesce,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::KernelCheck => "kernel-check",
            ExperimentKind::Average => "average",
            ExperimentKind::Rates => "rates",
            ExperimentKind::Coalesce => "coalesce",
        }
    }

    /// Replica count used when the config does not set one.
    pub fn default_replicas(self) -> u64 {
        match self {
            ExperimentKind::Simulate => 10,
            ExperimentKind::KernelCheck => 0,
            ExperimentKind::Average => 200,
            ExperimentKind::Rates | ExperimentKind::Coalesce => 1000,
        }
    }

    pub fn default_model(self) -> FoliatedModel {
        match self {
            ExperimentKind::Simulate => FoliatedModel::TorusWinding(Default::default()),
            ExperimentKind::Coalesce => FoliatedModel::CoalescingCircle { sigma: 1.0 },
            _ => FoliatedModel::RotationJumpCylinder,
        }
    }
}

/// Start point in config files: a torus lift or cylinder coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Torus { lift: [f64; 2] },
    Cylinder { theta: f64, r: f64, z: f64 },
}

impl StartPoint {
    pub fn to_model_point(self) -> Result<ModelPoint> {
        match self {
            StartPoint::Torus { lift } => TorusPoint::from_lift(lift).map(ModelPoint::Torus),
            StartPoint::Cylinder { theta, r, z } => CylPoint::new(theta, r, z).map(ModelPoint::Cyl),
        }
    }

    fn cyl(theta: f64, r: f64, z: f64) -> Self {
        StartPoint::Cylinder { theta, r, z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: f64,
    pub dt: f64,
    /// Defaults to three points suited to the model.
    pub starts: Option<Vec<StartPoint>>,
    /// Keep every k-th frame in the trajectory CSV.
    pub record_every: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            dt: 1e-3,
            starts: None,
            record_every: 10,
        }
    }
}

impl SimulateSection {
    pub fn start_points(&self, model: &FoliatedModel) -> Vec<StartPoint> {
        if let Some(s) = &self.starts {
            return s.clone();
        }
        match model {
            FoliatedModel::TorusWinding(_) => vec![
                StartPoint::Torus { lift: [0.1, 0.2] },
                StartPoint::Torus { lift: [0.5, 0.5] },
                StartPoint::Torus { lift: [0.9, 0.3] },
            ],
            _ => vec![StartPoint::cyl(0.0, 1.0, 0.0), StartPoint::cyl(PI / 2.0, 1.0, 0.0), StartPoint::cyl(0.0, 2.0, 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    /// Angular sites per leaf (even).
    pub sites: usize,
    pub leaves: Vec<(f64, f64)>,
    /// Kernel times as multiples of `2π/sites`.
    pub steps: Vec<usize>,
    /// Monte Carlo replicas for the empirical two-point kernel (0 = skip).
    pub empirical_replicas: u64,
    /// Cyclic walk used for the coalescing construction.
    pub chain_sites: usize,
    pub chain_p: f64,
    pub chain_powers: u32,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            sites: 8,
            leaves: vec![(1.0, 0.0), (2.0, 0.0)],
            steps: vec![1, 2],
            empirical_replicas: 0,
            chain_sites: 3,
            chain_p: 0.3,
            chain_powers: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AveragingSection {
    pub eps: Vec<f64>,
    pub t: f64,
    pub p: f64,
    pub f_choice: FChoice,
    pub ode_step: f64,
    pub field: PerturbationField,
    pub start: CylPoint,
    pub region: VerticalRegion,
    pub measure: InvariantMeasureSpec,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

impl Default for AveragingSection {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            t: 1.0,
            p: 2.0,
            f_choice: FChoice::Sqrt,
            ode_step: 1e-3,
            field: PerturbationField::new(1.0, VerticalDrift::Zero, AngularModulation::Cosine),
            start: CylPoint { theta: 0.0, r: 1.0, z: 0.0 },
            region: VerticalRegion::default(),
            measure: InvariantMeasureSpec::default(),
            c1: None,
            c2: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoalesceSection {
    pub horizon: f64,
    pub dt: f64,
    /// Defaults to an antipodal same-leaf pair plus a point on another leaf.
    pub starts: Vec<CylPoint>,
    /// Grid steps between recorded frames of the coalescence curve.
    pub record_every: usize,
}

impl Default for CoalesceSection {
    fn default() -> Self {
        Self {
            horizon: 50.0,
            dt: 0.01,
            starts: vec![
                CylPoint { theta: 0.0, r: 1.0, z: 0.0 },
                CylPoint { theta: PI, r: 1.0, z: 0.0 },
                CylPoint { theta: 0.0, r: 2.0, z: 0.0 },
            ],
            record_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub model: FoliatedModel,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub averaging: AveragingSection,
    #[serde(default)]
    pub coalesce: CoalesceSection,
}

impl ExperimentConfig {
    /// Config with every section at its default.
    pub fn default_for(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            replicas: None,
            out: None,
            model: kind.default_model(),
            simulate: SimulateSection::default(),
            kernel: KernelSection::default(),
            averaging: AveragingSection::default(),
            coalesce: CoalesceSection::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn replica_count(&self) -> u64 {
        self.replicas.unwrap_or(self.kind.default_replicas())
    }

    pub fn averaging_setup(&self) -> AveragingSetup {
        let a = &self.averaging;
        AveragingSetup {
            field: a.field,
            start: a.start,
            t: a.t,
            p: a.p,
            replicas: self.replica_count(),
            seed: self.seed,
            f_choice: a.f_choice,
            ode_step: a.ode_step,
            region: a.region,
            measure: a.measure,
            c1: a.c1,
            c2: a.c2,
        }
    }

    /// Checks every field the chosen kind consumes; all violations are
    /// reported together.
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        if let Err(e) = self.model.validate() {
            check(false, format!("model: {e}"));
        }
        let replicas = self.replica_count();
        let kind = self.kind;
        let needs_model = |m: ModelKind| format!("{} experiments need model {}", kind.name(), m.name());
        match kind {
            ExperimentKind::Simulate => {
                let s = &self.simulate;
                check(replicas >= 1, format!("replicas = {replicas} must be >= 1"));
                check(s.horizon > 0.0 && s.horizon.is_finite(), format!("simulate.horizon = {} must be > 0", s.horizon));
                check(
                    s.dt > 0.0 && s.dt <= s.horizon,
                    format!("simulate.dt = {} must lie in (0, horizon]", s.dt),
                );
                check(s.record_every >= 1, "simulate.record_every must be >= 1".into());
                let starts = s.start_points(&self.model);
                check(!starts.is_empty(), "simulate.starts must not be empty".into());
                for (i, p) in starts.iter().enumerate() {
                    let torus = matches!(self.model, FoliatedModel::TorusWinding(_));
                    let matches = torus == matches!(p, StartPoint::Torus { .. });
                    check(matches, format!("simulate.starts[{i}] does not match model {}", self.model.kind().name()));
                    if let Err(e) = p.to_model_point() {
                        check(false, format!("simulate.starts[{i}]: {e}"));
                    }
                }
            }
            ExperimentKind::KernelCheck => {
                let k = &self.kernel;
                check(
                    self.model == FoliatedModel::RotationJumpCylinder,
                    needs_model(ModelKind::RotationJumpCylinder),
                );
                check(k.sites >= 2 && k.sites % 2 == 0, format!("kernel.sites = {} must be even and >= 2", k.sites));
                check(!k.leaves.is_empty(), "kernel.leaves must not be empty".into());
                for (i, (r, z)) in k.leaves.iter().enumerate() {
                    check(*r > 0.0 && r.is_finite() && z.is_finite(), format!("kernel.leaves[{i}] needs r > 0"));
                }
                check(!k.steps.is_empty(), "kernel.steps must not be empty".into());
                check(k.chain_sites >= 2, format!("kernel.chain_sites = {} must be >= 2", k.chain_sites));
                check((0.0..=1.0).contains(&k.chain_p), format!("kernel.chain_p = {} must lie in [0, 1]", k.chain_p));
            }
            ExperimentKind::Average | ExperimentKind::Rates => {
                let a = &self.averaging;
                check(
                    self.model == FoliatedModel::RotationJumpCylinder,
                    needs_model(ModelKind::RotationJumpCylinder),
                );
                check(!a.eps.is_empty(), "averaging.eps must not be empty".into());
                if kind == ExperimentKind::Rates {
                    check(a.eps.len() >= 3, format!("rates need at least 3 eps values, got {}", a.eps.len()));
                }
                for (i, &e) in a.eps.iter().enumerate() {
                    if let Err(err) = make_partition(e, a.t.max(f64::MIN_POSITIVE), a.f_choice, a.p.max(1.0)) {
                        check(false, format!("averaging.eps[{i}] = {e}: {err}"));
                    }
                }
                if let Err(e) = self.averaging_setup().validate() {
                    check(false, format!("averaging: {e}"));
                }
            }
            ExperimentKind::Coalesce => {
                let c = &self.coalesce;
                check(
                    matches!(self.model, FoliatedModel::CoalescingCircle { .. }),
                    needs_model(ModelKind::CoalescingCircle),
                );
                check(replicas >= 1, format!("replicas = {replicas} must be >= 1"));
                check(c.horizon > 0.0 && c.horizon.is_finite(), format!("coalesce.horizon = {} must be > 0", c.horizon));
                check(c.dt > 0.0 && c.dt <= c.horizon, format!("coalesce.dt = {} must lie in (0, horizon]", c.dt));
                check(c.starts.len() >= 2, "coalesce.starts needs at least two points".into());
                check(c.record_every >= 1, "coalesce.record_every must be >= 1".into());
                for (i, p) in c.starts.iter().enumerate() {
                    if let Err(e) = CylPoint::new(p.theta, p.r, p.z) {
                        check(false, format!("coalesce.starts[{i}]: {e}"));
                    }
                }
            }
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}
