//! Foliated models, their charts and leaf-membership predicates.
//!
//! Three models are supported:
//!
//! * **torus winding**: the flat torus `R²/Z²` foliated by lines of a fixed
//!   direction `v`. With an irrational slope every leaf is dense, so leaf
//!   membership is decided on the universal-cover lift of a point.
//! * **rotation-jump cylinder**: `R³` minus the z-axis foliated by horizontal
//!   circles, with cylindrical chart `(θ, r, z)` and vertical coordinate
//!   `(r, z)`.
//! * **coalescing circle**: the same circle foliation, used with independent
//!   leafwise Brownian motions that merge on contact.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Tolerance used for the `(a, b) == lift mod 1` invariant.
pub const LIFT_TOLERANCE: f64 = 1e-12;

/// Reduce an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let reduced = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if reduced >= TAU {
        0.0
    } else {
        reduced
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn reduce_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of the flat torus, optionally carrying its universal-cover lift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub a: f64,
    pub b: f64,
    pub lift: Option<[f64; 2]>,
}

impl TorusPoint {
    /// Point with the given lift; displayed coordinates are the lift mod 1.
    pub fn from_lift(lift: [f64; 2]) -> Result<Self> {
        ensure_finite("torus lift x", lift[0])?;
        ensure_finite("torus lift y", lift[1])?;
        Ok(Self {
            a: reduce_unit(lift[0]),
            b: reduce_unit(lift[1]),
            lift: Some(lift),
        })
    }

    /// Point known only modulo `Z²`; it cannot be used for leaf checks.
    pub fn reduced(a: f64, b: f64) -> Result<Self> {
        ensure_finite("torus a", a)?;
        ensure_finite("torus b", b)?;
        Ok(Self {
            a: reduce_unit(a),
            b: reduce_unit(b),
            lift: None,
        })
    }

    pub fn lift(&self) -> Result<[f64; 2]> {
        self.lift
            .ok_or_else(|| Error::InvalidInput("torus point carries no universal-cover lift".into()))
    }

    /// Checks `(a, b) == lift mod 1` up to [`LIFT_TOLERANCE`] (circularly).
    pub fn is_consistent(&self) -> bool {
        let Some([x, y]) = self.lift else {
            return (0.0..1.0).contains(&self.a) && (0.0..1.0).contains(&self.b);
        };
        let close = |u: f64, w: f64| {
            let d = (u - reduce_unit(w)).abs();
            d.min(1.0 - d) <= LIFT_TOLERANCE
        };
        close(self.a, x) && close(self.b, y)
    }
}

/// A point of `R³` minus the z-axis in cylindrical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylPoint {
    pub theta: f64,
    pub r: f64,
    pub z: f64,
}

impl CylPoint {
    pub fn new(theta: f64, r: f64, z: f64) -> Result<Self> {
        ensure_finite("theta", theta)?;
        ensure_finite("r", r)?;
        ensure_finite("z", z)?;
        if r <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "r must be > 0 (the z-axis is not part of the manifold), got {r}"
            )));
        }
        Ok(Self {
            theta: normalize_angle(theta),
            r,
            z,
        })
    }

    pub fn from_ambient(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(y.atan2(x), x.hypot(y), z)
    }

    pub fn to_ambient(&self) -> [f64; 3] {
        [self.r * self.theta.cos(), self.r * self.theta.sin(), self.z]
    }

    /// Leaf label `(r, z)`.
    pub fn leaf(&self) -> (f64, f64) {
        (self.r, self.z)
    }
}

/// Transversal coordinate `π(x) ∈ V ⊂ R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalCoord {
    pub components: Vec<f64>,
}

impl VerticalCoord {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn distance(&self, other: &VerticalCoord) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Closed rectangle `[r_min, r_max] × [z_min, z_max]` used as the vertical
/// region `V` in averaging experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerticalRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for VerticalRegion {
    fn default() -> Self {
        Self {
            r_min: 0.5,
            r_max: 5.0,
            z_min: -5.0,
            z_max: 5.0,
        }
    }
}

impl VerticalRegion {
    pub fn validate(&self) -> Result<()> {
        let ok = self.r_min > 0.0
            && self.r_min < self.r_max
            && self.z_min < self.z_max
            && [self.r_min, self.r_max, self.z_min, self.z_max]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "vertical region needs 0 < r_min < r_max and z_min < z_max, got {self:?}"
            )))
        }
    }

    pub fn contains(&self, v: &VerticalCoord) -> bool {
        match v.components.as_slice() {
            [r, z] => (self.r_min..=self.r_max).contains(r) && (self.z_min..=self.z_max).contains(z),
            _ => false,
        }
    }

    /// Largest `|z|` in the region.
    pub fn z_abs_max(&self) -> f64 {
        self.z_min.abs().max(self.z_max.abs())
    }
}

/// Catalog names accepted in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TorusWinding,
    RotationJumpCylinder,
    CoalescingCircle,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TorusWinding => "torus-winding",
            ModelKind::RotationJumpCylinder => "rotation-jump-cylinder",
            ModelKind::CoalescingCircle => "coalescing-circle",
        }
    }
}

/// Golden ratio, the default irrational slope of the dense torus winding.
pub const GOLDEN_RATIO: f64 = 1.618_033_988_749_895;

/// Torus foliated by lines of a unit direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTorusWinding")]
pub struct TorusWinding {
    direction: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTorusWinding {
    direction: [f64; 2],
}

impl TryFrom<RawTorusWinding> for TorusWinding {
    type Error = Error;
    fn try_from(raw: RawTorusWinding) -> Result<Self> {
        Self::new(raw.direction)
    }
}

impl TorusWinding {
    /// Normalizes `direction`; rejects the zero vector.
    pub fn new(direction: [f64; 2]) -> Result<Self> {
        ensure_finite("direction x", direction[0])?;
        ensure_finite("direction y", direction[1])?;
        let norm = direction[0].hypot(direction[1]);
        if norm == 0.0 {
            return Err(Error::InvalidInput("torus direction must be nonzero".into()));
        }
        // keep already-normalized input bit-exact so configs round-trip
        if (norm - 1.0).abs() < 4.0 * f64::EPSILON {
            return Ok(Self { direction });
        }
        Ok(Self {
            direction: [direction[0] / norm, direction[1] / norm],
        })
    }

    /// Direction `∝ (1, φ)`, so every leaf is dense.
    pub fn dense() -> Self {
        Self::new([1.0, GOLDEN_RATIO]).expect("golden direction is valid")
    }

    pub fn direction(&self) -> [f64; 2] {
        self.direction
    }

    /// `v⊥ = (−v₂, v₁)`.
    pub fn normal(&self) -> [f64; 2] {
        [-self.direction[1], self.direction[0]]
    }

    pub fn leaf_defect(&self, start: &TorusPoint, current: &TorusPoint) -> Result<f64> {
        let s = start.lift()?;
        let c = current.lift()?;
        let n = self.normal();
        Ok(((c[0] - s[0]) * n[0] + (c[1] - s[1]) * n[1]).abs())
    }
}

impl Default for TorusWinding {
    fn default() -> Self {
        Self::dense()
    }
}

/// One of the three foliated dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FoliatedModel {
    TorusWinding(TorusWinding),
    /// Rotation at unit speed plus unit-rate antipodal jumps on each circle.
    RotationJumpCylinder,
    CoalescingCircle { sigma: f64 },
}

impl FoliatedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FoliatedModel::TorusWinding(_) => ModelKind::TorusWinding,
            FoliatedModel::RotationJumpCylinder => ModelKind::RotationJumpCylinder,
            FoliatedModel::CoalescingCircle { .. } => ModelKind::CoalescingCircle,
        }
    }

    pub fn coalescing_circle(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(FoliatedModel::CoalescingCircle { sigma })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FoliatedModel::TorusWinding(t) => TorusWinding::new(t.direction).map(|_| ()),
            FoliatedModel::RotationJumpCylinder => Ok(()),
            FoliatedModel::CoalescingCircle { sigma } => Self::coalescing_circle(*sigma).map(|_| ()),
        }
    }
}

/// A point of whichever model produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelPoint {
    Torus(TorusPoint),
    Cyl(CylPoint),
}

impl ModelPoint {
    pub fn as_cyl(&self) -> Option<&CylPoint> {
        match self {
            ModelPoint::Cyl(p) => Some(p),
            ModelPoint::Torus(_) => None,
        }
    }

    pub fn as_torus(&self) -> Option<&TorusPoint> {
        match self {
            ModelPoint::Torus(p) => Some(p),
            ModelPoint::Cyl(_) => None,
        }
    }
}

/// Vertical projection `π(p) = (r, z)`; independent of `θ`.
pub fn project_vertical(model: &FoliatedModel, p: &CylPoint) -> Result<VerticalCoord> {
    match model {
        FoliatedModel::TorusWinding(_) => Err(Error::Unsupported {
            operation: "project_vertical",
            model: ModelKind::TorusWinding.name(),
        }),
        _ => Ok(VerticalCoord::new(vec![p.r, p.z])),
    }
}

/// Distance from `current` to the leaf through `start`; zero iff on the leaf.
pub fn leaf_defect(model: &FoliatedModel, start: &ModelPoint, current: &ModelPoint) -> Result<f64> {
    match (model, start, current) {
        (FoliatedModel::TorusWinding(t), ModelPoint::Torus(s), ModelPoint::Torus(c)) => {
            t.leaf_defect(s, c)
        }
        (FoliatedModel::TorusWinding(_), _, _) => Err(Error::InvalidInput(
            "torus model expects torus points".into(),
        )),
        (_, ModelPoint::Cyl(s), ModelPoint::Cyl(c)) => {
            Ok((s.r - c.r).hypot(s.z - c.z))
        }
        _ => Err(Error::InvalidInput(format!(
            "{} expects cylinder points",
            model.kind().name()
        ))),
    }
}

/// Smooth vertical drift component `k₃(z)` of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VerticalDrift {
    #[default]
    Zero,
    /// `k₃(z) = −z`
    Negate,
    /// `k₃(z) = sin z`
    Sine,
}

impl VerticalDrift {
    pub fn eval(self, z: f64) -> f64 {
        match self {
            VerticalDrift::Zero => 0.0,
            VerticalDrift::Negate => -z,
            VerticalDrift::Sine => z.sin(),
        }
    }

    /// Global Lipschitz constant.
    pub fn lipschitz(self) -> f64 {
        match self {
            VerticalDrift::Zero => 0.0,
            VerticalDrift::Negate | VerticalDrift::Sine => 1.0,
        }
    }

    /// `sup |k₃|` over `|z| ≤ z_abs_max`.
    pub fn sup_abs(self, z_abs_max: f64) -> f64 {
        match self {
            VerticalDrift::Zero => 0.0,
            VerticalDrift::Negate => z_abs_max,
            VerticalDrift::Sine => {
                if z_abs_max >= PI / 2.0 {
                    1.0
                } else {
                    z_abs_max.sin()
                }
            }
        }
    }
}

/// Bounded angular modulation added to the radial component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AngularModulation {
    #[default]
    None,
    /// adds `cos θ`
    Cosine,
}

impl AngularModulation {
    pub fn amplitude(self) -> f64 {
        match self {
            AngularModulation::None => 0.0,
            AngularModulation::Cosine => 1.0,
        }
    }
}

/// Transversal perturbation `K(θ, r, z) = (0, λ₀ + a·cos θ, k₃(z))`.
///
/// With `angular = none` the field commutes with the rotation-jump generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationField {
    pub lambda0: f64,
    #[serde(default)]
    pub k3: VerticalDrift,
    #[serde(default)]
    pub angular: AngularModulation,
}

impl Default for PerturbationField {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            k3: VerticalDrift::Zero,
            angular: AngularModulation::None,
        }
    }
}

/// Number of vertical components of the cylinder chart.
pub const VERTICAL_DIM: usize = 2;

impl PerturbationField {
    pub fn new(lambda0: f64, k3: VerticalDrift, angular: AngularModulation) -> Self {
        Self { lambda0, k3, angular }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("lambda0", self.lambda0)
    }

    /// `dπ₁(K)`, the radial component.
    pub fn radial(&self, theta: f64) -> f64 {
        self.lambda0 + self.angular.amplitude() * theta.cos()
    }

    /// `dπ₂(K)`, the vertical component.
    pub fn vertical(&self, z: f64) -> f64 {
        self.k3.eval(z)
    }

    /// `dπ_i(K)` evaluated at a point, `i ∈ {0, 1}`.
    pub fn component(&self, i: usize, p: &CylPoint) -> f64 {
        match i {
            0 => self.radial(p.theta),
            1 => self.vertical(p.z),
            _ => panic!("vertical component index {i} out of range"),
        }
    }

    /// Leaf average of `dπ_i(K)` against the uniform measure, in closed form.
    pub fn leaf_mean(&self, i: usize, v: &VerticalCoord) -> f64 {
        match i {
            0 => self.lambda0,
            1 => self.k3.eval(v.components[1]),
            _ => panic!("vertical component index {i} out of range"),
        }
    }

    pub fn is_commuting(&self) -> bool {
        self.angular == AngularModulation::None
    }

    /// `sup |dπ_i(K)|` over the region.
    pub fn component_sup(&self, i: usize, region: &VerticalRegion) -> f64 {
        match i {
            0 => self.lambda0.abs() + self.angular.amplitude(),
            1 => self.k3.sup_abs(region.z_abs_max()),
            _ => panic!("vertical component index {i} out of range"),
        }
    }

    /// `sup |K|` over `U = circle × V`, Euclidean norm of the vertical part.
    pub fn sup_norm(&self, region: &VerticalRegion) -> f64 {
        self.component_sup(0, region).hypot(self.component_sup(1, region))
    }

    /// Lipschitz constant of `v ↦ Q^{dπ_i(K)}(v)`.
    pub fn leaf_mean_lipschitz(&self, i: usize) -> f64 {
        match i {
            0 => 0.0,
            1 => self.k3.lipschitz(),
            _ => panic!("vertical component index {i} out of range"),
        }
    }
}
