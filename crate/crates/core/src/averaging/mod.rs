//! Transversal averaging for the perturbed cylinder flow.
//!
//! The perturbed flow `y^ε` is run on `[0, t/ε]`; its vertical coordinate is
//! compared with the solution `v(t)` of the averaged ODE `dv/dt = Q(v)`. The
//! pathwise defect `δ_i` splits over a partition `t_n = n·Δt` into four
//! terms `A₁..A₄`, and the mean error is compared with the composite bound
//! `G(ε, t) = √t·e^{Ct}·H(ε, t)`.

mod decomposition;
mod measure;

pub use decomposition::{
    averaging_error, decompose_error, AveragingEstimate, AveragingSetup, ErrorDecomposition, ReplicaDecomposition,
};
pub use measure::{
    averaged_vector_field, leaf_average, solve_averaged_ode, AveragedTrajectory, InvariantMeasure,
    InvariantMeasureSpec, LeafAverage,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PerturbationField, VerticalCoord, VerticalRegion, VERTICAL_DIM};

/// Choice of the partition scale `f(ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FChoice {
    /// `f(ε) = √ε`
    #[default]
    Sqrt,
    /// `f(ε) = |ln ε|^{−1/(2p)}`
    Log,
}

impl FChoice {
    pub fn eval(self, eps: f64, p: f64) -> f64 {
        match self {
            FChoice::Sqrt => eps.sqrt(),
            FChoice::Log => eps.ln().abs().powf(-1.0 / (2.0 * p)),
        }
    }
}

/// Partition `t_n = n·Δt`, `n ≤ N`, of the fast-time interval `[0, t/ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionScheme {
    pub eps: f64,
    pub t: f64,
    pub f_choice: FChoice,
    pub f_value: f64,
    pub delta_t: f64,
    pub n_intervals: usize,
}

impl PartitionScheme {
    /// Fast-time horizon `t/ε`.
    pub fn horizon(&self) -> f64 {
        self.t / self.eps
    }

    pub fn point(&self, n: usize) -> f64 {
        (n as f64 * self.delta_t).min(self.horizon())
    }

    /// `t_N`, where the tail term `A₄` starts.
    pub fn tail_start(&self) -> f64 {
        self.point(self.n_intervals)
    }
}

/// `Δt = t/f(ε)` and `N = [f(ε)/ε]`, so that `N·Δt ≤ t/ε`.
///
/// For `f = √ε` this is `Δt = t/√ε`, `N = [ε^{−1/2}]`.
pub fn make_partition(eps: f64, t: f64, f_choice: FChoice, p: f64) -> Result<PartitionScheme> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!(
            "make_partition requires 0 < eps < 1 (the partition degenerates otherwise), got eps = {eps}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("make_partition requires t > 0, got t = {t}")));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidInput(format!("moment order p must be in [1, inf), got {p}")));
    }
    let f_value = f_choice.eval(eps, p);
    let x = f_value / eps;
    let n = if (x - x.round()).abs() < 1e-9 * x.max(1.0) { x.round() } else { x.floor() };
    Ok(PartitionScheme {
        eps,
        t,
        f_choice,
        f_value,
        delta_t: t / f_value,
        n_intervals: n as usize,
    })
}

/// Constants of the composite rate bound; `h(ε, t) = √ε·t·h_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub h_scale: f64,
}

impl RateBound {
    /// `C` = sum of the Lipschitz constants of `Q^{dπ_i(K)}`, `C₃ = h_scale =
    /// sup|K|` over `U`, `C₁ = C₂ = 10·sup|K|` unless overridden.
    pub fn for_field(field: &PerturbationField, region: &VerticalRegion, c1: Option<f64>, c2: Option<f64>) -> Self {
        let sup = field.sup_norm(region);
        Self {
            c: (0..VERTICAL_DIM).map(|i| field.leaf_mean_lipschitz(i)).sum(),
            c1: c1.unwrap_or(10.0 * sup),
            c2: c2.unwrap_or(10.0 * sup),
            c3: sup,
            h_scale: sup,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c", self.c), ("c1", self.c1), ("c2", self.c2), ("c3", self.c3), ("h_scale", self.h_scale)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("bound constant {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn h(&self, eps: f64, t: f64) -> f64 {
        eps.sqrt() * t * self.h_scale
    }
}

/// Which argument of the minimum defining `H` is smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    H,
    C1,
    C2,
    C3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub eps: f64,
    pub t: f64,
    /// `[h√t, C₁ε^{1/4}, C₂√ε t^{3/2}, C₃√(εt)]`
    pub branches: [f64; 4],
    pub active: Branch,
    pub h_bound: f64,
    pub g_bound: f64,
}

/// `H = min{h√t, C₁ε^{1/4}, C₂√ε t^{3/2}, C₃√(εt)}` and `G = √t e^{Ct} H`.
pub fn eval_rate_bounds(rb: &RateBound, eps: f64, t: f64) -> Result<RateEvaluation> {
    rb.validate()?;
    if !(eps >= 0.0 && eps.is_finite() && t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("rate bounds need eps >= 0 and t >= 0, got ({eps}, {t})")));
    }
    let branches = [
        rb.h(eps, t) * t.sqrt(),
        rb.c1 * eps.powf(0.25),
        rb.c2 * eps.sqrt() * t.powf(1.5),
        rb.c3 * (eps * t).sqrt(),
    ];
    let (idx, h_bound) = branches
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
    let active = [Branch::H, Branch::C1, Branch::C2, Branch::C3][idx];
    Ok(RateEvaluation {
        eps,
        t,
        branches,
        active,
        h_bound,
        g_bound: t.sqrt() * (rb.c * t).exp() * h_bound,
    })
}

/// Least-squares fit of `ln error` against `ln ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    /// Every error was zero: the averaging is exact and no slope exists.
    pub exact: bool,
    /// Points left out of the fit because their error was zero.
    pub zero_errors: usize,
}

pub fn fit_rate_exponent(pairs: &[(f64, f64)]) -> Result<RateFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidInput(format!("rate fit needs at least 3 points, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(e, v)| !(*e > 0.0 && e.is_finite() && *v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput(format!("rate fit needs eps > 0 and error >= 0, got {bad:?}")));
    }
    let usable: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    let zero_errors = pairs.len() - usable.len();
    if usable.is_empty() {
        return Ok(RateFit { slope: None, intercept: None, r2: None, exact: true, zero_errors });
    }
    if usable.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "rate fit needs at least 3 nonzero errors, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = usable.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("rate fit needs at least two distinct eps values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        slope: Some(slope),
        intercept: Some(intercept),
        r2: Some(r2),
        exact: false,
        zero_errors,
    })
}

/// Largest finite-difference slope of each `Q^{dπ_i(K)}` over a `k × k`
/// grid of leaves in `region`.
pub fn measure_leaf_mean_lipschitz(
    field: &PerturbationField,
    measure: &InvariantMeasure,
    region: &VerticalRegion,
    k: usize,
) -> Result<Vec<f64>> {
    region.validate()?;
    let k = k.max(2);
    let at = |a: usize, b: usize| {
        let r = region.r_min + (region.r_max - region.r_min) * a as f64 / (k - 1) as f64;
        let z = region.z_min + (region.z_max - region.z_min) * b as f64 / (k - 1) as f64;
        VerticalCoord::new(vec![r, z])
    };
    let mut grid = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let v = at(a, b);
            let q = averaged_vector_field(field, measure, &v.components)?;
            grid.push((v, q));
        }
    }
    let mut out = vec![0.0f64; VERTICAL_DIM];
    for a in 0..k {
        for b in 0..k {
            let (v, q) = &grid[a * k + b];
            for (da, db) in [(1, 0), (0, 1)] {
                if a + da >= k || b + db >= k {
                    continue;
                }
                let (w, qw) = &grid[(a + da) * k + b + db];
                let d = v.distance(w);
                for i in 0..VERTICAL_DIM {
                    out[i] = out[i].max((q[i] - qw[i]).abs() / d);
                }
            }
        }
    }
    Ok(out)
}
