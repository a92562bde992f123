//! Exact finite transition kernels on leaf grids.
//!
//! A [`LeafGrid`] places `m` equally spaced angular sites on each of a list
//! of circle leaves. Kernels are dense row-stochastic matrices over the
//! grid (one-point) or over its square (two-point, pairs indexed
//! `i·n + j`). All property checks use the complete basis of grid
//! indicator functions, so each reported defect is an exact max-norm.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::drivers::{DriverPath, StreamKey};
use crate::error::{Error, Result};
use crate::flows::CylinderPath;
use crate::geometry::CylPoint;

/// Tolerance for row sums of constructed kernels.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Angular sites on a set of circle leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafGrid {
    sites: usize,
    leaves: Vec<(f64, f64)>,
}

impl LeafGrid {
    pub fn new(sites: usize, leaves: Vec<(f64, f64)>) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidInput(format!("a leaf grid needs m >= 2 sites, got {sites}")));
        }
        if leaves.is_empty() {
            return Err(Error::InvalidInput("a leaf grid needs at least one leaf".into()));
        }
        for (i, a) in leaves.iter().enumerate() {
            if leaves[..i].contains(a) {
                return Err(Error::InvalidInput(format!("duplicate leaf label {a:?}")));
            }
        }
        Ok(Self { sites, leaves })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn leaves(&self) -> &[(f64, f64)] {
        &self.leaves
    }

    pub fn n_states(&self) -> usize {
        self.sites * self.leaves.len()
    }

    pub fn index(&self, leaf: usize, site: usize) -> usize {
        leaf * self.sites + site
    }

    /// `(leaf, site)` of a state index.
    pub fn split(&self, state: usize) -> (usize, usize) {
        (state / self.sites, state % self.sites)
    }

    pub fn angle(&self, site: usize) -> f64 {
        TAU * site as f64 / self.sites as f64
    }

    pub fn point(&self, state: usize) -> CylPoint {
        let (l, s) = self.split(state);
        let (r, z) = self.leaves[l];
        CylPoint { theta: self.angle(s), r, z }
    }

    /// Number of whole sites a rotation by `t` moves, if `t` is aligned.
    pub fn rotation_steps(&self, t: f64) -> Result<usize> {
        let x = t * self.sites as f64 / TAU;
        let k = x.round();
        if !(t >= 0.0) || (x - k).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::GridAlignment { t, sites: self.sites });
        }
        Ok(k as usize % self.sites)
    }

    pub fn label(&self, state: usize) -> String {
        let (l, s) = self.split(state);
        let (r, z) = self.leaves[l];
        format!("r={r},z={z},site={s}")
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::ShapeMismatch("matrix rows must form a square".into()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch(format!("{}x{} times {}x{}", self.n, self.n, other.n, other.n)));
        }
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Matrix {
        let mut acc = Matrix::identity(self.n);
        for _ in 0..k {
            acc = acc.mul(self).expect("same dimension");
        }
        acc
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch(format!("{} vs {}", self.n, other.n)));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Largest `|row sum − 1|`.
    pub fn row_sum_defect(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Rotation + jump-parity structure of a cylinder kernel, kept so the
/// two-point flow kernel can reuse the same outcome for both coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationJump {
    pub shift: usize,
    /// Probability of an even number of jumps, `(1 + e^{−2t})/2`.
    pub even: f64,
}

/// Row-stochastic kernel on a grid (`arity` 1) or its square (`arity` 2).
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pub grid: LeafGrid,
    pub arity: usize,
    pub t: f64,
    pub matrix: Matrix,
    pub structure: Option<RotationJump>,
}

impl TransitionKernel {
    pub fn new(grid: LeafGrid, arity: usize, t: f64, matrix: Matrix) -> Result<Self> {
        let expected = grid.n_states().pow(arity as u32);
        if !(1..=2).contains(&arity) || matrix.dim() != expected {
            return Err(Error::ShapeMismatch(format!(
                "arity {arity} over {} states needs a {expected}-dim matrix, got {}",
                grid.n_states(),
                matrix.dim()
            )));
        }
        if matrix.min_entry() < 0.0 {
            return Err(Error::InvalidInput("kernel entries must be nonnegative".into()));
        }
        if matrix.row_sum_defect() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "kernel rows must sum to 1 (defect {})",
                matrix.row_sum_defect()
            )));
        }
        Ok(Self { grid, arity, t, matrix, structure: None })
    }

    /// Number of one-point states.
    pub fn base_states(&self) -> usize {
        self.grid.n_states()
    }

    /// `self` followed by `other` (kernel of time `t + s`).
    pub fn then(&self, other: &TransitionKernel) -> Result<TransitionKernel> {
        self.ensure_same_space(other)?;
        Ok(TransitionKernel {
            grid: self.grid.clone(),
            arity: self.arity,
            t: self.t + other.t,
            matrix: self.matrix.mul(&other.matrix)?,
            structure: None,
        })
    }

    pub fn power(&self, k: u32) -> TransitionKernel {
        TransitionKernel {
            grid: self.grid.clone(),
            arity: self.arity,
            t: self.t * k as f64,
            matrix: self.matrix.pow(k),
            structure: None,
        }
    }

    fn ensure_same_space(&self, other: &TransitionKernel) -> Result<()> {
        if self.grid != other.grid || self.arity != other.arity {
            return Err(Error::ShapeMismatch("kernels live on different grids".into()));
        }
        Ok(())
    }

    pub fn export(&self) -> KernelExport {
        let n = self.base_states();
        let labels = (0..self.matrix.dim())
            .map(|i| {
                if self.arity == 1 {
                    self.grid.label(i)
                } else {
                    format!("({})|({})", self.grid.label(i / n), self.grid.label(i % n))
                }
            })
            .collect();
        KernelExport {
            sites: self.grid.sites,
            leaves: self.grid.leaves.clone(),
            arity: self.arity,
            t: self.t,
            labels,
            matrix: self.matrix.rows(),
        }
    }
}

/// JSON form of a kernel: grid labels plus a dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelExport {
    pub sites: usize,
    pub leaves: Vec<(f64, f64)>,
    pub arity: usize,
    pub t: f64,
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl KernelExport {
    pub fn into_kernel(self) -> Result<TransitionKernel> {
        let grid = LeafGrid::new(self.sites, self.leaves)?;
        TransitionKernel::new(grid, self.arity, self.t, Matrix::from_rows(self.matrix)?)
    }
}

/// One check result as written to defect reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectRecord {
    pub check: String,
    pub t: f64,
    pub defect: f64,
}

impl DefectRecord {
    pub fn new(check: impl Into<String>, t: f64, defect: f64) -> Self {
        Self { check: check.into(), t, defect }
    }
}

/// Rotation-jump semigroup on the grid: from `(leaf, θ)` mass
/// `(1+e^{−2t})/2` to `θ+t` and `(1−e^{−2t})/2` to `θ+t+π`, same leaf.
///
/// `t` must be a multiple of `2π/m` and `m` must be even.
pub fn build_cylinder_kernel(grid: &LeafGrid, t: f64) -> Result<TransitionKernel> {
    let m = grid.sites;
    if m % 2 != 0 {
        return Err(Error::GridAlignment { t: PI, sites: m });
    }
    let shift = grid.rotation_steps(t)?;
    let decay = (-2.0 * t).exp();
    let even = 0.5 * (1.0 + decay);
    let odd = 0.5 * (1.0 - decay);
    let mut matrix = Matrix::zeros(grid.n_states());
    for l in 0..grid.leaves.len() {
        for s in 0..m {
            let from = grid.index(l, s);
            matrix[(from, grid.index(l, (s + shift) % m))] += even;
            matrix[(from, grid.index(l, (s + shift + m / 2) % m))] += odd;
        }
    }
    let mut k = TransitionKernel::new(grid.clone(), 1, t, matrix)?;
    k.structure = Some(RotationJump { shift, even });
    Ok(k)
}

/// Two-point kernel of the common-noise flow: both coordinates receive the
/// same rotation and the same jump parity.
pub fn product_kernel_flow(k1: &TransitionKernel) -> Result<TransitionKernel> {
    let rj = match (k1.arity, k1.structure) {
        (1, Some(rj)) => rj,
        _ => {
            return Err(Error::InvalidInput(
                "the flow two-point kernel needs a one-point cylinder kernel".into(),
            ))
        }
    };
    let grid = &k1.grid;
    let (n, m) = (grid.n_states(), grid.sites);
    let step = |x: usize, extra: usize| {
        let (l, s) = grid.split(x);
        grid.index(l, (s + rj.shift + extra) % m)
    };
    let mut matrix = Matrix::zeros(n * n);
    for x1 in 0..n {
        for x2 in 0..n {
            let from = x1 * n + x2;
            matrix[(from, step(x1, 0) * n + step(x2, 0))] += rj.even;
            matrix[(from, step(x1, m / 2) * n + step(x2, m / 2))] += 1.0 - rj.even;
        }
    }
    TransitionKernel::new(grid.clone(), 2, k1.t, matrix)
}

/// Independent tensor product `P ⊗ P`.
pub fn independent_product(k1: &TransitionKernel) -> Result<TransitionKernel> {
    if k1.arity != 1 {
        return Err(Error::ShapeMismatch("independent product needs a one-point kernel".into()));
    }
    let n = k1.base_states();
    let p = &k1.matrix;
    let mut matrix = Matrix::zeros(n * n);
    for x1 in 0..n {
        for x2 in 0..n {
            for y1 in 0..n {
                let a = p[(x1, y1)];
                if a == 0.0 {
                    continue;
                }
                for y2 in 0..n {
                    matrix[(x1 * n + x2, y1 * n + y2)] = a * p[(x2, y2)];
                }
            }
        }
    }
    TransitionKernel::new(k1.grid.clone(), 2, k1.t, matrix)
}

fn check_pair(k2: &TransitionKernel, k1: &TransitionKernel) -> Result<usize> {
    if k2.arity != 2 || k1.arity != 1 || k2.grid != k1.grid {
        return Err(Error::ShapeMismatch(
            "expected a two-point kernel on the square of the one-point grid".into(),
        ));
    }
    Ok(k1.base_states())
}

/// Max over states and indicator test functions of `|P⁽²⁾f − P⁽¹⁾g|` where
/// `f(x₁, x₂)` is `g(x₁)` or `g(x₂)`, i.e. the marginal defect of either
/// coordinate.
pub fn check_compatibility(k2: &TransitionKernel, k1: &TransitionKernel) -> Result<f64> {
    let n = check_pair(k2, k1)?;
    let mut worst = 0.0f64;
    for x1 in 0..n {
        for x2 in 0..n {
            let row = k2.matrix.row(x1 * n + x2);
            for y in 0..n {
                let first: f64 = (0..n).map(|y2| row[y * n + y2]).sum();
                let second: f64 = (0..n).map(|y1| row[y1 * n + y]).sum();
                worst = worst
                    .max((first - k1.matrix[(x1, y)]).abs())
                    .max((second - k1.matrix[(x2, y)]).abs());
            }
        }
    }
    Ok(worst)
}

/// Max over `x` and indicators `f = 1_y` of `|P⁽²⁾f⊗f(x,x) − P⁽¹⁾f²(x)|`.
pub fn check_diagonal_preserving(k2: &TransitionKernel, k1: &TransitionKernel) -> Result<f64> {
    let n = check_pair(k2, k1)?;
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            let d = (k2.matrix[(x * n + x, y * n + y)] - k1.matrix[(x, y)]).abs();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Largest mass any row sends off its own leaf; zero iff foliated.
pub fn check_foliated(k: &TransitionKernel) -> Result<f64> {
    if k.arity != 1 {
        return Err(Error::ShapeMismatch("foliation check needs a one-point kernel".into()));
    }
    let grid = &k.grid;
    let n = grid.n_states();
    Ok((0..n)
        .map(|x| {
            let leaf = grid.split(x).0;
            (0..n)
                .filter(|&y| grid.split(y).0 != leaf)
                .map(|y| k.matrix[(x, y)])
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// For `f, g` that agree on `leaf`, the largest `|P f(x) − P g(x)|` over `x`
/// on that leaf. Zero for a foliated kernel.
pub fn leafwise_agreement_defect(k: &TransitionKernel, f: &[f64], g: &[f64], leaf: usize) -> Result<f64> {
    let grid = &k.grid;
    let n = grid.n_states();
    if k.arity != 1 || f.len() != n || g.len() != n || leaf >= grid.leaves.len() {
        return Err(Error::ShapeMismatch("functions must be vectors over the one-point grid".into()));
    }
    let on_leaf: Vec<usize> = (0..grid.sites).map(|s| grid.index(leaf, s)).collect();
    if on_leaf.iter().any(|&i| f[i] != g[i]) {
        return Err(Error::InvalidInput("f and g must agree on the chosen leaf".into()));
    }
    Ok(on_leaf
        .iter()
        .map(|&x| {
            let row = k.matrix.row(x);
            let pf: f64 = row.iter().zip(f).map(|(p, v)| p * v).sum();
            let pg: f64 = row.iter().zip(g).map(|(p, v)| p * v).sum();
            (pf - pg).abs()
        })
        .fold(0.0, f64::max))
}

/// Kernel spreading each row uniformly over all states.
pub fn uniform_kernel(grid: &LeafGrid, t: f64) -> Result<TransitionKernel> {
    let n = grid.n_states();
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 1.0 / n as f64;
        }
    }
    TransitionKernel::new(grid.clone(), 1, t, m)
}

/// Nearest-neighbour walk on `m` sites of a single unit circle: left with
/// probability `p`, right with `1 − p`.
pub fn cyclic_walk(sites: usize, p: f64) -> Result<TransitionKernel> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("step probability must be in [0, 1], got {p}")));
    }
    let grid = LeafGrid::new(sites, vec![(1.0, 0.0)])?;
    let mut m = Matrix::zeros(sites);
    for s in 0..sites {
        m[(s, (s + sites - 1) % sites)] += p;
        m[(s, (s + 1) % sites)] += 1.0 - p;
    }
    TransitionKernel::new(grid, 1, 1.0, m)
}

fn is_irreducible(k: &TransitionKernel) -> bool {
    let n = k.matrix.dim();
    (0..n).all(|start| {
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if k.matrix[(i, j)] > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    })
}

/// Two-point coalescing chain: off the diagonal the coordinates move
/// independently (mass hitting the diagonal stays there); on the diagonal
/// the pair moves as the one-point chain.
pub fn coalesce_two_point(k1: &TransitionKernel) -> Result<TransitionKernel> {
    if k1.arity != 1 || k1.grid.leaves.len() != 1 {
        return Err(Error::ShapeMismatch(
            "coalescing construction needs a one-point kernel on a single leaf".into(),
        ));
    }
    if !is_irreducible(k1) {
        log::warn!("coalescing construction on a reducible chain");
    }
    let n = k1.base_states();
    let mut k2 = independent_product(k1)?;
    for x in 0..n {
        let from = x * n + x;
        for j in 0..n * n {
            k2.matrix[(from, j)] = 0.0;
        }
        for y in 0..n {
            k2.matrix[(from, y * n + y)] = k1.matrix[(x, y)];
        }
    }
    Ok(k2)
}

/// Total mass of a distribution over pairs that sits on the diagonal.
pub fn diagonal_mass(dist: &[f64], n: usize) -> f64 {
    (0..n).map(|x| dist[x * n + x]).sum()
}

/// Monte Carlo estimate of the flow's two-point kernel, obtained by running
/// the cylinder flow from every pair of grid states with shared noise.
pub fn empirical_flow_kernel(grid: &LeafGrid, t: f64, replicas: u64, seed: u64) -> Result<TransitionKernel> {
    let n = grid.n_states();
    let m = grid.sites;
    grid.rotation_steps(t)?;
    if m % 2 != 0 {
        return Err(Error::GridAlignment { t: PI, sites: m });
    }
    let mut counts = Matrix::zeros(n * n);
    let snap = |theta: f64| ((theta * m as f64 / TAU).round() as usize) % m;
    for rep in 0..replicas {
        let driver = DriverPath::jumps(StreamKey::common(seed, rep), 1.0, t)?;
        for x1 in 0..n {
            let p1 = CylinderPath::unperturbed(grid.point(x1), &driver, t)?;
            let y1 = grid.index(grid.split(x1).0, snap(p1.theta(t)));
            for x2 in 0..n {
                let p2 = CylinderPath::unperturbed(grid.point(x2), &driver, t)?;
                let y2 = grid.index(grid.split(x2).0, snap(p2.theta(t)));
                counts[(x1 * n + x2, y1 * n + y2)] += 1.0;
            }
        }
    }
    let rows = counts
        .rows()
        .into_iter()
        .map(|r| r.into_iter().map(|c| c / replicas as f64).collect())
        .collect();
    TransitionKernel::new(grid.clone(), 2, t, Matrix::from_rows(rows)?)
}
