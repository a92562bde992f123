//! Experiment orchestration: config in, report and artifacts out.
//!
//! Replicas fan out over rayon; results are gathered in replica order and
//! reduced with pairwise summation, so a report does not depend on the
//! thread count. Wall-clock time is kept out of `report.json` (it lives in
//! `timing.json`), which makes reports byte-identical across reruns.

mod config;

pub use config::{
    AveragingSection, CoalesceSection, ExperimentConfig, ExperimentKind, KernelSection, SimulateSection, StartPoint,
};

use std::f64::consts::TAU;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::averaging::{
    averaging_error, fit_rate_exponent, measure_leaf_mean_lipschitz, Branch, InvariantMeasure, ReplicaDecomposition,
};
use crate::drivers::StreamKey;
use crate::error::{Error, Result};
use crate::flows::{evolve_coalescing_circle, n_point_motion, NPointSeries};
use crate::geometry::{FoliatedModel, PerturbationField, VerticalCoord};
use crate::kernels::{
    build_cylinder_kernel, check_compatibility, check_diagonal_preserving, check_foliated, coalesce_two_point,
    cyclic_walk, diagonal_mass, empirical_flow_kernel, product_kernel_flow, DefectRecord, LeafGrid,
};
use crate::stats::{fmt17, pairwise_sum};

/// Version tag written into every report.
pub const SCHEMA: &str = "foliated-flows/run-report/v1";

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "FOLIATED_FLOWS_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResults {
    pub replicas: u64,
    pub max_leaf_defect: f64,
    pub per_replica_defect: Vec<f64>,
    /// Final partition classes of replica 0.
    pub final_classes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub power: u32,
    pub compatibility: f64,
    pub diagonal_preserving: f64,
    /// Diagonal mass reached from the pair `(0, 1)`.
    pub diagonal_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelResults {
    pub records: Vec<DefectRecord>,
    pub chain: Vec<ChainRecord>,
}

impl KernelResults {
    pub fn max_defect(&self, check: &str) -> f64 {
        self.records
            .iter()
            .filter(|r| r.check == check)
            .map(|r| r.defect)
            .fold(0.0, f64::max)
    }
}

/// Per-ε summary of an averaging run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragePoint {
    pub eps: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub h_bound: f64,
    pub g_bound: f64,
    pub active_branch: Branch,
    pub exited: u64,
    pub triangle_violations: u64,
    pub a4_violations: u64,
    /// Mean `|A₁|..|A₄|, |δ|` for each vertical component.
    pub mean_abs_terms: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub model: String,
    pub field: PerturbationField,
    pub p: f64,
    pub eps_grid: Vec<f64>,
    pub errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub g_values: Vec<f64>,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub flags: Vec<String>,
    pub measured_lipschitz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingResults {
    pub averaged_end: VerticalCoord,
    pub points: Vec<AveragePoint>,
    pub pathwise_bounds_hold: bool,
    pub rate: Option<RateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub i: usize,
    pub j: usize,
    pub same_leaf: bool,
    pub coalesced: u64,
    pub fraction: f64,
    pub mean_hit_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalesceResults {
    pub replicas: u64,
    pub pairs: Vec<PairSummary>,
    /// Fraction of same-leaf (replica, pair) combinations coalesced by `t`.
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentResults {
    Simulate(SimulateResults),
    KernelCheck(KernelResults),
    Average(AveragingResults),
    Rates(AveragingResults),
    Coalesce(CoalesceResults),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Timing {
    pub wall_seconds: f64,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub results: ExperimentResults,
    #[serde(skip)]
    pub timing: Timing,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Report plus the per-replica data that only the artifact writer needs.
struct Outcome {
    report: RunReport,
    series: Option<NPointSeries>,
    decompositions: Vec<ReplicaDecomposition>,
}

/// Thread count from the environment, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        Err(_) => Ok(None),
    }
}

/// Validate, execute, and write artifacts if `config.out` is set. Uses the
/// thread count from the environment when given.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    run_with_threads(config, threads_from_env()?)
}

/// [`run`] on a dedicated pool of `threads` workers (global pool if `None`).
pub fn run_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport> {
    config.validate()?;
    let started = Instant::now();
    let outcome = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    let mut report = outcome.report;
    report.timing = Timing {
        wall_seconds: started.elapsed().as_secs_f64(),
        threads: threads.unwrap_or_else(rayon::current_num_threads),
    };
    if let Some(dir) = &config.out {
        write_artifacts(&report, outcome.series.as_ref(), &outcome.decompositions, dir)?;
    }
    Ok(report)
}

fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let mut series = None;
    let mut decompositions = Vec::new();
    let results = match config.kind {
        ExperimentKind::Simulate => {
            let (r, s) = simulate(config)?;
            series = Some(s);
            ExperimentResults::Simulate(r)
        }
        ExperimentKind::KernelCheck => ExperimentResults::KernelCheck(kernel_check(config)?),
        ExperimentKind::Average => {
            let (r, d) = average(config, false)?;
            decompositions = d;
            ExperimentResults::Average(r)
        }
        ExperimentKind::Rates => {
            let (r, d) = average(config, true)?;
            decompositions = d;
            ExperimentResults::Rates(r)
        }
        ExperimentKind::Coalesce => ExperimentResults::Coalesce(coalesce(config)?),
    };
    Ok(Outcome {
        report: RunReport {
            schema: SCHEMA.into(),
            config: config.clone(),
            results,
            timing: Timing::default(),
        },
        series,
        decompositions,
    })
}

fn simulate(config: &ExperimentConfig) -> Result<(SimulateResults, NPointSeries)> {
    let s = &config.simulate;
    let starts = s
        .start_points(&config.model)
        .into_iter()
        .map(StartPoint::to_model_point)
        .collect::<Result<Vec<_>>>()?;
    let replicas = config.replica_count();
    let run_one = |rep: u64| n_point_motion(&config.model, &starts, StreamKey::common(config.seed, rep), s.horizon, s.dt);
    let defects: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|rep| run_one(rep)?.max_leaf_defect(&config.model))
        .collect::<Result<_>>()?;
    let mut first = run_one(0)?;
    let final_classes = first.final_state.partition.class_ids();
    let last = first.frames.len().saturating_sub(1);
    first.frames = first
        .frames
        .into_iter()
        .enumerate()
        .filter(|(k, _)| k % s.record_every == 0 || *k == last)
        .map(|(_, f)| f)
        .collect();
    Ok((
        SimulateResults {
            replicas,
            max_leaf_defect: defects.iter().copied().fold(0.0, f64::max),
            per_replica_defect: defects,
            final_classes,
        },
        first,
    ))
}

fn kernel_check(config: &ExperimentConfig) -> Result<KernelResults> {
    let k = &config.kernel;
    let grid = LeafGrid::new(k.sites, k.leaves.clone())?;
    let time = |steps: usize| steps as f64 * TAU / k.sites as f64;
    let mut records = Vec::new();
    for &st in &k.steps {
        let t = time(st);
        let k1 = build_cylinder_kernel(&grid, t)?;
        let k2 = product_kernel_flow(&k1)?;
        records.push(DefectRecord::new("row-sum", t, k1.matrix.row_sum_defect().max(k2.matrix.row_sum_defect())));
        records.push(DefectRecord::new("compatibility", t, check_compatibility(&k2, &k1)?));
        records.push(DefectRecord::new("diagonal-preserving", t, check_diagonal_preserving(&k2, &k1)?));
        records.push(DefectRecord::new("off-leaf-mass", t, check_foliated(&k1)?));
        for &su in &k.steps {
            let ks = build_cylinder_kernel(&grid, time(su))?;
            let kst = build_cylinder_kernel(&grid, time(su) + t)?;
            let d = ks.then(&k1)?.matrix.max_abs_diff(&kst.matrix)?;
            records.push(DefectRecord::new("semigroup", time(su) + t, d));
        }
        if k.empirical_replicas > 0 {
            let est = empirical_flow_kernel(&grid, t, k.empirical_replicas, config.seed)?;
            records.push(DefectRecord::new("empirical-flow-kernel", t, est.matrix.max_abs_diff(&k2.matrix)?));
        }
    }
    let walk = cyclic_walk(k.chain_sites, k.chain_p)?;
    let coalescing = coalesce_two_point(&walk)?;
    let n = k.chain_sites;
    let chain = (1..=k.chain_powers)
        .map(|power| {
            let cp = coalescing.power(power);
            let kp = walk.power(power);
            Ok(ChainRecord {
                power,
                compatibility: check_compatibility(&cp, &kp)?,
                diagonal_preserving: check_diagonal_preserving(&cp, &kp)?,
                diagonal_mass: diagonal_mass(cp.matrix.row(1), n),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelResults { records, chain })
}

fn average(config: &ExperimentConfig, rates: bool) -> Result<(AveragingResults, Vec<ReplicaDecomposition>)> {
    let setup = config.averaging_setup();
    let mut points = Vec::new();
    let mut all = Vec::new();
    let mut averaged_end = None;
    for &eps in &config.averaging.eps {
        let est = averaging_error(&config.model, &setup, eps)?;
        let comps = est.decompositions.first().map_or(0, |d| d.components.len());
        let mean_abs_terms = (0..comps)
            .map(|i| {
                let col = |f: &dyn Fn(&crate::averaging::ErrorDecomposition) -> f64| {
                    let v: Vec<f64> = est.decompositions.iter().map(|d| f(&d.components[i]).abs()).collect();
                    pairwise_sum(&v) / v.len() as f64
                };
                [col(&|c| c.a1), col(&|c| c.a2), col(&|c| c.a3), col(&|c| c.a4), col(&|c| c.delta)]
            })
            .collect();
        let flat = || est.decompositions.iter().flat_map(|d| &d.components);
        points.push(AveragePoint {
            eps,
            estimate: est.estimate,
            std_error: est.std_error,
            h_bound: est.bound.h_bound,
            g_bound: est.bound.g_bound,
            active_branch: est.bound.active,
            exited: est.exited,
            triangle_violations: flat().filter(|c| !c.triangle_holds()).count() as u64,
            a4_violations: flat().filter(|c| !c.a4_holds()).count() as u64,
            mean_abs_terms,
        });
        averaged_end = Some(est.averaged_end);
        all.extend(est.decompositions);
    }
    let pathwise_bounds_hold = points.iter().all(|p| p.triangle_violations == 0 && p.a4_violations == 0);
    let rate = if rates { Some(rate_report(config, &points)?) } else { None };
    Ok((
        AveragingResults {
            averaged_end: averaged_end.expect("validated: eps grid is not empty"),
            points,
            pathwise_bounds_hold,
            rate,
        },
        all,
    ))
}

fn rate_report(config: &ExperimentConfig, points: &[AveragePoint]) -> Result<RateReport> {
    let a = &config.averaging;
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.eps, p.estimate)).collect();
    let fit = fit_rate_exponent(&pairs)?;
    let mut flags = Vec::new();
    if fit.exact {
        flags.push("exact".to_string());
    }
    if fit.zero_errors > 0 && !fit.exact {
        flags.push(format!("zero-errors:{}", fit.zero_errors));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|x, y| y.eps.total_cmp(&x.eps));
    let monotone = sorted.windows(2).all(|w| {
        let se = w[0].std_error.hypot(w[1].std_error);
        w[1].estimate <= w[0].estimate + 2.0 * se
    });
    flags.push(if monotone { "monotone" } else { "non-monotone" }.to_string());
    let consistent = points.iter().all(|p| p.estimate - 3.0 * p.std_error <= p.g_bound);
    flags.push(if consistent { "bound-consistent" } else { "bound-exceeded" }.to_string());
    if points.iter().any(|p| p.exited > 0) {
        flags.push("exited-replicas".to_string());
    }
    let measure = InvariantMeasure::build(&a.measure)?;
    Ok(RateReport {
        model: config.model.kind().name().to_string(),
        field: a.field,
        p: a.p,
        eps_grid: points.iter().map(|p| p.eps).collect(),
        errors: points.iter().map(|p| p.estimate).collect(),
        std_errors: points.iter().map(|p| p.std_error).collect(),
        g_values: points.iter().map(|p| p.g_bound).collect(),
        slope: fit.slope,
        r2: fit.r2,
        flags,
        measured_lipschitz: measure_leaf_mean_lipschitz(&a.field, &measure, &a.region, 21)?,
    })
}

fn coalesce(config: &ExperimentConfig) -> Result<CoalesceResults> {
    let FoliatedModel::CoalescingCircle { sigma } = config.model else {
        return Err(Error::Unsupported {
            operation: "coalesce",
            model: config.model.kind().name(),
        });
    };
    let c = &config.coalesce;
    let n = c.starts.len();
    let replicas = config.replica_count();
    let runs: Vec<NPointSeries> = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let keys: Vec<StreamKey> = (0..n as u64).map(|i| StreamKey::independent(config.seed, rep, i)).collect();
            evolve_coalescing_circle(sigma, &c.starts, &keys, c.horizon, c.dt, Some(c.record_every))
        })
        .collect::<Result<_>>()?;
    let same_leaf = |i: usize, j: usize| c.starts[i].leaf() == c.starts[j].leaf();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let hits: Vec<f64> = runs.iter().filter_map(|r| r.final_state.hit_time(i, j)).collect();
            pairs.push(PairSummary {
                i,
                j,
                same_leaf: same_leaf(i, j),
                coalesced: hits.len() as u64,
                fraction: hits.len() as f64 / replicas as f64,
                mean_hit_time: (!hits.is_empty()).then(|| pairwise_sum(&hits) / hits.len() as f64),
            });
        }
    }
    let tracked: Vec<(usize, usize)> = pairs.iter().filter(|p| p.same_leaf).map(|p| (p.i, p.j)).collect();
    let curve = if tracked.is_empty() {
        Vec::new()
    } else {
        let total = (tracked.len() as u64 * replicas) as f64;
        runs[0]
            .frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let hits = runs
                    .iter()
                    .map(|r| tracked.iter().filter(|&&(i, j)| r.frames[k].classes[i] == r.frames[k].classes[j]).count())
                    .sum::<usize>();
                CurvePoint { t: f.t, fraction: hits as f64 / total }
            })
            .collect()
    };
    Ok(CoalesceResults { replicas, pairs, curve })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_artifacts(
    report: &RunReport,
    series: Option<&NPointSeries>,
    decompositions: &[ReplicaDecomposition],
    dir: &Path,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    fs::write(dir.join("timing.json"), serde_json::to_string_pretty(&report.timing)?)?;
    if let Some(s) = series {
        s.write_csv(&report.config.model, create(&dir.join("trajectory.csv"))?)?;
    }
    if !decompositions.is_empty() {
        let mut w = create(&dir.join("decomposition.csv"))?;
        writeln!(w, "replica,component,eps,a1,a2,a3,a4,delta")?;
        for d in decompositions {
            for c in &d.components {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    d.replica,
                    c.component,
                    fmt17(d.eps),
                    fmt17(c.a1),
                    fmt17(c.a2),
                    fmt17(c.a3),
                    fmt17(c.a4),
                    fmt17(c.delta)
                )?;
            }
        }
        w.flush()?;
    }
    match &report.results {
        ExperimentResults::Rates(r) => {
            if let Some(rate) = &r.rate {
                fs::write(dir.join("rates.json"), serde_json::to_string_pretty(rate)?)?;
            }
        }
        ExperimentResults::KernelCheck(_) => {
            let k = &report.config.kernel;
            let grid = LeafGrid::new(k.sites, k.leaves.clone())?;
            for &st in &k.steps {
                let k1 = build_cylinder_kernel(&grid, st as f64 * TAU / k.sites as f64)?;
                let k2 = product_kernel_flow(&k1)?;
                fs::write(dir.join(format!("kernel1_step{st}.json")), serde_json::to_string(&k1.export())?)?;
                fs::write(dir.join(format!("kernel2_step{st}.json")), serde_json::to_string(&k2.export())?)?;
            }
        }
        _ => {}
    }
    emit_plotdata(report, &dir.join("plot"))?;
    Ok(())
}

/// Tidy CSV series for plotting; returns the files written. Files whose
/// series is empty are written with their header only.
pub fn emit_plotdata(report: &RunReport, target: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(target)?;
    let mut written = Vec::new();
    let mut table = |name: &str, header: &str, rows: Vec<String>| -> Result<()> {
        let path = target.join(name);
        let mut w = create(&path)?;
        writeln!(w, "{header}")?;
        if rows.is_empty() {
            log::warn!("{name}: no rows to plot");
        }
        for r in rows {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
        written.push(path);
        Ok(())
    };
    match &report.results {
        ExperimentResults::Simulate(s) => {
            let rows = s
                .per_replica_defect
                .iter()
                .enumerate()
                .map(|(i, d)| format!("{i},{}", fmt17(*d)))
                .collect();
            table("leaf_defect.csv", "replica,max_leaf_defect", rows)?;
        }
        ExperimentResults::KernelCheck(k) => {
            let rows = k
                .records
                .iter()
                .map(|r| format!("{},{},{}", r.check, fmt17(r.t), fmt17(r.defect)))
                .collect();
            table("kernel_defects.csv", "check,t,defect", rows)?;
            let rows = k
                .chain
                .iter()
                .map(|c| format!("{},{},{}", c.power, fmt17(c.diagonal_mass), fmt17(c.compatibility)))
                .collect();
            table("chain.csv", "power,diagonal_mass,compatibility", rows)?;
        }
        ExperimentResults::Average(a) | ExperimentResults::Rates(a) => {
            let mut pts = a.points.clone();
            pts.sort_by(|x, y| x.eps.total_cmp(&y.eps));
            table(
                "eps_error.csv",
                "eps,error",
                pts.iter().map(|p| format!("{},{}", fmt17(p.eps), fmt17(p.estimate))).collect(),
            )?;
            table(
                "eps_error_bound.csv",
                "eps,error,std_error,g_bound",
                pts.iter()
                    .map(|p| format!("{},{},{},{}", fmt17(p.eps), fmt17(p.estimate), fmt17(p.std_error), fmt17(p.g_bound)))
                    .collect(),
            )?;
            let t = report.config.averaging.t;
            let rows = pts
                .iter()
                .flat_map(|p| {
                    p.mean_abs_terms.iter().enumerate().map(move |(i, m)| {
                        let cols: Vec<String> = m.iter().map(|v| fmt17(*v)).collect();
                        format!("{},{},{i},{}", fmt17(t), fmt17(p.eps), cols.join(","))
                    })
                })
                .collect();
            table("a_terms.csv", "t,eps,component,mean_abs_a1,mean_abs_a2,mean_abs_a3,mean_abs_a4,mean_abs_delta", rows)?;
        }
        ExperimentResults::Coalesce(c) => {
            let rows = c.curve.iter().map(|p| format!("{},{}", fmt17(p.t), fmt17(p.fraction))).collect();
            table("coalescence.csv", "time,fraction_coalesced", rows)?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(kind: ExperimentKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::default_for(kind);
        c.seed = 3;
        c.replicas = Some(8);
        c.simulate.horizon = 2.0;
        c.simulate.dt = 0.01;
        c.averaging.eps = vec![0.2, 0.1, 0.05];
        c.coalesce.horizon = 5.0;
        c
    }

    #[test]
    fn simulate_report() {
        let r = run_with_threads(&quick(ExperimentKind::Simulate), Some(2)).unwrap();
        let ExperimentResults::Simulate(s) = &r.results else { panic!() };
        assert_eq!(s.per_replica_defect.len(), 8);
        assert!(s.max_leaf_defect <= 1e-9);
    }

    #[test]
    fn kernel_report() {
        let r = run_with_threads(&quick(ExperimentKind::KernelCheck), Some(1)).unwrap();
        let ExperimentResults::KernelCheck(k) = &r.results else { panic!() };
        assert!(k.max_defect("compatibility") <= 1e-12);
        assert_eq!(k.max_defect("off-leaf-mass"), 0.0);
        assert!(k.chain.windows(2).all(|w| w[1].diagonal_mass >= w[0].diagonal_mass));
    }

    #[test]
    fn rates_report_and_plot_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = quick(ExperimentKind::Rates);
        c.out = Some(dir.path().to_path_buf());
        let r = run_with_threads(&c, Some(2)).unwrap();
        let ExperimentResults::Rates(a) = &r.results else { panic!() };
        assert!(a.rate.as_ref().unwrap().slope.is_some());
        for f in ["report.json", "timing.json", "rates.json", "decomposition.csv", "plot/eps_error.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let text = fs::read_to_string(dir.path().join("plot/eps_error.csv")).unwrap();
        let eps: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(eps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn coalesce_curve_is_monotone() {
        let r = run_with_threads(&quick(ExperimentKind::Coalesce), Some(2)).unwrap();
        let ExperimentResults::Coalesce(c) = &r.results else { panic!() };
        assert!(c.curve.windows(2).all(|w| w[1].fraction >= w[0].fraction));
        assert!(c.pairs.iter().filter(|p| !p.same_leaf).all(|p| p.coalesced == 0));
    }

    #[test]
    fn empty_curve_writes_header_only() {
        let mut c = quick(ExperimentKind::Coalesce);
        c.coalesce.starts.truncate(1);
        c.coalesce.starts.push(crate::geometry::CylPoint { theta: 0.0, r: 3.0, z: 0.0 });
        let r = run_with_threads(&c, Some(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_plotdata(&r, dir.path()).unwrap();
        assert_eq!(fs::read_to_string(&files[0]).unwrap(), "time,fraction_coalesced\n");
    }

    #[test]
    fn invalid_config_does_not_run() {
        let mut c = quick(ExperimentKind::Average);
        c.averaging.eps = vec![1.5];
        assert!(matches!(run(&c), Err(Error::Validation(_))));
    }
}
