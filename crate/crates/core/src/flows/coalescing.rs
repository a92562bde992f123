//! Coalescing leafwise Brownian motions on circles.
//!
//! Each class of points carries an unwrapped angle driven by the Brownian
//! path of its lowest-index member. Two classes on the same circle merge as
//! soon as their unwrapped angular gap crosses a multiple of `2π` within a
//! step, or comes closer to one than [`meeting_threshold`].

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::drivers::{sample_brownian, StreamKey};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, CylPoint, ModelKind, ModelPoint};

use super::{Frame, NPointSeries, NPointState, Partition};

/// `δ_c = σ·√dt / 10`.
pub fn meeting_threshold(sigma: f64, dt: f64) -> f64 {
    sigma * dt.sqrt() / 10.0
}

fn gap_met(prev: f64, next: f64, threshold: f64) -> bool {
    let crossed = (prev / TAU).floor() != (next / TAU).floor();
    let r = next.rem_euclid(TAU);
    crossed || r.min(TAU - r) < threshold
}

/// Simulate `n` coalescing circle motions with one private key per point.
///
/// `record_every` selects every k-th grid step for the returned frames
/// (the initial and final states are always recorded).
pub fn evolve_coalescing_circle(
    sigma: f64,
    starts: &[CylPoint],
    keys: &[StreamKey],
    horizon: f64,
    dt: f64,
    record_every: Option<usize>,
) -> Result<NPointSeries> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidInput(format!("sigma must be > 0, got {sigma}")));
    }
    if starts.len() != keys.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} starts but {} stream keys",
            starts.len(),
            keys.len()
        )));
    }
    if record_every == Some(0) {
        return Err(Error::InvalidInput("record stride must be >= 1".into()));
    }
    let n = starts.len();
    let drivers = keys
        .iter()
        .map(|k| sample_brownian(*k, horizon, dt))
        .collect::<Result<Vec<_>>>()?;
    let increments: Vec<&[f64]> = drivers
        .iter()
        .map(|d| d.brownian.as_ref().map(|b| b.increments.as_slice()).unwrap_or(&[]))
        .collect();
    let steps = increments.first().map_or(0, |i| i.len());
    let threshold = meeting_threshold(sigma, dt);

    let mut lifts: Vec<f64> = starts.iter().map(|p| p.theta).collect();
    let mut state = NPointState {
        points: starts.iter().map(|p| ModelPoint::Cyl(*p)).collect(),
        partition: Partition::singletons(n),
        hit_times: BTreeMap::new(),
    };
    let same_leaf = |i: usize, j: usize| starts[i].r == starts[j].r && starts[i].z == starts[j].z;

    // already on the diagonal at t = 0
    for i in 0..n {
        for j in (i + 1)..n {
            if same_leaf(i, j) && !state.partition.same(i, j) && gap_met(lifts[i] - lifts[j], lifts[i] - lifts[j], threshold) {
                let root = state.merge(i, j, 0.0);
                sync_class(&mut lifts, &state.partition, root);
            }
        }
    }

    let frame = |t: f64, lifts: &[f64], partition: &Partition| Frame {
        t,
        points: starts
            .iter()
            .zip(lifts)
            .map(|(p, &l)| ModelPoint::Cyl(CylPoint { theta: normalize_angle(l), r: p.r, z: p.z }))
            .collect(),
        classes: partition.class_ids(),
    };
    let mut frames = vec![frame(0.0, &lifts, &state.partition)];

    for k in 0..steps {
        let t = ((k + 1) as f64 * dt).min(horizon);
        let roots = state.partition.roots();
        let prev: Vec<f64> = lifts.clone();
        for &r in &roots {
            lifts[r] += sigma * increments[r][k];
        }
        for i in 0..n {
            let root = state.partition.find(i);
            lifts[i] = lifts[root];
        }
        for (ai, &a) in roots.iter().enumerate() {
            for &b in &roots[ai + 1..] {
                if !same_leaf(a, b) || state.partition.same(a, b) {
                    continue;
                }
                let (ra, rb) = (state.partition.find(a), state.partition.find(b));
                if gap_met(prev[ra] - prev[rb], lifts[ra] - lifts[rb], threshold) {
                    let root = state.merge(ra, rb, t);
                    sync_class(&mut lifts, &state.partition, root);
                }
            }
        }
        let last = k + 1 == steps;
        if last || record_every.is_some_and(|s| (k + 1) % s == 0) {
            frames.push(frame(t, &lifts, &state.partition));
        }
    }
    state.points = frames.last().expect("initial frame").points.clone();
    Ok(NPointSeries {
        model: ModelKind::CoalescingCircle,
        frames,
        final_state: state,
    })
}

fn sync_class(lifts: &mut [f64], partition: &Partition, root: usize) {
    for m in partition.members(root) {
        lifts[m] = lifts[root];
    }
}
