//! Pathwise simulation of the foliated flows.
//!
//! All evolutions are deterministic functions of a [`DriverPath`]; feeding
//! the same path to several starting points realizes the flow of mappings
//! (common noise), while distinct [`StreamKey`]s give independent motions.
//!
//! [`DriverPath`]: crate::drivers::DriverPath
//! [`StreamKey`]: crate::drivers::StreamKey

mod coalescing;
mod cylinder;
mod npoint;
mod torus;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::drivers::StreamKey;
use crate::error::Result;
use crate::geometry::{leaf_defect, FoliatedModel, ModelKind, ModelPoint};
use crate::stats::fmt17;

pub use coalescing::{evolve_coalescing_circle, meeting_threshold};
pub use cylinder::{evolve_cylinder, evolve_cylinder_perturbed, CylinderPath, Perturbation};
pub use npoint::n_point_motion;
pub use torus::{evolve_torus, torus_trajectory};

/// Sampled path of a single point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: ModelKind,
    pub key: StreamKey,
    pub times: Vec<f64>,
    pub states: Vec<ModelPoint>,
}

/// Maximum over sample times of the leaf defect relative to the first state.
pub fn check_leaf_invariance(model: &FoliatedModel, trajectory: &Trajectory) -> Result<f64> {
    let Some(start) = trajectory.states.first() else {
        return Ok(0.0);
    };
    trajectory
        .states
        .iter()
        .try_fold(0.0f64, |acc, s| Ok(acc.max(leaf_defect(model, start, s)?)))
}

/// Disjoint-set partition of `{0..n}` whose class representative is always
/// the lowest index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    parent: Vec<usize>,
}

impl Partition {
    pub fn singletons(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    pub fn same(&self, i: usize, j: usize) -> bool {
        self.find(i) == self.find(j)
    }

    /// Merge the classes of `i` and `j`; returns the surviving representative.
    pub fn union(&mut self, i: usize, j: usize) -> usize {
        let (a, b) = (self.find(i), self.find(j));
        let (lo, hi) = (a.min(b), a.max(b));
        self.parent[hi] = lo;
        // flatten so find stays O(1) for the small n used here
        for k in 0..self.parent.len() {
            let root = self.find(k);
            self.parent[k] = root;
        }
        lo
    }

    /// Representative (lowest index) of each element's class.
    pub fn class_ids(&self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }

    pub fn members(&self, root: usize) -> Vec<usize> {
        (0..self.parent.len()).filter(|&i| self.find(i) == root).collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.parent.len()).filter(|&i| self.find(i) == i).collect()
    }

    pub fn class_count(&self) -> usize {
        self.roots().len()
    }

    /// True if every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        (0..self.len()).all(|i| coarser.same(i, self.find(i)))
    }
}

/// First meeting time of an unordered pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitTime {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

/// Positions of `n` points together with their coalescence partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPointState {
    pub points: Vec<ModelPoint>,
    pub partition: Partition,
    #[serde(with = "hit_map")]
    pub hit_times: BTreeMap<(usize, usize), f64>,
}

impl NPointState {
    pub fn hit_time(&self, i: usize, j: usize) -> Option<f64> {
        self.hit_times.get(&(i.min(j), i.max(j))).copied()
    }

    /// Record `t` for every pair newly joined by merging classes `a` and `b`.
    pub(crate) fn merge(&mut self, a: usize, b: usize, t: f64) -> usize {
        let ma = self.partition.members(self.partition.find(a));
        let mb = self.partition.members(self.partition.find(b));
        for &i in &ma {
            for &j in &mb {
                self.hit_times.entry((i.min(j), i.max(j))).or_insert(t);
            }
        }
        self.partition.union(a, b)
    }
}

mod hit_map {
    use super::HitTime;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<(usize, usize), f64>, s: S) -> Result<S::Ok, S::Error> {
        m.iter()
            .map(|(&(i, j), &t)| HitTime { i, j, t })
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(usize, usize), f64>, D::Error> {
        Ok(Vec::<HitTime>::deserialize(d)?
            .into_iter()
            .map(|h| ((h.i, h.j), h.t))
            .collect())
    }
}

/// Snapshot of an n-point motion at one sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub points: Vec<ModelPoint>,
    pub classes: Vec<usize>,
}

/// Sampled n-point motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPointSeries {
    pub model: ModelKind,
    pub frames: Vec<Frame>,
    pub final_state: NPointState,
}

impl NPointSeries {
    /// Path of point `i` as a single-point trajectory.
    pub fn trajectory(&self, i: usize, key: StreamKey) -> Trajectory {
        Trajectory {
            model: self.model,
            key,
            times: self.frames.iter().map(|f| f.t).collect(),
            states: self.frames.iter().map(|f| f.points[i]).collect(),
        }
    }

    /// Max leaf defect of every point against its own start.
    pub fn max_leaf_defect(&self, model: &FoliatedModel) -> Result<f64> {
        let Some(first) = self.frames.first() else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for f in &self.frames {
            for (s, p) in first.points.iter().zip(&f.points) {
                worst = worst.max(leaf_defect(model, s, p)?);
            }
        }
        Ok(worst)
    }

    /// Trajectory CSV: `time, point_id, coords…, class_id, leaf_defect`.
    pub fn write_csv<W: Write>(&self, model: &FoliatedModel, mut w: W) -> Result<()> {
        let coords = match self.model {
            ModelKind::TorusWinding => "a,b,lift_x,lift_y",
            _ => "theta,r,z",
        };
        writeln!(w, "time,point_id,{coords},class_id,leaf_defect")?;
        let Some(first) = self.frames.first() else {
            return Ok(());
        };
        for f in &self.frames {
            for (i, p) in f.points.iter().enumerate() {
                let defect = leaf_defect(model, &first.points[i], p)?;
                let c = match p {
                    ModelPoint::Torus(q) => {
                        let l = q.lift.unwrap_or([f64::NAN; 2]);
                        format!("{},{},{},{}", fmt17(q.a), fmt17(q.b), fmt17(l[0]), fmt17(l[1]))
                    }
                    ModelPoint::Cyl(q) => format!("{},{},{}", fmt17(q.theta), fmt17(q.r), fmt17(q.z)),
                };
                writeln!(w, "{},{i},{c},{},{}", fmt17(f.t), f.classes[i], fmt17(defect))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_keeps_lowest_representative() {
        let mut p = Partition::singletons(5);
        assert_eq!(p.union(4, 2), 2);
        assert_eq!(p.union(2, 3), 2);
        assert_eq!(p.union(3, 0), 0);
        assert_eq!(p.class_ids(), vec![0, 1, 0, 0, 0]);
        assert_eq!(p.class_count(), 2);
        assert!(Partition::singletons(5).refines(&p));
        assert!(!p.refines(&Partition::singletons(5)));
    }

    #[test]
    fn merge_records_cross_pairs_once() {
        let mut s = NPointState {
            points: vec![],
            partition: Partition::singletons(4),
            hit_times: BTreeMap::new(),
        };
        s.merge(0, 1, 1.0);
        s.merge(3, 2, 2.0);
        s.merge(1, 2, 3.0);
        assert_eq!(s.hit_time(1, 0), Some(1.0));
        assert_eq!(s.hit_time(2, 3), Some(2.0));
        assert_eq!(s.hit_time(0, 3), Some(3.0));
        assert_eq!(s.hit_times.len(), 6);
    }
}
