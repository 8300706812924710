//! Pareto-front maintenance and exact 2-D hypervolume, both under joint
//! maximization of (utility, equity).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Indices of the maximal points of `points` under component-wise >= with at
/// least one strict inequality. Exact duplicates keep the first occurrence.
/// Returned ascending.
pub fn pareto_front(points: &[(f64, f64)]) -> Vec<usize> {
    if points.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Sort by first coordinate descending, second descending, index ascending;
    // a single sweep then keeps exactly the points whose second coordinate
    // strictly exceeds everything seen at strictly higher first coordinate.
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
            .then(a.cmp(&b))
    });

    let mut front = Vec::new();
    let mut best_d = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // One group of equal first coordinates at a time.
        let u = points[order[i]].0;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == u {
            j += 1;
        }
        let group = &order[i..j];
        let group_max_d = points[group[0]].1; // group is d-descending
        if group_max_d > best_d {
            // Within the group only max-d entries survive; among exact
            // duplicates, the smallest original index.
            let keeper = group
                .iter()
                .copied()
                .filter(|&idx| points[idx].1 == group_max_d)
                .min()
                .expect("nonempty group");
            front.push(keeper);
            best_d = group_max_d;
        }
        i = j;
    }
    front.sort_unstable();
    front
}

/// Exact area dominated by `front` and bounded below by `reference`, via a
/// staircase sweep. Every point must weakly dominate the reference.
pub fn hypervolume_2d(front: &[(f64, f64)], reference: (f64, f64)) -> Result<f64> {
    for &(u, d) in front {
        if !(u >= reference.0 && d >= reference.1) {
            return Err(Error::argument(format!(
                "front point ({u}, {d}) does not dominate the reference {reference:?}"
            )));
        }
    }
    Ok(staircase_area(&sorted_desc(front), reference))
}

fn sorted_desc(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    pts
}

/// Union area of `[ref, p]` rectangles for points sorted by first coordinate
/// descending. Dominated points contribute nothing extra.
fn staircase_area(sorted: &[(f64, f64)], reference: (f64, f64)) -> f64 {
    let mut area = 0.0;
    let mut height = reference.1;
    for &(u, d) in sorted {
        if d > height {
            area += (u - reference.0) * (d - height);
            height = d;
        }
    }
    area
}

/// Evaluated serving weights with both objective values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub alpha: Vec<f64>,
    pub utility: f64,
    pub der: f64,
}

/// All evaluated points of one optimization run plus the hypervolume
/// reference. The non-dominated front is recomputed on demand; archives stay
/// small (one point per iteration).
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<Evaluation>,
    reference: (f64, f64),
}

impl ParetoArchive {
    pub fn new(reference: (f64, f64)) -> Self {
        ParetoArchive {
            entries: Vec::new(),
            reference,
        }
    }

    pub fn push(&mut self, alpha: Vec<f64>, utility: f64, der: f64) {
        self.entries.push(Evaluation { alpha, utility, der });
    }

    pub fn entries(&self) -> &[Evaluation] {
        &self.entries
    }

    pub fn reference(&self) -> (f64, f64) {
        self.reference
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn objective_points(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.utility, e.der)).collect()
    }

    pub fn front_indices(&self) -> Vec<usize> {
        pareto_front(&self.objective_points())
    }

    /// Front points clamped to the reference; feeds the hypervolume sweep.
    pub(crate) fn clamped_front(&self) -> Vec<(f64, f64)> {
        let points = self.objective_points();
        self.front_indices()
            .into_iter()
            .map(|i| {
                (
                    points[i].0.max(self.reference.0),
                    points[i].1.max(self.reference.1),
                )
            })
            .collect()
    }

    pub fn hypervolume(&self) -> f64 {
        staircase_area(&sorted_desc(&self.clamped_front()), self.reference)
    }
}

/// Hypervolume after inserting `candidate` into an already-sorted clamped
/// front dominating `reference`, minus nothing: callers subtract the base.
/// `sorted_front` must be first-coordinate descending.
pub(crate) fn hypervolume_gain(
    sorted_front: &[(f64, f64)],
    reference: (f64, f64),
    candidate: (f64, f64),
) -> f64 {
    let (u, d) = candidate;
    if u <= reference.0 || d <= reference.1 {
        return 0.0;
    }
    // Height of the existing staircase over the strip left of u.
    let split = sorted_front.partition_point(|p| p.0 >= u);
    let mut height = sorted_front[..split]
        .iter()
        .map(|p| p.1)
        .fold(reference.1, f64::max);
    if height >= d {
        return 0.0; // dominated by an existing point
    }
    let mut gain = 0.0;
    let mut right = u;
    for &(pu, pd) in &sorted_front[split..] {
        if pd >= d {
            // Everything left of pu is already covered up to at least d.
            return gain + (right - pu) * (d - height);
        }
        if pd > height {
            gain += (right - pu) * (d - height);
            height = pd;
            right = pu;
        }
    }
    gain + (right - reference.0) * (d - height)
}
