//! Exact grid-restricted minimisation of the segmentation energy.
//!
//! Candidate boundary positions are the `M*r + 1` uniform points of a
//! refinement of the cell grid. `dp_optimal` runs the optimal-partitioning
//! recurrence in O(N (Mr)^2) time; `brute_force` enumerates all boundary
//! tuples and exists as an independent check on the recurrence.

use thiserror::Error;

use crate::approx::BoundaryVector;
use crate::signal::DiscretizedSignal;

const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("refinement factor must be at least 1")]
    InvalidRefinement,
    #[error("{needed} segments need at least {needed} grid cells, have {available}")]
    NotEnoughCandidates { needed: usize, available: usize },
    #[error("brute force refused: C({candidates}, {choose}) exceeds the limit of {BRUTE_FORCE_LIMIT} combinations")]
    TooManyCombinations { candidates: usize, choose: usize },
    #[error("segment count must be at least 1")]
    InvalidSegmentCount,
}

/// Refinement of the candidate boundary grid: positions `a + k*delta/r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    refine: usize,
}

impl GridSpec {
    pub fn new(refine: usize) -> Result<Self, DpError> {
        if refine == 0 {
            return Err(DpError::InvalidRefinement);
        }
        Ok(Self { refine })
    }

    pub fn refine(&self) -> usize {
        self.refine
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { refine: 4 }
    }
}

struct Grid {
    positions: Vec<f64>,
    cum1: Vec<f64>,
    cum2: Vec<f64>,
}

impl Grid {
    fn build(signal: &DiscretizedSignal, grid: GridSpec) -> Self {
        let g = signal.num_cells() * grid.refine;
        let step = (signal.b() - signal.a()) / g as f64;
        let positions: Vec<f64> = (0..=g)
            .map(|k| {
                if k == g {
                    signal.b()
                } else {
                    signal.a() + k as f64 * step
                }
            })
            .collect();
        let cum1 = positions.iter().map(|&x| signal.cum_f(x)).collect();
        let cum2 = positions.iter().map(|&x| signal.cum_f2(x)).collect();
        Self {
            positions,
            cum1,
            cum2,
        }
    }

    /// Squared error of the segment between grid indices `j <= k`.
    #[inline]
    fn segcost(&self, j: usize, k: usize) -> f64 {
        let len = self.positions[k] - self.positions[j];
        if len <= 0.0 {
            return 0.0;
        }
        let i1 = self.cum1[k] - self.cum1[j];
        let i2 = self.cum2[k] - self.cum2[j];
        let u = i1 / len;
        (i2 - 2.0 * u * i1 + u * u * len).max(0.0)
    }
}

fn check_candidates(
    signal: &DiscretizedSignal,
    n_segments: usize,
    grid: GridSpec,
) -> Result<usize, DpError> {
    if n_segments == 0 {
        return Err(DpError::InvalidSegmentCount);
    }
    let g = signal.num_cells() * grid.refine;
    if n_segments > g {
        return Err(DpError::NotEnoughCandidates {
            needed: n_segments,
            available: g,
        });
    }
    Ok(g)
}

/// Globally optimal boundaries over the candidate grid, by dynamic
/// programming. Ties are broken towards the smallest boundary index.
pub fn dp_optimal(
    signal: &DiscretizedSignal,
    n_segments: usize,
    grid: GridSpec,
) -> Result<(BoundaryVector, f64), DpError> {
    let g = check_candidates(signal, n_segments, grid)?;
    let width = signal.b() - signal.a();
    let gr = Grid::build(signal, grid);
    if n_segments == 1 {
        let bv = BoundaryVector::empty(signal.a(), signal.b()).expect("valid signal domain");
        return Ok((bv, gr.segcost(0, g) / width));
    }
    // cost[k]: best squared error of the first s segments with the s-th
    // boundary at grid index k; boundaries are strictly increasing interior
    // indices 1..g
    let n_bounds = n_segments - 1;
    let mut cost = vec![f64::INFINITY; g + 1];
    for k in 1..g {
        cost[k] = gr.segcost(0, k);
    }
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(n_bounds.saturating_sub(1));
    for s in 2..=n_bounds {
        let mut next = vec![f64::INFINITY; g + 1];
        let mut ptr = vec![0u32; g + 1];
        for k in s..g {
            let mut best = f64::INFINITY;
            let mut best_j = 0u32;
            for j in (s - 1)..k {
                let c = cost[j];
                if c.is_finite() {
                    let total = c + gr.segcost(j, k);
                    if total < best {
                        best = total;
                        best_j = j as u32;
                    }
                }
            }
            next[k] = best;
            ptr[k] = best_j;
        }
        back.push(ptr);
        cost = next;
    }
    // close with the final segment to b
    let mut best = f64::INFINITY;
    let mut best_k = 0usize;
    for k in n_bounds..g {
        if cost[k].is_finite() {
            let total = cost[k] + gr.segcost(k, g);
            if total < best {
                best = total;
                best_k = k;
            }
        }
    }
    let mut indices = vec![best_k];
    for ptr in back.iter().rev() {
        let prev = ptr[*indices.last().unwrap()] as usize;
        indices.push(prev);
    }
    indices.reverse();
    let boundaries: Vec<f64> = indices.iter().map(|&k| gr.positions[k]).collect();
    let bv = BoundaryVector::new(signal.a(), signal.b(), boundaries)
        .expect("grid positions lie inside the domain");
    Ok((bv, best / width))
}

fn combinations(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > BRUTE_FORCE_LIMIT * 1000 {
            return u128::MAX;
        }
    }
    acc
}

/// Exhaustive minimisation over all strictly increasing boundary tuples on
/// the grid. Returns the lexicographically smallest minimiser.
pub fn brute_force(
    signal: &DiscretizedSignal,
    n_segments: usize,
    grid: GridSpec,
) -> Result<(BoundaryVector, f64), DpError> {
    let g = check_candidates(signal, n_segments, grid)?;
    let n_bounds = n_segments - 1;
    let candidates = g - 1; // interior grid indices 1..g
    if combinations(candidates, n_bounds) > BRUTE_FORCE_LIMIT {
        return Err(DpError::TooManyCombinations {
            candidates,
            choose: n_bounds,
        });
    }
    let width = signal.b() - signal.a();
    let gr = Grid::build(signal, grid);
    if n_bounds == 0 {
        let bv = BoundaryVector::empty(signal.a(), signal.b()).expect("valid signal domain");
        return Ok((bv, gr.segcost(0, g) / width));
    }
    // lexicographic enumeration of index tuples; strict improvement keeps
    // the first (smallest) minimiser
    let mut idx: Vec<usize> = (1..=n_bounds).collect();
    let mut best = f64::INFINITY;
    let mut best_idx = idx.clone();
    loop {
        let mut total = 0.0;
        let mut prev = 0usize;
        for &k in &idx {
            total += gr.segcost(prev, k);
            prev = k;
        }
        total += gr.segcost(prev, g);
        if total < best {
            best = total;
            best_idx = idx.clone();
        }
        // next combination
        let mut i = n_bounds;
        loop {
            if i == 0 {
                let boundaries = best_idx.iter().map(|&k| gr.positions[k]).collect();
                let bv = BoundaryVector::new(signal.a(), signal.b(), boundaries)
                    .expect("grid positions lie inside the domain");
                return Ok((bv, best / width));
            }
            i -= 1;
            if idx[i] < g - (n_bounds - i) {
                idx[i] += 1;
                for j in i + 1..n_bounds {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}
