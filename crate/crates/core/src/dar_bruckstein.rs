//! The Dar–Bruckstein adaptive sampler.
//!
//! Boundaries are placed so that every segment carries the same amount of
//! the cube root of the squared signal derivative. The derivative of the
//! cell model is taken by forward differences; the resulting density is
//! accumulated as a piecewise-linear cumulative function whose equispaced
//! level crossings are the boundaries.
//!
//! For a step signal, a jump of height `J` concentrated at a cell edge
//! contributes the surrogate mass `|J|^(2/3) * delta^(1/3)`, which depends
//! on the discretization width. This is exactly the nonsmooth regime where
//! the method degrades, and the experiments are meant to expose it.

use thiserror::Error;

use crate::approx::BoundaryVector;
use crate::signal::DiscretizedSignal;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("need at least 2 cells for derivative information, got {0}")]
    TooFewCells(usize),
    #[error("segment count must be at least 1, got {0}")]
    InvalidSegmentCount(usize),
}

/// Cumulative integral of `|f'|^(2/3)` up to each cell edge.
#[derive(Debug, Clone)]
pub struct DerivativeDensity {
    a: f64,
    b: f64,
    delta: f64,
    cum: Vec<f64>,
}

impl DerivativeDensity {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn cum(&self) -> &[f64] {
        &self.cum
    }

    /// Total mass `∫_a^b |f'|^(2/3)` of the surrogate density.
    pub fn total(&self) -> f64 {
        *self.cum.last().expect("cum has M+1 entries")
    }

    /// Cumulative mass up to `x`, linear inside a cell.
    pub fn cum_at(&self, x: f64) -> f64 {
        let m = self.cum.len() - 1;
        let t = (x - self.a) / self.delta;
        let k = (t as usize).min(m - 1);
        let frac = (x - (self.a + k as f64 * self.delta)) / self.delta;
        self.cum[k] + frac * (self.cum[k + 1] - self.cum[k])
    }
}

/// Builds the cube-root derivative density of the cell model.
///
/// The forward difference `(f_{j+1} - f_j)/delta` serves as the derivative
/// throughout cell `j`; the last cell reuses the final difference so all `M`
/// cells carry density.
pub fn derivative_density(signal: &DiscretizedSignal) -> Result<DerivativeDensity, DensityError> {
    let m = signal.num_cells();
    if m < 2 {
        return Err(DensityError::TooFewCells(m));
    }
    let delta = signal.delta();
    let values = signal.values();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    let mut last_g = 0.0;
    for j in 0..m {
        let g = if j + 1 < m {
            let d = (values[j + 1] - values[j]) / delta;
            last_g = (d * d).cbrt();
            last_g
        } else {
            last_g
        };
        acc += g * delta;
        cum.push(acc);
    }
    Ok(DerivativeDensity {
        a: signal.a(),
        b: signal.b(),
        delta,
        cum,
    })
}

/// Places `n_segments - 1` boundaries at the positions where the cumulative
/// density crosses the multiples of `T_opt = total / n_segments`.
///
/// Levels are interpolated linearly inside a cell (exact for the
/// piecewise-linear cumulative), with ties resolved to the leftmost
/// position. Zero total density falls back to a uniform split.
pub fn db_boundaries(
    density: &DerivativeDensity,
    n_segments: usize,
) -> Result<BoundaryVector, DensityError> {
    if n_segments == 0 {
        return Err(DensityError::InvalidSegmentCount(0));
    }
    let (a, b) = (density.a, density.b);
    let total = density.total();
    let mut boundaries = Vec::with_capacity(n_segments - 1);
    if total <= 0.0 {
        for i in 1..n_segments {
            boundaries.push(a + i as f64 * (b - a) / n_segments as f64);
        }
    } else {
        let cum = &density.cum;
        for i in 1..n_segments {
            let level = (i as f64 / n_segments as f64) * total;
            // first edge with cum >= level: leftmost crossing
            let k = cum.partition_point(|&c| c < level).min(cum.len() - 1);
            let x = if k == 0 {
                a
            } else {
                let lo = cum[k - 1];
                let hi = cum[k];
                let frac = if hi > lo { (level - lo) / (hi - lo) } else { 0.0 };
                a + (k as f64 - 1.0 + frac) * density.delta
            };
            boundaries.push(x.min(b));
        }
    }
    Ok(BoundaryVector::new(a, b, boundaries).expect("crossings stay inside the domain"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::energy;

    fn ramp(m: usize) -> DiscretizedSignal {
        let d = 1.0 / m as f64;
        let vals = (0..m).map(|j| (j as f64 + 0.5) * d).collect();
        DiscretizedSignal::from_values(vals, 0.0, 1.0).unwrap()
    }

    fn chirp_derivative(x: f64) -> f64 {
        use std::f64::consts::PI;
        -255.0 * 2.0 * PI * (1.0 + 10.0 * x) * (2.0 * PI * x * (1.0 + 5.0 * x)).sin()
    }

    #[test]
    fn ramp_density_is_uniform() {
        let m = 100;
        let dens = derivative_density(&ramp(m)).unwrap();
        let total = dens.total();
        for (k, &c) in dens.cum().iter().enumerate() {
            let expect = k as f64 / m as f64 * total;
            assert!((c - expect).abs() < 1e-12 * total.max(1.0));
        }
    }

    #[test]
    fn ramp_boundaries_are_uniform() {
        let dens = derivative_density(&ramp(1000)).unwrap();
        let bv = db_boundaries(&dens, 4).unwrap();
        let expect = [0.25, 0.5, 0.75];
        for (x, e) in bv.boundaries().iter().zip(expect) {
            assert!((x - e).abs() < 1e-9, "{x} vs {e}");
        }
    }

    #[test]
    fn constant_signal_falls_back_to_uniform() {
        let s = DiscretizedSignal::from_values(vec![3.0; 10], 0.0, 1.0).unwrap();
        let dens = derivative_density(&s).unwrap();
        assert_eq!(dens.total(), 0.0);
        let bv = db_boundaries(&dens, 2).unwrap();
        assert_eq!(bv.boundaries(), &[0.5]);
    }

    #[test]
    fn too_few_cells_rejected() {
        let s = DiscretizedSignal::from_values(vec![1.0], 0.0, 1.0).unwrap();
        assert!(matches!(
            derivative_density(&s),
            Err(DensityError::TooFewCells(1))
        ));
    }

    #[test]
    fn zero_segments_rejected() {
        let dens = derivative_density(&ramp(10)).unwrap();
        assert!(matches!(
            db_boundaries(&dens, 0),
            Err(DensityError::InvalidSegmentCount(0))
        ));
    }

    #[test]
    fn chirp_total_matches_quadrature_oracle() {
        let s = DiscretizedSignal::chirp(100_000).unwrap();
        let dens = derivative_density(&s).unwrap();
        // midpoint rule on the analytic |f'|^(2/3); fine grid because the
        // integrand has kinks at the derivative's zeros
        let n = 2_000_000;
        let h = 1.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                let d = chirp_derivative(x);
                (d * d).cbrt() * h
            })
            .sum();
        let rel = (dens.total() - oracle).abs() / oracle;
        assert!(rel < 0.01, "relative gap {rel}");
    }

    #[test]
    fn equal_mass_property_on_chirp() {
        let s = DiscretizedSignal::chirp(100_000).unwrap();
        let dens = derivative_density(&s).unwrap();
        let total = dens.total();
        for n in [2usize, 5, 13, 40] {
            let bv = db_boundaries(&dens, n).unwrap();
            let t_opt = total / n as f64;
            let edges = bv.edges();
            for w in edges.windows(2) {
                let mass = dens.cum_at(w[1]) - dens.cum_at(w[0]);
                assert!(
                    (mass - t_opt).abs() <= 1e-9 * total,
                    "N={n}: mass {mass} vs T_opt {t_opt}"
                );
            }
        }
    }

    #[test]
    fn boundaries_scale_invariant() {
        let s = DiscretizedSignal::chirp(10_000).unwrap();
        let scaled = DiscretizedSignal::from_values(
            s.values().iter().map(|v| v * -7.25).collect(),
            0.0,
            1.0,
        )
        .unwrap();
        let b1 = db_boundaries(&derivative_density(&s).unwrap(), 7).unwrap();
        let b2 = db_boundaries(&derivative_density(&scaled).unwrap(), 7).unwrap();
        for (x, y) in b1.boundaries().iter().zip(b2.boundaries()) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn doubling_segments_refines_boundaries() {
        let s = DiscretizedSignal::chirp(50_000).unwrap();
        let dens = derivative_density(&s).unwrap();
        for n in [3usize, 8] {
            let coarse = db_boundaries(&dens, n).unwrap();
            let fine = db_boundaries(&dens, 2 * n).unwrap();
            for x in coarse.boundaries() {
                let hit = fine
                    .boundaries()
                    .iter()
                    .any(|y| (x - y).abs() < 1e-9 * (dens.b() - dens.a()));
                assert!(hit, "coarse boundary {x} missing from refinement");
            }
        }
    }

    #[test]
    fn chirp_db_energy_matches_reference() {
        let s = DiscretizedSignal::chirp(100_000).unwrap();
        let dens = derivative_density(&s).unwrap();
        let bv = db_boundaries(&dens, 5).unwrap();
        let e = energy(&s, &bv).unwrap();
        assert!((e - 32166.88).abs() / 32166.88 < 0.02, "energy {e}");
    }
}
