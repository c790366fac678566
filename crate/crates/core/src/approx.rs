//! Boundary vectors, the mean-value piecewise-constant approximation, and
//! the MSE energy that all three solvers minimise.
//!
//! A boundary vector holds the `N-1` interior breakpoints of an `N`-segment
//! partition of `[a, b]`. Ties and endpoint-touching boundaries are legal:
//! a zero-width segment contributes zero error, so degenerate vectors that
//! arise during search are evaluated without penalties.

use std::io::Write;

use thiserror::Error;

use crate::signal::DiscretizedSignal;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid domain [{a}, {b}]")]
    InvalidDomain { a: f64, b: f64 },
    #[error("boundary {0} lies outside the domain or is not finite")]
    BoundaryOutOfDomain(f64),
    #[error("boundary vector domain [{xa}, {xb}] does not match signal domain [{sa}, {sb}]")]
    DomainMismatch { xa: f64, xb: f64, sa: f64, sb: f64 },
    #[error("segment width {0} must be positive")]
    NonPositiveWidth(f64),
    #[error("eta = {0} must lie in [0, 1]")]
    EtaOutOfRange(f64),
}

/// Interior segment boundaries `x_1 <= ... <= x_{N-1}` in `[a, b]`.
///
/// Stored sorted, so the segment decomposition is canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVector {
    a: f64,
    b: f64,
    boundaries: Vec<f64>,
}

impl BoundaryVector {
    pub fn new(a: f64, b: f64, mut boundaries: Vec<f64>) -> Result<Self, ApproxError> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(ApproxError::InvalidDomain { a, b });
        }
        for &x in &boundaries {
            if !x.is_finite() || x < a || x > b {
                return Err(ApproxError::BoundaryOutOfDomain(x));
            }
        }
        boundaries.sort_by(f64::total_cmp);
        Ok(Self { a, b, boundaries })
    }

    /// The single-segment partition (N = 1).
    pub fn empty(a: f64, b: f64) -> Result<Self, ApproxError> {
        Self::new(a, b, Vec::new())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// All segment edges including both endpoints: `a, x_1, ..., x_{N-1}, b`.
    pub fn edges(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(self.boundaries.len() + 2);
        e.push(self.a);
        e.extend_from_slice(&self.boundaries);
        e.push(self.b);
        e
    }
}

/// The mean-value approximation `u` for a boundary vector, with per-segment
/// errors `e_i` and the overall MSE.
#[derive(Debug, Clone)]
pub struct PiecewiseApprox {
    pub bounds: BoundaryVector,
    pub segment_values: Vec<f64>,
    pub segment_errors: Vec<f64>,
    pub mse: f64,
}

/// Min/max of the per-segment errors over positive-width segments.
///
/// `ratio` is `max/min`, with infinity as the sentinel for `min = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBalance {
    pub min_error: f64,
    pub max_error: f64,
    pub ratio: f64,
}

fn check_domains(signal: &DiscretizedSignal, x: &BoundaryVector) -> Result<(), ApproxError> {
    if signal.a() != x.a() || signal.b() != x.b() {
        return Err(ApproxError::DomainMismatch {
            xa: x.a(),
            xb: x.b(),
            sa: signal.a(),
            sb: signal.b(),
        });
    }
    Ok(())
}

/// Raw squared-error sum `sum_i e_i` for sorted in-domain boundaries.
///
/// Hot path shared by all solvers; does not allocate. `e_i` is the expanded
/// form `I2 - 2 u I1 + u^2 len`, clamped at zero against cancellation.
#[inline]
pub(crate) fn error_sum_sorted(signal: &DiscretizedSignal, sorted: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut left = signal.a();
    let mut c1_left = 0.0;
    let mut c2_left = 0.0;
    let mut segment = |right: f64, c1_l: &mut f64, c2_l: &mut f64, left: &mut f64| {
        let c1 = signal.cum_f(right);
        let c2 = signal.cum_f2(right);
        let len = right - *left;
        if len > 0.0 {
            let i1 = c1 - *c1_l;
            let i2 = c2 - *c2_l;
            let u = i1 / len;
            total += (i2 - 2.0 * u * i1 + u * u * len).max(0.0);
        }
        *c1_l = c1;
        *c2_l = c2;
        *left = right;
    };
    for &x in sorted {
        segment(x, &mut c1_left, &mut c2_left, &mut left);
    }
    segment(signal.b(), &mut c1_left, &mut c2_left, &mut left);
    total
}

/// `E(x)`: the MSE of the mean-value approximation, `(sum_i e_i) / (b - a)`.
pub fn energy(signal: &DiscretizedSignal, x: &BoundaryVector) -> Result<f64, ApproxError> {
    check_domains(signal, x)?;
    Ok(error_sum_sorted(signal, x.boundaries()) / (signal.b() - signal.a()))
}

/// Builds the approximation: per-segment means, errors, and the MSE.
///
/// A zero-width segment gets the cell value at its position and zero error.
pub fn build_approximation(
    signal: &DiscretizedSignal,
    x: &BoundaryVector,
) -> Result<PiecewiseApprox, ApproxError> {
    check_domains(signal, x)?;
    let edges = x.edges();
    let mut segment_values = Vec::with_capacity(x.segment_count());
    let mut segment_errors = Vec::with_capacity(x.segment_count());
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (l, r) = (w[0], w[1]);
        let (i1, i2, len) = signal
            .interval_integrals(l, r)
            .expect("edges validated against domain");
        if len > 0.0 {
            let u = i1 / len;
            let e = (i2 - 2.0 * u * i1 + u * u * len).max(0.0);
            segment_values.push(u);
            segment_errors.push(e);
            total += e;
        } else {
            segment_values.push(signal.value_at(l));
            segment_errors.push(0.0);
        }
    }
    Ok(PiecewiseApprox {
        bounds: x.clone(),
        segment_values,
        segment_errors,
        mse: total / (signal.b() - signal.a()),
    })
}

/// Error balance over positive-width segments.
pub fn segment_error_report(approx: &PiecewiseApprox) -> ErrorBalance {
    let edges = approx.bounds.edges();
    let mut min_error = f64::INFINITY;
    let mut max_error: f64 = 0.0;
    for (w, &e) in edges.windows(2).zip(&approx.segment_errors) {
        if w[1] > w[0] {
            min_error = min_error.min(e);
            max_error = max_error.max(e);
        }
    }
    if !min_error.is_finite() {
        min_error = 0.0;
    }
    let ratio = if min_error > 0.0 {
        max_error / min_error
    } else {
        f64::INFINITY
    };
    ErrorBalance {
        min_error,
        max_error,
        ratio,
    }
}

/// Segment error of a linear piece of width `h` and slope `f'`:
/// `h^3 f'^2 / 12`.
pub fn linearized_error(h: f64, slope: f64) -> Result<f64, ApproxError> {
    if !(h > 0.0) {
        return Err(ApproxError::NonPositiveWidth(h));
    }
    Ok(h.powi(3) * slope * slope / 12.0)
}

/// The exact-error prefactor `(1 - 3 eta + 3 eta^2) / 3` that replaces 1/12
/// when the mean-value position `eta` deviates from the segment midpoint.
pub fn exact_error_factor(eta: f64) -> Result<f64, ApproxError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ApproxError::EtaOutOfRange(eta));
    }
    Ok((1.0 - 3.0 * eta + 3.0 * eta * eta) / 3.0)
}

/// Writes the step table `x fx` in plot-data style: the segment value is
/// repeated at each positive-width segment start, with a final point at `b`.
pub fn write_step_table<W: Write>(approx: &PiecewiseApprox, mut w: W) -> std::io::Result<()> {
    writeln!(w, "x fx")?;
    let edges = approx.bounds.edges();
    let mut last = None;
    for (win, &u) in edges.windows(2).zip(&approx.segment_values) {
        if win[1] > win[0] {
            writeln!(w, "{} {}", win[0], u)?;
            last = Some(u);
        }
    }
    if let Some(u) = last {
        writeln!(w, "{} {}", approx.bounds.b(), u)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig1() -> DiscretizedSignal {
        DiscretizedSignal::from_values(vec![8.0, 5.5, 2.0, 3.0], 0.0, 4.0).unwrap()
    }

    fn bv(a: f64, b: f64, xs: &[f64]) -> BoundaryVector {
        BoundaryVector::new(a, b, xs.to_vec()).unwrap()
    }

    #[test]
    fn fig1_optimum_split() {
        let s = fig1();
        let ap = build_approximation(&s, &bv(0.0, 4.0, &[2.0])).unwrap();
        assert_eq!(ap.segment_values, vec![6.75, 2.5]);
        assert!((ap.segment_errors[0] - 3.125).abs() < 1e-12);
        assert!((ap.segment_errors[1] - 0.5).abs() < 1e-12);
        assert!((ap.mse - 0.90625).abs() < 1e-12);
    }

    #[test]
    fn fig1_energy_at_one() {
        let s = fig1();
        let e = energy(&s, &bv(0.0, 4.0, &[1.0])).unwrap();
        assert!((e - 1.625).abs() < 1e-12);
    }

    #[test]
    fn constant_signal_energy_zero() {
        let s = DiscretizedSignal::from_values(vec![5.0; 8], 0.0, 1.0).unwrap();
        let ap = build_approximation(&s, &bv(0.0, 1.0, &[0.3, 0.7])).unwrap();
        assert!(ap.segment_values.iter().all(|&u| (u - 5.0).abs() < 1e-12));
        assert!(ap.mse < 1e-12);
    }

    #[test]
    fn single_segment_is_global_mean() {
        let s = fig1();
        let ap = build_approximation(&s, &BoundaryVector::empty(0.0, 4.0).unwrap()).unwrap();
        assert_eq!(ap.segment_values.len(), 1);
        assert!((ap.segment_values[0] - 18.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_boundary_contributes_nothing() {
        let s = fig1();
        let e1 = energy(&s, &bv(0.0, 4.0, &[2.0])).unwrap();
        let e2 = energy(&s, &bv(0.0, 4.0, &[2.0, 2.0])).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn mse_matches_error_sum() {
        let s = fig1();
        let ap = build_approximation(&s, &bv(0.0, 4.0, &[0.7, 2.9])).unwrap();
        let sum: f64 = ap.segment_errors.iter().sum();
        assert!((ap.mse - sum / 4.0).abs() <= 1e-9 * ap.mse.max(1e-300));
    }

    #[test]
    fn domain_mismatch_rejected() {
        let s = fig1();
        let x = bv(0.0, 5.0, &[2.0]);
        assert!(matches!(
            energy(&s, &x),
            Err(ApproxError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn report_fig1() {
        let s = fig1();
        let ap = build_approximation(&s, &bv(0.0, 4.0, &[2.0])).unwrap();
        let r = segment_error_report(&ap);
        assert!((r.min_error - 0.5).abs() < 1e-12);
        assert!((r.max_error - 3.125).abs() < 1e-12);
        assert!((r.ratio - 6.25).abs() < 1e-12);
    }

    #[test]
    fn report_constant_signal_uses_sentinel() {
        let s = DiscretizedSignal::from_values(vec![1.0; 4], 0.0, 1.0).unwrap();
        let ap = build_approximation(&s, &bv(0.0, 1.0, &[0.5])).unwrap();
        let r = segment_error_report(&ap);
        assert_eq!((r.min_error, r.max_error), (0.0, 0.0));
        assert!(r.ratio.is_infinite());
    }

    #[test]
    fn linearized_error_values() {
        assert!((linearized_error(1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((linearized_error(2.0, 3.0).unwrap() - 6.0).abs() < 1e-12);
        assert!(linearized_error(0.0, 1.0).is_err());
        assert!(linearized_error(-1.0, 1.0).is_err());
    }

    #[test]
    fn exact_error_factor_values() {
        assert!((exact_error_factor(0.5).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(exact_error_factor(0.0).unwrap(), 1.0 / 3.0);
        assert_eq!(exact_error_factor(1.0).unwrap(), 1.0 / 3.0);
        assert!(exact_error_factor(-0.1).is_err());
        assert!(exact_error_factor(1.1).is_err());
    }

    #[test]
    fn exact_error_factor_extrema_on_grid() {
        let mut min = (f64::INFINITY, 0.0);
        let mut max = (f64::NEG_INFINITY, 0.0);
        for i in 0..=1000 {
            let eta = i as f64 / 1000.0;
            let v = exact_error_factor(eta).unwrap();
            if v < min.0 {
                min = (v, eta);
            }
            if v > max.0 {
                max = (v, eta);
            }
        }
        assert!((min.0 - 1.0 / 12.0).abs() < 1e-12 && (min.1 - 0.5).abs() < 1e-9);
        assert!((max.0 - 1.0 / 3.0).abs() < 1e-12);
        assert!(max.1 == 0.0 || max.1 == 1.0);
    }

    #[test]
    fn ramp_energy_approaches_linearized_error() {
        // f(x) = 2x over [0, 1], one segment: e = h^3 f'^2 / 12 = 1/3.
        let slope = 2.0;
        let predict = linearized_error(1.0, slope).unwrap();
        let mut prev_gap = f64::INFINITY;
        for m in [100usize, 1000, 10_000] {
            let d = 1.0 / m as f64;
            let vals = (0..m).map(|j| slope * (j as f64 + 0.5) * d).collect();
            let s = DiscretizedSignal::from_values(vals, 0.0, 1.0).unwrap();
            let e = energy(&s, &BoundaryVector::empty(0.0, 1.0).unwrap()).unwrap();
            let gap = (e - predict).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap / predict < 1e-3);
    }

    #[test]
    fn step_table_format() {
        let s = fig1();
        let ap = build_approximation(&s, &bv(0.0, 4.0, &[2.0])).unwrap();
        let mut out = Vec::new();
        write_step_table(&ap, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "x fx\n0 6.75\n2 2.5\n4 2.5\n");
    }

    proptest! {
        #[test]
        fn energy_is_permutation_invariant(
            vals in proptest::collection::vec(0.0..255.0f64, 2..20),
            xs in proptest::collection::vec(0.0..1.0f64, 1..6),
        ) {
            let s = DiscretizedSignal::from_values(vals, 0.0, 1.0).unwrap();
            let mut rev = xs.clone();
            rev.reverse();
            let e1 = energy(&s, &bv(0.0, 1.0, &xs)).unwrap();
            let e2 = energy(&s, &bv(0.0, 1.0, &rev)).unwrap();
            prop_assert_eq!(e1, e2);
            prop_assert!(e1 >= 0.0);
        }

        #[test]
        fn refinement_never_increases_error(
            vals in proptest::collection::vec(0.0..255.0f64, 2..20),
            xs in proptest::collection::vec(0.0..1.0f64, 0..5),
            extra in 0.0..1.0f64,
        ) {
            let s = DiscretizedSignal::from_values(vals, 0.0, 1.0).unwrap();
            let base = energy(&s, &bv(0.0, 1.0, &xs)).unwrap();
            let mut finer = xs.clone();
            finer.push(extra);
            let refined = energy(&s, &bv(0.0, 1.0, &finer)).unwrap();
            prop_assert!(refined <= base + 1e-9 * base.max(1.0));
        }
    }
}
