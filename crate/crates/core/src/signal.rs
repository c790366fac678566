//! Discretized 1-D signals with O(1) interval statistics.
//!
//! A signal on `[a, b]` is stored as `M` uniform piecewise-constant cells
//! together with running integrals of `f` and `f^2`, so the integral of the
//! signal (or its square) over an arbitrary subinterval costs O(1). Interval
//! endpoints need not be cell-aligned: partial end cells contribute
//! fractionally, which is exact because `f` is constant inside a cell.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("signal needs at least one cell")]
    NoCells,
    #[error("invalid domain [{a}, {b}]: right endpoint must exceed left")]
    InvalidDomain { a: f64, b: f64 },
    #[error("interval [{xl}, {xr}] is empty or not contained in [{a}, {b}]")]
    InvalidInterval { xl: f64, xr: f64, a: f64, b: f64 },
    #[error("noise standard deviation {0} is negative")]
    NegativeSigma(f64),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: cannot parse `{token}` as a number")]
    Parse {
        path: String,
        line: usize,
        token: String,
    },
}

/// Additive Gaussian noise parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// A signal on `[a, b]` as `M` uniform piecewise-constant cells.
///
/// Cell `j` covers `[a + j*delta, a + (j+1)*delta)` with `delta = (b-a)/M`.
/// Immutable after construction; all reads are reentrant.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedSignal {
    a: f64,
    b: f64,
    values: Vec<f64>,
    prefix1: Vec<f64>,
    prefix2: Vec<f64>,
}

impl DiscretizedSignal {
    /// Builds a signal from explicit cell values.
    pub fn from_values(values: Vec<f64>, a: f64, b: f64) -> Result<Self, SignalError> {
        if values.is_empty() {
            return Err(SignalError::NoCells);
        }
        if !(b > a) {
            return Err(SignalError::InvalidDomain { a, b });
        }
        let delta = (b - a) / values.len() as f64;
        let mut prefix1 = Vec::with_capacity(values.len() + 1);
        let mut prefix2 = Vec::with_capacity(values.len() + 1);
        let (mut s1, mut s2) = (0.0, 0.0);
        prefix1.push(0.0);
        prefix2.push(0.0);
        for &v in &values {
            s1 += v * delta;
            s2 += v * v * delta;
            prefix1.push(s1);
            prefix2.push(s2);
        }
        Ok(Self {
            a,
            b,
            values,
            prefix1,
            prefix2,
        })
    }

    /// The chirp benchmark `f(x) = 255 cos(2 pi x (1 + 5x))` on `[0, 1]`,
    /// discretized by midpoint sampling on `cells` uniform cells.
    pub fn chirp(cells: usize) -> Result<Self, SignalError> {
        if cells == 0 {
            return Err(SignalError::NoCells);
        }
        let delta = 1.0 / cells as f64;
        let values = (0..cells)
            .map(|j| {
                let x = (j as f64 + 0.5) * delta;
                255.0 * (2.0 * std::f64::consts::PI * x * (1.0 + 5.0 * x)).cos()
            })
            .collect();
        Self::from_values(values, 0.0, 1.0)
    }

    /// A seeded random step signal: 256 unit-width cells on `[0, 256]` split
    /// into `segments` constant pieces with levels uniform in `[0, 255]`.
    ///
    /// Stands in for nonsmooth image-row inputs in the experiments.
    pub fn steps(segments: usize, seed: u64) -> Result<Self, SignalError> {
        const CELLS: usize = 256;
        let segments = segments.clamp(1, CELLS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // distinct interior breakpoints
        let mut cuts = Vec::with_capacity(segments - 1);
        while cuts.len() < segments - 1 {
            let c = rng.gen_range(1..CELLS);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        cuts.push(CELLS);
        let mut values = Vec::with_capacity(CELLS);
        let mut start = 0;
        for &end in &cuts {
            let level = rng.gen_range(0.0..255.0);
            values.extend(std::iter::repeat(level).take(end - start));
            start = end;
        }
        Self::from_values(values, 0.0, CELLS as f64)
    }

    /// Reads one real per line; a leading line whose first token is not
    /// numeric is treated as a header and skipped.
    pub fn load_csv(path: &Path, a: f64, b: f64) -> Result<Self, SignalError> {
        Self::from_values(read_csv_values(path)?, a, b)
    }

    /// Returns a new signal with i.i.d. `Normal(0, sigma^2)` noise added to
    /// every cell. Deterministic given `spec.seed`; the input is unchanged.
    pub fn add_gaussian_noise(&self, spec: NoiseSpec) -> Result<Self, SignalError> {
        if spec.sigma < 0.0 {
            return Err(SignalError::NegativeSigma(spec.sigma));
        }
        if spec.sigma == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.sigma).expect("sigma checked nonnegative");
        let values = self
            .values
            .iter()
            .map(|&v| v + normal.sample(&mut rng))
            .collect();
        Self::from_values(values, self.a, self.b)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn num_cells(&self) -> usize {
        self.values.len()
    }

    pub fn delta(&self) -> f64 {
        (self.b - self.a) / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn prefix1(&self) -> &[f64] {
        &self.prefix1
    }

    pub fn prefix2(&self) -> &[f64] {
        &self.prefix2
    }

    /// Index of the cell containing `x` (the last cell for `x = b`).
    pub fn cell_index(&self, x: f64) -> usize {
        let t = (x - self.a) / self.delta();
        (t as usize).min(self.values.len() - 1)
    }

    /// Cell value at position `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        self.values[self.cell_index(x)]
    }

    /// Running integral of `f` from `a` to `x` (exact for the cell model).
    #[inline]
    pub(crate) fn cum_f(&self, x: f64) -> f64 {
        let k = self.cell_index(x);
        self.prefix1[k] + (x - (self.a + k as f64 * self.delta())) * self.values[k]
    }

    /// Running integral of `f^2` from `a` to `x`.
    #[inline]
    pub(crate) fn cum_f2(&self, x: f64) -> f64 {
        let k = self.cell_index(x);
        let v = self.values[k];
        self.prefix2[k] + (x - (self.a + k as f64 * self.delta())) * v * v
    }

    /// Exact `(I1, I2, len)` with `I1 = ∫ f`, `I2 = ∫ f^2` over `[xl, xr]`.
    pub fn interval_integrals(&self, xl: f64, xr: f64) -> Result<(f64, f64, f64), SignalError> {
        if !(self.a <= xl && xl <= xr && xr <= self.b) {
            return Err(SignalError::InvalidInterval {
                xl,
                xr,
                a: self.a,
                b: self.b,
            });
        }
        if xl == xr {
            return Ok((0.0, 0.0, 0.0));
        }
        Ok((
            self.cum_f(xr) - self.cum_f(xl),
            self.cum_f2(xr) - self.cum_f2(xl),
            xr - xl,
        ))
    }
}

/// One real per line; a leading non-numeric line is treated as a header.
pub fn read_csv_values(path: &Path) -> Result<Vec<f64>, SignalError> {
    let file = File::open(path).map_err(|source| SignalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| SignalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let token = line.trim();
        if token.is_empty() {
            continue;
        }
        match token.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if idx == 0 => continue, // header
            Err(_) => {
                return Err(SignalError::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    token: token.to_string(),
                })
            }
        }
    }
    Ok(values)
}
