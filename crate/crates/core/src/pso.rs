//! SPSO-2011 minimisation of the segmentation energy.
//!
//! Particles fly in the box `[a, b]^(N-1)` and are kept in nondecreasing
//! coordinate order: the energy is permutation invariant, so after every
//! move the position is re-sorted (velocity components follow their
//! coordinates). Without this canonicalisation particles in different
//! ordering sectors pull each other towards the diagonal and the swarm
//! stalls far from the optimum at larger `N`. Degenerate (tied) boundaries
//! are legal and cost nothing.
//! The topology is the adaptive random neighbourhood of SPSO-2011: every
//! particle is informed by itself plus `K` uniformly drawn particles, and
//! all neighbourhoods are re-drawn after a fixed number of iterations
//! without global improvement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::approx::{error_sum_sorted, BoundaryVector};
use crate::signal::DiscretizedSignal;

#[derive(Debug, Error)]
pub enum PsoError {
    #[error("swarm needs at least one particle")]
    EmptySwarm,
    #[error("neighbourhood size {k} must lie in 1..={n}")]
    BadNeighbourhood { k: usize, n: usize },
    #[error("swarm search needs at least 2 segments, got {0}")]
    TooFewSegments(usize),
    #[error("need at least one run")]
    NoRuns,
}

/// SPSO-2011 parameters. Defaults follow the reference setup:
/// `c1 = c2 = 0.5 + ln 2`, `omega = 1/(2 ln 2)`, swarm of 1000 with
/// 20 informers, at most 10000 iterations, topology reset after 15
/// stagnant iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub neighbours: usize,
    pub c1: f64,
    pub c2: f64,
    pub omega: f64,
    pub max_iter: usize,
    pub stagnation_reset: usize,
    /// Stop once the global best energy drops to this value or below.
    /// The default 0 keeps only the exact-zero early exit.
    pub energy_tolerance: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        let ln2 = std::f64::consts::LN_2;
        Self {
            n_particles: 1000,
            neighbours: 20,
            c1: 0.5 + ln2,
            c2: 0.5 + ln2,
            omega: 1.0 / (2.0 * ln2),
            max_iter: 10_000,
            stagnation_reset: 15,
            energy_tolerance: 0.0,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    fn validate(&self) -> Result<(), PsoError> {
        if self.n_particles == 0 {
            return Err(PsoError::EmptySwarm);
        }
        if self.neighbours == 0 || self.neighbours > self.n_particles {
            return Err(PsoError::BadNeighbourhood {
                k: self.neighbours,
                n: self.n_particles,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_energy: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct SwarmState {
    particles: Vec<Particle>,
    /// informers[i] lists the K+1 particles (self first) whose personal
    /// bests particle i consults
    informers: Vec<Vec<usize>>,
    best_position: Vec<f64>,
    best_energy: f64,
    iteration: usize,
    stagnation: usize,
    rng: ChaCha8Rng,
}

impl SwarmState {
    pub fn best_energy(&self) -> f64 {
        self.best_energy
    }

    pub fn best_position(&self) -> &[f64] {
        &self.best_position
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn informers(&self) -> &[Vec<usize>] {
        &self.informers
    }
}

/// Stable mix of a base seed and a run index (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform sample from the closed Euclidean ball of the given centre and
/// radius: isotropic direction scaled by `radius * U^(1/d)`.
pub fn sample_in_ball<R: Rng>(rng: &mut R, centre: &[f64], radius: f64, out: &mut [f64]) {
    debug_assert_eq!(centre.len(), out.len());
    let d = centre.len();
    let mut norm2 = 0.0;
    for o in out.iter_mut() {
        let g: f64 = rng.sample(StandardNormal);
        *o = g;
        norm2 += g * g;
    }
    let u: f64 = rng.gen();
    let scale = if norm2 > 0.0 {
        radius * u.powf(1.0 / d as f64) / norm2.sqrt()
    } else {
        0.0
    };
    for (o, &c) in out.iter_mut().zip(centre) {
        *o = c + *o * scale;
    }
}

fn evaluate(signal: &DiscretizedSignal, position: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(position);
    scratch.sort_unstable_by(f64::total_cmp);
    error_sum_sorted(signal, scratch) / (signal.b() - signal.a())
}

fn random_informers(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| {
            let mut row = Vec::with_capacity(k + 1);
            row.push(i);
            for _ in 0..k {
                row.push(rng.gen_range(0..n));
            }
            row
        })
        .collect()
}

/// Initialises the swarm: positions uniform in the box (sorted into the
/// canonical ordering sector), velocities `(u - x)/2` with a second uniform
/// draw, random topology. Deterministic given `config.seed`.
pub fn init_swarm(
    signal: &DiscretizedSignal,
    n_segments: usize,
    config: &SwarmConfig,
) -> Result<SwarmState, PsoError> {
    if n_segments < 2 {
        return Err(PsoError::TooFewSegments(n_segments));
    }
    config.validate()?;
    let dim = n_segments - 1;
    let (a, b) = (signal.a(), signal.b());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut scratch = Vec::with_capacity(dim);
    let mut particles = Vec::with_capacity(config.n_particles);
    let mut best_energy = f64::INFINITY;
    let mut best_idx = 0;
    for i in 0..config.n_particles {
        let mut position: Vec<f64> = (0..dim).map(|_| rng.gen_range(a..=b)).collect();
        position.sort_unstable_by(f64::total_cmp);
        let velocity: Vec<f64> = position
            .iter()
            .map(|&x| (rng.gen_range(a..=b) - x) / 2.0)
            .collect();
        let energy = evaluate(signal, &position, &mut scratch);
        if energy < best_energy {
            best_energy = energy;
            best_idx = i;
        }
        particles.push(Particle {
            best_position: position.clone(),
            position,
            velocity,
            best_energy: energy,
            energy,
        });
    }
    let informers = random_informers(&mut rng, config.n_particles, config.neighbours);
    let best_position = particles[best_idx].position.clone();
    Ok(SwarmState {
        particles,
        informers,
        best_position,
        best_energy,
        iteration: 0,
        stagnation: 0,
        rng,
    })
}

/// One synchronous SPSO-2011 iteration.
///
/// Movements use the personal bests of the previous iteration; personal and
/// global bests are then updated in particle-index order, which keeps the
/// outcome independent of any internal evaluation parallelism.
pub fn step(state: &mut SwarmState, signal: &DiscretizedSignal, config: &SwarmConfig) {
    let n = state.particles.len();
    let dim = state.best_position.len();
    let (a, b) = (signal.a(), signal.b());
    let mut scratch = Vec::with_capacity(dim);
    let mut gravity = vec![0.0; dim];
    let mut sphere_point = vec![0.0; dim];
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(dim);

    // snapshot of the previous iteration's personal best energies
    let prev_best: Vec<f64> = state.particles.iter().map(|p| p.best_energy).collect();

    for i in 0..n {
        // best informer by personal best energy, first index wins ties
        let mut local = i;
        for &j in &state.informers[i] {
            if prev_best[j] < prev_best[local] {
                local = j;
            }
        }
        let own_best = local == i;
        // borrow the local best position out of the particles slice
        let local_best: Vec<f64> = state.particles[local].best_position.clone();
        let particle = &mut state.particles[i];

        let mut radius2 = 0.0;
        for c in 0..dim {
            let x = particle.position[c];
            let p = x + config.c1 * state.rng.gen::<f64>() * (particle.best_position[c] - x);
            let g = if own_best {
                (x + p) / 2.0
            } else {
                let l = x + config.c2 * state.rng.gen::<f64>() * (local_best[c] - x);
                (x + p + l) / 3.0
            };
            gravity[c] = g;
            radius2 += (g - x) * (g - x);
        }
        sample_in_ball(&mut state.rng, &gravity, radius2.sqrt(), &mut sphere_point);
        for c in 0..dim {
            let mut v = config.omega * particle.velocity[c] + sphere_point[c] - particle.position[c];
            let mut x = particle.position[c] + v;
            if x < a {
                x = a;
                v = -0.5 * v;
            } else if x > b {
                x = b;
                v = -0.5 * v;
            }
            particle.velocity[c] = v;
            particle.position[c] = x;
        }
        // back to the canonical ordering sector, velocities travel with
        // their coordinates
        pairs.clear();
        pairs.extend(
            particle
                .position
                .iter()
                .copied()
                .zip(particle.velocity.iter().copied()),
        );
        pairs.sort_unstable_by(|p, q| p.0.total_cmp(&q.0));
        for (c, &(x, v)) in pairs.iter().enumerate() {
            particle.position[c] = x;
            particle.velocity[c] = v;
        }
        particle.energy = evaluate(signal, &particle.position, &mut scratch);
    }

    // best updates in index order
    let mut improved = false;
    for i in 0..n {
        let particle = &mut state.particles[i];
        if particle.energy < particle.best_energy {
            particle.best_energy = particle.energy;
            particle.best_position.copy_from_slice(&particle.position);
            if particle.best_energy < state.best_energy {
                state.best_energy = particle.best_energy;
                state.best_position.copy_from_slice(&particle.best_position);
                improved = true;
            }
        }
    }

    if improved {
        state.stagnation = 0;
    } else {
        state.stagnation += 1;
        if state.stagnation >= config.stagnation_reset {
            state.informers = random_informers(&mut state.rng, n, config.neighbours);
            state.stagnation = 0;
        }
    }
    state.iteration += 1;
}

/// Runs the swarm until `max_iter` or the energy tolerance is reached.
/// `n_segments = 1` returns the whole-domain mean energy without a swarm.
pub fn run(
    signal: &DiscretizedSignal,
    n_segments: usize,
    config: &SwarmConfig,
) -> Result<(BoundaryVector, f64, usize), PsoError> {
    if n_segments == 0 {
        return Err(PsoError::TooFewSegments(0));
    }
    if n_segments == 1 {
        let bv = BoundaryVector::empty(signal.a(), signal.b()).expect("valid signal domain");
        let e = crate::approx::energy(signal, &bv).expect("matching domain");
        return Ok((bv, e, 0));
    }
    let mut state = init_swarm(signal, n_segments, config)?;
    while state.iteration < config.max_iter && state.best_energy > config.energy_tolerance {
        step(&mut state, signal, config);
    }
    let bv = BoundaryVector::new(signal.a(), signal.b(), state.best_position.clone())
        .expect("confinement keeps positions in the box");
    Ok((bv, state.best_energy, state.iteration))
}

/// Aggregate MSE statistics over repeated seeded runs.
#[derive(Debug, Clone)]
pub struct RunStats {
    pub energies: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl RunStats {
    pub fn from_energies(energies: Vec<f64>, seeds: Vec<u64>) -> Self {
        let n = energies.len() as f64;
        let mean = energies.iter().sum::<f64>() / n;
        // population standard deviation over the performed runs
        let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            energies,
            seeds,
            mean,
            std_dev: var.sqrt(),
            min,
            max,
        }
    }
}

/// Executes `runs` independent swarm runs with per-run seeds derived from
/// `config.seed`. Runs are independent and execute in parallel; results are
/// collected in run order, so the statistics do not depend on thread count.
pub fn multi_run(
    signal: &DiscretizedSignal,
    n_segments: usize,
    config: &SwarmConfig,
    runs: usize,
) -> Result<RunStats, PsoError> {
    if runs == 0 {
        return Err(PsoError::NoRuns);
    }
    config.validate()?;
    let seeds: Vec<u64> = (0..runs as u64).map(|i| derive_seed(config.seed, i)).collect();
    let energies: Result<Vec<f64>, PsoError> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SwarmConfig { seed, ..*config };
            run(signal, n_segments, &cfg).map(|(_, e, _)| e)
        })
        .collect();
    Ok(RunStats::from_energies(energies?, seeds))
}
