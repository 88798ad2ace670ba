//! Single-flip Metropolis simulated annealing on the classical energy.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::spin::SpinVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cooling {
    /// Temperature multiplied by a constant factor each sweep.
    Geometric,
    /// Temperature decreased by a constant amount each sweep.
    Linear,
}

/// Temperature ladder for [`sa_sample`].
#[derive(Clone, Debug, PartialEq)]
pub struct SASchedule {
    t_initial: f64,
    t_final: f64,
    sweeps: usize,
    cooling: Cooling,
}

impl Default for SASchedule {
    /// Geometric cooling from `T = 3` to `T = 0.02` over 1000 sweeps.
    fn default() -> Self {
        Self { t_initial: 3.0, t_final: 0.02, sweeps: 1000, cooling: Cooling::Geometric }
    }
}

impl SASchedule {
    pub fn new(t_initial: f64, t_final: f64, sweeps: usize, cooling: Cooling) -> Result<Self> {
        if !(t_final > 0.0 && t_initial >= t_final) {
            return Err(Error::InvalidArgument(format!(
                "temperatures must satisfy 0 < final ({t_final}) <= initial ({t_initial})"
            )));
        }
        if sweeps == 0 {
            return Err(Error::InvalidArgument("sweeps must be at least 1".into()));
        }
        if t_initial.is_infinite() && sweeps > 1 {
            return Err(Error::InvalidArgument("an infinite initial temperature needs a single sweep".into()));
        }
        Ok(Self { t_initial, t_final, sweeps, cooling })
    }

    /// One sweep at a fixed temperature (`f64::INFINITY` accepts every move).
    pub fn constant(temperature: f64) -> Result<Self> {
        Self::new(temperature, temperature, 1, Cooling::Geometric)
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn t_initial(&self) -> f64 {
        self.t_initial
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn cooling(&self) -> Cooling {
        self.cooling
    }

    /// Temperature used during sweep `k` (0-based).
    pub fn temperature(&self, k: usize) -> f64 {
        if self.sweeps == 1 {
            return self.t_initial;
        }
        let frac = k as f64 / (self.sweeps - 1) as f64;
        match self.cooling {
            Cooling::Geometric => self.t_initial * (self.t_final / self.t_initial).powf(frac),
            Cooling::Linear => self.t_initial + (self.t_final - self.t_initial) * frac,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaResult {
    /// Lowest-energy state seen in each restart, with its energy.
    pub best_per_restart: Vec<(SpinVector, f64)>,
    /// How many restarts ended their search at each state.
    pub counts: BTreeMap<SpinVector, usize>,
    pub best: SpinVector,
    pub best_energy: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl SaResult {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed as f64
    }

    /// Running minimum of the best energy over restarts.
    pub fn best_energy_trace(&self) -> Vec<f64> {
        self.best_per_restart
            .iter()
            .scan(f64::INFINITY, |m, (_, e)| {
                *m = m.min(*e);
                Some(*m)
            })
            .collect()
    }
}

struct Chain<'a> {
    neighbours: &'a [Vec<(usize, f64)>],
    state: SpinVector,
    local: Vec<f64>,
    energy: f64,
}

impl<'a> Chain<'a> {
    fn new(problem: &IsingProblem, neighbours: &'a [Vec<(usize, f64)>], state: SpinVector) -> Self {
        let local = (0..problem.n()).map(|i| problem.local_field(&state, i)).collect();
        let energy = problem.energy(&state).expect("dimensions agree");
        Self { neighbours, state, local, energy }
    }

    /// One sweep in random site order; returns the number of accepted flips.
    fn sweep<R: Rng>(&mut self, beta: f64, order: &mut [usize], rng: &mut R) -> u64 {
        order.shuffle(rng);
        let mut accepted = 0;
        for &i in order.iter() {
            let si = self.state.get(i) as f64;
            let delta = 2.0 * si * self.local[i];
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                self.state.flip(i);
                self.energy += delta;
                for &(j, w) in &self.neighbours[i] {
                    self.local[j] -= 2.0 * w * si;
                }
                accepted += 1;
            }
        }
        accepted
    }
}

fn random_state<R: Rng>(n: usize, rng: &mut R) -> SpinVector {
    SpinVector::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).expect("n >= 1")
}

/// Restarts in the default budget, paired with [`SASchedule::default`].
pub const DEFAULT_RESTARTS: usize = 100;

/// Runs `restarts` independent anneals from random states. Restart `r` uses
/// a generator seeded with `seed + r`.
pub fn sa_sample(problem: &IsingProblem, schedule: &SASchedule, restarts: usize, seed: u64) -> Result<SaResult> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let n = problem.n();
    let neighbours = problem.neighbours();
    let runs: Vec<(SpinVector, f64, u64)> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r));
            let mut chain = Chain::new(problem, &neighbours, random_state(n, &mut rng));
            let mut order: Vec<usize> = (0..n).collect();
            let mut best = (chain.state.clone(), chain.energy);
            let mut accepted = 0;
            for k in 0..schedule.sweeps {
                let beta = 1.0 / schedule.temperature(k);
                accepted += chain.sweep(beta, &mut order, &mut rng);
                if chain.energy < best.1 {
                    best = (chain.state.clone(), chain.energy);
                }
            }
            let exact = problem.energy(&best.0).expect("dimensions agree");
            (best.0, exact, accepted)
        })
        .collect();

    let mut counts = BTreeMap::new();
    let mut accepted = 0;
    for (s, _, a) in &runs {
        *counts.entry(s.clone()).or_insert(0) += 1;
        accepted += a;
    }
    let (best, best_energy) = runs
        .iter()
        .fold(None::<(&SpinVector, f64)>, |acc, (s, e, _)| match acc {
            Some((_, be)) if be <= *e => acc,
            _ => Some((s, *e)),
        })
        .map(|(s, e)| (s.clone(), e))
        .expect("at least one restart");
    Ok(SaResult {
        best_per_restart: runs.into_iter().map(|(s, e, _)| (s, e)).collect(),
        counts,
        best,
        best_energy,
        accepted,
        proposed: (restarts * schedule.sweeps * n) as u64,
    })
}

/// Fixed-temperature Metropolis chain; records the state after every sweep
/// following `burn_in` discarded sweeps.
pub fn sample_at_temperature(
    problem: &IsingProblem,
    temperature: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
) -> Result<BTreeMap<SpinVector, usize>> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature {temperature} must be positive")));
    }
    let n = problem.n();
    let neighbours = problem.neighbours();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chain = Chain::new(problem, &neighbours, random_state(n, &mut rng));
    let mut order: Vec<usize> = (0..n).collect();
    let beta = 1.0 / temperature;
    let mut counts = BTreeMap::new();
    for k in 0..burn_in + sweeps {
        chain.sweep(beta, &mut order, &mut rng);
        if k >= burn_in {
            *counts.entry(chain.state.clone()).or_insert(0) += 1;
        }
    }
    Ok(counts)
}
