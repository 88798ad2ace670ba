//! Closed-system quantum annealing on the full `2^N` state space.
//!
//! The Hamiltonian is `H(s) = A(s) H_I + B(s) H_P` with `H_I = -sum_i X_i`
//! and `H_P` the diagonal problem energy. Each time step uses the symmetric
//! split
//!
//! ```text
//! exp(-i B H_P dt/2) exp(-i A H_I dt) exp(-i B H_P dt/2)
//! ```
//!
//! with `A`, `B` taken at the step midpoint. Both factors are applied
//! exactly: the diagonal one as phases, the transverse one as a product of
//! single-qubit rotations. Every step is therefore unitary to rounding, and
//! the scheme is second order in the step size.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::oracle::diagonal_energies;
use crate::spin::SpinVector;

/// Largest problem [`evolve`] accepts.
pub const MAX_EVOLVE_SPINS: usize = 12;
/// Largest problem [`min_gap`] accepts.
pub const MAX_GAP_SPINS: usize = 8;

const NORM_ABORT: f64 = 1e-6;
const PAR_THRESHOLD: usize = 1 << 10;

/// Piecewise-linear control function on `s in [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlTable {
    points: Vec<(f64, f64)>,
}

impl ControlTable {
    /// Breakpoints must start at `s = 0`, end at `s = 1` and increase strictly.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidSchedule("a control table needs at least two points".into()));
        }
        if points[0].0 != 0.0 || points[points.len() - 1].0 != 1.0 {
            return Err(Error::InvalidSchedule("control table must span s = 0 to s = 1".into()));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidSchedule(format!("s values not increasing at s = {}", w[1].0)));
            }
        }
        if points.iter().any(|&(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidSchedule("non-finite entry".into()));
        }
        Ok(Self { points })
    }

    /// Parses a two-column `s value` table; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|c| !c.is_empty()).collect();
            let bad = |m: &str| Error::Parse { line: k + 1, message: m.to_string() };
            if cols.len() != 2 {
                return Err(bad("expected two columns: s value"));
            }
            let s: f64 = cols[0].parse().map_err(|_| bad("s is not a number"))?;
            let v: f64 = cols[1].parse().map_err(|_| bad("value is not a number"))?;
            points.push((s, v));
        }
        Self::new(points)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let k = self.points.partition_point(|&(x, _)| x <= s);
        if k == 0 {
            return self.points[0].1;
        }
        if k == self.points.len() {
            return self.points[k - 1].1;
        }
        let (s0, v0) = self.points[k - 1];
        let (s1, v1) = self.points[k];
        v0 + (v1 - v0) * (s - s0) / (s1 - s0)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    fn monotone(&self, increasing: bool) -> bool {
        self.points.windows(2).all(|w| if increasing { w[1].1 >= w[0].1 } else { w[1].1 <= w[0].1 })
    }

    fn scaled(&self, f: f64) -> Self {
        Self { points: self.points.iter().map(|&(s, v)| (s, v * f)).collect() }
    }
}

/// Control functions `A(s)`, `B(s)` and the total anneal duration.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealSchedule {
    a: ControlTable,
    b: ControlTable,
    t_anneal: f64,
}

impl AnnealSchedule {
    /// `A(s) = 1 - s`, `B(s) = s`.
    pub fn linear(t_anneal: f64) -> Result<Self> {
        Self::from_tables(
            ControlTable::new(vec![(0.0, 1.0), (1.0, 0.0)])?,
            ControlTable::new(vec![(0.0, 0.0), (1.0, 1.0)])?,
            t_anneal,
        )
    }

    /// Validates monotonicity, then divides both tables by `B(1)` so that
    /// `B(1) = 1`. After that `A(1)` must vanish and `A(0)` be positive.
    pub fn from_tables(a: ControlTable, b: ControlTable, t_anneal: f64) -> Result<Self> {
        if !(t_anneal.is_finite() && t_anneal > 0.0) {
            return Err(Error::InvalidSchedule(format!("anneal time {t_anneal} must be positive")));
        }
        if !a.monotone(false) {
            return Err(Error::InvalidSchedule("A(s) must be non-increasing".into()));
        }
        if !b.monotone(true) {
            return Err(Error::InvalidSchedule("B(s) must be non-decreasing".into()));
        }
        let b1 = b.eval(1.0);
        if !(b1 > 0.0) {
            return Err(Error::InvalidSchedule("B(1) must be positive".into()));
        }
        if b.eval(0.0) < 0.0 || a.eval(1.0) < 0.0 {
            return Err(Error::InvalidSchedule("controls must be non-negative".into()));
        }
        let (a, b) = (a.scaled(1.0 / b1), b.scaled(1.0 / b1));
        if a.eval(1.0) > 1e-9 {
            return Err(Error::InvalidSchedule(format!("A(1) = {} after normalisation, expected 0", a.eval(1.0))));
        }
        if !(a.eval(0.0) > 0.0) {
            return Err(Error::InvalidSchedule("A(0) must be positive".into()));
        }
        Ok(Self { a, b, t_anneal })
    }

    /// Same control curves, different duration.
    pub fn with_duration(&self, t_anneal: f64) -> Result<Self> {
        Self::from_tables(self.a.clone(), self.b.clone(), t_anneal)
    }

    pub fn a(&self, s: f64) -> f64 {
        self.a.eval(s)
    }

    pub fn b(&self, s: f64) -> f64 {
        self.b.eval(s)
    }

    pub fn t_anneal(&self) -> f64 {
        self.t_anneal
    }

    pub fn a_table(&self) -> &ControlTable {
        &self.a
    }

    pub fn b_table(&self) -> &ControlTable {
        &self.b
    }
}

/// Normalised state vector over the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Ground state of `-sum_i X_i`: the uniform superposition.
    pub fn uniform(n: usize) -> Self {
        let dim = 1usize << n;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { n, amplitudes: vec![a; dim] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn apply_phases(&mut self, diag: &[f64], factor: f64) {
        let f = |(a, &e): (&mut Complex64, &f64)| *a *= Complex64::from_polar(1.0, -factor * e);
        if self.amplitudes.len() >= PAR_THRESHOLD {
            self.amplitudes.par_iter_mut().zip(diag.par_iter()).for_each(f);
        } else {
            self.amplitudes.iter_mut().zip(diag.iter()).for_each(f);
        }
    }

    /// Applies `exp(i theta sum_q X_q)`, i.e. `exp(-i A dt H_I)` with
    /// `theta = A dt`.
    fn apply_transverse(&mut self, theta: f64) {
        let (c, s) = (theta.cos(), theta.sin());
        let is = Complex64::new(0.0, s);
        for q in 0..self.n {
            let half = 1usize << q;
            let rotate = |block: &mut [Complex64]| {
                let (lo, hi) = block.split_at_mut(half);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (a, b) = (*x, *y);
                    *x = a * c + b * is;
                    *y = b * c + a * is;
                }
            };
            if self.amplitudes.len() >= PAR_THRESHOLD {
                self.amplitudes.par_chunks_mut(2 * half).for_each(rotate);
            } else {
                self.amplitudes.chunks_mut(2 * half).for_each(rotate);
            }
        }
    }
}

/// Final state of an anneal and its computational-basis distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealResult {
    pub state: QuantumState,
    pub probabilities: Vec<f64>,
    /// Largest `| ||psi|| - 1 |` seen at any checkpoint.
    pub norm_drift: f64,
    pub steps: usize,
}

impl AnnealResult {
    pub fn n(&self) -> usize {
        self.state.n
    }

    pub fn probability(&self, s: &SpinVector) -> f64 {
        self.probabilities[s.to_index() as usize]
    }

    /// Probability of measuring `target`.
    pub fn success_probability(&self, target: &SpinVector) -> f64 {
        self.probability(target)
    }

    /// Most likely outcome (lowest index on ties).
    pub fn modal(&self) -> SpinVector {
        let (idx, _) = self
            .probabilities
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
        SpinVector::from_index(self.n(), idx as u64)
    }

    /// `<psi| H_P |psi>`.
    pub fn expected_energy(&self, problem: &IsingProblem) -> Result<f64> {
        let diag = diagonal_energies(problem)?;
        Ok(self.probabilities.iter().zip(&diag).map(|(p, e)| p * e).sum())
    }
}

/// Evolves the uniform superposition under `A(s) H_I + B(s) H_P` for
/// `steps` equal time steps and returns the final distribution.
pub fn evolve(problem: &IsingProblem, schedule: &AnnealSchedule, steps: usize) -> Result<AnnealResult> {
    let n = problem.n();
    if n > MAX_EVOLVE_SPINS {
        return Err(Error::CapExceeded { engine: "quantum annealer", cap: MAX_EVOLVE_SPINS, n });
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be at least 1".into()));
    }
    let diag = diagonal_energies(problem)?;
    let mut psi = QuantumState::uniform(n);
    let dt = schedule.t_anneal / steps as f64;
    let mut drift: f64 = 0.0;
    for k in 0..steps {
        let s = (k as f64 + 0.5) / steps as f64;
        let (a, b) = (schedule.a(s), schedule.b(s));
        psi.apply_phases(&diag, 0.5 * b * dt);
        psi.apply_transverse(a * dt);
        psi.apply_phases(&diag, 0.5 * b * dt);
        if k % 64 == 63 || k + 1 == steps {
            let d = (psi.norm() - 1.0).abs();
            drift = drift.max(d);
            if d > NORM_ABORT {
                return Err(Error::NormDrift { drift: d, step: k + 1 });
            }
        }
    }
    let probabilities = psi.amplitudes.iter().map(|a| a.norm_sqr()).collect();
    Ok(AnnealResult { state: psi, probabilities, norm_drift: drift, steps })
}

/// Dense `H(s)` in the computational basis.
fn dense_hamiltonian(n: usize, diag: &[f64], a: f64, b: f64) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for x in 0..dim {
        m[(x, x)] = b * diag[x];
        for q in 0..n {
            m[(x, x ^ (1 << q))] = -a;
        }
    }
    m
}

/// Sorted eigenvalues of `H(s)`.
pub fn spectrum_at(problem: &IsingProblem, schedule: &AnnealSchedule, s: f64) -> Result<Vec<f64>> {
    let n = problem.n();
    if n > MAX_GAP_SPINS {
        return Err(Error::CapExceeded { engine: "gap solver", cap: MAX_GAP_SPINS, n });
    }
    let diag = diagonal_energies(problem)?;
    Ok(sorted_spectrum(n, &diag, schedule.a(s), schedule.b(s)))
}

fn sorted_spectrum(n: usize, diag: &[f64], a: f64, b: f64) -> Vec<f64> {
    let eig = SymmetricEigen::new(dense_hamiltonian(n, diag, a, b));
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest gap between the two lowest levels of `H(s)` over `s_grid`
/// evenly spaced points including both ends. Degenerate levels count as a
/// zero gap. Returns `(gap, s)`.
pub fn min_gap(problem: &IsingProblem, schedule: &AnnealSchedule, s_grid: usize) -> Result<(f64, f64)> {
    let n = problem.n();
    if n > MAX_GAP_SPINS {
        return Err(Error::CapExceeded { engine: "gap solver", cap: MAX_GAP_SPINS, n });
    }
    if s_grid < 2 {
        return Err(Error::InvalidArgument("gap grid needs at least two points".into()));
    }
    let diag = diagonal_energies(problem)?;
    let gaps: Vec<(f64, f64)> = (0..s_grid)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / (s_grid - 1) as f64;
            let ev = sorted_spectrum(n, &diag, schedule.a(s), schedule.b(s));
            (ev[1] - ev[0], s)
        })
        .collect();
    Ok(gaps.into_iter().fold((f64::INFINITY, 0.0), |best, g| if g.0 < best.0 { g } else { best }))
}

/// Draws `shots` measurement outcomes from the final distribution.
pub fn sample(result: &AnnealResult, shots: usize, seed: u64) -> Result<BTreeMap<SpinVector, usize>> {
    let dist = WeightedIndex::new(&result.probabilities)
        .map_err(|e| Error::InvalidArgument(format!("degenerate distribution: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let idx = dist.sample(&mut rng);
        *counts.entry(SpinVector::from_index(result.n(), idx as u64)).or_insert(0) += 1;
    }
    Ok(counts)
}
