//! Capacity formulas for random memory sets and a Monte Carlo check of the
//! `(P*)^(p-1)` success bound.

use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::{build_problem, h_max_generic, ProbeSpec};
use crate::oracle::{classify_recall, ground_set, nearest_memory, DEFAULT_TIE_TOL};
use crate::sa::{sa_sample, SASchedule};
use crate::spin::{hebbian_learn, MemorySet, SpinVector};

/// Probability that a random memory lies within distance `N/2 + x` of a
/// fixed pattern, exactly and as the exponential lower bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PStar {
    pub exact: f64,
    pub bound: f64,
}

fn check_tail_domain(n: usize, x: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("N must be even and positive, got {n}")));
    }
    if x > n / 2 {
        return Err(Error::InvalidArgument(format!("x = {x} exceeds N/2 = {}", n / 2)));
    }
    Ok(())
}

/// `(sum_{l <= N/2 + x} C(N, l), 2^N)` in exact integers.
pub fn p_star_ratio(n: usize, x: usize) -> Result<(BigUint, BigUint)> {
    check_tail_domain(n, x)?;
    let mut term = BigUint::one();
    let mut sum = BigUint::zero();
    for l in 0..=n / 2 + x {
        if l > 0 {
            term = term * BigUint::from(n - l + 1) / BigUint::from(l);
        }
        sum += &term;
    }
    Ok((sum, BigUint::one() << n))
}

pub fn p_star(n: usize, x: usize) -> Result<PStar> {
    let (num, den) = p_star_ratio(n, x)?;
    let exact = if num == den {
        1.0
    } else {
        // 1 - rest/den keeps full precision when the tail is close to one
        let rest = &den - &num;
        1.0 - ratio_f64(&rest, &den)
    };
    let (nf, xf) = (n as f64, x as f64);
    let bound = 1.0 - 0.5 * (-(xf * xf) / (nf / 2.0 + xf)).exp();
    Ok(PStar { exact, bound })
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(60);
    let (a, b) = (num >> shift, den >> shift);
    a.to_f64().unwrap_or(f64::INFINITY) / b.to_f64().unwrap_or(f64::INFINITY)
}

/// Largest `p` with `(P*)^(p-1) >= gamma`, as a real number.
pub fn capacity_bound(gamma: f64, p_star_value: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if p_star_value == 1.0 {
        return Err(Error::Unbounded);
    }
    if !(p_star_value > 0.0 && p_star_value < 1.0) {
        return Err(Error::InvalidArgument(format!("P* must lie in (0, 1), got {p_star_value}")));
    }
    Ok(1.0 + gamma.ln() / p_star_value.ln())
}

/// `t^2 / (0.5 + t)`, the exponent rate of the tail bound with `x = tN`.
pub fn tail_rate(t_frac: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&t_frac) {
        return Err(Error::InvalidArgument(format!("t must lie in [0, 0.5), got {t_frac}")));
    }
    Ok(t_frac * t_frac / (0.5 + t_frac))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentialCapacity {
    pub c1: f64,
    pub c2: f64,
    /// `1 + 2 exp(C1 N)`, after the small-z logarithm approximation.
    pub approximate: f64,
    /// `1 + ln(gamma) / ln(P*)` with `gamma = 1 - exp(-C2 N)` and the bound
    /// form of `P*`; `None` when it diverges (`C2 = 0` gives `gamma = 0`).
    pub unapproximated: Option<f64>,
}

pub fn exponential_capacity(n: usize, t_frac: f64, c2: f64) -> Result<ExponentialCapacity> {
    let rate = tail_rate(t_frac)?;
    if !(0.0..=rate).contains(&c2) {
        return Err(Error::InvalidArgument(format!("C2 must lie in [0, {rate}], got {c2}")));
    }
    let nf = n as f64;
    let c1 = rate - c2;
    let gamma = 1.0 - (-c2 * nf).exp();
    let p = 1.0 - 0.5 * (-rate * nf).exp();
    let unapproximated = if gamma > 0.0 && p < 1.0 { Some(1.0 + gamma.ln() / p.ln()) } else { None };
    Ok(ExponentialCapacity { c1, c2, approximate: 1.0 + 2.0 * (c1 * nf).exp(), unapproximated })
}

/// `(0.5 - f)^2 / (1 - f)`: the sum `C1 + C2` at basin fraction `f`.
pub fn tradeoff(f: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&f) {
        return Err(Error::InvalidArgument(format!("f must lie in [0, 0.5), got {f}")));
    }
    Ok((0.5 - f).powi(2) / (1.0 - f))
}

/// Finite-size basin fraction `(N/2 - 1 - x) / N`.
pub fn basin_fraction(n: usize, x: usize) -> f64 {
    (n as f64 / 2.0 - 1.0 - x as f64) / n as f64
}

/// `N / (2 ln N)`, the classical Hebbian storage capacity.
pub fn hebbian_classical_capacity(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("N must be at least 3, got {n}")));
    }
    let nf = n as f64;
    Ok(nf / (2.0 * nf.ln()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum McEngine {
    Oracle,
    Sa { schedule: SASchedule, restarts: usize },
}

impl McEngine {
    pub fn sa_default() -> Self {
        Self::Sa { schedule: SASchedule::default(), restarts: 8 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::Sa { .. } => "sa",
        }
    }
}

impl fmt::Display for McEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub n: usize,
    pub p: usize,
    pub t_frac: f64,
    pub x: usize,
    pub d_s: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    /// `(P*_exact)^(p-1)`.
    pub predicted_lower_bound: f64,
    pub engine: String,
}

impl MonteCarloResult {
    /// Binomial standard error of the rate.
    pub fn sigma(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }

    /// True when the rate sits more than three standard errors below the
    /// prediction. The error uses the predicted rate so a perfect empirical
    /// rate does not collapse it to zero.
    pub fn significantly_below(&self) -> bool {
        let q = self.predicted_lower_bound;
        let sigma = (q * (1.0 - q) / self.trials as f64).sqrt();
        self.rate < q - 3.0 * sigma
    }

    pub const CSV_HEADER: &'static str = "N,p,t_frac,trials,successes,rate,predicted_bound,engine";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n, self.p, self.t_frac, self.trials, self.successes, self.rate, self.predicted_lower_bound, self.engine
        )
    }

    pub fn to_csv(results: &[Self]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in results {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// Largest `N` accepted by the oracle engine in Monte Carlo runs.
pub const MC_ORACLE_CAP: usize = 20;

fn random_memories(rng: &mut ChaCha8Rng, n: usize, p: usize) -> MemorySet {
    let mut mems: Vec<SpinVector> = Vec::with_capacity(p);
    while mems.len() < p {
        let spins = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let m = SpinVector::new(spins).expect("valid spins");
        if !mems.contains(&m) {
            mems.push(m);
        }
    }
    MemorySet::new(mems).expect("distinct memories")
}

fn run_trial(n: usize, p: usize, d_s: usize, engine: &McEngine, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let memories = random_memories(&mut rng, n, p);
    let flips = sample(&mut rng, n, d_s).into_vec();
    let pattern = memories.get(0).with_flips(&flips);
    let probe = ProbeSpec::full(pattern, 0.0)?;
    let Some(nearest) = nearest_memory(&memories, &probe)? else {
        return Ok(false);
    };
    let w = hebbian_learn(&memories);
    let bound = match h_max_generic(&w, &probe, memories.get(nearest)) {
        Ok(b) if b > 0.0 => b,
        Ok(_) | Err(Error::AlreadyMemory) => return Ok(false),
        Err(e) => return Err(e),
    };
    let probe = probe.with_h(0.5 * bound)?;
    let problem = build_problem(&w, &probe)?;
    match engine {
        McEngine::Oracle => {
            let ground = ground_set(&problem, DEFAULT_TIE_TOL)?;
            let outcome = classify_recall(&ground, &memories, &probe)?;
            Ok(outcome.is_success())
        }
        McEngine::Sa { schedule, restarts } => {
            let res = sa_sample(&problem, schedule, *restarts, seed ^ 0x5A5A_5A5A)?;
            Ok(res.best == *memories.get(nearest))
        }
    }
}

/// Success rate of recall on random memory sets with a probe at distance
/// `N/2 - 1 - round(tN)` from the first memory, next to the predicted
/// lower bound `(P*)^(p-1)`.
pub fn monte_carlo_success(
    n: usize,
    p: usize,
    t_frac: f64,
    trials: usize,
    seed: u64,
    engine: &McEngine,
) -> Result<MonteCarloResult> {
    if p == 0 || trials == 0 {
        return Err(Error::InvalidArgument("p and trials must be positive".into()));
    }
    tail_rate(t_frac)?;
    if matches!(engine, McEngine::Oracle) && n > MC_ORACLE_CAP {
        return Err(Error::CapExceeded { engine: "oracle", cap: MC_ORACLE_CAP, n });
    }
    let x = (t_frac * n as f64).round() as usize;
    check_tail_domain(n, x)?;
    if n as f64 / 2.0 < 1.0 + x as f64 {
        return Err(Error::InvalidArgument(format!("N/2 - 1 - x is negative for N = {n}, x = {x}")));
    }
    if p as f64 > 2f64.powi(n as i32) {
        return Err(Error::InvalidArgument(format!("cannot draw {p} distinct memories of length {n}")));
    }
    let d_s = n / 2 - 1 - x;
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|k| run_trial(n, p, d_s, engine, seed.wrapping_add(k as u64)))
        .collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|&&s| s).count();
    let ps = p_star(n, x)?;
    Ok(MonteCarloResult {
        n,
        p,
        t_frac,
        x,
        d_s,
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        predicted_lower_bound: ps.exact.powi(p as i32 - 1),
        engine: engine.name().to_string(),
    })
}
