//! Exhaustive ground-state search over all `2^N` spin configurations.
//!
//! Enumeration walks a Gray code so each step flips one spin and updates the
//! energy in `O(N)`. The state space is split by its top bits into
//! contiguous blocks that are scanned in parallel.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::{build_problem, IsingProblem, ProbeSpec};
use crate::spin::{hebbian_learn, MemorySet, SpinVector};

/// Largest problem the oracle accepts.
pub const MAX_SPINS: usize = 24;

/// Default tie tolerance. Hebbian energies are multiples of `1/(2N)` plus
/// multiples of `h`, so genuine ties are exact.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Extra room kept while scanning so incremental rounding cannot evict a
/// true minimum before the exact re-check.
const SCAN_SLACK: f64 = 1e-7;

/// Every state within tolerance of the minimum energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundSet {
    pub energy: f64,
    /// Sorted lexicographically (`-` before `+`, site 0 first).
    pub states: Vec<SpinVector>,
    pub total_enumerated: u64,
}

impl GroundSet {
    pub fn is_unique(&self) -> bool {
        self.states.len() == 1
    }

    pub fn contains(&self, s: &SpinVector) -> bool {
        self.states.binary_search(s).is_ok()
    }
}

fn block_bits(n: usize) -> usize {
    n.min(6)
}

/// Scans the states whose top `n - low` bits equal `prefix`, calling
/// `visit(index, energy)` for each.
fn scan_block<F: FnMut(u64, f64)>(problem: &IsingProblem, low: usize, prefix: u64, mut visit: F) {
    let n = problem.n();
    let mut index = prefix << low;
    let mut s = SpinVector::from_index(n, index);
    let mut energy = problem.energy(&s).expect("dimensions agree");
    let mut lf: Vec<f64> = (0..n).map(|i| problem.local_field(&s, i)).collect();
    visit(index, energy);
    for g in 1u64..(1u64 << low) {
        let i = g.trailing_zeros() as usize;
        let si = s.get(i) as f64;
        energy += 2.0 * si * lf[i];
        s.flip(i);
        index ^= 1 << i;
        let new = -si;
        for (l, &j) in lf.iter_mut().zip(problem.couplings_row(i)) {
            *l += 2.0 * j * new;
        }
        visit(index, energy);
    }
}

fn check_cap(problem: &IsingProblem) -> Result<()> {
    if problem.n() > MAX_SPINS {
        return Err(Error::CapExceeded { engine: "oracle", cap: MAX_SPINS, n: problem.n() });
    }
    Ok(())
}

/// Energies of all `2^N` basis states, indexed as in
/// [`SpinVector::from_index`].
pub fn diagonal_energies(problem: &IsingProblem) -> Result<Vec<f64>> {
    check_cap(problem)?;
    let n = problem.n();
    let high = block_bits(n);
    let low = n - high;
    let mut out = vec![0.0; 1usize << n];
    out.par_chunks_mut(1usize << low).enumerate().for_each(|(prefix, chunk)| {
        let base = (prefix as u64) << low;
        scan_block(problem, low, prefix as u64, |idx, e| chunk[(idx - base) as usize] = e);
    });
    Ok(out)
}

/// Exact minimum energy and every state within `tie_tol` of it.
pub fn ground_set(problem: &IsingProblem, tie_tol: f64) -> Result<GroundSet> {
    check_cap(problem)?;
    if !(tie_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tie tolerance {tie_tol} must be non-negative")));
    }
    let n = problem.n();
    let high = block_bits(n);
    let low = n - high;
    let keep = tie_tol + SCAN_SLACK;
    let candidates: Vec<u64> = (0..1u64 << high)
        .into_par_iter()
        .flat_map_iter(|prefix| {
            let mut best = f64::INFINITY;
            let mut list: Vec<(u64, f64)> = Vec::new();
            scan_block(problem, low, prefix, |idx, e| {
                if e < best - keep {
                    best = e;
                    list.retain(|&(_, x)| x <= best + keep);
                } else if e < best {
                    best = e;
                }
                if e <= best + keep {
                    list.push((idx, e));
                }
            });
            list.retain(|&(_, x)| x <= best + keep);
            list.into_iter().map(|(i, _)| i)
        })
        .collect();

    let exact: Vec<(SpinVector, f64)> = candidates
        .into_iter()
        .map(|idx| {
            let s = SpinVector::from_index(n, idx);
            let e = problem.energy(&s).expect("dimensions agree");
            (s, e)
        })
        .collect();
    let min = exact.iter().map(|(_, e)| *e).fold(f64::INFINITY, f64::min);
    let mut states: Vec<SpinVector> = exact.into_iter().filter(|(_, e)| *e <= min + tie_tol).map(|(s, _)| s).collect();
    states.sort();
    Ok(GroundSet { energy: min, states, total_enumerated: 1u64 << n })
}

/// How a ground set relates to the stored memories.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Exactly one ground state, and it is a stored memory.
    UniqueMemory,
    /// Several ground states, all memories or global flips of memories, with
    /// at least one memory among them.
    DegenerateMixed,
    /// A ground state that is neither a memory nor a flipped memory, or a
    /// ground set made only of flipped memories.
    Spurious,
    /// The probe pattern itself, not a memory, is a ground state.
    ProbeOverbias,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::UniqueMemory => "unique-memory",
            Self::DegenerateMixed => "degenerate-mixed",
            Self::Spurious => "spurious",
            Self::ProbeOverbias => "probe-overbias",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecallOutcome {
    pub classification: Classification,
    pub recalled: GroundSet,
    /// Index of the recalled memory when the ground state is unique.
    pub recalled_index: Option<usize>,
    /// Memory closest to the probe on its mask; `None` on a distance tie.
    pub nearest_memory_index: Option<usize>,
}

impl RecallOutcome {
    /// Unique recall of the nearest memory.
    pub fn is_success(&self) -> bool {
        self.classification == Classification::UniqueMemory
            && self.recalled_index.is_some()
            && self.recalled_index == self.nearest_memory_index
    }
}

/// Index of the memory strictly closest to the probe, if there is one.
pub fn nearest_memory(memories: &MemorySet, probe: &ProbeSpec) -> Result<Option<usize>> {
    let d: Vec<usize> = memories.iter().map(|m| probe.distance(m)).collect::<Result<_>>()?;
    let min = *d.iter().min().expect("memory set is non-empty");
    let mut at_min = d.iter().enumerate().filter(|(_, &x)| x == min);
    let first = at_min.next().map(|(i, _)| i);
    Ok(if at_min.next().is_some() { None } else { first })
}

pub fn classify_recall(ground: &GroundSet, memories: &MemorySet, probe: &ProbeSpec) -> Result<RecallOutcome> {
    let nearest_memory_index = nearest_memory(memories, probe)?;
    let position = |s: &SpinVector| memories.position(s);
    let is_flip = |s: &SpinVector| memories.position(&s.flipped()).is_some();

    let (classification, recalled_index) = if ground.is_unique() && position(&ground.states[0]).is_some() {
        (Classification::UniqueMemory, position(&ground.states[0]))
    } else if ground.contains(probe.pattern()) && position(probe.pattern()).is_none() {
        (Classification::ProbeOverbias, None)
    } else if ground.states.iter().any(|s| position(s).is_none() && !is_flip(s))
        || ground.states.iter().all(|s| position(s).is_none())
    {
        (Classification::Spurious, None)
    } else {
        (Classification::DegenerateMixed, None)
    };
    Ok(RecallOutcome { classification, recalled: ground.clone(), recalled_index, nearest_memory_index })
}

/// Learns Hebbian weights, builds the probe problem and classifies its exact
/// ground set.
pub fn recall(memories: &MemorySet, probe: &ProbeSpec, tie_tol: f64) -> Result<RecallOutcome> {
    let w = hebbian_learn(memories);
    let problem = build_problem(&w, probe)?;
    let ground = ground_set(&problem, tie_tol)?;
    classify_recall(&ground, memories, probe)
}
