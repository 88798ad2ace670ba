//! Attraction basins: the distance condition `d_s + d_b <= n - 1`, the
//! radius bound, and exhaustive verification with the exact oracle.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::{build_problem, h_max_generic, ProbeSpec};
use crate::oracle::{classify_recall, ground_set, nearest_memory, Classification, DEFAULT_TIE_TOL};
use crate::spin::{hamming, hebbian_learn, MemorySet, SpinVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasinReport {
    /// Smallest probe-to-memory distance on the mask.
    pub d_s: usize,
    /// Largest probe-to-memory distance on the mask.
    pub d_b: usize,
    /// Number of probed sites.
    pub n: usize,
    /// `d_s + d_b <= n - 1`.
    pub condition_8_holds: bool,
    /// Largest pairwise memory distance on the mask.
    pub d_of_n: usize,
    /// `d_of_n <= d_s + d_b <= n - 1`.
    pub chain_holds: bool,
    /// [`radius_bound`] of `n`.
    pub radius_bound: usize,
}

pub fn basin_check(memories: &MemorySet, probe: &ProbeSpec) -> Result<BasinReport> {
    let d: Vec<usize> = memories.iter().map(|m| probe.distance(m)).collect::<Result<_>>()?;
    let d_s = *d.iter().min().expect("non-empty");
    let d_b = *d.iter().max().expect("non-empty");
    let n = probe.n_active();
    let mut d_of_n = 0;
    for a in 0..memories.len() {
        for b in a + 1..memories.len() {
            d_of_n = d_of_n.max(hamming(memories.get(a), memories.get(b), Some(probe.mask()))?);
        }
    }
    let condition_8_holds = d_s + d_b < n;
    Ok(BasinReport {
        d_s,
        d_b,
        n,
        condition_8_holds,
        d_of_n,
        chain_holds: d_of_n <= d_s + d_b && condition_8_holds,
        radius_bound: if n >= 2 { radius_bound(n)? } else { 0 },
    })
}

/// Largest probe distance for which recall is guaranteed: `(N-2)/2` for
/// even `N`, `(N-1)/2` for odd `N`.
pub fn radius_bound(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("radius bound needs N >= 2, got {n}")));
    }
    Ok(if n.is_multiple_of(2) { (n - 2) / 2 } else { (n - 1) / 2 })
}

/// How the field strength is picked for each probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldPolicy {
    /// The same `h` for every probe; probes whose window excludes it are skipped.
    Fixed(f64),
    /// `h = fraction * h_max_generic(nearest memory)`.
    FractionOfBound(f64),
}

impl Default for FieldPolicy {
    fn default() -> Self {
        Self::FractionOfBound(0.5)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub field: FieldPolicy,
    /// Only test probes satisfying `d_s + d_b <= n - 1`.
    pub require_condition_8: bool,
    pub tie_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { field: FieldPolicy::default(), require_condition_8: true, tie_tol: DEFAULT_TIE_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasinFailure {
    pub probe: SpinVector,
    pub d_s: usize,
    pub d_b: usize,
    pub h: f64,
    pub classification: Classification,
    /// Memory actually recalled, if the ground state was a unique memory.
    pub recalled_index: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BasinVerification {
    /// Probes run through the oracle.
    pub checked: usize,
    pub failures: Vec<BasinFailure>,
    /// Probes equidistant from two or more nearest memories.
    pub ties: Vec<SpinVector>,
    /// Probes skipped because the distance condition fails.
    pub skipped_condition: usize,
    /// Probes skipped because the field window `(0, h_max_generic)` is empty
    /// or excludes the fixed field.
    pub skipped_window: usize,
}

impl BasinVerification {
    /// CSV with columns `probe,d_s,d_b,h,classification`.
    pub fn failures_csv(&self) -> String {
        let mut out = String::from("probe,d_s,d_b,h,classification\n");
        for f in &self.failures {
            let _ = writeln!(out, "{},{},{},{},{}", f.probe, f.d_s, f.d_b, f.h, f.classification);
        }
        out
    }
}

/// All states within Hamming distance `radius` of `center`.
pub fn hamming_ball(center: &SpinVector, radius: usize) -> Vec<SpinVector> {
    fn rec(center: &SpinVector, start: usize, left: usize, picked: &mut Vec<usize>, out: &mut Vec<SpinVector>) {
        out.push(center.with_flips(picked));
        if left == 0 {
            return;
        }
        for i in start..center.len() {
            picked.push(i);
            rec(center, i + 1, left - 1, picked, out);
            picked.pop();
        }
    }
    let mut out = Vec::new();
    rec(center, 0, radius.min(center.len()), &mut Vec::new(), &mut out);
    out
}

enum ProbeVerdict {
    Tie,
    SkipCondition,
    SkipWindow,
    Pass,
    Fail(BasinFailure),
}

/// Runs the oracle on every full-length probe within distance `max_d` of
/// some memory and collects those not uniquely recalled to their nearest
/// memory.
pub fn verify_basin_exhaustive(memories: &MemorySet, max_d: usize, options: &VerifyOptions) -> Result<BasinVerification> {
    let w = hebbian_learn(memories);
    let probes: BTreeSet<SpinVector> = memories.iter().flat_map(|m| hamming_ball(m, max_d)).collect();
    let verdicts: Vec<(SpinVector, ProbeVerdict)> = probes
        .into_par_iter()
        .map(|pattern| {
            let verdict = (|| -> Result<ProbeVerdict> {
                let probe = ProbeSpec::full(pattern.clone(), 0.0)?;
                let Some(nearest) = nearest_memory(memories, &probe)? else {
                    return Ok(ProbeVerdict::Tie);
                };
                let report = basin_check(memories, &probe)?;
                if options.require_condition_8 && !report.condition_8_holds {
                    return Ok(ProbeVerdict::SkipCondition);
                }
                let bound = match h_max_generic(&w, &probe, memories.get(nearest)) {
                    Ok(b) => Some(b),
                    Err(Error::AlreadyMemory) => None,
                    Err(e) => return Err(e),
                };
                let h = match (options.field, bound) {
                    (FieldPolicy::Fixed(h), Some(b)) if h > 0.0 && h < b => h,
                    (FieldPolicy::Fixed(h), None) if h > 0.0 => h,
                    (FieldPolicy::FractionOfBound(f), Some(b)) if b > 0.0 => f * b,
                    // the probe is itself a memory: any positive field recalls it
                    (FieldPolicy::FractionOfBound(f), None) => f,
                    _ => return Ok(ProbeVerdict::SkipWindow),
                };
                let probe = probe.with_h(h)?;
                let ground = ground_set(&build_problem(&w, &probe)?, options.tie_tol)?;
                let outcome = classify_recall(&ground, memories, &probe)?;
                Ok(if outcome.is_success() {
                    ProbeVerdict::Pass
                } else {
                    ProbeVerdict::Fail(BasinFailure {
                        probe: pattern.clone(),
                        d_s: report.d_s,
                        d_b: report.d_b,
                        h,
                        classification: outcome.classification,
                        recalled_index: outcome.recalled_index,
                    })
                })
            })();
            verdict.map(|v| (pattern, v))
        })
        .collect::<Result<_>>()?;

    let mut out = BasinVerification::default();
    for (pattern, v) in verdicts {
        match v {
            ProbeVerdict::Tie => out.ties.push(pattern),
            ProbeVerdict::SkipCondition => out.skipped_condition += 1,
            ProbeVerdict::SkipWindow => out.skipped_window += 1,
            ProbeVerdict::Pass => out.checked += 1,
            ProbeVerdict::Fail(f) => {
                out.checked += 1;
                out.failures.push(f);
            }
        }
    }
    Ok(out)
}
