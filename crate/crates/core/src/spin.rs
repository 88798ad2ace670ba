//! Spin vectors, memory sets and the classical Hopfield network.
//!
//! Spins are stored as `i8` values in `{-1, +1}`. Text I/O uses `+`/`-`
//! characters, with `1`/`0` accepted on input (`0` maps to `-1`).

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Local fields smaller than this are treated as exactly zero by the
/// update rule, so rounding noise never triggers a flip.
const ZERO_FIELD: f64 = 1e-12;

/// A configuration of `N >= 1` Ising spins.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::EmptySpinVector);
        }
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad as i64));
        }
        Ok(Self(spins))
    }

    /// All spins up.
    pub fn ones(n: usize) -> Self {
        assert!(n > 0, "spin vector needs at least one site");
        Self(vec![1; n])
    }

    /// Decodes a basis-state index: bit `i` set means spin `i` is `-1`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n > 0 && n <= 64);
        Self((0..n).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Inverse of [`SpinVector::from_index`].
    pub fn to_index(&self) -> u64 {
        assert!(self.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0u64, |acc, (i, _)| acc | 1 << i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// Returns a copy with the listed sites flipped.
    pub fn with_flips(&self, sites: &[usize]) -> Self {
        let mut out = self.0.clone();
        for &i in sites {
            out[i] = -out[i];
        }
        Self(out)
    }

    /// Flips `count` distinct sites drawn uniformly with a seeded generator.
    pub fn with_random_flips(&self, count: usize, seed: u64) -> Result<Self> {
        if count > self.len() {
            return Err(Error::InvalidArgument(format!("cannot flip {count} of {} sites", self.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = rand::seq::index::sample(&mut rng, self.len(), count).into_vec();
        Ok(self.with_flips(&sites))
    }

    pub(crate) fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    /// Integer overlap `sum_i a_i b_i`.
    pub fn overlap(&self, other: &Self) -> Result<i64> {
        check_len(self.len(), other.len())?;
        Ok(self.0.iter().zip(&other.0).map(|(&a, &b)| (a * b) as i64).sum())
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        self.0.iter().copied()
    }
}

impl fmt::Display for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_spin_line(s.trim(), 1)
    }
}

impl Serialize for SpinVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpinVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn parse_spin_line(line: &str, line_no: usize) -> Result<SpinVector> {
    let spins = line
        .chars()
        .map(|c| match c {
            '+' | '1' => Ok(1),
            '-' | '0' => Ok(-1),
            other => Err(Error::Parse {
                line: line_no,
                message: format!("unexpected character {other:?}"),
            }),
        })
        .collect::<Result<Vec<i8>>>()?;
    SpinVector::new(spins).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Hamming distance, optionally restricted to a set of sites.
pub fn hamming(a: &SpinVector, b: &SpinVector, mask: Option<&[usize]>) -> Result<usize> {
    check_len(a.len(), b.len())?;
    match mask {
        None => Ok(a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count()),
        Some(sites) => {
            let mut d = 0;
            for &i in sites {
                if i >= a.len() {
                    return Err(Error::SiteOutOfRange { site: i, n: a.len() });
                }
                if a.0[i] != b.0[i] {
                    d += 1;
                }
            }
            Ok(d)
        }
    }
}

/// A non-empty list of distinct memories of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct MemorySet {
    memories: Vec<SpinVector>,
}

impl MemorySet {
    pub fn new(memories: Vec<SpinVector>) -> Result<Self> {
        let first = memories.first().ok_or(Error::EmptyMemorySet)?;
        let n = first.len();
        for (k, m) in memories.iter().enumerate() {
            check_len(n, m.len())?;
            if let Some(j) = memories[..k].iter().position(|o| o == m) {
                return Err(Error::DuplicateMemory { first: j, second: k });
            }
        }
        Ok(Self { memories })
    }

    /// Parses the memory-set text format: one memory per line, `#` starts a
    /// comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut memories = Vec::new();
        let mut lines = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let m = parse_spin_line(line, k + 1)?;
            if let Some(first) = memories.first() {
                let first: &SpinVector = first;
                if first.len() != m.len() {
                    return Err(Error::Parse {
                        line: k + 1,
                        message: format!("expected {} spins, found {}", first.len(), m.len()),
                    });
                }
            }
            memories.push(m);
            lines.push(k + 1);
        }
        Self::new(memories).map_err(|e| match e {
            Error::DuplicateMemory { first, second } => Error::Parse {
                line: lines[second],
                message: format!("duplicate of the memory on line {}", lines[first]),
            },
            Error::EmptyMemorySet => Error::Parse { line: 0, message: e.to_string() },
            other => other,
        })
    }

    pub fn to_text(&self) -> String {
        self.memories.iter().map(|m| format!("{m}\n")).collect()
    }

    /// Network size `N`.
    pub fn n(&self) -> usize {
        self.memories[0].len()
    }

    /// Number of memories `p`.
    pub fn len(&self) -> usize {
        self.memories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memories.is_empty()
    }

    pub fn get(&self, mu: usize) -> &SpinVector {
        &self.memories[mu]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SpinVector> {
        self.memories.iter()
    }

    pub fn position(&self, state: &SpinVector) -> Option<usize> {
        self.memories.iter().position(|m| m == state)
    }

    /// True when every pair of memories has zero overlap.
    pub fn is_orthogonal(&self) -> bool {
        self.first_non_orthogonal_pair().is_none()
    }

    pub(crate) fn first_non_orthogonal_pair(&self) -> Option<(usize, usize)> {
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.memories[a].overlap(&self.memories[b]).unwrap() != 0 {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

impl<'a> IntoIterator for &'a MemorySet {
    type Item = &'a SpinVector;
    type IntoIter = std::slice::Iter<'a, SpinVector>;

    fn into_iter(self) -> Self::IntoIter {
        self.memories.iter()
    }
}

/// Symmetric, zero-diagonal coupling matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, w: vec![0.0; n * n] }
    }

    /// Builds from a dense row-major matrix, checking symmetry and the zero
    /// diagonal exactly.
    pub fn from_dense(n: usize, w: Vec<f64>) -> Result<Self> {
        check_len(n * n, w.len())?;
        for i in 0..n {
            if w[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is nonzero")));
            }
            for j in 0..i {
                if w[i * n + j] != w[j * n + i] {
                    return Err(Error::InvalidArgument(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { n, w })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    /// `sum_{i<j} W_ij s_i s_j`, i.e. `<s|W/2|s>`.
    pub fn quadratic_form(&self, s: &SpinVector) -> Result<f64> {
        check_len(self.n, s.len())?;
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = self.row(i);
            let mut r = 0.0;
            for j in i + 1..self.n {
                r += row[j] * s.0[j] as f64;
            }
            acc += r * s.0[i] as f64;
        }
        Ok(acc)
    }

    /// `sum_j W_ij s_j`.
    pub fn local_field(&self, s: &SpinVector, i: usize) -> f64 {
        self.row(i).iter().zip(&s.0).map(|(&w, &x)| w * x as f64).sum()
    }
}

/// Per-site thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasVector(Vec<f64>);

impl BiasVector {
    pub fn new(thresholds: Vec<f64>) -> Self {
        Self(thresholds)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Hebbian weights `W_ij = (1/N) sum_mu xi_i xi_j` off the diagonal, zero on it.
pub fn hebbian_learn(memories: &MemorySet) -> WeightMatrix {
    let n = memories.n();
    let scale = 1.0 / n as f64;
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let sum: i64 = memories.iter().map(|m| (m.0[i] * m.0[j]) as i64).sum();
            let v = sum as f64 * scale;
            w[i * n + j] = v;
            w[j * n + i] = v;
        }
    }
    WeightMatrix { n, w }
}

/// Hopfield energy `-sum_{i<j} W_ij S_i S_j - sum_i theta_i S_i`.
pub fn energy(weights: &WeightMatrix, biases: &BiasVector, state: &SpinVector) -> Result<f64> {
    check_len(weights.n(), biases.len())?;
    let q = weights.quadratic_form(state)?;
    let b: f64 = biases.0.iter().zip(&state.0).map(|(&t, &s)| t * s as f64).sum();
    Ok(-q - b)
}

/// Result of [`classical_update`].
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateOutcome {
    pub state: SpinVector,
    pub sweeps_used: usize,
    pub converged: bool,
}

/// Asynchronous Hopfield dynamics.
///
/// Each sweep visits the sites in a fresh seeded random order and sets
/// `S_i <- sign(sum_j W_ij S_j + theta_i)`; a zero argument keeps the current
/// spin. The threshold enters with the sign that makes [`energy`]
/// non-increasing. Stops after the first sweep without flips.
pub fn classical_update(
    weights: &WeightMatrix,
    biases: &BiasVector,
    state: &SpinVector,
    seed: u64,
    max_sweeps: usize,
) -> Result<UpdateOutcome> {
    classical_update_observed(weights, biases, state, seed, max_sweeps, |_| {})
}

/// Like [`classical_update`], calling `on_flip` with the state after every
/// accepted flip.
pub fn classical_update_observed<F: FnMut(&SpinVector)>(
    weights: &WeightMatrix,
    biases: &BiasVector,
    state: &SpinVector,
    seed: u64,
    max_sweeps: usize,
    mut on_flip: F,
) -> Result<UpdateOutcome> {
    let n = weights.n();
    check_len(n, biases.len())?;
    check_len(n, state.len())?;
    if max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = state.clone();
    let mut order: Vec<usize> = (0..n).collect();
    for sweep in 1..=max_sweeps {
        order.shuffle(&mut rng);
        let mut flipped = false;
        for &i in &order {
            let field = weights.local_field(&s, i) + biases.0[i];
            let target = if field > ZERO_FIELD {
                1
            } else if field < -ZERO_FIELD {
                -1
            } else {
                s.0[i]
            };
            if target != s.0[i] {
                s.0[i] = target;
                flipped = true;
                on_flip(&s);
            }
        }
        if !flipped {
            return Ok(UpdateOutcome { state: s, sweeps_used: sweep, converged: true });
        }
    }
    Ok(UpdateOutcome { state: s, sweeps_used: max_sweeps, converged: false })
}
