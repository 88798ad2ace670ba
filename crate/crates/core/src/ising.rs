//! Probe-biased problem Hamiltonian and its closed-form energetics.
//!
//! The classical energy functional used by every solver in this crate is
//!
//! ```text
//! E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i
//! ```
//!
//! so a positive field `h_i` favours `s_i = +1`. A probe `chi` with strength
//! `h` contributes `h_i = h * chi_i` on its masked sites.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::spin::{check_len, hamming, hebbian_learn, MemorySet, SpinVector, WeightMatrix};

/// A probe pattern, the sites it acts on, and its field strength.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSpec {
    pattern: SpinVector,
    mask: Vec<usize>,
    h: f64,
}

impl ProbeSpec {
    /// Probe acting on every site.
    pub fn full(pattern: SpinVector, h: f64) -> Result<Self> {
        let mask = (0..pattern.len()).collect();
        Self::masked(pattern, mask, h)
    }

    /// Probe acting on a subset of sites. The mask is sorted and deduplicated.
    pub fn masked(pattern: SpinVector, mut mask: Vec<usize>, h: f64) -> Result<Self> {
        if !(h.is_finite() && h >= 0.0) {
            return Err(Error::InvalidFieldStrength(h));
        }
        mask.sort_unstable();
        mask.dedup();
        if mask.is_empty() {
            return Err(Error::EmptyMask);
        }
        if let Some(&site) = mask.iter().find(|&&i| i >= pattern.len()) {
            return Err(Error::SiteOutOfRange { site, n: pattern.len() });
        }
        Ok(Self { pattern, mask, h })
    }

    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::masked(self.pattern.clone(), self.mask.clone(), h)
    }

    pub fn pattern(&self) -> &SpinVector {
        &self.pattern
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of probed sites `n`.
    pub fn n_active(&self) -> usize {
        self.mask.len()
    }

    pub fn is_full(&self) -> bool {
        self.mask.len() == self.pattern.len()
    }

    /// Hamming distance to `state` over the mask.
    pub fn distance(&self, state: &SpinVector) -> Result<usize> {
        hamming(&self.pattern, state, Some(&self.mask))
    }
}

/// Couplings and local fields of a classical Ising problem.
#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem {
    n: usize,
    couplings: Vec<f64>,
    fields: Vec<f64>,
}

impl IsingProblem {
    /// Builds from a dense row-major coupling matrix; symmetry and the zero
    /// diagonal are checked exactly.
    pub fn new(n: usize, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptySpinVector);
        }
        check_len(n * n, couplings.len())?;
        check_len(n, fields.len())?;
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("coupling ({i},{i}) on the diagonal")));
            }
            for j in 0..i {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(Error::InvalidArgument(format!("couplings ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { n, couplings, fields })
    }

    /// Problem with no couplings or fields.
    pub fn empty(n: usize) -> Self {
        Self { n, couplings: vec![0.0; n * n], fields: vec![0.0; n] }
    }

    /// Builds from an upper-triangle list of `(i, j, J)` entries.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], fields: Vec<f64>) -> Result<Self> {
        check_len(n, fields.len())?;
        let mut p = Self { n, couplings: vec![0.0; n * n], fields };
        for &(i, j, v) in edges {
            if i >= n || j >= n {
                return Err(Error::SiteOutOfRange { site: i.max(j), n });
            }
            if i == j {
                return Err(Error::InvalidArgument(format!("self coupling on site {i}")));
            }
            p.set_coupling(i, j, v);
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    pub(crate) fn set_coupling(&mut self, i: usize, j: usize, v: f64) {
        self.couplings[i * self.n + j] = v;
        self.couplings[j * self.n + i] = v;
    }

    pub fn couplings_row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub(crate) fn fields_mut(&mut self) -> &mut [f64] {
        &mut self.fields
    }

    /// Nonzero couplings `(i, j, J_ij)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.coupling(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Sparse rows: for each site, its nonzero neighbours.
    pub fn neighbours(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|i| {
                self.couplings_row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect()
    }

    /// The classical energy `E(s)`.
    pub fn energy(&self, s: &SpinVector) -> Result<f64> {
        check_len(self.n, s.len())?;
        let spins = s.spins();
        let mut e = 0.0;
        for i in 0..self.n {
            let row = self.couplings_row(i);
            let mut acc = 0.0;
            for j in i + 1..self.n {
                acc += row[j] * spins[j] as f64;
            }
            e -= acc * spins[i] as f64;
            e -= self.fields[i] * spins[i] as f64;
        }
        Ok(e)
    }

    /// Coupling part of the energy only.
    pub fn memory_energy(&self, s: &SpinVector) -> Result<f64> {
        let field: f64 = self.fields.iter().zip(s.spins()).map(|(&h, &x)| h * x as f64).sum();
        Ok(self.energy(s)? + field)
    }

    /// `sum_j J_ij s_j + h_i`; flipping spin `i` changes the energy by
    /// `2 s_i` times this.
    pub fn local_field(&self, s: &SpinVector, i: usize) -> f64 {
        self.couplings_row(i)
            .iter()
            .zip(s.spins())
            .map(|(&j, &x)| j * x as f64)
            .sum::<f64>()
            + self.fields[i]
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_field(&self) -> f64 {
        self.fields.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Plain-text form: an `n <N>` line, then `h <i> <value>` and
    /// `J <i> <j> <value>` lines for nonzero entries.
    pub fn to_text(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, &h) in self.fields.iter().enumerate() {
            if h != 0.0 {
                let _ = writeln!(out, "h {i} {h}");
            }
        }
        for (i, j, v) in self.edges() {
            let _ = writeln!(out, "J {i} {j} {v}");
        }
        out
    }

    /// Parses [`IsingProblem::to_text`] output; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut problem: Option<Self> = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
            let idx = |s: &str, n: usize| -> Result<usize> {
                let i = s.parse::<usize>().map_err(|e| err(format!("bad index {s:?}: {e}")))?;
                if i >= n {
                    return Err(err(format!("site {i} out of range for n = {n}")));
                }
                Ok(i)
            };
            match (tok[0], problem.as_mut()) {
                ("n", None) if tok.len() == 2 => {
                    let n = tok[1].parse::<usize>().map_err(|e| err(format!("bad size: {e}")))?;
                    if n == 0 {
                        return Err(err("n must be positive".into()));
                    }
                    problem = Some(Self::empty(n));
                }
                ("n", Some(_)) => return Err(err("duplicate n line".into())),
                (_, None) => return Err(err("expected an `n <N>` line first".into())),
                ("h", Some(p)) if tok.len() == 3 => {
                    let i = idx(tok[1], p.n)?;
                    p.fields[i] = num(tok[2])?;
                }
                ("J", Some(p)) if tok.len() == 4 => {
                    let (i, j) = (idx(tok[1], p.n)?, idx(tok[2], p.n)?);
                    if i == j {
                        return Err(err(format!("self coupling on site {i}")));
                    }
                    p.set_coupling(i, j, num(tok[3])?);
                }
                _ => return Err(err(format!("unrecognised line {line:?}"))),
            }
        }
        problem.ok_or(Error::Parse { line: 0, message: "no `n <N>` line".into() })
    }

    /// Multiplies every coupling and field by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            couplings: self.couplings.iter().map(|v| v * factor).collect(),
            fields: self.fields.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Problem Hamiltonian with `J = W` and fields `h * chi_i` on the probe mask.
pub fn build_problem(weights: &WeightMatrix, probe: &ProbeSpec) -> Result<IsingProblem> {
    let n = weights.n();
    check_len(n, probe.pattern.len())?;
    let mut fields = vec![0.0; n];
    for &i in &probe.mask {
        fields[i] = probe.h * probe.pattern.get(i) as f64;
    }
    Ok(IsingProblem { n, couplings: weights.as_slice().to_vec(), fields })
}

/// Energy shift of a memory under the probe term: `-h (n - 2d)`.
pub fn probe_energy_shift(probe: &ProbeSpec, memory: &SpinVector) -> Result<f64> {
    let d = probe.distance(memory)? as f64;
    Ok(-probe.h * (probe.n_active() as f64 - 2.0 * d))
}

/// Energy shift of the globally flipped memory: `+h (n - 2d)`.
pub fn spurious_flip_shift(probe: &ProbeSpec, memory: &SpinVector) -> Result<f64> {
    Ok(-probe_energy_shift(probe, memory)?)
}

/// Closed-form field bound for mutually orthogonal memories:
/// `(1/(4 d_mu)) [N(1-p) + 4 sum d_nu - (4/N) sum d_nu^2]`.
pub fn h_max(memories: &MemorySet, probe: &ProbeSpec, target: usize) -> Result<f64> {
    if target >= memories.len() {
        return Err(Error::IndexOutOfRange { index: target, len: memories.len() });
    }
    check_len(memories.n(), probe.pattern.len())?;
    if !probe.is_full() {
        return Err(Error::PartialMask);
    }
    if let Some((first, second)) = memories.first_non_orthogonal_pair() {
        return Err(Error::NotOrthogonal { first, second });
    }
    let n = memories.n() as f64;
    let p = memories.len() as f64;
    let d: Vec<f64> = memories
        .iter()
        .map(|m| probe.distance(m).map(|d| d as f64))
        .collect::<Result<_>>()?;
    let dmu = d[target];
    if dmu == 0.0 {
        return Err(Error::AlreadyMemory);
    }
    let sum: f64 = d.iter().sum();
    let sum_sq: f64 = d.iter().map(|x| x * x).sum();
    Ok((n * (1.0 - p) + 4.0 * sum - 4.0 / n * sum_sq) / (4.0 * dmu))
}

/// Per-memory field bounds with their maximum and minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct HMaxSummary {
    /// `None` where the probe coincides with the memory.
    pub per_memory: Vec<Option<f64>>,
    pub max: Option<f64>,
    pub min: Option<f64>,
}

/// Evaluates [`h_max`] for every memory. The recall window stated for the
/// scheme is `0 < h < max`; `min` is the conservative alternative.
pub fn h_max_summary(memories: &MemorySet, probe: &ProbeSpec) -> Result<HMaxSummary> {
    let mut per_memory = Vec::with_capacity(memories.len());
    for mu in 0..memories.len() {
        match h_max(memories, probe, mu) {
            Ok(v) => per_memory.push(Some(v)),
            Err(Error::AlreadyMemory) => per_memory.push(None),
            Err(e) => return Err(e),
        }
    }
    let vals = per_memory.iter().flatten().copied();
    let max = vals.clone().fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    let min = vals.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    Ok(HMaxSummary { per_memory, max, min })
}

/// Field bound from the exact quadratic forms, valid for any weights:
/// `(<xi|W/2|xi> - <chi|W/2|chi>) / (2d)`.
pub fn h_max_generic(weights: &WeightMatrix, probe: &ProbeSpec, target: &SpinVector) -> Result<f64> {
    check_len(weights.n(), probe.pattern.len())?;
    let d = probe.distance(target)?;
    if d == 0 {
        return Err(Error::AlreadyMemory);
    }
    let qt = weights.quadratic_form(target)?;
    let qp = weights.quadratic_form(&probe.pattern)?;
    Ok((qt - qp) / (2.0 * d as f64))
}

/// Energies along an `h` grid for the probe state, every memory and every
/// globally flipped memory.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub n: usize,
    pub p: usize,
    /// Coupling-only energy of each memory.
    pub memory_energy: Vec<f64>,
    /// Coupling-only energy of each flipped memory (equal to `memory_energy`).
    pub flip_memory_energy: Vec<f64>,
    /// Coupling-only energy of the probe state.
    pub probe_memory_energy: f64,
    /// Probe-term energy per unit `h`: `-(n - 2 d_mu)` for each memory.
    pub probe_slope: Vec<f64>,
    /// Probe-term energy per unit `h` of the probe state itself: `-n`.
    pub probe_self_slope: f64,
    /// Generic field bound per memory, `None` where the probe is the memory.
    pub h_max: Vec<Option<f64>>,
    pub rows: Vec<EnergyRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub h: f64,
    pub probe: f64,
    pub memories: Vec<f64>,
    pub flips: Vec<f64>,
}

/// Tabulates total energies along `h_grid`.
pub fn energy_report(memories: &MemorySet, probe: &ProbeSpec, h_grid: &[f64]) -> Result<EnergyReport> {
    let w = hebbian_learn(memories);
    check_len(memories.n(), probe.pattern.len())?;
    let memory_energy: Vec<f64> = memories.iter().map(|m| w.quadratic_form(m).map(|q| -q)).collect::<Result<_>>()?;
    let flip_memory_energy: Vec<f64> =
        memories.iter().map(|m| w.quadratic_form(&m.flipped()).map(|q| -q)).collect::<Result<_>>()?;
    let probe_memory_energy = -w.quadratic_form(&probe.pattern)?;
    let unit = probe.with_h(1.0)?;
    let probe_slope: Vec<f64> = memories.iter().map(|m| probe_energy_shift(&unit, m)).collect::<Result<_>>()?;
    let probe_self_slope = -(probe.n_active() as f64);
    let h_max = memories
        .iter()
        .map(|m| match h_max_generic(&w, probe, m) {
            Ok(v) => Ok(Some(v)),
            Err(Error::AlreadyMemory) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let rows = h_grid
        .iter()
        .map(|&h| EnergyRow {
            h,
            probe: probe_memory_energy + h * probe_self_slope,
            memories: memory_energy.iter().zip(&probe_slope).map(|(e, s)| e + h * s).collect(),
            flips: flip_memory_energy.iter().zip(&probe_slope).map(|(e, s)| e - h * s).collect(),
        })
        .collect();
    Ok(EnergyReport {
        n: memories.n(),
        p: memories.len(),
        memory_energy,
        flip_memory_energy,
        probe_memory_energy,
        probe_slope,
        probe_self_slope,
        h_max,
        rows,
    })
}

impl EnergyReport {
    /// CSV with columns `h,E_probe,E_mem_1..,E_flip_1..` (memories 1-based).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,E_probe");
        for mu in 1..=self.p {
            let _ = write!(out, ",E_mem_{mu}");
        }
        for mu in 1..=self.p {
            let _ = write!(out, ",E_flip_{mu}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{}", row.h, row.probe);
            for v in row.memories.iter().chain(&row.flips) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Coupling resolution of the emulated 9-bit conversion.
pub const COUPLING_STEP: f64 = 1.0 / 256.0;
/// Field resolution of the emulated 9-bit conversion.
pub const FIELD_STEP: f64 = 1.0 / 128.0;
pub const COUPLING_LIMIT: f64 = 1.0;
pub const FIELD_LIMIT: f64 = 2.0;

/// Rounds couplings to multiples of `2^-8` and fields to multiples of `2^-7`.
/// Values outside `|J| <= 1`, `|h| <= 2` are rejected.
pub fn quantize_hardware(problem: &IsingProblem) -> Result<IsingProblem> {
    for &v in &problem.couplings {
        if v.abs() > COUPLING_LIMIT {
            return Err(Error::OutOfHardwareRange { what: "coupling", value: v, limit: COUPLING_LIMIT });
        }
    }
    for &v in &problem.fields {
        if v.abs() > FIELD_LIMIT {
            return Err(Error::OutOfHardwareRange { what: "field", value: v, limit: FIELD_LIMIT });
        }
    }
    let q = |v: f64, step: f64| (v / step).round() * step;
    Ok(IsingProblem {
        n: problem.n,
        couplings: problem.couplings.iter().map(|&v| q(v, COUPLING_STEP)).collect(),
        fields: problem.fields.iter().map(|&v| q(v, FIELD_STEP)).collect(),
    })
}

/// Scales a problem down (never up) until it fits the hardware range.
/// Returns the scaled problem and the factor applied.
pub fn rescale_to_range(problem: &IsingProblem) -> (IsingProblem, f64) {
    let mut factor: f64 = 1.0;
    let jm = problem.max_abs_coupling();
    let hm = problem.max_abs_field();
    if jm > COUPLING_LIMIT {
        factor = factor.min(COUPLING_LIMIT / jm);
    }
    if hm > FIELD_LIMIT {
        factor = factor.min(FIELD_LIMIT / hm);
    }
    (problem.scaled(factor), factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance;
    use crate::spin::{energy, BiasVector};

    fn probe(h: f64) -> ProbeSpec {
        ProbeSpec::full(instance::probe(), h).unwrap()
    }

    #[test]
    fn problem_text_round_trip() {
        let w = hebbian_learn(&instance::memories());
        let p = build_problem(&w, &ProbeSpec::full(instance::probe(), 0.5).unwrap()).unwrap();
        let back = IsingProblem::parse(&p.to_text()).unwrap();
        assert_eq!(back, p);
        assert!(matches!(IsingProblem::parse("h 0 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(IsingProblem::parse("n 2\n# c\nJ 0 2 1\n"), Err(Error::Parse { line: 3, .. })));
        assert!(IsingProblem::parse("n 2\nJ 1 1 1\n").is_err());
    }

    #[test]
    fn probe_validation() {
        let pat = SpinVector::ones(4);
        assert!(matches!(ProbeSpec::full(pat.clone(), -0.1), Err(Error::InvalidFieldStrength(_))));
        assert!(matches!(ProbeSpec::masked(pat.clone(), vec![], 1.0), Err(Error::EmptyMask)));
        assert!(matches!(ProbeSpec::masked(pat.clone(), vec![4], 1.0), Err(Error::SiteOutOfRange { .. })));
        let p = ProbeSpec::masked(pat, vec![2, 0, 2], 1.0).unwrap();
        assert_eq!(p.mask(), &[0, 2]);
    }

    #[test]
    fn zero_field_gives_memory_hamiltonian() {
        let w = hebbian_learn(&instance::memories());
        let prob = build_problem(&w, &probe(0.0)).unwrap();
        assert!(prob.fields().iter().all(|&h| h == 0.0));
        for m in instance::memories().iter() {
            let e = energy(&w, &BiasVector::zeros(16), m).unwrap();
            assert_eq!(prob.energy(m).unwrap(), e);
        }
    }

    #[test]
    fn fields_follow_probe() {
        let w = hebbian_learn(&instance::memories());
        let prob = build_problem(&w, &probe(0.5)).unwrap();
        for i in 0..16 {
            assert_eq!(prob.fields()[i], 0.5 * instance::probe().get(i) as f64);
        }
        let single = ProbeSpec::masked(SpinVector::ones(5), vec![0], 1.0).unwrap();
        let prob = build_problem(&WeightMatrix::zeros(5), &single).unwrap();
        assert_eq!(prob.fields(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(build_problem(&WeightMatrix::zeros(4), &single).is_err());
    }

    #[test]
    fn probe_shift_examples() {
        let set = instance::memories();
        let p1 = probe(1.0);
        assert_eq!(probe_energy_shift(&p1, &instance::probe()).unwrap(), -16.0);
        assert_eq!(probe_energy_shift(&p1, set.get(2)).unwrap(), -12.0);
        for h in [0.0, 0.3, 7.0] {
            assert_eq!(probe_energy_shift(&probe(h), set.get(1)).unwrap(), 0.0);
        }
        assert_eq!(spurious_flip_shift(&p1, set.get(2)).unwrap(), 12.0);
        assert_eq!(spurious_flip_shift(&p1, &instance::probe()).unwrap(), 16.0);
        for m in set.iter() {
            let a = probe_energy_shift(&probe(0.37), m).unwrap();
            let b = spurious_flip_shift(&probe(0.37), m).unwrap();
            assert_eq!(a + b, 0.0);
        }
    }

    #[test]
    fn h_max_reference_instance() {
        let set = instance::memories();
        assert!((h_max(&set, &probe(0.1), 2).unwrap() - 0.75).abs() < 1e-12);
        let s = h_max_summary(&set, &probe(0.1)).unwrap();
        assert_eq!(s.max, s.per_memory[2]);
        // Eq-7 evaluated for mu = 1 (d = 10): (1/40) * 6
        assert!((s.per_memory[0].unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn h_max_single_memory_half_distance() {
        let set = MemorySet::parse("++++++++\n").unwrap();
        let pr = ProbeSpec::full("++++----".parse().unwrap(), 0.1).unwrap();
        assert!((h_max(&set, &pr, 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn h_max_threshold_matches_brute_force_ordering() {
        let set = instance::memories();
        let w = hebbian_learn(&set);
        for mu in 0..3 {
            let bound = h_max(&set, &probe(0.1), mu).unwrap();
            for h in [bound - 1e-6, bound + 1e-6] {
                if h <= 0.0 {
                    continue;
                }
                let prob = build_problem(&w, &probe(h)).unwrap();
                let below = prob.energy(set.get(mu)).unwrap() < prob.energy(&instance::probe()).unwrap();
                assert_eq!(below, h < bound, "mu={mu} h={h}");
            }
        }
    }

    #[test]
    fn h_max_errors() {
        let set = MemorySet::parse("++++\n+++-\n").unwrap();
        let pr = ProbeSpec::full("+-++".parse().unwrap(), 0.1).unwrap();
        assert!(matches!(h_max(&set, &pr, 0), Err(Error::NotOrthogonal { .. })));
        let set = instance::memories();
        let at_mem = ProbeSpec::full(set.get(0).clone(), 0.1).unwrap();
        assert_eq!(h_max(&set, &at_mem, 0), Err(Error::AlreadyMemory));
        let partial = ProbeSpec::masked(instance::probe(), vec![0, 1], 0.1).unwrap();
        assert_eq!(h_max(&set, &partial, 0), Err(Error::PartialMask));
        assert!(matches!(h_max(&set, &probe(0.1), 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn h_max_generic_examples() {
        let set = instance::memories();
        let w = hebbian_learn(&set);
        assert!((h_max_generic(&w, &probe(0.1), set.get(2)).unwrap() - 0.75).abs() < 1e-12);
        let pat = SpinVector::ones(6);
        let target = pat.with_flips(&[3]);
        let pr = ProbeSpec::full(pat.clone(), 0.1).unwrap();
        assert_eq!(h_max_generic(&WeightMatrix::zeros(6), &pr, &target).unwrap(), 0.0);
        assert_eq!(h_max_generic(&WeightMatrix::zeros(6), &pr, &pat), Err(Error::AlreadyMemory));
    }

    #[test]
    fn energy_report_reference_instance() {
        let grid: Vec<f64> = (0..=48).map(|k| k as f64 / 32.0).collect();
        let rep = energy_report(&instance::memories(), &probe(0.0), &grid).unwrap();
        for v in &rep.rows[0].memories {
            assert!((v + 6.5).abs() < 1e-12);
        }
        // lines for xi^3 and the probe cross at 0.75 = 24/32
        let diff = |r: &EnergyRow| r.memories[2] - r.probe;
        for r in &rep.rows {
            if r.h > 0.0 && r.h < 0.75 {
                assert!(diff(r) < 0.0);
            } else if r.h > 0.75 {
                assert!(diff(r) > 0.0);
            }
        }
        assert!(diff(&rep.rows[24]).abs() < 1e-12);
        let expected_slopes = [-(16.0 - 20.0), -(16.0 - 16.0), -(16.0 - 4.0)];
        for (s, e) in rep.probe_slope.iter().zip(expected_slopes) {
            assert_eq!(*s, e);
        }
        let csv = rep.to_csv();
        assert!(csv.starts_with("h,E_probe,E_mem_1,E_mem_2,E_mem_3,E_flip_1,E_flip_2,E_flip_3\n"));
        assert_eq!(csv.lines().count(), 50);
    }

    #[test]
    fn quantization() {
        let mut p = IsingProblem::empty(2);
        p.set_coupling(0, 1, 3.0 / 16.0);
        p.fields_mut()[0] = 0.01;
        let q = quantize_hardware(&p).unwrap();
        assert_eq!(q.coupling(0, 1), 3.0 / 16.0);
        assert_eq!(q.fields()[0], 0.0078125);
        assert_eq!(quantize_hardware(&q).unwrap(), q);
        p.fields_mut()[1] = 3.0;
        assert!(quantize_hardware(&p).is_err());
        let (scaled, f) = rescale_to_range(&p);
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert!(quantize_hardware(&scaled).is_ok());
    }
}
