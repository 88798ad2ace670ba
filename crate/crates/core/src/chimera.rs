//! Chimera hardware graphs and clique minor embeddings.
//!
//! Qubit `((r * m + c) * 2 + u) * 4 + k` sits in cell `(r, c)`, shore `u`,
//! line `k`. Shore 0 is vertical and couples to the same line one row down;
//! shore 1 is horizontal and couples one column right. Within a cell the two
//! shores form a complete bipartite `K_{4,4}`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ising::IsingProblem;
use crate::spin::SpinVector;

/// Undirected graph over physical qubits `0..n`; dead qubits have no edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhysicalGraph {
    adjacency: Vec<BTreeSet<usize>>,
    dead: BTreeSet<usize>,
}

impl PhysicalGraph {
    pub fn from_edges(n: usize, edges: &[(usize, usize)], dead: &BTreeSet<usize>) -> Result<Self> {
        if let Some(&d) = dead.iter().find(|&&d| d >= n) {
            return Err(Error::QubitOutOfRange { id: d, size: n });
        }
        let mut adjacency = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::QubitOutOfRange { id: a.max(b), size: n });
            }
            if a == b || dead.contains(&a) || dead.contains(&b) {
                continue;
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        Ok(Self { adjacency, dead: dead.clone() })
    }

    /// All-to-all graph, under which every clique embeds trivially.
    pub fn complete(n: usize) -> Self {
        let adjacency = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        Self { adjacency, dead: BTreeSet::new() }
    }

    /// Total qubit slots, dead ones included.
    pub fn size(&self) -> usize {
        self.adjacency.len()
    }

    pub fn node_count(&self) -> usize {
        self.size() - self.dead.len()
    }

    pub fn is_alive(&self, q: usize) -> bool {
        q < self.size() && !self.dead.contains(&q)
    }

    pub fn dead(&self) -> &BTreeSet<usize> {
        &self.dead
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|s| s.contains(&b))
    }

    pub fn neighbours(&self, q: usize) -> &BTreeSet<usize> {
        &self.adjacency[q]
    }

    /// Edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.range(a + 1..).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChimeraGraph {
    m: usize,
    graph: PhysicalGraph,
}

/// Cells per side of the processor modelled here.
pub const DW2_CELLS: usize = 8;
/// Dead qubits in that model, leaving 476 usable.
pub const DW2_DEAD: usize = 36;
const DW2_SEED: u64 = 0x0D07_A476;

impl ChimeraGraph {
    pub fn new(m: usize, missing: &BTreeSet<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("chimera grid needs m >= 1".into()));
        }
        let mut edges = Vec::new();
        for r in 0..m {
            for c in 0..m {
                for k in 0..4 {
                    for k2 in 0..4 {
                        edges.push((qubit_id(m, r, c, 0, k), qubit_id(m, r, c, 1, k2)));
                    }
                    if r + 1 < m {
                        edges.push((qubit_id(m, r, c, 0, k), qubit_id(m, r + 1, c, 0, k)));
                    }
                    if c + 1 < m {
                        edges.push((qubit_id(m, r, c, 1, k), qubit_id(m, r, c + 1, 1, k)));
                    }
                }
            }
        }
        Ok(Self { m, graph: PhysicalGraph::from_edges(8 * m * m, &edges, missing)? })
    }

    pub fn perfect(m: usize) -> Result<Self> {
        Self::new(m, &BTreeSet::new())
    }

    /// `m x m` cells with `dead` qubits removed, chosen by a seeded draw.
    pub fn with_random_defects(m: usize, dead: usize, seed: u64) -> Result<Self> {
        let size = 8 * m * m;
        if dead > size {
            return Err(Error::InvalidArgument(format!("cannot remove {dead} of {size} qubits")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let missing = sample(&mut rng, size, dead).into_iter().collect();
        Self::new(m, &missing)
    }

    /// An 8 x 8 processor with 36 dead qubits at fixed positions.
    pub fn dw2_like() -> Self {
        Self::with_random_defects(DW2_CELLS, DW2_DEAD, DW2_SEED).expect("valid parameters")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn graph(&self) -> &PhysicalGraph {
        &self.graph
    }

    pub fn missing(&self) -> &BTreeSet<usize> {
        self.graph.dead()
    }

    pub fn qubit(&self, r: usize, c: usize, u: usize, k: usize) -> usize {
        qubit_id(self.m, r, c, u, k)
    }

    /// `(r, c, u, k)` of a qubit id.
    pub fn coordinates(&self, id: usize) -> (usize, usize, usize, usize) {
        let k = id % 4;
        let u = (id / 4) % 2;
        let cell = id / 8;
        (cell / self.m, cell % self.m, u, k)
    }

    /// Text form: a `chimera m=<m>` header, `dead <id>` lines, then one
    /// `<a> <b>` line per coupler.
    pub fn to_text(&self) -> String {
        let mut out = format!("chimera m={}\n", self.m);
        for d in self.missing() {
            let _ = writeln!(out, "dead {d}");
        }
        for (a, b) in self.graph.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Parses [`ChimeraGraph::to_text`]. Edge lines are optional but, when
    /// present, must match the generated couplers exactly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut m = None;
        let mut dead = BTreeSet::new();
        let mut edges = BTreeSet::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("chimera") {
                let v = rest.trim().strip_prefix("m=").ok_or_else(|| err("expected `chimera m=<m>`".into()))?;
                m = Some(v.trim().parse::<usize>().map_err(|e| err(format!("bad grid size: {e}")))?);
                continue;
            }
            if m.is_none() {
                return Err(err("expected a `chimera m=<m>` header first".into()));
            }
            if let Some(rest) = line.strip_prefix("dead") {
                dead.insert(rest.trim().parse::<usize>().map_err(|e| err(format!("bad qubit id: {e}")))?);
                continue;
            }
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|e| err(format!("bad qubit id {t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if ids.len() != 2 {
                return Err(err(format!("unrecognised line {line:?}")));
            }
            edges.insert((ids[0].min(ids[1]), ids[0].max(ids[1])));
        }
        let m = m.ok_or(Error::Parse { line: 0, message: "missing `chimera m=<m>` header".into() })?;
        let g = Self::new(m, &dead)?;
        if !edges.is_empty() && edges != g.graph.edges().into_iter().collect::<BTreeSet<_>>() {
            return Err(Error::Parse { line: 0, message: "edge list does not match the chimera layout".into() });
        }
        Ok(g)
    }
}

fn qubit_id(m: usize, r: usize, c: usize, u: usize, k: usize) -> usize {
    ((r * m + c) * 2 + u) * 4 + k
}

/// Chains of physical qubits, one per logical spin.
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
    chain_strength: f64,
    physical: Vec<usize>,
}

impl Embedding {
    /// Chains are sorted internally; they must be non-empty and disjoint.
    pub fn new(mut chains: Vec<Vec<usize>>, chain_strength: f64) -> Result<Self> {
        if !(chain_strength.is_finite() && chain_strength > 0.0) {
            return Err(Error::InvalidEmbedding(format!("chain strength must be positive, got {chain_strength}")));
        }
        let mut physical = Vec::new();
        for (i, c) in chains.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidEmbedding(format!("chain {i} is empty")));
            }
            c.sort_unstable();
            c.dedup();
            physical.extend_from_slice(c);
        }
        physical.sort_unstable();
        let total = physical.len();
        physical.dedup();
        if physical.len() != total {
            return Err(Error::InvalidEmbedding("chains overlap".into()));
        }
        Ok(Self { chains, chain_strength, physical })
    }

    /// Every logical spin on its own qubit.
    pub fn identity(n: usize, chain_strength: f64) -> Result<Self> {
        Self::new((0..n).map(|i| vec![i]).collect(), chain_strength)
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, logical: usize) -> &[usize] {
        &self.chains[logical]
    }

    pub fn logical_count(&self) -> usize {
        self.chains.len()
    }

    pub fn chain_strength(&self) -> f64 {
        self.chain_strength
    }

    pub fn with_chain_strength(&self, chain_strength: f64) -> Result<Self> {
        Self::new(self.chains.clone(), chain_strength)
    }

    /// Physical qubit ids in use, ascending. The embedded problem indexes
    /// its spins by position in this list.
    pub fn physical_qubits(&self) -> &[usize] {
        &self.physical
    }

    pub fn physical_count(&self) -> usize {
        self.physical.len()
    }

    pub fn max_chain_length(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn chain_lengths(&self) -> Vec<usize> {
        self.chains.iter().map(Vec::len).collect()
    }

    fn compact(&self, q: usize) -> usize {
        self.physical.binary_search(&q).expect("qubit belongs to a chain")
    }

    /// Checks the embedding against `graph`: live qubits, connected chains,
    /// and a physical edge for every logical pair with nonzero coupling in
    /// `problem` (every pair when `problem` is `None`).
    pub fn validate(&self, graph: &PhysicalGraph, problem: Option<&IsingProblem>) -> Result<()> {
        for (i, chain) in self.chains.iter().enumerate() {
            if let Some(&q) = chain.iter().find(|&&q| !graph.is_alive(q)) {
                return Err(Error::InvalidEmbedding(format!("chain {i} uses unavailable qubit {q}")));
            }
            if !is_connected(graph, chain) {
                return Err(Error::InvalidEmbedding(format!("chain {i} is not connected")));
            }
        }
        if let Some(p) = problem {
            if p.n() != self.logical_count() {
                return Err(Error::DimensionMismatch { expected: self.logical_count(), found: p.n() });
            }
        }
        for i in 0..self.logical_count() {
            for j in i + 1..self.logical_count() {
                let needed = problem.is_none_or(|p| p.coupling(i, j) != 0.0);
                if needed && self.inter_chain_edges(graph, i, j).is_empty() {
                    return Err(Error::InvalidEmbedding(format!("no coupler between chains {i} and {j}")));
                }
            }
        }
        Ok(())
    }

    fn inter_chain_edges(&self, graph: &PhysicalGraph, i: usize, j: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &a in &self.chains[i] {
            for &b in &self.chains[j] {
                if graph.has_edge(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Lines of the form `chain <logical>: <id>,<id>,...`, preceded by a
    /// `chain_strength <J_F>` line.
    pub fn to_text(&self) -> String {
        let mut out = format!("chain_strength {}\n", self.chain_strength);
        for (i, c) in self.chains.iter().enumerate() {
            let ids: Vec<String> = c.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "chain {i}: {}", ids.join(","));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut strength = None;
        let mut chains: Vec<Option<Vec<usize>>> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let err = |message: String| Error::Parse { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("chain_strength") {
                strength = Some(v.trim().parse::<f64>().map_err(|e| err(format!("bad chain strength: {e}")))?);
            } else if let Some(rest) = line.strip_prefix("chain") {
                let (idx, ids) = rest.split_once(':').ok_or_else(|| err("expected `chain <i>: <ids>`".into()))?;
                let idx = idx.trim().parse::<usize>().map_err(|e| err(format!("bad logical index: {e}")))?;
                let ids = ids
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| err(format!("bad qubit id {t:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?;
                if chains.len() <= idx {
                    chains.resize(idx + 1, None);
                }
                if chains[idx].replace(ids).is_some() {
                    return Err(err(format!("chain {idx} given twice")));
                }
            } else {
                return Err(err(format!("unrecognised line {line:?}")));
            }
        }
        let chains = chains
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or(Error::InvalidEmbedding(format!("chain {i} missing"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(chains, strength.unwrap_or(1.0))
    }
}

fn is_connected(graph: &PhysicalGraph, chain: &[usize]) -> bool {
    let members: BTreeSet<usize> = chain.iter().copied().collect();
    let mut seen = BTreeSet::from([chain[0]]);
    let mut queue = VecDeque::from([chain[0]]);
    while let Some(q) = queue.pop_front() {
        for &nb in graph.neighbours(q) {
            if members.contains(&nb) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    seen.len() == members.len()
}

/// `2 * max|J| * longest chain`. A problem without couplings is scaled by its
/// largest field instead, and an empty one gets 1.
pub fn default_chain_strength(problem: &IsingProblem, max_chain_length: usize) -> f64 {
    let scale = match problem.max_abs_coupling() {
        j if j > 0.0 => j,
        _ => problem.max_abs_field(),
    };
    let s = 2.0 * scale * max_chain_length.max(1) as f64;
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Placement of a `w x w` window: origin plus one of the eight symmetries
/// of the square.
#[derive(Clone, Copy)]
struct Window {
    r0: usize,
    c0: usize,
    w: usize,
    transpose: bool,
    flip_r: bool,
    flip_c: bool,
}

impl Window {
    /// Physical qubit for abstract cell `(i, j)`; `along_row` picks the
    /// shore whose couplers run along abstract rows.
    fn qubit(&self, g: &ChimeraGraph, i: usize, j: usize, along_row: bool, k: usize) -> usize {
        let (i, j) = (if self.flip_r { self.w - 1 - i } else { i }, if self.flip_c { self.w - 1 - j } else { j });
        let (r, c, u) = if self.transpose { (j, i, !along_row) } else { (i, j, along_row) };
        g.qubit(self.r0 + r, self.c0 + c, usize::from(u), k)
    }
}

/// Diagonal clique layout within a window.
///
/// Block `a` owns the row lines of abstract row `a` up to column `a` and the
/// column lines of abstract column `a` from row `a` down; chains meet in
/// cell `(a, a)`. Lines with a dead qubit are skipped, so a block may host
/// fewer than four spins.
fn window_chains(g: &ChimeraGraph, win: &Window, n: usize) -> Vec<Vec<usize>> {
    let graph = g.graph();
    let w = win.w;
    let mut chains = Vec::new();
    for a in 0..w {
        let along_row: Vec<Vec<usize>> = (0..4)
            .map(|k| (0..=a).map(|j| win.qubit(g, a, j, true, k)).collect::<Vec<_>>())
            .filter(|line| line.iter().all(|&q| graph.is_alive(q)))
            .collect();
        let along_col: Vec<Vec<usize>> = (0..4)
            .map(|k| (a..w).map(|i| win.qubit(g, i, a, false, k)).collect::<Vec<_>>())
            .filter(|line| line.iter().all(|&q| graph.is_alive(q)))
            .collect();
        for (h, v) in along_row.into_iter().zip(along_col) {
            if chains.len() == n {
                return chains;
            }
            chains.push(h.into_iter().chain(v).collect());
        }
    }
    chains
}

/// Clique layout in the `w x w` window at cell `(r0, c0)` without
/// reflections. Chains have length `w + 1`.
pub fn clique_in_window(
    n: usize,
    graph: &ChimeraGraph,
    (r0, c0): (usize, usize),
    w: usize,
    chain_strength: f64,
) -> Result<Embedding> {
    if w == 0 || r0 + w > graph.m() || c0 + w > graph.m() {
        return Err(Error::InvalidArgument(format!("window at ({r0}, {c0}) of width {w} leaves the grid")));
    }
    let win = Window { r0, c0, w, transpose: false, flip_r: false, flip_c: false };
    let chains = window_chains(graph, &win, n);
    if chains.len() < n {
        return Err(Error::EmbeddingNotFound { logical: chains.len() });
    }
    let e = Embedding::new(chains, chain_strength)?;
    e.validate(graph.graph(), None)?;
    Ok(e)
}

/// Embeds a complete graph on `n` logical spins. Windows and their
/// reflections are tried from the smallest width up; at the first width
/// that places every spin, the layout with the fewest qubits wins.
pub fn embed_clique(n: usize, graph: &ChimeraGraph, chain_strength: f64) -> Result<Embedding> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot embed an empty clique".into()));
    }
    let m = graph.m();
    let mut best_partial = 0;
    for w in n.div_ceil(4).min(m)..=m {
        let mut best: Option<Vec<Vec<usize>>> = None;
        for r0 in 0..=m - w {
            for c0 in 0..=m - w {
                for sym in 0..8u8 {
                    let win =
                        Window { r0, c0, w, transpose: sym & 1 != 0, flip_r: sym & 2 != 0, flip_c: sym & 4 != 0 };
                    let chains = window_chains(graph, &win, n);
                    best_partial = best_partial.max(chains.len());
                    if chains.len() == n {
                        let size = |cs: &Vec<Vec<usize>>| cs.iter().map(Vec::len).sum::<usize>();
                        if best.as_ref().is_none_or(|b| size(&chains) < size(b)) {
                            best = Some(chains);
                        }
                    }
                }
            }
        }
        if let Some(chains) = best {
            let e = Embedding::new(chains, chain_strength)?;
            e.validate(graph.graph(), None)?;
            return Ok(e);
        }
    }
    Err(Error::EmbeddingNotFound { logical: best_partial })
}

/// Physical problem over [`Embedding::physical_qubits`]: `+J_F` on every
/// coupler inside a chain, each logical coupling split equally over the
/// couplers between its two chains, each field split equally over its chain.
pub fn embed_problem(problem: &IsingProblem, embedding: &Embedding, graph: &PhysicalGraph) -> Result<IsingProblem> {
    embedding.validate(graph, Some(problem))?;
    let mut phys = IsingProblem::empty(embedding.physical_count());
    let jf = embedding.chain_strength();
    for (i, chain) in embedding.chains().iter().enumerate() {
        let share = problem.fields()[i] / chain.len() as f64;
        for (a_pos, &a) in chain.iter().enumerate() {
            let ca = embedding.compact(a);
            phys.fields_mut()[ca] = share;
            for &b in &chain[a_pos + 1..] {
                if graph.has_edge(a, b) {
                    phys.set_coupling(ca, embedding.compact(b), jf);
                }
            }
        }
    }
    for (i, j, v) in problem.edges() {
        let edges = embedding.inter_chain_edges(graph, i, j);
        let share = v / edges.len() as f64;
        for (a, b) in edges {
            phys.set_coupling(embedding.compact(a), embedding.compact(b), share);
        }
    }
    Ok(phys)
}

/// Majority vote per chain, ties going to `+1`, and the number of chains
/// whose qubits disagree.
pub fn decode(sample: &SpinVector, embedding: &Embedding) -> Result<(SpinVector, usize)> {
    if sample.len() != embedding.physical_count() {
        return Err(Error::DimensionMismatch { expected: embedding.physical_count(), found: sample.len() });
    }
    let mut broken = 0;
    let spins = embedding
        .chains()
        .iter()
        .map(|chain| {
            let sum: i64 = chain.iter().map(|&q| sample.get(embedding.compact(q)) as i64).sum();
            if sum.unsigned_abs() as usize != chain.len() {
                broken += 1;
            }
            if sum >= 0 {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok((SpinVector::new(spins)?, broken))
}

/// `J'_ij = g_i g_j J_ij`, `h'_i = g_i h_i`; `E'(g s) = E(s)`.
pub fn gauge_transform(problem: &IsingProblem, gauge: &SpinVector) -> Result<IsingProblem> {
    if gauge.len() != problem.n() {
        return Err(Error::DimensionMismatch { expected: problem.n(), found: gauge.len() });
    }
    let mut out = IsingProblem::empty(problem.n());
    for (i, j, v) in problem.edges() {
        out.set_coupling(i, j, (gauge.get(i) * gauge.get(j)) as f64 * v);
    }
    for (i, (h, g)) in problem.fields().iter().zip(gauge.iter()).enumerate() {
        out.fields_mut()[i] = g as f64 * h;
    }
    Ok(out)
}

/// Applies a gauge to a state: `s_i -> g_i s_i`.
pub fn gauge_state(state: &SpinVector, gauge: &SpinVector) -> Result<SpinVector> {
    if gauge.len() != state.len() {
        return Err(Error::DimensionMismatch { expected: state.len(), found: gauge.len() });
    }
    SpinVector::new(state.iter().zip(gauge.iter()).map(|(s, g)| s * g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ground_set, DEFAULT_TIE_TOL};

    #[test]
    fn graph_counts() {
        let g1 = ChimeraGraph::perfect(1).unwrap();
        assert_eq!((g1.graph().node_count(), g1.graph().edge_count()), (8, 16));
        let g2 = ChimeraGraph::perfect(2).unwrap();
        assert_eq!((g2.graph().node_count(), g2.graph().edge_count()), (32, 80));
        let dw = ChimeraGraph::dw2_like();
        assert_eq!(dw.graph().node_count(), 476);
        assert_eq!(dw.missing().len(), 36);
        assert!(ChimeraGraph::new(1, &BTreeSet::from([8])).is_err());
        assert!(ChimeraGraph::perfect(0).is_err());
    }

    #[test]
    fn coupler_layout() {
        let g = ChimeraGraph::perfect(2).unwrap();
        let gr = g.graph();
        assert!(gr.has_edge(g.qubit(0, 0, 0, 2), g.qubit(1, 0, 0, 2)));
        assert!(gr.has_edge(g.qubit(0, 0, 1, 3), g.qubit(0, 1, 1, 3)));
        assert!(!gr.has_edge(g.qubit(0, 0, 0, 2), g.qubit(0, 1, 0, 2)));
        assert!(!gr.has_edge(g.qubit(0, 0, 0, 0), g.qubit(0, 0, 0, 1)));
        assert_eq!(g.coordinates(g.qubit(1, 0, 1, 2)), (1, 0, 1, 2));
    }

    #[test]
    fn dead_qubits_lose_edges() {
        let g = ChimeraGraph::new(1, &BTreeSet::from([0])).unwrap();
        assert_eq!(g.graph().node_count(), 7);
        assert_eq!(g.graph().edge_count(), 12);
    }

    #[test]
    fn graph_text_round_trip() {
        let g = ChimeraGraph::with_random_defects(3, 5, 9).unwrap();
        assert_eq!(ChimeraGraph::parse(&g.to_text()).unwrap(), g);
        assert_eq!(ChimeraGraph::parse("chimera m=2\ndead 3\n").unwrap().missing().len(), 1);
        assert!(ChimeraGraph::parse("chimera m=1\n0 1\n").is_err());
        assert!(ChimeraGraph::parse("dead 1\n").is_err());
    }

    #[test]
    fn clique_on_single_cell() {
        let g = ChimeraGraph::perfect(1).unwrap();
        let e = embed_clique(4, &g, 1.0).unwrap();
        assert_eq!(e.chain_lengths(), vec![2; 4]);
        e.validate(g.graph(), None).unwrap();
        assert!(matches!(embed_clique(5, &g, 1.0), Err(Error::EmbeddingNotFound { logical: 4 })));
    }

    #[test]
    fn clique_chain_lengths() {
        let g = ChimeraGraph::perfect(4).unwrap();
        let e = embed_clique(16, &g, 1.0).unwrap();
        assert_eq!(e.max_chain_length(), 5);
        assert_eq!(e.physical_count(), 80);
        e.validate(g.graph(), None).unwrap();
        assert!(embed_clique(17, &g, 1.0).is_err());
    }

    #[test]
    fn clique_on_defective_graph() {
        let g = ChimeraGraph::dw2_like();
        let e = embed_clique(16, &g, 1.0).unwrap();
        e.validate(g.graph(), None).unwrap();
        assert!(e.chains().iter().flatten().all(|&q| g.graph().is_alive(q)));
        assert_eq!((e.physical_count(), e.max_chain_length()), (80, 5));
        embed_clique(20, &g, 1.0).unwrap().validate(g.graph(), None).unwrap();
        assert!(matches!(embed_clique(21, &g, 1.0), Err(Error::EmbeddingNotFound { logical: 20 })));
    }

    #[test]
    fn window_layout() {
        let g = ChimeraGraph::perfect(3).unwrap();
        let e = clique_in_window(4, &g, (0, 0), 3, 1.0).unwrap();
        assert_eq!(e.chain_lengths(), vec![4; 4]);
        let e = clique_in_window(9, &g, (0, 0), 3, 1.0).unwrap();
        assert_eq!(e.max_chain_length(), 4);
        assert!(clique_in_window(13, &g, (0, 0), 3, 1.0).is_err());
        assert!(clique_in_window(2, &g, (1, 1), 3, 1.0).is_err());
    }

    #[test]
    fn validator_rejects_bad_embeddings() {
        let g = ChimeraGraph::perfect(1).unwrap();
        assert!(Embedding::new(vec![vec![0, 1], vec![1]], 1.0).is_err());
        // two vertical qubits of one cell are not adjacent
        let e = Embedding::new(vec![vec![0, 1]], 1.0).unwrap();
        assert!(e.validate(g.graph(), None).is_err());
        // vertical-vertical pair has no coupler
        let e = Embedding::new(vec![vec![0], vec![1]], 1.0).unwrap();
        assert!(e.validate(g.graph(), None).is_err());
        let dead = ChimeraGraph::new(1, &BTreeSet::from([4])).unwrap();
        let e = Embedding::new(vec![vec![0, 4]], 1.0).unwrap();
        assert!(e.validate(dead.graph(), None).is_err());
    }

    #[test]
    fn identity_embedding_is_transparent() {
        let p = IsingProblem::from_edges(3, &[(0, 1, 0.5), (1, 2, -0.3)], vec![0.1, 0.0, -0.2]).unwrap();
        let e = Embedding::identity(3, 1.0).unwrap();
        let phys = embed_problem(&p, &e, &PhysicalGraph::complete(3)).unwrap();
        assert_eq!(phys, p);
    }

    #[test]
    fn field_split_over_chain() {
        let g = ChimeraGraph::perfect(1).unwrap();
        let chain = vec![g.qubit(0, 0, 0, 0), g.qubit(0, 0, 1, 0), g.qubit(0, 0, 0, 1), g.qubit(0, 0, 1, 1)];
        let e = Embedding::new(vec![chain], 2.0).unwrap();
        let p = IsingProblem::from_edges(1, &[], vec![1.0]).unwrap();
        let phys = embed_problem(&p, &e, g.graph()).unwrap();
        assert_eq!(phys.fields(), &[0.25; 4]);
        assert_eq!(phys.edges().len(), 4);
        assert!(phys.edges().iter().all(|&(_, _, v)| v == 2.0));
    }

    #[test]
    fn two_spin_chains_reproduce_ground_states() {
        let g = ChimeraGraph::perfect(1).unwrap();
        let e = embed_clique(2, &g, 1.0).unwrap();
        for p in [
            IsingProblem::from_edges(2, &[(0, 1, -0.7)], vec![0.2, 0.0]).unwrap(),
            IsingProblem::from_edges(2, &[(0, 1, 0.4)], vec![0.0, -0.1]).unwrap(),
        ] {
            let e = e.with_chain_strength(default_chain_strength(&p, e.max_chain_length())).unwrap();
            let phys = embed_problem(&p, &e, g.graph()).unwrap();
            let logical = ground_set(&p, DEFAULT_TIE_TOL).unwrap();
            let physical = ground_set(&phys, DEFAULT_TIE_TOL).unwrap();
            let decoded: Vec<_> = physical.states.iter().map(|s| decode(s, &e).unwrap()).collect();
            assert!(decoded.iter().all(|(_, broken)| *broken == 0));
            let states: BTreeSet<_> = decoded.into_iter().map(|(s, _)| s).collect();
            assert_eq!(states, logical.states.iter().cloned().collect());
        }
    }

    #[test]
    fn decode_votes() {
        let e = Embedding::new(vec![vec![0, 1, 2], vec![3, 4, 5, 6], vec![7]], 1.0).unwrap();
        let s: SpinVector = "++-++--+".parse().unwrap();
        let (l, broken) = decode(&s, &e).unwrap();
        assert_eq!(l.to_string(), "+++");
        assert_eq!(broken, 2);
        let (l, broken) = decode(&"---++++-".parse().unwrap(), &e).unwrap();
        assert_eq!((l.to_string(), broken), ("-+-".to_string(), 0));
        assert!(decode(&SpinVector::ones(3), &e).is_err());
    }

    #[test]
    fn embedding_text_round_trip() {
        let g = ChimeraGraph::perfect(2).unwrap();
        let e = embed_clique(6, &g, 1.5).unwrap();
        let back = Embedding::parse(&e.to_text()).unwrap();
        assert_eq!(back, e);
        assert!(Embedding::parse("chain 1: 3\n").is_err());
    }

    #[test]
    fn gauge_preserves_spectrum() {
        let p = IsingProblem::from_edges(3, &[(0, 1, 0.5), (0, 2, -1.0), (1, 2, 0.25)], vec![0.3, -0.1, 0.0]).unwrap();
        assert_eq!(gauge_transform(&p, &SpinVector::ones(3)).unwrap(), p);
        let g: SpinVector = "+--".parse().unwrap();
        let q = gauge_transform(&p, &g).unwrap();
        for idx in 0..8 {
            let s = SpinVector::from_index(3, idx);
            let gs = gauge_state(&s, &g).unwrap();
            assert!((p.energy(&s).unwrap() - q.energy(&gs).unwrap()).abs() < 1e-12);
        }
    }
}
