//! One function per subcommand. Each reads a loaded configuration, writes
//! its artifacts under the output directory and returns the paths written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qamem::attraction::{basin_check, radius_bound, verify_basin_exhaustive, FieldPolicy, VerifyOptions};
use qamem::capacity::{
    capacity_bound, exponential_capacity, hebbian_classical_capacity, monte_carlo_success, p_star, tail_rate,
    tradeoff, MonteCarloResult,
};
use qamem::chimera::{decode, default_chain_strength, embed_clique, embed_problem};
use qamem::ising::{energy_report, h_max, h_max_generic};
use qamem::oracle::nearest_memory;
use qamem::quantum::{evolve, sample, spectrum_at};
use qamem::sa::sa_sample;
use qamem::{
    build_problem, classify_recall, ground_set, hebbian_learn, GroundSet, IsingProblem, MemorySet, ProbeSpec,
    SpinVector,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{EngineKind, Loaded};

/// Files produced by a command.
pub type Written = Vec<PathBuf>;

fn write(dir: &Path, name: &str, contents: &str, out: &mut Written) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    out.push(path);
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value, out: &mut Written) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text, out)
}

fn csv_text<I, R>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn out_dir(cfg: &Loaded) -> PathBuf {
    cfg.resolve(&cfg.config.output.dir)
}

/// Index of the memory that counts as a successful recall.
fn target_index(cfg: &Loaded, memories: &MemorySet, probe: &ProbeSpec) -> Result<usize> {
    if let Some(t) = cfg.config.probe.target {
        if t >= memories.len() {
            return Err(cfg.error_at("probe", "target", format!("memory {t} does not exist")).into());
        }
        return Ok(t);
    }
    nearest_memory(memories, probe)?.ok_or_else(|| {
        cfg.error_at("probe", "pattern", "probe is equidistant from several memories; set probe.target").into()
    })
}

/// Analytic field bound for the target: the closed form for orthogonal
/// memories under a full mask, the generic inequality otherwise.
fn field_bound(memories: &MemorySet, probe: &ProbeSpec, target: usize) -> Option<f64> {
    if memories.is_orthogonal() && probe.is_full() {
        h_max(memories, probe, target).ok()
    } else {
        h_max_generic(&hebbian_learn(memories), probe, memories.get(target)).ok()
    }
}

/// Result of one engine run at a fixed field.
enum Run {
    Exact(GroundSet),
    Sampled { counts: BTreeMap<SpinVector, usize>, shots: usize, extra: serde_json::Value },
}

impl Run {
    /// Fraction of shots on `target`, or 1/0 for the exact engine.
    fn success(&self, memories: &MemorySet, probe: &ProbeSpec, target: usize) -> Result<f64> {
        Ok(match self {
            Run::Exact(g) => {
                let o = classify_recall(g, memories, probe)?;
                f64::from(u8::from(o.recalled_index == Some(target)))
            }
            Run::Sampled { counts, shots, .. } => {
                counts.get(memories.get(target)).copied().unwrap_or(0) as f64 / *shots as f64
            }
        })
    }

    fn modal(&self) -> Option<&SpinVector> {
        match self {
            Run::Exact(_) => None,
            Run::Sampled { counts, .. } => counts.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(s, _)| s),
        }
    }
}

fn run_engine(cfg: &Loaded, kind: EngineKind, problem: &IsingProblem, seed: u64) -> Result<Run> {
    let c = &cfg.config;
    Ok(match kind {
        EngineKind::Oracle => Run::Exact(ground_set(problem, c.engine.tie_tol)?),
        EngineKind::Qa => {
            let result = evolve(problem, &cfg.anneal_schedule()?, c.qa.steps)?;
            let counts = sample(&result, c.run.shots, seed)?;
            let extra = json!({ "norm_drift": result.norm_drift, "steps": result.steps });
            Run::Sampled { counts, shots: c.run.shots, extra }
        }
        EngineKind::Sa => {
            let r = sa_sample(problem, &cfg.sa_schedule()?, c.run.shots, seed)?;
            let extra = json!({ "best_energy": r.best_energy, "acceptance_rate": r.acceptance_rate() });
            Run::Sampled { counts: r.counts, shots: c.run.shots, extra }
        }
    })
}

fn counts_csv(counts: &BTreeMap<SpinVector, usize>) -> Result<String> {
    let mut rows: Vec<_> = counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    csv_text(&["state", "count"], rows.into_iter().map(|(s, n)| [s.to_string(), n.to_string()]))
}

/// Hebbian weights as a headerless `N x N` CSV matrix.
pub fn learn(cfg: &Loaded) -> Result<Written> {
    let memories = cfg.memories()?;
    let w = hebbian_learn(&memories);
    let n = memories.n();
    let rows = (0..n).map(|i| w.row(i).iter().map(|v| v.to_string()).collect::<Vec<_>>());
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        wr.write_record(r)?;
    }
    let mut out = Vec::new();
    write(&out_dir(cfg), "weights.csv", &String::from_utf8(wr.into_inner()?)?, &mut out)?;
    println!("learned {} memories of {} spins (orthogonal: {})", memories.len(), n, memories.is_orthogonal());
    Ok(out)
}

/// Energies of the probe, memories and flipped memories over the sweep grid.
pub fn energy_report_cmd(cfg: &Loaded) -> Result<Written> {
    let memories = cfg.memories()?;
    let probe = cfg.probe(&memories)?;
    let report = energy_report(&memories, &probe, &cfg.config.sweep.grid())?;
    let mut out = Vec::new();
    write(&out_dir(cfg), "energy_report.csv", &report.to_csv(), &mut out)?;
    Ok(out)
}

pub fn recall(cfg: &Loaded, kind: EngineKind) -> Result<Written> {
    let memories = cfg.memories()?;
    let probe = cfg.probe(&memories)?;
    let target = target_index(cfg, &memories, &probe)?;
    let problem = build_problem(&hebbian_learn(&memories), &probe)?;
    let run = run_engine(cfg, kind, &problem, cfg.config.run.seed)?;
    let success = run.success(&memories, &probe, target)?;
    let dir = out_dir(cfg);
    let mut out = Vec::new();
    let mut report = json!({
        "engine": kind.as_str(),
        "n": memories.n(),
        "h": probe.h(),
        "probe": probe.pattern().to_string(),
        "target_index": target,
        "target": memories.get(target).to_string(),
        "h_bound": field_bound(&memories, &probe, target),
        "success": success,
    });
    match &run {
        Run::Exact(g) => {
            let o = classify_recall(g, &memories, &probe)?;
            report["classification"] = json!(o.classification);
            report["recalled_index"] = json!(o.recalled_index);
            report["ground_energy"] = json!(g.energy);
            report["ground_states"] = json!(g.states.iter().map(ToString::to_string).collect::<Vec<_>>());
            println!("{}: {}", kind.as_str(), o.classification);
        }
        Run::Sampled { counts, shots, extra } => {
            let modal = run.modal().expect("at least one shot");
            report["shots"] = json!(shots);
            report["modal"] = json!(modal.to_string());
            report["modal_index"] = json!(memories.position(modal));
            report["details"] = extra.clone();
            write(&dir, "counts.csv", &counts_csv(counts)?, &mut out)?;
            println!("{}: success probability {success}", kind.as_str());
        }
    }
    write_json(&dir, "recall.json", &report, &mut out)?;
    Ok(out)
}

pub fn sweep_h(cfg: &Loaded, kind: EngineKind) -> Result<Written> {
    let memories = cfg.memories()?;
    let probe = cfg.probe(&memories)?;
    let target = target_index(cfg, &memories, &probe)?;
    let w = hebbian_learn(&memories);
    let bound = field_bound(&memories, &probe, target);
    let grid = cfg.config.sweep.grid();
    let majority = cfg.config.sweep.majority_vote;
    let rows: Vec<[String; 4]> = grid
        .par_iter()
        .enumerate()
        .map(|(k, &h)| -> Result<[String; 4]> {
            let p = probe.with_h(h)?;
            let problem = build_problem(&w, &p)?;
            let run = run_engine(cfg, kind, &problem, cfg.config.run.seed.wrapping_add(k as u64))?;
            let mut success = run.success(&memories, &p, target)?;
            if majority {
                success = f64::from(u8::from(success > 0.5));
            }
            let outcome = match &run {
                Run::Exact(g) => classify_recall(g, &memories, &p)?.classification.to_string(),
                Run::Sampled { .. } => run.modal().map(ToString::to_string).unwrap_or_default(),
            };
            Ok([h.to_string(), success.to_string(), opt(bound), outcome])
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let text = csv_text(&["h", "success", "h_max", "outcome"], rows.into_iter().map(Vec::from))?;
    write(&out_dir(cfg), "sweep_h.csv", &text, &mut out)?;
    println!("swept {} field values with {}; analytic bound {}", grid.len(), kind.as_str(), opt(bound));
    Ok(out)
}

pub fn radius(cfg: &Loaded) -> Result<Written> {
    let memories = cfg.memories()?;
    let probe = cfg.probe(&memories)?;
    let report = basin_check(&memories, &probe)?;
    let n = memories.n();
    let nearest = nearest_memory(&memories, &probe)?;
    let value = json!({
        "report": report,
        "radius_bound_full": if n >= 2 { Some(radius_bound(n)?) } else { None },
        "nearest_index": nearest,
        "h_bound_nearest": nearest.and_then(|t| field_bound(&memories, &probe, t)),
    });
    let mut out = Vec::new();
    write_json(&out_dir(cfg), "radius.json", &value, &mut out)?;
    println!(
        "d_s = {}, d_b = {}, n = {}: condition {}",
        report.d_s,
        report.d_b,
        report.n,
        if report.condition_8_holds { "holds" } else { "fails" }
    );
    Ok(out)
}

pub fn basin_verify(cfg: &Loaded) -> Result<Written> {
    let memories = cfg.memories()?;
    let b = &cfg.config.basin;
    let max_d = match b.max_d {
        Some(d) => d,
        None => radius_bound(memories.n())?,
    };
    let options = VerifyOptions {
        field: b.h.map_or(FieldPolicy::default(), FieldPolicy::Fixed),
        require_condition_8: !b.include_violations,
        tie_tol: cfg.config.engine.tie_tol,
    };
    let v = verify_basin_exhaustive(&memories, max_d, &options)?;
    let dir = out_dir(cfg);
    let mut out = Vec::new();
    write(&dir, "basin_failures.csv", &v.failures_csv(), &mut out)?;
    let summary = json!({
        "max_d": max_d,
        "checked": v.checked,
        "failures": v.failures.len(),
        "ties": v.ties.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "skipped_condition": v.skipped_condition,
        "skipped_window": v.skipped_window,
    });
    write_json(&dir, "basin_summary.json", &summary, &mut out)?;
    println!("{} probes checked, {} failures, {} ties", v.checked, v.failures.len(), v.ties.len());
    Ok(out)
}

pub fn capacity(cfg: &Loaded) -> Result<Written> {
    let c = &cfg.config.capacity;
    let mut tail_rows = Vec::new();
    let mut all_hold = true;
    for n in (2..=c.n_max).step_by(2) {
        for x in 0..=n / 2 {
            let ps = p_star(n, x)?;
            let holds = ps.exact >= ps.bound;
            all_hold &= holds;
            let cap = capacity_bound(c.gamma, ps.exact).ok();
            tail_rows.push(vec![
                n.to_string(),
                x.to_string(),
                ps.exact.to_string(),
                ps.bound.to_string(),
                holds.to_string(),
                opt(cap),
            ]);
        }
    }
    let tradeoff_rows = (0..c.tradeoff_points)
        .map(|i| {
            let f = 0.5 * i as f64 / c.tradeoff_points as f64;
            Ok(vec![f.to_string(), tradeoff(f)?.to_string()])
        })
        .collect::<Result<Vec<_>>>()?;
    let rate = tail_rate(c.t_frac)?;
    let mut exp_rows = Vec::new();
    for &c2 in &c.c2 {
        if !(0.0..=rate).contains(&c2) {
            return Err(cfg.error_at("capacity", "c2", format!("C2 = {c2} lies outside [0, {rate}]")).into());
        }
        for n in (4..=c.n_max).step_by(4) {
            let e = exponential_capacity(n, c.t_frac, c2)?;
            exp_rows.push(vec![
                n.to_string(),
                c.t_frac.to_string(),
                c2.to_string(),
                e.c1.to_string(),
                e.approximate.to_string(),
                opt(e.unapproximated),
            ]);
        }
    }
    let hebb_rows = (3..=c.n_max.max(3))
        .map(|n| Ok(vec![n.to_string(), hebbian_classical_capacity(n)?.to_string()]))
        .collect::<Result<Vec<_>>>()?;
    let dir = out_dir(cfg);
    let mut out = Vec::new();
    write(
        &dir,
        "p_star.csv",
        &csv_text(&["N", "x", "exact", "bound", "exact_ge_bound", "capacity_bound"], tail_rows)?,
        &mut out,
    )?;
    write(&dir, "tradeoff.csv", &csv_text(&["f", "c1_plus_c2"], tradeoff_rows)?, &mut out)?;
    write(
        &dir,
        "exponential_capacity.csv",
        &csv_text(&["N", "t_frac", "C2", "C1", "approximate", "unapproximated"], exp_rows)?,
        &mut out,
    )?;
    write(&dir, "hebbian_capacity.csv", &csv_text(&["N", "capacity"], hebb_rows)?, &mut out)?;
    if c.montecarlo {
        write(&dir, "montecarlo.csv", &MonteCarloResult::to_csv(&montecarlo_block(cfg)?), &mut out)?;
    }
    println!("tail grid up to N = {}: exact >= bound on every row: {all_hold}", c.n_max);
    Ok(out)
}

fn montecarlo_block(cfg: &Loaded) -> Result<Vec<MonteCarloResult>> {
    let mc = &cfg.config.montecarlo;
    let engine = cfg.mc_engine()?;
    let results = mc
        .p
        .par_iter()
        .map(|&p| Ok(monte_carlo_success(mc.n, p, mc.t_frac, mc.trials, cfg.config.run.seed, &engine)?))
        .collect::<Result<Vec<_>>>()?;
    for r in &results {
        println!(
            "p = {}: rate {:.4} vs predicted {:.4}{}",
            r.p,
            r.rate,
            r.predicted_lower_bound,
            if r.significantly_below() { " (significantly below)" } else { "" }
        );
    }
    Ok(results)
}

pub fn montecarlo(cfg: &Loaded) -> Result<Written> {
    let results = montecarlo_block(cfg)?;
    let mut out = Vec::new();
    write(&out_dir(cfg), "montecarlo.csv", &MonteCarloResult::to_csv(&results), &mut out)?;
    Ok(out)
}

pub fn embed(cfg: &Loaded) -> Result<Written> {
    let e = &cfg.config.embed;
    let logical = match &e.problem_file {
        Some(p) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path)
                .map_err(|err| cfg.error_at("embed", "problem_file", format!("cannot read {}: {err}", path.display())))?;
            IsingProblem::parse(&text).map_err(|err| cfg.error_at("embed", "problem_file", err.to_string()))?
        }
        None => {
            let memories = cfg.memories()?;
            build_problem(&hebbian_learn(&memories), &cfg.probe(&memories)?)?
        }
    };
    let graph = cfg.graph()?;
    let layout = embed_clique(logical.n(), &graph, 1.0)?;
    let strength = e.chain_strength.unwrap_or_else(|| default_chain_strength(&logical, layout.max_chain_length()));
    let embedding = layout.with_chain_strength(strength)?;
    let physical = embed_problem(&logical, &embedding, graph.graph())?;
    let lengths = embedding.chain_lengths();
    let mut report = json!({
        "logical_spins": logical.n(),
        "graph_qubits": graph.graph().node_count(),
        "physical_qubits": embedding.physical_count(),
        "chain_lengths": lengths,
        "min_chain": lengths.iter().min(),
        "max_chain": lengths.iter().max(),
        "chain_strength": strength,
    });
    let dir = out_dir(cfg);
    let mut out = Vec::new();
    write(&dir, "embedding.txt", &embedding.to_text(), &mut out)?;
    write(&dir, "physical_problem.txt", &physical.to_text(), &mut out)?;
    if e.solve {
        let r = sa_sample(&physical, &cfg.sa_schedule()?, cfg.config.run.shots, cfg.config.run.seed)?;
        let mut counts = BTreeMap::new();
        let mut broken = 0;
        let mut best: Option<(f64, SpinVector)> = None;
        for (s, _) in &r.best_per_restart {
            let (l, b) = decode(s, &embedding)?;
            broken += b;
            let energy = logical.energy(&l)?;
            if best.as_ref().is_none_or(|(e0, _)| energy < *e0) {
                best = Some((energy, l.clone()));
            }
            *counts.entry(l).or_insert(0) += 1;
        }
        let (best_energy, best_state) = best.expect("at least one shot");
        report["broken_chains"] = json!(broken);
        report["best_decoded"] = json!(best_state.to_string());
        report["best_decoded_energy"] = json!(best_energy);
        if logical.n() <= qamem::oracle::MAX_SPINS {
            let g = ground_set(&logical, cfg.config.engine.tie_tol)?;
            report["matches_oracle"] = json!(g.contains(&best_state));
        }
        write(&dir, "decoded_counts.csv", &counts_csv(&counts)?, &mut out)?;
    }
    write_json(&dir, "embed.json", &report, &mut out)?;
    println!(
        "embedded {} logical spins on {} physical qubits (chains {}..{})",
        logical.n(),
        embedding.physical_count(),
        lengths.iter().min().unwrap_or(&0),
        lengths.iter().max().unwrap_or(&0)
    );
    Ok(out)
}

pub fn qa_gap(cfg: &Loaded) -> Result<Written> {
    let memories = cfg.memories()?;
    let probe = cfg.probe(&memories)?;
    let problem = build_problem(&hebbian_learn(&memories), &probe)?;
    let schedule = cfg.anneal_schedule()?;
    let grid = cfg.config.qa.gap_grid;
    let rows: Vec<(f64, f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / (grid - 1) as f64;
            let spec = spectrum_at(&problem, &schedule, s)?;
            Ok((s, spec[0], spec[1]))
        })
        .collect::<Result<_>>()?;
    let (gap, at) = rows
        .iter()
        .map(|&(s, e0, e1)| (e1 - e0, s))
        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
    let dir = out_dir(cfg);
    let mut out = Vec::new();
    let text = csv_text(
        &["s", "e0", "e1", "gap"],
        rows.iter().map(|&(s, e0, e1)| vec![s.to_string(), e0.to_string(), e1.to_string(), (e1 - e0).to_string()]),
    )?;
    write(&dir, "qa_gap.csv", &text, &mut out)?;
    write_json(&dir, "qa_gap.json", &json!({ "min_gap": gap, "at_s": at, "grid": grid }), &mut out)?;
    println!("minimum gap {gap} at s = {at}");
    Ok(out)
}
