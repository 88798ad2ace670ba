//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line
//! before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable summary.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use qamem::attraction::{radius_bound, verify_basin_exhaustive, VerifyOptions};
use qamem::capacity::{exponential_capacity, monte_carlo_success, p_star_ratio, tail_rate, tradeoff, McEngine};
use qamem::chimera::{clique_in_window, default_chain_strength, embed_clique, embed_problem, decode, ChimeraGraph};
use qamem::ising::{h_max, h_max_generic};
use qamem::oracle::{nearest_memory, DEFAULT_TIE_TOL};
use qamem::quantum::{evolve, min_gap, AnnealSchedule};
use qamem::sa::{sa_sample, SASchedule, DEFAULT_RESTARTS};
use qamem::{
    build_problem, classify_recall, ground_set, hebbian_learn, instance, Classification, IsingProblem, MemorySet,
    ProbeSpec, SpinVector,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: impl AsRef<str>) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} {}", detail.as_ref());
    assert!(ok, "criterion {criterion} failed: {}", detail.as_ref());
}

fn random_memories(rng: &mut ChaCha8Rng, n: usize, p: usize) -> MemorySet {
    let mut mems = Vec::new();
    while mems.len() < p {
        let m = SpinVector::new((0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).unwrap();
        if !mems.contains(&m) {
            mems.push(m);
        }
    }
    MemorySet::new(mems).unwrap()
}

#[test]
fn criterion_01_h_max_reproduction() {
    let memories = instance::memories();
    let probe = ProbeSpec::full(instance::probe(), 0.0).unwrap();
    let start = Instant::now();
    let v = h_max(&memories, &probe, 2).unwrap();
    let elapsed = start.elapsed();
    let ok = (v - 0.75).abs() <= 1e-12 && elapsed < Duration::from_millis(1);
    report(1, ok, format!("h_max(mu=3) = {v} in {elapsed:?}"));
}

#[test]
fn criterion_02_oracle_recall_window() {
    let memories = instance::memories();
    let w = hebbian_learn(&memories);
    let mut ok = true;
    let mut detail = Vec::new();
    let mut slowest = Duration::ZERO;
    for (h, expect_recall) in
        [(0.125, true), (0.25, true), (0.5, true), (0.7, true), (0.8, false), (1.0, false), (1.2, false)]
    {
        let probe = ProbeSpec::full(instance::probe(), h).unwrap();
        let start = Instant::now();
        let ground = ground_set(&build_problem(&w, &probe).unwrap(), DEFAULT_TIE_TOL).unwrap();
        slowest = slowest.max(start.elapsed());
        let outcome = classify_recall(&ground, &memories, &probe).unwrap();
        let good = if expect_recall {
            outcome.classification == Classification::UniqueMemory && outcome.recalled_index == Some(2)
        } else {
            outcome.classification == Classification::ProbeOverbias
        };
        ok &= good;
        detail.push(format!("h={h}:{}", outcome.classification));
    }
    ok &= slowest < Duration::from_secs(5);
    report(2, ok, format!("{} (slowest {slowest:?})", detail.join(" ")));
}

#[test]
fn criterion_03_closed_form_energies() {
    let memories = instance::memories();
    let w = hebbian_learn(&memories);
    let mem: Vec<f64> = memories.iter().map(|m| w.quadratic_form(m).unwrap()).collect();
    let chi = w.quadratic_form(&instance::probe()).unwrap();
    let ok = mem.iter().all(|&q| (q - 6.5).abs() <= 1e-12) && (chi - 3.5).abs() <= 1e-12;
    report(3, ok, format!("memories {mem:?}, probe {chi}"));
}

#[test]
fn criterion_04_tail_bound_grid() {
    let start = Instant::now();
    let mut checked = 0;
    let mut violations = Vec::new();
    for n in (2..=64).step_by(2) {
        for x in 0..=n / 2 {
            let (num, den) = p_star_ratio(n, x).unwrap();
            let (nf, xf) = (n as f64, x as f64);
            let bound = 1.0 - 0.5 * (-(xf * xf) / (nf / 2.0 + xf)).exp();
            // exact >= bound  <=>  num >= bound * den, compared on scaled integers
            let scaled_bound = num_bigint::BigUint::from((bound * (1u64 << 52) as f64).ceil() as u64);
            let lhs = num << 52usize;
            let rhs = scaled_bound * den;
            if lhs < rhs {
                violations.push((n, x));
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = violations.is_empty() && elapsed < Duration::from_secs(10);
    report(4, ok, format!("{checked} (N, x) pairs, violations {violations:?}, {elapsed:?}"));
}

#[test]
fn criterion_05_exhaustive_basin() {
    let memories = MemorySet::parse("++++++++++++\n++++++------\n").unwrap();
    assert!(memories.is_orthogonal());
    let start = Instant::now();
    let v = verify_basin_exhaustive(&memories, radius_bound(12).unwrap(), &VerifyOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let ok = v.failures.is_empty() && v.checked > 0 && elapsed < Duration::from_secs(600);
    report(
        5,
        ok,
        format!(
            "{} probes recalled, {} failures, {} ties, {} outside the distance condition, {elapsed:?}",
            v.checked - v.failures.len(),
            v.failures.len(),
            v.ties.len(),
            v.skipped_condition
        ),
    );
}

#[test]
fn criterion_06_flip_symmetric_ground_set() {
    let memories = instance::memories();
    let w = hebbian_learn(&memories);
    let probe = ProbeSpec::full(instance::probe(), 0.0).unwrap();
    let ground = ground_set(&build_problem(&w, &probe).unwrap(), 0.0).unwrap();
    let expected: BTreeSet<SpinVector> = memories.iter().flat_map(|m| [m.clone(), m.flipped()]).collect();
    let found: BTreeSet<SpinVector> = ground.states.iter().cloned().collect();
    report(6, found == expected, format!("{} ground states at E = {}", found.len(), ground.energy));
}

fn qa_instance(memories: &str, probe: &str) -> (IsingProblem, SpinVector) {
    let set = MemorySet::parse(memories).unwrap();
    let w = hebbian_learn(&set);
    let pr = ProbeSpec::full(probe.parse().unwrap(), 0.0).unwrap();
    let nearest = nearest_memory(&set, &pr).unwrap().unwrap();
    let h = match h_max_generic(&w, &pr, set.get(nearest)) {
        Ok(b) => 0.5 * b,
        // probe equals the memory: any positive field recalls it
        Err(_) => 0.25,
    };
    (build_problem(&w, &pr.with_h(h).unwrap()).unwrap(), set.get(nearest).clone())
}

#[test]
fn criterion_07_adiabatic_convergence() {
    let ladder: Vec<f64> = (0..8).map(|k| 5.0 * 2f64.powi(k)).collect();
    let mut ok = true;
    let mut detail = Vec::new();
    for (mems, probe) in [("++\n", "++"), ("++++++\n+++---\n", "-+++++"), ("++++++\n+++---\n", "+-+++-")] {
        let start = Instant::now();
        let (problem, target) = qa_instance(mems, probe);
        let (gap, _) = min_gap(&problem, &AnnealSchedule::linear(1.0).unwrap(), 200).unwrap();
        let mut probs = Vec::new();
        let mut drift: f64 = 0.0;
        for &t in &ladder {
            let steps = ((20.0 * t) as usize).max(2000);
            let r = evolve(&problem, &AnnealSchedule::linear(t).unwrap(), steps).unwrap();
            drift = drift.max(r.norm_drift);
            probs.push(r.success_probability(&target));
        }
        let monotone = probs.windows(2).all(|w| w[1] >= w[0] - 1e-3);
        let top = *probs.last().unwrap();
        let elapsed = start.elapsed();
        ok &= gap > 0.0 && monotone && top >= 0.95 && drift < 1e-8 && elapsed < Duration::from_secs(120);
        detail.push(format!("N={} gap={gap:.3} P_top={top:.6} drift={drift:.1e}", problem.n()));
    }
    report(7, ok, detail.join("; "));
}

#[test]
fn criterion_08_sa_matches_oracle() {
    let schedule = SASchedule::default();
    let mut agree = 0;
    let mut hard = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut instances = 0;
    while instances < 50 {
        let p = rng.gen_range(1..=4);
        let memories = random_memories(&mut rng, 16, p);
        let d = rng.gen_range(1..=radius_bound(16).unwrap());
        let flips = sample(&mut rng, 16, d).into_vec();
        let probe = ProbeSpec::full(memories.get(0).with_flips(&flips), 0.0).unwrap();
        let w = hebbian_learn(&memories);
        let Some(nearest) = nearest_memory(&memories, &probe).unwrap() else { continue };
        let Ok(bound) = h_max_generic(&w, &probe, memories.get(nearest)) else { continue };
        if bound <= 0.0 {
            continue;
        }
        let problem = build_problem(&w, &probe.with_h(0.5 * bound).unwrap()).unwrap();
        let ground = ground_set(&problem, DEFAULT_TIE_TOL).unwrap();
        let sa = sa_sample(&problem, &schedule, DEFAULT_RESTARTS, instances as u64).unwrap();
        if (sa.best_energy - ground.energy).abs() <= 1e-9 {
            agree += 1;
        } else {
            hard.push(format!("p={p} probe={} sa={} oracle={}", probe.pattern(), sa.best_energy, ground.energy));
        }
        instances += 1;
    }
    for h in &hard {
        println!("  hard instance: {h}");
    }
    report(8, agree >= 48, format!("{agree}/50 instances at the oracle ground energy"));
}

#[test]
fn criterion_09_monte_carlo_capacity() {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for p in [2, 3, 4] {
        let r = monte_carlo_success(12, p, 0.25, 2000, 9, &McEngine::Oracle).unwrap();
        ok &= !r.significantly_below();
        detail.push(format!("p={p}: rate {:.4} vs bound {:.4}", r.rate, r.predicted_lower_bound));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(900);
    report(9, ok, format!("{} ({elapsed:?})", detail.join("; ")));
}

#[test]
fn criterion_10_embedding_round_trip() {
    let small = ChimeraGraph::perfect(1).unwrap();
    let wide = ChimeraGraph::perfect(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ok = true;
    let mut cases = 0;
    let mut max_chain = 0;
    for n in 1..=4 {
        for layout in 0..2 {
            for _ in 0..5 {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        edges.push((i, j, rng.gen_range(-1.0..1.0)));
                    }
                }
                let fields = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let logical = IsingProblem::from_edges(n, &edges, fields).unwrap();
                let (graph, emb) = if layout == 0 {
                    (&small, embed_clique(n, &small, 1.0).unwrap())
                } else {
                    (&wide, clique_in_window(n, &wide, (0, 0), 3, 1.0).unwrap())
                };
                let emb = emb.with_chain_strength(default_chain_strength(&logical, emb.max_chain_length())).unwrap();
                max_chain = max_chain.max(emb.max_chain_length());
                let physical = embed_problem(&logical, &emb, graph.graph()).unwrap();
                let lg = ground_set(&logical, DEFAULT_TIE_TOL).unwrap();
                let pg = ground_set(&physical, DEFAULT_TIE_TOL).unwrap();
                let mut decoded = BTreeSet::new();
                for s in &pg.states {
                    let (l, broken) = decode(s, &emb).unwrap();
                    ok &= broken == 0;
                    decoded.insert(l);
                }
                ok &= decoded == lg.states.iter().cloned().collect::<BTreeSet<_>>();
                cases += 1;
            }
        }
    }
    ok &= max_chain <= 4;
    report(10, ok, format!("{cases} logical problems, chains up to {max_chain}"));
}

#[test]
fn criterion_11_tradeoff_identity() {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let t = 0.01 + 0.48 * i as f64 / 49.0;
        let rate = tail_rate(t).unwrap();
        for j in 0..=20 {
            let c2 = rate * (j as f64 / 20.0);
            let e = exponential_capacity(16, t, c2).unwrap();
            worst = worst.max((e.c1 + e.c2 - tradeoff(0.5 - t).unwrap()).abs());
        }
    }
    report(11, worst <= 1e-12, format!("max |C1 + C2 - tradeoff| = {worst:e}"));
}
