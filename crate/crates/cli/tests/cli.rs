use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qamem_cli::config::Loaded;
use tempfile::TempDir;

fn qamem(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qamem")).current_dir(dir).args(args).output().expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL: &str = r#"
[memories]
patterns = ["++++++", "+++---"]

[probe]
pattern = "-+++++"
h = 0.3

[qa]
t_anneal = 40.0
steps = 2000
gap_grid = 41

[run]
shots = 100
"#;

#[test]
fn config_round_trips_through_toml() {
    let text = r#"
[memories]
patterns = ["++++", "++--"]

[probe]
pattern = "-+++"
h = 0.4
target = 0

[sweep]
majority_vote = true

[capacity]
c2 = [0.0, 0.01]
"#;
    let a = Loaded::from_str(text, None).unwrap();
    let b = Loaded::from_str(&a.config.to_toml(), None).unwrap();
    assert_eq!(a.config, b.config);
    let d = Loaded::defaults();
    assert_eq!(Loaded::from_str(&d.config.to_toml(), None).unwrap().config, d.config);
}

#[test]
fn recall_on_reference_instance() {
    let tmp = TempDir::new().unwrap();
    let o = qamem(tmp.path(), &["recall", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("a/recall.json"));
    assert_eq!(r["classification"], "unique-memory");
    assert_eq!(r["recalled_index"], 2);
    assert_eq!(r["h_bound"], 0.75);

    let o = qamem(tmp.path(), &["recall", "--h", "1.0", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&tmp.path().join("b/recall.json"))["classification"], "probe-overbias");
}

#[test]
fn annealer_size_cap_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let o = qamem(tmp.path(), &["recall", "--engine", "qa", "--out", "a"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = qamem(tmp.path(), &["qa-gap", "--out", "a"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn small_instance_runs_on_every_engine() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "small.toml", SMALL);
    for engine in ["oracle", "qa", "sa"] {
        let out = format!("out_{engine}");
        let o = qamem(tmp.path(), &["recall", "-c", &c, "--engine", engine, "--out", &out]);
        assert!(o.status.success(), "{engine}: {}", stderr(&o));
        let r = json(&tmp.path().join(&out).join("recall.json"));
        assert_eq!(r["target"], "++++++");
        assert!(r["success"].as_f64().unwrap() > 0.9, "{engine}: {r}");
    }
    let o = qamem(tmp.path(), &["qa-gap", "-c", &c, "--out", "gap"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gap = json(&tmp.path().join("gap/qa_gap.json"));
    assert!(gap["min_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn oracle_sweep_steps_down_at_the_bound() {
    let tmp = TempDir::new().unwrap();
    let o = qamem(tmp.path(), &["sweep-h", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(tmp.path().join("a/sweep_h.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["h", "success", "h_max", "outcome"]);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let h: f64 = rec[0].parse().unwrap();
        let success: f64 = rec[1].parse().unwrap();
        assert_eq!(&rec[2], "0.75");
        assert_eq!(success, if h < 0.75 { 1.0 } else { 0.0 }, "h = {h}");
        rows += 1;
    }
    assert_eq!(rows, 38);
}

#[test]
fn radius_reports_reference_distances() {
    let tmp = TempDir::new().unwrap();
    let o = qamem(tmp.path(), &["radius", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = &json(&tmp.path().join("a/radius.json"))["report"];
    assert_eq!((r["d_s"].as_u64(), r["d_b"].as_u64(), r["d_of_n"].as_u64()), (Some(2), Some(10), Some(8)));
    assert_eq!(r["condition_8_holds"], true);
}

#[test]
fn basin_verify_finds_violator_only_when_asked() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "b.toml", "[memories]\npatterns = [\"++++++++\", \"++++----\"]\n");
    let o = qamem(tmp.path(), &["basin-verify", "-c", &c, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(&tmp.path().join("a/basin_summary.json"))["failures"], 0);

    let o = qamem(tmp.path(), &["basin-verify", "-c", &c, "--include-violations", "--max-d", "2", "--out", "b"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let failures = fs::read_to_string(tmp.path().join("b/basin_failures.csv")).unwrap();
    assert!(failures.starts_with("probe,d_s,d_b,h,classification\n"));
    assert!(failures.contains("--++++++,2,6,"), "{failures}");
}

#[test]
fn capacity_tables() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "c.toml", "[capacity]\nn_max = 16\nmontecarlo = true\n\n[montecarlo]\nn = 8\np = [2]\ntrials = 20\n");
    let o = qamem(tmp.path(), &["capacity", "-c", &c, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tradeoff = fs::read_to_string(tmp.path().join("a/tradeoff.csv")).unwrap();
    assert_eq!(tradeoff.lines().nth(1), Some("0,0.25"));
    let mut rdr = csv::Reader::from_path(tmp.path().join("a/p_star.csv")).unwrap();
    for rec in rdr.records() {
        assert_eq!(&rec.unwrap()[4], "true");
    }
    assert_eq!(fs::read_to_string(tmp.path().join("a/montecarlo.csv")).unwrap().lines().count(), 2);
}

#[test]
fn montecarlo_writes_one_row_per_p() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "m.toml", "[montecarlo]\nn = 8\np = [2, 3]\ntrials = 50\n");
    let o = qamem(tmp.path(), &["montecarlo", "-c", &c, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("a/montecarlo.csv")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "N,p,t_frac,trials,successes,rate,predicted_bound,engine");
    assert_eq!(lines.len(), 3);
}

#[test]
fn embedding_on_perfect_cell_and_failure_code() {
    let tmp = TempDir::new().unwrap();
    let ok = config(
        tmp.path(),
        "ok.toml",
        "[memories]\npatterns = [\"++++\", \"++--\"]\n\n[probe]\npattern = \"-+++\"\n\n[embed]\ngraph = \"perfect\"\nm = 1\nsolve = true\n\n[run]\nshots = 20\n",
    );
    let o = qamem(tmp.path(), &["embed", "-c", &ok, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("a/embed.json"));
    assert_eq!(r["logical_spins"], 4);
    assert_eq!(r["matches_oracle"], true);
    assert!(fs::read_to_string(tmp.path().join("a/embedding.txt")).unwrap().contains("chain 3:"));

    // every qubit of the cells in column 0 of a 2 x 2 graph is dead, which
    // leaves too few lines for an 8-clique
    let dead: Vec<String> = (0..8).chain(16..24).map(|q| q.to_string()).collect();
    let dead = config(
        tmp.path(),
        "dead.toml",
        &format!(
            "[memories]\npatterns = [\"++++++++\", \"++++----\"]\n\n[probe]\npattern = \"-+++----\"\n\n[embed]\ngraph = \"perfect\"\nm = 2\ndead = [{}]\n",
            dead.join(", ")
        ),
    );
    let o = qamem(tmp.path(), &["embed", "-c", &dead, "--out", "b"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("no embedding found"), "{}", stderr(&o));

    // the same clique fits once the column is back
    let alive = config(
        tmp.path(),
        "alive.toml",
        "[memories]\npatterns = [\"++++++++\", \"++++----\"]\n\n[probe]\npattern = \"-+++----\"\n\n[embed]\ngraph = \"perfect\"\nm = 2\n",
    );
    let o = qamem(tmp.path(), &["embed", "-c", &alive, "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn two_spin_round_trip_matches_oracle() {
    let tmp = TempDir::new().unwrap();
    let c = config(
        tmp.path(),
        "two.toml",
        "[memories]\npatterns = [\"++\"]\n\n[probe]\npattern = \"-+\"\nh = 0.2\n\n[embed]\ngraph = \"perfect\"\nm = 1\nsolve = true\n\n[run]\nshots = 10\n",
    );
    let o = qamem(tmp.path(), &["embed", "-c", &c, "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("a/embed.json"));
    assert_eq!(r["logical_spins"], 2);
    assert_eq!(r["broken_chains"], 0);
    assert_eq!(r["matches_oracle"], true);
}

#[test]
fn annealer_sweep_follows_the_oracle_step() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "s.toml", "[sweep]\nstart = 0.125\nstop = 1.0\nstep = 0.125\n\n[run]\nshots = 40\n");
    let o = qamem(tmp.path(), &["sweep-h", "-c", &c, "--engine", "sa", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(tmp.path().join("a/sweep_h.csv")).unwrap();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let h: f64 = rec[0].parse().unwrap();
        let success: f64 = rec[1].parse().unwrap();
        if h < 0.75 {
            assert!(success >= 0.9, "h = {h}: {success}");
        } else if h > 0.75 {
            assert!(success <= 0.1, "h = {h}: {success}");
        }
        // at h = 0.75 the probe and the target are degenerate and either may win
    }
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "small.toml", SMALL);
    for out in ["x", "y"] {
        let o = qamem(tmp.path(), &["sweep-h", "-c", &c, "--engine", "sa", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
        let o = qamem(tmp.path(), &["recall", "-c", &c, "--engine", "qa", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["sweep_h.csv", "counts.csv", "recall.json"] {
        assert_eq!(fs::read(tmp.path().join("x").join(f)).unwrap(), fs::read(tmp.path().join("y").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn config_errors_name_the_line() {
    let tmp = TempDir::new().unwrap();
    let c = config(tmp.path(), "bad.toml", "[run]\nseed = 1\n\n[probe]\nh = 0.5\nbogus = 1\n");
    let o = qamem(tmp.path(), &["recall", "-c", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:6:"), "{}", stderr(&o));

    let c = config(tmp.path(), "neg.toml", "[probe]\n\nh = -1.0\n");
    let o = qamem(tmp.path(), &["recall", "-c", &c]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("neg.toml:3: probe.h"), "{}", stderr(&o));

    let c = config(tmp.path(), "mem.toml", "[memories]\npatterns = [\"+++\", \"+x+\"]\n");
    let o = qamem(tmp.path(), &["learn", "-c", &c]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = qamem(tmp.path(), &["learn", "-c", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}
