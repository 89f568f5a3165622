use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modehb::{EvaluationRecord, ObjectiveVector, UnitVector};
use modehb_cli::archive::{read_archive, write_archive, RunMetrics, Summary};
use modehb_cli::{cmd_report, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn modehb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modehb"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn config(benchmark: &str, optimizers: &[&str], seeds: &str, max_tae: u64, out: &str, workers: usize) -> String {
    let opts: Vec<String> = optimizers.iter().map(|o| format!("{{\"name\": \"{o}\"}}")).collect();
    format!(
        r#"{{
  "benchmark": {benchmark},
  "optimizers": [{}],
  "ladder": {{"b_min": 1, "b_max": 9, "eta": 3}},
  "seeds": {seeds},
  "stop": {{"max_tae": {max_tae}}},
  "output_dir": "{out}",
  "workers": {workers}
}}"#,
        opts.join(", ")
    )
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

const ZDT: &str = r#"{"name": "zdt1_mf", "dimension": 3}"#;

#[test]
fn run_fans_out_and_report_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let seeds = "[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]";
    let cfg = write_config(tmp.path(), "exp.json", &config(ZDT, &["modehb_nsga2", "random_search"], seeds, 40, "out", 4));
    let out = modehb(&["run", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("out");
    assert_eq!(files(&dir), vec!["runs", "summary.json"]);
    let runs = files(&dir.join("runs"));
    assert_eq!(runs.iter().filter(|f| f.ends_with(".csv")).count(), 20);
    assert_eq!(runs.iter().filter(|f| f.ends_with(".metrics.json")).count(), 20);
    for f in runs.iter().filter(|f| f.ends_with(".csv")) {
        assert_eq!(read_archive(&dir.join("runs").join(f)).unwrap().len(), 40);
    }
    let metrics: RunMetrics =
        serde_json::from_str(&fs::read_to_string(dir.join("runs/modehb_nsga2_seed3.metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics.metadata.seed, 3);
    assert_eq!(metrics.metadata.optimizer, "modehb_nsga2");
    assert_eq!(metrics.tae, 40);
    let summary: Summary = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.optimizers.len(), 2);
    assert!(summary.optimizers.iter().all(|o| o.runs == 10));

    let out = modehb(&["report", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = files(&dir.join("report"));
    for opt in ["modehb_nsga2", "random_search"] {
        for k in [1, 5, 9] {
            assert!(report.contains(&format!("attainment_{opt}_k{k}.csv")), "{report:?}");
        }
        assert!(report.contains(&format!("hv_{opt}.csv")));
        assert!(report.contains(&format!("log_hv_diff_{opt}.csv")));
    }
    let hv = fs::read_to_string(dir.join("report/hv_modehb_nsga2.csv")).unwrap();
    assert_eq!(hv.lines().count(), 101);
    assert!(hv.starts_with("time,seed_0,seed_1,"));
    let ranks = fs::read_to_string(dir.join("report/ranks.csv")).unwrap();
    for line in ranks.lines().skip(1) {
        let r: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert!((r.iter().sum::<f64>() - 3.0).abs() < 1e-9, "{line}");
    }

    let out = modehb(&["report", dir.to_str().unwrap(), "--attainment", "2,10"]);
    assert!(out.status.success());
    assert!(dir.join("report/attainment_random_search_k10.csv").exists());
    let out = modehb(&["report", dir.to_str().unwrap(), "--attainment", "11"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_and_parallel_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = r#"{"name": "toy_grid", "k": 5}"#;
    let opts = ["modehb_nsga2", "modehb_epsnet", "random_search"];
    let mut dirs = Vec::new();
    for (name, workers) in [("a", 1), ("b", 1), ("c", 6)] {
        let cfg = write_config(tmp.path(), &format!("{name}.json"), &config(toy, &opts, "[3, 1, 4]", 50, name, workers));
        let out = modehb(&["run", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        dirs.push(tmp.path().join(name).join("runs"));
    }
    let names = files(&dirs[0]);
    assert_eq!(names.len(), 18);
    for other in &dirs[1..] {
        assert_eq!(files(other), names);
        for f in &names {
            assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(other.join(f)).unwrap(), "{f}");
        }
    }
}

#[test]
fn rerun_replaces_previous_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "x.json", &config(ZDT, &["random_search"], "[0, 1]", 5, "out", 2));
    assert!(modehb(&["run", cfg.to_str().unwrap()]).status.success());
    let cfg = write_config(tmp.path(), "x.json", &config(ZDT, &["random_search"], "[7]", 5, "out", 2));
    assert!(modehb(&["run", cfg.to_str().unwrap()]).status.success());
    assert_eq!(
        files(&tmp.path().join("out/runs")),
        vec!["random_search_seed7.csv", "random_search_seed7.metrics.json"]
    );
}

#[test]
fn config_errors_exit_2_without_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        config(r#"{"name": "nas_bench"}"#, &["random_search"], "[0]", 5, "out", 1),
        config(ZDT, &["random_search"], "[0, 0]", 5, "out", 1),
        config(ZDT, &["random_search"], "[]", 5, "out", 1),
        config(ZDT, &["hyperopt"], "[0]", 5, "out", 1),
        "{ not json".to_string(),
    ];
    for body in cases {
        let cfg = write_config(tmp.path(), "bad.json", &body);
        let out = modehb(&["run", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"), "{body}");
        assert!(!tmp.path().join("out").exists());
    }
    assert_eq!(modehb(&["run", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(modehb(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(modehb(&["report", tmp.path().to_str().unwrap()]).status.code(), Some(2));
    assert!(matches!(cmd_report(tmp.path(), None), Err(modehb_cli::CliError::NoRuns(_))));
}

#[test]
fn bench_oracle_prints_ground_truth() {
    let out = modehb(&["bench-oracle", "toy_grid", "k=4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cells = text.lines().skip_while(|l| *l != "i,j,f1,f2").skip(1).take_while(|l| !l.starts_with('#'));
    assert_eq!(cells.count(), 16);
    let hv: f64 = text.lines().find_map(|l| l.strip_prefix("hv ")).unwrap().parse().unwrap();
    let exact: f64 = text.lines().find_map(|l| l.strip_prefix("true_front_hv ")).unwrap().parse().unwrap();
    assert_eq!(hv, exact);

    for (name, expected) in [("zdt1_mf", 2.0 / 3.0), ("zdt2_mf", 1.0 / 3.0)] {
        let out = modehb(&["bench-oracle", name]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let hv: f64 = text.lines().find_map(|l| l.strip_prefix("hv ")).unwrap().parse().unwrap();
        assert!((hv - expected).abs() < 1e-4, "{name}: {hv}");
    }
    assert_eq!(modehb(&["bench-oracle", "dtlz2"]).status.code(), Some(2));
    assert_eq!(modehb(&["bench-oracle", "toy_grid", "k=99"]).status.code(), Some(2));
}

#[test]
fn archives_round_trip_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let special = [0.1 + 0.2, 1.0 / 3.0, 5e-324, 1e-300, 0.0, 1.0, f64::EPSILON, 123456789.12345679];
    let mut records = Vec::new();
    for seq in 1..=200u64 {
        let pick = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.2) {
                special[rng.random_range(0..special.len())]
            } else {
                rng.random::<f64>() * 10f64.powi(rng.random_range(-8..8))
            }
        };
        let genotype: Vec<f64> = (0..4).map(|_| pick(&mut rng).fract()).collect();
        records.push(EvaluationRecord {
            seq,
            genotype: UnitVector::new(genotype).unwrap(),
            fidelity: pick(&mut rng),
            objectives: ObjectiveVector::new(vec![pick(&mut rng), -pick(&mut rng)]).unwrap(),
            cost: pick(&mut rng),
        });
    }
    let path = tmp.path().join("a.csv");
    write_archive(&path, &records).unwrap();
    let back = read_archive(&path).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.seq, b.seq);
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        for (x, y) in a.objectives.values().iter().zip(b.objectives.values()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.genotype.coords().iter().zip(b.genotype.coords()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    let header = fs::read_to_string(&path).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "seq,fidelity,cost_seconds,cumulative_cost,objective_1,objective_2,genotype_1,genotype_2,genotype_3,genotype_4"
    );
}

#[test]
fn config_round_trips_through_json() {
    let text = config(ZDT, &["modehb_epsnet"], "[1]", 9, "o", 1);
    let parsed = ExperimentConfig::parse(&text, "t").unwrap();
    let again = ExperimentConfig::parse(&serde_json::to_string(&parsed).unwrap(), "t").unwrap();
    assert_eq!(parsed, again);
}
