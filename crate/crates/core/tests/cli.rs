use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynares_core::synth;
use serde_json::Value;
use tempfile::TempDir;

fn dynares(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynares"))
        .args(args)
        .env_remove("DYNARES_OUT")
        .output()
        .expect("spawn dynares")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn planted_files(dir: &Path) -> (PathBuf, PathBuf) {
    let (g, truth) = synth::planted_overlap(12, 3, 0.7, 0.05, 1).unwrap();
    let mut edges = Vec::new();
    g.write_edge_list(&mut edges).unwrap();
    let mut cover = Vec::new();
    truth.write(g.node_ids(), &mut cover).unwrap();
    (
        write(dir, "planted.tsv", std::str::from_utf8(&edges).unwrap()),
        write(dir, "truth.txt", std::str::from_utf8(&cover).unwrap()),
    )
}

#[test]
fn train_smoke_writes_every_artifact() {
    let tmp = TempDir::new().unwrap();
    let edges = write(tmp.path(), "path.tsv", "0 1\n1 2\n2 3\n");
    let out = tmp.path().join("run");
    let o = dynares(&["train", "--edges", s(&edges), "--k", "1", "--depth", "1", "--epochs", "1", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "checkpoint.json",
        "affiliations.tsv",
        "cover.txt",
        "metrics.json",
        "train_log.jsonl",
        "manifest.json",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let tsv = fs::read_to_string(out.join("affiliations.tsv")).unwrap();
    assert!(tsv.starts_with("node\tk0\n"));
    assert_eq!(tsv.lines().count(), 5);
    let log = fs::read_to_string(out.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn replay_reproduces_affiliations_byte_for_byte() {
    let tmp = TempDir::new().unwrap();
    let (edges, truth) = planted_files(tmp.path());
    let first = tmp.path().join("first");
    let o = dynares(&[
        "train", "--edges", s(&edges), "--truth", s(&truth), "--k", "2", "--depth", "3", "--width", "8",
        "--epochs", "30", "--seed", "4", "--out", s(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let second = tmp.path().join("second");
    let o = dynares(&["replay", "--manifest", s(&first.join("manifest.json")), "--out", s(&second)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["affiliations.tsv", "cover.txt", "metrics.json", "checkpoint.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    assert!(json(&first.join("metrics.json"))["nmi"].is_number());

    fs::write(&edges, "0 1\n").unwrap();
    let o = dynares(&["replay", "--manifest", s(&first.join("manifest.json")), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    let (edges, _) = planted_files(tmp.path());
    let cfg = write(
        tmp.path(),
        "run.cfg",
        &format!("edges = {}\nk = 2\ndepth = 2\nwidth = 4\nepochs = 3\nseed = 1\n", edges.display()),
    );
    let out = tmp.path().join("cfg");
    let o = dynares(&["train", "--config", s(&cfg), "--epochs", "2", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let settings = &json(&out.join("manifest.json"))["settings"];
    assert_eq!(settings["depth"], 2);
    assert_eq!(settings["epochs"], 2);
    assert_eq!(fs::read_to_string(out.join("train_log.jsonl")).unwrap().lines().count(), 2);

    let bad = write(tmp.path(), "bad.cfg", "k = 2\ndeepth = 3\n");
    let o = dynares(&["train", "--config", s(&bad), "--edges", s(&edges), "--out", s(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn json_config_and_env_output_directory() {
    let tmp = TempDir::new().unwrap();
    let (edges, _) = planted_files(tmp.path());
    let cfg = write(
        tmp.path(),
        "run.json",
        &format!(r#"{{"edges": "{}", "k": 2, "depth": 2, "width": 4, "epochs": 2, "loss": "balanced"}}"#, edges.display()),
    );
    let out = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_dynares"))
        .args(["train", "--config", s(&cfg)])
        .env("DYNARES_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn input_errors_exit_with_one() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&dynares(&["train", "--k", "2", "--out", s(&out)])), 1);
    let missing = tmp.path().join("missing.tsv");
    assert_eq!(code(&dynares(&["train", "--edges", s(&missing), "--k", "2", "--out", s(&out)])), 1);
    let garbage = write(tmp.path(), "garbage.tsv", "0 1 2\nfoo\n");
    assert_eq!(code(&dynares(&["train", "--edges", s(&garbage), "--k", "2", "--out", s(&out)])), 1);
    let edges = write(tmp.path(), "e.tsv", "0 1\n");
    assert_eq!(code(&dynares(&["train", "--edges", s(&edges), "--k", "0", "--out", s(&out)])), 1);
    assert_eq!(code(&dynares(&["train", "--edges", s(&edges), "--k", "1", "--threshold", "0", "--out", s(&out)])), 1);
    assert_eq!(code(&dynares(&["train", "--no-such-flag"])), 1);
    assert_eq!(code(&dynares(&["--help"])), 0);
}

#[test]
fn divergence_exits_with_two() {
    let tmp = TempDir::new().unwrap();
    let (edges, _) = planted_files(tmp.path());
    let o = dynares(&[
        "train", "--edges", s(&edges), "--k", "2", "--lr", "1e300", "--epochs", "20", "--loss", "balanced",
        "--out", s(&tmp.path().join("o")),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gridsearch_writes_a_full_table() {
    let tmp = TempDir::new().unwrap();
    let (edges, truth) = planted_files(tmp.path());
    let out = tmp.path().join("grid");
    let o = dynares(&[
        "gridsearch", "--edges", s(&edges), "--truth", s(&truth), "--k", "2", "--depths", "2,3", "--widths", "8",
        "--thresholds", "0.3,0.5", "--restarts", "2", "--epochs", "10", "--workers", "2", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("depth,width,threshold,seed,metric,loss,wall_ms"));
    assert_eq!(lines.count(), 2 * 2 * 2);
    let best = json(&out.join("best.json"));
    assert_eq!(best["metric"], "nmi");
    assert_eq!(best["training_runs"], 4);
    assert!([2, 3].contains(&best["cell"]["depth"].as_u64().unwrap()));
    assert!(out.join("affiliations.tsv").exists());
}

#[test]
fn singleton_grid_has_one_training_row() {
    let tmp = TempDir::new().unwrap();
    let (edges, _) = planted_files(tmp.path());
    let out = tmp.path().join("grid");
    let o = dynares(&[
        "gridsearch", "--edges", s(&edges), "--k", "2", "--depths", "2", "--widths", "4", "--thresholds", "0.5",
        "--restarts", "1", "--epochs", "3", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("grid.csv")).unwrap().lines().count(), 2);
}

#[test]
fn eval_examples() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "path.tsv", "0 1\n1 2\n");
    let whole = write(tmp.path(), "whole.txt", "0 a\n1 a\n2 a\n");
    let pair = write(tmp.path(), "pair.txt", "0 a\n1 a\n");
    let out = tmp.path().join("e");

    let o = dynares(&["eval", "--edges", s(&path), "--cover", s(&whole), "--truth", s(&whole), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["coverage"], 1.0);
    assert_eq!(m["conductance"], 0.0);
    assert!((m["nmi"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let o = dynares(&["eval", "--edges", s(&path), "--cover", s(&pair), "--out", s(&out)]);
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((m["conductance"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    let file = json(&out.join("metrics.json"));
    for key in ["conductance", "coverage", "density", "clustering_coefficient"] {
        assert_eq!(m[key], file[key]);
    }
    assert_eq!(file["communities"][0]["cut_edges"], 1);

    let f = write(tmp.path(), "f.tsv", "node\tk0\n0\t0.9\n1\t0.8\n2\t0.1\n");
    let o = dynares(&["eval", "--edges", s(&path), "--affiliations", s(&f), "--threshold", "0.5", "--out", s(&out)]);
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(m["coverage"], 0.5);

    let stranger = write(tmp.path(), "stranger.txt", "0 a\n9 a\n");
    assert_eq!(code(&dynares(&["eval", "--edges", s(&path), "--cover", s(&stranger), "--out", s(&out)])), 1);
}

#[test]
fn heatmap_shapes() {
    let tmp = TempDir::new().unwrap();
    let mut tsv = String::from("node\tk0\tk1\tk2\n");
    for u in 0..9 {
        let row: Vec<String> = (0..3).map(|c| if c == u / 3 { "0.9".into() } else { format!("0.{}", u % 3) }).collect();
        tsv.push_str(&format!("n{u}\t{}\n", row.join("\t")));
    }
    let f = write(tmp.path(), "f.tsv", &tsv);
    let out = tmp.path().join("h");
    let nodes = (0..9).map(|u| format!("n{u}")).collect::<Vec<_>>().join(",");
    let o = dynares(&["heatmap", "--affiliations", s(&f), "--nodes", &nodes, "--threshold", "0.5", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.lines().all(|l| l.split(',').count() == 11));
    let row3: Vec<&str> = csv.lines().nth(4).unwrap().split(',').collect();
    assert_eq!(&row3[..2], &["n3", "k1"]);

    let o = dynares(&["heatmap", "--affiliations", s(&f), "--nodes", "n4", "--threshold", "0.5", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(out.join("heatmap.csv")).unwrap();
    let last = csv.lines().nth(1).unwrap();
    assert_eq!(last.split(',').nth(2).unwrap().parse::<f64>().unwrap(), 1.0);

    let o = dynares(&["heatmap", "--affiliations", s(&f), "--nodes", "nobody", "--threshold", "0.5", "--out", s(&out)]);
    assert_eq!(code(&o), 1);
}

#[test]
fn ttest_modes_agree() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let o = dynares(&["ttest", "--a", "1,1,50", "--b", "0,1,50", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["t"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert_eq!(r["significant"], true);
    assert_eq!(r, json(&out.join("ttest.json")));

    let a = write(tmp.path(), "a.txt", "0.61 0.58 0.66\n0.70 0.59\n");
    let b = write(tmp.path(), "b.txt", "0.41 0.48 0.39 0.52 0.45\n");
    let raw: Value = serde_json::from_slice(&dynares(&["ttest", "--a-file", s(&a), "--b-file", s(&b), "--out", s(&out)]).stdout).unwrap();
    let stats = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        format!("{m:?},{sd:?},{}", xs.len())
    };
    let ta = stats(&[0.61, 0.58, 0.66, 0.70, 0.59]);
    let tb = stats(&[0.41, 0.48, 0.39, 0.52, 0.45]);
    let triple: Value = serde_json::from_slice(&dynares(&["ttest", "--a", &ta, "--b", &tb, "--out", s(&out)]).stdout).unwrap();
    assert!((raw["t"].as_f64().unwrap() - triple["t"].as_f64().unwrap()).abs() < 1e-12);
    assert_eq!(raw["df"], triple["df"]);

    let same: Value = serde_json::from_slice(&dynares(&["ttest", "--a-file", s(&a), "--b-file", s(&a), "--out", s(&out)]).stdout).unwrap();
    assert_eq!(same["t"], 0.0);
    assert_eq!(same["significant"], false);
    assert_eq!(code(&dynares(&["ttest", "--a", "1,1,1", "--b", "0,1,5", "--out", s(&out)])), 1);
}

#[test]
fn facebook_sized_best_cell_trains() {
    let tmp = TempDir::new().unwrap();
    let g = synth::random_sparse(227, 6384, 348).unwrap();
    let mut text = Vec::new();
    g.write_edge_list(&mut text).unwrap();
    let edges = write(tmp.path(), "fb.tsv", std::str::from_utf8(&text).unwrap());
    let out = tmp.path().join("fb");
    let o = dynares(&[
        "train", "--edges", s(&edges), "--k", "14", "--depth", "7", "--threshold", "0.40", "--epochs", "5",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tsv = fs::read_to_string(out.join("affiliations.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 228);
    assert_eq!(tsv.lines().next().unwrap().split('\t').count(), 15);
    assert_eq!(json(&out.join("manifest.json"))["settings"]["threshold"], 0.4);
}
