use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use blip_core::blip::{run_blip, BlipOptions};
use blip_core::groups::{default_regression_groups, RegressionGroupConfig};
use blip_core::io;
use blip_core::pips::{pips_from_samples, SampleSet};
use blip_core::samplers::{lss_gibbs, LssConfig};
use blip_core::{CandidateGroup, ErrorRateSpec, WeightFn};
use tempfile::TempDir;

fn blip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blip")).args(args).env("BLIP_THREADS", "2").output().expect("spawn blip")
}

fn ok(args: &[&str]) -> Output {
    let out = blip(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

fn group_line(ix: &[u32], pip: f64) -> String {
    let mut g = CandidateGroup::from_indices(ix.iter().copied()).unwrap();
    g.pip = Some(pip);
    serde_json::to_string(&g).unwrap()
}

#[test]
fn contiguous_group_count() {
    let d = TempDir::new().unwrap();
    let out = p(&d, "g.jsonl");
    ok(&["groups", "contiguous", "--locations", "1..100", "--max-size", "25", "--out", s(&out)]);
    assert_eq!(lines(&out).len(), 25 * 100 - (0..25).sum::<usize>());
    let code = blip(&["groups", "contiguous", "--locations", "1..5", "--p", "5"]).status.code();
    assert_eq!(code, Some(2));
}

#[test]
fn lattice_family_file() {
    let d = TempDir::new().unwrap();
    let out = p(&d, "lattice.json");
    ok(&["groups", "lattice", "--radii-log", "0.0005:0.01:25", "--dim", "2", "--out", s(&out)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let radii = v["radii"].as_array().unwrap();
    assert_eq!(radii.len(), 25);
    assert!((radii[0].as_f64().unwrap() - 0.0005).abs() < 1e-15);
    assert!((radii[24].as_f64().unwrap() - 0.01).abs() < 1e-15);

    let samples = p(&d, "points.jsonl");
    fs::write(&samples, "{\"chain\":0,\"points\":[[0.5,0.5]]}\n{\"chain\":0,\"points\":[[0.52,0.5]]}\n").unwrap();
    let (groups, pips) = (p(&d, "lg.jsonl"), p(&d, "lp.jsonl"));
    ok(&["pips", "--samples", s(&samples), "--lattice", s(&out), "--out-groups", s(&groups), "--out", s(&pips)]);
    assert_eq!(lines(&groups).len(), lines(&pips).len());
    assert!(!lines(&pips).is_empty());
}

#[test]
fn empty_samples_give_empty_groups() {
    let d = TempDir::new().unwrap();
    let (samples, out) = (p(&d, "empty.jsonl"), p(&d, "g.jsonl"));
    fs::write(&samples, "").unwrap();
    ok(&["groups", "default-regression", "--samples", s(&samples), "--out", s(&out)]);
    assert!(lines(&out).is_empty());
}

#[test]
fn susie_pips_and_usage_errors() {
    let d = TempDir::new().unwrap();
    let (alphas, groups, out) = (p(&d, "a.csv"), p(&d, "g.jsonl"), p(&d, "p.jsonl"));
    fs::write(&alphas, "0.5,0.5,0,0\n".repeat(4)).unwrap();
    ok(&["groups", "contiguous", "--p", "4", "--max-size", "1", "--out", s(&groups)]);
    ok(&["pips", "--susie-alphas", s(&alphas), "--groups", s(&groups), "--out", s(&out)]);
    let table = io::read_pips(fs::File::open(&out).map(std::io::BufReader::new).unwrap()).unwrap();
    let g0 = CandidateGroup::from_indices([0]).unwrap();
    assert_eq!(table.get(g0.id), Some(0.9375));

    let both = blip(&["pips", "--susie-alphas", s(&alphas), "--samples", s(&alphas), "--groups", s(&groups)]);
    assert_eq!(both.status.code(), Some(2));
    let missing = blip(&["pips", "--susie-alphas", s(&alphas), "--groups", s(&p(&d, "nope.jsonl"))]);
    assert_eq!(missing.status.code(), Some(2));
    fs::write(p(&d, "bad.csv"), "0.5,0.6\n").unwrap();
    let bad = blip(&["pips", "--susie-alphas", s(&p(&d, "bad.csv")), "--groups", s(&groups)]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn sample_pips_match_the_library() {
    let d = TempDir::new().unwrap();
    let (samples, groups, out) = (p(&d, "s.jsonl"), p(&d, "g.jsonl"), p(&d, "p.jsonl"));
    let header = serde_json::json!({ "space": blip_core::LocationSpace::discrete(4).unwrap() });
    fs::write(&samples, format!("{header}\n") + "{\"chain\":0,\"signals\":[1,2]}\n{\"chain\":1,\"signals\":[2]}\n{\"chain\":1,\"signals\":[]}\n").unwrap();
    ok(&["groups", "contiguous", "--p", "4", "--max-size", "2", "--out", s(&groups)]);
    ok(&["pips", "--samples", s(&samples), "--groups", s(&groups), "--out", s(&out)]);
    let SampleSet::Discrete(sm) = io::read_samples(&fs::read(&samples).unwrap()[..], None).unwrap() else { panic!() };
    let gs = io::read_groups(&fs::read(&groups).unwrap()[..]).unwrap();
    let mut want = Vec::new();
    io::write_pips(&mut want, &pips_from_samples(&sm, &gs).unwrap()).unwrap();
    assert_eq!(fs::read(&out).unwrap(), want);
}

#[test]
fn worked_pfer_instance() {
    let d = TempDir::new().unwrap();
    let (groups, out) = (p(&d, "g.jsonl"), p(&d, "det.json"));
    fs::write(&groups, format!("{}\n{}\n", group_line(&[0], 0.8), group_line(&[0, 1], 0.9))).unwrap();
    ok(&["solve", "--groups", s(&groups), "--error", "pfer", "--v", "0.15", "--no-prefilter", "--out", s(&out)]);
    let r = io::read_detections(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(r.relaxed.len(), 2);
    assert!(r.relaxed.iter().all(|e| (e.x - 0.5).abs() < 1e-8));
    assert_eq!(r.discoveries.len(), 1);
    assert_eq!(r.discoveries[0].region, blip_core::Region::indices([0, 1]).unwrap());
    assert!((r.upper_bound - 0.625).abs() < 1e-8);
}

#[test]
fn local_fdr_with_flat_pips_is_empty() {
    let d = TempDir::new().unwrap();
    let (groups, out) = (p(&d, "g.jsonl"), p(&d, "det.json"));
    let text: String = (0..5u32).map(|j| group_line(&[j], 0.5) + "\n").collect();
    fs::write(&groups, text).unwrap();
    ok(&["solve", "--groups", s(&groups), "--error", "local-fdr", "--q", "0.1", "--out", s(&out)]);
    assert!(io::read_detections(fs::File::open(&out).unwrap()).unwrap().discoveries.is_empty());
    let bad_q = blip(&["solve", "--groups", s(&groups), "--error", "fdr", "--q", "1.5"]);
    assert_eq!(bad_q.status.code(), Some(2));
    let no_q = blip(&["solve", "--groups", s(&groups), "--error", "fdr"]);
    assert_eq!(no_q.status.code(), Some(2));
}

fn write_data(d: &TempDir, n: &str, p_: &str, seed: &str) -> (PathBuf, PathBuf) {
    let (data, truth) = (p(d, "data.csv"), p(d, "truth.json"));
    ok(&["generate", "--n", n, "--p", p_, "--s", "0.1", "--seed", seed, "--out", s(&data), "--truth", s(&truth)]);
    (data, truth)
}

#[test]
fn sampler_record_count_and_reruns() {
    let d = TempDir::new().unwrap();
    let (data, _) = write_data(&d, "40", "10", "3");
    let (a, b) = (p(&d, "a.jsonl"), p(&d, "b.jsonl"));
    for out in [&a, &b] {
        ok(&["sample", "lss", "--data", s(&data), "--chains", "10", "--iters", "200", "--seed", "9", "--preset", "misspec", "--out", s(out)]);
    }
    // one header record plus the draws
    assert_eq!(lines(&a).len(), 1 + 10 * 180);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let bad = blip(&["sample", "lss", "--data", s(&data), "--iters", "10", "--burnin", "10"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_and_eval() {
    let d = TempDir::new().unwrap();
    let cfg = p(&d, "exp.toml");
    fs::write(
        &cfg,
        "seed = 1\nreplicates = 3\n[[scenario]]\nname = \"tiny\"\nn = 40\np = 12\ns = 0.1\nn_iter = 100\nchains = 1\nmethods = [\"blip\", \"singletons\"]\n",
    )
    .unwrap();
    let (a, b) = (p(&d, "a.csv"), p(&d, "b.csv"));
    ok(&["simulate", "--config", s(&cfg), "--no-runtime", "--out", s(&a)]);
    ok(&["simulate", "--config", s(&cfg), "--no-runtime", "--out", s(&b)]);
    let rows = lines(&a);
    assert_eq!(rows[0], "scenario,replicate,method,error,power,normalized_power,fdp,n_discoveries,runtime_ms");
    assert_eq!(rows.len(), 1 + 2 * 3);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let (groups, det, truth, ev) = (p(&d, "g.jsonl"), p(&d, "det.json"), p(&d, "t.json"), p(&d, "ev.csv"));
    fs::write(&groups, format!("{}\n{}\n", group_line(&[2], 0.99), group_line(&[5], 0.98))).unwrap();
    fs::write(&truth, "{\"indices\":[2,5]}").unwrap();
    ok(&["solve", "--groups", s(&groups), "--error", "fdr", "--q", "0.1", "--out", s(&det)]);
    ok(&["eval", "--detections", s(&det), "--truth", s(&truth), "--out", s(&ev)]);
    assert_eq!(lines(&ev), vec!["power,normalized_power,fdp,n_true,n_false", "2.0,1.0,0.0,2,0"]);
}

fn run_pipeline(d: &TempDir, tag: &str, data: &Path) -> Vec<Vec<u8>> {
    let f = |n: &str| p(d, &format!("{tag}_{n}"));
    let (samples, groups, pips, det) = (f("s.jsonl"), f("g.jsonl"), f("p.jsonl"), f("det.json"));
    ok(&["sample", "lss", "--data", s(data), "--chains", "2", "--iters", "300", "--seed", "5", "--out", s(&samples)]);
    ok(&["groups", "default-regression", "--samples", s(&samples), "--data", s(data), "--out", s(&groups)]);
    ok(&["pips", "--samples", s(&samples), "--groups", s(&groups), "--out", s(&pips)]);
    ok(&["solve", "--groups", s(&groups), "--pips", s(&pips), "--error", "fdr", "--q", "0.1", "--seed", "1", "--out", s(&det)]);
    [samples, groups, pips, det].iter().map(|x| fs::read(x).unwrap()).collect()
}

#[test]
fn pipeline_matches_library_and_reruns_identically() {
    let d = TempDir::new().unwrap();
    let (data, _) = write_data(&d, "20", "50", "8");
    let first = run_pipeline(&d, "a", &data);
    let second = run_pipeline(&d, "b", &data);
    assert_eq!(first, second);

    let (y, x) = io::read_regression_csv(fs::File::open(&data).unwrap()).unwrap();
    let cfg = LssConfig { n_iter: 300, burn_in: 30, chains: 2, seed: 5, ..LssConfig::misspecified() };
    let out = lss_gibbs(&x, &y, &cfg).unwrap();
    let mut groups = default_regression_groups(&out.samples, Some(&x), &RegressionGroupConfig::default()).unwrap();
    pips_from_samples(&out.samples, &groups).unwrap().apply(&mut groups, false).unwrap();
    let opts = BlipOptions { seed: 1, ..Default::default() };
    let det = run_blip(&groups, &WeightFn::InverseSize, &ErrorRateSpec::Fdr { q: 0.1 }, &opts).unwrap();
    let mut want = Vec::new();
    io::write_detections(&mut want, &det).unwrap();
    assert_eq!(first[3], want);
}
