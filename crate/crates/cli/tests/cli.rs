use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sketchvote::data::{save_embedding_set, save_sample_meta, EmbeddingSet, SAMPLE_META_FILE};
use sketchvote::synthetic::{colored_shapes, planted_classes, PlantedSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchvote"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON line")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn planted(dir: &Path) -> PathBuf {
    planted_with(dir, "raw", 0.1)
}

fn planted_with(dir: &Path, name: &str, junk_fraction: f64) -> PathBuf {
    let spec = PlantedSpec {
        junk_fraction,
        seed: 3,
        ..Default::default()
    };
    let (set, metas) = planted_classes(&spec).unwrap();
    let path = dir.join(name);
    save_embedding_set(&set, &path).unwrap();
    save_sample_meta(&metas, path.join(SAMPLE_META_FILE)).unwrap();
    path
}

#[test]
fn version_lists_formats() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("sketchvote 0.1.0"));
    assert!(text.contains("embedding-set format 1"));
}

#[test]
fn full_pipeline_reaches_high_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = planted(d);
    let clean = d.join("clean");
    let parts = d.join("parts");
    let balanced = d.join("balanced");
    let model = d.join("model");
    let preds = d.join("preds.csv");
    let report = d.join("acc.json");
    let confusion = d.join("confusion.csv");

    let c = ok(&["clean", s(&raw), s(&clean)]);
    assert!(c["rows_kept"].as_u64().unwrap() < 600);
    ok(&["split", s(&clean), s(&parts), "--seed", "3"]);
    ok(&[
        "rebalance",
        s(&parts),
        "--split",
        "train",
        s(&balanced),
        "--seed",
        "3",
    ]);
    ok(&[
        "fit",
        s(&balanced),
        s(&model),
        "--k-per-class",
        "3",
        "--seed",
        "3",
    ]);
    ok(&[
        "classify",
        s(&parts),
        "--split",
        "test",
        s(&model),
        s(&preds),
        "--k-neighbors",
        "9",
    ]);
    let e = ok(&[
        "evaluate",
        s(&preds),
        s(&parts),
        "--split",
        "test",
        s(&report),
        "--top-n",
        "1,5,10",
        "--confusion",
        s(&confusion),
    ]);
    assert_eq!(e["most_confused"].as_array().unwrap().len(), 5);

    let acc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let top = acc["top_n"].as_object().unwrap();
    assert_eq!(top.len(), 3);
    assert!(top["1"].as_f64().unwrap() >= 0.95);
    assert!(acc["samples"].as_u64().unwrap() > 0);

    let conf = std::fs::read_to_string(&confusion).unwrap();
    assert!(conf.starts_with("truth,class0,class1,"));
    assert!(conf.lines().next().unwrap().ends_with(",abstain"));

    for out in [&clean, &parts, &balanced, &model, &preds, &report] {
        let m = sketch_manifest(out);
        assert!(m.exists(), "missing manifest for {}", out.display());
    }
}

fn sketch_manifest(p: &Path) -> PathBuf {
    let mut name = p.file_name().unwrap().to_os_string();
    name.push(".manifest.json");
    p.with_file_name(name)
}

#[test]
fn replay_reproduces_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = planted(d);
    let model = d.join("model");
    let proj = d.join("proj.csv");
    ok(&["fit", s(&raw), s(&model), "--seed", "9"]);
    ok(&[
        "project",
        s(&raw),
        s(&proj),
        "--iters",
        "60",
        "--perplexity",
        "10",
        "--max-points",
        "120",
        "--seed",
        "4",
    ]);
    let before = [
        std::fs::read(model.join("centroids.f32")).unwrap(),
        std::fs::read(model.join("model.json")).unwrap(),
        std::fs::read(&proj).unwrap(),
    ];
    std::fs::remove_dir_all(&model).unwrap();
    std::fs::remove_file(&proj).unwrap();

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(sketch_manifest(&proj)).unwrap()).unwrap();
    assert_eq!(manifest["command"], "project");
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["parameters"]["perplexity"], 10.0);

    ok(&["replay", s(&sketch_manifest(&model))]);
    ok(&["replay", s(&sketch_manifest(&proj))]);
    let after = [
        std::fs::read(model.join("centroids.f32")).unwrap(),
        std::fs::read(model.join("model.json")).unwrap(),
        std::fs::read(&proj).unwrap(),
    ];
    assert_eq!(before, after);
}

#[test]
fn one_class_set_always_predicts_that_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data: Vec<f32> = (0..40).map(|i| (i % 7) as f32 * 0.5).collect();
    let set = EmbeddingSet::new(2, data, vec![0; 20], vec!["only".into()]).unwrap();
    let input = d.join("one");
    save_embedding_set(&set, &input).unwrap();
    let model = d.join("m");
    let preds = d.join("p.csv");
    ok(&["fit", s(&input), s(&model), "--k-per-class", "3"]);
    ok(&[
        "classify",
        s(&input),
        s(&model),
        s(&preds),
        "--k-neighbors",
        "1",
    ]);
    let text = std::fs::read_to_string(&preds).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("query_index,rank,class_id,score"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r.split(',').nth(2) == Some("0")));
}

#[test]
fn errors_are_single_json_lines_with_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let missing = run(&["fit", s(&d.join("nope")), s(&d.join("m"))]);
    assert_eq!(missing.status.code(), Some(2));
    let err = String::from_utf8(missing.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "io");

    let raw = planted(d);
    let bad = run(&["fit", s(&raw), s(&d.join("m")), "--k-per-class", "0"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&bad.stderr).unwrap();
    assert_eq!(v["error"], "invalid");

    let ambiguous = run(&["silhouette", s(&raw), s(&d.join("report.txt"))]);
    assert_eq!(ambiguous.status.code(), Some(1));
    assert!(!d.join("report.txt").exists());

    let flag = run(&["split", s(&raw), s(&d.join("x")), "--fracs", "0.5,0.5"]);
    assert_eq!(flag.status.code(), Some(1));
    let _: serde_json::Value = serde_json::from_slice(&flag.stderr).unwrap();

    let overwrite = run(&["rebalance", s(&raw), s(&raw)]);
    assert_eq!(overwrite.status.code(), Some(1));
}

#[test]
fn reports_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let raw = planted(d);
    let sil = d.join("sil.csv");
    let sil_json = d.join("sil.json");
    let v = ok(&["silhouette", s(&raw), s(&sil)]);
    assert!(v["overall"].as_f64().unwrap() > -1.0);
    assert!(std::fs::read_to_string(&sil)
        .unwrap()
        .starts_with("point_index,label,s_i\n0,class0,"));
    ok(&["silhouette", s(&raw), s(&sil_json)]);
    let j: serde_json::Value = serde_json::from_slice(&std::fs::read(&sil_json).unwrap()).unwrap();
    assert_eq!(j["points"].as_array().unwrap().len(), 600);

    let tidy = planted_with(d, "tidy", 0.0);
    let model = d.join("model");
    ok(&["fit", s(&tidy), s(&model)]);
    let ex = d.join("ex.csv");
    ok(&[
        "exemplars",
        s(&tidy),
        s(&model),
        s(&ex),
        "--class",
        "class2",
    ]);
    let text = std::fs::read_to_string(&ex).unwrap();
    assert!(text.starts_with("class,centroid,rank,row,distance\nclass2,0,1,"));
    assert_eq!(text.lines().count(), 1 + 3 * 4);

    let hist = d.join("hist.csv");
    ok(&["histogram", s(&raw), s(&hist), "--bins", "1"]);
    assert_eq!(
        std::fs::read_to_string(&hist).unwrap(),
        "bin_lo,bin_hi,classes\n60,60,10\n"
    );

    let pca = d.join("pca.csv");
    ok(&["project", s(&raw), s(&pca), "--method", "pca"]);
    let text = std::fs::read_to_string(&pca).unwrap();
    assert!(text.starts_with("x,y,label_id,label_name\n"));
    assert_eq!(text.lines().count(), 601);
}

#[test]
fn ema_of_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let input = d.join("loss.csv");
    std::fs::write(&input, "epoch,val_loss\n1,1\n2,0\n3,0\n").unwrap();
    let out = d.join("smooth.csv");
    ok(&["ema", s(&input), s(&out), "--alpha", "0.5"]);
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "step,value\n1,1\n2,0.5\n3,0.25\n"
    );
}

#[test]
fn gradcheck_passes_and_train_writes_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let report = d.join("gc.json");
    let v = ok(&["gradcheck", "--seed", "2", "--out", s(&report)]);
    assert_eq!(v["passed"], true);
    assert!(report.exists());

    let images = d.join("shapes");
    colored_shapes(10, 16, 1).unwrap().save(&images).unwrap();
    let ckpt = d.join("ckpt");
    let v = ok(&[
        "train",
        s(&images),
        s(&ckpt),
        "--epochs",
        "2",
        "--batch",
        "8",
        "--base-filters",
        "4",
        "--seed",
        "1",
    ]);
    assert_eq!(v["epochs_run"], 2);
    for f in ["model.json", "params.f32", "train_loss.csv", "val_loss.csv"] {
        assert!(ckpt.join(f).exists(), "{f}");
    }
    let val = std::fs::read_to_string(ckpt.join("val_loss.csv")).unwrap();
    assert!(val.starts_with("epoch,val_loss\n1,"));
    let ckpt_back = sketchvote::tinynn::Checkpoint::load(&ckpt).unwrap();
    assert_eq!(ckpt_back.model.config().base_filters, 4);
}
