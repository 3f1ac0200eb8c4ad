use std::path::Path;
use std::process::{Command, Output};

fn fpcc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpcc"))
        .args(args)
        .env_remove("FPCC_OUT_DIR")
        .env_remove("FPCC_THREADS")
        .output()
        .expect("spawn fpcc")
}

fn ok(args: &[&str]) -> String {
    let out = fpcc(args);
    assert!(
        out.status.success(),
        "fpcc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["generate", "--out-dir", d, "--count", "2", "--min-instances", "5", "--max-instances", "8", "--seed", "3"]);
    let scene = p(dir.path(), "scene_000.fpcc-scene");
    let out = ok(&["score", "--out-dir", d, "--scene", &scene, "--histogram-bins", "4"]);
    assert!(out.contains("0.750-1.000"));
    let scores = std::fs::read_to_string(dir.path().join("scene_000.fpcc-scores")).unwrap();
    assert!(scores.starts_with("# center scores"));

    ok(&["embed", "--out-dir", d, "--scene", &scene, "--dim", "32"]);
    let emb = p(dir.path(), "scene_000.fpcc-emb");
    let out = ok(&["cluster", "--out-dir", d, "--scene", &scene, "--embeddings", &emb]);
    assert!(out.contains("instances"));
    let seg = p(dir.path(), "scene_000.fpcc-seg");

    let table = ok(&["eval", "--out-dir", d, "--scene", &scene, "--seg", &seg, "--embeddings", &emb, "--iou", "0.5", "--iou", "0.75"]);
    assert!(table.contains("0.500") && table.contains("0.750"));
    let tsv = std::fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert!(tsv.contains("ap\t0.5\t1.000000"));
    assert!(tsv.contains("ap\t0.75\t"));

    let loss = ok(&["loss", "--scene", &scene, "--embeddings", &emb, "--ablation", "--block-size", "512"]);
    let rows: Vec<&str> = loss.lines().filter(|l| l.starts_with("none") || l.starts_with("vdm")).collect();
    assert_eq!(rows.len(), 3);
}

#[test]
fn ablation_gives_three_distinct_losses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["generate", "--out-dir", d, "--min-instances", "6", "--max-instances", "6", "--min-points", "100", "--max-points", "100"]);
    let scene = p(dir.path(), "scene_000.fpcc-scene");
    ok(&["embed", "--out-dir", d, "--scene", &scene, "--dim", "16", "--sigma", "5", "--anchor-separation", "0.5"]);
    let emb = p(dir.path(), "scene_000.fpcc-emb");
    let tsv = p(dir.path(), "loss.tsv");
    ok(&["loss", "--scene", &scene, "--embeddings", &emb, "--ablation", "--block-size", "600", "-o", &tsv]);
    let text = std::fs::read_to_string(&tsv).unwrap();
    let l_ef: Vec<f64> = text.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(l_ef.len(), 3);
    assert!(l_ef[0] != l_ef[1] && l_ef[1] != l_ef[2] && l_ef[0] != l_ef[2], "{l_ef:?}");
    // masking pairs can only remove non-negative terms
    assert!(l_ef[1] <= l_ef[0]);
}

#[test]
fn exit_codes_are_categorized() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fpcc(&["nope"]).status.code(), Some(2));
    assert_eq!(fpcc(&["cluster", "--theta"]).status.code(), Some(2));
    assert_eq!(fpcc(&["score", "--scene", "/does/not/exist.fpcc-scene"]).status.code(), Some(3));

    let bad = dir.path().join("bad.fpcc-scene");
    std::fs::write(&bad, "d_max 1\n1.0 2.0 abc\n").unwrap();
    let out = fpcc(&["score", "--scene", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    let good = dir.path().join("good.fpcc-scene");
    std::fs::write(&good, "d_max 1\ncenter 0 0 0 0\n0 0 0 0\n5 0 0 0\n").unwrap();
    // point 1 lies 5 from its center with d_max 1
    assert_eq!(fpcc(&["score", "--scene", good.to_str().unwrap()]).status.code(), Some(5));
    assert_eq!(fpcc(&["bench", "--warmup", "1"]).status.code(), Some(5));
}

#[test]
fn help_lists_defaults() {
    let help = ok(&["loss", "--help"]);
    for flag in ["--epsilon1", "--epsilon2", "--alpha", "--beta", "--no-vdm", "--no-asm", "--block-size"] {
        assert!(help.contains(flag), "{flag}");
    }
    assert!(help.contains("[default: 5]") && help.contains("[default: 10]") && help.contains("[default: 30]"));
    assert!(ok(&["cluster", "--help"]).contains("[default: 0.6]"));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fpcc"))
        .args(["generate", "--min-instances", "2", "--max-instances", "2", "--prefix", "env"])
        .env("FPCC_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env_000.fpcc-scene").exists());
}

#[test]
fn gzip_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["generate", "--out-dir", d, "--min-instances", "3", "--max-instances", "3"]);
    let scene = p(dir.path(), "scene_000.fpcc-scene");
    let emb = p(dir.path(), "e.fpcc-emb.gz");
    ok(&["embed", "--scene", &scene, "-o", &emb, "--dim", "8"]);
    let seg = p(dir.path(), "s.fpcc-seg.gz");
    ok(&["cluster", "--scene", &scene, "--embeddings", &emb, "-o", &seg]);
    let gz = std::fs::read(&seg).unwrap();
    assert_eq!(&gz[..2], &[0x1f, 0x8b]);
    ok(&["eval", "--out-dir", d, "--scene", &scene, "--seg", &seg]);
}
