use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cohaudit::corpus::{write_corpus, Segment, TokenRecord};
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_cohaudit");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("COHAUDIT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}):\n{}\nstderr:\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn rec(type_id: u32, seg: Segment, input: u64, pos: u16, v: &[f32]) -> TokenRecord {
    TokenRecord::new(type_id, seg, input, pos, v.to_vec())
}

fn write(dir: &Path, name: &str, records: &[TokenRecord], dim: usize) -> PathBuf {
    let path = dir.join(name);
    write_corpus(records, dim, fs::File::create(&path).unwrap()).unwrap();
    path
}

/// Two tight types ten units apart.
fn toy(dir: &Path) -> PathBuf {
    let records = vec![
        rec(0, Segment::A, 0, 0, &[0.0, 0.0]),
        rec(0, Segment::A, 0, 1, &[0.0, 2.0]),
        rec(1, Segment::B, 0, 2, &[10.0, 0.0]),
        rec(1, Segment::B, 0, 3, &[10.0, 2.0]),
    ];
    write(dir, "toy.embx", &records, 2)
}

fn generate(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["--seed", "11", "simulate", "--generate", "syn.embx", "--types", "40", "--delta", "2"];
    args.extend_from_slice(extra);
    let out = run(dir, &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (dir.join("syn.embx"), dir.join("syn.vocab.tsv"))
}

#[test]
fn toy_corpus_silhouette() {
    let tmp = TempDir::new().unwrap();
    toy(tmp.path());
    let out = run(tmp.path(), &["silhouette", "toy.embx"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "silhouette");
    // coh 1, sep sqrt(101)
    let expected = 1.0 - 1.0 / 101f64.sqrt();
    let got = v["result"]["corpus"]["mean_silh"].as_f64().unwrap();
    assert!((got - expected).abs() < 1e-12, "{got}");
    assert!((got - 0.9005).abs() < 1e-4);
}

#[test]
fn truncated_file_names_offset() {
    let tmp = TempDir::new().unwrap();
    let path = toy(tmp.path());
    let bytes = fs::read(&path).unwrap();
    // header 20 bytes, records 23 bytes each at D = 2; cut inside record 2
    fs::write(&path, &bytes[..20 + 2 * 23 + 5]).unwrap();
    for cmd in ["validate", "silhouette"] {
        let out = run(tmp.path(), &[cmd, "toy.embx"]);
        assert_eq!(code(&out), 3, "{cmd}");
        let v = json(&out);
        assert_eq!(v["error"]["kind"], "data");
        assert_eq!(v["error"]["offset"], 66);
        assert!(String::from_utf8_lossy(&out.stderr).contains("66"));
    }
}

#[test]
fn corrupted_checksum_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    let path = toy(tmp.path());
    let mut bytes = fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n - 1] ^= 0xff;
    fs::write(&path, &bytes).unwrap();
    let out = run(tmp.path(), &["validate", "toy.embx"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn layer_identity_check_passes() {
    let tmp = TempDir::new().unwrap();
    let out = run(tmp.path(), &["simulate", "--check-eq23", "--layers", "4", "--dim", "16", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let r = &v["result"]["identity_check"];
    assert!(r["max_identity_residual"].as_f64().unwrap() <= 1e-10);
    assert!(r["max_accumulated_term_gap"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["zero_segment_exact"], true);
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    toy(tmp.path());
    assert_eq!(code(&run(tmp.path(), &["silhouette", "toy.embx", "--bogus"])), 2);
    assert_eq!(code(&run(tmp.path(), &["nosuchcommand"])), 2);
    assert_eq!(code(&run(tmp.path(), &["wordsim", "toy.embx"])), 2);
    assert_eq!(code(&run(tmp.path(), &["simulate", "--layers", "0"])), 2);
    fs::write(tmp.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["--config", "bad.toml", "silhouette", "toy.embx"])), 2);
}

#[test]
fn degenerate_inputs_exit_4() {
    let tmp = TempDir::new().unwrap();
    // one type: separation has no other centroid
    let one = vec![
        rec(0, Segment::A, 0, 0, &[0.0, 0.0]),
        rec(0, Segment::A, 0, 1, &[1.0, 0.0]),
    ];
    write(tmp.path(), "one.embx", &one, 2);
    let out = run(tmp.path(), &["silhouette", "one.embx"]);
    assert_eq!(code(&out), 4);
    assert_eq!(json(&out)["error"]["kind"], "degenerate");
    // no type has two tokens in both segments
    let out = run(tmp.path(), &["segshift", "one.embx"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = TempDir::new().unwrap();
    toy(tmp.path());
    fs::write(tmp.path().join("c.toml"), "seed = 99\nleave_one_out = true\nsegments = \"a\"\n").unwrap();
    let out = run(tmp.path(), &["--config", "c.toml", "silhouette", "toy.embx"]);
    assert_eq!(code(&out), 4, "segment A alone leaves one type");
    let out = run(
        tmp.path(),
        &["--config", "c.toml", "silhouette", "toy.embx", "--segments", "both", "--leave-one-out=false"],
    );
    assert_eq!(code(&out), 0);
    let cfg = &json(&out)["config"];
    assert_eq!(cfg["seed"], 99);
    assert_eq!(cfg["leave_one_out"], false);
    assert_eq!(cfg["segments"], "both");
    let out = run(tmp.path(), &["--config", "c.toml", "silhouette", "toy.embx", "--segments", "both"]);
    assert_eq!(json(&out)["config"]["leave_one_out"], true);
}

#[test]
fn out_dir_from_env_and_deterministic_reports() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), &["--specials"]);
    let mut runs = Vec::new();
    for name in ["r1", "r2"] {
        let out = Command::new(BIN)
            .args(["cosines", "syn.embx", "--vocab", "syn.vocab.tsv", "--sizes", "20,200", "--repeats", "4"])
            .current_dir(tmp.path())
            .env("COHAUDIT_OUT_DIR", name)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let dir = tmp.path().join(name);
        runs.push((
            fs::read(dir.join("cosines.json")).unwrap(),
            fs::read(dir.join("cosines_curve.csv")).unwrap(),
            out.stdout,
        ));
    }
    assert_eq!(runs[0], runs[1]);
    let curve = String::from_utf8(runs[0].1.clone()).unwrap();
    assert!(curve.starts_with("size,full,repeats,mean_p,min_p,max_p\n"));
    assert_eq!(curve.lines().count(), 4);
}

#[test]
fn generated_corpus_pipeline() {
    let tmp = TempDir::new().unwrap();
    let (corpus, _) = generate(tmp.path(), &["--specials", "--spread", "4"]);
    assert!(corpus.exists());
    assert_eq!(code(&run(tmp.path(), &["validate", "syn.embx"])), 0);

    let out = run(tmp.path(), &["silhouette", "syn.embx", "--vocab", "syn.vocab.tsv", "--out-dir", "o"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    // 40 types x 20 tokens = 800 words; everything else is CLS or SEP
    assert_eq!(v["result"]["input"]["records_used"], 800);
    assert!(v["result"]["corpus"]["mean_silh"].as_f64().unwrap() > 0.5);
    let types = fs::read_to_string(tmp.path().join("o/silhouette_types.csv")).unwrap();
    assert_eq!(types.lines().count(), 41);

    let out = run(tmp.path(), &["silhouette", "syn.embx", "--vocab", "syn.vocab.tsv", "--keep-sep"]);
    let kept = json(&out)["result"]["input"]["records_used"].as_u64().unwrap();
    assert!(kept > 800);

    let out = run(tmp.path(), &["segshift", "syn.embx", "--vocab", "syn.vocab.tsv"]);
    assert_eq!(code(&out), 0);
    let t = &json(&out)["result"]["shift_test"];
    assert!(t["p_value"].as_f64().unwrap() < 0.01);
    assert!(t["effect_size"].as_f64().unwrap() < 0.0);
}

#[test]
fn split_half_reference_is_reported() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), &[]);
    let out = run(tmp.path(), &["segshift", "syn.embx", "--reference", "split-half", "--min-count", "4"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["config"]["reference"], "split_half");
    assert_eq!(v["config"]["min_count"], 4);
}

#[test]
fn word_and_sentence_benchmarks() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    // three words on a circle, one per input
    let records = vec![
        rec(0, Segment::A, 0, 0, &[1.0, 0.0]),
        rec(1, Segment::B, 0, 1, &[0.8, 0.6]),
        rec(2, Segment::A, 1, 0, &[0.0, 1.0]),
        rec(3, Segment::B, 1, 1, &[-1.0, 0.1]),
        rec(0, Segment::A, 2, 0, &[1.0, 0.1]),
        rec(3, Segment::B, 2, 1, &[0.9, 0.0]),
    ];
    write(d, "w.embx", &records, 2);
    fs::write(d.join("w.tsv"), "0\tnorth\t5\n1\tnortheast\t3\n2\teast\t2\n3\twest\t1\n").unwrap();
    fs::write(
        d.join("pairs.tsv"),
        "word1\tword2\tscore\nnorth\tnortheast\t8\nnorth\teast\t4\nnorth\twest\t1\nnorth\tmissing\t3\n",
    )
    .unwrap();
    let out = run(d, &["wordsim", "w.embx", "--vocab", "w.tsv", "--benchmark", "pairs.tsv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let c = &json(&out)["result"]["correlation"];
    assert_eq!(c["used"], 3);
    assert_eq!(c["skipped"], 1);
    assert!((c["spearman"]["rho"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    fs::write(
        d.join("sent.tsv"),
        "id\ts1\ts2\tscore\n0\ta\tb\t4\n1\tc\td\t0\n2\te\tf\t5\n7\tg\th\t1\n",
    )
    .unwrap();
    let out = run(d, &["sentsim", "w.embx", "--benchmark", "sent.tsv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["result"];
    assert_eq!(r["composed"], 3);
    assert_eq!(r["missing"], 1);
    assert!((r["correlation"]["spearman"]["rho"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn definitions_enable_regression_and_contrast() {
    let tmp = TempDir::new().unwrap();
    generate(tmp.path(), &[]);
    let defs: String = (0..40).map(|t| format!("{t}\t{}\n", 1 + t % 4)).collect();
    fs::write(tmp.path().join("defs.tsv"), defs).unwrap();
    let out = run(
        tmp.path(),
        &["silhouette", "syn.embx", "--vocab", "syn.vocab.tsv", "--definitions", "defs.tsv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = &json(&out)["result"];
    // synthetic frequencies are all equal, so that predictor is dropped
    assert_eq!(r["regression"]["dropped"][0]["name"], "ln_frequency");
    assert_eq!(r["regression"]["rows_used"], 40);
    assert_eq!(r["monosemy_contrast"]["method"], "welch_t");
    assert_eq!(r["monosemy_contrast"]["n1"], 200);

    let out = run(tmp.path(), &["silhouette", "syn.embx", "--definitions", "defs.tsv"]);
    assert_eq!(code(&out), 2);
}
