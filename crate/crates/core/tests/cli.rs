mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rouge_we::embedding::EmbeddingTable;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rouge-we"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn rouge-we")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_documents_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let top = run(&["--help"], dir.path());
    assert!(top.status.success());
    let text = stdout(&top);
    for sub in ["score", "meta-eval", "embeddings"] {
        assert!(text.contains(sub), "missing {sub}");
    }

    let shared = [
        "--config",
        "--metrics",
        "--match",
        "--embeddings",
        "--embeddings-format",
        "--no-normalize",
        "--oov",
        "--multiref",
        "--report-component",
        "--lowercase",
        "--no-lowercase",
        "--stem",
        "--stopwords",
        "--out",
        "--threads",
    ];
    for (sub, extra) in [("score", &[][..]), ("meta-eval", &["--corpus", "--judgments"][..])] {
        let o = run(&[sub, "--help"], dir.path());
        assert!(o.status.success());
        let text = stdout(&o);
        for flag in shared.iter().chain(extra) {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
    }

    let o = run(&["embeddings", "inspect", "--help"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for flag in ["--format", "--word", "--no-normalize"] {
        assert!(text.contains(flag), "inspect --help lacks {flag}");
    }
}

#[test]
fn score_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "The cat sat on the mat.").unwrap();
    let o = run(&["score", "a.txt", "a.txt", "--metrics", "rouge-1"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "rouge-1 R=1.000000 P=1.000000 F=1.000000\n");
}

#[test]
fn score_sentence_pair() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cand.txt"), "It is raining heavily.").unwrap();
    fs::write(dir.path().join("ref.txt"), "It is pouring").unwrap();
    let o = run(&["score", "cand.txt", "ref.txt", "--metrics", "rouge-2"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "rouge-2 R=0.500000 P=0.333333 F=0.400000\n");
}

#[test]
fn score_with_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let table = EmbeddingTable::from_pairs(
        2,
        [
            ("raining", vec![0.6f32, 0.8]),
            ("pouring", vec![0.8, 0.6]),
            ("it", vec![1.0, 0.0]),
        ],
    )
    .unwrap();
    let mut buf = Vec::new();
    table.write_binary(&mut buf).unwrap();
    fs::write(dir.path().join("vec.bin"), buf).unwrap();
    fs::write(dir.path().join("cand.txt"), "it raining").unwrap();
    fs::write(dir.path().join("ref.txt"), "it pouring").unwrap();
    let o = run(
        &[
            "score",
            "cand.txt",
            "ref.txt",
            "--metrics",
            "rouge-1",
            "--match",
            "exact,we",
            "--embeddings",
            "vec.bin",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // 0.6*0.8 + 0.8*0.6 = 0.96
    assert_eq!(
        stdout(&o),
        "rouge-1 R=0.500000 P=0.500000 F=0.500000\nrouge-we-1 R=0.980000 P=0.980000 F=0.980000\n"
    );
}

#[test]
fn score_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.txt"), "words here").unwrap();
    let missing = run(&["score", "a.txt", "nope.txt"], dir.path());
    assert!(!missing.status.success());
    assert!(!missing.stderr.is_empty());

    let no_refs = run(&["score", "a.txt"], dir.path());
    assert!(!no_refs.status.success());

    let we_without_table = run(&["score", "a.txt", "a.txt", "--match", "we"], dir.path());
    assert!(!we_without_table.status.success());

    let bad_metric = run(&["score", "a.txt", "a.txt", "--metrics", "rouge-x"], dir.path());
    assert!(!bad_metric.status.success());
}

#[test]
fn meta_eval_prints_table_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    common::write_synthetic_corpus(&dir.path().join("corpus"), 3, 7);
    fs::rename(
        dir.path().join("corpus/judgments.csv"),
        dir.path().join("judgments.csv"),
    )
    .unwrap();
    let o = run(
        &[
            "meta-eval",
            "--corpus",
            "corpus",
            "--judgments",
            "judgments.csv",
            "--out",
            "out",
            "--metrics",
            "rouge-1",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    for j in ["pyramid", "responsiveness", "readability"] {
        assert!(header.contains(j), "{header}");
    }
    // scores fall monotonically with the degradation rank, as do both judgments
    let row = text.lines().find(|l| l.starts_with("rouge-1 ")).unwrap();
    let cells: Vec<&str> = row.split('|').map(str::trim).collect();
    let pyramid: Vec<&str> = cells[1].split_whitespace().collect();
    let responsiveness: Vec<&str> = cells[2].split_whitespace().collect();
    assert_eq!(pyramid[1], "1.0000");
    assert_eq!(pyramid[2], "1.0000");
    assert_eq!(responsiveness[1], "1.0000");
    assert!(text.contains("n = 10 systems"));

    let csv = fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.starts_with("metric,judgment,pearson,spearman,kendall,n\n"));
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["n_systems"], 10);
    assert!(json["config"].is_object());
}

#[test]
fn meta_eval_missing_judgments_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    common::write_synthetic_corpus(&dir.path().join("corpus"), 1, 1);
    let o = run(
        &["meta-eval", "--corpus", "corpus", "--judgments", "absent.csv"],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(!dir.path().join("report").exists());
}

#[test]
fn config_file_drives_meta_eval() {
    let dir = tempfile::tempdir().unwrap();
    common::write_synthetic_corpus(&dir.path().join("corpus"), 2, 3);
    fs::write(
        dir.path().join("run.toml"),
        "corpus = \"corpus\"\njudgments = \"corpus/judgments.csv\"\nmetrics = [\"rouge-2\"]\nout = \"res\"\n",
    )
    .unwrap();
    let o = run(&["meta-eval", "--config", "run.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("rouge-2"));
    assert!(dir.path().join("res/report.csv").exists());
}

#[test]
fn embeddings_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let table = EmbeddingTable::from_pairs(3, [("cat", vec![1.0f32, 0.0, 0.0]), ("dog", vec![0.0, 3.0, 4.0])]).unwrap();
    let mut buf = Vec::new();
    table.write_binary(&mut buf).unwrap();
    fs::write(dir.path().join("t.bin"), buf).unwrap();
    let o = run(
        &["embeddings", "inspect", "t.bin", "--word", "Dog", "--word", "emu"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("vocabulary: 2"));
    assert!(text.contains("dimension: 3"));
    assert!(text.contains("Dog: [0.000000, 0.600000, 0.800000]"));
    assert!(text.contains("emu: OOV"));

    let bad = run(&["embeddings", "inspect", "absent.bin"], dir.path());
    assert!(!bad.status.success());
}
