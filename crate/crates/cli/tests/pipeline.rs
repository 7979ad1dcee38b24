use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: &str = r#"
[synth]
n_users = 100
n_communities = 4
posts_per_user = 40.0

[experiment.location.walk]
walks_per_node = 4
walk_length = 20

[experiment.location.skipgram]
dim = 16
epochs = 2

[experiment.network.embed.walk]
walks_per_node = 4
walk_length = 20

[experiment.network.embed.skipgram]
dim = 16
epochs = 2

[experiment.evaluation.forest]
n_trees = 20

[experiment.robustness]
repeats = 2
"#;

fn tieprobe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tieprobe"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = tieprobe(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Synthesizes and ingests a small network.
fn snapshot() -> TempDir {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("small.toml"), SMALL).unwrap();
    ok(d, &["synth", "--config", "small.toml", "--out", "raw"]);
    ok(
        d,
        &[
            "ingest", "--posts", "raw/posts.jsonl", "--edges", "raw/edges.csv", "--config", "small.toml", "--out",
            "snap",
        ],
    );
    tmp
}

#[test]
fn pipeline_end_to_end() {
    let tmp = snapshot();
    let d = tmp.path();
    assert!(d.join("raw/truth.json").is_file());
    for f in ["config.toml", "pairs.csv", "posts.jsonl", "edges.csv"] {
        assert!(d.join("snap").join(f).is_file(), "{f}");
    }

    ok(d, &["features", "--snapshot", "snap", "--modality", "all"]);
    for f in [
        "features_H.csv",
        "features_T.csv",
        "features_I.csv",
        "features_L.csv",
        "features_E.csv",
        "embedding_L.csv",
        "embedding_E.csv",
        "network_split.csv",
    ] {
        assert!(d.join("snap/features").join(f).is_file(), "{f}");
    }

    let out = ok(d, &["attack", "--snapshot", "snap", "--modality", "H"]);
    let auc: f64 = out
        .split("AUC ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .expect("AUC printed");
    assert!((0.0..=1.0).contains(&auc));
    let csv = fs::read_to_string(d.join("snap/results/attack_H.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("experiment,subset,fold,auc"));
    assert_eq!(csv.lines().count(), 1 + 5);

    let out = ok(d, &["fuse", "--snapshot", "snap", "--subset", "enumerate"]);
    assert!(out.contains("baseline"));
    let summary = fs::read_to_string(d.join("snap/results/fuse_enumerate_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 31);
    let sizes: Vec<usize> = rows.iter().map(|r| r.split(',').next().unwrap().len()).collect();
    assert_eq!(sizes.iter().filter(|&&s| (2..=4).contains(&s)).count(), 25);
    let folds = fs::read_to_string(d.join("snap/results/fuse_enumerate.csv")).unwrap();
    assert_eq!(folds.lines().filter(|l| l.contains(",BL,")).count(), 5);

    ok(d, &["robustness", "--snapshot", "snap", "--steps", "10,50"]);
    let rob = fs::read_to_string(d.join("snap/results/robustness.csv")).unwrap();
    assert_eq!(rob.lines().next(), Some("fraction,attack,mean_auc,std_auc,runs"));
    // fractions 0, 0.1 and 0.5, four attacks each
    assert_eq!(rob.lines().count(), 1 + 3 * 4);
}

#[test]
fn reruns_are_byte_identical() {
    let a = snapshot();
    let b = snapshot();
    for tmp in [&a, &b] {
        ok(tmp.path(), &["features", "--snapshot", "snap", "--modality", "HTIE"]);
    }
    let fuse = ["fuse", "--snapshot", "snap", "--subset", "HTIE", "--seed", "7"];
    let out_a = ok(a.path(), &fuse);
    let out_b = ok(b.path(), &fuse);
    assert_eq!(out_a, out_b);
    assert_eq!(out_a, ok(a.path(), &fuse));
    for f in [
        "pairs.csv",
        "features/features_E.csv",
        "features/embedding_E.csv",
        "results/fuse_HTIE.csv",
        "results/fuse_HTIE_scores.csv",
    ] {
        let x = fs::read(a.path().join("snap").join(f)).unwrap();
        let y = fs::read(b.path().join("snap").join(f)).unwrap();
        assert!(x == y, "{f} differs between identical runs");
    }
}

#[test]
fn exit_codes() {
    let tmp = snapshot();
    let d = tmp.path();

    // artifact missing before `features` ran: data error naming the file
    let out = tieprobe(d, &["attack", "--snapshot", "snap", "--modality", "T"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("features_T.csv"));

    let out = tieprobe(d, &["fuse", "--snapshot", "nowhere"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing artifact"));

    let out = tieprobe(d, &["attack", "--snapshot", "snap", "--modality", "X"]);
    assert_eq!(code(&out), 2);

    fs::write(d.join("bad.toml"), "[synth]\nn_userz = 3\n").unwrap();
    let out = tieprobe(d, &["synth", "--config", "bad.toml", "--out", "x"]);
    assert_eq!(code(&out), 2);

    fs::write(d.join("neg.toml"), "[experiment.evaluation]\nfolds = 1\n").unwrap();
    let out = tieprobe(
        d,
        &["ingest", "--posts", "raw/posts.jsonl", "--edges", "raw/edges.csv", "--config", "neg.toml", "--out", "y"],
    );
    assert_eq!(code(&out), 2);

    fs::write(d.join("broken.csv"), "1,1\n").unwrap();
    let out = tieprobe(d, &["ingest", "--posts", "raw/posts.jsonl", "--edges", "broken.csv", "--out", "z"]);
    assert_eq!(code(&out), 3);

    let out = tieprobe(d, &["robustness", "--snapshot", "snap", "--steps", "100"]);
    assert_eq!(code(&out), 2);

    let out = tieprobe(d, &["attack", "--bogus"]);
    assert_eq!(code(&out), 2);
}
