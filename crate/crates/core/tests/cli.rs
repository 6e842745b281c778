use std::fs;
use std::path::{Path, PathBuf};

use code2vec::cli::{run, EXIT_DATA, EXIT_NUMERIC, EXIT_USAGE};

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("code2vec").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

const TRAIN: &[&str] = &["--dim", "32", "--kmax", "50", "--epochs", "200", "--patience", "200", "--batch", "10", "--seed", "5"];

fn trained(dir: &Path) -> (String, String) {
    let dataset = path(dir, "toy.c2v");
    let model = path(dir, "toy.model");
    let (code, _, err) = cli(&["extract", &data("toy_corpus.minij"), "-o", &dataset]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("methods=50"), "{err}");
    let mut args = vec!["train", dataset.as_str(), "-o", model.as_str()];
    args.extend_from_slice(TRAIN);
    let (code, out, err) = cli(&args);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().all(|l| l.starts_with("epoch=") && l.contains(" val_f1=")));
    (dataset, model)
}

#[test]
fn extract_train_predict_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, model) = trained(dir.path());

    let (code, out, _) = cli(&["eval", "--model", &model, "--data", &dataset]);
    assert_eq!(code, 0);
    let exact: f64 = out.split("exact=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!(exact >= 0.95, "{out}");

    let (code, out, _) = cli(&["predict", &model, &data("toy_corpus.minij"), "--topk", "3", "--attention"]);
    assert_eq!(code, 0);
    let mut hits = 0;
    let mut blocks = 0;
    for block in out.split("# ").skip(1) {
        blocks += 1;
        let mut lines = block.lines();
        let label = lines.next().unwrap();
        let top = lines.next().unwrap();
        if top.split(' ').nth(1) == Some(label) {
            hits += 1;
        }
        let weights: f64 = block
            .lines()
            .filter(|l| l.starts_with("  "))
            .map(|l| l.trim().split(' ').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((weights - 1.0).abs() < 1e-3, "attention sums to {weights}");
    }
    assert_eq!(blocks, 50);
    assert!(hits >= 48, "{hits} of 50");
}

#[test]
fn training_is_bit_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (dataset, model) = trained(dir.path());
    let again = path(dir.path(), "again.model");
    let mut args = vec!["train", dataset.as_str(), "-o", again.as_str()];
    args.extend_from_slice(TRAIN);
    assert_eq!(cli(&args).0, 0);
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn checkpoints_are_written_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = path(dir.path(), "toy.c2v");
    assert_eq!(cli(&["extract", &data("toy_corpus.minij"), "-o", &dataset]).0, 0);
    let model = path(dir.path(), "m.bin");
    let (code, out, _) = cli(&["train", &dataset, "-o", &model, "--dim", "8", "--epochs", "3", "--patience", "5", "--checkpoints"]);
    assert_eq!(code, 0);
    let epochs = out.lines().count();
    for e in 1..=epochs {
        assert!(PathBuf::from(format!("{model}.ckpt-{e}")).exists());
    }
}

#[test]
fn eval_matches_manual_counts() {
    let dir = tempfile::tempdir().unwrap();
    let rows = path(dir.path(), "rows.tsv");
    let (code, out, _) = cli(&["eval", "--predictions", &data("eval_20.tsv"), "--rows", &rows]);
    assert_eq!(code, 0);
    // tp = 27, fp = 8, fn = 11; six exact matches
    assert_eq!(out.trim(), "P=0.7714 R=0.7105 F1=0.7397 exact=0.3000 n=20");
    let rows = fs::read_to_string(rows).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[2], "countLines\tcountBlankLines\t2\t1\t0");
    assert_eq!(lines[14], "contains\t<UNK>\t0\t1\t1");
}

#[test]
fn vector_queries_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let (_, model) = trained(dir.path());
    let vectors = path(dir.path(), "vectors.txt");
    assert_eq!(cli(&["export-vectors", &model, "-o", &vectors]).0, 0);
    let text = fs::read_to_string(&vectors).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(!text.contains("<UNK>") && !text.contains("<PAD>"));

    let (code, from_model, _) = cli(&["nearest", &model, "sum", "--topk", "3"]);
    assert_eq!(code, 0);
    let (_, from_text, _) = cli(&["nearest", &vectors, "sum", "--topk", "3"]);
    assert_eq!(from_model, from_text);
    let lines: Vec<&str> = from_model.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("1 "));
    assert!(lines.iter().all(|l| l.split(' ').count() == 3 && !l.contains(" sum ")));

    let (code, out, _) = cli(&["combine", &vectors, "max", "sum", "--topk", "2"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 2);
    let (code, out, _) = cli(&["analogy", &vectors, "max", "sum", "isEmpty", "--topk", "4"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 4);
    assert_eq!(cli(&["nearest", &vectors, "noSuchName"]).0, EXIT_DATA);

    let (code, out, _) = cli(&["inspect-attention", &model, &data("toy_corpus.minij")]);
    assert_eq!(code, 0);
    assert_eq!(out.matches("# ").count(), 50);
}

#[test]
fn zero_methods_give_empty_output_and_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let src = path(dir.path(), "empty.minij");
    fs::write(&src, "// nothing here\n").unwrap();
    let out_path = path(dir.path(), "out.c2v");
    let (code, _, err) = cli(&["extract", &src, "-o", &out_path]);
    assert_eq!(code, 0);
    assert!(err.contains("warning"));
    assert_eq!(fs::read_to_string(out_path).unwrap(), "");
}

#[test]
fn wrapped_snippet_and_sexpr_input() {
    let dir = tempfile::tempdir().unwrap();
    let src = path(dir.path(), "one.minij");
    fs::write(&src, "void f() { x = 7; }").unwrap();
    let (code, out, _) = cli(&["extract", &src]);
    assert_eq!(code, 0);
    assert_eq!(out, "f x,NameExpr^AssignExpr_IntegerLiteralExpr,7\n");

    let sx = path(dir.path(), "one.sexpr");
    fs::write(&sx, "(MethodDecl (Name \"g\") (AssignExpr (NameExpr \"y\") (NameExpr \"z\")))\n").unwrap();
    let (code, out, _) = cli(&["extract", &sx]);
    assert_eq!(code, 0);
    assert_eq!(out, "g y,NameExpr^AssignExpr_NameExpr,z\n");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(cli(&["extract", "x.minij", "--max-width", "nope"]).0, EXIT_USAGE);
    assert_eq!(cli(&["train", "x.c2v", "-o", "m", "--variant", "bogus"]).0, EXIT_USAGE);
    assert_eq!(cli(&["extract", "x.minij", "--max-length", "0"]).0, EXIT_USAGE);

    let bad = path(dir.path(), "bad.minij");
    fs::write(&bad, "int f( {").unwrap();
    let (code, _, err) = cli(&["extract", &bad]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("bad.minij"));

    let garbage = path(dir.path(), "garbage.model");
    fs::write(&garbage, "not a model").unwrap();
    assert_eq!(cli(&["predict", &garbage, &bad]).0, EXIT_DATA);

    // antipodal vectors cannot be combined
    let vectors = path(dir.path(), "v.txt");
    fs::write(&vectors, "a 1 0\nb -1 0\nc 0 1\n").unwrap();
    assert_eq!(cli(&["combine", &vectors, "a", "b"]).0, EXIT_NUMERIC);

    let dataset = path(dir.path(), "toy.c2v");
    assert_eq!(cli(&["extract", &data("toy_corpus.minij"), "-o", &dataset]).0, 0);
    let model = path(dir.path(), "m.bin");
    assert_eq!(cli(&["train", &dataset, "-o", &model, "--dim", "4", "--lr", "1e30", "--epochs", "30", "--patience", "30", "--dropout", "0"]).0, EXIT_NUMERIC);
}
