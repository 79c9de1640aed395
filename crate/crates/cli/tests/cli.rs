//! Command-level tests: flag handling, file outputs, determinism, and the
//! genstream -> csv -> train loop.

use clap::Parser;

use streamcart_cli::opts::{Cli, Command};
use streamcart_cli::{genstream, run_eval, sweep, train};

fn parse(args: &[&str]) -> Cli {
    Cli::parse_from([&["streamcart"], args].concat())
}

fn try_parse(args: &[&str]) -> Result<Cli, clap::Error> {
    Cli::try_parse_from([&["streamcart"], args].concat())
}

#[test]
fn zero_mappers_is_a_usage_error() {
    let err = try_parse(&["train", "--preset", "d1", "--mappers", "0"]).unwrap_err();
    assert_eq!(err.kind(), clap::error::ErrorKind::ValueValidation);
}

#[test]
fn one_bin_is_a_usage_error() {
    assert!(try_parse(&["train", "--preset", "d1", "--bins", "1"]).is_err());
}

#[test]
fn unknown_preset_fails() {
    let Command::Train(args) = parse(&["train", "--preset", "d9"]).command else {
        panic!()
    };
    assert!(train::run(&args).is_err());
}

#[test]
fn unknown_sweep_axis_fails() {
    let Command::Sweep(args) =
        parse(&["sweep", "sideways", "--values", "1,2", "--preset", "d1"]).command
    else {
        panic!()
    };
    assert!(sweep::run_sweep(&args).is_err());
}

#[test]
fn repeated_training_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> String {
        let out = dir.path().join(name);
        let Command::Train(args) = parse(&[
            "train", "--attrs", "3", "--records", "5000", "--batch", "100",
            "--seed", "11", "--out", out.to_str().unwrap(),
        ])
        .command
        else {
            panic!()
        };
        train::run(&args).unwrap();
        std::fs::read_to_string(out.join("model.tree")).unwrap()
    };
    assert_eq!(run("first"), run("second"));
}

#[test]
fn genstream_then_train_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let gen_out = dir.path().join("gen");
    let Command::Genstream(args) = parse(&[
        "genstream", "--attrs", "2", "--nominal-attrs", "1", "--domain", "3",
        "--records", "600", "--seed", "5", "--out", gen_out.to_str().unwrap(),
    ])
    .command
    else {
        panic!()
    };
    genstream::run(&args).unwrap();
    let csv = gen_out.join("stream.csv");
    let schema = gen_out.join("stream.schema");
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap().lines().count(),
        600
    );

    let train_out = dir.path().join("train");
    let Command::Train(args) = parse(&[
        "train", "--input", csv.to_str().unwrap(), "--schema", schema.to_str().unwrap(),
        "--batch", "100", "--nmin", "100", "--out", train_out.to_str().unwrap(),
    ])
    .command
    else {
        panic!()
    };
    let outcome = train::run(&args).unwrap();
    assert_eq!(outcome.records, 600);
    assert!(train_out.join("model.tree").exists());
    assert!(train_out.join("rounds.tsv").exists());
    assert!(train_out.join("round-0.stats").exists());

    // Predict-only evaluation of the saved model over the same CSV.
    let Command::Eval(args) = parse(&[
        "eval", "--model", train_out.join("model.tree").to_str().unwrap(),
        "--input", csv.to_str().unwrap(), "--schema", schema.to_str().unwrap(),
    ])
    .command
    else {
        panic!()
    };
    let accuracy = run_eval(&args).unwrap();
    assert_eq!(accuracy.total, 600);
}

#[test]
fn eval_rejects_model_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    // Model splits on attribute 5; the stream only has 2 attributes.
    let model = dir.path().join("model.tree");
    std::fs::write(&model, "I 5 <=0.5\nL 0 c=0 n=0\nL 1 c=1 n=0\n").unwrap();
    let Command::Eval(args) = parse(&[
        "eval", "--model", model.to_str().unwrap(),
        "--attrs", "2", "--eval-records", "100",
    ])
    .command
    else {
        panic!()
    };
    assert!(run_eval(&args).is_err());
}

#[test]
fn prequential_flag_reports_test_then_train_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let Command::Train(args) = parse(&[
        "train", "--attrs", "3", "--noise", "0", "--records", "20000",
        "--batch", "200", "--seed", "3", "--prequential",
        "--out", dir.path().to_str().unwrap(),
    ])
    .command
    else {
        panic!()
    };
    let outcome = train::run(&args).unwrap();
    let acc = outcome.prequential.expect("prequential accuracy present");
    assert_eq!(acc.total, 20_000);
    // Test-then-train on a learnable noiseless concept beats coin flipping.
    assert!(acc.fraction() > 0.6, "prequential accuracy {acc}");
}

#[test]
fn sweep_writes_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let Command::Sweep(args) = parse(&[
        "sweep", "batch", "--values", "400,100",
        "--attrs", "2", "--records", "4000", "--eval-records", "500",
        "--seed", "2", "--out", dir.path().to_str().unwrap(),
    ])
    .command
    else {
        panic!()
    };
    let (axis, rows) = sweep::run(&args).unwrap();
    assert_eq!(axis.name(), "batch");
    // Values are reported in ascending order.
    assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![100, 400]);
    let tsv = std::fs::read_to_string(dir.path().join("sweep.tsv")).unwrap();
    let mut lines = tsv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis\tvalue\taccuracy_pct\telapsed_s\tsplit_evals\tdepth\tnodes\tleaves"
    );
    assert_eq!(lines.count(), 2);
}
