//! End-to-end tests of the command-line binary: exit codes, artifact
//! naming, CSV headers, seed overrides, resume safety, and SVG parse-back.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use apde_cli::plot::parse_points;

const BIN: &str = env!("CARGO_BIN_EXE_apde");

/// Minimal config that exercises the whole pipeline in a few seconds.
const BASE_CONFIG: &str = "\
data.source = prior
data.resolution = 8
data.n_train = 6
data.n_test = 2
data.seed = 11
prior.lengthscale = 0.3
prior.variance = 1.0
mask.policy = random
mask.keep_fraction = 0.25
mask.seed = 12
train.mode = ambient
train.backbone = conv
train.width = 4
train.blocks = 1
train.embed_dim = 2
train.padding = reflect
train.epochs = 1
train.batch_size = 2
train.lr = 0.002
train.seed = 13
sample.nfe = 2
sample.nfe_list = 2
sample.count = 1
sample.seed = 14
sweep.counts = 0,1
";

fn run(config: Option<&Path>, out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    if let Some(cfg) = config {
        cmd.arg("--config").arg(cfg);
    }
    cmd.arg("--out").arg(out);
    cmd.args(args);
    cmd.output().expect("failed to launch binary")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("binary was killed by a signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Files in `dir` matching `<stem>-*.<ext>`.
fn artifacts(dir: &Path, stem: &str, ext: &str) -> Vec<std::path::PathBuf> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.starts_with(&format!("{stem}-")) && name.ends_with(&format!(".{ext}")) {
            found.push(path);
        }
    }
    found.sort();
    found
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.cfg");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(None, dir.path(), &["generate"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{BASE_CONFIG}no.such.key = 1\n"));
    let out = run(Some(&cfg), dir.path(), &["generate"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("no.such.key"));
}

#[test]
fn malformed_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE_CONFIG.replace("train.lr = 0.002", "train.lr = banana"),
    );
    let out = run(Some(&cfg), dir.path(), &["generate"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn missing_dataset_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    let out = run(Some(&cfg), dir.path(), &["train"]);
    assert_eq!(code(&out), 4, "stderr: {}", stderr(&out));
}

#[test]
fn diverged_training_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &BASE_CONFIG.replace("train.lr = 0.002", "train.lr = 1e300"),
    );
    assert_eq!(code(&run(Some(&cfg), dir.path(), &["generate"])), 0);
    let out = run(Some(&cfg), dir.path(), &["train"]);
    assert_eq!(code(&out), 3, "stderr: {}", stderr(&out));
}

#[test]
fn pipeline_writes_hash_tagged_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);

    for sub in ["generate", "train", "evaluate", "sample"] {
        let out = run(Some(&cfg), dir.path(), &[sub]);
        assert_eq!(code(&out), 0, "{sub} stderr: {}", stderr(&out));
    }

    for (stem, ext) in [
        ("train", "apde"),
        ("test", "apde"),
        ("checkpoint", "aprm"),
        ("loss", "csv"),
        ("eval", "csv"),
        ("samples", "csv"),
        ("samples", "apde"),
    ] {
        let found = artifacts(dir.path(), stem, ext);
        assert_eq!(found.len(), 1, "expected one {stem}-*.{ext}, got {found:?}");
    }

    let loss = fs::read_to_string(&artifacts(dir.path(), "loss", "csv")[0]).unwrap();
    assert!(loss.starts_with("epoch,step,loss,lr\n"), "loss csv: {loss}");
    let eval = fs::read_to_string(&artifacts(dir.path(), "eval", "csv")[0]).unwrap();
    assert!(
        eval.starts_with("pde,mode,nfe,field,metric,value\n"),
        "eval csv: {eval}"
    );
}

#[test]
fn seed_override_changes_the_artifact_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    assert_eq!(code(&run(Some(&cfg), dir.path(), &["--seed", "7", "generate"])), 0);
    assert_eq!(code(&run(Some(&cfg), dir.path(), &["--seed", "8", "generate"])), 0);
    let found = artifacts(dir.path(), "train", "apde");
    assert_eq!(found.len(), 2, "distinct seeds must give distinct hashes: {found:?}");
}

#[test]
fn resume_refuses_a_checkpoint_from_another_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_a = write_config(dir.path(), BASE_CONFIG);
    assert_eq!(code(&run(Some(&cfg_a), dir.path(), &["generate"])), 0);
    assert_eq!(code(&run(Some(&cfg_a), dir.path(), &["train"])), 0);
    let ckpt = artifacts(dir.path(), "checkpoint", "aprm").remove(0);

    let cfg_b = dir.path().join("other.cfg");
    fs::write(
        &cfg_b,
        format!(
            "{}train.resume = {}\n",
            BASE_CONFIG.replace("train.lr = 0.002", "train.lr = 0.001"),
            ckpt.display()
        ),
    )
    .unwrap();
    assert_eq!(code(&run(Some(&cfg_b), dir.path(), &["generate"])), 0);
    let out = run(Some(&cfg_b), dir.path(), &["train"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("hash"), "stderr: {}", stderr(&out));
}

#[test]
fn sweep_svg_points_match_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE_CONFIG);
    assert_eq!(code(&run(Some(&cfg), dir.path(), &["generate"])), 0);
    let out = run(Some(&cfg), dir.path(), &["sweep"]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let csv = fs::read_to_string(&artifacts(dir.path(), "sweep-unobserved", "csv")[0]).unwrap();
    let mut expected = Vec::new();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let count: f64 = cols[0].parse().unwrap();
        expected.push(("coeff unobserved".to_string(), count, cols[1].parse::<f64>().unwrap()));
        expected.push(("sol unobserved".to_string(), count, cols[2].parse::<f64>().unwrap()));
    }

    let svg = fs::read_to_string(&artifacts(dir.path(), "sweep", "svg")[0]).unwrap();
    let mut points = parse_points(&svg);
    points.sort_by(|a, b| (&a.0, a.1).partial_cmp(&(&b.0, b.1)).unwrap());
    expected.sort_by(|a, b| (&a.0, a.1).partial_cmp(&(&b.0, b.1)).unwrap());
    assert_eq!(points, expected, "plot points must reproduce the csv exactly");
}
