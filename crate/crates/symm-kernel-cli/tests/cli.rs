//! End-to-end CLI contract tests: exit codes, CSV schema, reproducibility.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_symm-kernel"))
}

fn tmp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("symm_kernel_cli_{}_{name}", std::process::id()))
}

#[test]
fn sweep_delta_writes_documented_columns() {
    let out = tmp_path("sweep.csv");
    let status = bin()
        .args([
            "sweep-delta",
            "--kernel",
            "rbf",
            "--length-scale",
            "1",
            "--n",
            "8",
            "--deltas",
            "0:2:0.5",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# schema_version=1");
    assert_eq!(lines.next().unwrap(), "# command=sweep-delta");
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "delta,spectral,exact,lambda_n_inv,mean_inv_lambda");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 4);
    std::fs::remove_file(&out).ok();
}

#[test]
fn identical_invocations_produce_identical_bytes() {
    let out_a = tmp_path("repro_a.csv");
    let out_b = tmp_path("repro_b.csv");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args([
                "pairs", "--kernel", "mlp", "--pairs", "6", "--n-rot", "4", "--seed", "9",
                "--classes", "4", "--seeds-per-class", "3", "--out",
            ])
            .arg(out)
            .env_remove("SYMM_KERNEL_DATA_DIR")
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b);
    std::fs::remove_file(&out_a).ok();
    std::fs::remove_file(&out_b).ok();
}

#[test]
fn nonabelian_emits_jitter_column() {
    let out = tmp_path("nonabelian.csv");
    let status = bin()
        .args(["nonabelian", "--separations", "0:1:0.5", "--seed", "7", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "separation,spectral,exact,jitter");
    std::fs::remove_file(&out).ok();
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let status = bin().args(["sweep-delta", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let status = bin().arg("frobnicate").status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_grid_is_a_runtime_error() {
    let out = tmp_path("bad.csv");
    let output = bin()
        .args(["sweep-delta", "--kernel", "rbf", "--deltas", "0:1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("START:STOP:STEP"));
}

#[test]
fn invalid_kernel_parameter_is_rejected() {
    let out = tmp_path("badkernel.csv");
    let output = bin()
        .args([
            "sweep-delta", "--kernel", "rbf", "--length-scale=-1", "--deltas", "0:1:0.5",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("length_scale"));
}

#[test]
fn check_passes_on_a_pristine_tree() {
    let output = bin().arg("check").output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stdout));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("all 10 checks passed"));
    assert_eq!(stdout.matches("PASS").count(), 10);
}

#[test]
fn data_dir_env_is_honored_for_idx_corpora() {
    // A tiny IDX corpus of 2 classes x 2 seeds written to a temp dir; the
    // run must load it (no synthetic-fallback note) and echo the source.
    use symm_kernel::datasets::{write_idx_images, write_idx_labels, RawIdxImages};
    let dir = tmp_path("idxdir");
    std::fs::create_dir_all(&dir).unwrap();
    let side = 10;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2u8 {
        for seed in 0..2u8 {
            for p in 0..side * side {
                let v = (p as u32 * (7 + class as u32 * 3 + seed as u32) % 251) as u8;
                data.push(v);
            }
            labels.push(class);
        }
    }
    write_idx_images(&dir.join("train-images-idx3-ubyte"), &RawIdxImages {
        rows: side,
        cols: side,
        data,
    })
    .unwrap();
    write_idx_labels(&dir.join("train-labels-idx1-ubyte"), &labels).unwrap();
    let out = tmp_path("idx_pairs.csv");
    let output = bin()
        .args([
            "pairs", "--kernel", "mlp", "--pairs", "3", "--n-rot", "4", "--seed", "1",
            "--classes", "2", "--seeds-per-class", "2", "--out",
        ])
        .arg(&out)
        .env("SYMM_KERNEL_DATA_DIR", &dir)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(!String::from_utf8_lossy(&output.stderr).contains("synthetic"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("# data_source=idx"));
    std::fs::remove_file(&out).ok();
    std::fs::remove_dir_all(&dir).ok();
}
