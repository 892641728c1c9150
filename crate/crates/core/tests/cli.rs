//! The `hsail` binary: exit codes, messages and run records.

use std::path::Path;
use std::process::Command;

use hsail::harness::record::{read_manifest, sha256_hex};

fn hsail(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hsail"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn missing_config_is_a_usage_error_naming_the_path() {
    let (code, _, err) = hsail(&["fig5", "--config", "missing.file", "--out", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("missing.file"), "{err}");
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "seed = 1\n[fig5]\nreplicate = 3\n");
    let (code, _, err) = hsail(&["fig5", "--config", &cfg, "--out", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3") && err.contains("replicate"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(hsail(&[]).0, 1);
    assert_eq!(hsail(&["paint"]).0, 1);
    assert_eq!(hsail(&["fig5", "--seed", "abc", "--out", "x"]).0, 1);
    // no output directory anywhere
    assert_eq!(hsail(&["fig5"]).0, 1);
    assert_eq!(hsail(&["--help"]).0, 0);
}

#[test]
fn config_problems_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.toml", "problem = \"sphere\"\n");
    let (code, _, err) = hsail(&["map-elites", "--config", &unknown, "--out", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("sphere"), "{err}");

    let mismatch = write(dir.path(), "m.toml", "experiment = \"sail\"\n");
    let (code, _, err) = hsail(&["fig6", "--config", &mismatch, "--out", "x"]);
    assert_eq!(code, 1);
    assert!(err.contains("sail"), "{err}");

    let two_d = write(dir.path(), "d.toml", "problem = \"rastrigin\"\n");
    assert_eq!(hsail(&["fig5", "--config", &two_d, "--out", "x"]).0, 1);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "occupied", "");
    let cfg = write(
        dir.path(),
        "small.toml",
        "[illumination]\ntotal_evaluations = 200\n",
    );
    let (code, _, err) = hsail(&["map-elites", "--config", &cfg, "--out", &file]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn fig5_writes_two_thousand_optima_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig5.toml", "experiment = \"fig5\"\n");
    let out = dir.path().join("run1");
    let (code, _, err) = hsail(&["fig5", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");

    let optima = std::fs::read_to_string(out.join("fig5_optima.csv")).unwrap();
    let mut lines = optima.lines();
    assert_eq!(
        lines.next(),
        Some("model,replicate,start_index,x_final,f_true")
    );
    assert_eq!(lines.count(), 2000);
    assert!(out.join("fig5_summary.csv").exists());

    // every file is listed with its digest, and nothing else is on disk
    let manifest = read_manifest(&out).unwrap();
    assert_eq!(manifest.experiment, "fig5");
    let mut listed: Vec<String> = manifest
        .files
        .iter()
        .chain(&manifest.timing_files)
        .map(|f| {
            let bytes = std::fs::read(out.join(&f.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.digest, "{}", f.path);
            f.path.clone()
        })
        .collect();
    listed.push("manifest.json".into());
    listed.sort();
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);

    // paired design: both models saw the same training set in every replicate
    let samples = std::fs::read_to_string(out.join("fig5_samples.csv")).unwrap();
    let rows: Vec<Vec<&str>> = samples
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    for rep in 0..100 {
        let digests: Vec<&str> = rows
            .iter()
            .filter(|r| r[1] == rep.to_string())
            .map(|r| r[2])
            .collect();
        assert_eq!(digests.len(), 2);
        assert_eq!(digests[0], digests[1]);
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "me.toml",
        "seed = 1\n[illumination]\ntotal_evaluations = 500\nresolution = [8, 8]\n",
    );
    let run = |seed: Option<&str>, out: &str| {
        let out = dir.path().join(out);
        let mut args = vec![
            "map-elites",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        assert_eq!(hsail(&args).0, 0);
        read_manifest(&out).unwrap()
    };
    let from_config = run(None, "a");
    let explicit_same = run(Some("1"), "b");
    let other = run(Some("2"), "c");
    assert_eq!(from_config.files, explicit_same.files);
    assert_ne!(from_config.files, other.files);
    assert_eq!(other.seed, 2);
}

#[test]
fn shipped_configs_validate() {
    use hsail::harness::cli::prepare;
    use hsail::harness::RunConfig;
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        let kind = cfg
            .experiment
            .expect("shipped configs name their experiment");
        prepare(kind, Some(&path), None, None)
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 6);
}
