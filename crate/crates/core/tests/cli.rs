//! End-to-end runs of the `nrcprov` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nrcprov::bundle::SliceBundle;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn nrcprov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrcprov"))
        .args(args)
        .output()
        .expect("the binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn fig() -> String {
    fixture("fig.json").display().to_string()
}

#[test]
fn tracking_prints_one_line_per_query() {
    let aliases = fixture("fig-aliases.json").display().to_string();
    let all = fixture("all.nrc").display().to_string();
    let out = nrcprov(&["track", "--data", &fig(), "--aliases", &aliases, &all]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("[7] 4^{a1,a2,a3}"));
}

#[test]
fn reruns_are_byte_identical() {
    let all = fixture("all.nrc").display().to_string();
    let args = [
        "--json",
        "verify",
        "--data",
        &fig(),
        "--trials",
        "50",
        "--seed",
        "9",
        &all,
    ];
    let first = nrcprov(&args);
    let second = nrcprov(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(first.stdout, second.stdout);
    let reports: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(reports["passed"], true);
    assert_eq!(reports["queries"].as_array().unwrap().len(), 12);
}

#[test]
fn slices_from_the_command_line() {
    let sigma = fixture("sigma.nrc").display().to_string();
    let out = nrcprov(&[
        "slice",
        "backward",
        "--data",
        &fig(),
        "--path",
        "result[0].A",
        &sigma,
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "R[0].A\n");

    let ctx = fixture("fig-ctx.json").display().to_string();
    let sum = fixture("sumA.nrc").display().to_string();
    let out = nrcprov(&["slice", "static", "--ctx", &ctx, "--path", "result", &sum]);
    assert_eq!(stdout(&out), "R.elem.A\n");
}

#[test]
fn bundles_written_to_a_file_validate() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("bundle.json");
    let target_arg = target.display().to_string();
    let ctx = fixture("fig-ctx.json").display().to_string();
    let diff = fixture("diff.nrc").display().to_string();
    let out = nrcprov(&[
        "bundle",
        "--data",
        &fig(),
        "--ctx",
        &ctx,
        "-o",
        &target_arg,
        &diff,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bundle = SliceBundle::from_json(&fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(bundle.schema, "nrcprov/1");
    assert!(bundle.analysis.is_some());
    bundle.validate().unwrap();
}

#[test]
fn exit_codes_classify_failures() {
    assert_eq!(code(&nrcprov(&["check", "-e", "1 +"])), 1);
    assert_eq!(code(&nrcprov(&["check", "-e", "1 + true"])), 1);
    assert_eq!(
        code(&nrcprov(&["run", "--data", "/nonexistent.json", "-e", "1"])),
        2
    );
    assert_eq!(code(&nrcprov(&["run", "--data", &fig(), "-e", "T"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"R": {"bag": [1, true]}}"#).unwrap();
    assert_eq!(
        code(&nrcprov(&[
            "run",
            "--data",
            &bad.display().to_string(),
            "-e",
            "R"
        ])),
        2
    );

    let pi = fixture("piA.nrc").display().to_string();
    assert_eq!(
        code(&nrcprov(&[
            "slice",
            "forward",
            "--data",
            &fig(),
            "--color",
            "nope",
            &pi
        ])),
        4
    );
    assert_eq!(
        code(&nrcprov(&[
            "slice",
            "backward",
            "--data",
            &fig(),
            "--path",
            "result[9]",
            &pi
        ])),
        4
    );
}

#[test]
fn budget_overruns_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.json");
    fs::write(&data, r#"{"x": {"bag": [{"bag": [1, 2]}, {"bag": [3]}]}}"#).unwrap();
    let data = data.display().to_string();
    let out = nrcprov(&[
        "verify",
        "--data",
        &data,
        "--trials",
        "5",
        "--minimality",
        "--domain",
        "0,1,2,3",
        "--cap",
        "10",
        "-e",
        "x diff x",
    ]);
    assert_eq!(code(&out), 3);
}
