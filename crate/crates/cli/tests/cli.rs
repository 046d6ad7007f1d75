use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cardiotwin::io::Annotated;

fn cardiotwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cardiotwin")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = cardiotwin(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config_of(path: &Path) -> String {
    Annotated::read(path).unwrap().meta["config"].clone()
}

#[test]
fn version_shows_semver_and_build() {
    let v = ok(&["--version"]);
    assert!(v.starts_with(&format!("cardiotwin {} (build ", env!("CARGO_PKG_VERSION"))), "{v}");
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(cardiotwin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cardiotwin(&["mesh-gen", "--edge", "fast"]).status.code(), Some(2));
    // no --out on the command line or in a config
    assert_eq!(cardiotwin(&["activate"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ctmesh");
    fs::write(&bad, "nope").unwrap();
    assert_eq!(cardiotwin(&["validate", s(&bad)]).status.code(), Some(1));
    let out = dir.path().join("x.ctmesh");
    assert_eq!(cardiotwin(&["mesh-gen", "--out", s(&out), "--edge", "0.9"]).status.code(), Some(1));
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let from_file = dir.path().join("from_file.ctmesh");
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        format!("[mesh]\nedge = 0.4\nseed = 3\n\n[run]\nout = {:?}\n", s(&from_file)),
    )
    .unwrap();

    ok(&["mesh-gen", "--config", s(&cfg)]);
    let echoed = config_of(&from_file);
    assert!(echoed.contains(r#""edge":0.4,"#) && echoed.contains(r#""seed":3"#), "{echoed}");
    // untouched sections keep their defaults
    assert!(echoed.contains(r#""alpha_endo":60.0"#), "{echoed}");
    // invocation settings are not echoed
    assert!(!echoed.contains("from_file"), "{echoed}");

    let from_flags = dir.path().join("from_flags.ctmesh");
    ok(&["mesh-gen", "--config", s(&cfg), "--edge", "0.45", "--seed", "4", "--out", s(&from_flags)]);
    let echoed = config_of(&from_flags);
    assert!(echoed.contains(r#""edge":0.45"#) && echoed.contains(r#""seed":4"#), "{echoed}");
}

#[test]
fn single_mesh_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    ok(&["mesh-gen", "--out", s(&p("m.ctmesh")), "--edge", "0.45", "--seed", "2"]);
    let scar = ok(&[
        "scar-gen",
        "--mesh",
        s(&p("m.ctmesh")),
        "--scenario",
        "transmural_ext_anterior",
        "--seed",
        "11",
        "--out",
        s(&p("scar.ctmesh")),
    ]);
    assert!(scar.contains("transmural_ext_anterior"), "{scar}");
    let a = Annotated::read(&p("scar.ctmesh")).unwrap();
    assert_eq!(a.meta["scenario"], "transmural_ext_anterior");
    assert!(a.tissue.is_some());
    assert_eq!(
        cardiotwin(&["scar-gen", "--mesh", s(&p("m.ctmesh")), "--scenario", "nowhere", "--out", s(&p("n.ctmesh"))])
            .status
            .code(),
        Some(1)
    );

    ok(&["activate", "--mesh", s(&p("scar.ctmesh")), "--out", s(&p("act.ctmesh"))]);
    assert!(Annotated::read(&p("act.ctmesh")).unwrap().activation.is_some());
    ok(&[
        "simulate",
        "--mesh",
        s(&p("act.ctmesh")),
        "--ecg-out",
        s(&p("beat.ctecg")),
        "--dump-voltages",
        s(&p("v.ctvolt")),
    ]);
    assert!(p("v.ctvolt").exists());
    let ecg = fs::read_to_string(p("beat.ctecg")).unwrap();
    assert!(ecg.contains("# scenario: transmural_ext_anterior"));
    assert!(ecg.contains("config"), "config is not echoed into the ECG");
    for f in ["m.ctmesh", "scar.ctmesh", "act.ctmesh", "beat.ctecg"] {
        ok(&["validate", s(&p(f))]);
    }
}

#[test]
fn cohort_is_reproducible_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let meshes = dir.path().join("meshes");
    fs::create_dir_all(&meshes).unwrap();
    ok(&["mesh-gen", "--out", s(&meshes.join("a.ctmesh")), "--edge", "0.45", "--seed", "5"]);

    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    for (out, jobs) in [(&one, "1"), (&two, "2")] {
        let msg = ok(&[
            "cohort", "--mesh-dir", s(&meshes), "--out", s(out), "--seed", "11", "--nodes", "256", "--jobs", jobs,
        ]);
        assert!(msg.contains("17 samples, 8 healthy replicates"), "{msg}");
    }
    for f in ["manifest.csv", "replicates.csv", "config.toml"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(two.join(f)).unwrap(), "{f} differs");
    }
    assert!(fs::read_to_string(one.join("config.toml")).unwrap().contains("seed = 11"));
    let v = ok(&["validate", s(&one)]);
    assert!(v.contains("42 files verified"), "{v}");

    let report = dir.path().join("report");
    let msg = ok(&["analyze", "--cohort", s(&one), "--out", s(&report)]);
    assert!(msg.contains("mean |z| qrs_duration_ms"), "{msg}");
    for f in ["dtw_max.csv", "dtw_avg.csv", "features.csv", "zscores.csv", "zscores.svg", "analysis.json"] {
        assert!(report.join(f).exists(), "{f} missing");
    }
    assert!(fs::read_to_string(report.join("analysis.json")).unwrap().contains("\"config\""));

    let victim = fs::read_dir(one.join("samples")).unwrap().next().unwrap().unwrap().path();
    let mut bytes = fs::read(&victim).unwrap();
    bytes[20] ^= 0xff;
    fs::write(&victim, bytes).unwrap();
    assert_eq!(cardiotwin(&["validate", s(&one)]).status.code(), Some(1));
}
