//! End-to-end tests of the command line, driving the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn orbitcert(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitcert"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_c3(dir: &Path) -> PathBuf {
    let out = orbitcert(dir, &["generate", "cycle", "--n", "3", "--out", "c3.json"]);
    assert!(out.status.success(), "{out:?}");
    dir.join("c3.json")
}

#[test]
fn certify_exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());

    let out = orbitcert(
        dir.path(),
        &[
            "certify",
            "--system",
            "c3.json",
            "--epsilon",
            "1/2",
            "--alpha",
            "1/2",
            "--output",
            "cert.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("uniform index 0"));
    let artifact: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("cert.json")).unwrap())
            .unwrap();
    assert_eq!(artifact["uniform_index"], 0);

    let out = orbitcert(
        dir.path(),
        &[
            "certify",
            "--system",
            "c3.json",
            "--epsilon",
            "1/2",
            "--alpha",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = orbitcert(
        dir.path(),
        &[
            "certify",
            "--system",
            "c3.json",
            "--epsilon",
            "0",
            "--alpha",
            "1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shadowing_counterexample_replays_through_verify_witness() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());

    let out = orbitcert(
        dir.path(),
        &[
            "shadowing",
            "--system",
            "c3.json",
            "--epsilon",
            "1/2",
            "--delta",
            "3/2",
            "--output",
            "shadow.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));

    let out = orbitcert(
        dir.path(),
        &[
            "verify-witness",
            "--certificate",
            "shadow.json",
            "--system",
            "c3.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("witness verified"));
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    for name in ["a.json", "b.json"] {
        let out = orbitcert(
            dir.path(),
            &[
                "semi-anosov",
                "--system",
                "c3.json",
                "--alpha",
                "1/2",
                "--output",
                name,
            ],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);

    // Generated fixtures are deterministic under a fixed seed.
    for name in ["r1.json", "r2.json"] {
        let out = orbitcert(
            dir.path(),
            &[
                "generate", "random", "--n", "6", "--seed", "9", "--out", name,
            ],
        );
        assert!(out.status.success());
    }
    let r1 = std::fs::read(dir.path().join("r1.json")).unwrap();
    let r2 = std::fs::read(dir.path().join("r2.json")).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn quotient_pipeline_emits_a_loadable_system() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    let out = orbitcert(
        dir.path(),
        &[
            "quotient",
            "--system",
            "c3.json",
            "--alpha",
            "1/2",
            "--cover",
            "--emit-quotient",
            "q.json",
            "--output",
            "quotient.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    // The emitted quotient parses as a system and certifies expansiveness.
    let out = orbitcert(
        dir.path(),
        &[
            "certify",
            "--system",
            "q.json",
            "--epsilon",
            "1/2",
            "--alpha",
            "1/2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn quotient_accepts_partition_files_and_rejects_incompatible_ones() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    std::fs::write(
        dir.path().join("singles.json"),
        r#"{"classes": [["0"],["1"],["2"]]}"#,
    )
    .unwrap();
    let out = orbitcert(
        dir.path(),
        &[
            "quotient",
            "--system",
            "c3.json",
            "--alpha",
            "1/2",
            "--partition",
            "singles.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("3 classes"));

    // Pairing opposite points of the 4-cycle is not compatible with the
    // rotation: validation error.
    let out = orbitcert(
        dir.path(),
        &["generate", "cycle", "--n", "4", "--out", "c4.json"],
    );
    assert!(out.status.success());
    std::fs::write(
        dir.path().join("pairs.json"),
        r#"{"classes": [["0","1"],["2","3"]]}"#,
    )
    .unwrap();
    let out = orbitcert(
        dir.path(),
        &[
            "quotient",
            "--system",
            "c4.json",
            "--alpha",
            "1/2",
            "--partition",
            "pairs.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn product_generation_matches_the_fibered_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbitcert(
        dir.path(),
        &[
            "generate", "line", "--n", "2", "--scale", "2", "--out", "seg.json",
        ],
    );
    assert!(out.status.success());
    let out = orbitcert(
        dir.path(),
        &[
            "generate",
            "product",
            "--left",
            "seg.json",
            "--right",
            "seg.json",
            "--w1",
            "2",
            "--w2",
            "1/3",
            "--out",
            "prod.json",
        ],
    );
    assert!(out.status.success());
    // The fibered product is 2-semi-expansive: quotient at alpha = 2 has
    // two classes and the whole pipeline certifies.
    let out = orbitcert(
        dir.path(),
        &[
            "quotient",
            "--system",
            "prod.json",
            "--alpha",
            "2",
            "--cover",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("2 classes"));
}

#[test]
fn envelope_exports_verify_under_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    let out = orbitcert(
        dir.path(),
        &[
            "envelope",
            "--system",
            "c3.json",
            "--period",
            "3",
            "--epsilon-grid",
            "12/7",
            "--emit-space",
            "space.json",
            "--emit-envelope",
            "env.json",
            "--output",
            "envelope.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("27 elements"));

    // The exported envelope re-verifies with the level-one tools.
    let out = orbitcert(
        dir.path(),
        &[
            "certify",
            "--system",
            "env.json",
            "--epsilon",
            "1/2",
            "--alpha",
            "1/2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let out = orbitcert(
        dir.path(),
        &["shadowing", "--system", "space.json", "--epsilon", "9/7"],
    );
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn stability_and_openness_hold_on_the_cycle() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    let out = orbitcert(
        dir.path(),
        &[
            "stability",
            "--system",
            "c3.json",
            "--alpha",
            "1/2",
            "--radius",
            "1/8",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("1 candidates, 1 semiconjugacies"));

    let out = orbitcert(
        dir.path(),
        &[
            "openness",
            "--system",
            "c3.json",
            "--epsilon",
            "1/2",
            "--alpha",
            "1/2",
            "--radius",
            "1/2",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn covers_command_round_trips_a_cover_file() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    std::fs::write(
        dir.path().join("cover.json"),
        r#"{"sets": [["0","1"],["1","2"],["2","0"]]}"#,
    )
    .unwrap();
    let out = orbitcert(
        dir.path(),
        &[
            "covers",
            "--system",
            "c3.json",
            "--cover",
            "cover.json",
            "--pull-back-alpha",
            "1/2",
            "--output",
            "covers.json",
        ],
    );
    // The pair cover is semi-expansive: total relation, one-point quotient.
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("semi-expansive: true"));

    // A cover that is not semi-expansive exits 1 with a witness that
    // replays.
    let out = orbitcert(
        dir.path(),
        &["generate", "line", "--n", "4", "--out", "l4.json"],
    );
    assert!(out.status.success());
    std::fs::write(
        dir.path().join("adjacent.json"),
        r#"{"sets": [["0","1"],["1","2"],["2","3"]]}"#,
    )
    .unwrap();
    let out = orbitcert(
        dir.path(),
        &[
            "covers",
            "--system",
            "l4.json",
            "--cover",
            "adjacent.json",
            "--output",
            "adjacent-out.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    let out = orbitcert(
        dir.path(),
        &[
            "verify-witness",
            "--certificate",
            "adjacent-out.json",
            "--system",
            "l4.json",
            "--cover",
            "adjacent.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn region_and_anosov_commands() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    let out = orbitcert(dir.path(), &["region", "--system", "c3.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("epsilon must exceed"));

    let out = orbitcert(
        dir.path(),
        &[
            "anosov-quotient",
            "--system",
            "c3.json",
            "--alpha",
            "1/2",
            "--reverse",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("re-certified: true"));

    // Not semi-Anosov at alpha = 4: exit 1.
    let out = orbitcert(
        dir.path(),
        &["anosov-quotient", "--system", "c3.json", "--alpha", "4"],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn error_artifacts_carry_replayable_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let out = orbitcert(
        dir.path(),
        &["generate", "line", "--n", "4", "--out", "l4.json"],
    );
    assert!(out.status.success());

    // The relation at alpha = 1 on the line is not transitive: exit 1 with
    // a witness triple in the error artifact.
    let out = orbitcert(
        dir.path(),
        &[
            "quotient", "--system", "l4.json", "--alpha", "1", "--output", "err.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let artifact: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("err.json")).unwrap())
            .unwrap();
    assert_eq!(artifact["error"], "NotTransitive");
    assert_eq!(artifact["witness"]["x"], "0");

    let out = orbitcert(
        dir.path(),
        &[
            "verify-witness",
            "--certificate",
            "err.json",
            "--system",
            "l4.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(stdout(&out).contains("witness verified"));
}

#[test]
fn resource_caps_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    write_c3(dir.path());
    let out = orbitcert(
        dir.path(),
        &[
            "--element-cap",
            "5",
            "envelope",
            "--system",
            "c3.json",
            "--period",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{out:?}");
}
