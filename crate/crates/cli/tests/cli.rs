//! End-to-end runs of the `gpd` binary: exit codes and printed documents.

use std::path::PathBuf;
use std::process::{Command, Output};

use gpd_factor::base::Object;
use gpd_factor::gpd::{indiscrete_of, GFunctor};
use gpd_factor::text::{parse, witness_document};

const CUBE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/counterexample_z2.gpd");
const REGRESSION: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/regression_finset.gpd");

fn gpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpd")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn identity_file() -> PathBuf {
    let g = indiscrete_of(&Object::set_of_size(2).unwrap()).unwrap();
    scratch("identity.gpd", &witness_document(&[("id", &GFunctor::identity(&g))]))
}

#[test]
fn validate_accepts_the_fixtures() {
    for file in [CUBE, REGRESSION] {
        let out = gpd(&["validate", file]);
        assert_eq!(code(&out), 0, "{}", stdout(&out));
        assert!(!stdout(&out).contains("invalid"));
    }
}

#[test]
fn identity_satisfies_the_predicates() {
    let file = identity_file();
    let file = file.to_str().unwrap();
    for predicate in ["discrete-fibration", "final", "in-e", "covering", "trivial-covering"] {
        let out = gpd(&["check", file, "--functor", "id", "--predicate", predicate]);
        assert_eq!(code(&out), 0, "{predicate}: {}", stdout(&out));
        assert!(stdout(&out).starts_with("true"));
    }
}

#[test]
fn back_face_is_not_in_e() {
    let out = gpd(&["check", CUBE, "--functor", "back", "--predicate", "in-e"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("false"));
}

#[test]
fn counterexample_scenario() {
    let out = gpd(&["paper-example", "--group", "Z/2"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    for id in [
        "cube-is-pullback",
        "pi1-square-zero",
        "pi0-square",
        "front-final",
        "back-not-in-e",
        "right-not-regular-epi",
    ] {
        assert!(text.contains(id), "missing {id}");
    }
    assert_eq!(code(&gpd(&["paper-example", "--group", "Z/1"])), 2);
}

#[test]
fn stability_of_the_front_face_fails() {
    let out = gpd(&["stability", CUBE, "--functor", "front", "--along", "all", "--probe", "right"]);
    assert_eq!(code(&out), 1);
    let text = stdout(&out);
    assert!(text.contains("outcome=counterexample"), "{text}");
    // The printed verdict parses back.
    parse(&text).unwrap();

    let out = gpd(&["stability", CUBE, "--functor", "front", "--along", "regular-epi", "--trials", "10"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn factor_output_revalidates() {
    for system in ["em", "comprehensive"] {
        let out = gpd(&["factor", CUBE, "--functor", "front", "--system", system]);
        assert_eq!(code(&out), 0);
        let file = scratch(&format!("factor-{system}.gpd"), &stdout(&out));
        let again = gpd(&["validate", file.to_str().unwrap()]);
        assert_eq!(code(&again), 0, "{}", stdout(&again));
    }
}

#[test]
fn reflections_print_documents() {
    for cmd in ["pi0", "supp", "dec"] {
        let out = gpd(&[cmd, REGRESSION, "--groupoid", "G"]);
        assert_eq!(code(&out), 0);
        parse(&stdout(&out)).unwrap();
    }
    let out = gpd(&["pi1", CUBE, "--groupoid", "DA"]);
    assert_eq!(code(&out), 0);
    // Vertex groups need a group backend.
    assert_eq!(code(&gpd(&["pi1", REGRESSION, "--groupoid", "G"])), 2);
}

#[test]
fn size_cap_is_reported() {
    assert_eq!(code(&gpd(&["--cap", "4", "validate", REGRESSION])), 3);
}

#[test]
fn malformed_input_is_rejected() {
    let file = scratch("broken.gpd", "format 1\nbackend finset\nobject X {0,1\n");
    let out = gpd(&["validate", file.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn suite_writes_a_report() {
    let report = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("suite.txt");
    let out = gpd(&[
        "suite",
        "--backend",
        "finset",
        "--trials",
        "5",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.lines().any(|l| l.starts_with("PROP ")));
    // Group-only properties are skipped on sets.
    assert!(text.lines().any(|l| l.starts_with("SKIP ")));
}
