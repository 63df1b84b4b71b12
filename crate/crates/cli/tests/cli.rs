use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hrushovski::class::{ClassSpec, Membership};
use hrushovski::graph::FinGraph;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn hrush(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hrush")).arg("--out").arg(out).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).display().to_string()
}

/// The value on the first text-report line starting with `key`.
fn value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines().map(str::trim_start).find_map(|l| l.strip_prefix(key)).map(str::trim)
}

#[test]
fn zero_budget_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["run", &cfg("budget-zero.cfg")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn oversized_budget_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["generic", "build", "--budget", "500"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn triangle_is_rejected_with_a_replayable_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["class", "check", &cfg("triangle.g")]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(value(&text, "result").unwrap().starts_with("REJECT forbidden C3"), "{text}");
    let witness = value(&text, "witness").unwrap();
    let g = FinGraph::parse(&std::fs::read_to_string(dir.path().join(witness)).unwrap()).unwrap();
    assert_eq!((g.order(), g.edge_count()), (3, 3));
    assert!(matches!(ClassSpec::p0().in_class(&g).unwrap(), Membership::Rejected(_)));
}

#[test]
fn hexagon_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["class", "check", &cfg("hexagon.g")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "result"), Some("ACCEPT"));
}

#[test]
fn decomposition_of_the_swap_action() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["measure", "decompose", &cfg("c2-example.act")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let comps: Vec<&str> = text.lines().filter_map(|l| l.trim_start().strip_prefix("component")).map(str::trim).collect();
    assert_eq!(comps, ["weight 3/5 orbit {0,1}", "weight 2/5 orbit {2}"]);
    assert_eq!(value(&text, "ergodic"), Some("false"));
}

#[test]
fn adjacent_pair_is_weakly_independent_but_not_d_independent() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["indep", "0", "1", "--weak"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "result"), Some("weakly independent: true; d-independent: false"));
    let o = hrush(dir.path(), &["indep", "0", "1", "--dim"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn triangle_free_class_has_no_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["run", &cfg("c3-only.cfg")]);
    let text = stdout(&o);
    assert!(value(&text, "strong").unwrap().contains("HOLDS"), "{text}");
    let row = text.lines().find(|l| l.contains("row") && l.contains("dist2(x,a) ")).unwrap();
    assert!(row.contains("OPEN"), "{row}");
}

#[test]
fn shipped_config_passes_with_the_headline_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["run", &cfg("girth6-ck.cfg")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("verdict PASS"));
    assert_eq!(value(&text, "dist2(x,a)"), Some("NONFORKING ZERO -> NONFORKING ZERO PASS"), "{text}");
    assert!(value(&text, "strong").unwrap().contains("FAILS"));
    assert!(value(&text, "standard").unwrap().contains("HOLDS"));
    let report = value(&text, "report file").unwrap();
    assert_eq!(std::fs::read_to_string(report).unwrap(), text.rsplit_once("report file").unwrap().0);
}

#[test]
fn records_format_is_tab_separated() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["--format", "records", "run", &cfg("girth6-ck.cfg")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with("report file")).collect();
    assert!(body.iter().all(|l| l.split('\t').count() == 3), "{text}");
    assert_eq!(body.last(), Some(&"report\tverdict\tPASS"));
    assert!(body.contains(&"certificates\tverdict\tPASS"));
}

#[test]
fn certify_zero_uses_companion_formulas() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(
        dir.path(),
        &["measure", "certify-zero", "dist2(x,a)", "--with", "dist2(x,a) & dist2(x,b)", "--with", "E(x,b)"],
    );
    let text = stdout(&o);
    assert!(value(&text, "zero").unwrap_or_default().starts_with("ZERO"), "{text}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn product_rule_sample_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hrush(dir.path(), &["measure", "er-check", "--sample", "20000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let o = hrush(dir.path(), &["measure", "er-check", "--p", "3/2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generic", "build", "--budget", "30", "--seed", "7"];
    let first = stdout(&hrush(dir.path(), &args));
    let before = std::fs::read_dir(dir.path()).unwrap().count();
    let second = stdout(&hrush(dir.path(), &args));
    assert_eq!(first, second);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), before);
}
