use std::collections::BTreeMap;
use std::process::{Command, Output};

use serde_json::Value;

fn qrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrg"))
        .args(args)
        .output()
        .expect("qrg runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn records(o: &Output) -> Vec<Value> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{e}: {l}")))
        .collect()
}

fn csv_rows(o: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn write_config(text: &str) -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::fs::write(f.path(), text).unwrap();
    f
}

const INLINE_M2: &str = r#"
[inline]
algebra = "matrix2"

[inline.connection]
inner = true

[inline.spinor]
c = [
  [[-0.5, 0.5], [0.5, 0.5]],
  [[0.5, 0.5], [0.5, -0.5]],
]
inner = true
signs = [1, 1, 1]
"#;

#[test]
fn canonical_bundle_is_full_and_even() {
    let o = qrg(&["verify", "--preset", "m2_canonical"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = &records(&o)[0];
    assert_eq!(r["realisation"], "full");
    assert_eq!(r["even"], true);
    assert_eq!(r["pass"], true);
    assert_eq!(r["dirac"], "antihermitian");
    let s = &r["signs"];
    assert_eq!(
        s["antihermitian_reading"]["eps_prime"].as_i64().unwrap(),
        -s["hermitian_reading"]["eps_prime"].as_i64().unwrap()
    );
    for c in r["checks"].as_array().unwrap() {
        assert!(c["tol"].as_f64().is_some(), "{c}");
    }
    assert!(r["lichnerowicz"]["residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn alternate_family_on_the_diagonal_is_almost() {
    let o = qrg(&[
        "verify",
        "--preset",
        "m2_alt_family",
        "--param",
        "s=1",
        "--param",
        "t=1",
        "--param",
        "x=0.3",
        "--param",
        "y=0",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = &records(&o)[0];
    assert_eq!(r["realisation"], "almost");
    assert_eq!(r["dirac"], "neither");
    for name in ["dirac.antihermitian_defect", "dirac.hermitian_defect"] {
        let c = check(r, name);
        assert!(c["value"].as_f64().unwrap() > 1e-3, "{c}");
        assert_eq!(c["pass"], false);
    }
}

#[test]
fn broken_j_fails_with_its_residual() {
    let cfg = write_config(&format!("{INLINE_M2}j = [[1, 0.3], [0, 1]]\n"));
    let o = qrg(&["verify", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = &records(&o)[0];
    assert_eq!(r["pass"], false);
    let jj = check(r, "axiom.JJ");
    assert_eq!(jj["pass"], false);
    assert!(jj["value"].as_f64().unwrap() > 0.1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("axiom.JJ"));
}

#[test]
fn csv_verification_lists_each_check() {
    let o = qrg(&["verify", "--preset", "m2_canonical", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("check,value,tol,pass\n"));
    assert!(text.lines().any(|l| l.starts_with("axiom.JJ,")));
}

/// Eigenvalues `±√(m² + n²)` over the window, counted per lattice point.
fn lattice_oracle(window: i32) -> BTreeMap<i32, usize> {
    let mut counts = BTreeMap::new();
    for m in -window..=window {
        for n in -window..=window {
            *counts.entry(m * m + n * n).or_insert(0) += 1;
        }
    }
    counts
}

#[test]
fn torus_spectrum_matches_the_lattice() {
    let o = qrg(&[
        "spectrum",
        "--preset",
        "torus_spectral",
        "--truncation",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&o);
    let oracle = lattice_oracle(3);
    assert_eq!(rows.len(), 2 * oracle.values().sum::<usize>());
    let mut seen: BTreeMap<(i32, bool), usize> = BTreeMap::new();
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0], k.to_string());
        let (re, im): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!(im.abs() < 1e-9);
        let r2 = (re * re).round() as i32;
        assert!((re.abs() - f64::from(r2).sqrt()).abs() < 1e-9, "{re}");
        let mult: usize = row[3].parse().unwrap();
        let want = if r2 == 0 { 2 * oracle[&0] } else { oracle[&r2] };
        assert_eq!(mult, want, "multiplicity of {re}");
        assert_eq!(row[4], "false");
        *seen.entry((r2, re > 0.0)).or_insert(0) += 1;
    }
    for (r2, k) in &oracle {
        if *r2 == 0 {
            assert_eq!(
                seen[&(0, false)] + seen.get(&(0, true)).unwrap_or(&0),
                2 * k
            );
        } else {
            assert_eq!((seen[&(*r2, true)], seen[&(*r2, false)]), (*k, *k));
        }
    }
}

#[test]
fn canonical_spectrum_is_real_and_symmetric() {
    let o = qrg(&["spectrum", "--preset", "m2_canonical", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let vals: Vec<(f64, f64)> = csv_rows(&o)
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    assert_eq!(vals.len(), 8);
    for (k, (re, im)) in vals.iter().enumerate() {
        assert!(im.abs() < 1e-12);
        assert!((re + vals[7 - k].0).abs() < 1e-10, "{vals:?}");
    }
}

#[test]
fn zero_clifford_action_has_zero_spectrum() {
    let cfg = write_config(
        "[inline]\nalgebra = \"matrix2\"\n[inline.connection]\ninner = true\n[inline.spinor]\n\
         c = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]\ninner = true\nj = [[1, 0], [0, 1]]\nsigns = [1, 1, 1]\n",
    );
    let o = qrg(&["spectrum", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&o);
    assert_eq!(recs[0]["kind"], "spectrum");
    let eig: Vec<_> = recs.iter().filter(|r| r["kind"] == "eigenvalue").collect();
    assert_eq!(eig.len(), 8);
    for e in eig {
        assert_eq!(e["real"].as_f64().unwrap(), 0.0);
        assert_eq!(e["imag"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn thm42_solutions_have_vanishing_mu() {
    let o = qrg(&[
        "solve", "--preset", "m2_thm42", "--starts", "6", "--seed", "11",
    ]);
    assert_eq!(code(&o), 0);
    let recs = records(&o);
    let sols: Vec<_> = recs.iter().filter(|r| r["kind"] == "solution").collect();
    assert!(!sols.is_empty());
    for s in &sols {
        assert!(s["coordinates"]["mu"].as_f64().unwrap().abs() < 1e-7, "{s}");
        assert!(s["residual"].as_f64().unwrap() <= s["tol"].as_f64().unwrap());
        assert_eq!(s["seed"], 11);
        assert!(s["cluster"].as_u64().is_some());
        assert!(!s["invariants"].as_array().unwrap().is_empty());
    }
    let summary = recs.last().unwrap();
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["solutions"].as_u64().unwrap() as usize, sols.len());
}

#[test]
fn appendix_full_clifford_has_no_solutions() {
    let o = qrg(&[
        "solve",
        "--preset",
        "appendix_full_clifford",
        "--starts",
        "3",
        "--seed",
        "5",
    ]);
    assert_eq!(code(&o), 0);
    let recs = records(&o);
    assert_eq!(recs.len(), 1);
    let s = &recs[0];
    assert_eq!(s["solutions"], 0);
    assert!(s["best_residual"].as_f64().unwrap() >= 1e-2);
    assert!(s["certificate"]
        .as_str()
        .unwrap()
        .contains("no solution found"));
}

#[test]
fn zero_starts_give_an_empty_set() {
    let o = qrg(&["solve", "--preset", "torus_lemma32", "--starts", "0"]);
    assert_eq!(code(&o), 0);
    let recs = records(&o);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["solutions"], 0);
    assert!(recs[0]["best_residual"].is_null());
}

#[test]
fn reports_are_deterministic_given_the_seed() {
    let args = [
        "solve", "--preset", "m2_ex42", "--starts", "4", "--seed", "9",
    ];
    let (a, b) = (qrg(&args), qrg(&args));
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = ["verify", "--preset", "torus_spectral"];
    assert_eq!(qrg(&v).stdout, qrg(&v).stdout);
}

#[test]
fn config_file_drives_a_run_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.csv");
    let cfg = write_config(&format!(
        "preset = \"m2_canonical\"\n[params]\neps_prime = 1\n[tolerance]\ncheck = 1e-9\n[output]\npath = \"{}\"\nformat = \"csv\"\n",
        out.display()
    ));
    let o = qrg(&["verify", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(
        text.lines().any(|l| l == "axiom.JJ,0e0,1e-9,true"),
        "{text}"
    );
}

#[test]
fn config_and_usage_errors_exit_with_two() {
    let unknown_key = write_config("preset = \"m2_canonical\"\ncolour = \"red\"\n");
    let bad_inline = write_config("[inline]\nalgebra = \"sphere\"\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify"],
        vec!["verify", "--preset", "no_such_preset"],
        vec!["verify", "--preset", "m2_canonical", "--param", "mu=1"],
        vec!["verify", "--preset", "m2_canonical", "--param", "eps_prime"],
        vec!["verify", "--preset", "m2_canonical", "--tol", "-1"],
        vec!["verify", "--config", "/nonexistent/run.toml"],
        vec!["verify", "--config", unknown_key.path().to_str().unwrap()],
        vec!["verify", "--config", bad_inline.path().to_str().unwrap()],
        vec!["spectrum", "--preset", "torus_euclidean_wqlc"],
        vec!["solve", "--preset", "m2_canonical"],
        vec!["solve", "--preset", "m2_thm42", "--param", "colour=1"],
        vec!["frobnicate"],
    ];
    for args in cases {
        let o = qrg(&args);
        assert_eq!(
            code(&o),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn presets_list_names_everything() {
    let o = qrg(&["presets-list"]);
    assert_eq!(code(&o), 0);
    let recs = records(&o);
    for p in qrg_core::presets::REGISTRY {
        let r = recs
            .iter()
            .find(|r| r["kind"] == "preset" && r["name"] == p.name)
            .unwrap();
        assert_eq!(r["params"].as_array().unwrap().len(), p.params.len());
    }
    for l in qrg_core::solver::layouts::LAYOUTS {
        assert!(recs.iter().any(|r| r["kind"] == "layout" && r["name"] == l));
    }
}

#[test]
fn inline_canonical_data_reproduces_the_preset_verdict() {
    let cfg = write_config(
        r#"
[inline]
algebra = "matrix2"

[inline.connection]
inner = true
braid = [-1, 0, 0, 0, 0, 0, -1, 0, 0, -1, 0, 0, 0, 0, 0, -1]

[inline.spinor]
c = [
  [[-0.5, 0.5], [0.5, 0.5]],
  [[0.5, 0.5], [0.5, -0.5]],
]
sigma_s = [
  [[[0, -1], [1, 0]], [[0, 0], [0, 0]]],
  [[[0, 0], [0, 0]], [[0, 1], [-1, 0]]],
]
inner = true
j = [[1, 0], [0, -1]]
gamma = [[0, [0, 1]], [[0, -1], 0]]
signs = [1, 1, 1]
"#,
    );
    let o = qrg(&["verify", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = &records(&o)[0];
    assert_eq!(r["realisation"], "full");
    assert_eq!(r["even"], true);
    let preset = &records(&qrg(&[
        "verify",
        "--preset",
        "m2_canonical",
        "--param",
        "eps_prime=1",
    ]))[0];
    for name in [
        "axiom.JJ",
        "axiom.SJ",
        "axiom.CJ",
        "axiom.covariance",
        "clifford.full",
        "lichnerowicz",
    ] {
        let (a, b) = (
            check(r, name)["value"].as_f64().unwrap(),
            check(preset, name)["value"].as_f64().unwrap(),
        );
        assert!((a - b).abs() < 1e-12, "{name}: {a} vs {b}");
    }
}
