mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{stdout_of, tracesolve, tracesolve_env, Csv};
use tempfile::TempDir;

const SAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/samples/n2_isotropic.toml");

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Header lines and the leading grid columns, which must not move between
/// releases. Set `TRACESOLVE_BLESS=1` to rewrite the files.
fn check_golden(name: &str, csv: &Csv, grid_columns: usize) {
    let mut text = csv.meta.join("\n");
    text.push('\n');
    text.push_str(&csv.columns[..grid_columns].join(","));
    text.push('\n');
    for row in &csv.rows {
        text.push_str(&row[..grid_columns].join(","));
        text.push('\n');
    }
    let path = golden_path(name);
    if std::env::var_os("TRACESOLVE_BLESS").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, &text).unwrap();
        return;
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(text == expected, "{name} differs from {}", path.display());
}

fn default_figure(name: &str) -> Csv {
    let dir = TempDir::new().unwrap();
    Csv::parse(&stdout_of(&tracesolve(dir.path(), &[name, "-o", "-"])))
}

#[test]
fn fig1_default_grid_is_pinned() {
    let csv = default_figure("fig1");
    assert_eq!(csv.columns, ["m", "n", "delta", "F", "width"]);
    assert_eq!(csv.rows.len(), 16 * 100);
    assert_eq!(csv.param("schema"), Some("tracesolve-fig1/1"));
    check_golden("fig1.txt", &csv, 3);
}

#[test]
fn fig2_default_grid_is_pinned() {
    let csv = default_figure("fig2");
    assert_eq!(csv.rows.len(), 8 * 95);
    assert_eq!(csv.param("particles"), Some("8 16 24 32 40 48 56 64"));
    check_golden("fig2.txt", &csv, 2);
}

#[test]
fn fig3_default_grid_is_pinned() {
    let csv = default_figure("fig3");
    assert_eq!(
        csv.columns,
        ["omega", "nu0", "nu1", "nu2", "nu3", "nu4", "nu5"]
    );
    assert_eq!(csv.rows.len(), 121);
    check_golden("fig3.txt", &csv, 1);
}

#[test]
fn fig4_default_grid_is_pinned() {
    let csv = default_figure("fig4");
    assert_eq!(csv.columns, ["s", "phi", "abs_err"]);
    assert_eq!(csv.rows.len(), 1801);
    assert_eq!(csv.param("k1"), Some("-2"));
    check_golden("fig4.txt", &csv, 1);
}

#[test]
fn every_csv_carries_schema_generator_and_seed() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["fig3", "--omega", "0:1:0.5", "-o", "-"][..],
        &["mc", "--delta", "0.5", "--samples", "1000", "-o", "-"],
        &["sym-check", "--particles", "2", "--trials", "3", "-o", "-"],
        &[
            "expsum-cert",
            "--h",
            "1",
            "--k1",
            "-2",
            "--k2",
            "50",
            "-o",
            "-",
        ],
    ] {
        let csv = Csv::parse(&stdout_of(&tracesolve(dir.path(), args)));
        assert!(
            csv.param("schema").unwrap().starts_with("tracesolve-"),
            "{args:?}"
        );
        assert!(csv.param("generator").unwrap().starts_with("tracesolve "));
        assert!(csv.param("seed").is_some());
    }
}

#[test]
fn fig1_rows_at_symmetry_point_and_origin() {
    let dir = TempDir::new().unwrap();
    let out = tracesolve(
        dir.path(),
        &[
            "fig1",
            "--kmax",
            "3",
            "--delta",
            "0:0.7071067811865476:0.7071067811865476",
            "-o",
            "-",
        ],
    );
    let csv = Csv::parse(&stdout_of(&out));
    assert_eq!(csv.rows.len(), 6);
    for r in 0..csv.rows.len() {
        let expected = if r % 2 == 0 { 0.0 } else { 0.5 };
        assert!((csv.f(r, "F") - expected).abs() < 1e-6, "row {r}");
    }
}

#[test]
fn fig2_distance_vanishes_near_one_and_sharp_dominates() {
    let dir = TempDir::new().unwrap();
    let out = tracesolve(
        dir.path(),
        &[
            "fig2",
            "--particles",
            "8,64",
            "--eps",
            "0.5:0.999:0.001",
            "-o",
            "-",
        ],
    );
    let csv = Csv::parse(&stdout_of(&out));
    for r in 0..csv.rows.len() {
        assert!(csv.f(r, "sharp") >= csv.f(r, "phi_form"));
        if csv.f(r, "eps") >= 0.99 {
            assert!(csv.f(r, "distance") < 1e-20);
        }
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let args = [
        "mc",
        "--profile",
        "trace",
        "--particles",
        "3",
        "--delta",
        "0.6",
        "--samples",
        "50000",
        "--seed",
        "9",
        "-o",
        "-",
    ];
    let a = stdout_of(&tracesolve(dir.path(), &args));
    let b = stdout_of(&tracesolve(dir.path(), &args));
    assert_eq!(a, b);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    let c = stdout_of(&tracesolve(dir.path(), &threaded));
    assert_eq!(Csv::parse(&a).rows, Csv::parse(&c).rows);
}

#[test]
fn mc_at_zero_delta_is_zero_and_projection_matches_quadrature() {
    let dir = TempDir::new().unwrap();
    let zero = Csv::parse(&stdout_of(&tracesolve(
        dir.path(),
        &["mc", "--delta", "0", "--samples", "2000", "-o", "-"],
    )));
    assert_eq!(zero.f(0, "estimate"), 0.0);

    let proj = Csv::parse(&stdout_of(&tracesolve(
        dir.path(),
        &[
            "mc",
            "--profile",
            "projection",
            "--m",
            "4",
            "--n",
            "10",
            "--delta",
            "0.6",
            "--samples",
            "100000",
            "-o",
            "-",
        ],
    )));
    let (est, se) = (proj.f(0, "estimate"), proj.f(0, "stderr"));
    // both sandwich ends equal F for a projection
    assert_eq!(proj.f(0, "lower"), proj.f(0, "upper"));
    assert!(
        (est - proj.f(0, "lower")).abs() <= 4.0 * se,
        "{est} +- {se}"
    );

    let trace = Csv::parse(&stdout_of(&tracesolve(
        dir.path(),
        &[
            "mc",
            "--particles",
            "3",
            "--delta",
            "0.5",
            "--samples",
            "100000",
            "-o",
            "-",
        ],
    )));
    let (est, se) = (trace.f(0, "estimate"), trace.f(0, "stderr"));
    assert!(trace.f(0, "lower") - 4.0 * se <= est && est <= trace.f(0, "upper") + 4.0 * se);
}

#[test]
fn mc_rejects_invalid_profiles() {
    let dir = TempDir::new().unwrap();
    let bad = [
        &[
            "mc",
            "--profile",
            "projection",
            "--m",
            "5",
            "--n",
            "5",
            "--delta",
            "0.5",
        ][..],
        &["mc", "--profile", "sideways", "--delta", "0.5"],
        &["mc", "--delta", "1.5"],
    ];
    for args in bad {
        assert_eq!(
            tracesolve(dir.path(), args).status.code(),
            Some(2),
            "{args:?}"
        );
    }
}

#[test]
fn solve_sample_problem_writes_both_solutions() {
    let dir = TempDir::new().unwrap();
    let out = tracesolve(
        dir.path(),
        &["solve", "--problem", SAMPLE, "--out-dir", "run"],
    );
    stdout_of(&out);
    let run = dir.path().join("run");
    let report = Csv::parse(&fs::read_to_string(run.join("n2_isotropic.report.csv")).unwrap());
    let value = |q: &str| -> f64 {
        report.rows.iter().find(|r| r[0] == q).unwrap()[1]
            .parse()
            .unwrap()
    };
    assert!(value("residual_operator") <= 5e-3);
    assert!(value("max_rel_dev") > 0.0);
    for mode in ["operator", "decoupled"] {
        let text = fs::read_to_string(run.join(format!("n2_isotropic.{mode}.toml"))).unwrap();
        let doc: toml::Table = toml::from_str(&text).unwrap();
        assert_eq!(doc["mode"].as_str(), Some(mode));
        assert!(!doc["term"].as_array().unwrap().is_empty());
    }
}

#[test]
fn solve_with_zero_right_hand_side_has_zero_residual() {
    let dir = TempDir::new().unwrap();
    let problem = dir.path().join("zero.toml");
    fs::write(
        &problem,
        "schema = \"tracesolve-problem/1\"\n[system]\nparticles = 2\nmu = 1.0\n[expsum]\ntol = 1e-3\n",
    )
    .unwrap();
    stdout_of(&tracesolve(
        dir.path(),
        &["solve", "--problem", "zero.toml"],
    ));
    let report = fs::read_to_string(dir.path().join("zero.report.csv")).unwrap();
    assert!(report.contains("\nresidual_operator,0\n"));
    assert!(report.contains("\nterms_operator,0\n"));
}

#[test]
fn solve_rejects_schema_violations() {
    let dir = TempDir::new().unwrap();
    let cases = [
        "schema = \"tracesolve-problem/9\"\n[system]\nparticles = 2\nmu = 1.0\n[expsum]\ntol = 1e-3\n",
        "schema = \"tracesolve-problem/1\"\n[system]\nparticles = 2\nmu = -1.0\n[expsum]\ntol = 1e-3\n",
        "schema = \"tracesolve-problem/1\"\n[system]\nparticles = 2\nmu = 1.0\nspin = 3\n[expsum]\ntol = 1e-3\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let path = dir.path().join(format!("bad{i}.toml"));
        fs::write(&path, text).unwrap();
        let out = tracesolve(dir.path(), &["solve", "--problem", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "case {i}");
    }
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| tracesolve(dir.path(), args).status.code();
    assert_eq!(code(&["fig3", "--omega", "0:1:0.5", "-o", "-"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&["fig1", "--delta", "1:0:0.1"]), Some(2));
    assert_eq!(code(&["fig1", "--delta", "0:1.5:0.5", "-o", "-"]), Some(2));
    assert_eq!(
        code(&["expsum-cert", "--tol", "1e-300", "-o", "-"]),
        Some(2)
    );
    let fixed = [
        "expsum-cert",
        "--h",
        "1",
        "--k1",
        "-2",
        "--k2",
        "50",
        "-o",
        "-",
    ];
    assert_eq!(code(&[&fixed[..], &["--tol", "1e-3"]].concat()), Some(0));
    assert_eq!(code(&[&fixed[..], &["--tol", "1e-5"]].concat()), Some(4));
    assert_eq!(
        code(&[
            "expsum-cert",
            "--lo",
            "1e-300",
            "--hi",
            "1e300",
            "--tol",
            "1e-11",
            "-o",
            "-"
        ]),
        Some(3)
    );
    assert_eq!(
        code(&[
            "sym-check",
            "--particles",
            "6",
            "--solve-max",
            "6",
            "--trials",
            "1",
            "-o",
            "-"
        ]),
        Some(3)
    );
}

#[test]
fn out_dir_comes_from_environment_unless_given() {
    let dir = TempDir::new().unwrap();
    let env = [("TRACESOLVE_OUT_DIR", "from_env")];
    stdout_of(&tracesolve_env(
        dir.path(),
        &["fig3", "--omega", "0:1:0.5"],
        &env,
    ));
    assert!(dir.path().join("from_env/fig3.csv").is_file());
    stdout_of(&tracesolve_env(
        dir.path(),
        &["fig3", "--omega", "0:1:0.5", "--out-dir", "flag"],
        &env,
    ));
    assert!(dir.path().join("flag/fig3.csv").is_file());
    stdout_of(&tracesolve(dir.path(), &["fig4", "--s", "0:1:1"]));
    assert!(dir.path().join("fig4.csv").is_file());
}

#[test]
fn config_file_overrides_flags() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "[fig3]\norders = [0, 2]\nomega = \"0:2:1\"\n\n[fig4]\nk2 = 30\n",
    )
    .unwrap();
    let out = tracesolve(
        dir.path(),
        &[
            "--config",
            "run.toml",
            "fig3",
            "--orders",
            "1,3,5",
            "--omega=0:6:0.05",
            "-o",
            "-",
        ],
    );
    let csv = Csv::parse(&stdout_of(&out));
    assert_eq!(csv.columns, ["omega", "nu0", "nu2"]);
    assert_eq!(csv.rows.len(), 3);
    // a section for another subcommand leaves this one alone
    let out = tracesolve(
        dir.path(),
        &[
            "--config",
            "run.toml",
            "fig1",
            "--kmax",
            "1",
            "--delta",
            "0:0.5:0.5",
            "-o",
            "-",
        ],
    );
    assert_eq!(Csv::parse(&stdout_of(&out)).rows.len(), 2);
    let out = tracesolve(
        dir.path(),
        &["--config", "run.toml", "fig4", "--s", "0:0:1", "-o", "-"],
    );
    assert_eq!(Csv::parse(&stdout_of(&out)).param("k2"), Some("30"));
}

#[test]
fn help_lists_every_subcommand() {
    let dir = TempDir::new().unwrap();
    let help = stdout_of(&tracesolve(dir.path(), &["--help"]));
    for sub in [
        "fig1",
        "fig2",
        "fig3",
        "fig4",
        "expsum-cert",
        "solve",
        "mc",
        "sym-check",
    ] {
        assert!(help.contains(sub), "{sub}");
    }
}
