use std::path::Path;

use stein_dual::rational::{int, ratio};
use stein_dual::{solve_stein, DiffusionSpec, MultiIndex, Polynomial, SteinSolution};
use stein_dual_cli::{run, Outcome, EXIT_CHECK_FAILED, EXIT_OK, EXIT_REJECTED, EXIT_USAGE};

fn cli(args: &[&str]) -> Outcome {
    run(std::iter::once("stein-dual").chain(args.iter().copied()))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn solve_prints_the_golden_cubic() {
    let out = cli(&[
        "solve",
        "--target",
        "ou",
        "--monomial",
        "3",
        "--format",
        "text",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "f_h(x) = -1/3*x^3 - 2*x\nE h(Z) = 0\n");
}

#[test]
fn stein_identity_suite_passes_for_beta() {
    let out = cli(&[
        "check",
        "stein-identity",
        "--target",
        "beta",
        "--params",
        "a=2,b=3",
        "--max-degree",
        "8",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("8/8 pass"), "{}", out.stdout);
}

#[test]
fn bounds_on_unbounded_support_are_rejected() {
    let out = cli(&[
        "bounds",
        "--target",
        "ou",
        "--monomial",
        "4",
        "--order",
        "1",
    ]);
    assert_eq!(out.code, EXIT_REJECTED);
    assert!(out.stderr.contains("unbounded support"), "{}", out.stderr);
    assert_eq!(out.stderr.lines().count(), 1);
}

#[test]
fn beta_bounds_report_the_reference() {
    let out = cli(&[
        "bounds",
        "--target",
        "beta",
        "--params",
        "a=2,b=3",
        "--monomial",
        "1",
        "--order",
        "1",
    ]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(
        out.stdout,
        "sup |D^(1) f_h| <= 1/5 on the unit box\nreference bound = 1/5\n"
    );
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["solve", "--target", "ou"][..],
        &["solve", "--target", "ou", "--monomial", "1,2"],
        &[
            "solve",
            "--target",
            "beta",
            "--params",
            "a=0.5,b=2",
            "--monomial",
            "2",
        ],
        &[
            "solve",
            "--target",
            "beta",
            "--params",
            "a=-1,b=2",
            "--monomial",
            "2",
        ],
        &["solve", "--target", "weibull", "--monomial", "2"],
        &["solve", "--monomial", "2"],
        &["frobnicate"],
        &[
            "simulate",
            "dual",
            "--target",
            "ou",
            "--monomial",
            "2",
            "--x",
            "0",
        ],
        &[
            "simulate",
            "dual",
            "--target",
            "ou",
            "--monomial",
            "2",
            "--x",
            "0,1",
            "--t",
            "1",
        ],
    ] {
        let out = cli(args);
        assert_eq!(out.code, EXIT_USAGE, "{args:?}: {}", out.stdout);
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let out = cli(&[flag]);
        assert_eq!(out.code, EXIT_OK);
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn moment_compares_with_closed_form() {
    let out = cli(&[
        "moment",
        "--target",
        "dirichlet",
        "--params",
        "a1=1,a2=1,a3=1",
        "--monomial",
        "1,1",
    ]);
    assert_eq!(out.code, EXIT_OK);
    assert_eq!(
        out.stdout,
        "E[x1*x2](Z) = 1/12\nclosed form = 1/12 (agree)\n"
    );
    let out = cli(&[
        "moment",
        "--target",
        "gamma",
        "--params",
        "r=2,lambda=1/2",
        "--monomial",
        "2",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["moment"], "24");
    assert_eq!(v["agree"], true);
}

#[test]
fn custom_spec_files_are_accepted_and_rejected_by_structure() {
    let dir = tempfile::tempdir().unwrap();
    let x = Polynomial::var(1, 0);
    let explosive =
        DiffusionSpec::custom(vec![x.clone()], vec![vec![Polynomial::constant(1, int(1))]])
            .unwrap();
    let path = write(
        dir.path(),
        "explosive.json",
        &serde_json::to_string(&explosive).unwrap(),
    );
    let out = cli(&["solve", "--spec", &path, "--monomial", "2"]);
    assert_eq!(out.code, EXIT_REJECTED, "{}", out.stderr);
    let out = cli(&["validate", "--spec", &path, "--max-degree", "3"]);
    assert_eq!(out.code, EXIT_REJECTED);
    assert!(out.stdout.contains("FAIL x^2"), "{}", out.stdout);

    let cubic = &(&x * &x) * &x;
    let steep = DiffusionSpec::custom(
        vec![cubic.scale(&int(3))],
        vec![vec![Polynomial::constant(1, int(1))]],
    )
    .unwrap();
    let path = write(
        dir.path(),
        "steep.json",
        &serde_json::to_string(&steep).unwrap(),
    );
    let out = cli(&["solve", "--spec", &path, "--monomial", "2"]);
    assert_eq!(out.code, EXIT_REJECTED);
    assert!(out.stderr.contains("degree"), "{}", out.stderr);

    let path = write(dir.path(), "broken.json", "{\"family\":");
    assert_eq!(
        cli(&["solve", "--spec", &path, "--monomial", "2"]).code,
        EXIT_USAGE
    );
}

#[test]
fn polynomial_test_functions_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = Polynomial::zero(1);
    h.add_term(MultiIndex::univariate(3), int(1));
    h.add_term(MultiIndex::univariate(1), ratio(1, 2));
    h.add_term(MultiIndex::univariate(0), int(4));
    let path = write(dir.path(), "h.json", &serde_json::to_string(&h).unwrap());
    let out = cli(&["solve", "--target", "ou", "--h", &path]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stderr);
    assert_eq!(out.stdout, "f_h(x) = -1/3*x^3 - 5/2*x\nE h(Z) = 4\n");
}

#[test]
fn json_solutions_round_trip() {
    let out = cli(&[
        "solve",
        "--target",
        "beta",
        "--params",
        "alpha=3/2,beta=2",
        "--monomial",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(out.code, EXIT_OK);
    let parsed: SteinSolution = serde_json::from_str(&out.stdout).unwrap();
    let spec = DiffusionSpec::beta(ratio(3, 2), int(2)).unwrap();
    let direct = solve_stein(&spec, &MultiIndex::univariate(4)).unwrap();
    assert_eq!(parsed.f_h, direct.f_h);
    assert_eq!(parsed.stationary_moment, direct.stationary_moment);
    assert_eq!(
        format!("{}\n", serde_json::to_string_pretty(&parsed).unwrap()),
        out.stdout
    );
}

#[test]
fn spec_json_round_trips_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let spec =
        DiffusionSpec::multi_ou(&[vec![int(2), ratio(-1, 2)], vec![ratio(-1, 2), int(1)]]).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<DiffusionSpec>(&text).unwrap(), spec);
    let path = write(dir.path(), "mou.json", &text);
    let from_file = cli(&[
        "solve",
        "--spec",
        &path,
        "--monomial",
        "2,2",
        "--format",
        "json",
    ]);
    let from_params = cli(&[
        "solve",
        "--target",
        "multi_ou",
        "--params",
        "sigma_1_1=2,sigma_1_2=-1/2,sigma_2_2=1",
        "--monomial",
        "2,2",
        "--format",
        "json",
    ]);
    assert_eq!(from_file.code, EXIT_OK, "{}", from_file.stderr);
    assert_eq!(from_file.stdout, from_params.stdout);
}

#[test]
fn check_suites_run() {
    let out = cli(&[
        "check",
        "moments",
        "--target",
        "dirichlet",
        "--params",
        "a1=1/2,a2=2,a3=1",
        "--max-degree",
        "4",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
    let out = cli(&[
        "check",
        "quadrature",
        "--target",
        "ou",
        "--max-degree",
        "4",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["total"], 20);
    let out = cli(&[
        "check",
        "quadrature",
        "--target",
        "beta",
        "--params",
        "a=1,b=1",
    ]);
    assert_eq!(out.code, EXIT_USAGE);
}

#[test]
fn failed_checks_exit_three() {
    // At degree 20 the solution is of order 1e9 at |x| = 2, beyond what an
    // absolute 1e-8 comparison in double precision can resolve.
    let out = cli(&[
        "check",
        "quadrature",
        "--target",
        "ou",
        "--max-degree",
        "20",
    ]);
    assert_eq!(out.code, EXIT_CHECK_FAILED, "{}", out.stdout);
    assert!(out.stdout.contains("FAIL x^20 at 2"), "{}", out.stdout);
    let out = cli(&[
        "check",
        "semigroup",
        "--target",
        "ou",
        "--monomial",
        "2",
        "--x",
        "3",
        "--t",
        "0.5",
        "--samples",
        "4000",
    ]);
    assert_eq!(out.code, EXIT_OK, "{}", out.stdout);
}

#[test]
fn simulations_honour_negative_points_and_seeds() {
    let base = [
        "simulate",
        "dual",
        "--target",
        "ou",
        "--monomial",
        "3",
        "--x",
        "-1.5",
        "--t",
        "0.5",
        "--samples",
        "5000",
    ];
    let a = cli(&[&base[..], &["--seed", "9", "--format", "json"]].concat());
    let b = cli(&[&base[..], &["--seed", "9", "--format", "json"]].concat());
    assert_eq!(a.code, EXIT_OK, "{}", a.stderr);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&a.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["n"], 5000);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 4);

    let ends = cli(&[
        "simulate",
        "diffusion",
        "--target",
        "beta",
        "--params",
        "a=2,b=3",
        "--x",
        "0.4",
        "--t",
        "0.1",
        "--samples",
        "10",
        "--endpoints",
    ]);
    assert_eq!(ends.code, EXIT_OK, "{}", ends.stderr);
    assert_eq!(ends.stdout.lines().count(), 10);
}

#[test]
fn feynman_kac_beyond_the_horizon_is_refused() {
    let out = cli(&[
        "simulate",
        "feynman-kac",
        "--target",
        "ou",
        "--monomial",
        "8",
        "--x",
        "1",
        "--t",
        "2",
        "--samples",
        "10",
    ]);
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("error"), "{}", out.stderr);
}

#[test]
fn validate_reports_signed_weights() {
    let out = cli(&[
        "validate",
        "--target",
        "multi_ou",
        "--params",
        "sigma_1_1=1,sigma_1_2=-1/2,sigma_2_2=1",
        "--max-degree",
        "3",
    ]);
    assert_eq!(out.code, EXIT_OK);
    assert!(
        out.stdout.contains("9/9 pass (3 with signed weights)"),
        "{}",
        out.stdout
    );
    assert_eq!(
        cli(&["validate", "--target", "ou", "--max-degree", "0"]).code,
        EXIT_USAGE
    );
}
