use serde_json::Value;
use stein_dual_web::api;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn solve_reports_polynomial_and_curve() {
    let v = parse(&api::solve("ou", "", "3").unwrap());
    assert_eq!(v["f_h"], "-1/3*x^3 - 2*x");
    assert_eq!(v["moment"], "0");
    let xs = v["curve"]["x"].as_array().unwrap();
    let fs = v["curve"]["f_h"].as_array().unwrap();
    assert_eq!(xs.len(), api::CURVE_POINTS);
    let (x, f) = (xs[80].as_f64().unwrap(), fs[80].as_f64().unwrap());
    assert!((f - (-x.powi(3) / 3.0 - 2.0 * x)).abs() < 1e-12);

    let v = parse(&api::solve("dirichlet", "a1=1,a2=1,a3=1", "1,1").unwrap());
    assert_eq!(v["moment"], "1/12");
    assert!(v["curve"].is_null());
}

#[test]
fn errors_are_messages() {
    assert!(api::solve("beta", "a=0.5,b=1", "2")
        .unwrap_err()
        .contains("0.5"));
    assert!(api::solve("ou", "", "1,1").is_err());
    assert!(api::semigroup_curve("ou", "", "2", "1", -1.0, 100, 1).is_err());
    assert!(api::semigroup_curve("ou", "", "2", "1", 1.0, 0, 1).is_err());
}

#[test]
fn dag_matches_the_worked_dirichlet_example() {
    let v = parse(&api::dual_dag("dirichlet", "a1=1,a2=1,a3=1", "1,1").unwrap());
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes[0]["label"], "x1*x2");
    assert_eq!(nodes[0]["exit_rate"], "8");
    assert_eq!(nodes[0]["absorption"], "1/12");
    assert_eq!(nodes.last().unwrap()["label"], "1");
    assert!(nodes.last().unwrap()["exit_rate"].is_null());
    let from_root: Vec<&Value> = v["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["from"] == 0)
        .collect();
    assert_eq!(from_root.len(), 2);
    assert!(from_root.iter().all(|e| e["weight"] == "1"));
}

#[test]
fn exact_semigroup_matches_the_ou_cubic() {
    let v = parse(&api::semigroup_curve("ou", "", "3", "1", 0.5, 20_000, 4).unwrap());
    let times = v["t"].as_array().unwrap();
    let exact = v["exact"].as_array().unwrap();
    let est = v["estimate"].as_array().unwrap();
    let se = v["std_error"].as_array().unwrap();
    for i in 0..times.len() {
        let t = times[i].as_f64().unwrap();
        let truth = (-3.0 * t).exp() + 3.0 * (-t).exp() * (1.0 - (-2.0 * t).exp());
        assert!((exact[i].as_f64().unwrap() - truth).abs() < 1e-7, "t={t}");
        let z = (est[i].as_f64().unwrap() - truth) / se[i].as_f64().unwrap().max(1e-12);
        assert!(z.abs() < 4.5, "t={t}: z={z}");
    }
    assert_eq!(v["limit"], 0.0);
}
