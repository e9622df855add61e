use std::fs;
use std::process::{Command, Output};

fn proot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_field(o: &Output, field: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).expect("quote JSON");
    v[field].as_f64().unwrap()
}

fn quote(q: &str, extra: &[&str]) -> Output {
    let mut args = vec!["quote", "--x", "100", "--y", "100", "--q", q];
    args.extend_from_slice(extra);
    proot(&args)
}

fn simulate(q: &str, path: &str, out: &str) -> Output {
    proot(&[
        "simulate", "--x", "100", "--y", "100", "--q", q, "--path", path, "--out", out,
    ])
}

#[test]
fn quote_examples() {
    let o = quote(
        "-1",
        &["--side", "buy-x", "--amount", "20", "--kind", "out"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert!((json_field(&o, "amount_in") - 100.0 / 3.0).abs() < 1e-9);

    let o = quote("1", &["--side", "sell-x", "--amount", "30", "--kind", "in"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json_field(&o, "amount_out"), 30.0);

    let o = quote(
        "0.5",
        &["--side", "buy-x", "--amount", "101", "--kind", "out"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("depletion"), "{}", stderr(&o));
    assert_eq!(stderr(&o).trim().lines().count(), 1);
}

#[test]
fn quote_rejects_bad_input() {
    assert_eq!(
        quote("-1", &["--side", "up", "--amount", "1", "--kind", "in"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        quote("2", &["--side", "buy-x", "--amount", "1", "--kind", "in"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        quote("-1", &["--side", "buy-x", "--amount", "-5", "--kind", "in"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let out = dir.path().join("report.csv");
    let (p, r) = (path.to_str().unwrap(), out.to_str().unwrap());

    fs::write(&path, "t,price\n0,1\n1,2\n").unwrap();
    let o = simulate("-1", p, r);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("il_realized=-0.028595479209"));
    let report = fs::read_to_string(&out).unwrap();
    assert!(report.starts_with("t,price,x,y,u_pool,u_hodl,il_realized,il_closed,abs_gap\n"));
    let last: Vec<&str> = report.lines().last().unwrap().split(',').collect();
    assert_eq!(last[6], "-0.028595479209");
    assert!(last[8].parse::<f64>().unwrap() <= 1e-9);

    let o = simulate("1", p, r);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cannot align"));

    fs::write(&path, "t,price\n0,3\n1,3\n2,3\n").unwrap();
    assert_eq!(simulate("-1", p, r).status.code(), Some(0));
    let report = fs::read_to_string(&out).unwrap();
    assert!(report
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(6) == Some("0")));

    fs::write(&path, "t,price\n0,-1\n").unwrap();
    let o = simulate("-1", p, r);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        simulate("-1", missing.to_str().unwrap(), r).status.code(),
        Some(3)
    );
}

#[test]
fn figures_are_deterministic_and_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for f in [&a, &b] {
        let o = proot(&[
            "figure",
            "--id",
            "il_vs_alpha",
            "--out",
            f.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("series,param,xvalue,yvalue\n"));
    assert!(text.lines().any(|l| l == "il,0,4,-0.2"));
    assert!(text
        .lines()
        .filter(|l| l.split(',').nth(2) == Some("1"))
        .all(|l| l.ends_with(",0")));

    let o = proot(&[
        "figure",
        "--id",
        "price_impact",
        "--out",
        a.to_str().unwrap(),
        "--q",
        "-2,0.25",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.contains("price_impact,-2,0,1\n") && text.contains("price_impact,0.25,0,1\n"));

    let o = proot(&["figure", "--id", "nope", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = proot(&[
        "figure",
        "--id",
        "greeks",
        "--out",
        "/nonexistent-dir/x.csv",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let mut args = vec![
        "verify",
        "--seed",
        "7",
        "--duality-cases",
        "20",
        "--consistency-samples",
        "1000",
        "--membership-points",
        "20",
    ];
    let o = proot(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("all checks passed"));

    args.push("--negative-control-as-positive");
    let o = proot(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));

    let o = proot(&[
        "verify",
        "--json",
        "--duality-cases",
        "5",
        "--consistency-samples",
        "1000",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn default_verify_passes() {
    let o = proot(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
