use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hhinvex"));
    c.env_remove("HHINVEX_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn validate(doc: &Value) {
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(repo_file("schema/report.schema.json")).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "schema errors: {errors:#?}");
}

fn json(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    validate(&v);
    v
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn parse_examples() {
    let out = run(&["parse", "--expr", "x^2", "--vars", "x"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["derivatives"]["x"]["expression"], "2*x^1");

    let v = json(&run(&["parse", "--expr", "exp(x)", "--vars", "x"]));
    assert_eq!(v["derivatives"]["x"]["expression"], "exp(x)");

    let out = run(&["parse", "--expr", "x +", "--vars", "x"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 3"));
}

#[test]
fn classify_examples() {
    let out = run(&[
        "classify", "--f", "x^2", "--eta", "v-u", "--domain", "-1", "1", "--target", "preinvex",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["certified"], true);

    let out = run(&[
        "classify", "--f", "x^3", "--eta", "v-u", "--domain", "-1", "1", "--target", "preinvex",
    ]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["certificate"]["class"], "none");
    let w = &v["certificate"]["witness"];
    let (u, vv, t) = (num(&w["u"]), num(&w["v"]), num(&w["t"]));
    let margin = (u + t * (vv - u)).powi(3) - ((1.0 - t) * u.powi(3) + t * vv.powi(3));
    assert!(margin > 0.1, "witness margin {margin}");

    assert_eq!(code(&run(&["classify", "--f", "x^2", "--domain", "-1", "1"])), 1);
    assert_eq!(
        code(&run(&[
            "classify", "--f", "x^2", "--eta", "v-u", "--domain", "-1", "1", "--target", "convex"
        ])),
        1
    );
}

#[test]
fn classify_derivative_power() {
    let args = [
        "classify",
        "--f",
        "x^3 - 3*x",
        "--eta",
        "v-u",
        "--domain",
        "-2",
        "2",
        "--derivative-power",
        "1",
    ];
    assert_eq!(code(&run(&args)), 2);
    let args = [
        "classify",
        "--f",
        "x^3",
        "--eta",
        "v-u",
        "--domain",
        "-2",
        "2",
        "--derivative-power",
        "1",
    ];
    assert_eq!(code(&run(&args)), 0);
    let args = [
        "classify",
        "--f",
        "x^3",
        "--eta",
        "v-u",
        "--domain",
        "-2",
        "2",
        "--derivative-power",
        "-1",
    ];
    assert_eq!(code(&run(&args)), 1);
}

#[test]
fn verify_examples() {
    let out = run(&[
        "verify",
        "--f",
        "x^2",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "T3.1",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let e = &v["evaluations"][0];
    assert!((num(&e["lhs"]) - 1.0 / 12.0).abs() <= 1e-12);
    assert!((num(&e["rhs"]) - 0.25).abs() <= 1e-15);
    assert_eq!(e["verdict"], "holds");

    let out = run(&[
        "verify",
        "--f",
        "x^2",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "T3.2",
        "--p",
        "0.5",
    ]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());

    let out = run(&[
        "verify",
        "--f",
        "exp(x)",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "Tz",
    ]);
    assert_eq!(code(&out), 0);
    let rhs = num(&json(&out)["evaluations"][0]["rhs"]);
    let sqrt_e = 0.5f64.exp();
    assert!((rhs - (sqrt_e - 1.0).powi(2)).abs() <= 1e-14);
    assert!((rhs - 0.420839).abs() <= 1e-6);
}

#[test]
fn verify_usage_errors() {
    let base = ["verify", "--f", "x^2", "--eta", "v-u", "--a", "0", "--b", "1"];
    let with = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        code(&run(&args))
    };
    assert_eq!(with(&[]), 1);
    assert_eq!(with(&["--theorems", "T9.9"]), 1);
    assert_eq!(with(&["--theorems", "T3.4"]), 1);
    assert_eq!(
        code(&run(&[
            "verify",
            "--f",
            "x^2",
            "--eta",
            "v-u",
            "--a",
            "1",
            "--b",
            "0",
            "--theorems",
            "T3.1"
        ])),
        1
    );
    assert_eq!(
        code(&run(&[
            "verify",
            "--f",
            "x^2 +",
            "--eta",
            "v-u",
            "--a",
            "0",
            "--b",
            "1",
            "--theorems",
            "T3.1"
        ])),
        1
    );
}

#[test]
fn verify_csv_has_fixed_columns() {
    let out = run(&[
        "verify",
        "--f",
        "x^2",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "T3.1,T3.4,T2.1",
        "--q",
        "2",
        "--out",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("theorem,a,b,eta_ab,p,q,lhs,rhs,margin,error_budget,verdict,kernel")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "T3.1");
    assert_eq!(rows[0][7], "2.5000000000000000e-1");
    assert_eq!(rows[1][5], "2.0000000000000000e0");
    assert_eq!(rows[2][0], "HHchain");
    assert!(rows.iter().all(|r| r.len() == 12 && r[10] == "holds"));
}

#[test]
fn violated_bound_exits_two() {
    // wrong derivative override: gap 1/5 - 1/16 against rhs 1/8
    let out = run(&[
        "verify",
        "--f",
        "x^4",
        "--derivative",
        "x",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "T3.1",
    ]);
    let v = json(&out);
    let e = &v["evaluations"][0];
    assert_eq!(e["verdict"], "violated", "{e}");
    assert_eq!(code(&out), 2);
}

#[test]
fn near_miss_is_inconclusive() {
    // rhs = 0.333333331 / 4 sits 5.8e-10 below the gap 1/12, inside the 1e-9 tolerance
    let out = run(&[
        "verify",
        "--f",
        "x^2",
        "--derivative",
        "0.333333331",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "T3.1,T2.1",
    ]);
    let v = json(&out);
    assert_eq!(v["evaluations"][0]["verdict"], "inconclusive");
    assert_eq!(v["evaluations"][1]["verdict"], "holds");
    assert_eq!(code(&out), 3);
}

#[test]
fn multivar_examples() {
    let out = run(&[
        "multivar",
        "--f",
        "exp(z1 + z2)",
        "--x",
        "0,0",
        "--y",
        "1,1",
        "--a",
        "0.2",
        "--b",
        "0.8",
        "--theorem",
        "Eq1",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let e = &v["evaluation"]["evaluation"];
    assert!((num(&e["lhs"]) - 0.083029).abs() <= 1e-6);
    assert!((num(&e["rhs"]) - 0.420122).abs() <= 1e-6);
    assert_eq!(e["verdict"], "holds");

    let out = run(&[
        "multivar",
        "--f",
        "exp(z1 + z2)",
        "--x",
        "0,0",
        "--y",
        "1,1",
        "--a",
        "0",
        "--b",
        "0.8",
    ]);
    assert_eq!(code(&out), 1);
    let out = run(&[
        "multivar",
        "--f",
        "exp(z1 + z2)",
        "--x",
        "0,0",
        "--y",
        "1",
        "--a",
        "0.2",
        "--b",
        "0.8",
    ]);
    assert_eq!(code(&out), 1);
    let out = run(&[
        "multivar",
        "--f",
        "exp(z1 + z2)",
        "--x",
        "0,0",
        "--y",
        "1,1",
        "--a",
        "0.2",
        "--b",
        "0.8",
        "--theorem",
        "Tz",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn multivar_zero_eta_is_the_degenerate_limit() {
    let (a, b) = (0.2, 0.8);
    let out = run(&[
        "multivar",
        "--f",
        "exp(z1 + z2)",
        "--x",
        "0.5,-0.25",
        "--y",
        "1,1",
        "--eta",
        "0; 0",
        "--a",
        "0.2",
        "--b",
        "0.8",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let e = &v["evaluation"]["evaluation"];
    let fx = 0.25f64.exp();
    assert!(num(&e["lhs"]).abs() <= 1e-14);
    assert!((num(&e["rhs"]) - (b - a) * fx / 4.0).abs() <= 1e-14 * fx);
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn campaign(config: &Path, out: &Path, threads: Option<&str>, search: bool) -> Output {
    let mut c = bin();
    c.args(["campaign", "--config"]).arg(config).arg("--out").arg(out);
    if search {
        c.arg("--search");
    }
    if let Some(t) = threads {
        c.env("HHINVEX_THREADS", t);
    }
    c.output().expect("binary runs")
}

#[test]
fn sample_config_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_file("docs/campaign.sample.json");
    let parsed: Value = serde_json::from_str(&fs::read_to_string(&config).unwrap()).unwrap();
    let theorems = parsed["theorems"].as_array().unwrap().len();
    assert_eq!(parsed["trials"], 100);

    let out = campaign(&config, dir.path(), None, false);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    validate(&summary);
    assert_eq!(out.stdout, fs::read(dir.path().join("summary.json")).unwrap());
    assert_eq!(summary["summary"]["violations"], 0);
    assert_eq!(summary["summary"]["relaxation"]["failures"], 0);

    let mut reader = csv::Reader::from_path(dir.path().join("trials.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        &header[..7],
        ["seed", "trial", "theorem", "lhs", "rhs", "margin", "verdict"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 100 * theorems);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0].parse::<u64>().unwrap(), 2024);
        assert_eq!(r[1].parse::<usize>().unwrap(), i / theorems);
        assert!(["holds", "skipped", "inconclusive"].contains(&&r[6]), "row {i}: {r:?}");
    }
}

#[test]
fn empty_and_invalid_campaigns() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_config(
        dir.path(),
        "empty.json",
        r#"{"families": ["exp-affine"], "theorems": ["Tz"], "trials": 0, "seed": 1, "domain": {"lo": -1, "hi": 1}}"#,
    );
    let out_dir = dir.path().join("empty");
    let out = campaign(&empty, &out_dir, None, false);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(out_dir.join("trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("seed,trial,theorem,lhs,rhs,margin,verdict"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    validate(&summary);
    assert_eq!(summary["summary"]["trials"], 0);

    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"families": ["exp-affine"], "theorems": ["Tz", "T7.7"], "trials": 5, "seed": 1, "domain": {"lo": -1, "hi": 1}}"#,
    );
    let out_dir = dir.path().join("unknown");
    assert_eq!(code(&campaign(&unknown, &out_dir, None, false)), 1);
    assert!(!out_dir.join("trials.csv").exists());

    let family = write_config(
        dir.path(),
        "family.json",
        r#"{"families": ["cubic"], "theorems": ["Tz"], "trials": 5, "seed": 1, "domain": {"lo": -1, "hi": 1}}"#,
    );
    assert_eq!(code(&campaign(&family, &dir.path().join("family"), None, false)), 1);
    let broken = write_config(dir.path(), "broken.json", "{");
    assert_eq!(code(&campaign(&broken, &dir.path().join("broken"), None, false)), 1);
    assert_eq!(
        code(&campaign(
            &dir.path().join("missing.json"),
            &dir.path().join("missing"),
            None,
            false
        )),
        1
    );
    assert_eq!(
        code(&campaign(&empty, &dir.path().join("threads"), Some("many"), false)),
        1
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = repo_file("docs/campaign.sample.json");
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    assert_eq!(code(&campaign(&config, &one, Some("1"), false)), 0);
    assert_eq!(code(&campaign(&config, &four, Some("4"), false)), 0);
    for name in ["summary.json", "trials.csv"] {
        assert_eq!(
            fs::read(one.join(name)).unwrap(),
            fs::read(four.join(name)).unwrap(),
            "{name} differs"
        );
    }
    let a = run(&[
        "verify",
        "--f",
        "exp(x)",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "Tz,Tfd",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    let b = run(&[
        "verify",
        "--f",
        "exp(x)",
        "--eta",
        "v-u",
        "--a",
        "0",
        "--b",
        "1",
        "--theorems",
        "Tz,Tfd",
        "--p",
        "2",
        "--q",
        "2",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn search_writes_tagged_violations() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "log.json",
        r#"{"families": ["exp-affine", "exp-convex"], "theorems": ["Tz", "Tfd"], "trials": 200, "seed": 11, "domain": {"lo": -1, "hi": 1}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = campaign(&config, &out_dir, None, true);
    let found: Value = serde_json::from_slice(&fs::read(out_dir.join("violations.json")).unwrap()).unwrap();
    validate(&found);
    let violations = found["violations"].as_array().unwrap();
    assert_eq!(code(&out), if violations.is_empty() { 0 } else { 2 });
    for v in violations {
        assert_eq!(v["theorem"], "Tfd");
        assert_eq!(v["classification"], "paper-as-printed-violation");
        assert_eq!(v["recheck"]["verdict"], "violated");
    }
    let summary: Value = serde_json::from_slice(&fs::read(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["per_theorem"]["Tz"]["violated"], 0);
    assert_eq!(summary["summary"]["unexplained_violations"], 0);
}
