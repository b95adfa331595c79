use serde_json::Value;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn caplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caplace"))
        .args(args)
        .env("CAPLACE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("caplace-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("error JSON on stderr")
}

#[test]
fn neumann_disk_writes_solution_and_residual() {
    let d = scratch("neumann");
    let prefix = d.join("run1");
    let o = caplace(&[
        "solve-neumann-disk",
        "--phi",
        "cos",
        "--n",
        "1024",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.join("run1_solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u,ux,uy"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        // u = −x up to a constant pinned at the origin
        assert!((v[2] + v[0]).abs() < 1e-6);
    }
    let r: Value = serde_json::from_str(&fs::read_to_string(d.join("run1_residual.json")).unwrap()).unwrap();
    assert!(r["max"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["neumann_probes"].as_array().unwrap().len(), 64);
}

#[test]
fn outputs_are_deterministic() {
    let d = scratch("determinism");
    let run = |tag: &str| {
        let p = d.join(tag);
        let o = caplace(&["solve-neumann-jordan", "--n", "1024", "--grid", "17", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(d.join(format!("{tag}_solution.csv"))).unwrap(),
            fs::read(d.join(format!("{tag}_residual.json"))).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn mu_from_a_prints_dictionary_value() {
    let o = caplace(&["mu-from-a", "--a", "diag:2,0.5"]);
    assert!(o.status.success());
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("μ = -0.3333333333"), "{out}");
}

#[test]
fn validation_failures_exit_2_with_points() {
    let d = scratch("validate");
    let f = d.join("a.csv");
    fs::write(&f, "a11,a12,a21,a22\n1,0,0,1\n2,0,0,1\n2,0,0,0.5\n").unwrap();
    let o = caplace(&["validate-a", "--a-csv", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["points"], serde_json::json!([1]));

    let o = caplace(&["solve-neumann-disk", "--n", "1000"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "config");
    let o = caplace(&["solve-neumann-disk", "--zeta0", "0.5,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unsupported_index_exits_4() {
    // normal turned by a full turn per revolution: winding 2
    let d = scratch("index");
    let f = d.join("nu.csv");
    let mut s = String::from("re,im\n");
    for j in 0..64 {
        let t = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
        s += &format!("{},{}\n", (2.0 * t).cos(), (2.0 * t).sin());
    }
    fs::write(&f, s).unwrap();
    let nu = format!("csv:{}", f.display());
    let o = caplace(&[
        "solve-directional-disk",
        "--n",
        "64",
        "--nu",
        &nu,
        "--out",
        d.join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stderr_json(&o)["error"], "unsupported_index");
}

#[test]
fn convergence_failures_exit_3() {
    let d = scratch("convergence");
    let o = caplace(&[
        "beltrami-solve",
        "--mu",
        "random:0.4,3",
        "--grid",
        "64",
        "--max-iters",
        "2",
        "--out",
        d.join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn oracle_compare_cases() {
    let d = scratch("oracle");
    let run = |case: &str| -> Value {
        let o = caplace(&[
            "oracle-compare",
            "--case",
            case,
            "--n",
            "512",
            "--grid",
            "64",
            "--out",
            d.join(case).to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_slice(&o.stdout).unwrap()
    };
    assert!(run("disk-cos")["max_discrepancy"].as_f64().unwrap() < 1e-3);
    assert_eq!(run("disk-zero")["max_discrepancy"].as_f64().unwrap(), 0.0);
    let o = caplace(&["oracle-compare", "--case", "limacon"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dry_run_everywhere() {
    let d = scratch("dry");
    let out = d.join("never");
    let out = out.to_str().unwrap();
    for cmd in [
        "solve-neumann-disk",
        "solve-directional-disk",
        "solve-neumann-jordan",
        "solve-directional-jordan",
        "solve-neumann-aharmonic",
        "solve-directional-aharmonic",
        "beltrami-solve",
        "conformal-map",
        "mu-from-a",
        "a-from-mu",
        "family",
        "oracle-compare",
    ] {
        let o = caplace(&[cmd, "--dry-run", "--out", out]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["subcommand"], cmd);
    }
    let o = caplace(&["validate-a", "--a", "identity", "--dry-run"]);
    assert!(o.status.success());
    assert!(fs::read_dir(&d).unwrap().next().is_none());
}

#[test]
fn family_report_shape() {
    let d = scratch("family");
    let p = d.join("fam");
    let o = caplace(&["family", "--n", "256", "--angles", "0,90,180", "--out", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(d.join("fam_family.json")).unwrap()).unwrap();
    assert_eq!(v["k"], 3);
    assert_eq!(v["rank"], 3);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 3);
    let o = caplace(&["family", "--angles", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
}
