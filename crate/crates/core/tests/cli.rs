use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cpwalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpwalk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn circle_count(path: &Path) -> usize {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["circles"].as_array().unwrap().len()
}

#[test]
fn build_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpwalk(
        dir.path(),
        &["build", "hex", "--radius", "20", "-o", "hex.cpk"],
    );
    assert_eq!(out.status.code(), Some(0));
    // 1 + 3R(R+1)
    assert_eq!(circle_count(&dir.path().join("hex.cpk")), 1 + 3 * 20 * 21);
    assert_eq!(report(&out)["results"]["count"], 1261);

    let out = cpwalk(
        dir.path(),
        &["build", "cubic3d", "--side", "5", "-o", "c.cpk"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(circle_count(&dir.path().join("c.cpk")), 125);

    // no -o: packing on stdout
    let out = cpwalk(dir.path(), &["build", "flower", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["circles"].as_array().unwrap().len(), 7);
}

#[test]
fn verify_passes_then_fails_on_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    cpwalk(
        dir.path(),
        &["build", "hex", "--radius", "6", "-o", "hex.cpk"],
    );
    let out = cpwalk(dir.path(), &["verify", "hex.cpk"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));

    // Shift the centre circle by 1e-9: still within tangency tolerance,
    // so the file loads, but its drift is about 5e-10.
    let text = std::fs::read_to_string(dir.path().join("hex.cpk")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    let c0 = v["circles"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|c| c["id"] == 0)
        .unwrap();
    c0["x"] = Value::from(c0["x"].as_f64().unwrap() + 1e-9);
    std::fs::write(dir.path().join("bad.cpk"), v.to_string()).unwrap();
    let out = cpwalk(dir.path(), &["verify", "bad.cpk"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failing: Vec<_> = r["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["claim"].as_str().unwrap().to_string())
        .collect();
    assert!(
        failing.iter().any(|c| c.starts_with("martingale")),
        "{failing:?}"
    );
}

#[test]
fn verify_dispatches_on_dimension() {
    let dir = tempfile::tempdir().unwrap();
    cpwalk(
        dir.path(),
        &["build", "fcc3d", "--side", "4", "-o", "f.cpk"],
    );
    let out = cpwalk(dir.path(), &["verify", "f.cpk"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["results"]["covered"].as_u64().unwrap() > 0);
    assert!(r["certificates"][0]["claim"]
        .as_str()
        .unwrap()
        .contains("vector area"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        cpwalk(dir.path(), &["verify", "missing.cpk"]).status.code(),
        Some(2)
    );
    assert_eq!(cpwalk(dir.path(), &["build", "hex"]).status.code(), Some(2));
    assert_eq!(cpwalk(dir.path(), &["frobnicate"]).status.code(), Some(2));
    std::fs::write(dir.path().join("junk.cpk"), "{\"dim\":2,").unwrap();
    assert_eq!(
        cpwalk(dir.path(), &["verify", "junk.cpk"]).status.code(),
        Some(2)
    );
    cpwalk(
        dir.path(),
        &["build", "hex", "--radius", "3", "-o", "h.cpk"],
    );
    // a boundary circle as root
    let out = cpwalk(
        dir.path(),
        &["conductance", "h.cpk", "--rho", "20", "--rings", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    cpwalk(
        dir.path(),
        &["build", "hex", "--radius", "8", "-o", "h.cpk"],
    );
    let args = [
        "--seed",
        "7",
        "walk",
        "h.cpk",
        "--steps",
        "200",
        "--escape-ring",
        "4",
        "--samples",
        "2000",
    ];
    let a = cpwalk(dir.path(), &args);
    let b = Command::new(env!("CARGO_BIN_EXE_cpwalk"))
        .current_dir(dir.path())
        .env("CPWALK_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = cpwalk(
        dir.path(),
        &["harmonic-check", "--trials", "50", "--polygons", "5"],
    );
    let d = cpwalk(
        dir.path(),
        &["harmonic-check", "--trials", "50", "--polygons", "5"],
    );
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn conductance_on_networks_and_packings() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("series.json"),
        r#"{"vertices":[0,1,2],"weights":[{"u":0,"v":1,"c":1.0},{"u":1,"v":2,"c":1.0}]}"#,
    )
    .unwrap();
    let out = cpwalk(
        dir.path(),
        &[
            "conductance",
            "series.json",
            "--rho",
            "0",
            "--boundary",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["c_eff"].as_f64(), Some(0.5));

    cpwalk(
        dir.path(),
        &["build", "hex", "--radius", "20", "-o", "h.cpk"],
    );
    let out = cpwalk(
        dir.path(),
        &[
            "conductance",
            "h.cpk",
            "--rings",
            "4,8,16",
            "--plot",
            "p.svg",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let table = r["results"]["table"].as_array().unwrap();
    let c: Vec<f64> = table
        .iter()
        .map(|row| row["c_eff"].as_f64().unwrap())
        .collect();
    assert!(c[0] > c[1] && c[1] > c[2]);
    assert!(r["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["claim"].as_str().unwrap().contains("annulus")));
    assert!(std::fs::read_to_string(dir.path().join("p.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn weights_censor_refine_render_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    cpwalk(dir.path(), &["build", "flower", "--n", "6", "-o", "f.cpk"]);
    let out = cpwalk(dir.path(), &["weights", "f.cpk", "-o", "net.json"]);
    assert_eq!(out.status.code(), Some(0));
    let net: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("net.json")).unwrap())
            .unwrap();
    assert_eq!(net["weights"].as_array().unwrap().len(), 6);

    let out = cpwalk(
        dir.path(),
        &["censor", "net.json", "--remove", "0", "-o", "c.json"],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["has_loops"], true);

    let out = cpwalk(
        dir.path(),
        &[
            "refine", "f.cpk", "--face", "0,1,2", "--k", "3", "-o", "r.cpk",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(circle_count(&dir.path().join("r.cpk")), 10);
    assert_eq!(
        cpwalk(dir.path(), &["verify", "r.cpk"]).status.code(),
        Some(0)
    );
    assert_eq!(
        cpwalk(
            dir.path(),
            &["refine", "f.cpk", "--face", "0,1", "--k", "3"]
        )
        .status
        .code(),
        Some(2)
    );

    let out = cpwalk(
        dir.path(),
        &[
            "--format", "text", "render", "r.cpk", "-o", "r.svg", "--dual",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("command: render"));
    let svg = std::fs::read_to_string(dir.path().join("r.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 10);
}
