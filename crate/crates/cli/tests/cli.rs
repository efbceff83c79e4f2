use std::process::{Command, Output};

fn magiso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magiso"))
        .args(args)
        .env("MAGISO_THREADS", "2")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn disk_closed_form() {
    let out = magiso(&["disk", "--B", "2", "--R", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - 6.0).abs() < 1e-9);
    assert_eq!(v["hopf"], true);
}

#[test]
fn disk_energy_of_potential_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    std::fs::write(&path, r#"{"R": 1.0, "samples": [0.0, 0.5, 1.0]}"#).unwrap();
    let out = magiso(&["disk", "--potential", path.to_str().unwrap(), "--N", "512"]);
    assert!(out.status.success(), "{}", stderr(&out));
    // a = Br/2 with B = 2, so the energy is λ − B = 4.
    assert!((json(&out)["energy"].as_f64().unwrap() - 4.0).abs() < 1e-4);
}

#[test]
fn solve_writes_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("mesh.json");
    let eig = dir.path().join("f.json");
    let svg = dir.path().join("f.svg");
    let out = magiso(&[
        "solve",
        "--shape",
        "ellipse:1.5,1",
        "--B",
        "1",
        "--h",
        "0.3",
        "--levels",
        "2",
        "--mesh-out",
        mesh.to_str().unwrap(),
        "--eigen-out",
        eig.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(json(&out)["lambda"].as_f64().unwrap() > 1.0);
    let dump: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&mesh).unwrap()).unwrap();
    let n = dump["nodes"].as_array().unwrap().len();
    assert_eq!(dump["boundary_flags"].as_array().unwrap().len(), n);
    assert!(!dump["triangles"].as_array().unwrap().is_empty());
    let f: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&eig).unwrap()).unwrap();
    assert_eq!(f["re"].as_array().unwrap().len(), n);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn asymmetry_of_domain_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sq.json");
    std::fs::write(&path, r#"{"label": "sq", "vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
    let out = magiso(&["asymmetry", "--domain", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let c = json(&out)["isoperimetric"]["c_empirical"].as_f64().unwrap();
    assert!((c - 9.918).abs() < 1e-2);
}

#[test]
fn rearrange_writes_profile_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let out = magiso(&[
        "rearrange",
        "--shape",
        "square:1.7",
        "--B",
        "1",
        "--h",
        "0.25",
        "--levels",
        "1",
        "--n-levels",
        "16",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,q,a,F,level_asym,topology_flag");
    assert_eq!(lines.count(), 17);
}

#[test]
fn compare_and_converge() {
    let out = magiso(&["compare", "--seeds", "8", "--N", "256"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(json(&out)["failures"].as_array().unwrap().len(), 0);
    let out = magiso(&[
        "converge",
        "--shape",
        "disk:1",
        "--h",
        "0.3",
        "--levels",
        "3",
        "--target",
        "5.783185962946784",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v = json(&out);
    let orders = v["orders_against_target"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|o| (o.as_f64().unwrap() - 2.0).abs() < 0.5), "{orders:?}");
}

#[test]
fn verify_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let csv = dir.path().join("rows.csv");
    let rows = dir.path().join("rows.json");
    std::fs::write(
        &cfg,
        r#"{"families": [{"family": "stadiums", "shapes": [[0.5, 1.0]]}], "b_values": [0.5],
            "mesh_h": 0.25, "levels": 2, "n_levels": 16}"#,
    )
    .unwrap();
    let out = magiso(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--json",
        rows.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out)["rows"], 2);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rows).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_input_exits_two() {
    let out = magiso(&["solve", "--shape", "blob:1"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"mesh_h": -1}"#).unwrap();
    let out = magiso(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
