use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_placecrb"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn placecrb")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_tmp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn crb_reports_case1_optimum() {
    let o = run(&["crb", "--scenario", scenario("case1_optimal.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("tr(CRB) = 0.2306"), "{out}");
}

#[test]
fn crb_csv_gap_is_tiny() {
    let o = run(&[
        "crb",
        "--scenario",
        scenario("case1_optimal.toml").to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let gap: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("gap_m2,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(gap.abs() < 1e-6);
}

#[test]
fn zero_sigma_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("case1_optimal.toml"))
        .unwrap()
        .replace("sigma = 0.5", "sigma = 0.0");
    let p = write_tmp(&dir, "s.toml", &text);
    let o = run(&["crb", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nonpositive std: sigma"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("case1_optimal.toml")).unwrap() + "\nbogus = 1\n";
    let p = write_tmp(&dir, "s.toml", &text);
    let o = run(&["crb", "--scenario", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn collinear_toa_is_singular() {
    let o = run(&["crb", "--scenario", scenario("collinear_toa.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn bounds_table_is_sorted_and_contains_o7() {
    for (file, o7) in [("case1_ex1.toml", 0.2306), ("case2_ex1.toml", 0.4998)] {
        let o = run(&["bounds", "--scenario", scenario(file).to_str().unwrap(), "--format", "csv"]);
        assert!(o.status.success());
        let out = stdout(&o);
        let mut lines = out.lines();
        assert_eq!(lines.next().unwrap(), "label,combo,h,l,inv_d2_sum,n,bound_m2");
        let rows: Vec<(String, f64)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[0].to_string(), f[6].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 7);
        assert!(rows.windows(2).all(|w| w[0].1 <= w[1].1));
        let v = rows.iter().find(|r| r.0 == "O7").unwrap().1;
        assert!((v - o7).abs() < 5e-4);
    }
}

#[test]
fn bounds_with_extensions_lists_all_combinations() {
    let o = run(&[
        "bounds",
        "--scenario",
        scenario("case1_ex1.toml").to_str().unwrap(),
        "--format",
        "csv",
        "--extensions",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1 + 15);
}

#[test]
fn verify_passes_on_reported_case1_angles() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("case1_optimal.toml"))
        .unwrap()
        .replace("angle_deg = 150", "angle_deg = 150.01")
        .replace("angle_deg = -90", "angle_deg = -89.99");
    let p = write_tmp(&dir, "s.toml", &text);
    let o = run(&["verify", "--scenario", p.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("-> satisfied"), "{out}");
    assert!(out.contains("UAA: true"));
}

#[test]
fn optimize_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = run(&[
        "optimize",
        "--scenario",
        scenario("case1_ex1.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.contains("UAA: true"), "{summary}");
    assert!(summary.contains("final tr(CRB) = 0.2306"));

    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "step,alpha_1_deg,alpha_2_deg,alpha_3_deg,tr_crb_m2,residual_inf_norm"
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("traj.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "optimize");
    assert_eq!(manifest["seed"], 0);
}

#[test]
fn optimize_nonuniform_four_sensors() {
    let o = run(&["optimize", "--scenario", scenario("fig4_b.toml").to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    for name in ["sum_sin ", "sum_cos ", "sum_sin2 ", "sum_cos2 "] {
        let line = out.lines().find(|l| l.trim_start().starts_with(name)).unwrap();
        assert!(line.ends_with("pass"), "{line}");
    }
}

#[test]
fn zero_steps_echoes_initial_geometry() {
    let o = run(&[
        "optimize",
        "--scenario",
        scenario("case1_ex2.toml").to_str().unwrap(),
        "--steps",
        "0",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("final angles (deg):   {0.00, 40.00, 120.00}"));
}

#[test]
fn multistart_is_deterministic() {
    let path = scenario("case1_ex3.toml");
    let args = ["optimize", "--scenario", path.to_str().unwrap(), "--starts", "4", "--seed", "3"];
    let a = stdout(&run(&args));
    let b = bin().args(args).env("PLACECRB_THREADS", "1").output().unwrap();
    assert_eq!(a, stdout(&b));
}

#[test]
fn sweep_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run(&[
        "sweep",
        "--scenario",
        scenario("fig3_sweep.toml").to_str().unwrap(),
        "--geometries",
        scenario("fig3_geometries.toml").to_str().unwrap(),
        "--sigmas",
        "0.5",
        "--trials",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "sigma_m,geometry_id,mse_m2,tr_crb_m2,excluded_trials");
    assert_eq!(lines.count(), 3);
    assert!(dir.path().join("sweep.csv.manifest.json").exists());
}

#[test]
fn sweep_mse_respects_crb() {
    let o = run(&[
        "sweep",
        "--scenario",
        scenario("fig3_sweep.toml").to_str().unwrap(),
        "--geometries",
        scenario("fig3_geometries.toml").to_str().unwrap(),
        "--trials",
        "2000",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    for line in out.lines().skip(1).take_while(|l| l.contains(',')) {
        let f: Vec<&str> = line.split(',').collect();
        let (mse, tr): (f64, f64) = (f[2].parse().unwrap(), f[3].parse().unwrap());
        assert!(mse >= 0.9 * tr, "{line}");
    }
}

#[test]
fn missing_file_is_a_parse_error() {
    let o = run(&["crb", "--scenario", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(2));
}
