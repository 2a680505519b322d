use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn isovar() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_isovar"));
    c.env_remove("ISOVAR_OUT");
    c
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(dir: &Path, text: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, text);
    isovar().arg("run").arg(&cfg).arg("--out").arg(dir.join("out")).args(extra).output().unwrap()
}

const QUICK: &str = r#"
seed = 11

[[scenario]]
id = "circle"
kind = "check-ball"
meshes = [{ generator = "circle", level = 6 }]
expect = { verdict = "holds", normalized = { value = 1.0, tol = 1e-3 } }

[[scenario]]
id = "square"
kind = "check-linear"
constant = 0.5
meshes = [{ generator = "polyline", points = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], closed = true }]
expect = { verdict = "violated" }

[[scenario]]
id = "sample"
kind = "estimate-constant"
domain = { shape = "disk", radius = 2.0 }
sampler = { chords = 4, latitudes = 0, circles = 4, perturbed_circles = 2, polynomial_fields = 3, resolution = 64, grid = 17 }
expect = { upper_finite = true }

[[scenario]]
id = "neck"
kind = "stability"
ambient = { family = "revolution", profile = "1 + z^2", z_lo = -1.0, z_hi = 1.0 }
meshes = [{ generator = "latitude", c = 0.0, segments = 256 }]
expect = { eigenvalue = { value = 2.0, tol = 1e-2 } }
"#;

#[test]
fn passing_run_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), QUICK, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.path().join("out/report.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = report.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["record"], "run");
    assert_eq!(lines[0]["seed"], "11");
    assert_eq!(lines[0]["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(lines.last().unwrap()["exit_code"], 0);
    assert!(dir.path().join("out/summary.txt").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wall time"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path(), QUICK, &["--seed", "5"]);
    run(b.path(), QUICK, &["--seed", "5", "--threads", "1"]);
    for name in ["report.jsonl", "summary.txt"] {
        let x = std::fs::read(a.path().join("out").join(name)).unwrap();
        let y = std::fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn seed_changes_the_recorded_seed() {
    let a = tempfile::tempdir().unwrap();
    run(a.path(), QUICK, &["--seed", "99"]);
    let report = std::fs::read_to_string(a.path().join("out/report.jsonl")).unwrap();
    assert!(report.lines().next().unwrap().contains("\"seed\":\"99\""));
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "[[scenario]]\nid = ", &[]).status.code(), Some(2));
    assert_eq!(run(dir.path(), "[[scenario]]\nid = \"x\"\nkind = \"check-ball\"\nbogus = 1\n", &[]).status.code(), Some(2));
    let misplaced = "[[scenario]]\nid = \"x\"\nkind = \"check-ball\"\nhorizon = 1.0\nmeshes = [{ generator = \"circle\" }]\n";
    assert_eq!(run(dir.path(), misplaced, &[]).status.code(), Some(3));
    let numeric = "[[scenario]]\nid = \"x\"\nkind = \"check-ball\"\nambient = { family = \"round-sphere\", radius = 1.0 }\nmeshes = [{ generator = \"latitude\", c = 1.0 }]\n";
    assert_eq!(run(dir.path(), numeric, &[]).status.code(), Some(4));
    let failing = "[[scenario]]\nid = \"x\"\nkind = \"check-ball\"\nmeshes = [{ generator = \"circle\" }]\nexpect = { verdict = \"violated\" }\n";
    assert_eq!(run(dir.path(), failing, &[]).status.code(), Some(1));
    let unasserted = "[[scenario]]\nid = \"x\"\nkind = \"check-ball\"\nassert = false\nmeshes = [{ generator = \"circle\" }]\nexpect = { verdict = \"violated\" }\n";
    assert_eq!(run(dir.path(), unasserted, &[]).status.code(), Some(0));
}

#[test]
fn empty_config_gives_an_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), "", &[]);
    assert_eq!(out.status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("out/report.jsonl")).unwrap();
    assert_eq!(report.lines().count(), 2);
}

#[test]
fn output_directory_defaults_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), QUICK);
    let target = dir.path().join("from-env");
    let out = isovar().arg("run").arg(&cfg).env("ISOVAR_OUT", &target).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("report.jsonl").exists());
}

#[test]
fn table_reports_orders() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[[scenario]]
id = "lat"
kind = "check-linear"
constant = 1.0
ambient = { family = "revolution", profile = "1 + z^2", z_lo = -1.0, z_hi = 1.0 }
meshes = [{ generator = "latitude", c = 0.5 }]
refinement = { quantity = "measure", levels = [4, 8], exact = 7.853981633974483 }

[[scenario]]
id = "circle"
kind = "check-ball"
meshes = [{ generator = "circle" }]
refinement = { quantity = "divergence-residual", levels = [4, 8] }
"#;
    let cfg = write_config(dir.path(), text);
    let out = isovar().arg("table").arg(&cfg).arg("--json").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let tables: Vec<serde_json::Value> =
        String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(tables.len(), 2);
    // latitudes are coordinate circles, so chart chords follow them exactly
    assert_eq!(tables[0]["exact"], true);
    let order: f64 = tables[1]["min_order"].as_str().unwrap().parse().unwrap();
    assert!(order >= 0.9, "{order}");

    let short = "[[scenario]]\nid = \"c\"\nkind = \"check-ball\"\nmeshes = [{ generator = \"circle\" }]\nrefinement = { quantity = \"ball-ratio\", levels = [3, 4] }\n";
    let cfg = write_config(dir.path(), short);
    assert_eq!(isovar().arg("table").arg(&cfg).output().unwrap().status.code(), Some(4));
}

#[test]
fn dumps_round_trip_through_file_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quick.toml");
    std::fs::write(&cfg, QUICK).unwrap();
    let out = isovar().arg("dump-mesh").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("circle.0.mesh").exists());
    let reuse = r#"
[[scenario]]
id = "again"
kind = "check-ball"
meshes = [{ generator = "file", path = "circle.0.mesh" }]
expect = { normalized = { value = 1.0, tol = 1e-3 } }
"#;
    assert_eq!(run(dir.path(), reuse, &[]).status.code(), Some(0));

    let out = isovar().arg("dump-varifold").arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("square.0.varifold")).unwrap();
    assert!(text.starts_with("# isovar varifold 1"));
}

#[test]
fn flow_runs_write_series_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
[[scenario]]
id = "disk"
kind = "dichotomy"
domain = { shape = "disk", radius = 0.5 }
flow = { vertices = 48 }
expect = { outcome = "extinct", t_ext = { value = 0.125, tol = 0.03, relative = true } }
"#;
    let out = run(dir.path(), text, &["--snapshot-every", "200", "--trajectory"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let o = dir.path().join("out");
    assert!(o.join("disk.length.dat").exists());
    assert!(o.join("disk.trajectory.jsonl").exists());
    let snaps = std::fs::read_dir(&o).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains("step")).count();
    assert!(snaps > 0);
}
