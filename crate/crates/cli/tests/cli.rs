use std::process::{Command, Output};

use serde_json::Value;
use whitney_cubes::mesh::CubicalMesh;
use whitney_cubes::whitney::{build_constraints, kernel_space, Flavor, LocalWhitney};
use whitney_cubes::{parse_form, CellBox, Scalar};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_whitney-cubes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("JSON on stdout")
}

#[test]
fn verify_two_dimensions_passes() {
    let o = run(&["verify", "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["failed"], 0);
    assert!(v["reports"].as_array().unwrap().len() > 100);
}

#[test]
fn verify_reports_are_deterministic() {
    let a = run(&["verify", "--dim", "2", "--grid", "2,2"]);
    let b = run(&["verify", "--dim", "2", "--grid", "2,2"]);
    assert_eq!(a.stdout, b.stdout);
    let single = run(&["verify", "--dim", "2", "--grid", "2,2", "--threads", "1"]);
    assert_eq!(json(&a)["reports"], json(&single)["reports"]);
}

#[test]
fn verify_rejects_large_dimension() {
    let o = run(&["verify", "--dim", "9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--dim"));
}

#[test]
fn verify_with_grid_includes_mesh_diagrams() {
    let o = run(&["verify", "--dim", "3", "--grid", "2,2,2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let lemmas: Vec<&str> = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["lemma"].as_str().unwrap())
        .collect();
    for expected in [
        "whitney_complex[interior]",
        "commuting_square[full]",
        "conforming_complex[VQ0]",
        "stokes_incidence",
    ] {
        assert!(lemmas.contains(&expected), "missing {expected}");
    }
    let local_only = json(&run(&["verify", "--dim", "3"]));
    assert!(local_only["checks"].as_u64() < v["checks"].as_u64());
}

#[test]
fn verify_filters_by_degree_and_writes_csv() {
    let o = run(&["verify", "--dim", "2", "--k", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lemma,n,k,pass,counterexample"));
    assert!(lines.all(|l| l.split(',').nth(2) == Some("1")));
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn convergence_three_levels() {
    let o = run(&["convergence", "--dim", "2", "--k", "0", "--levels", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(
        rows[0].join(","),
        "level,h,n_cells,dim_space,err_L2,err_Hd,consistency,order_L2,order_Hd"
    );
    assert_eq!(rows.len(), 4);
    assert!(rows[1][8].is_empty());
    let order: f64 = rows[3][8].parse().unwrap();
    assert!(order >= 0.9, "order {order}");
    assert!(stderr(&o).contains("PASS"));
}

#[test]
fn convergence_single_level_has_no_orders() {
    let o = run(&["convergence", "--dim", "2", "--k", "0", "--levels", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows[1][7].is_empty() && rows[1][8].is_empty());
    assert!(stderr(&o).contains("orders: none"));
}

#[test]
fn convergence_top_form_is_first_order_in_l2() {
    let o = run(&[
        "convergence",
        "--dim",
        "2",
        "--k",
        "2",
        "--levels",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let last = v["rows"].as_array().unwrap().last().unwrap().clone();
    let order = last["order_L2"].as_f64().unwrap();
    assert!((order - 1.0).abs() < 0.1, "order {order}");
    assert_eq!(last["err_L2"], last["err_Hd"]);
    assert!(v["versions"]["whitney-cubes"].is_string());
    assert!(v["seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn convergence_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let o = run(&[
        "convergence",
        "--dim",
        "2",
        "--k",
        "1",
        "--solution",
        "sinmix",
        "--levels",
        "2",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
    assert_eq!(manifest["sweep"]["levels"], serde_json::json!([4, 8]));
    assert_eq!(manifest["sweep"]["flavor"], "full");
    assert!(stdout(&o).contains("order_Hd"));
}

#[test]
fn unknown_solution_lists_catalog() {
    let o = run(&["convergence", "--dim", "2", "--solution", "tan"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sin, cos"));
}

#[test]
fn basis_single_cell() {
    let o = run(&["basis", "--dim", "2", "--k", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("kernel ")).count(), 3);
    assert!(text.contains("# dimensions"));
}

#[test]
fn basis_two_by_two_dimensions() {
    let o = run(&["basis", "--dim", "2", "--k", "0", "--grid", "2,2", "--format", "json"]);
    let d = json(&o)["dimensions"].clone();
    assert_eq!(d["dim_piecewise"], 12);
    let rank_b = d["rank_B"].as_u64().unwrap();
    assert_eq!(d["dim_kernel"].as_u64().unwrap(), 12 - rank_b);
    assert!(d["dim_generators_span"].as_u64() <= d["dim_kernel"].as_u64());
}

#[test]
fn basis_dump_round_trips() {
    let o = run(&[
        "basis", "--dim", "2", "--k", "1", "--grid", "2,2", "--flavor", "full", "--format", "json",
    ]);
    let v = json(&o);
    let mesh = CubicalMesh::unit(2, 2).unwrap();
    let local = LocalWhitney::new(1, &mesh).unwrap();
    let kernel = kernel_space(&build_constraints(1, &mesh, Flavor::Full).unwrap());
    let cells: Vec<CellBox> = mesh.cells();
    let dumped = v["kernel"].as_array().unwrap();
    assert!(!dumped.is_empty());
    for entry in dumped {
        let text = entry["form"].as_str().unwrap();
        let parsed = parse_form(text, 2, 1).unwrap();
        assert_eq!(parsed.to_string(), text);
        let (i, c) = (
            entry["vector"].as_u64().unwrap() as usize,
            entry["cell"].as_u64().unwrap() as usize,
        );
        let back: Vec<Scalar> = cells[c].center().iter().map(|x| -x).collect();
        assert_eq!(parsed, kernel.pieces(i, &local)[c].translate(&back));
    }
}

#[test]
fn basis_refuses_large_meshes() {
    let o = run(&["basis", "--dim", "3", "--grid", "8", "--dump-limit", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--dump-limit"));
}

#[test]
fn solve_constant_exactly_with_matching_cg() {
    let o = run(&["solve", "--dim", "2", "--k", "1", "--solution", "const", "--grid", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = json(&o)["result"].clone();
    assert_eq!(r["method"], "exact");
    assert!(r["err_Hd"].as_f64().unwrap() < 1e-10);
    assert!(r["exact_cg_gap"].as_f64().unwrap() < 1e-9);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "dim = 2\nk = 1\nsolution = \"const\"\ngrid = [2, 2]\n").unwrap();
    let o = run(&[
        "solve",
        "--config",
        path.to_str().unwrap(),
        "--k",
        "0",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["config"]["k"], 0);
    assert_eq!(v["config"]["grid"], serde_json::json!([2, 2]));
    assert_eq!(v["result"]["solution"], "const");
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "dim = 2\ncolour = \"red\"\n").unwrap();
    assert_eq!(
        run(&["verify", "--config", path.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--dim", "2", "--k", "3"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--dim", "2", "--grid", "2,2,2"]).status.code(), Some(2));
    assert_eq!(
        run(&["convergence", "--dim", "2", "--flavor", "sideways"])
            .status
            .code(),
        Some(2)
    );
}
