//! End-to-end tests of the `sizefield` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use sizefield::{shapes, SizeField};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sizefield"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sizefield-cli-{}-{}", std::process::id(), name));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn block_stl(dir: &Path) -> PathBuf {
    let path = dir.join("block.stl");
    shapes::finned_block().write_stl_binary(&path).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn build_with_defaults_writes_default_params() {
    let dir = workdir("defaults");
    let stl = block_stl(&dir);
    let field_path = dir.join("block.szf");
    let out = run(bin()
        .args(["build", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&field_path));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Stage timing table lands on stderr.
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("limit size gradient"));
    assert!(stderr.contains("total"));

    let field = SizeField::load(&field_path).unwrap();
    let largest = 1.0f64; // finned block spans [0,1] in x
    assert_eq!(field.params.h_bulk, largest / 20.0);
    assert_eq!(field.params.h_min, largest / 1000.0);
    assert_eq!(field.params.node_density, 20);
    assert_eq!(field.params.gap_layers, 4);
    assert_eq!(field.params.gradation, 1.1);
}

#[test]
fn build_is_deterministic() {
    let dir = workdir("determinism");
    let stl = block_stl(&dir);
    let (f1, f2) = (dir.join("a.szf"), dir.join("b.szf"));
    for f in [&f1, &f2] {
        let out = run(bin().args(["build", "--in"]).arg(&stl).arg("--out").arg(f));
        assert!(out.status.success());
    }
    let (b1, b2) = (std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
    assert_eq!(b1, b2, "identical inputs must produce bit-identical fields");
}

#[test]
fn no_features_skips_gap_refinement() {
    let dir = workdir("nofeatures");
    let stl = block_stl(&dir);
    let (with, without) = (dir.join("with.szf"), dir.join("without.szf"));
    assert!(run(bin().args(["build", "--in"]).arg(&stl).arg("--out").arg(&with))
        .status
        .success());
    assert!(run(bin()
        .args(["build", "--no-features", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&without))
    .status
    .success());
    let leaves_with = SizeField::load(&with).unwrap().leaf_count();
    let leaves_without = SizeField::load(&without).unwrap().leaf_count();
    assert!(
        leaves_with > leaves_without,
        "feature sizing must refine the fins ({leaves_with} vs {leaves_without})"
    );
}

#[test]
fn density_increases_leaf_count() {
    let dir = workdir("density");
    let stl = dir.join("sphere.stl");
    shapes::icosphere(3, 1.0).write_stl_binary(&stl).unwrap();
    let mut counts = Vec::new();
    for d in ["10", "50"] {
        let f = dir.join(format!("sphere-{d}.szf"));
        let out = run(bin()
            .args(["build", "--bulk", "L/10", "--density", d, "--in"])
            .arg(&stl)
            .arg("--out")
            .arg(&f));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        counts.push(SizeField::load(&f).unwrap().leaf_count());
    }
    assert!(counts[1] > counts[0], "{counts:?}");
}

#[test]
fn query_streams_sizes() {
    let dir = workdir("query");
    let stl = block_stl(&dir);
    let field_path = dir.join("block.szf");
    assert!(run(bin()
        .args(["build", "--no-features", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&field_path))
    .status
    .success());

    use std::io::Write;
    let mut child = bin()
        .args(["query", "--field"])
        .arg(&field_path)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    // Far corner of the domain: unconstrained, returns the bulk size.
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"-0.24 -0.2 1.1\n0.5 0.3 0.225\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let values: Vec<f64> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 2);
    let field = SizeField::load(&field_path).unwrap();
    assert_eq!(values[0], field.params.h_bulk, "far wall must be bulk-sized");
    assert!(values[1] > 0.0 && values[1] <= field.params.h_bulk);
}

#[test]
fn export_leaf_count_matches() {
    let dir = workdir("export");
    let stl = block_stl(&dir);
    let field_path = dir.join("block.szf");
    assert!(run(bin()
        .args(["build", "--no-features", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&field_path))
    .status
    .success());
    let vtk = dir.join("leaves.vtk");
    assert!(run(bin()
        .args(["export", "--field"])
        .arg(&field_path)
        .arg("--out")
        .arg(&vtk))
    .status
    .success());
    let field = SizeField::load(&field_path).unwrap();
    let text = std::fs::read_to_string(&vtk).unwrap();
    assert!(text.contains(&format!("CELLS {} ", field.leaf_count())));
}

#[test]
fn stats_of_matched_uniform_mesh() {
    let dir = workdir("stats");
    let edge = 0.05;
    let sheet = shapes::equilateral_sheet(24, 24, edge);
    let stl = dir.join("sheet.stl");
    sheet.write_stl_binary(&stl).unwrap();
    let field_path = dir.join("sheet.szf");
    // Coplanar sheet: feature stage must be disabled; the bulk size is the
    // sheet edge length so every metric edge is ~1.
    let out = run(bin()
        .args(["build", "--no-features", "--bulk"])
        .arg(format!("{edge}"))
        .arg("--in")
        .arg(&stl)
        .arg("--out")
        .arg(&field_path));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(bin()
        .args(["stats", "--field"])
        .arg(&field_path)
        .arg("--mesh")
        .arg(&stl)
        .arg("--histograms")
        .arg(dir.join("hists")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let tau: f64 = stdout
        .lines()
        .find(|l| l.starts_with("efficiency index tau"))
        .and_then(|l| l.split_whitespace().last())
        .unwrap()
        .parse()
        .unwrap();
    assert!(tau >= 0.999, "tau = {tau}\n{stdout}");
    assert!(dir.join("hists/metric_lengths.csv").exists());
}

#[test]
fn stats_reads_tet_format() {
    let dir = workdir("tets");
    let stl = block_stl(&dir);
    let field_path = dir.join("block.szf");
    assert!(run(bin()
        .args(["build", "--no-features", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&field_path))
    .status
    .success());
    let tet = dir.join("one.tet");
    std::fs::write(&tet, "4\n0 0 0\n0.2 0 0\n0 0.2 0\n0 0 0.2\n1\n0 1 2 3\n").unwrap();
    let out = run(bin()
        .args(["stats", "--field"])
        .arg(&field_path)
        .arg("--mesh")
        .arg(&tet));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gamma = r/R"), "{stdout}");
}

#[test]
fn stage_errors_name_the_stage() {
    // A flat sheet has coplanar vertices: the feature stage cannot build a
    // tetrahedrization. The error must name the stage and exit as an
    // input error.
    let dir = workdir("stage");
    let stl = dir.join("sheet.stl");
    shapes::grid_sheet(8, 1.0, 0.0).write_stl_binary(&stl).unwrap();
    let out = run(bin()
        .args(["build", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(dir.join("sheet.szf")));
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("medial axis"), "{stderr}");
    assert!(stderr.contains("coplanar"), "{stderr}");
}

#[test]
fn exit_codes() {
    let dir = workdir("exitcodes");
    // Missing input: 3.
    let out = run(bin()
        .args(["build", "--in", "nonexistent.stl", "--out"])
        .arg(dir.join("x.szf")));
    assert_eq!(out.status.code(), Some(3));
    // Usage error (unknown flag): 2.
    let out = run(bin().args(["build", "--does-not-exist"]));
    assert_eq!(out.status.code(), Some(2));
    // Invalid parameter: 2.
    let stl = block_stl(&dir);
    let out = run(bin()
        .args(["build", "--gradation", "0.9", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(dir.join("y.szf")));
    assert_eq!(out.status.code(), Some(2));
    // Corrupt field file: 3.
    let bad = dir.join("bad.szf");
    std::fs::write(&bad, b"not a field").unwrap();
    let out = run(bin()
        .args(["export", "--field"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.join("z.vtk")));
    assert_eq!(out.status.code(), Some(3));
    // Malformed query line: 3.
    let field_path = dir.join("block.szf");
    assert!(run(bin()
        .args(["build", "--no-features", "--in"])
        .arg(&stl)
        .arg("--out")
        .arg(&field_path))
    .status
    .success());
    use std::io::Write;
    let mut child = bin()
        .args(["query", "--field"])
        .arg(&field_path)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1 2\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    // File output mode leaves no partial file behind on bad input.
    let pts = dir.join("pts.txt");
    std::fs::write(&pts, "0.5 0.3 0.1\nbogus\n").unwrap();
    let result = dir.join("sizes.txt");
    let out = run(bin()
        .args(["query", "--field"])
        .arg(&field_path)
        .arg("--points")
        .arg(&pts)
        .arg("--out")
        .arg(&result));
    assert_eq!(out.status.code(), Some(3));
    assert!(!result.exists(), "partial query output must not be written");
}
