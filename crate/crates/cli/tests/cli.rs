// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_meshchroma"));
    c.env_remove("MESHCHROMA_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let out = p(dir, name);
    let mut a = vec!["generate"];
    a.extend_from_slice(args);
    a.extend_from_slice(&["-o", s(&out)]);
    let o = run(&a);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn memsave_matches_table_value() {
    let o = run(&["memsave", "--p", "1", "--neq", "4", "--ns", "3774165"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "724639680 bytes (0.72 GB)");
}

#[test]
fn pipeline_succeeds_on_every_family() {
    let dir = TempDir::new().unwrap();
    let cases: [(&str, &[&str]); 6] = [
        ("tri_rect", &["--nx", "9", "--ny", "7"]),
        ("tri_rect", &["--nx", "6", "--periodic"]),
        ("quad_rect", &["--nx", "8", "--ny", "5", "--shuffle", "2"]),
        ("tet_prism", &["--nx", "3", "--ny", "2", "--nz", "2"]),
        ("tri_closed", &["--nx", "4"]),
        ("hybrid_rect", &["--nx", "6", "--ny", "4", "--shuffle", "1"]),
    ];
    for (i, (family, args)) in cases.iter().enumerate() {
        let mut a = vec!["--family", *family];
        a.extend_from_slice(args);
        let m = generate(&dir, &format!("m{i}.mesh"), &a);
        let c = p(&dir, &format!("c{i}.mesh"));
        let r = p(&dir, &format!("r{i}.mesh"));
        let o = run(&["color", "-i", s(&m), "-o", s(&c)]);
        assert_eq!(code(&o), 0, "{family}: {}", stderr(&o));
        assert_eq!(code(&run(&["verify", "-i", s(&c)])), 0, "{family}");
        let o = run(&["reorder", "-i", s(&c), "-o", s(&r), "--metric"]);
        assert_eq!(code(&o), 0, "{family}: {}", stderr(&o));
        assert_eq!(code(&run(&["verify", "-i", s(&r)])), 0, "{family}");
        let o = run(&["race-check", "-i", s(&r), "--workers", "3"]);
        assert_eq!(code(&o), 0, "{family}: {}", stderr(&o));
        assert!(stdout(&o).contains("sweeps_equal=true"));
    }
}

#[test]
fn closed_mesh_sweep_total_is_zero() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_closed", "--nx", "5"]);
    let c = p(&dir, "c.mesh");
    assert_eq!(code(&run(&["color", "-i", s(&m), "-o", s(&c)])), 0);
    let o = run(&["race-check", "-i", s(&c)]);
    assert!(stdout(&o).contains("total=0\n"), "{}", stdout(&o));
}

#[test]
fn output_is_byte_identical_for_equal_seeds() {
    let dir = TempDir::new().unwrap();
    let m = generate(
        &dir,
        "m.mesh",
        &["--family", "quad_rect", "--nx", "12", "--shuffle", "5"],
    );
    let mut files = Vec::new();
    for k in 0..2 {
        let c = p(&dir, &format!("c{k}.mesh"));
        let r = p(&dir, &format!("r{k}.mesh"));
        assert_eq!(
            code(&run(&["color", "-i", s(&m), "-o", s(&c), "--seed", "7"])),
            0
        );
        assert_eq!(code(&run(&["reorder", "-i", s(&c), "-o", s(&r)])), 0);
        files.push((std::fs::read(&c).unwrap(), std::fs::read(&r).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn seed_comes_from_environment() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "10"]);
    let (a, b) = (p(&dir, "a.mesh"), p(&dir, "b.mesh"));
    let o = bin()
        .args(["color", "-i", s(&m), "-o", s(&a)])
        .env("MESHCHROMA_SEED", "11")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("seed=11\n"));
    run(&["color", "-i", s(&m), "-o", s(&b), "--seed", "11"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn report_file_replaces_stdout() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "4"]);
    let (c, rep) = (p(&dir, "c.mesh"), p(&dir, "report.txt"));
    let o = run(&["color", "-i", s(&m), "-o", s(&c), "--report", s(&rep)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).is_empty());
    let text = std::fs::read_to_string(&rep).unwrap();
    assert!(text.contains("colors_used=3\n"));
    assert!(text.contains("color_counts="));
}

#[test]
fn verify_reports_repeated_color_with_element() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "bad.mesh");
    std::fs::write(
        &f,
        "MESHCHROMA 1\nVERTICES 4\n0 0\n1 0\n1 1\n0 1\nELEMENTS 2\ntri 0 1 2\ntri 0 2 3\nCOLORS 5\n1\n2\n3\n1\n1\n",
    )
    .unwrap();
    let o = run(&["verify", "-i", s(&f)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("element 1"), "{}", stderr(&o));
}

#[test]
fn verify_rejects_uncolored_file() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "2"]);
    assert_eq!(code(&run(&["verify", "-i", s(&m)])), 1);
}

#[test]
fn malformed_input_exits_one() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "bad.mesh");
    std::fs::write(&f, "MESHCHROMA 1\nVERTICES 2\n0 0\n").unwrap();
    assert_eq!(code(&run(&["verify", "-i", s(&f)])), 1);
    std::fs::write(
        &f,
        "MESHCHROMA 1\nVERTICES 3\n0 0\n1 0\n0 1\nELEMENTS 1\ntri 0 1 7\n",
    )
    .unwrap();
    let c = p(&dir, "c.mesh");
    assert_eq!(code(&run(&["color", "-i", s(&f), "-o", s(&c)])), 1);
}

#[test]
fn msh_input_is_accepted() {
    let dir = TempDir::new().unwrap();
    let f = p(&dir, "square.msh");
    std::fs::write(
        &f,
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n$Elements\n3\n1 1 2 0 1 1 2\n2 2 2 0 1 1 2 3\n3 2 2 0 1 1 3 4\n$EndElements\n",
    )
    .unwrap();
    let c = p(&dir, "c.mesh");
    let o = run(&["color", "-i", s(&f), "-o", s(&c)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("surfaces=5\n"));
}

#[test]
fn odd_periodic_quad_torus_fails_to_color() {
    let dir = TempDir::new().unwrap();
    let m = generate(
        &dir,
        "m.mesh",
        &["--family", "quad_rect", "--nx", "3", "--periodic"],
    );
    let c = p(&dir, "c.mesh");
    let o = run(&["color", "-i", s(&m), "-o", s(&c), "--max-restarts", "1"]);
    assert_eq!(code(&o), 2);
    assert!(!c.exists());
}

#[test]
fn refine_then_coarsen_restores_file() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "6"]);
    let (c, r, back) = (p(&dir, "c.mesh"), p(&dir, "r.mesh"), p(&dir, "back.mesh"));
    assert_eq!(code(&run(&["color", "-i", s(&m), "-o", s(&c)])), 0);
    let o = run(&["refine", "-i", s(&c), "--elements", "3,17,40", "-o", s(&r)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("colors_used=6"));
    assert_eq!(code(&run(&["verify", "-i", s(&r)])), 0);
    let o = run(&[
        "coarsen",
        "-i",
        s(&r),
        "--parents",
        "3,17,40",
        "-o",
        s(&back),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&back).unwrap());
}

#[test]
fn refine_all_and_amr_violation() {
    let dir = TempDir::new().unwrap();
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "3"]);
    let (c, r1, r2) = (p(&dir, "c.mesh"), p(&dir, "r1.mesh"), p(&dir, "r2.mesh"));
    assert_eq!(code(&run(&["color", "-i", s(&m), "-o", s(&c)])), 0);
    let o = run(&["refine", "-i", s(&c), "--all", "-o", s(&r1)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("active_cells=72"));

    // a second level next to an unrefined neighbour breaks the one-level rule
    let single = p(&dir, "s.mesh");
    assert_eq!(
        code(&run(&[
            "refine",
            "-i",
            s(&c),
            "--elements",
            "0",
            "-o",
            s(&single)
        ])),
        0
    );
    let o = run(&[
        "refine",
        "-i",
        s(&single),
        "--elements",
        "18,19,20,21",
        "-o",
        s(&r2),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let o = run(&["coarsen", "-i", s(&single), "--parents", "5", "-o", s(&r2)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(
        code(&run(&[
            "generate", "--family", "hexes", "--nx", "2", "-o", "x"
        ])),
        64
    );
    assert_eq!(code(&run(&["refine", "-i", "a", "-o", "b"])), 64);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn io_failure_exits_four() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        code(&run(&["verify", "-i", s(&p(&dir, "missing.mesh"))])),
        4
    );
    let m = generate(&dir, "m.mesh", &["--family", "tri_rect", "--nx", "2"]);
    let out = p(&dir, "no/such/dir/c.mesh");
    assert_eq!(code(&run(&["color", "-i", s(&m), "-o", s(&out)])), 4);
}

#[test]
fn stats_prints_slopes() {
    let o = run(&[
        "stats",
        "--family",
        "quad_rect",
        "--sizes",
        "8,16,32,64",
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.matches("# resolution").count(), 4);
    let slope: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("conflict_slope="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.7..1.3).contains(&slope), "{slope}");
}
