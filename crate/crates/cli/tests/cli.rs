use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lenschain"))
}

fn pentagon_map() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/pentagon.map")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(": ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

fn floats(s: &str) -> Vec<f64> {
    s.trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(|t| t.trim().parse().unwrap())
        .collect()
}

#[test]
fn count_and_rot() {
    let o = run(&["count", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "primitive: 335\nrotational: 20\n");

    let o = run(&["rot", "3", "2", "7"]);
    assert_eq!(stdout(&o), "LLRRLRR\n");

    let o = run(&["params", "LLRRLRR"]);
    assert_eq!(stdout(&o), "S[3,2,7] d=4\n");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["params", "LRLRRR"]).status.code(), Some(3));
    assert_eq!(run(&["rot", "2", "2", "4"]).status.code(), Some(2));
    assert_eq!(run(&["count", "12", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "--seq", "LR"]).status.code(), Some(2));
    assert_eq!(run(&["params", "LXR"]).status.code(), Some(2));
    let map = pentagon_map();
    let map = map.to_str().unwrap();
    // the shrinking point makes the S-cycle system singular
    assert_eq!(
        run(&["solve", "--map", map, "--seq", "LRRLR"])
            .status
            .code(),
        Some(4)
    );
    // wrong sequence for this map
    assert_eq!(
        run(&[
            "check-shrink",
            "--map",
            map,
            "--l",
            "2",
            "--m",
            "1",
            "--n",
            "5"
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn help_documents_defaults() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for flag in [
        "--tol-sing",
        "--band",
        "--nmax",
        "--grid",
        "--box",
        "--threads",
        "--seed",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    assert!(text.contains("[default: 1e-9]"));
}

#[test]
fn pentagon_certificate_and_polygon() {
    let dir = tempfile::tempdir().unwrap();
    let map = pentagon_map();
    let map = map.to_str().unwrap();
    let orbit = dir.path().join("orbit.csv");
    let o = run(&[
        "check-shrink",
        "--map",
        map,
        "--l",
        "2",
        "--m",
        "2",
        "--n",
        "5",
        "--out",
        orbit.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(field(&text, "verdict"), "certificate");
    let p0 = floats(field(&text, "p0"));
    for (a, b) in p0.iter().zip([0.0, -1.0, 1.5]) {
        assert!((a - b).abs() < 1e-9, "{p0:?}");
    }
    assert!(std::fs::read_to_string(&orbit).unwrap().lines().count() > 5);

    let poly = dir.path().join("poly.csv");
    let o = run(&[
        "polygon",
        "--map",
        map,
        "--l",
        "2",
        "--m",
        "2",
        "--n",
        "5",
        "--out",
        poly.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(field(&text, "planarity_defect").parse::<f64>().unwrap() > 0.0);
    assert!(field(&text, "rigid_rotation_error").parse::<f64>().unwrap() < 1e-9);
    let csv = std::fs::read_to_string(&poly).unwrap();
    assert_eq!(csv.lines().next(), Some("vertex,x1,x2,x3"));
}

#[test]
fn solve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.map");
    std::fs::write(
        &cfg,
        "N = 2\nA_L = 0.5, 1; -0.3, 0\nA_R = -1.5, 1; -0.3, 0\nb = 1, 0\n",
    )
    .unwrap();
    let out = dir.path().join("cycle.csv");
    let o = run(&[
        "solve",
        "--map",
        cfg.to_str().unwrap(),
        "--seq",
        "LR",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(matches!(o.status.code(), Some(0 | 3)));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("index,s,")));
}

#[test]
fn scan_bytes_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for t in ["1", "8"] {
        let out = dir.path().join(format!("grid{t}.csv"));
        let o = run(&[
            "scan",
            "--family",
            "fig1",
            "--grid",
            "30x30",
            "--threads",
            t,
            "--multi-start",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn scan_feeds_find_shrink_feeds_check_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let g = grid.to_str().unwrap();
    let o = run(&[
        "scan",
        "--family",
        "fig1",
        "--box",
        "0.27,0.30,0.6,1.0",
        "--grid",
        "60x60",
        "--out",
        g,
    ]);
    assert_eq!(o.status.code(), Some(0));

    let star = dir.path().join("star.map");
    let o = run(&[
        "find-shrink",
        "--family",
        "fig1",
        "--l",
        "3",
        "--m",
        "2",
        "--n",
        "7",
        "--from-grid",
        g,
        "--out",
        star.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let xi = floats(field(&stdout(&o), "xi"));
    assert!((xi[0] - 0.28411946).abs() < 1e-7 && (xi[1] - 0.75829458).abs() < 1e-7);

    let o = run(&[
        "check-shrink",
        "--map",
        star.to_str().unwrap(),
        "--l",
        "3",
        "--m",
        "2",
        "--n",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));

    let curves = dir.path().join("curves.csv");
    let o = run(&[
        "boundaries",
        "--family",
        "fig1",
        "--l",
        "3",
        "--m",
        "2",
        "--n",
        "7",
        "--from-grid",
        g,
        "--out",
        curves.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&curves).unwrap();
    assert_eq!(csv.lines().next(), Some("curve_id,index,p1,p2,s_residual"));
    assert!(stdout(&o).contains("HitSingular"));
}

#[test]
fn unfold_report() {
    let o = run(&[
        "unfold",
        "--family",
        "fig1",
        "--l",
        "3",
        "--m",
        "2",
        "--n",
        "7",
        "--at",
        "0.2841,0.7583",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(field(&text, "k_signs_as_predicted"), "true");
    assert!(field(&text, "g1_coeff").parse::<f64>().unwrap() < 0.0);
    assert!(field(&text, "g2_coeff").parse::<f64>().unwrap() < 0.0);
}

#[test]
fn family_file_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let fam = dir.path().join("bad.fam");
    std::fs::write(
        &fam,
        "N = 2\nA_L = p1, 1; 0, 0\nA_R = 2, p2; 0, 0\nb = 1, 0\nbox = 0, 1, 0, 1\n",
    )
    .unwrap();
    let o = run(&["scan", "--family", fam.to_str().unwrap(), "--grid", "2x2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("differs"));
}
