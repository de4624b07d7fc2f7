use proptest::prelude::*;
use ptwise_cli::output::{read_result, ResultFile};
use ptwise_cli::parse_complex;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ptwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptwise"))
        .args(args)
        .output()
        .expect("spawn ptwise")
}

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn solve_to(dir: &Path, tag: &str, args: &[&str]) -> (i32, PathBuf) {
    let prefix = dir.join(tag);
    let mut all = vec!["solve"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--output", prefix.to_str().unwrap()]);
    let out = ptwise(&all);
    (out.status.code().unwrap(), prefix)
}

fn result(prefix: &Path) -> ResultFile {
    read_result(&PathBuf::from(format!("{}.result.json", prefix.display()))).unwrap()
}

#[test]
fn convection_diffusion_branch_point() {
    let dir = tempfile::tempdir().unwrap();
    let (code, prefix) = solve_to(
        dir.path(),
        "cd",
        &["--problem", "convection_diffusion", "--lambda0", "1,0"],
    );
    assert_eq!(code, 0);
    let r = result(&prefix);
    assert_eq!(r.classification, "branch_point");
    assert!(r.lambda.re.hypot(r.lambda.im) < 1e-8);
    assert!(r.converged);
    let nu = r.branch_point.as_ref().unwrap().nu;
    assert!((nu.re + 1.0).abs() < 1e-8 && nu.im.abs() < 1e-8);
}

#[test]
fn result_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (_, prefix) = solve_to(
        dir.path(),
        "sh",
        &["--problem", "swift_hohenberg", "--lambda0", "1,1"],
    );
    let r = result(&prefix);
    let again: ResultFile = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, again);
}

#[test]
fn convergence_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (_, prefix) = solve_to(
        dir.path(),
        "ac",
        &[
            "--problem",
            "allen_cahn_layer",
            "--lambda0",
            "-0.5,0",
            "--n",
            "200",
        ],
    );
    let text = std::fs::read_to_string(format!("{}.convergence.csv", prefix.display())).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,restart_index,re_lambda,im_lambda,residual,log_scale"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), result(&prefix).iterations);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), 6);
        assert_eq!(row[0] as usize, i + 1);
    }
    assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1]));
}

#[test]
fn identical_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--problem",
        "allen_cahn_layer",
        "--lambda0",
        "-1.3,0.1",
        "--n",
        "200",
        "--seed",
        "7",
    ];
    let (_, a) = solve_to(dir.path(), "a", &args);
    let (_, b) = solve_to(dir.path(), "b", &args);
    let csv = |p: &Path| std::fs::read(format!("{}.convergence.csv", p.display())).unwrap();
    assert_eq!(csv(&a), csv(&b));
    let (mut ra, mut rb) = (result(&a), result(&b));
    ra.runtime_seconds = 0.0;
    rb.runtime_seconds = 0.0;
    assert_eq!(ra, rb);
}

#[test]
fn allen_cahn_eigenvalue_from_cli() {
    let dir = tempfile::tempdir().unwrap();
    let (code, prefix) = solve_to(
        dir.path(),
        "ac",
        &[
            "--problem",
            "allen_cahn_layer",
            "--lambda0",
            "-0.5,0",
            "--L",
            "10",
            "--n",
            "200",
        ],
    );
    assert_eq!(code, 0);
    let r = result(&prefix);
    assert_eq!(r.classification, "eigenvalue");
    // second-order grid error at dx = 0.1
    assert!(r.lambda.re.abs() < 2e-3 && r.lambda.im.abs() < 1e-10);
}

#[test]
fn explicit_problem_file_matches_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let file = problems_dir().join("allen_cahn_explicit.toml");
    let (c1, p1) = solve_to(
        dir.path(),
        "file",
        &["--problem", file.to_str().unwrap(), "--lambda0", "-1.3,0"],
    );
    let (c2, p2) = solve_to(
        dir.path(),
        "cat",
        &[
            "--problem",
            "allen_cahn_layer",
            "--lambda0",
            "-1.3,0",
            "--n",
            "200",
        ],
    );
    assert_eq!((c1, c2), (0, 0));
    let (a, b) = (result(&p1), result(&p2));
    assert!(
        (a.lambda.re - b.lambda.re).abs() < 1e-9,
        "{:?} vs {:?}",
        a.lambda,
        b.lambda
    );
    assert_eq!(a.classification, b.classification);
}

#[test]
fn robin_file_finds_eigenvalue_in_gamma() {
    let file = problems_dir().join("robin.toml");
    let out = ptwise(&[
        "solve",
        "--problem",
        file.to_str().unwrap(),
        "--lambda0",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: ResultFile = serde_json::from_slice(&out.stdout).unwrap();
    let g = r.gamma.unwrap();
    assert!((g.re - 1.0).abs() < 1e-8 && g.im.abs() < 1e-8);
    assert!((r.lambda.re - 1.0).abs() < 1e-8);
    assert_eq!(r.classification, "eigenvalue");
}

#[test]
fn unresolved_exits_two() {
    let out = ptwise(&[
        "solve",
        "--problem",
        "coupled_transport",
        "--eps",
        "0",
        "--lambda0",
        "0.3,0.2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let r: ResultFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.classification, "unresolved");
}

#[test]
fn errors_exit_one() {
    for args in [
        &["solve", "--problem", "no_such_problem", "--lambda0", "0,0"][..],
        &[
            "solve",
            "--problem",
            "convection_diffusion",
            "--lambda0",
            "1;2",
        ],
        &[
            "solve",
            "--problem",
            "allen_cahn_layer",
            "--param",
            "bogus=1",
            "--lambda0",
            "0,0",
        ],
        &["solve", "--problem", "convection_diffusion"],
        &[
            "branch-point",
            "--problem",
            "allen_cahn_layer",
            "--lambda0",
            "-0.5,0",
        ],
    ] {
        let out = ptwise(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn error_message_names_the_start() {
    let out = ptwise(&[
        "solve",
        "--problem",
        "convection_diffusion",
        "--lambda0",
        "1,0",
        "--k",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(
        msg.contains("from 1+0i") && msg.contains("unstable dimension 5"),
        "{msg}"
    );
}

#[test]
fn branch_point_mode_on_swift_hohenberg() {
    let out = ptwise(&[
        "branch-point",
        "--problem",
        "swift_hohenberg",
        "--lambda0",
        "0.2,0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r: ResultFile = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r.mode, "branch-point");
    let bp = r.branch_point.unwrap();
    assert!(bp.lambda.re.hypot(bp.lambda.im) < 1e-8);
    assert!((bp.nu.re.abs()) < 1e-6 && (bp.nu.im.abs() - 1.0).abs() < 1e-6);
}

#[test]
fn efkpp_speed_matches_closed_form() {
    let out = ptwise(&["spreading-speed", "--problem", "efkpp", "--eps", "0.2"]);
    assert_eq!(out.status.code(), Some(0));
    let r: ResultFile = serde_json::from_slice(&out.stdout).unwrap();
    let c = r.speed.unwrap();
    assert!((c - ptwise::problems::efkpp_speed(0.2)).abs() < 1e-6, "{c}");
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("dx");
    let out = ptwise(&[
        "sweep",
        "--problem",
        "allen_cahn_layer",
        "--lambda0",
        "-0.5",
        "--parameter",
        "dx",
        "--values",
        "0.1;-1;0.05",
        "--output",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let mut rdr = csv::Reader::from_path(format!("{}.sweep.csv", prefix.display())).unwrap();
    let rows: Vec<ptwise_cli::output::SweepRow> = rdr.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].error.contains("dx must be positive"));
    let (e1, e2) = (
        rows[0].re_lambda.unwrap().abs(),
        rows[2].re_lambda.unwrap().abs(),
    );
    // halving dx quarters the error of the second-order scheme
    assert!((e1 / e2 - 4.0).abs() < 0.1, "{e1} {e2}");
    assert!(rows[0].error.is_empty() && rows[0].iterations > 0);
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_ptwise"))
            .env("PTWISE_THREADS", threads)
            .args([
                "sweep",
                "--problem",
                "swift_hohenberg",
                "--parameter",
                "lambda0",
                "--values",
                "1,1;0.5,-0.5;2,0.3",
            ])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    assert_eq!(run("1"), run("3"));
}

proptest! {
    #[test]
    fn complex_argument_round_trips(re in -1e6f64..1e6, im in -1e6f64..1e6) {
        let z = parse_complex(&format!("{re},{im}")).unwrap();
        prop_assert_eq!((z.re, z.im), (re, im));
        let real_only = parse_complex(&format!("{re}")).unwrap();
        prop_assert_eq!((real_only.re, real_only.im), (re, 0.0));
    }
}
