use std::process::{Command, Output};

use qtomo::io::{parse_trace, save_problem};
use qtomo::problems::rrr_cycle_instance;

fn qtomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtomo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_algorithm_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    save_problem(&rrr_cycle_instance(), &problem).unwrap();
    let o = qtomo(&["solve", "--algorithm", "newton", problem.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("newton"));
}

#[test]
fn missing_or_malformed_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1,").unwrap();
    assert_eq!(qtomo(&["solve", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qtomo(&["solve", "/nonexistent/p.json"]).status.code(), Some(2));
    assert_eq!(qtomo(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn gen_then_solve_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("p.json");
    let trace = dir.path().join("qem.csv");
    let o = qtomo(&["gen", "--dim", "4", "--bases", "3", "--shots", "500", "--seed", "3", "--out", problem.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = qtomo(&["solve", "--tol", "1e-6", "--max-iters", "5000", "--trace", trace.to_str().unwrap(), problem.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("stop_reason: certificate_met"), "{text}");

    let rows = parse_trace(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let last = rows.last().unwrap();
    assert!(last.values[2].min(last.values[3]) <= 1e-6);
}

#[test]
fn compare_writes_one_trace_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let problem = dir.path().join("cycle.json");
    save_problem(&rrr_cycle_instance(), &problem).unwrap();
    let traces = dir.path().join("traces");
    let o = qtomo(&[
        "compare", "--max-iters", "200", "--trace-dir", traces.to_str().unwrap(), problem.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["qem", "rrr", "drrr-exact", "drrr-armijo"] {
        assert!(traces.join(format!("{name}.csv")).exists());
        assert!(text.contains(name));
    }
    let rrr_line = text.lines().find(|l| l.starts_with("rrr ")).unwrap();
    assert!(rrr_line.contains("max_iters"), "{rrr_line}");
}

#[test]
fn portfolio_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let returns = dir.path().join("r.csv");
    std::fs::write(&returns, "a,b\n1.0,0.5\n0.5,1.0\n").unwrap();
    let o = qtomo(&["portfolio", "--returns", returns.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("weights: 0.500000000000,0.500000000000"), "{}", stdout(&o));

    std::fs::write(&returns, "1.0,-0.5\n").unwrap();
    assert_eq!(qtomo(&["portfolio", "--returns", returns.to_str().unwrap()]).status.code(), Some(2));
}
