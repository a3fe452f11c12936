use std::process::{Command, Output};

fn slice_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slice-sim"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const G1: &str = "125.89254117941675";
const G2: &str = "79.43282347242814";

#[test]
fn trace_rsma_worked_example() {
    let gains = format!("{G1};{G2}");
    let o = slice_sim(&[
        "trace", "--set", "scheme=rsma", "--gains", &gains, "--g-tar", "10", "--beta", "0.8",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# scheme=rsma"), "{text}");
    assert!(text.contains("2.621549"), "{text}");
    assert!(text.contains("1.676077"), "{text}");
}

#[test]
fn trace_noma_worked_example() {
    let gains = format!("{G1};{G2}");
    let o = slice_sim(&["trace", "--set", "scheme=noma", "--gains", &gains, "--g-tar", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("rate=1.258284"), "{text}");
    assert!(text.contains("rate=3.039342"), "{text}");
}

#[test]
fn bad_config_exits_2() {
    let o = slice_sim(&["beta-sweep-urllc", "--set", "eps_u=7"]);
    assert_eq!(o.status.code(), Some(2));
    let o = slice_sim(&["region-urllc", "--preset", "fig99"]);
    assert_eq!(o.status.code(), Some(2));
    let o = slice_sim(&["region-urllc", "--config", "/nonexistent/x.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_search_exits_3() {
    // The eMBB rate is beyond what channel inversion can reach.
    let o = slice_sim(&[
        "beta-sweep-mmtc",
        "--set",
        "scenario=embb-mmtc",
        "--set",
        "scheme=noma",
        "--set",
        "r_b=30",
        "--trials",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let args = [
        "beta-sweep-mmtc",
        "--set",
        "scenario=embb-mmtc",
        "--set",
        "scheme=oma,noma",
        "--set",
        "r_b=1",
        "--set",
        "eps_b=0.05",
        "--set",
        "gtar_grid_size=2",
        "--set",
        "lambda_tolerance=1",
        "--trials",
        "500",
        "--seed",
        "3",
        "--json",
        "--out",
        path.to_str().unwrap(),
    ];
    let o = slice_sim(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "beta-sweep-mmtc");
    assert_eq!(v["seed"], 3);
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
}
