use std::process::Command;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/reference.json");

fn multiris(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_multiris"))
        .args(args)
        .output()
        .expect("spawn")
}

#[test]
fn outage_prints_csv_to_stdout() {
    let out = multiris(&["op", "--config", CONFIG]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("variable,x,scheme,metric,method,value,uncertainty")
    );
    // 31 powers, two schemes, two methods each
    assert_eq!(lines.filter(|l| l.contains(",OP,")).count(), 31 * 4);
}

#[test]
fn missing_config_is_a_usage_error() {
    let out = multiris(&["ec", "--config", "/nonexistent/scenario.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_flag_exits_one_and_help_exits_zero() {
    assert_eq!(multiris(&["op", "--bogus"]).status.code(), Some(1));
    assert_eq!(multiris(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_output_is_identical_across_runs() {
    let args = [
        "--threads",
        "1",
        "sweep",
        "--config",
        CONFIG,
        "--var",
        "tx_power",
        "--from",
        "0",
        "--to",
        "30",
        "--step",
        "10",
        "--trials",
        "5000",
        "--seed",
        "5",
    ];
    let a = multiris(&args);
    let b = multiris(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).contains("monte-carlo"));
}
