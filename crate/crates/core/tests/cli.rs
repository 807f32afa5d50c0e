use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iet-lab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn orbit_prints_exact_points() {
    let o = run(&["iet", "orbit", "--preset", "golden", "--x", "0", "--n", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x,x_approx");
    // golden rotation by (√5 − 1)/2
    assert!(lines[1].starts_with("0,0,"));
    assert!(lines[2].starts_with("1,-1/2 + 1/2*sqrt(5),0.618"));
    assert!(lines[3].starts_with("2,-2 + 1*sqrt(5),0.236"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn lab_list_names_every_experiment() {
    let o = run(&["lab", "list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["power-saving", "atkinson", "f5-census", "friend-census", "shadow-probe"] {
        assert!(text.contains(name), "{name}");
    }
}

const CONFIG: &str = r#"
name = "cli"
seed = 3

[iet]
preset = "golden"
recurrence_depth = 500

[step]
widths = ["1/2", "1/2"]
values = ["1", "-1"]

[power_saving]
gamma = "GAMMA"
horizons = [1000]
samples = 8
"#;

#[test]
fn lab_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, CONFIG.replace("GAMMA", "1/2")).unwrap();
    let out = dir.path().join("good");
    let o = run(&["lab", "run", "power-saving", "--config", good.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.json").exists());
    assert!(out.join("power_saving.csv").exists());

    // |S_N| ≥ 1 > 1000^(1/100) for some sample
    let tight = dir.path().join("tight.toml");
    fs::write(&tight, CONFIG.replace("GAMMA", "1/100")).unwrap();
    let out = dir.path().join("tight");
    let o = run(&["lab", "run", "all", "--config", tight.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, CONFIG.replace("GAMMA", "1/2").replace("seed = 3", "seed = \"x\"")).unwrap();
    let o = run(&["lab", "run", "all", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["lab", "run", "nonsense", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_two() {
    let o = run(&["iet", "orbit", "--preset", "golden", "--x", "0.5", "--n", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}
