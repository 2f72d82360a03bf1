use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use hismp::experiment::CSV_HEADER;

fn hismp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hismp")).args(args).env_remove("HISMP_SEED").output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hismp-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_subcommand() {
    let o = hismp(&["run", "--males", "1", "--females", "1", "--alpha", "0", "--beta", "1", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("mean_male_energy    1.000000"));

    assert_eq!(hismp(&["run", "--alpha", "1.5"]).status.code(), Some(2));
    let o = hismp(&["run", "--males", "2", "--females", "1", "--alpha", "0", "--beta", "1"]);
    assert!(stdout(&o).contains("single_males        1"));
}

#[test]
fn sweep_single_row_and_repeatable() {
    let dir = scratch("sweep");
    let run = |name: &str| {
        let path = dir.join(name);
        let o = hismp(&[
            "sweep",
            "--males",
            "20",
            "--females",
            "15",
            "--pairs",
            "0.5:0.5",
            "--reps",
            "1",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("wrote 1 rows"));
        fs::read_to_string(path).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first.lines().next(), Some(CSV_HEADER));
    assert_eq!(first.lines().count(), 2);
    assert!(first.lines().nth(1).unwrap().starts_with("0.500000,0.500000,20,15,0,"));
    assert_eq!(first, run("b.csv"));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn sweep_errors() {
    let o = hismp(&["sweep", "--males", "5", "--reps", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot write"));
    assert_eq!(hismp(&["sweep", "--females", "5,3"]).status.code(), Some(2));
    assert_eq!(hismp(&["sweep", "--pairs", "0:2"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("config");
    let cfg = dir.join("run.conf");
    fs::write(&cfg, "males = 2\nfemales = 1\nalpha = 0\nbeta = 1\n").unwrap();
    let o = hismp(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(stdout(&o).contains("single_males        1"));
    let o = hismp(&["run", "--config", cfg.to_str().unwrap(), "--females", "2"]);
    assert!(stdout(&o).contains("single_males        0"));
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(hismp(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::remove_dir_all(dir).ok();
}

#[test]
fn seed_from_environment() {
    let out = |env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_hismp"));
        cmd.args(["run", "--males", "30", "--females", "30", "--alpha", "0.5", "--beta", "0.5"]);
        match env {
            Some(v) => cmd.env("HISMP_SEED", v),
            None => cmd.env_remove("HISMP_SEED"),
        };
        stdout(&cmd.output().unwrap())
    };
    assert!(out(Some("12345")).contains("seed                12345"));
    assert!(out(None).contains("seed                0\n"));
}

#[test]
fn paper_figures_small_scale() {
    let dir = scratch("figures");
    let o = hismp(&["paper-figures", "--scale", "10", "--reps", "2", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let configs = |name: &str| -> Vec<(String, String)> {
        let text = fs::read_to_string(dir.join(format!("{name}.csv"))).unwrap();
        let mut seen: Vec<(String, String)> = Vec::new();
        for line in text.lines().skip(1) {
            let mut f = line.split(',');
            let key = (f.next().unwrap().to_string(), f.next().unwrap().to_string());
            if !seen.contains(&key) {
                seen.push(key);
            }
        }
        seen
    };
    assert_eq!(configs("case1").len(), 4);
    assert!(configs("case3").iter().all(|(a, _)| a == "1.000000"));
    assert!(configs("extremes").contains(&("0.500000".into(), "0.500000".into())));
    let rows = fs::read_to_string(dir.join("case2.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 4 * 20 * 2);

    // A preset file is reproducible through the plain sweep command.
    let again = dir.join("again.csv");
    hismp(&[
        "sweep",
        "--males",
        "10",
        "--pairs",
        "0.1:1,0.4:1,0.6:1,0.9:1",
        "--reps",
        "2",
        "--seed",
        "0",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(again).unwrap(), fs::read(dir.join("case1.csv")).unwrap());
    fs::remove_dir_all(dir).ok();
}

#[test]
fn verify_subcommand() {
    let o = hismp(&["verify", "--instances", "20", "--max-size", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("size  instances  passed  failed"));
    assert!(text.contains("all checks passed"));
    assert_eq!(hismp(&["verify", "--max-size", "12"]).status.code(), Some(2));
    let o = hismp(&["verify", "--max-size", "6", "--replay", "42"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn help_documents_defaults() {
    for sub in ["run", "sweep", "paper-figures", "verify"] {
        let o = hismp(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("[default:"), "{sub}");
        assert!(stdout(&o).contains("--config"), "{sub}");
    }
}
