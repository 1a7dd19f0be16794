use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn example(n: u32) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(format!("example{n}.config"));
    fs::read_to_string(path).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adt-design"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn line_starting<'a>(text: &'a str, prefix: &str) -> &'a str {
    text.lines()
        .find(|l| l.starts_with(prefix))
        .unwrap_or_default()
}

#[test]
fn solve_then_check_reports_the_same_gap() {
    let dir = TempDir::new().unwrap();
    for n in [1, 2] {
        let config = write(&dir, "c.toml", &example(n));
        let csv = dir.path().join("design.csv");
        let solved = run(&["solve", "--out", csv.to_str().unwrap()], &config);
        assert_eq!(solved.status.code(), Some(0), "{}", stderr(&solved));
        let checked = run(&["check", "--design", csv.to_str().unwrap()], &config);
        assert_eq!(checked.status.code(), Some(0), "{}", stderr(&checked));
        for prefix in ["equivalence gap", "max sensitivity", "objective"] {
            let a = line_starting(&stdout(&solved), prefix).to_string();
            assert!(!a.is_empty());
            assert_eq!(a, line_starting(&stdout(&checked), prefix));
        }
    }
}

#[test]
fn balanced_design_is_not_certified() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(1));
    let csv = write(
        &dir,
        "d.csv",
        "x_1,x_2,weight\n0,0,0.25\n0,1,0.25\n1,0,0.25\n1,1,0.25\n",
    );
    let o = run(&["check", "--design", csv.to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("certified = false"));
}

#[test]
fn unnormalized_design_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(1));
    let csv = write(
        &dir,
        "d.csv",
        "x_1,x_2,weight\n0,0,0.3\n0,1,0.2\n1,0,0.2\n1,1,0.2\n",
    );
    let o = run(&["check", "--design", csv.to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("normalization"), "{}", stderr(&o));
}

#[test]
fn system_order_above_component_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "c.toml",
        &example(2).replace("system_s = 2", "system_s = 4"),
    );
    let o = run(&["solve"], &config);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("BadSystemOrder"), "{}", stderr(&o));
}

#[test]
fn unreachable_quantile_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let text = example(1).replace("alpha = 0.5", "alpha = 0.5\nt_max = 10.0");
    let config = write(&dir, "c.toml", &text);
    let o = run(&["solve", "--alpha", "0.999"], &config);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("QuantileUnattainable"));
}

#[test]
fn thresholds_below_the_initial_mean_warn_of_degeneracy() {
    let dir = TempDir::new().unwrap();
    let text = example(1)
        .replace("threshold = 5.4", "threshold = 0.5")
        .replace("threshold = 5.8", "threshold = 0.5");
    let config = write(&dir, "c.toml", &text);
    let o = run(&["quantile"], &config);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("degenerate"));
    assert!(stdout(&o).starts_with("t_0.5 = 0.000000"));
}

#[test]
fn coefficient_sweep_writes_fifteen_rows() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(2));
    let o = run(&["sweep"], &config);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("value,status,t_alpha,"));
    assert!(header.ends_with("eff_star,eff_bar,F_T1,F_T2,F_T3,gap,certified"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("ok")));
    assert!(rows[0].starts_with("-2,"));
}

#[test]
fn use_condition_sweep_to_file_prints_a_summary() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(1));
    let csv = dir.path().join("s.csv");
    let o = run(
        &[
            "sweep",
            "--sweep-target",
            "x_u[2]",
            "--sweep-range",
            "-1:-0.1:0.1",
            "--out",
            csv.to_str().unwrap(),
        ],
        &config,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("10 rows written"));
    assert!(stdout(&o).contains("lower bounds"));
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 11);
}

#[test]
fn empty_sweep_range_is_an_error() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(2));
    let o = run(&["sweep", "--sweep-range", "1:0:0.5"], &config);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn misspelled_key_is_named() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "c.toml",
        &example(1).replace("use_condition", "use_conditon"),
    );
    let o = run(&["solve"], &config);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("use_conditon"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_is_an_error() {
    let o = run(&["quantile"], Path::new("/nonexistent/adt.toml"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot read"));
}

#[test]
fn product_design_for_example1() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", &example(1));
    let csv = dir.path().join("p.csv");
    let o = run(&["product-design", "--out", csv.to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("x_1 = 1: 0.222"));
    assert!(text.contains("x_2 = 1: 0.143"));
    assert!(!text.contains("warning"));
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 5);
}

#[test]
fn product_design_warns_inside_the_region() {
    let dir = TempDir::new().unwrap();
    let config = write(
        &dir,
        "c.toml",
        &example(1).replace("[-0.40, -0.20]", "[0.5, -0.2]"),
    );
    let o = run(&["product-design"], &config);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("warning"));
}
