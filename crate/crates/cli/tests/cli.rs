use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hurwitz(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hurwitz"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn table_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(&["table", "--n-max", "4", "--g-max", "2"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,g,numerator,denominator,log_value"));
    assert!(csv.lines().any(|l| l.starts_with("2,1,10,1,")));
    assert!(csv.lines().any(|l| l == "4,2,8778,1,9.08000387024817931"));
    assert_eq!(csv.lines().count(), 16);
    // no temporary files left behind
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn negative_size_is_an_argument_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&hurwitz(&["table", "--n-max", "-1"], dir.path())), 2);
    assert_eq!(code(&hurwitz(&["table", "--n-max=-1"], dir.path())), 2);
    assert_eq!(code(&hurwitz(&["table", "--precision-bits", "32"], dir.path())), 2);
    assert_eq!(code(&hurwitz(&["converge", "--theta", "-0.5"], dir.path())), 2);
    assert_eq!(code(&hurwitz(&["no-such-command"], dir.path())), 2);
    assert!(!dir.path().join("table.csv").exists());
}

#[test]
fn cell_cap_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(
        &["table", "--n-max", "100", "--g-max", "100", "--cell-cap", "1000"],
        dir.path(),
    );
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("10201 cells"));
}

#[test]
fn oracle_check_passes_and_negative_control_fails() {
    let dir = tempfile::tempdir().unwrap();
    let ok = hurwitz(&["oracle-check"], dir.path());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let csv = fs::read_to_string(dir.path().join("oracle.csv")).unwrap();
    assert!(csv.starts_with("d,k,raw_count,normalized\n2,1,1,1\n"));
    assert!(csv.contains("\n3,4,20,10\n"));

    let bad = hurwitz(&["oracle-check", "--normalization", "factorial-d"], dir.path());
    assert_eq!(code(&bad), 1);

    let guarded = hurwitz(&["oracle-check", "--max-d", "8"], dir.path());
    assert_eq!(code(&guarded), 2);
}

#[test]
fn ode_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(&["ode-check"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let theta = fs::read_to_string(dir.path().join("ode_theta.csv")).unwrap();
    assert!(theta.starts_with("theta,identity_residual,j_residual,f_identity_residual,lambda_prime_fd_error\n"));
    assert_eq!(theta.lines().count(), 201);
    let lambda = fs::read_to_string(dir.path().join("ode_lambda.csv")).unwrap();
    assert_eq!(lambda.lines().count(), 51);
}

#[test]
fn converge_stated_and_calibrated() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(&["converge"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.contains("kappa0=1.41421"));
    assert!(stdout.contains("data selects sqrt(2)"));
    let report = fs::read_to_string(dir.path().join("converge.txt")).unwrap();
    for key in [
        "kappa0=",
        "max_residual=",
        "slope_residual=",
        "slope_s=",
        "max_n2s=",
        "qbound_n1=",
    ] {
        assert!(report.lines().any(|l| l.starts_with(key)), "missing {key}");
    }
    let scan = fs::read_to_string(dir.path().join("scan_theta_1.csv")).unwrap();
    assert!(scan.starts_with("n,g,x,theta,q,alpha,beta,residual,s\n"));

    // rescaling only the boundary row cannot move the diagonal limits to 1
    let cal = hurwitz(&["converge", "--boundary-constant", "calibrated"], dir.path());
    assert_eq!(code(&cal), 1);
    assert!(String::from_utf8_lossy(&cal.stdout).contains("[FAIL] (calibrated"));
}

#[test]
fn repeated_theta_accumulates() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(
        &["dump-functions", "--theta", "0", "--theta", "0.5", "--theta", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("functions.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "theta,lambda,f,j,f_prime,f_double_prime,j_prime,lambda_prime");
    assert_eq!(rows.len(), 4);
    // theta = 0: j, f'', j' undefined and f' infinite
    assert_eq!(
        rows[1],
        "0,2.50000000000000000e-1,1.38629436111989062,,inf,,,-7.50000000000000000e-1"
    );
}

#[test]
fn omega_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = hurwitz(&["omega", "--n-max", "5", "--g-max", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("omega.csv")).unwrap();
    assert!(csv.starts_with("n,g,log_omega,branch\n1,0,"));
    assert!(csv.contains("\n4,0,2.546"));
    assert_eq!(csv.lines().count(), 1 + 5 * 4);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.ends_with("boundary_g0") || l.ends_with("general")));
}
