use std::path::Path;
use std::process::{Command, Output};

use lvsmile_core::black_scholes::{bs_price, BsPoint};

fn lvsmile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvsmile"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_eps_prices_are_black_scholes_at_every_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let run = lvsmile(&[
        "price",
        "--eps",
        "0",
        "--a",
        "0.3",
        "--t",
        "0.5",
        "--k",
        "-0.4,0,0.25",
        "--order",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let table = rows(&out);
    assert_eq!(table.len(), 3 * 5);
    for row in &table {
        let k: f64 = row[0].parse().unwrap();
        let order: usize = row[2].parse().unwrap();
        let term: f64 = row[3].parse().unwrap();
        let cum: f64 = row[4].parse().unwrap();
        let bs = bs_price(&BsPoint::new(0.3, 0.5, 0.0, k).unwrap());
        assert!(
            (cum - bs).abs() < 1e-10,
            "k={k} order={order}: {cum} vs {bs}"
        );
        if order > 0 {
            assert_eq!(term, 0.0);
        }
    }
}

#[test]
fn order_zero_is_black_scholes_and_flat_smile() {
    let run = lvsmile(&["price", "--order", "0", "--k", "-0.3,0.2"]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().skip(1).collect();
    assert_eq!(lines.len(), 2);
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let bs = bs_price(&BsPoint::new(0.25, 1.0, 0.0, cells[0]).unwrap());
        assert!((cells[4] - bs).abs() < 1e-10);
    }

    let run = lvsmile(&["smile", "--order", "0", "--lmmr-count", "5"]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    for line in stdout.lines().skip(1) {
        assert_eq!(line.split(',').nth(3).unwrap(), "2.5000000000000000e-1");
    }
}

#[test]
fn values_are_written_with_17_significant_digits() {
    let run = lvsmile(&["price", "--k", "0", "--order", "1"]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("k,lmmr,order,term,cumulative_price"));
    let price = lines.next().unwrap().split(',').nth(3).unwrap().to_string();
    let mantissa = price.split('e').next().unwrap();
    assert_eq!(
        mantissa.chars().filter(char::is_ascii_digit).count(),
        17,
        "{price}"
    );
    // no --out: the manifest goes to stderr
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("command=price"));
    assert!(stderr.contains("tool_version="));
}

#[test]
fn manifest_reproduces_the_csv_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &[
            "price",
            "--sqrt-eps",
            "0.12",
            "--beta",
            "-0.5",
            "--lmmr-count",
            "7",
            "--order",
            "5",
        ],
        &[
            "smile",
            "--t",
            "2",
            "--y",
            "0.1",
            "--lmmr-min",
            "-0.5",
            "--lmmr-max",
            "0.5",
            "--lmmr-count",
            "5",
            "--order",
            "4",
            "--reference",
        ],
        &[
            "mc",
            "--k",
            "-0.1,0.2",
            "--paths",
            "4000",
            "--dt",
            "0.01",
            "--seed",
            "11",
            "--antithetic",
            "--order",
            "3",
        ],
    ];
    for (i, args) in cases.iter().enumerate() {
        let first = dir.path().join(format!("run{i}.csv"));
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["--out", path_str(&first)]);
        assert_eq!(code(&lvsmile(&a)), 0);

        let manifest = dir.path().join(format!("run{i}.csv.manifest"));
        let second = dir.path().join(format!("again{i}.csv"));
        let again = lvsmile(&[
            args[0],
            "--config",
            path_str(&manifest),
            "--out",
            path_str(&second),
        ]);
        assert_eq!(code(&again), 0);
        assert_eq!(
            std::fs::read(&first).unwrap(),
            std::fs::read(&second).unwrap(),
            "case {i}"
        );
        assert_eq!(
            std::fs::read(&manifest).unwrap(),
            std::fs::read(dir.path().join(format!("again{i}.csv.manifest"))).unwrap()
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# base run\na=0.3\nsqrt-eps=0.1\nk=0.1\n").unwrap();
    let manifest = dir.path().join("m.txt");
    let run = lvsmile(&[
        "price",
        "--config",
        path_str(&cfg),
        "--a",
        "0.2",
        "--order",
        "1",
        "--manifest",
        path_str(&manifest),
    ]);
    assert_eq!(code(&run), 0);
    let m = std::fs::read_to_string(&manifest).unwrap();
    assert!(m.contains("\na=0.2\n"), "{m}");
    assert!(m.contains("\neps=0.010000000000000002\n"), "{m}");
    assert!(m.contains("\nk=0.1\n"), "{m}");
}

#[test]
fn bad_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "a=0.25\nvolatility=0.3\n").unwrap();
    let cases: [&[&str]; 7] = [
        &["price", "--config", path_str(&bad)],
        &["price", "--eps", "0.01", "--sqrt-eps", "0.1"],
        &["price", "--k", "0", "--lmmr-min", "-1"],
        &["price", "--contour-offset", "-0.5"],
        &["smile", "--order", "9"],
        &["price", "--a", "-0.1"],
        &["price", "--no-such-flag"],
    ];
    for args in cases {
        let run = lvsmile(args);
        assert_eq!(
            code(&run),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    assert_eq!(
        code(&lvsmile(&["price", "--config", "/nonexistent/run.cfg"])),
        2
    );
}

#[test]
fn failed_strikes_exit_with_3_and_keep_the_good_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    // vega at k = 8 underflows
    let run = lvsmile(&[
        "smile",
        "--k",
        "0,8",
        "--order",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("k = 8"));
    let table = rows(&out);
    assert_eq!(table.len(), 3);
    assert!(table.iter().all(|r| r[0].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn smile_reference_column() {
    let run = lvsmile(&[
        "smile",
        "--eps",
        "0",
        "--k",
        "-0.3,0.3",
        "--order",
        "3",
        "--reference",
    ]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    for line in stdout.lines().skip(1) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[3], 0.25);
        assert!((cells[4] - 0.25).abs() < 1e-9, "{line}");
    }
}

#[test]
fn density_rows_per_grid_point_and_order() {
    let run = lvsmile(&[
        "density", "--order", "2", "--y-min", "-0.5", "--y-max", "0.5", "--y-step", "0.25",
    ]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "y,order,p_n");
    assert_eq!(lines.len(), 1 + 5 * 3);
    for line in &lines[1..] {
        let p: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(p > 0.0);
    }
}

#[test]
fn mc_columns_line_up_with_the_series() {
    let run = lvsmile(&[
        "mc", "--k", "0", "--paths", "20000", "--dt", "0.01", "--order", "4",
    ]);
    assert_eq!(code(&run), 0);
    let stdout = String::from_utf8(run.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("k,lmmr,mc_price,std_err,spectral_price,implied_mc,implied_spectral")
    );
    let cells: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert!((cells[2] - cells[4]).abs() < 4.0 * cells[3] + 5e-3 * cells[4]);
}

#[test]
fn check_reports_diagnostics() {
    let run = lvsmile(&["check", "--eps", "0"]);
    assert_eq!(code(&run), 0);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("bound trivially satisfied"), "{text}");
    assert!(text.contains("y* = -inf"), "{text}");

    let run = lvsmile(&["check", "--order", "1"]);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains("y* = -1.63"), "{text}");

    let run = lvsmile(&["check", "--order", "10", "--beta", "-0.5"]);
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains(", -1.5,"), "{text}");

    let run = lvsmile(&["check", "--order", "2", "--beta", "-2"]);
    let text = String::from_utf8(run.stdout).unwrap();
    // j + k = 1 gives -(1 + 2)/2 = -1.5, right on the default contour
    assert!(text.contains("is nudged to"), "{text}");
    assert!(text.contains("-1.5"), "{text}");
}
