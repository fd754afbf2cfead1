use std::path::Path;
use std::process::Command;

fn hss_eig(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hss-eig"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn column(report: &str, name: &str) -> String {
    let mut lines = report.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    row[i].to_string()
}

#[test]
fn gen_solve_verify_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(hss_eig(&["gen", "toeplitz", "600", "t.mtx"], d).0, 0);
    let head = std::fs::read_to_string(d.join("t.mtx")).unwrap();
    assert!(head.starts_with("symtridiag 600\n"));

    let flags = ["--hss-threshold", "200", "--leaf-size", "50", "--seed", "4", "--vectors", "--metrics"];
    let mut args = vec!["solve", "t.mtx", "--out", "a", "--method", "adc-rand", "--family", "toeplitz"];
    args.extend(flags);
    let (code, _, err) = hss_eig(&args, d);
    assert_eq!(code, 0, "{err}");
    let rep = std::fs::read_to_string(d.join("a.report.csv")).unwrap();
    assert!(rep.starts_with(hss_eig::cli::REPORT_HEADER));
    assert!(column(&rep, "orth_metric").parse::<f64>().unwrap() <= 1e-11);
    assert!(column(&rep, "flops_hss_mult").parse::<u64>().unwrap() > 0);

    // Same seed, same counters.
    args[3] = "b";
    assert_eq!(hss_eig(&args, d).0, 0);
    let rep_b = std::fs::read_to_string(d.join("b.report.csv")).unwrap();
    for c in ["flops_secular", "flops_update_dense", "flops_hss_construct", "flops_hss_mult"] {
        assert_eq!(column(&rep, c), column(&rep_b, c));
    }
    assert_eq!(
        std::fs::read(d.join("a.eig.csv")).unwrap(),
        std::fs::read(d.join("b.eig.csv")).unwrap()
    );

    let (code, out, _) = hss_eig(&["verify", "t.mtx", "a.eig.csv", "a.vec.bin", "--oracle"], d);
    assert_eq!(code, 0);
    let orth: f64 = column(&out, "orth_metric").parse().unwrap();
    let back: f64 = column(&out, "backward_metric").parse().unwrap();
    let dev: f64 = column(&out, "max_eig_dev").parse().unwrap();
    assert!(orth <= 1e-11 && back <= 1e-12 && dev <= 1e-11, "{out}");

    // Corrupt one eigenvector column.
    let mut bytes = std::fs::read(d.join("a.vec.bin")).unwrap();
    let at = 8 + 8 * (600 * 7 + 11);
    bytes[at..at + 8].copy_from_slice(&0.5f64.to_le_bytes());
    std::fs::write(d.join("bad.bin"), bytes).unwrap();
    let (_, out, _) = hss_eig(&["verify", "t.mtx", "a.eig.csv", "bad.bin"], d);
    assert!(column(&out, "orth_metric").parse::<f64>().unwrap() > 1e-3 / 600.0);
}

#[test]
fn threshold_above_order_matches_dense() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(hss_eig(&["gen", "hermite", "400", "h.mtx"], d).0, 0);
    assert_eq!(hss_eig(&["solve", "h.mtx", "--out", "x", "--method", "adc-rand"], d).0, 0);
    assert_eq!(hss_eig(&["solve", "h.mtx", "--out", "y", "--method", "dense-dc"], d).0, 0);
    assert_eq!(
        std::fs::read(d.join("x.eig.csv")).unwrap(),
        std::fs::read(d.join("y.eig.csv")).unwrap()
    );
}

#[test]
fn usage_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(hss_eig(&["gen", "clement", "0", "c.mtx"], d).0, 1);
    assert_eq!(hss_eig(&["gen", "circulant", "10", "c.mtx"], d).0, 1);
    assert_eq!(hss_eig(&["solve", "missing.mtx"], d).0, 3);
    assert_eq!(hss_eig(&["gen", "toeplitz", "10", "t.mtx"], d).0, 0);
    assert_eq!(hss_eig(&["solve", "t.mtx", "--method", "qr"], d).0, 1);
    std::fs::write(d.join("bad.mtx"), "symtridiag 2\n1 2\nx\n").unwrap();
    let (code, _, err) = hss_eig(&["solve", "bad.mtx"], d);
    assert_eq!(code, 3);
    assert!(err.contains("bad.mtx:3"), "{err}");
    assert_eq!(hss_eig(&["bench", "toeplitz", "--sizes", "9000"], d).0, 1);
}

#[test]
fn ranktable_and_bench() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (code, out, _) = hss_eig(&["ranktable", "--n", "400", "--m", "50,100,200"], d);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "m,rank");
    assert_eq!(rows.len(), 4);
    let (code, out, _) = hss_eig(
        &["bench", "laguerre", "--sizes", "128,256", "--methods", "dense-dc,adc-rand", "--hss-threshold", "400", "--leaf-size", "100"],
        d,
    );
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 5);
    assert!(out.lines().nth(1).unwrap().starts_with("laguerre,128,dense-dc,0,"));
}
