//! Output formats as a downstream reader sees them, and the `chlab` binary's
//! exit-code contract. Parsing here is written independently of the library.

use std::path::{Path, PathBuf};
use std::process::Command;

use chlab::diagnostics::DiagnosticsRecord;
use chlab::experiments::output::{fmt_f64, read_csv, read_snapshot, write_snapshot, Snapshot};
use chlab::experiments::{parse_config, RunConfig};
use chlab::grid::{Grid, ScalarField};
use proptest::prelude::*;

const COLUMNS: &str = "t,phi_mean,sigma_mean,E,F,D,energy_balance_residual,min_phi,max_phi,delta,newton_iters,htilde_sup";

const SMALL_RUN: &str = "\
[grid]
n = 17
[model]
B = 0.01
eps = 0.1
chi = 0.5
alpha = 0.5
c0 = 0.1
[time]
dt = 1e-3
t_end = 0.05
[init]
phi_mean = 0.1
phi_amp = 0.4
sigma_mean = 0.2
sigma_amp = 0.1
seed = 7
[output]
csv_every = 5
snapshot_every = 25
";

fn chlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_chlab")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_cli(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    chlab(&args)
}

/// Splits a diagnostics CSV into header comments, column line and rows.
fn parse_csv(text: &str) -> (Vec<&str>, &str, Vec<Vec<f64>>) {
    let mut comments = Vec::new();
    let mut lines = text.lines();
    let columns = loop {
        let l = lines.next().expect("column line");
        if l.starts_with('#') {
            comments.push(l);
        } else {
            break l;
        }
    };
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (comments, columns, rows)
}

/// Decodes a CHSNAP1 file: header fields, φ block, σ block.
fn parse_snapshot(bytes: &[u8]) -> (Vec<String>, Vec<f64>, Vec<f64>) {
    let nl = bytes.iter().position(|&b| b == b'\n').unwrap();
    let header: Vec<String> = std::str::from_utf8(&bytes[..nl]).unwrap().split(' ').map(String::from).collect();
    assert_eq!(header[0], "CHSNAP1");
    let ndim: usize = header[1].parse().unwrap();
    let count: usize = header[2..2 + ndim].iter().map(|s| s.parse::<usize>().unwrap()).product();
    assert_eq!(header.len(), 2 + 2 * ndim + 1);
    let body = &bytes[nl + 1..];
    assert_eq!(body.len(), 16 * count);
    let vals: Vec<f64> = body.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    (header, vals[..count].to_vec(), vals[count..].to_vec())
}

#[test]
fn run_writes_documented_csv_snapshot_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL_RUN);
    let out = dir.path().join("out");
    let res = run_cli("run", &cfg, &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let text = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let (comments, columns, rows) = parse_csv(&text);
    assert_eq!(columns, COLUMNS);
    assert_eq!(columns.split(',').collect::<Vec<_>>(), DiagnosticsRecord::COLUMNS);
    assert!(comments.contains(&"# config begin") && comments.contains(&"# config end"));
    let embedded: String = comments
        .iter()
        .skip_while(|l| **l != "# config begin")
        .skip(1)
        .take_while(|l| **l != "# config end")
        .map(|l| format!("{}\n", &l[2..]))
        .collect();
    // the header holds the full resolved config
    let mut resolved = parse_config(&embedded).unwrap();
    assert_eq!(resolved.output.directory, out);
    resolved.output.directory = "out".into();
    assert_eq!(resolved, parse_config(SMALL_RUN).unwrap());
    // rows at t = 0, every 5 steps, and the last step
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[10][0] - 0.05).abs() < 1e-12);
    // mean law column against the recursion
    let mut m = 0.1;
    for k in 1..=50 {
        m = (m + 1e-3 * 0.5 * 0.1) / (1.0 + 1e-3 * 0.5);
        if k % 5 == 0 {
            assert!((rows[k / 5][1] - m).abs() < 1e-12);
        }
    }
    for r in &rows {
        assert_eq!(r[10].fract(), 0.0);
        assert!((r[9] - (1.0 - r[7].abs().max(r[8].abs()))).abs() < 1e-15);
    }

    let bytes = std::fs::read(out.join("final.chsnap")).unwrap();
    let (header, phi, sigma) = parse_snapshot(&bytes);
    assert_eq!(&header[1..4], &["1", "17", "1.0"]);
    assert_eq!(header[4].parse::<f64>().unwrap(), rows[10][0]);
    assert!(phi.iter().all(|p| p.abs() < 1.0));
    let sbar: f64 = sigma.iter().sum::<f64>() / 17.0;
    assert!(sbar.is_finite());
    let mid = std::fs::read(out.join("snap_00000025.chsnap")).unwrap();
    assert!((parse_snapshot(&mid).0[4].parse::<f64>().unwrap() - 0.025).abs() < 1e-12);

    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["command"], "run");
    assert_eq!(summary["truncated"], false);
    assert_eq!(summary["steps"], 50);
    assert!(summary["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
    let fin = &summary["final"];
    for c in DiagnosticsRecord::COLUMNS {
        assert!(!fin[c].is_null(), "final record lacks {c}");
    }
    assert_eq!(fin["t"].as_f64().unwrap(), rows[10][0]);
    assert_eq!(fin["E"].as_f64().unwrap(), rows[10][3]);
    assert_eq!(summary["config"]["model"]["chi"], 0.5);
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL_RUN);
    // the output directory is part of the embedded config, so reruns share it
    let a = dir.path().join("a");
    let files = ["diagnostics.csv", "final.chsnap", "snap_00000025.chsnap"];
    assert!(run_cli("run", &cfg, &a, &[]).status.success());
    let first: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(a.join(f)).unwrap()).collect();
    assert!(run_cli("run", &cfg, &a, &[]).status.success());
    for (f, bytes) in files.iter().zip(&first) {
        assert_eq!(&std::fs::read(a.join(f)).unwrap(), bytes, "{f}");
    }
    assert!(run_cli("run", &cfg, &a, &["--seed", "8"]).status.success());
    assert_ne!(std::fs::read(a.join("final.chsnap")).unwrap(), first[1]);
    let text = std::fs::read_to_string(a.join("diagnostics.csv")).unwrap();
    assert!(text.contains("# seed = 8"));
}

#[test]
fn constant_state_has_constant_energy_column() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\nn = 17\n[model]\nalpha = 0.5\nc0 = 0.2\n[time]\ndt = 0.01\nt_end = 0.5\n[init]\nphi_mean = 0.2\nphi_amp = 0\nsigma_mean = 0.4\nsigma_amp = 0\n";
    let cfg = write_config(dir.path(), "c.ini", text);
    let out = dir.path().join("out");
    assert!(run_cli("run", &cfg, &out, &[]).status.success());
    let table = read_csv(&out.join("diagnostics.csv")).unwrap();
    let e = table.column("E").unwrap();
    assert!(e.iter().all(|v| (v - e[0]).abs() <= 1e-12), "{e:?}");
    assert!(!table.truncated);
}

#[test]
fn dispersion_without_coupling_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\nn = 65\nlengths = 2.0\n[model]\nB = 0.01\neps = 0\nchi = 0\nalpha = 0\nc0 = 0.3\n[time]\ndt = 1e-4\n[dispersion]\nmodes = 1, 3, 6\n";
    let cfg = write_config(dir.path(), "d.ini", text);
    let out = dir.path().join("out");
    let res = run_cli("dispersion", &cfg, &out, &["--strict"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = read_csv(&out.join("dispersion.csv")).unwrap();
    let q = table.column("q").unwrap();
    let theory = table.column("theory1_re").unwrap();
    let curv = 1.0 / (1.0 - 0.09) - 2.0;
    assert_eq!(q.len(), 3);
    for (q, th) in q.iter().zip(&theory) {
        let closed = -q * (curv + 0.01 * q);
        // the other branch (σ diffusion) is −q; the table lists the larger first
        assert!((th - closed.max(-q)).abs() < 1e-10 * (1.0 + q * q));
    }
}

#[test]
fn compare_with_zero_perturbation_gives_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_RUN}[compare]\nperturbation = 0\n");
    let cfg = write_config(dir.path(), "c.ini", &text);
    let out = dir.path().join("out");
    assert!(run_cli("compare", &cfg, &out, &[]).status.success());
    let table = read_csv(&out.join("compare.csv")).unwrap();
    assert_eq!(table.columns, ["t", "d_phi", "d_sigma", "d_total"]);
    for c in ["d_phi", "d_sigma", "d_total"] {
        assert!(table.column(c).unwrap().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = write_config(dir.path(), "bad.ini", "[model]\nB = 0\nc0 = 1.0\ntheta0 = 0.5\n");
    let res = run_cli("run", &bad, &out, &[]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("H2: B must be > 0"));
    assert!(err.contains("H2: c0 must lie in (-1, 1)"));
    assert!(err.contains("H1: theta0 - theta := K must be > 0"));
    let json_line = err.lines().find(|l| l.starts_with('{')).unwrap();
    let v: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(v["error"], "config");
    assert_eq!(v["exit_code"], 2);

    let parse = write_config(dir.path(), "parse.ini", "[model]\nB 0.1\n");
    let res = run_cli("run", &parse, &out, &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));

    let missing = dir.path().join("missing.ini");
    assert_eq!(run_cli("run", &missing, &out, &[]).status.code(), Some(2));

    let stall = write_config(
        dir.path(),
        "stall.ini",
        "[grid]\nn = 33\n[model]\nB = 0.001\ntheta0 = 3.0\n[time]\ndt = 1.0\nt_end = 5.0\nnewton_max_iters = 1\n[init]\nphi_amp = 0.9\n",
    );
    let res = run_cli("run", &stall, &out, &[]);
    assert_eq!(res.status.code(), Some(3));

    // an unattainable tolerance fails the check; only --strict turns it into exit code 4
    let strict = write_config(
        dir.path(),
        "strict.ini",
        "[grid]\nn = 33\n[time]\ndt = 1e-2\n[dispersion]\nmodes = 8\nrel_tol = 1e-9\n",
    );
    assert_eq!(run_cli("dispersion", &strict, &out, &[]).status.code(), Some(0));
    assert_eq!(run_cli("dispersion", &strict, &out, &["--strict"]).status.code(), Some(4));

    assert_ne!(chlab(&["explode", "--config", "x"]).status.code(), Some(0));
}

#[test]
fn barrier_rejects_unsupported_configs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "b.ini", "[model]\neps = 0\n");
    let res = run_cli("barrier", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("eps > 0"));
}

#[test]
fn snapshot_profile_reloads_a_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.ini", SMALL_RUN);
    let a = dir.path().join("a");
    assert!(run_cli("run", &cfg, &a, &[]).status.success());
    let snap = a.join("final.chsnap");
    let text = SMALL_RUN.replace("seed = 7", &format!("profile = file\nfile = {}", snap.display()));
    let cfg2 = write_config(dir.path(), "reload.ini", &text);
    let b = dir.path().join("b");
    let res = run_cli("run", &cfg2, &b, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let before = read_csv(&a.join("diagnostics.csv")).unwrap();
    let after = read_csv(&b.join("diagnostics.csv")).unwrap();
    let first = read_snapshot(&snap).unwrap();
    // the reloaded state starts where the first run ended
    assert_eq!(after.rows[0][0], first.t);
    let last = before.rows.last().unwrap();
    assert_eq!(after.rows[0][1], last[1]);
    assert_eq!(after.rows[0][3], last[3]);
}

#[test]
fn truncated_snapshot_is_corrupt() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(&[4, 3, 3], &[1.0, 2.0, 0.5]).unwrap();
    let s = chlab::dynamics::State::new(ScalarField::from_fn(&grid, |x| x[0] - x[2]), ScalarField::constant(&grid, 0.25))
        .unwrap()
        .at_time(1.5);
    let path = dir.path().join("s.chsnap");
    write_snapshot(&path, &s).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let (header, phi, sigma) = parse_snapshot(&bytes);
    assert_eq!(header, ["CHSNAP1", "3", "4", "3", "3", "1.0", "2.0", "0.5", "1.5"]);
    // x fastest: node (i, j, k) sits at i + 4j + 12k
    assert_eq!(phi[1], 1.0 / 3.0);
    assert_eq!(phi[12], -0.25);
    assert!(sigma.iter().all(|v| *v == 0.25));
    assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(Snapshot::from_bytes(&wrong).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn floats_print_shortest_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let s = fmt_f64(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_round_trips_through_ini(
        b in 1e-4f64..1.0, eps in 0.0f64..1.0, chi in -2.0f64..2.0, alpha in 0.0f64..3.0,
        c0 in -0.9f64..0.9, dt in 1e-5f64..1e-1, seed in any::<u64>(), n in 8usize..40,
    ) {
        let text = format!(
            "[grid]\nn = {n}\n[model]\nB = {b:?}\neps = {eps:?}\nchi = {chi:?}\nalpha = {alpha:?}\nc0 = {c0:?}\n[time]\ndt = {dt:?}\n[init]\nseed = {seed}\n"
        );
        let cfg: RunConfig = parse_config(&text).unwrap();
        let again = parse_config(&cfg.to_ini()).unwrap();
        prop_assert_eq!(cfg, again);
    }

    #[test]
    fn snapshot_bytes_round_trip(vals in proptest::collection::vec(-0.99f64..0.99, 15), t in 0.0f64..1e6) {
        let grid = Grid::new(&[5, 3], &[1.0, 0.3]).unwrap();
        let phi = ScalarField::from_values(&grid, vals.clone()).unwrap();
        let sigma = ScalarField::from_values(&grid, vals.iter().map(|v| v * 3.0).collect()).unwrap();
        let s = chlab::dynamics::State::new(phi, sigma).unwrap().at_time(t);
        let snap = Snapshot::from_state(&s);
        prop_assert_eq!(Snapshot::from_bytes(&snap.to_bytes()).unwrap(), snap);
    }
}
