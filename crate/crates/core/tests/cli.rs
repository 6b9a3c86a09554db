//! The `cptsense` binary: outputs, manifests and exit codes.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cptsense"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn simulate_writes_headed_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["simulate", "--duration", "0.01", "--debug-truth", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let heads = [
        ("trajectory.csv", "t_seconds,x_hz"),
        ("counts.csv", "n,t_seconds,y,in_init"),
        ("truth.csv", "n,t_seconds,x_hz,charge_ok"),
        ("lineshape.csv", "delta_hz,rho_ee"),
        ("lineshape_lindblad.csv", "delta_hz,rho_ee"),
    ];
    for (file, head) in heads {
        let text = read(&dir.path().join(file));
        assert_eq!(text.lines().next(), Some(head), "{file}");
    }
    assert_eq!(read(&dir.path().join("counts.csv")).lines().count(), 1001);
    let m = read(&dir.path().join("manifest.txt"));
    for key in ["command = simulate", "seed = 1", "git_describe = ", "wall_time_s = ", "[config]", "ou.tau_c_s = 0.005"] {
        assert!(m.contains(key), "manifest lacks {key:?}:\n{m}");
    }
    assert!(dir.path().join("config.txt").exists());
}

#[test]
fn config_and_seed_fix_every_byte() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = a.path().join("run.cfg");
    std::fs::write(&cfg, "run.seed = 42\nrun.duration_s = 0.02\ncharge.fidelity = 0.75\n").unwrap();
    for d in [&a, &b] {
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.path().to_str().unwrap()]);
        assert!(o.status.success());
    }
    for f in ["trajectory.csv", "counts.csv", "lineshape.csv", "config.txt"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    // flags beat the file
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "43", "--out", b.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert_ne!(read(&a.path().join("counts.csv")), read(&b.path().join("counts.csv")));
    assert!(read(&b.path().join("config.txt")).contains("run.seed = 43"));
}

#[test]
fn stream_equals_batch_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(run(&["simulate", "--duration", "0.05", "--bins", "256", "--out", out]).status.success());
    let counts = dir.path().join("counts.csv");
    let o = run(&["estimate", "--bins", "256", "--counts", counts.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let batch = std::fs::read(dir.path().join("estimates.csv")).unwrap();

    let mut child = bin()
        .args(["stream", "--bins", "256", "--strict"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    feed(&mut child, std::fs::read(&counts).unwrap());
    let o = child.wait_with_output().unwrap();
    assert!(o.status.success());
    assert_eq!(o.stdout, batch);
}

// writes from a thread so a full stdout pipe cannot stall the writer
fn feed(child: &mut std::process::Child, bytes: Vec<u8>) {
    let mut stdin = child.stdin.take().unwrap();
    std::thread::spawn(move || {
        let _ = stdin.write_all(&bytes);
    });
}

fn stream_with(input: &str, args: &[&str]) -> Output {
    let mut child = bin()
        .arg("stream")
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    feed(&mut child, input.as_bytes().to_vec());
    child.wait_with_output().unwrap()
}

#[test]
fn stream_edge_cases() {
    let o = stream_with("", &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());

    let bad = "0,0,0,1\n1,0.00001,0,0\n2,0.00002,x,0\n3,0.00003,0,0\n";
    let o = stream_with(bad, &["--strict", "--bins", "128"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 3);

    let o = stream_with(bad, &["--bins", "128"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["crlb", "--set", "ou.sigmahz=1"]).status.code(), Some(1));
    assert_eq!(run(&["crlb", "--set", "ou.tau_c_s=-1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["estimate", "--counts", missing.to_str().unwrap(), "--out", out]).status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "n,t_seconds,y,in_init\n0,0,-1,0\n").unwrap();
    assert_eq!(run(&["estimate", "--counts", bad.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    // information piles up far faster than the slow field forgets it
    let o = run(&["crlb", "--values", "1e9", "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn crlb_and_bench_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(run(&["crlb", "--values", "0.001,0.01", "--out", out]).status.success());
    let text = read(&dir.path().join("crlb.csv"));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "tau_c_s,bound_over_sigma2");
    let b1: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    let b10: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
    assert!(b10 < b1 && b1 < 1.0);

    assert!(run(&["bench", "--updates", "20000", "--bins", "128", "--out", out]).status.success());
    let text = read(&dir.path().join("bench.csv"));
    assert_eq!(text.lines().next(), Some("p50_ns,p99_ns,max_ns"));
    let v: Vec<u64> = text.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!(v[0] <= v[1] && v[1] <= v[2]);
}

#[test]
fn small_sweeps_and_scoring_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = ["--trajectories", "2", "--duration", "0.05", "--bins", "128", "--out", out];
    let o = bin().args(["sweep-tauc", "--values", "0.001,0.002"]).args(common).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = read(&dir.path().join("sweep_tauc.csv"));
    assert_eq!(t.lines().next(), Some("tau_c_s,estimator,var_over_sigma2,stderr,crlb_over_sigma2"));
    assert_eq!(t.lines().count(), 7);

    assert!(bin().args(["sweep-bias", "--values", "0,4e6"]).args(common).status().unwrap().success());
    assert!(read(&dir.path().join("sweep_bias.csv")).starts_with("bias_hz,var_over_sigma2,stderr\n0,"));
    assert!(bin().args(["sweep-sigma", "--values", "1e6"]).args(common).status().unwrap().success());
    assert!(read(&dir.path().join("sweep_sigma.csv")).starts_with("sigma_hz,var_over_sigma2,stderr\n1000000,"));

    let o = bin().args(["estimate", "--estimators", "ou-bayes,avg-count"]).args(common).output().unwrap();
    assert!(o.status.success());
    let v = read(&dir.path().join("variance.csv"));
    assert_eq!(v.lines().count(), 3);
    assert!(v.lines().nth(2).unwrap().starts_with("avg-count,"));
}
