use std::fmt::Write as _;
use std::fs;
use std::process::{Command, Output};

fn scnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scnn")).args(args).env_remove("SCNN_SEED").output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let out = scnn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn lists_builtins() {
    let text = stdout_ok(&["list-experiments"]);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().any(|l| l.starts_with("fig5-psc-psp ")));
}

#[test]
fn encode_and_decode() {
    assert_eq!(stdout_ok(&["codec", "encode", "spike 5"]).trim(), "000085000000");
    let decoded = stdout_ok(&["codec", "decode", "000085000000"]);
    assert!(decoded.contains("addr: 5, enable: true"), "{decoded}");

    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.txt");
    let pkt = dir.path().join("events.pkt");
    fs::write(&events, "# stimulus\nspike 0 1 2\nwrite 0xa00 1\nread 0x800\n").unwrap();
    stdout_ok(&["codec", "encode", events.to_str().unwrap(), "--out", pkt.to_str().unwrap()]);
    assert_eq!(fs::metadata(&pkt).unwrap().len(), 18);
    assert_eq!(stdout_ok(&["codec", "decode", pkt.to_str().unwrap()]).lines().count(), 3);

    assert!(!scnn(&["codec", "encode", "spike 200"]).status.success());
    assert!(!scnn(&["codec", "decode", "0000"]).status.success());
}

#[test]
fn builtin_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("fig5.ini");
    fs::write(&ini, stdout_ok(&["experiment", "fig5-psc-psp", "--print-spec"])).unwrap();

    let from_file = dir.path().join("a");
    let builtin = dir.path().join("b");
    let summary = stdout_ok(&["run", ini.to_str().unwrap(), "--out", from_file.to_str().unwrap()]);
    assert!(summary.contains("tau"), "{summary}");
    stdout_ok(&["experiment", "fig5-psc-psp", "--out", builtin.to_str().unwrap()]);

    let trace = "fig5-psc-psp_trace.csv";
    let a = fs::read(from_file.join(trace)).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(builtin.join(trace)).unwrap());
}

#[test]
fn fits_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let decay = dir.path().join("decay.csv");
    let mut text = String::from("t_ms,v\n");
    for i in 0..200 {
        let t = i as f64 * 0.5;
        writeln!(text, "{t},{}", 80.0 * (-t / 12.5).exp()).unwrap();
    }
    fs::write(&decay, text).unwrap();
    let out = stdout_ok(&["fit", "exp", decay.to_str().unwrap()]);
    let tau: f64 = out.lines().find_map(|l| l.strip_prefix("tau ")).unwrap().parse().unwrap();
    assert!((tau - 12.5).abs() < 0.05, "{out}");

    let line = dir.path().join("line.csv");
    fs::write(&line, "x,y\n0,0\n10,0\n20,5\n30,10\n40,15\n").unwrap();
    let out = stdout_ok(&["fit", "linear", line.to_str().unwrap(), "--output-window", "1", "100"]);
    assert!(out.contains("slope 0.50000000"), "{out}");
    assert!(out.contains("x_intercept 10.000000"), "{out}");
}

#[test]
fn failures_are_reported() {
    let out = scnn(&["experiment", "no-such-run"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown experiment"));
    assert!(!scnn(&["run", "/nonexistent/spec.ini"]).status.success());
}
