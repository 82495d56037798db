use std::path::Path;
use std::process::{Command, Output};

use hullswarm::analysis::{MetricSeries, VerdictReport};
use hullswarm::dynamics::Trajectory;
use hullswarm::scenarios::Scenario;
use hullswarm_cli::runner::{CERTIFICATES_FILE, METRICS_FILE, PLOT_FILE, TRAJECTORY_FILE, VERDICTS_FILE};
use hullswarm_cli::CertificatesDoc;
use quick_xml::events::Event;
use quick_xml::Reader;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hullswarm"));
    c.env_remove("HULLSWARM_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn hullswarm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn assert_outputs(dir: &Path) {
    for f in [TRAJECTORY_FILE, METRICS_FILE, CERTIFICATES_FILE, VERDICTS_FILE] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
}

#[test]
fn ujlc_siss_run_succeeds_and_writes_all_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("u");
    let o = run(&["run", "--scenario", "ujlc", "--check", "siss", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_outputs(&out);
    assert!(String::from_utf8_lossy(&o.stdout).contains("siss"));
    assert!(!out.join(PLOT_FILE).exists());
}

#[test]
fn counterexample_siss_fails_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = run(&["run", "--scenario", "counterexample", "--check", "siss", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let report = VerdictReport::from_toml(&String::from_utf8(read(&out.join(VERDICTS_FILE))).unwrap()).unwrap();
    assert!(!report.all_hold());
}

#[test]
fn bad_input_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "scenario = 3\n").unwrap();
    assert_eq!(code(&run(&["run", "--config", cfg.to_str().unwrap()])), 1);
    std::fs::write(&cfg, "nonsense_key = true\n").unwrap();
    assert_eq!(code(&run(&["run", "--config", cfg.to_str().unwrap()])), 1);
    let out = tmp.path().join("x");
    let o = out.to_str().unwrap();
    assert_eq!(code(&run(&["run", "--scenario", "no-such-thing", "--out", o])), 1);
    assert_eq!(code(&run(&["run", "--dt", "-1", "--out", o])), 1);
    assert_eq!(code(&run(&["run", "--check", "bogus"])), 1);
    assert_eq!(code(&run(&["run", "--unknown-flag"])), 1);
    assert_eq!(code(&run(&["run", "--scenario", "counterexample", "--horizon", "1e6", "--out", o])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn divergence_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("div.toml");
    std::fs::write(
        &cfg,
        "scenario = \"ujlc\"\nhorizon = 5.0\nchecks = [\"siss\"]\n[params.weights]\nkind = \"constant\"\na = 1.0\nb = 1e300\n",
    )
    .unwrap();
    let out = tmp.path().join("d");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
}

#[test]
fn plot_is_well_formed_svg() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    let o = run(&["run", "--scenario", "ujlc", "--check", "siss", "--plot", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(read(&out.join(PLOT_FILE))).unwrap();
    let mut reader = Reader::from_str(&text);
    let (mut root, mut polylines) = (None, 0);
    loop {
        match reader.read_event().expect("well-formed svg") {
            Event::Start(e) | Event::Empty(e) => {
                let name = String::from_utf8(e.name().as_ref().to_vec()).unwrap();
                if root.is_none() {
                    root = Some(name.clone());
                }
                if name == "polyline" {
                    polylines += 1;
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    assert_eq!(root.as_deref(), Some("svg"));
    assert_eq!(polylines, 3, "dist, q and envelope");
}

#[test]
fn identical_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let dirs: Vec<_> = ["a", "b"].iter().map(|s| tmp.path().join(s)).collect();
    for d in &dirs {
        let o = run(&["run", "--scenario", "jlc-acyclic", "--seed", "3", "--check", "g2", "--out", d.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    for f in [TRAJECTORY_FILE, METRICS_FILE, CERTIFICATES_FILE, VERDICTS_FILE] {
        assert_eq!(read(&dirs[0].join(f)), read(&dirs[1].join(f)), "{f} differs");
    }
}

#[test]
fn emitted_files_reload_losslessly() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("r");
    let o = run(&[
        "run", "--scenario", "ujlc", "--check", "siss", "--check", "siiss", "--check", "dini", "--check", "tracking",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(matches!(code(&o), 0 | 2));

    let traj_bytes = read(&out.join(TRAJECTORY_FILE));
    let traj = Trajectory::read_csv(&traj_bytes[..]).unwrap();
    let mut again = Vec::new();
    traj.write_csv(&mut again).unwrap();
    assert_eq!(again, traj_bytes);

    let metric_bytes = read(&out.join(METRICS_FILE));
    let metrics = MetricSeries::read_csv(&metric_bytes[..]).unwrap();
    let mut again = Vec::new();
    metrics.write_csv(&mut again).unwrap();
    assert_eq!(again, metric_bytes);

    let cert_text = String::from_utf8(read(&out.join(CERTIFICATES_FILE))).unwrap();
    let certs = CertificatesDoc::from_toml(&cert_text).unwrap();
    assert!(certs.uniform.is_some());
    assert_eq!(certs.to_toml(), cert_text);
    assert_eq!(CertificatesDoc::from_toml(&certs.to_toml()).unwrap(), certs);

    let verdict_text = String::from_utf8(read(&out.join(VERDICTS_FILE))).unwrap();
    let report = VerdictReport::from_toml(&verdict_text).unwrap();
    assert_eq!(report.to_toml(), verdict_text);

    let sc_path = tmp.path().join("scenario.toml");
    let o = run(&["scenario", "--scenario", "jlc-bidirectional", "--seed", "2", "--out", sc_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(read(&sc_path)).unwrap();
    let sc = Scenario::from_toml(&text).unwrap();
    assert_eq!(sc.to_toml(), text);
    let out2 = tmp.path().join("from-file");
    let o = run(&["run", "--scenario", sc_path.to_str().unwrap(), "--check", "g2", "--out", out2.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn batch_runs_write_isolated_directories() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("batch");
    let o = run(&[
        "run", "--batch", "ujlc,jlc-acyclic", "--batch", "counterexample", "--check", "g2", "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut dirs: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    assert_eq!(dirs.len(), 3);
    for (i, d) in dirs.iter().enumerate() {
        assert!(d.file_name().unwrap().to_str().unwrap().starts_with(&format!("{i:02}-")));
        assert_outputs(d);
    }
    assert_ne!(read(&dirs[0].join(TRAJECTORY_FILE)), read(&dirs[1].join(TRAJECTORY_FILE)));
    // a batch run of one scenario matches the single run
    let single = tmp.path().join("single");
    run(&["run", "--scenario", "jlc-acyclic", "--check", "g2", "--out", single.to_str().unwrap()]);
    assert_eq!(read(&single.join(METRICS_FILE)), read(&dirs[1].join(METRICS_FILE)));
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let env_dir = tmp.path().join("from-env");
    let o = bin()
        .args(["run", "--scenario", "jlc-acyclic", "--check", "g2"])
        .env("HULLSWARM_OUT", &env_dir)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_outputs(&env_dir);

    let cfg = tmp.path().join("cfg.toml");
    let cfg_dir = tmp.path().join("from-config");
    std::fs::write(&cfg, format!("scenario = \"jlc-acyclic\"\nout = {:?}\n", cfg_dir.to_str().unwrap())).unwrap();
    let flag_dir = tmp.path().join("from-flag");
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .env("HULLSWARM_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_outputs(&cfg_dir);
    let o = bin()
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", flag_dir.to_str().unwrap()])
        .env("HULLSWARM_OUT", &env_dir)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_outputs(&flag_dir);

    let o = bin().args(["run", "--scenario", "jlc-acyclic"]).current_dir(tmp.path()).output().unwrap();
    assert_eq!(code(&o), 0);
    assert_outputs(&tmp.path().join("hullswarm-out"));
}

#[test]
fn scenario_subcommand_prints_toml() {
    let o = run(&["scenario", "--scenario", "counterexample"]);
    assert_eq!(code(&o), 0);
    let sc = Scenario::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert!(sc.window.is_none());
}
