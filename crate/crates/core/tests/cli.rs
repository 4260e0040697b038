use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ebvs");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ebvs(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env("RUST_LOG", "warn").env_remove("EBVS_SEED");
    if let Some(s) = seed {
        cmd.env("EBVS_SEED", s);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn noisy_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(configs().join("suite/rectangle_1.toml")).unwrap();
    let path = dir.join("noisy.toml");
    fs::write(&path, format!("{text}\n[noise]\nrate = 2000.0\n")).unwrap();
    path
}

#[test]
fn simulate_record_then_replay_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("suite/triangle_1.toml");
    let rec = dir.path().join("events.txt");
    let live = ebvs(&["simulate", "--config", cfg.to_str().unwrap(), "--record", rec.to_str().unwrap()], None);
    assert_eq!(live.status.code(), Some(0), "{}", String::from_utf8_lossy(&live.stderr));
    assert!(stdout(&live).contains("e_grasp_px"));

    let replay = ebvs(&["replay", "--events", rec.to_str().unwrap(), "--config", cfg.to_str().unwrap()], None);
    assert_eq!(replay.status.code(), Some(0));
    assert_eq!(stdout(&replay), stdout(&live));
}

#[test]
fn seed_override_changes_noise_and_matches_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = noisy_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let record = |name: &str, seed: Option<&str>| {
        let path = dir.path().join(name);
        let out = ebvs(&["simulate", "--config", cfg, "--record", path.to_str().unwrap()], seed);
        assert!(out.status.code().is_some_and(|c| c <= 1));
        fs::read(path).unwrap()
    };
    let plain = record("a.txt", None);
    // The config's own seed is 1.
    assert_eq!(record("b.txt", Some("1")), plain);
    assert_ne!(record("c.txt", Some("2")), plain);
}

#[test]
fn bad_inputs_exit_with_error_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("suite/triangle_1.toml");
    let cfg = cfg.to_str().unwrap();

    assert_eq!(ebvs(&["simulate", "--config", cfg], Some("twelve")).status.code(), Some(2));
    assert_eq!(ebvs(&["simulate", "--config", "/nonexistent.toml"], None).status.code(), Some(2));

    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "seed = 1\n[object]\nshape = \"hexagon\"\n").unwrap();
    assert_eq!(ebvs(&["simulate", "--config", broken.to_str().unwrap()], None).status.code(), Some(2));

    let events = dir.path().join("bad.txt");
    fs::write(&events, "# ebvs-events v1 width=240 height=180\n100,10,10,1\n50,11,10,0\n").unwrap();
    assert_eq!(ebvs(&["detect", "--events", events.to_str().unwrap()], None).status.code(), Some(2));
}

#[test]
fn unfinished_trial_exits_with_failure_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("suite/rectangle_2.toml")).unwrap();
    let short = dir.path().join("short.toml");
    fs::write(&short, text.replace("max_sim_time = 30.0", "max_sim_time = 0.2")).unwrap();
    let out = ebvs(&["simulate", "--config", short.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("success = false"));
}

#[test]
fn detect_then_heatmap_finds_the_corners() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("suite/rectangle_1.toml");
    let rec = dir.path().join("events.txt");
    let corners = dir.path().join("corners.txt");
    let pgm = dir.path().join("map.pgm");
    ebvs(&["simulate", "--config", cfg.to_str().unwrap(), "--record", rec.to_str().unwrap()], None);

    let det = ebvs(&["detect", "--events", rec.to_str().unwrap(), "--out", corners.to_str().unwrap()], None);
    assert_eq!(det.status.code(), Some(0));
    assert!(stdout(&det).starts_with("events_in="), "{}", stdout(&det));
    let all = fs::read_to_string(&rec).unwrap().lines().count();
    let kept = fs::read_to_string(&corners).unwrap().lines().count();
    assert!(kept > 1 && kept < all);

    let heat = ebvs(&["heatmap", "--corners", corners.to_str().unwrap(), "--pgm", pgm.to_str().unwrap()], None);
    assert_eq!(heat.status.code(), Some(0));
    let text = stdout(&heat);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,value"));
    let peaks = text.lines().filter(|l| !l.starts_with(['x', '#'])).count();
    assert!(peaks >= 1, "{text}");
    assert!(text.lines().last().unwrap().starts_with("# centroid "));
    assert!(fs::read(&pgm).unwrap().starts_with(b"P5"));
}

#[test]
fn suite_reports_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["triangle_1", "rectangle_1"] {
        fs::copy(configs().join(format!("suite/{name}.toml")), dir.path().join(format!("{name}.toml"))).unwrap();
    }
    let csv = dir.path().join("suite.csv");
    let out = ebvs(
        &["suite", "--config-dir", dir.path().to_str().unwrap(), "--csv", csv.to_str().unwrap()],
        None,
    );
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("triangle_1") && text.contains("rectangle_1"));
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 3);
}
