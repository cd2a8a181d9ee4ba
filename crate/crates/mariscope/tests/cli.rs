use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn workdir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mariscope")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Relative paths and contents of every file under `dir`.
fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, r#"{"background":{"warmup":10}}"#).unwrap();
    path
}

#[test]
fn empty_frames_directory_is_an_invalid_manifest() {
    let dir = workdir("empty");
    fs::create_dir_all(dir.join("frames")).unwrap();
    fs::write(dir.join("manifest.json"), r#"{"name":"empty","frames":"frames","camera":"at-sea"}"#).unwrap();
    let out = run(&["pipeline", "--manifest", s(&dir.join("manifest.json")), "--out", s(&dir.join("out"))]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("invalid manifest"), "{stderr}");
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = workdir("preset");
    let out = run(&["synth", "--preset", "stormy", "--out", s(&dir.join("d"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stages_reproduce_the_pipeline() {
    let dir = workdir("stages");
    let config = small_config(&dir);
    let c = s(&config);
    let data = dir.join("data");
    ok(&["synth", "--preset", "buoy-motion", "--frames", "40", "--out", s(&data)]);
    let manifest = data.join("manifest.json");
    let (p, st) = (dir.join("pipeline"), dir.join("stages"));
    ok(&["--config", c, "pipeline", "--manifest", s(&manifest), "--out", s(&p)]);

    let (horizon, registered, masks, tracks, report) =
        (st.join("horizon.csv"), st.join("registered"), st.join("masks"), st.join("tracks.csv"), st.join("report.json"));
    ok(&["--config", c, "horizon", "--frames", s(&data.join("frames")), "--out", s(&horizon)]);
    ok(&["--config", c, "register", "--frames", s(&data.join("frames")), "--horizon", s(&horizon), "--out", s(&registered)]);
    ok(&["--config", c, "bgsub", "--frames", s(&registered), "--out", s(&masks)]);
    ok(&["--config", c, "detect", "--masks", s(&masks), "--out", s(&tracks)]);
    let transforms = registered.join("transforms.csv");
    ok(&[
        "--config", c, "eval", "--manifest", s(&manifest), "--horizon", s(&horizon), "--tracks", s(&tracks),
        "--transforms", s(&transforms), "--start", "10", "--out", s(&report),
    ]);

    for (a, b) in [(&horizon, "horizon.csv"), (&tracks, "tracks.csv"), (&report, "report.json"), (&transforms, "transforms.csv")] {
        assert_eq!(fs::read(a).unwrap(), fs::read(p.join(b)).unwrap(), "{b} differs");
    }
    assert_eq!(tree(&masks), tree(&p.join("masks")));
    fs::remove_file(&transforms).unwrap();
    assert_eq!(tree(&registered), tree(&p.join("registered")));
}

#[test]
fn onshore_passthrough_equals_identity_registration() {
    let dir = workdir("onshore");
    let config = small_config(&dir);
    let c = s(&config);
    let data = dir.join("data");
    ok(&["synth", "--preset", "calm-onshore", "--frames", "30", "--out", s(&data)]);
    let frames = data.join("frames");

    // three fixed points per frame: the fitted transform is the identity
    let mut csv = String::from("frame_index_a,frame_index_b,xa,ya,xb,yb\n");
    for b in 1..30 {
        for (x, y) in [(10, 10), (200, 30), (50, 200)] {
            csv.push_str(&format!("0,{b},{x},{y},{x},{y}\n"));
        }
    }
    let landmarks = dir.join("landmarks.csv");
    fs::write(&landmarks, csv).unwrap();

    let (identity, passthrough) = (dir.join("identity"), dir.join("passthrough"));
    ok(&["--config", c, "register", "--frames", s(&frames), "--mode", "landmarks", "--landmarks", s(&landmarks), "--out", s(&identity)]);
    ok(&["--config", c, "register", "--frames", s(&frames), "--camera", "on-shore", "--out", s(&passthrough)]);
    assert_eq!(tree(&identity), tree(&passthrough));

    let (m_identity, m_raw) = (dir.join("masks_identity"), dir.join("masks_raw"));
    ok(&["--config", c, "bgsub", "--frames", s(&identity), "--out", s(&m_identity)]);
    ok(&["--config", c, "bgsub", "--frames", s(&frames), "--out", s(&m_raw)]);
    let masks = tree(&m_raw);
    assert_eq!(masks.len(), 20);
    assert_eq!(tree(&m_identity), masks);
}

#[test]
fn png_frames_round_trip_through_horizon() {
    let dir = workdir("png");
    let data = dir.join("data");
    ok(&["synth", "--preset", "calm-onshore", "--frames", "3", "--format", "png", "--out", s(&data)]);
    let out = dir.join("horizon.csv");
    ok(&["horizon", "--frames", s(&data.join("frames")), "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("frame_index,Y,alpha,score,candidate_rank"));
    assert_eq!(lines.count(), 3);
}
