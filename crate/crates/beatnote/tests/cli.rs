use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beatnote")).args(args).output().expect("spawn beatnote")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bnds");
    let b = dir.path().join("b.bnds");
    ok(&["gen", "--count", "3", "--seed", "7", "--out", p(&a)]);
    ok(&["gen", "--count", "3", "--seed", "7", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    ok(&["gen", "--count", "3", "--seed", "8", "--out", p(&b)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn infer_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("one.bnds");
    ok(&["gen", "--count", "1", "--out", p(&data)]);
    let first = ok(&["infer", "--input", p(&data), "--method", "st"]).stdout;
    let text = String::from_utf8(first.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "index,true_hz,estimate_hz,amplitude");
    let cols: Vec<&str> = lines[1].split(',').collect();
    let truth: f64 = cols[1].parse().unwrap();
    let est: f64 = cols[2].parse().unwrap();
    assert!((truth - est).abs() < 30.0, "{truth} vs {est}");
    let second = ok(&["infer", "--input", p(&data), "--method", "st"]).stdout;
    assert_eq!(first, second);
}

#[test]
fn nn_without_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("one.bnds");
    ok(&["gen", "--count", "1", "--out", p(&data)]);
    assert_eq!(run(&["infer", "--input", p(&data), "--method", "nn"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--method", "nn"]).status.code(), Some(2));
    assert_eq!(run(&["infer", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--windows", "10"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.bnds");
    std::fs::write(&junk, b"not a dataset").unwrap();
    let out = run(&["infer", "--input", p(&junk)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert_eq!(run(&["infer", "--input", p(&dir.path().join("missing"))]).status.code(), Some(1));
    let bad_model = run(&["infer", "--input", p(&junk), "--method", "nn", "--model", p(&junk)]);
    assert_eq!(bad_model.status.code(), Some(1));
}

#[test]
fn gen_infer_eval_round_trip_matches_direct_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("grid.bnds");
    let est = dir.path().join("est.csv");
    let via_files = dir.path().join("r1.csv");
    let direct = dir.path().join("r2.csv");
    let grid = "270:290:10";
    ok(&["gen", "--grid", grid, "--trials", "200", "--seed", "5", "--out", p(&data)]);
    ok(&["infer", "--input", p(&data), "--out", p(&est)]);
    ok(&["eval-sweep", "--estimates", p(&est), "--out", p(&via_files)]);
    ok(&["eval-sweep", "--grid", grid, "--trials", "200", "--seed", "5", "--out", p(&direct)]);
    let a = beatnote::report::read_report(std::fs::File::open(&via_files).unwrap()).unwrap();
    let b = beatnote::report::read_report(std::fs::File::open(&direct).unwrap()).unwrap();
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.target_hz, x.n), (y.target_hz, y.n));
        // the files hold f32 samples, the direct sweep f64
        assert!((x.mean_hz - y.mean_hz).abs() < 1e-3, "{x:?} {y:?}");
        assert!((x.sigma_hz - y.sigma_hz).abs() < 1e-3, "{x:?} {y:?}");
    }
    let meta = std::fs::read_to_string(dir.path().join("r2.csv.meta")).unwrap();
    assert!(meta.contains("trials = 200"));
    assert!(meta.contains("bin_width = 0.1"));
}

#[test]
fn sweep_dump_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.csv");
    let r2 = dir.path().join("r2.csv");
    let dump = dir.path().join("dump.csv");
    let args = ["eval-sweep", "--grid", "250:254:2", "--trials", "50", "--seed", "3"];
    ok(&[&args[..], &["--out", p(&r1), "--dump-estimates", p(&dump)]].concat());
    ok(&[&args[..], &["--out", p(&r2)]].concat());
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
    let text = std::fs::read_to_string(&dump).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 50);
    assert!(text.starts_with("target_hz,estimate_hz\n"));
}

#[test]
fn mask_labels_split_mode_frames() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.bnds");
    let split = dir.path().join("split.bnds");
    let labels = dir.path().join("labels.csv");
    let cfg = dir.path().join("fixed.cfg");
    std::fs::write(&cfg, "offset_min = 0\noffset_max = 0\ntrend_start_min = 1\ntrend_start_max = 1\ntrend_end_min = 1\ntrend_end_max = 1\n").unwrap();
    ok(&["gen", "--config", p(&cfg), "--grid", "280:281:5", "--trials", "20", "--intensity-depth", "0.8", "--out", p(&good)]);
    ok(&["mask", "--input", p(&good), "--ref-mean", "280", "--ref-sigma", "1", "--out", p(&labels)]);
    let text = std::fs::read_to_string(&labels).unwrap();
    assert!(text.starts_with("frame_index,label,freq_hz,contrast\n"));
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("0")), "{text}");

    ok(&["gen", "--config", p(&cfg), "--count", "20", "--intensity-depth", "0.3", "--out", p(&split)]);
    ok(&["mask", "--input", p(&split), "--ref-mean", "280", "--ref-sigma", "1", "--out", p(&labels)]);
    let text = std::fs::read_to_string(&labels).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(1) == Some("2")), "{text}");

    assert_eq!(run(&["mask", "--input", p(&split)]).status.code(), Some(2));
}

#[test]
fn bench_reports_ordered_percentiles() {
    let out = ok(&["bench", "--method", "st", "--windows", "100"]).stdout;
    let text = String::from_utf8(out).unwrap();
    let get = |k: &str| -> f64 {
        text.lines().find_map(|l| l.strip_prefix(k)).and_then(|v| v.trim_start_matches([' ', '=']).parse().ok()).unwrap()
    };
    let (p50, p95, p99) = (get("p50_us"), get("p95_us"), get("p99_us"));
    assert!(p50 <= p95 && p95 <= p99, "{text}");
    assert_eq!(get("windows"), 100.0);
}

#[test]
fn train_writes_model_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.cfg");
    let model = dir.path().join("m.bnmd");
    let history = dir.path().join("h.csv");
    std::fs::write(&cfg, "n_train = 64\nn_val = 16\nbatch_size = 16\nmax_epochs = 2\nchannels = 2,2,2\ndenoise_hidden = 4\nhead_channels = 2\nhidden = 4\n").unwrap();
    ok(&["train", "--config", p(&cfg), "--out", p(&model), "--history", p(&history), "--seed", "3"]);
    let h = std::fs::read_to_string(&history).unwrap();
    assert!(h.starts_with("epoch,train_loss,val_loss,seconds\n"));
    assert_eq!(h.lines().count(), 3);
    let data = dir.path().join("d.bnds");
    ok(&["gen", "--count", "5", "--out", p(&data)]);
    let out = ok(&["infer", "--input", p(&data), "--method", "nn", "--model", p(&model)]).stdout;
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 6);

    std::fs::write(&cfg, "typo_key = 1\n").unwrap();
    assert_eq!(run(&["train", "--config", p(&cfg), "--out", p(&model)]).status.code(), Some(1));
}
