use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn optosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optosim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = optosim(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn rates_default_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    ok(&["rates", "--out", d]);
    let csv = read(&dir.path().join("rates.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), optosim::rates::SWEEP_CSV_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5 * 8 * 4);
    assert!(csv.contains("\nVCD-DPPM,3,300,18,40,133.333333,inf,1,unbounded\n"));
    for r in &rows {
        if r[1] == "2" && r[0] != "OOK" {
            assert_eq!(r[5], "100", "{r:?}");
        }
        if r[0] == "OOK" {
            let rate: f64 = r[2].parse().unwrap();
            assert_eq!(r[7], if rate > 16.0 { "0" } else { "1" }, "{r:?}");
        }
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("manifest.json"))).unwrap();
    assert_eq!(manifest["subcommand"], "rates");
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["config"]["orders"].as_array().unwrap().len(), 8);
}

#[test]
fn rates_bad_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = optosim(&[
        "rates",
        "--orders",
        "0,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("rates.csv").exists());
    let out = optosim(&[
        "rates",
        "--rates",
        "-4",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cloud_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (pattern, rate, repeats, expect) in [
        ("1", "16", "1000", "suppressed=0 "),
        ("001", "40", "1000", "suppressed=0 "),
        ("1", "20", "10", "suppressed=1 first_suppression=5"),
        ("111", "40", "1", "suppressed=1 first_suppression=2"),
    ] {
        let out = ok(&[
            "cloud",
            "--pattern",
            pattern,
            "--rate",
            rate,
            "--repeats",
            repeats,
            "--out",
            d,
        ]);
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains(expect), "{pattern} at {rate}: {stdout}");
    }
    assert_eq!(
        read(&dir.path().join("cloud_trace.csv")),
        "time_s,emitted,pre_level\n0,1,0\n0.025,1,0.6\n0.05,0,1.2\n"
    );
    for bad in ["", "10a1", "22"] {
        let out = optosim(&["cloud", "--pattern", bad, "--rate", "40", "--out", d]);
        assert_eq!(out.status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn textsim_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["textsim", "--out", dir.path().to_str().unwrap()]);
    let json: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("textsim.json"))).unwrap();
    assert_eq!(json["schema_version"], 1);
    let records = json["records"].as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["r_l_hz"], 40.0);
    assert_eq!(records[1]["r_l_hz"], 10000.0);
    for r in records {
        assert!(r["symbol_rate_ratio"].as_f64().unwrap() > 1.0);
    }
    let csv = read(&dir.path().join("textsim.csv"));
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}

#[test]
fn textsim_missing_corpus_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = optosim(&[
        "textsim",
        "--corpus",
        "/nonexistent/corpus.txt",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/corpus.txt"));
}

#[test]
fn ber_noiseless_is_error_free() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "ber",
        "--noiseless",
        "--bits",
        "20000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let json: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("ber.json"))).unwrap();
    let records = json["records"].as_array().unwrap();
    assert_eq!(records.len(), 18);
    for r in records {
        assert_eq!(r["ber"], 0.0);
        assert_eq!(r["snr_db"], "inf");
        assert_eq!(r["rng"], "ChaCha8Rng");
    }
}

#[test]
fn ber_grid_for_one_scheme() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "ber",
        "--scheme",
        "vcd-dppm",
        "--bits",
        "4000",
        "--format",
        "csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = read(&dir.path().join("ber.csv"));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    let cells: Vec<(String, String)> = rows
        .iter()
        .map(|r| {
            let c: Vec<&str> = r.split(',').collect();
            (c[4].to_string(), c[5].to_string())
        })
        .collect();
    for d in ["100", "250", "500"] {
        for a in ["0", "45", "90"] {
            assert!(
                cells.contains(&(d.to_string(), a.to_string())),
                "{d} m {a} deg"
            );
        }
    }
    assert!(!dir.path().join("ber.json").exists());
}

#[test]
fn outputs_are_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "ber".to_string(),
            "--snr-db".into(),
            "12".into(),
            "--bits".into(),
            "5000".into(),
            "--seed".into(),
            "99".into(),
            "--out".into(),
            d.to_str().unwrap().to_string(),
        ]
    };
    let run = |d: &Path, threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_optosim"))
            .args(args(d))
            .env("OPTOSIM_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
    };
    run(a.path(), "1");
    run(b.path(), "4");
    for f in ["ber.csv", "ber.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ber.toml");
    fs::write(
        &cfg,
        "seed = 5\nn_data_bits = 3000\n[link]\nmode = \"fixed-snr\"\nsnr_db = 14\n[sweep]\nschemes = [\"ook\"]\ndistances_m = [100]\nangles_deg = [0]\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&[
        "ber",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    let e = &manifest["config"]["experiment"];
    assert_eq!(e["seed"], 6);
    assert_eq!(e["n_data_bits"], 3000);
    assert_eq!(e["order_m"], 4);
    assert_eq!(e["link"]["mode"], "fixed-snr");
    assert!(manifest["timestamp"].as_str().unwrap().ends_with('Z'));
    let csv = read(&out.join("ber.csv"));
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",6"));
}

#[test]
fn bad_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("rates.toml");
    fs::write(&cfg, "orders = [1]\nrate_hz = [16]\n").unwrap();
    let out = optosim(&[
        "rates",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("rate_hz") && err.contains("rates.toml"),
        "{err}"
    );

    let out = optosim(&[
        "ber",
        "--config",
        "/nonexistent/ber.toml",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/ber.toml"));
}

#[test]
fn bundled_example_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("rates", "rates.toml"),
        ("textsim", "textsim.toml"),
        ("ber", "ber_sweep.toml"),
    ] {
        let out = dir.path().join(cmd);
        let mut args = vec![
            cmd,
            "--config",
            root.join(file).to_str().unwrap().to_owned().leak(),
        ];
        args.extend(["--out", out.to_str().unwrap().to_owned().leak()]);
        if cmd == "ber" {
            args.extend(["--bits", "2000"]);
        }
        ok(&args);
    }
}

#[test]
fn calibrate_sl_from_voltages() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("vpp.csv");
    fs::write(
        &input,
        "energy_mj,angle_deg,vpp_volts\n40,0,0.2\n60,0,0.4\n",
    )
    .unwrap();
    let d = dir.path().to_str().unwrap();
    let out = optosim(&[
        "calibrate-sl",
        "--input",
        input.to_str().unwrap(),
        "--out",
        d,
    ]);
    assert_eq!(out.status.code(), Some(1), "voltages need a hydrophone");
    ok(&[
        "calibrate-sl",
        "--input",
        input.to_str().unwrap(),
        "--sensitivity-db",
        "-200",
        "--hydrophone-distance-m",
        "1",
        "--out",
        d,
    ]);
    // 20 log10(0.1) + 200 = 180; 20 log10(0.2) + 200 = 186.0206
    let csv = read(&dir.path().join("source_levels.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[..2], ["energy_mj,angle_deg,sl_db", "40,0,180"]);
    assert!(lines[2].starts_with("60,0,186.0206"), "{csv}");
}
