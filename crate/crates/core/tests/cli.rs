use std::path::Path;
use std::process::Command;

use clap::CommandFactory;
use dtc_core::cli::{parse_and_dispatch, read_config, Cli};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("dtc").chain(args.iter().copied());
    let code = parse_and_dispatch(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap()).collect())
        .collect()
}

#[test]
fn evolve_at_full_flip_revives_every_other_period() {
    let (code, out, err) = run(&[
        "evolve",
        "--n-sat",
        "9",
        "--spin",
        "5/2",
        "--lambda",
        "2pi",
        "--g",
        "3.0",
        "--periods",
        "40",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(
        out.lines().next().unwrap(),
        "n,m_sat_x,m_c_x,entropy,fidelity"
    );
    let rows = data_rows(&out);
    assert_eq!(rows.len(), 40);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0] as usize, i + 1);
        assert!(r[3].abs() < 1e-10);
        if (i + 1) % 2 == 0 {
            assert!((r[4] - 1.0).abs() < 1e-10, "n={}: {}", i + 1, r[4]);
        }
    }
}

#[test]
fn evolve_with_zero_periods_is_header_only() {
    let (code, out, _) = run(&[
        "evolve",
        "--n-sat",
        "3",
        "--spin",
        "1",
        "--lambda",
        "1.2",
        "--g",
        "0.4",
        "--periods",
        "0",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, "n,m_sat_x,m_c_x,entropy,fidelity\n");
}

#[test]
fn evolve_reports_other_axes_and_separate_kicks() {
    let (code, out, err) = run(&[
        "evolve",
        "--n-sat",
        "2",
        "--spin",
        "1/2",
        "--lambda",
        "0",
        "--g-s",
        "pi/2",
        "--g-c",
        "0",
        "--periods",
        "1",
        "--axis",
        "y",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.starts_with("n,m_sat_y,m_c_y"));
    let rows = data_rows(&out);
    // A quarter turn about z carries +x to +y on the satellites only.
    assert!(
        (rows[0][1] - 0.5).abs() < 1e-12 && rows[0][2].abs() < 1e-12,
        "{rows:?}"
    );
    assert!((rows[0][4] - 0.25).abs() < 1e-12);
}

#[test]
fn classify_special_point() {
    let (code, out, err) = run(&[
        "classify", "--n-sat", "8", "--spin", "2", "--regime", "special",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("predicted 4, measured 4"), "{out}");
}

#[test]
fn classify_two_pi_regime() {
    let (code, out, err) = run(&[
        "classify",
        "--n-sat",
        "9",
        "--spin",
        "2",
        "--regime",
        "lambda-2pi",
        "--g",
        "0.83",
        "--n-max",
        "60",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(
        out.contains("satellites: predicted sinusoidal, measured sinusoidal"),
        "{out}"
    );
    assert!(
        out.contains("central: predicted period doubling, measured period doubling"),
        "{out}"
    );
}

#[test]
fn invalid_input_exits_with_two() {
    for args in [
        &[
            "evolve",
            "--n-sat",
            "0",
            "--spin",
            "1",
            "--lambda",
            "1",
            "--g",
            "1",
            "--periods",
            "3",
        ][..],
        &[
            "evolve",
            "--n-sat",
            "2",
            "--spin",
            "1/3",
            "--lambda",
            "1",
            "--g",
            "1",
            "--periods",
            "3",
        ],
        &[
            "evolve",
            "--n-sat",
            "2",
            "--spin",
            "1",
            "--lambda",
            "1",
            "--periods",
            "3",
        ],
        &[
            "classify",
            "--n-sat",
            "9",
            "--spin",
            "2",
            "--regime",
            "regular-1",
        ],
        &[
            "classify", "--n-sat", "9", "--spin", "2", "--regime", "chaotic",
        ],
        &[
            "sweep",
            "--n-sat",
            "2",
            "--spin",
            "1",
            "--periods",
            "4",
            "--stride",
            "8",
        ],
        &["states", "--n-sat", "9", "--spin", "5/2", "--time", "7"],
        &["frobnicate"],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn runtime_failure_exits_with_one() {
    let (code, _, err) = run(&[
        "qfi", "--n-sat", "3", "--spin", "1/2", "--n", "8", "--delta", "1e-9",
    ]);
    assert_eq!(code, 1, "{err}");
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir/out.csv");
    let (code, _, err) = run(&[
        "evolve",
        "--n-sat",
        "2",
        "--spin",
        "1",
        "--lambda",
        "1",
        "--g",
        "1",
        "--periods",
        "2",
        "--output",
        missing.to_str().unwrap(),
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# evolve defaults\nn_sat = 3\n--spin = 3/2\nlambda = pi\ng = pi/2\nperiods = 9\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let (code, out, err) = run(&["evolve", "--config", c]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(data_rows(&out).len(), 9);
    let (code, out, _) = run(&["evolve", "--config", c, "--periods", "4"]);
    assert_eq!(code, 0);
    assert_eq!(data_rows(&out).len(), 4);

    let parsed = read_config(&cfg).unwrap();
    assert_eq!(parsed[0], ("n-sat".to_string(), "3".to_string()));
    std::fs::write(&cfg, "periods 9\n").unwrap();
    assert_eq!(run(&["evolve", "--config", c]).0, 2);
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            dir.path().join("absent").to_str().unwrap()
        ])
        .0,
        2
    );
}

#[test]
fn sweep_writes_csv_and_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, cp) = (
        dir.path().join("a.csv"),
        dir.path().join("b.csv"),
        dir.path().join("s.ckpt"),
    );
    let base = [
        "sweep",
        "--n-sat",
        "3",
        "--spin",
        "1",
        "--lambda-min",
        "0.5",
        "--lambda-max",
        "pi",
        "--lambda-steps",
        "3",
        "--g-min",
        "0.1",
        "--g-max",
        "pi/2",
        "--g-steps",
        "2",
        "--periods",
        "8",
        "--stride",
        "2",
    ];
    let mut first = base.to_vec();
    first.extend(["--workers", "1", "--output", a.to_str().unwrap()]);
    assert_eq!(run(&first).0, 0);
    let mut second = base.to_vec();
    second.extend([
        "--workers",
        "3",
        "--checkpoint",
        cp.to_str().unwrap(),
        "--output",
        b.to_str().unwrap(),
    ]);
    assert_eq!(run(&second).0, 0);
    assert_eq!(run(&second).0, 0);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(data_rows(&text).len(), 6);
    assert_eq!(run(&[&base[..], &["--workers", "0"]].concat()).0, 2);
}

#[test]
fn qfi_and_states_produce_tables() {
    let (code, out, err) = run(&[
        "qfi",
        "--n-sat",
        "5",
        "--spin",
        "1/2",
        "--times",
        "8,16,24,32",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.lines().count(), 5);
    assert!(err.contains("time exponent alpha"), "{err}");

    let (code, out, err) = run(&["states", "--n-sat", "9", "--spin", "5/2", "--time", "6"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("index,k_sat,l_c,re,im"));
    let amps = out
        .lines()
        .skip_while(|l| !l.starts_with("index"))
        .skip(1)
        .count();
    assert!(amps >= 2, "{out}");
}

#[test]
fn binary_honours_worker_cap_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_dtc");
    let out = Command::new(exe)
        .args([
            "sweep",
            "--n-sat",
            "2",
            "--spin",
            "1/2",
            "--lambda-steps",
            "2",
            "--g-steps",
            "2",
            "--periods",
            "4",
        ])
        .env("DTC_WORKERS", "1")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(data_rows(&String::from_utf8(out.stdout).unwrap()).len(), 4);
    let bad = Command::new(exe)
        .args(["evolve", "--n-sat", "x"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn every_flag_is_documented_in_readme() {
    let readme =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md"))
            .unwrap();
    let cli = Cli::command();
    let mut missing = Vec::new();
    for sub in cli.get_subcommands() {
        if !readme.contains(&format!("dtc {}", sub.get_name())) {
            missing.push(format!("subcommand {}", sub.get_name()));
        }
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                if long != "help" && !readme.contains(&format!("--{long}")) {
                    missing.push(format!("{} --{long}", sub.get_name()));
                }
            }
        }
    }
    assert!(missing.is_empty(), "undocumented: {missing:?}");
}
