//! Drives the `cteq` binary.

use std::fs;
use std::process::Command;

fn cteq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cteq"))
}

#[test]
fn selftest_exits_zero() {
    let out = cteq().arg("selftest").output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 6, "{stdout}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    fs::write(&path, "[train]\nlearning_rate = 0.1\n").unwrap();
    let out = cteq().args(["generate", "--config"]).arg(&path).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("learning_rate"));
}

#[test]
fn subcommands_run_in_sequence() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("mini.toml");
    let cfg = format!(
        "output_dir = {:?}\nfractions = [1.0, 0.1]\nsource_epochs = 1\n\n[[targets]]\nformat = \"QAM64\"\npower_dbm = 2.0\n\n\
         [tx]\nn_symbols = 2000\n\n[topology]\nwindow_half = 2\nconv_filters = 3\nconv_kernel = 3\nlstm_hidden = 3\n\n\
         [train]\nepochs = 2\nbatch_size = 50\n",
        tmp.path().join("out")
    );
    fs::write(&path, cfg).unwrap();
    for cmd in ["generate", "train-source", "transfer", "report"] {
        let out = cteq()
            .arg(cmd)
            .arg("--config")
            .arg(&path)
            .args(["--seed", "9", "--noise-off"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let summary = fs::read_to_string(tmp.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("[qam64_2dBm]"));
    assert!(summary.contains("epoch_reduction_percent 92.0"));
    assert!(summary.contains("data_reduction_percent 90.0"));
    assert!(tmp.path().join("out/curves/panel_qam64_2dBm.csv").exists());
}
