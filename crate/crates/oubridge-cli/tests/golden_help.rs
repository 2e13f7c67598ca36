//! `--help` output of every command against files in `tests/golden`.
//! Run with `UPDATE_GOLDEN=1` to rewrite them.

use std::path::PathBuf;
use std::process::Command;

const COMMANDS: [&str; 9] =
    ["", "families", "kernel", "verify", "boundedness", "simulate", "compare", "suploc", "reduce"];

fn help(cmd: &str) -> String {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oubl"));
    if !cmd.is_empty() {
        c.arg(cmd);
    }
    let out = c.arg("--help").env_remove("OUBL_THREADS").output().unwrap();
    assert!(out.status.success(), "{cmd} --help failed");
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn help_matches_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut stale = Vec::new();
    for cmd in COMMANDS {
        let name = if cmd.is_empty() { "oubl" } else { cmd };
        let path = dir.join(format!("{name}.txt"));
        let text = help(cmd);
        if update {
            std::fs::write(&path, &text).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            stale.push(name);
        }
    }
    assert!(stale.is_empty(), "help differs from golden files for {stale:?}; rerun with UPDATE_GOLDEN=1");
}

#[test]
fn help_lists_every_flag_of_suploc() {
    let text = help("suploc");
    for flag in [
        "--config", "--out", "--threads", "--family", "--params", "--T", "--interval", "--grid", "--mc-check",
        "--mc-grid", "--seed", "--strict", "--y-max", "--y-nodes", "--y-nodes-check", "--alpha-max", "--order",
        "--kappa", "--ode-rtol", "--residual-tol", "--mass-nodes",
    ] {
        assert!(text.contains(flag), "{flag} missing from suploc --help");
    }
}
