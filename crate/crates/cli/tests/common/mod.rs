#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub struct GoldenCase {
    pub name: String,
    pub args: Vec<String>,
}

pub fn golden_cases() -> Vec<GoldenCase> {
    let text = std::fs::read_to_string(golden_dir().join("commands.txt")).expect("commands.txt");
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (name, args) = l.split_once('|').expect("name | args");
            GoldenCase {
                name: name.trim().to_string(),
                args: args.split_whitespace().map(String::from).collect(),
            }
        })
        .collect()
}

pub fn itereq(args: &[String]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itereq"))
        .args(args)
        .env_remove("ITEREQ_OUT_DIR")
        .output()
        .expect("run itereq")
}

/// `None` when the output matches the committed file, else a description.
pub fn check_golden(case: &GoldenCase, bless: bool) -> Option<String> {
    let out = itereq(&case.args);
    if !out.status.success() {
        return Some(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let path = golden_dir().join(format!("{}.csv", case.name));
    if bless {
        std::fs::write(&path, &out.stdout).expect("write golden");
        return None;
    }
    match std::fs::read(&path) {
        Ok(expected) if expected == out.stdout => None,
        Ok(expected) => Some(format!(
            "differs from {}\n--- expected\n{}\n--- actual\n{}",
            path.display(),
            String::from_utf8_lossy(&expected),
            String::from_utf8_lossy(&out.stdout)
        )),
        Err(e) => Some(format!("{}: {e} (run with ITEREQ_BLESS=1)", path.display())),
    }
}
