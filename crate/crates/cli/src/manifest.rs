//! Run manifests: flat `key = value` text next to every output file.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Ordered key/value pairs; keys may repeat (`arg`).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Entries whose key starts with `prefix`, in order.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> Vec<(&'a str, &'a str)> {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(" = ").ok_or_else(|| format!("manifest line {}: expected `key = value`", i + 1))?;
            m.push(k.trim(), v);
        }
        Ok(m)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# moran run manifest\n");
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

/// Every argument of the subcommand with its value after defaults.
pub fn resolved_params(sub: &ArgMatches) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = sub
        .ids()
        .filter_map(|id| {
            let raw = sub.get_raw(id.as_str())?;
            let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            Some((id.as_str().to_owned(), vals.join(",")))
        })
        .collect();
    out.sort();
    out
}

/// What a command produced, before it is written.
pub struct RunRecord<'a> {
    pub subcommand: &'a str,
    pub args: &'a [String],
    pub params: Vec<(String, String)>,
    pub inputs: Vec<(String, String)>,
    /// Output files; the first one's path determines the manifest path.
    pub outputs: Vec<(PathBuf, Vec<u8>)>,
}

pub fn write_outputs(rec: RunRecord<'_>) -> Result<PathBuf, CliError> {
    let mut m = Manifest::default();
    m.push("tool_version", TOOL_VERSION);
    m.push("subcommand", rec.subcommand);
    for a in rec.args {
        if a.contains('\n') {
            return Err(CliError::usage("arguments containing newlines cannot be recorded"));
        }
        m.push("arg", a.clone());
    }
    for (k, v) in rec.params {
        m.push(format!("param.{k}"), v);
    }
    for (k, v) in rec.inputs {
        m.push(format!("input.{k}"), v);
    }
    for (i, (path, bytes)) in rec.outputs.iter().enumerate() {
        fs::write(path, bytes).map_err(|e| CliError::failure(format!("writing {}: {e}", path.display())))?;
        m.push(format!("output.{i}.path"), path.display().to_string());
        m.push(format!("output.{i}.sha256"), sha256_hex(bytes));
    }
    let primary = &rec.outputs.first().expect("at least one output").0;
    let mpath = manifest_path(primary);
    fs::write(&mpath, m.render()).map_err(|e| CliError::failure(format!("writing {}: {e}", mpath.display())))?;
    Ok(mpath)
}

fn replace_flag(args: &mut Vec<String>, flag: &str, value: String) {
    if let Some(i) = args.iter().position(|a| a == flag) {
        if i + 1 < args.len() {
            args[i + 1] = value;
            return;
        }
    }
    if let Some(i) = args.iter().position(|a| a.starts_with(&format!("{flag}="))) {
        args[i] = format!("{flag}={value}");
        return;
    }
    args.push(flag.to_owned());
    args.push(value);
}

/// Re-runs a recorded command and compares input and output hashes with
/// the recorded ones.
pub fn replay(path: &Path, out: Option<&Path>, workers: Option<usize>) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("reading {}: {e}", path.display())))?;
    let old = Manifest::parse(&text).map_err(CliError::usage)?;
    if old.get("tool_version") != Some(TOOL_VERSION) {
        return Err(CliError::failure(format!(
            "manifest was written by version {:?}, this is {TOOL_VERSION}",
            old.get("tool_version")
        )));
    }
    let mut args: Vec<String> = old.get_all("arg").map(str::to_owned).collect();
    if let Some(out) = out {
        replace_flag(&mut args, "--out", out.display().to_string());
    }
    if let Some(w) = workers {
        if !old.with_prefix("param.workers").is_empty() {
            replace_flag(&mut args, "--workers", w.to_string());
        }
    }
    let out_path = args
        .iter()
        .position(|a| a == "--out")
        .and_then(|i| args.get(i + 1))
        .cloned()
        .or_else(|| args.iter().find_map(|a| a.strip_prefix("--out=").map(str::to_owned)))
        .ok_or_else(|| CliError::usage("manifest records no --out"))?;
    let mut argv: Vec<OsString> = vec!["moran".into()];
    argv.extend(args.iter().map(OsString::from));
    crate::run_inner(&argv)?;
    let new_path = manifest_path(Path::new(&out_path));
    let new_text = fs::read_to_string(&new_path).map_err(|e| CliError::failure(format!("reading {}: {e}", new_path.display())))?;
    let new = Manifest::parse(&new_text).map_err(CliError::failure)?;
    let hashes = |m: &Manifest| -> Vec<(String, String)> {
        m.entries
            .iter()
            .filter(|(k, _)| k.starts_with("input.") || (k.starts_with("output.") && k.ends_with(".sha256")))
            .cloned()
            .collect()
    };
    if hashes(&old) != hashes(&new) {
        return Err(CliError::failure(format!(
            "replay of {} did not reproduce the recorded hashes",
            path.display()
        )));
    }
    Ok(())
}
