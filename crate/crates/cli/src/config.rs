//! `key = value` config files, turned into long flags ahead of the command line.

use std::collections::BTreeMap;
use std::ffi::OsString;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("config line {}: bad key `{key}`", n + 1));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Removes `--config FILE` (or `--config=FILE`) from `args`, returning the path.
pub fn take_config_path(args: &mut Vec<OsString>) -> Result<Option<OsString>, String> {
    let Some(i) = args.iter().position(|a| {
        a == "--config" || a.to_str().is_some_and(|s| s.starts_with("--config="))
    }) else {
        return Ok(None);
    };
    let flag = args.remove(i);
    if let Some(path) = flag.to_str().and_then(|s| s.strip_prefix("--config=")) {
        return Ok(Some(path.into()));
    }
    if i < args.len() {
        Ok(Some(args.remove(i)))
    } else {
        Err("--config needs a file".into())
    }
}

/// Inserts the config entries as flags right after the subcommand so that
/// flags given on the command line come later and win.
pub fn splice(args: &mut Vec<OsString>, entries: &BTreeMap<String, String>) {
    let at = args.len().min(2);
    let mut flags = Vec::new();
    for (key, value) in entries {
        match value.as_str() {
            "true" => flags.push(OsString::from(format!("--{key}"))),
            "false" => {}
            _ => {
                flags.push(OsString::from(format!("--{key}")));
                flags.push(OsString::from(value));
            }
        }
    }
    args.splice(at..at, flags);
}
