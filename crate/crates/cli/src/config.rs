//! `key = value` config files. Each entry becomes the flag `--key value` of
//! the chosen subcommand, inserted before the command-line flags so that the
//! latter win.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::CommandFactory;

use crate::cli::Cli;

/// Entries in file order. Blank lines and `#` comments are skipped; keys may
/// use `.`, `_` or `-` as separators.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected `key = value`", n + 1))?;
        let key = k.trim().replace(['.', '_'], "-");
        if key.is_empty() {
            bail!("line {}: empty key", n + 1);
        }
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v);
        out.push((key, v.to_string()));
    }
    Ok(out)
}

/// Finds `--config FILE` or `--config=FILE` in the raw arguments.
fn config_path(args: &[String]) -> Option<&str> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(String::as_str);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p);
        }
    }
    None
}

/// Position of the subcommand name in the raw arguments.
fn subcommand_position(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            i += 2;
            continue;
        }
        if !a.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

/// Returns `args` with the config file's entries spliced in after the
/// subcommand name. Arguments are returned unchanged without `--config`.
pub fn merge(args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(path)).with_context(|| format!("reading config file {path}"))?;
    let entries = parse(&text).with_context(|| format!("config file {path}"))?;
    let Some(pos) = subcommand_position(&args) else {
        return Ok(args);
    };
    let mut root = Cli::command();
    root.build();
    let Some(sub) = root.find_subcommand(&args[pos]) else {
        // let clap report the unknown subcommand
        return Ok(args);
    };

    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("config file {path}: `config` cannot be set from a config file");
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| anyhow!("config file {path}: `{key}` is not a flag of `{}`", sub.get_name()))?;
        let takes_value = arg.get_action().takes_values();
        if takes_value {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                other => bail!("config file {path}: `{key}` expects true or false, got `{other}`"),
            }
        }
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn parses_entries_and_comments() {
        let e = parse("# comment\n eps = 1e-3\nnewton.tol=1e-9\nphi = \"t^2 / 2\"\n\n").unwrap();
        assert_eq!(
            e,
            vec![("eps".into(), "1e-3".into()), ("newton-tol".into(), "1e-9".into()), ("phi".into(), "t^2 / 2".into())]
        );
        assert!(parse("no separator").is_err());
    }

    #[test]
    fn config_entries_precede_command_line_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "eps = 1e-3\nvtk = true\ngrid = 0,0,0:1,1,1:9,9,9\n").unwrap();
        let args = argv(&format!("beltrami --config {} classify --f z --eps 1e-5", path.display()));
        let merged = merge(args).unwrap();
        let tail: Vec<&str> = merged[4..].iter().map(String::as_str).collect();
        assert_eq!(tail, ["--eps", "1e-3", "--vtk", "--grid", "0,0,0:1,1,1:9,9,9", "--f", "z", "--eps", "1e-5"]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "nonsense = 1\n").unwrap();
        let args = argv(&format!("beltrami classify --config {} --f z", path.display()));
        assert!(merge(args).is_err());
    }
}
