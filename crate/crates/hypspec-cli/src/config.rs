//! `key=value` config files merged under the command line.

use std::path::Path;

const SWITCHES: [&str; 1] = ["check"];

fn flag_given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let eq = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&eq))
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Append config entries for every flag the user did not pass.
pub fn merge(args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config file {path}: {e}"))?;
    let mut merged = args.clone();
    for (k, v) in parse_file(&text)? {
        if k == "config" || flag_given(&args, &k) {
            continue;
        }
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" | "1" | "yes" => merged.push(format!("--{k}")),
                "false" | "0" | "no" => {}
                _ => return Err(format!("config key {k}: expected true or false, got '{v}'")),
            }
        } else {
            merged.push(format!("--{k}={v}"));
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("hypspec-cfg-{}", std::process::id()));
        std::fs::write(&dir, "# sweep\nlambda = 500\nseed=3\ncheck=true\n").unwrap();
        let args: Vec<String> =
            ["hypspec", "variance", "--config", dir.to_str().unwrap(), "--lambda", "7"].map(String::from).to_vec();
        let m = merge(args).unwrap();
        std::fs::remove_file(&dir).ok();
        assert!(m.contains(&"--seed=3".to_string()));
        assert!(m.contains(&"--check".to_string()));
        assert!(!m.iter().any(|a| a == "--lambda=500"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(parse_file("lambda 5").is_err());
    }
}
