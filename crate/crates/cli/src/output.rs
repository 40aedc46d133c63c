//! Atomic file writes and the config-hash header every artifact carries.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::CliError;

pub const HASH_PREFIX: &str = "# config_hash: ";

/// Writes `contents` to a temp file in the target directory, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(path.display().to_string(), e);
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Prepends the hash comment line to a CSV body.
pub fn hashed_csv(hash: &str, body: &str) -> String {
    format!("{HASH_PREFIX}{hash}\n{body}")
}

/// Hash recorded in a CSV's first line or a JSON file's `config_hash` field.
pub fn read_hash(path: &Path) -> Result<Option<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => {
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            Ok(v.get("config_hash").and_then(|h| h.as_str()).map(str::to_string))
        }
        _ => Ok(text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix(HASH_PREFIX))
            .map(|h| h.trim().to_string())),
    }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    let mut paths: Vec<PathBuf> = entries
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Io(dir.display().to_string(), e))?;
    paths.sort();
    for p in paths {
        if p.is_dir() {
            collect(&p, out)?;
        } else if matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "json" | "toml")) {
            out.push(p);
        }
    }
    Ok(())
}

/// The single config hash shared by every artifact under `dir`.
///
/// Files without a hash and files with differing hashes are refused.
pub fn directory_hash(dir: &Path) -> Result<Option<String>, CliError> {
    let mut files = Vec::new();
    collect(dir, &mut files)?;
    let mut seen: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for f in files {
        match read_hash(&f)? {
            Some(h) => seen.entry(h).or_default().push(f),
            None => return Err(CliError::MissingHash(f.display().to_string())),
        }
    }
    match seen.len() {
        0 => Ok(None),
        1 => Ok(seen.into_keys().next()),
        _ => Err(CliError::MixedConfigs(
            seen.into_iter()
                .map(|(h, fs)| format!("{h} ({} files, e.g. {})", fs.len(), fs[0].display()))
                .collect(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn mixed_hashes_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("a.csv"), hashed_csv("aaa", "x\n1\n").as_bytes()).unwrap();
        write_atomic(&dir.path().join("m.json"), br#"{"config_hash":"aaa"}"#).unwrap();
        assert_eq!(directory_hash(dir.path()).unwrap().as_deref(), Some("aaa"));
        write_atomic(&dir.path().join("b/c.csv"), hashed_csv("bbb", "x\n").as_bytes()).unwrap();
        assert!(matches!(directory_hash(dir.path()), Err(CliError::MixedConfigs(_))));
    }

    #[test]
    fn unhashed_files_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(&dir.path().join("a.csv"), b"x\n1\n").unwrap();
        assert!(matches!(directory_hash(dir.path()), Err(CliError::MissingHash(_))));
    }
}
