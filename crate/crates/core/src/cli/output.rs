use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;

pub const OUT_DIR_ENV: &str = "ERLANGS_OUT_DIR";

/// Where relative output paths are resolved: `--out-dir`, then the
/// environment variable, then the working directory.
#[derive(Debug, Clone, Default)]
pub struct OutDir(Option<PathBuf>);

impl OutDir {
    pub fn new(flag: Option<PathBuf>) -> Self {
        Self(flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.0 {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

/// Pretty JSON with sorted keys and a trailing newline. Going through
/// `serde_json::Value` makes the text a fixed point of parse-and-emit.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Sends `bytes` to `path` if given, else to `stdout`.
pub fn emit(bytes: &[u8], path: Option<&Path>, out_dir: &OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => write_atomic(&out_dir.resolve(p), bytes),
        None => stdout.write_all(bytes).map_err(io_err(Path::new("<stdout>"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_json_round_trips() {
        #[derive(Serialize)]
        struct S {
            z: f64,
            a: Vec<f64>,
            n: f64,
        }
        let text = to_canonical_json(&S {
            z: 0.1 + 0.2,
            a: vec![1.0, 1e-300],
            n: f64::NAN,
        })
        .unwrap();
        let again: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(to_canonical_json(&again).unwrap(), text);
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
    }

    #[test]
    fn relative_paths_use_out_dir() {
        let out = OutDir(Some(PathBuf::from("/tmp/x")));
        assert_eq!(out.resolve(Path::new("a.csv")), PathBuf::from("/tmp/x/a.csv"));
        assert_eq!(out.resolve(Path::new("/abs.csv")), PathBuf::from("/abs.csv"));
    }
}
