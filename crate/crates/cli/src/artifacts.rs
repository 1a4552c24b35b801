//! Timestamped output directories and their manifests.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

/// Environment variable overriding the default output root.
pub const OUT_ENV: &str = "KINLIM_OUT";
pub const DEFAULT_ROOT: &str = "runs";

pub fn code_version() -> String {
    format!("kinlim {}", env!("CARGO_PKG_VERSION"))
}

/// Root precedence: `--out`, then `KINLIM_OUT`, then the config, then `runs`.
pub fn output_root(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.map_or_else(|| PathBuf::from(DEFAULT_ROOT), Path::to_path_buf)
}

/// One command's output directory.
pub struct RunDir {
    pub path: PathBuf,
    files: Vec<String>,
    command: String,
    config: String,
    args: Vec<String>,
    started: String,
}

impl RunDir {
    /// Creates `<root>/<command>-<UTC timestamp>`, adding a suffix if taken.
    pub fn create(root: &Path, command: &str, config: String) -> std::io::Result<Self> {
        let now = chrono::Utc::now();
        let stamp = now.format("%Y%m%dT%H%M%S%.3fZ");
        std::fs::create_dir_all(root)?;
        let mut path = root.join(format!("{command}-{stamp}"));
        let mut k = 1;
        while path.exists() {
            path = root.join(format!("{command}-{stamp}-{k}"));
            k += 1;
        }
        std::fs::create_dir(&path)?;
        Ok(Self {
            path,
            files: Vec::new(),
            command: command.into(),
            config,
            args: std::env::args().collect(),
            started: now.to_rfc3339(),
        })
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.into());
        }
        self.path.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> std::io::Result<()> {
        let p = self.file(name);
        std::fs::write(p, contents)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        self.write(name, text + "\n")
    }

    /// Writes `manifest.json` with the exact configuration and outcome.
    pub fn finish(&mut self, exit_code: i32, extra: serde_json::Value) -> std::io::Result<()> {
        let manifest = json!({
            "command": self.command,
            "code_version": code_version(),
            "args": self.args,
            "started": self.started,
            "finished": chrono::Utc::now().to_rfc3339(),
            "exit_code": exit_code,
            "config": self.config,
            "files": self.files,
            "details": extra,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        std::fs::write(self.path.join("manifest.json"), text + "\n")
    }
}
