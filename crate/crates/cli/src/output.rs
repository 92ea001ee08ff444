//! Output files. Every file is written to a temporary sibling and renamed
//! into place, so readers never see a partial report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub struct Outputs {
    text: PathBuf,
    stem: PathBuf,
}

#[derive(Serialize)]
struct Meta<'a> {
    generated_at: String,
    tool_version: &'static str,
    argv: &'a [String],
}

impl Outputs {
    /// `path` receives the text report; companions share its stem:
    /// `report.txt` gives `report.json`, `report.meta.json`, `report.fitted.csv`.
    pub fn new(path: &Path) -> Self {
        Outputs {
            text: path.to_path_buf(),
            stem: path.with_extension(""),
        }
    }

    fn companion(&self, suffix: &str) -> PathBuf {
        let mut name = self.stem.as_os_str().to_owned();
        name.push(".");
        name.push(suffix);
        PathBuf::from(name)
    }

    pub fn write_all(
        &self,
        text: &str,
        json: &str,
        extra: &[(&str, String)],
        argv: &[String],
    ) -> Result<(), CliError> {
        let json_path = self.companion("json");
        if json_path == self.text {
            return Err(CliError::Usage(
                "--out must not end in .json; the JSON companion is written next to it".into(),
            ));
        }
        if let Some(dir) = self.text.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        write_atomic(&self.text, text)?;
        write_atomic(&json_path, json)?;
        for (suffix, body) in extra {
            write_atomic(&self.companion(suffix), body)?;
        }
        let meta = Meta {
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: env!("CARGO_PKG_VERSION"),
            argv,
        };
        let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n";
        write_atomic(&self.companion("meta.json"), &meta_json)
    }
}

pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::io(path, e))
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_names() {
        let o = Outputs::new(Path::new("out/report.txt"));
        assert_eq!(o.companion("json"), PathBuf::from("out/report.json"));
        assert_eq!(o.companion("fitted.csv"), PathBuf::from("out/report.fitted.csv"));
        let bare = Outputs::new(Path::new("report"));
        assert_eq!(bare.companion("meta.json"), PathBuf::from("report.meta.json"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
