use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Artifact writer for one command run. Every file lands via a temp file and a rename.
pub struct Output {
    dir: PathBuf,
    command: String,
    stamp: Option<String>,
    written: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Write `bytes` to `path` without ever exposing a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

impl Output {
    /// `deterministic` drops the UTC timestamp from artifact names.
    pub fn new(dir: PathBuf, command: &str, deterministic: bool) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let stamp =
            (!deterministic).then(|| chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string());
        Ok(Self {
            dir,
            command: command.to_string(),
            stamp,
            written: Vec::new(),
        })
    }

    pub fn file_name(&self, stem: &str, ext: &str) -> String {
        match &self.stamp {
            Some(s) => format!("{}_{stem}_{s}.{ext}", self.command),
            None => format!("{}_{stem}.{ext}", self.command),
        }
    }

    pub fn text(&mut self, stem: &str, ext: &str, body: &str) -> Result<(), CliError> {
        let name = self.file_name(stem, ext);
        write_atomic(&self.dir.join(&name), body.as_bytes())?;
        self.written.push(name);
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value).expect("artifacts serialize");
        body.push('\n');
        self.text(stem, "json", &body)
    }

    pub fn csv(
        &mut self,
        stem: &str,
        header: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        for r in rows {
            w.write_record(&r).expect("in-memory write");
        }
        let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        self.text(stem, "csv", &body)
    }

    /// Write the manifest and return the full paths of everything written, manifest last.
    pub fn finish(mut self) -> Result<Vec<PathBuf>, CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            artifacts: &'a [String],
        }
        let manifest = Manifest {
            command: &self.command,
            artifacts: &self.written,
        };
        let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        body.push('\n');
        self.text("manifest", "json", &body)?;
        Ok(self.written.iter().map(|n| self.dir.join(n)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::new(dir.path().to_path_buf(), "solve", true).unwrap();
        assert_eq!(
            out.file_name("t1_solution", "json"),
            "solve_t1_solution.json"
        );
        out.json("t1_solution", &[1, 2]).unwrap();
        out.csv(
            "t1_plan",
            &["from", "to"],
            vec![vec!["A".into(), "B".into()]],
        )
        .unwrap();
        let paths = out.finish().unwrap();
        assert_eq!(paths.len(), 3);
        let manifest = fs::read_to_string(&paths[2]).unwrap();
        assert!(manifest.contains("solve_t1_plan.csv"));
        assert_eq!(fs::read_to_string(&paths[1]).unwrap(), "from,to\nA,B\n");
        let leftovers = fs::read_dir(dir.path()).unwrap().filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".tmp")
        });
        assert_eq!(leftovers.count(), 0);
    }

    #[test]
    fn timestamped_names() {
        let dir = tempfile::tempdir().unwrap();
        let out = Output::new(dir.path().to_path_buf(), "evpi", false).unwrap();
        let name = out.file_name("t1", "json");
        assert!(
            name.starts_with("evpi_t1_") && name.ends_with("Z.json"),
            "{name}"
        );
    }
}
