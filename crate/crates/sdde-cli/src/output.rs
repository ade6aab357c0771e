//! The single writer through which every artifact passes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
struct FileEntry {
    sha256: String,
    bytes: usize,
}

pub struct Writer {
    root: PathBuf,
    files: BTreeMap<String, FileEntry>,
    timings: Vec<(String, f64)>,
    started: Instant,
}

impl Writer {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| {
            CliError::Config(format!(
                "cannot create output directory {}: {e}",
                root.display()
            ))
        })?;
        Ok(Writer {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
            timings: vec![],
            started: Instant::now(),
        })
    }

    pub fn put(&mut self, name: &str, data: impl AsRef<[u8]>) -> Result<(), CliError> {
        let data = data.as_ref();
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&path, data)?;
        let entry = FileEntry {
            sha256: hex::encode(Sha256::digest(data)),
            bytes: data.len(),
        };
        self.files.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn put_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.put(name, s)
    }

    pub fn put_table(&mut self, name: &str, t: &sdde::table::Table) -> Result<(), CliError> {
        self.put(name, t.to_csv())
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let t = Instant::now();
        let r = f();
        self.timings
            .push((stage.to_string(), t.elapsed().as_secs_f64()));
        r
    }

    /// Writes the plotting stub and `manifest.json`.
    pub fn finish(
        mut self,
        command: &str,
        options: Value,
        status: &str,
    ) -> Result<PathBuf, CliError> {
        let csvs: Vec<String> = self
            .files
            .keys()
            .filter(|k| k.ends_with(".csv"))
            .cloned()
            .collect();
        self.put("plot.py", plot_stub(command, &csvs))?;
        let mut runtimes = serde_json::Map::new();
        for (k, v) in &self.timings {
            runtimes.insert(k.clone(), json!(v));
        }
        runtimes.insert("total".into(), json!(self.started.elapsed().as_secs_f64()));
        let manifest = json!({
            "tool": "sdde",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "status": status,
            "parallel": sdde::par::is_parallel(),
            "options": options,
            "runtimes_s": runtimes,
            "files": self.files,
        });
        let mut s = serde_json::to_string_pretty(&manifest).expect("json values serialize");
        s.push('\n');
        let path = self.root.join("manifest.json");
        std::fs::write(&path, s)?;
        Ok(path)
    }
}

fn plot_stub(command: &str, csvs: &[String]) -> String {
    let mut s = format!(
        "# Plotting stub for `sdde {command}`; edit freely.\n\
         import csv\nimport sys\nfrom pathlib import Path\n\n\
         import matplotlib.pyplot as plt\n\n\
         HERE = Path(__file__).parent\n\n\n\
         def load(name):\n    with open(HERE / name) as f:\n        rows = list(csv.DictReader(f))\n\
         \x20   def num(v):\n        try:\n            return float(v)\n        except ValueError:\n            return v\n\
         \x20   return [{{k: num(v) for k, v in r.items()}} for r in rows]\n\n\n\
         FILES = [\n"
    );
    for c in csvs {
        s.push_str(&format!("    {c:?},\n"));
    }
    s.push_str(
        "]\n\n\nif __name__ == \"__main__\":\n    for name in FILES:\n        rows = load(name)\n        if not rows:\n            continue\n\
         \x20       keys = list(rows[0])\n        fig, ax = plt.subplots()\n\
         \x20       x, y = keys[0], keys[1]\n        ax.plot([r[x] for r in rows], [r[y] for r in rows], \".\", ms=2)\n\
         \x20       ax.set_xlabel(x)\n        ax.set_ylabel(y)\n        ax.set_title(name)\n\
         \x20       fig.savefig(HERE / (Path(name).stem + \".png\"), dpi=150)\n    if \"--show\" in sys.argv:\n        plt.show()\n",
    );
    s
}
