//! Columnar output: manifest echoing the resolved config, CSV data files,
//! and a pass/fail summary. All formatting is deterministic so identical
//! config + seed gives byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::kam::KamStep;

pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v:e}")
}

#[derive(Debug, Default)]
pub struct Summary {
    lines: Vec<String>,
    checks: Vec<(String, bool)>,
}

impl Summary {
    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    pub fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            let _ = writeln!(out, "{line}");
        }
        for (name, ok) in &self.checks {
            let _ = writeln!(out, "[{}] {name}", if *ok { "PASS" } else { "FAIL" });
        }
        let _ = writeln!(out, "overall: {}", if self.passed() { "PASS" } else { "FAIL" });
        out
    }
}

pub struct RunWriter {
    dir: PathBuf,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(RunWriter { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Echo the fully resolved config (defaults included). Deliberately
    /// omits the thread count: outputs must not depend on it.
    pub fn write_manifest(&self, config: &ExperimentConfig) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "# resolved run manifest");
        let _ = writeln!(text, "tool_version = {:?}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text);
        text.push_str(&config.to_toml());
        std::fs::write(self.dir.join("manifest.toml"), text)?;
        Ok(())
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "{}", header.join(","));
        for row in rows {
            debug_assert_eq!(row.len(), header.len());
            let _ = writeln!(text, "{}", row.join(","));
        }
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    /// The shared columnar format for KAM traces: one row per step.
    pub fn write_kam_steps(&self, name: &str, steps: &[KamStep]) -> Result<()> {
        let rows: Vec<Vec<String>> = steps
            .iter()
            .map(|s| {
                vec![
                    s.n.to_string(),
                    fmt_f64(s.t_n),
                    fmt_f64(s.norm0),
                    fmt_f64(s.norm_k),
                    match s.action {
                        crate::kam::StepAction::Iterated => "iterated".into(),
                        crate::kam::StepAction::Stopped => "stopped".into(),
                    },
                ]
            })
            .collect();
        self.write_csv(name, &["n", "t_n", "norm0", "norm_k", "action"], &rows)
    }

    pub fn write_summary(&self, summary: &Summary) -> Result<()> {
        std::fs::write(self.dir.join("summary.txt"), summary.render())?;
        Ok(())
    }
}
