//! Run reports: per-check pass/fail rows, CSV emission with a fixed
//! numeric format (so identical configs reproduce identical bytes), and
//! companion gnuplot scripts.

use crate::error::Result;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

/// One verdict of a suite.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Acceptance-tagged checks gate the process exit code; untagged rows
    /// are informational (exploratory rates, recorded constants).
    pub acceptance: bool,
    pub detail: String,
}

/// Everything a suite run leaves behind besides the CSV files themselves.
#[derive(Debug)]
pub struct RunReport {
    pub suite: String,
    /// Canonical config echo; parsing it back reproduces the run.
    pub config_echo: String,
    pub checks: Vec<CheckResult>,
    pub csv_files: Vec<PathBuf>,
    /// (label, seconds) per sub-experiment.
    pub timings: Vec<(String, f64)>,
}

impl RunReport {
    pub fn new(suite: &str, config_echo: String) -> RunReport {
        RunReport {
            suite: suite.to_string(),
            config_echo,
            checks: Vec::new(),
            csv_files: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, acceptance: bool, passed: bool, detail: String) {
        self.checks.push(CheckResult { name: name.to_string(), passed, acceptance, detail });
    }

    /// Time a sub-experiment and record its wall clock.
    pub fn timed<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let start = std::time::Instant::now();
        let out = f();
        self.timings.push((label.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn acceptance_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.acceptance)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite: {}", self.suite);
        for c in &self.checks {
            let _ = writeln!(
                s,
                "[{}] {}{} — {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                if c.acceptance { "" } else { " (info)" },
                c.detail
            );
        }
        for f in &self.csv_files {
            let _ = writeln!(s, "csv: {}", f.display());
        }
        for (label, secs) in &self.timings {
            let _ = writeln!(s, "time: {label} {secs:.2}s");
        }
        let _ = writeln!(
            s,
            "result: {}",
            if self.acceptance_passed() { "all acceptance checks passed" } else { "FAILURES" }
        );
        s
    }

    /// Write `summary.txt` and the config echo next to the CSVs.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("summary.txt"), self.summary_text())?;
        fs::write(dir.join("config_echo.ini"), &self.config_echo)?;
        Ok(())
    }

    /// Fold another suite's outcomes into this one (used by `full`).
    pub fn absorb(&mut self, other: RunReport) {
        self.checks.extend(other.checks);
        self.csv_files.extend(other.csv_files);
        self.timings.extend(other.timings);
    }
}

/// Fixed-width scientific formatting shared by every CSV cell; full f64
/// round-trip precision keeps reruns byte-identical without locale traps.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.12e}")
}

/// Write one CSV with an exact header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = fs::File::create(path)?;
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Companion gnuplot script: log-log error-versus-ε plot of selected
/// columns of a CSV written by `write_csv`.
pub fn write_gnuplot_loglog(
    path: &Path,
    csv_name: &str,
    title: &str,
    ylabel: &str,
    columns: &[(usize, &str)],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set xlabel 'epsilon'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    let _ = writeln!(s, "set title '{title}'");
    let _ = writeln!(s, "set key left top");
    let mut terms = Vec::new();
    for (col, label) in columns {
        terms.push(format!("'{csv_name}' using 1:{col} with linespoints title '{label}'"));
    }
    let _ = writeln!(s, "plot {}", terms.join(", \\\n     "));
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_gates_on_acceptance_checks_only() {
        let mut r = RunReport::new("demo", String::new());
        r.check("a", true, true, "fine".into());
        r.check("b", false, false, "exploratory".into());
        assert!(r.acceptance_passed());
        r.check("c", true, false, "broken".into());
        assert!(!r.acceptance_passed());
        let text = r.summary_text();
        assert!(text.contains("[FAIL] c"));
        assert!(text.contains("(info)"));
        assert!(text.contains("FAILURES"));
    }

    #[test]
    fn csv_bytes_are_deterministic() {
        let dir = std::env::temp_dir().join(format!("oscistrip-report-{}", std::process::id()));
        let path = dir.join("t.csv");
        let rows =
            vec![vec![fmt_sci(0.2), fmt_sci(1.0 / 3.0)], vec![fmt_sci(0.1), fmt_sci(2.0 / 3.0)]];
        write_csv(&path, "epsilon,value", &rows).unwrap();
        let first = std::fs::read(&path).unwrap();
        write_csv(&path, "epsilon,value", &rows).unwrap();
        let second = std::fs::read(&path).unwrap();
        assert_eq!(first, second);
        assert!(String::from_utf8(first).unwrap().starts_with("epsilon,value\n2.0000"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn gnuplot_script_references_csv_columns() {
        let dir = std::env::temp_dir().join(format!("oscistrip-gp-{}", std::process::id()));
        let path = dir.join("p.gp");
        write_gnuplot_loglog(&path, "t.csv", "demo", "error", &[(4, "abs_error")]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("using 1:4"));
        assert!(text.contains("logscale xy"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
