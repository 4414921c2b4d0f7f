//! Pass/fail criteria and the `report.txt` / `report.csv` pair.

use crate::config::ExperimentId;
use anyhow::{bail, Context, Result};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const SCHEMA_LINE: &str = "# schema=1";

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub measured: String,
    pub target: String,
    pub tol: String,
    pub pass: bool,
}

impl Criterion {
    /// `|measured - target| <= tol`.
    pub fn within(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: num(target),
            tol: num(tol),
            pass: (measured - target).abs() <= tol,
        }
    }

    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: format!("<= {}", num(bound)),
            tol: String::new(),
            pass: measured <= bound,
        }
    }

    /// `|measured| <= bound`, reporting the signed value.
    pub fn abs_at_most(name: &str, measured: f64, bound: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: format!("|x| <= {}", num(bound)),
            tol: String::new(),
            pass: measured.abs() <= bound,
        }
    }

    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: format!(">= {}", num(bound)),
            tol: String::new(),
            pass: measured >= bound,
        }
    }

    pub fn above(name: &str, measured: f64, bound: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: format!("> {}", num(bound)),
            tol: String::new(),
            pass: measured > bound,
        }
    }

    pub fn in_range(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Criterion {
            name: name.into(),
            measured: num(measured),
            target: format!("[{}, {}]", num(lo), num(hi)),
            tol: String::new(),
            pass: lo <= measured && measured <= hi,
        }
    }

    pub fn label(name: &str, measured: &str, expected: &str) -> Self {
        Criterion {
            name: name.into(),
            measured: measured.into(),
            target: expected.into(),
            tol: String::new(),
            pass: measured == expected,
        }
    }

    /// A qualitative outcome with a free-form description.
    pub fn holds(name: &str, pass: bool, measured: String, target: &str, tol: Option<f64>) -> Self {
        Criterion {
            name: name.into(),
            measured,
            target: target.into(),
            tol: tol.map(num).unwrap_or_default(),
            pass,
        }
    }

    /// A criterion whose stage failed before it could be measured.
    pub fn errored(name: &str, err: &anyhow::Error) -> Self {
        Criterion {
            name: name.into(),
            measured: format!("error: {err:#}"),
            target: String::new(),
            tol: String::new(),
            pass: false,
        }
    }
}

/// Shortest round-trip representation, in exponent form outside `[1e-3, 1e6)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-3..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
    pub threads: usize,
    pub seedless: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: ExperimentId,
    pub title: String,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
    /// CSV files written next to the report.
    pub files: Vec<String>,
    pub wall_time: f64,
    pub budget: f64,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        !self.criteria.is_empty() && self.criteria.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.criteria.iter().filter(|c| !c.pass).count()
    }

    pub fn exit_code(&self) -> u8 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let n = self.criteria.len();
        let _ = writeln!(s, "experiment {}: {}", self.id, self.title);
        let _ = writeln!(
            s,
            "status {} ({}/{} criteria pass)",
            if self.passed() { "PASS" } else { "FAIL" },
            n - self.failures(),
            n
        );
        let _ = writeln!(s, "wall time {:.2} s (budget {:.0} s)", self.wall_time, self.budget);
        let p = &self.provenance;
        let _ = writeln!(s, "config hash {}", p.config_hash);
        let _ = writeln!(s, "code version {}", p.code_version);
        let _ = writeln!(s, "threads {}, seedless {}", p.threads, p.seedless);
        let _ = writeln!(s);
        let w = self.criteria.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.criteria {
            let tol = if c.tol.is_empty() { String::new() } else { format!(" (tol {})", c.tol) };
            let _ = writeln!(
                s,
                "{} {:w$}  measured {}  target {}{}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.target,
                tol,
            );
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\nnotes");
            for note in &self.notes {
                let _ = writeln!(s, "  {note}");
            }
        }
        if !self.files.is_empty() {
            let _ = writeln!(s, "\nfiles {}", self.files.join(", "));
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{SCHEMA_LINE}\ncriterion,measured,target,tol,pass\n");
        for c in &self.criteria {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                field(&c.name),
                field(&c.measured),
                field(&c.target),
                field(&c.tol),
                c.pass
            );
        }
        s
    }
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `report.txt` and `report.csv` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    if report.criteria.is_empty() {
        bail!("report for {} has no criteria", report.id);
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let txt = dir.join("report.txt");
    fs::write(&txt, report.to_text()).with_context(|| format!("writing {}", txt.display()))?;
    let csv = dir.join("report.csv");
    fs::write(&csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    Ok(())
}

/// Writes a CSV with the schema line and `header`.
pub fn write_csv<I>(dir: &Path, name: &str, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut s = format!("{SCHEMA_LINE}\n{header}\n");
    for row in rows {
        s.push_str(&row);
        s.push('\n');
    }
    let path = dir.join(name);
    fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
}

/// Comma-joined shortest round-trip representations.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}
