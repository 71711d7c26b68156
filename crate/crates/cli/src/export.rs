//! CSV output. Numbers use 17 significant digits so values read back exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gis_core::integrate::Trajectory;
use gis_core::Vector;

use crate::{CliError, Result};

/// `t,x1,…,xn` followed by one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let dim = traj.dim().unwrap_or(0);
    let mut out = String::from("t");
    for i in 1..=dim {
        write!(out, ",x{i}").unwrap();
    }
    out.push('\n');
    for (t, x) in traj.times().iter().zip(traj.states()) {
        write!(out, "{t:.16e}").unwrap();
        for v in x.as_slice() {
            write!(out, ",{v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Writes the trajectory. An empty trajectory yields a header-only file and a warning.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    if traj.is_empty() {
        eprintln!("warning: trajectory is empty, {} holds only a header", path.display());
    }
    fs::write(path, trajectory_csv(traj)).map_err(|e| CliError::io(path, e))
}

/// Two-column `t,x<i>` series for plotting component `i` (zero-based).
pub fn write_component(path: &Path, traj: &Trajectory, i: usize) -> Result<()> {
    let mut out = format!("t,x{}\n", i + 1);
    for (t, x) in traj.times().iter().zip(traj.states()) {
        writeln!(out, "{t:.16e},{:.16e}", x[i]).unwrap();
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn parse_trajectory_csv(text: &str) -> std::result::Result<Trajectory, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("missing header")?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.first() != Some(&"t") {
        return Err(format!("header must start with 't', got '{header}'"));
    }
    let dim = columns.len() - 1;
    let (mut times, mut states) = (Vec::new(), Vec::new());
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let values: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", k + 2)))
            .collect::<std::result::Result<_, _>>()?;
        if values.len() != dim + 1 {
            return Err(format!("row {} has {} fields, expected {}", k + 2, values.len(), dim + 1));
        }
        times.push(values[0]);
        states.push(Vector::new(values[1..].to_vec()).map_err(|e| e.to_string())?);
    }
    Trajectory::new(times, states).map_err(|e| e.to_string())
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trajectory_csv(&text).map_err(|m| CliError::Usage(format!("{}: {m}", path.display())))
}

/// Sectioned key/value report, rendered as CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        self.sections.push((name.to_string(), Vec::new()));
        self
    }

    /// Adds a row to the most recent section.
    pub fn entry(&mut self, key: &str, value: impl ToString) -> &mut Self {
        if self.sections.is_empty() {
            self.section("general");
        }
        self.sections.last_mut().unwrap().1.push((key.to_string(), value.to_string()));
        self
    }

    /// Appends all of `other`'s sections.
    pub fn append(&mut self, other: Report) -> &mut Self {
        self.sections.extend(other.sections);
        self
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .filter(|s| s.0 == section)
            .flat_map(|s| s.1.iter())
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, (name, rows)) in self.sections.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            writeln!(out, "section,{}", quote(name)).unwrap();
            for (key, value) in rows {
                writeln!(out, "{},{}", quote(key), quote(value)).unwrap();
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| CliError::io(path, e))
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
