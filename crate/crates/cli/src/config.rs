//! INI-style scenario files: `[section]` headers, `key = value` lines and `#`
//! comments. See the README for the full grammar.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use gis_core::certify::{A2Settings, Domain, SamplingPlan, SamplingScheme};
use gis_core::integrate::{IntegratorConfig, Method};
use gis_core::system::builtin::example1;
use gis_core::{Matrix, NormKind, SystemSpec, Vector};

use crate::expr::{self, Expr, ExpressionField};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// One-based; 0 when the error concerns the file as a whole.
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
        }
    }
}

/// Every problem found in one file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemConfig {
    /// The planar example with parameter `b` and `φ(t)` given as an expression in `t`.
    Example1 {
        b: f64,
        phi: String,
    },
    Linear {
        matrix: Matrix,
    },
    Expressions {
        fields: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub t_lo: f64,
    pub t_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    /// Claimed rate `α(t)`, an expression in `t`.
    pub alpha: Option<String>,
    pub a2_t_lo: f64,
    pub a2_t_hi: f64,
    pub a2_samples: usize,
    pub vanish_slope: f64,
    pub vanish_drop: f64,
    pub persist_slope: f64,
    pub persist_level: f64,
    /// Random initial pairs for the incremental bound; 0 skips the check.
    pub pairs: usize,
    pub tail_fraction: f64,
    pub convergence_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub trajectory: bool,
    pub plots: bool,
    pub report: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub dim: usize,
    /// `δ(t)` components; empty for none.
    pub perturbation: Vec<String>,
    pub x0: Vec<f64>,
    pub t0: f64,
    pub norm: NormKind,
    pub domain: DomainConfig,
    pub sampling: SamplingPlan,
    pub certify: CertifyConfig,
    pub integrator: IntegratorConfig,
    pub tf: f64,
    pub output: OutputConfig,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
    column: usize,
}

struct Section {
    name: String,
    entries: Vec<Entry>,
}

const SECTIONS: &[&str] =
    &["system", "perturbation", "initial", "norm", "domain", "sampling", "certify", "integrator", "output"];

/// Parses and validates a scenario. All problems are reported together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let sections = lex(text, &mut errors);
    let mut p = Builder { errors, sections };
    let cfg = p.build();
    if p.errors.is_empty() {
        Ok(cfg.expect("validated config"))
    } else {
        p.errors.sort_by_key(|e| (e.line, e.column));
        Err(ConfigErrors(p.errors))
    }
}

fn lex(text: &str, errors: &mut Vec<ConfigError>) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    let mut seen_sections = HashSet::new();
    let mut seen_keys: HashSet<(String, String)> = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let err = |column: usize, message: String| ConfigError { line, column, message };
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                errors.push(err(indent + trimmed.len() + 1, "expected ']' closing the section header".into()));
                continue;
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                errors.push(err(indent + 2, format!("unknown section [{name}]")));
            } else if !seen_sections.insert(name.clone()) {
                errors.push(err(indent + 2, format!("duplicate section [{name}]")));
            }
            sections.push(Section { name, entries: Vec::new() });
            continue;
        }
        let Some(eq) = content.find('=') else {
            errors.push(err(indent + 1, "expected 'key = value'".into()));
            continue;
        };
        let key = content[..eq].trim().to_string();
        let value_part = &content[eq + 1..];
        let value = value_part.trim().to_string();
        let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            errors.push(err(indent + 1, format!("invalid key '{key}'")));
            continue;
        }
        let Some(section) = sections.last_mut() else {
            errors.push(err(indent + 1, format!("key '{key}' appears before any section header")));
            continue;
        };
        if !seen_keys.insert((section.name.clone(), key.clone())) {
            errors.push(err(indent + 1, format!("duplicate key '{key}' in [{}]", section.name)));
            continue;
        }
        section.entries.push(Entry { key, value, line, column: value_col });
    }
    sections
}

struct Builder {
    errors: Vec<ConfigError>,
    sections: Vec<Section>,
}

/// Typed access to one section's entries.
struct View<'a> {
    entries: Vec<&'a Entry>,
}

impl View<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().copied().find(|e| e.key == key)
    }
}

impl Builder {
    fn error(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.errors.push(ConfigError { line, column, message: message.into() });
    }

    fn view(&self, name: &str) -> Option<View<'_>> {
        self.sections.iter().find(|s| s.name == name).map(|s| View { entries: s.entries.iter().collect() })
    }

    fn check_keys(&mut self, section: &str, allowed: impl Fn(&str) -> bool) {
        let unknown: Vec<(usize, usize, String)> = self
            .sections
            .iter()
            .filter(|s| s.name == section)
            .flat_map(|s| s.entries.iter())
            .filter(|e| !allowed(&e.key))
            .map(|e| (e.line, e.column, e.key.clone()))
            .collect();
        for (line, _, key) in unknown {
            self.error(line, 1, format!("unknown key '{key}' in [{section}]"));
        }
    }

    fn number(&mut self, e: &Entry) -> Option<f64> {
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => {
                self.error(e.line, e.column, format!("'{}' is not a finite number", e.value));
                None
            }
        }
    }

    fn count(&mut self, e: &Entry) -> Option<usize> {
        match e.value.parse::<usize>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.error(e.line, e.column, format!("'{}' is not a non-negative integer", e.value));
                None
            }
        }
    }

    fn flag(&mut self, e: &Entry) -> Option<bool> {
        match e.value.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            _ => {
                self.error(e.line, e.column, format!("'{}' is not true or false", e.value));
                None
            }
        }
    }

    fn numbers(&mut self, e: &Entry) -> Option<Vec<f64>> {
        let parts: Vec<&str> =
            e.value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if parts.is_empty() {
            self.error(e.line, e.column, "expected a list of numbers");
            return None;
        }
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => {
                    self.error(e.line, e.column, format!("'{p}' is not a finite number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn matrix(&mut self, e: &Entry) -> Option<Matrix> {
        match parse_matrix(&e.value) {
            Ok(m) => Some(m),
            Err(msg) => {
                self.error(e.line, e.column, msg);
                None
            }
        }
    }

    /// Parses an expression, reporting errors at the right column.
    fn expression(&mut self, e: &Entry, max_dim: usize) -> Option<Expr> {
        match expr::parse(&e.value) {
            Ok(x) if x.state_dim() > max_dim => {
                let msg = if max_dim == 0 {
                    format!("'{}' may depend on t only", e.key)
                } else {
                    format!("'{}' references x{} but the dimension is {max_dim}", e.key, x.state_dim())
                };
                self.error(e.line, e.column, msg);
                None
            }
            Ok(x) => Some(x),
            Err(pe) => {
                self.error(e.line, e.column + pe.column - 1, pe.message);
                None
            }
        }
    }

    fn build(&mut self) -> Option<ScenarioConfig> {
        let (system, dim) = self.system()?;
        let perturbation = self.perturbation(dim);
        let (x0, t0) = self.initial(dim);
        let norm = self.norm(dim);
        let (integrator, tf) = self.integrator(t0);
        let domain = self.domain(dim, t0);
        let sampling = self.sampling();
        let certify = self.certify(t0);
        let output = self.output();
        Some(ScenarioConfig {
            system,
            dim,
            perturbation: perturbation?,
            x0: x0?,
            t0,
            norm: norm?,
            domain: domain?,
            sampling: sampling?,
            certify: certify?,
            integrator: integrator?,
            tf,
            output: output?,
        })
    }

    fn system(&mut self) -> Option<(SystemConfig, usize)> {
        let Some(view) = self.view("system") else {
            self.error(0, 0, "missing required [system] section");
            return None;
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let get = |k: &str| entries.iter().find(|e| e.key == k);
        let builtin = get("builtin").map(|e| (e.value.clone(), e.line, e.column));
        let is_field_key = |k: &str| k.strip_prefix('f').is_some_and(|d| d.parse::<usize>().is_ok_and(|n| n >= 1));
        match builtin.as_ref().map(|b| b.0.as_str()) {
            Some("example1") => {
                self.check_keys("system", |k| matches!(k, "builtin" | "b" | "phi"));
                let b = match get("b") {
                    Some(e) => self.number(e)?,
                    None => gis_core::system::builtin::EXAMPLE1_B,
                };
                let phi = match get("phi") {
                    Some(e) => {
                        self.expression(e, 0)?;
                        e.value.clone()
                    }
                    None => "-6 - t^3".to_string(),
                };
                Some((SystemConfig::Example1 { b, phi }, 2))
            }
            Some("linear") => {
                self.check_keys("system", |k| matches!(k, "builtin" | "matrix"));
                let Some(e) = get("matrix") else {
                    let (_, line, col) = builtin.unwrap();
                    self.error(line, col, "builtin 'linear' needs a 'matrix' key");
                    return None;
                };
                let m = self.matrix(e)?;
                if !m.is_square() {
                    self.error(e.line, e.column, format!("matrix must be square, got {}x{}", m.rows(), m.cols()));
                    return None;
                }
                let n = m.rows();
                Some((SystemConfig::Linear { matrix: m }, n))
            }
            Some(other) => {
                let (_, line, col) = builtin.clone().unwrap();
                self.error(line, col, format!("unknown builtin '{other}' (expected example1 or linear)"));
                None
            }
            None => {
                self.check_keys("system", |k| k == "dim" || is_field_key(k));
                let mut comps: Vec<(usize, &Entry)> = entries
                    .iter()
                    .filter(|e| is_field_key(&e.key))
                    .map(|e| (e.key[1..].parse::<usize>().unwrap(), e))
                    .collect();
                comps.sort_by_key(|c| c.0);
                let declared = match get("dim") {
                    Some(e) => Some((self.count(e)?, e.line, e.column)),
                    None => None,
                };
                let n = declared.map(|d| d.0).unwrap_or(comps.len());
                if n == 0 {
                    self.error(0, 0, "[system] needs 'builtin' or field components f1..fn");
                    return None;
                }
                if let Some((d, line, col)) = declared {
                    if comps.len() != d {
                        self.error(line, col, format!("dim = {d} but {} field components are given", comps.len()));
                        return None;
                    }
                }
                let mut ok = true;
                for (k, (idx, e)) in comps.iter().enumerate() {
                    if *idx != k + 1 {
                        self.error(e.line, 1, format!("components must be f1..f{n} without gaps"));
                        return None;
                    }
                    ok &= self.expression(e, n).is_some();
                }
                ok.then(|| (SystemConfig::Expressions { fields: comps.iter().map(|c| c.1.value.clone()).collect() }, n))
            }
        }
    }

    fn perturbation(&mut self, dim: usize) -> Option<Vec<String>> {
        let is_key =
            |k: &str| k.strip_prefix('d').is_some_and(|d| d.parse::<usize>().is_ok_and(|n| n >= 1 && n <= dim));
        self.check_keys("perturbation", is_key);
        let Some(view) = self.view("perturbation") else {
            return Some(Vec::new());
        };
        let entries: Vec<Entry> = view.entries.iter().filter(|e| is_key(&e.key)).map(|e| clone_entry(e)).collect();
        if entries.is_empty() {
            return Some(Vec::new());
        }
        let mut out = vec![None; dim];
        let mut ok = true;
        for e in &entries {
            let k: usize = e.key[1..].parse().unwrap();
            ok &= self.expression(e, 0).is_some();
            out[k - 1] = Some(e.value.clone());
        }
        if let Some(missing) = out.iter().position(|c| c.is_none()) {
            self.error(
                entries[0].line,
                1,
                format!("perturbation needs all {dim} components, d{} is missing", missing + 1),
            );
            return None;
        }
        ok.then(|| out.into_iter().map(Option::unwrap).collect())
    }

    fn initial(&mut self, dim: usize) -> (Option<Vec<f64>>, f64) {
        self.check_keys("initial", |k| matches!(k, "x0" | "t0"));
        let Some(view) = self.view("initial") else {
            return (Some(vec![0.0; dim]), 0.0);
        };
        let x0e = view.get("x0").map(clone_entry);
        let t0e = view.get("t0").map(clone_entry);
        let t0 = t0e.and_then(|e| self.number(&e)).unwrap_or(0.0);
        let x0 = match x0e {
            None => Some(vec![0.0; dim]),
            Some(e) => self.numbers(&e).and_then(|v| {
                if v.len() == dim {
                    Some(v)
                } else {
                    self.error(e.line, e.column, format!("x0 has {} entries, the system has dimension {dim}", v.len()));
                    None
                }
            }),
        };
        (x0, t0)
    }

    fn norm(&mut self, dim: usize) -> Option<NormKind> {
        self.check_keys("norm", |k| matches!(k, "kind" | "weight"));
        let Some(view) = self.view("norm") else {
            return Some(NormKind::L2);
        };
        let kind = view.get("kind").map(clone_entry);
        let weight = view.get("weight").map(clone_entry);
        let label = kind.as_ref().map(|e| e.value.as_str()).unwrap_or("l2");
        let simple = match label {
            "l1" => Some(NormKind::L1),
            "l2" => Some(NormKind::L2),
            "linf" => Some(NormKind::LInf),
            "weighted" => None,
            other => {
                let e = kind.as_ref().unwrap();
                self.error(e.line, e.column, format!("unknown norm '{other}' (expected l1, l2, linf or weighted)"));
                return None;
            }
        };
        match (simple, weight) {
            (Some(k), None) => Some(k),
            (Some(_), Some(w)) => {
                self.error(w.line, 1, "'weight' is only valid with kind = weighted");
                None
            }
            (None, None) => {
                let e = kind.unwrap();
                self.error(e.line, e.column, "kind = weighted needs a 'weight' matrix");
                None
            }
            (None, Some(w)) => {
                let m = self.matrix(&w)?;
                if m.rows() != dim || m.cols() != dim {
                    self.error(w.line, w.column, format!("weight must be {dim}x{dim}, got {}x{}", m.rows(), m.cols()));
                    return None;
                }
                match NormKind::weighted(m) {
                    Ok(k) => Some(k),
                    Err(err) => {
                        self.error(w.line, w.column, err.to_string());
                        None
                    }
                }
            }
        }
    }

    fn domain(&mut self, dim: usize, t0: f64) -> Option<DomainConfig> {
        self.check_keys("domain", |k| matches!(k, "lower" | "upper" | "t_lo" | "t_hi"));
        let mut d = DomainConfig { lower: vec![-10.0; dim], upper: vec![10.0; dim], t_lo: t0, t_hi: t0 + 2.0 };
        let Some(view) = self.view("domain") else {
            return Some(d);
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let mut ok = true;
        for e in &entries {
            match e.key.as_str() {
                "lower" | "upper" => match self.numbers(e) {
                    Some(v) if v.len() == dim || v.len() == 1 => {
                        let v = if v.len() == 1 { vec![v[0]; dim] } else { v };
                        if e.key == "lower" {
                            d.lower = v;
                        } else {
                            d.upper = v;
                        }
                    }
                    Some(v) => {
                        self.error(e.line, e.column, format!("{} has {} entries, expected 1 or {dim}", e.key, v.len()));
                        ok = false;
                    }
                    None => ok = false,
                },
                "t_lo" => ok &= self.number(e).map(|v| d.t_lo = v).is_some(),
                "t_hi" => ok &= self.number(e).map(|v| d.t_hi = v).is_some(),
                _ => {}
            }
        }
        if !ok {
            return None;
        }
        let line = entries.first().map(|e| e.line).unwrap_or(0);
        if let Err(err) = to_domain(&d) {
            self.error(line, 1, format!("invalid domain: {err}"));
            return None;
        }
        Some(d)
    }

    fn sampling(&mut self) -> Option<SamplingPlan> {
        self.check_keys("sampling", |k| matches!(k, "n_space" | "n_time" | "scheme" | "seed"));
        let mut plan = SamplingPlan::default();
        let Some(view) = self.view("sampling") else {
            return Some(plan);
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let mut ok = true;
        for e in &entries {
            match e.key.as_str() {
                "n_space" => ok &= self.count(e).map(|v| plan.n_space = v).is_some(),
                "n_time" => ok &= self.count(e).map(|v| plan.n_time = v).is_some(),
                "seed" => match e.value.parse::<u64>() {
                    Ok(v) => plan.seed = v,
                    Err(_) => {
                        self.error(e.line, e.column, format!("'{}' is not a valid seed", e.value));
                        ok = false;
                    }
                },
                "scheme" => match SamplingScheme::from_label(&e.value) {
                    Some(s) => plan.scheme = s,
                    None => {
                        self.error(
                            e.line,
                            e.column,
                            format!(
                                "unknown scheme '{}' (expected uniform_grid, latin_hypercube or uniform_random)",
                                e.value
                            ),
                        );
                        ok = false;
                    }
                },
                _ => {}
            }
        }
        if ok && plan.validate().is_err() {
            self.error(entries[0].line, 1, "sampling counts must be positive");
            return None;
        }
        ok.then_some(plan)
    }

    fn certify(&mut self, t0: f64) -> Option<CertifyConfig> {
        const KEYS: &[&str] = &[
            "alpha",
            "a2_t_lo",
            "a2_t_hi",
            "a2_samples",
            "vanish_slope",
            "vanish_drop",
            "persist_slope",
            "persist_level",
            "pairs",
            "tail_fraction",
            "convergence_tol",
        ];
        self.check_keys("certify", |k| KEYS.contains(&k));
        let a2 = A2Settings::default();
        let mut c = CertifyConfig {
            alpha: None,
            a2_t_lo: t0.max(1.0),
            a2_t_hi: 1000.0,
            a2_samples: 400,
            vanish_slope: a2.vanish_slope,
            vanish_drop: a2.vanish_drop,
            persist_slope: a2.persist_slope,
            persist_level: a2.persist_level,
            pairs: 20,
            tail_fraction: 0.25,
            convergence_tol: 0.01,
        };
        let Some(view) = self.view("certify") else {
            return Some(c);
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let mut ok = true;
        for e in &entries {
            let set = match e.key.as_str() {
                "alpha" => self.expression(e, 0).map(|_| c.alpha = Some(e.value.clone())),
                "a2_t_lo" => self.number(e).map(|v| c.a2_t_lo = v),
                "a2_t_hi" => self.number(e).map(|v| c.a2_t_hi = v),
                "a2_samples" => self.count(e).map(|v| c.a2_samples = v),
                "vanish_slope" => self.number(e).map(|v| c.vanish_slope = v),
                "vanish_drop" => self.number(e).map(|v| c.vanish_drop = v),
                "persist_slope" => self.number(e).map(|v| c.persist_slope = v),
                "persist_level" => self.number(e).map(|v| c.persist_level = v),
                "pairs" => self.count(e).map(|v| c.pairs = v),
                "tail_fraction" => self.number(e).and_then(|v| {
                    if v > 0.0 && v < 1.0 {
                        c.tail_fraction = v;
                        Some(())
                    } else {
                        self.error(e.line, e.column, "tail_fraction must lie in (0, 1)");
                        None
                    }
                }),
                "convergence_tol" => self.number(e).map(|v| c.convergence_tol = v),
                _ => Some(()),
            };
            ok &= set.is_some();
        }
        if ok && !(c.a2_t_hi > c.a2_t_lo && c.a2_t_hi > 0.0) {
            self.error(entries[0].line, 1, "need a2_t_lo < a2_t_hi with a2_t_hi > 0");
            return None;
        }
        ok.then_some(c)
    }

    fn integrator(&mut self, t0: f64) -> (Option<IntegratorConfig>, f64) {
        const KEYS: &[&str] = &["method", "step", "rel_tol", "abs_tol", "max_steps", "max_step", "tf"];
        self.check_keys("integrator", |k| KEYS.contains(&k));
        let mut cfg = IntegratorConfig::default();
        let mut tf = t0 + 20.0;
        let Some(view) = self.view("integrator") else {
            return (Some(cfg), tf);
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let mut ok = true;
        for e in &entries {
            let set = match e.key.as_str() {
                "method" => match e.value.as_str() {
                    "rkf45" => {
                        cfg.method = Method::Rkf45Adaptive;
                        Some(())
                    }
                    "rk4" => {
                        cfg.method = Method::Rk4Fixed;
                        Some(())
                    }
                    other => {
                        self.error(e.line, e.column, format!("unknown method '{other}' (expected rkf45 or rk4)"));
                        None
                    }
                },
                "step" => self.number(e).map(|v| cfg.step = v),
                "rel_tol" => self.number(e).map(|v| cfg.rel_tol = v),
                "abs_tol" => self.number(e).map(|v| cfg.abs_tol = v),
                "max_steps" => self.count(e).map(|v| cfg.max_steps = v),
                "max_step" => self.number(e).map(|v| cfg.max_step = v),
                "tf" => self.number(e).map(|v| tf = v),
                _ => Some(()),
            };
            ok &= set.is_some();
        }
        if ok {
            if let Err(err) = cfg.validate() {
                self.error(entries[0].line, 1, err.to_string());
                return (None, tf);
            }
            if !(tf > t0) {
                self.error(entries[0].line, 1, format!("tf = {tf} must exceed t0 = {t0}"));
                return (None, tf);
            }
        }
        (ok.then_some(cfg), tf)
    }

    fn output(&mut self) -> Option<OutputConfig> {
        self.check_keys("output", |k| matches!(k, "dir" | "trajectory" | "plots" | "report"));
        let mut out = OutputConfig { dir: PathBuf::from("out"), trajectory: true, plots: true, report: true };
        let Some(view) = self.view("output") else {
            return Some(out);
        };
        let entries: Vec<Entry> = view.entries.iter().map(|e| clone_entry(e)).collect();
        let mut ok = true;
        for e in &entries {
            let set = match e.key.as_str() {
                "dir" if e.value.is_empty() => {
                    self.error(e.line, e.column, "output dir must not be empty");
                    None
                }
                "dir" => {
                    out.dir = PathBuf::from(&e.value);
                    Some(())
                }
                "trajectory" => self.flag(e).map(|v| out.trajectory = v),
                "plots" => self.flag(e).map(|v| out.plots = v),
                "report" => self.flag(e).map(|v| out.report = v),
                _ => Some(()),
            };
            ok &= set.is_some();
        }
        ok.then_some(out)
    }
}

fn clone_entry(e: &Entry) -> Entry {
    Entry { key: e.key.clone(), value: e.value.clone(), line: e.line, column: e.column }
}

/// Rows separated by `;` or newlines, entries by whitespace or commas.
pub fn parse_matrix(text: &str) -> Result<Matrix, String> {
    let rows: Vec<Vec<f64>> = text
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .map(|r| {
            r.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(format!("'{s}' is not a finite number")),
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err("matrix has no rows".into());
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err("matrix rows have different lengths".into());
    }
    Matrix::new(rows.len(), cols, rows.concat()).map_err(|e| e.to_string())
}

fn format_matrix(m: &Matrix) -> String {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn to_domain(d: &DomainConfig) -> gis_core::Result<Domain> {
    Domain::new(Vector::new(d.lower.clone())?, Vector::new(d.upper.clone())?, d.t_lo, d.t_hi)
}

/// Compiles an expression already validated by [`parse_config`].
fn compiled(src: &str) -> Arc<Expr> {
    Arc::new(expr::parse(src).expect("validated expression"))
}

impl ScenarioConfig {
    /// Canonical text form; parsing it yields an identical config.
    pub fn serialize(&self) -> String {
        let mut s = String::from("[system]\n");
        match &self.system {
            SystemConfig::Example1 { b, phi } => {
                s += &format!("builtin = example1\nb = {b}\nphi = {phi}\n");
            }
            SystemConfig::Linear { matrix } => {
                s += &format!("builtin = linear\nmatrix = {}\n", format_matrix(matrix));
            }
            SystemConfig::Expressions { fields } => {
                s += &format!("dim = {}\n", self.dim);
                for (k, f) in fields.iter().enumerate() {
                    s += &format!("f{} = {f}\n", k + 1);
                }
            }
        }
        if !self.perturbation.is_empty() {
            s += "\n[perturbation]\n";
            for (k, d) in self.perturbation.iter().enumerate() {
                s += &format!("d{} = {d}\n", k + 1);
            }
        }
        s += &format!("\n[initial]\nx0 = {}\nt0 = {}\n", format_list(&self.x0), self.t0);
        s += &format!("\n[norm]\nkind = {}\n", self.norm.label());
        if let NormKind::Weighted(w) = &self.norm {
            s += &format!("weight = {}\n", format_matrix(w.weight()));
        }
        let d = &self.domain;
        s += &format!(
            "\n[domain]\nlower = {}\nupper = {}\nt_lo = {}\nt_hi = {}\n",
            format_list(&d.lower),
            format_list(&d.upper),
            d.t_lo,
            d.t_hi
        );
        let p = &self.sampling;
        s += &format!(
            "\n[sampling]\nn_space = {}\nn_time = {}\nscheme = {}\nseed = {}\n",
            p.n_space,
            p.n_time,
            p.scheme.label(),
            p.seed
        );
        let c = &self.certify;
        s += "\n[certify]\n";
        if let Some(a) = &c.alpha {
            s += &format!("alpha = {a}\n");
        }
        s += &format!(
            "a2_t_lo = {}\na2_t_hi = {}\na2_samples = {}\nvanish_slope = {}\nvanish_drop = {}\npersist_slope = {}\npersist_level = {}\npairs = {}\ntail_fraction = {}\nconvergence_tol = {}\n",
            c.a2_t_lo, c.a2_t_hi, c.a2_samples, c.vanish_slope, c.vanish_drop, c.persist_slope, c.persist_level, c.pairs, c.tail_fraction, c.convergence_tol
        );
        let i = &self.integrator;
        let method = match i.method {
            Method::Rkf45Adaptive => "rkf45",
            Method::Rk4Fixed => "rk4",
        };
        s += &format!(
            "\n[integrator]\nmethod = {method}\nstep = {}\nrel_tol = {}\nabs_tol = {}\nmax_steps = {}\nmax_step = {}\ntf = {}\n",
            i.step, i.rel_tol, i.abs_tol, i.max_steps, i.max_step, self.tf
        );
        let o = &self.output;
        s += &format!(
            "\n[output]\ndir = {}\ntrajectory = {}\nplots = {}\nreport = {}\n",
            o.dir.display(),
            o.trajectory,
            o.plots,
            o.report
        );
        s
    }

    /// The perturbed system, with an exact symbolic Jacobian.
    pub fn build_system(&self) -> SystemSpec {
        let delta: Option<Vec<Arc<Expr>>> =
            (!self.perturbation.is_empty()).then(|| self.perturbation.iter().map(|d| compiled(d)).collect());
        let delta_fn = delta.map(|d| move |t: f64| d.iter().map(|e| e.eval(&[], t)).collect::<Vec<f64>>());
        let sys = match &self.system {
            SystemConfig::Example1 { b, phi } => {
                let phi = compiled(phi);
                let phi_fn = move |t: f64| phi.eval(&[], t);
                return match delta_fn {
                    Some(d) => example1(*b, phi_fn, d),
                    None => example1(*b, phi_fn, |_| vec![0.0, 0.0]),
                }
                .with_t0(self.t0);
            }
            SystemConfig::Linear { matrix } => SystemSpec::linear(matrix.clone()),
            SystemConfig::Expressions { fields } => {
                let exprs = fields.iter().map(|f| expr::parse(f).expect("validated expression")).collect();
                let field = Arc::new(ExpressionField::new(exprs).expect("validated field"));
                let n = field.dim();
                let jac = Arc::clone(&field);
                SystemSpec::new(n, move |x, t| field.eval(x, t))
                    .with_jacobian(move |x, t| Matrix::new(n, n, jac.jacobian(x, t)).expect("square Jacobian"))
            }
        };
        let sys = match delta_fn {
            Some(d) => sys.with_perturbation(d),
            None => sys,
        };
        sys.with_t0(self.t0)
    }

    pub fn domain(&self) -> Domain {
        to_domain(&self.domain).expect("validated domain")
    }

    pub fn a2_settings(&self) -> A2Settings {
        let c = &self.certify;
        A2Settings {
            vanish_slope: c.vanish_slope,
            vanish_drop: c.vanish_drop,
            persist_slope: c.persist_slope,
            persist_level: c.persist_level,
            kind: self.norm.clone(),
            ..A2Settings::default()
        }
    }

    /// The claimed rate `α(t)`, if one was given.
    pub fn alpha_fn(&self) -> Option<impl Fn(f64) -> f64 + Clone> {
        self.certify.alpha.as_ref().map(|a| {
            let e = compiled(a);
            move |t: f64| e.eval(&[], t)
        })
    }
}
