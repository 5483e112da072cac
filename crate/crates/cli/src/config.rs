//! Sweep configuration: flat `key = value` text with `[fixed]`, `[axis.NAME]` and
//! `[output]` sections.
//!
//! ```text
//! model = ssh
//! epsilon = 1e-3
//! sizes = 101
//!
//! [fixed]
//! v2 = 0
//!
//! [axis.v1]
//! start = 0.7
//! stop = 1.2
//! count = 51
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ptfid_core::fidelity::Definition;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{key}' in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("'{name}' is not a parameter of the {model} model")]
    UnknownName { model: ModelKind, name: String },
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ssh,
    Xxz,
    DenseFile,
}

impl ModelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Ssh => "ssh",
            ModelKind::Xxz => "xxz",
            ModelKind::DenseFile => "dense-file",
        }
    }

    /// Parameters that may be fixed or swept.
    fn parameters(self) -> &'static [&'static str] {
        match self {
            ModelKind::Ssh => &["w", "v1", "v2", "u"],
            ModelKind::Xxz => &["Jz", "gamma"],
            ModelKind::DenseFile => &["lambda"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "ssh" => Ok(ModelKind::Ssh),
            "xxz" => Ok(ModelKind::Xxz),
            "dense-file" => Ok(ModelKind::DenseFile),
            _ => Err(ConfigError::Invalid(format!("unknown model '{s}' (ssh, xxz, dense-file)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(ConfigError::Invalid(format!("unknown format '{s}' (csv, json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    /// `count` evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.stop } else { self.start + step * i as f64 })
            .collect()
    }

    /// Parse `name=start:stop:count`.
    pub fn parse_spec(spec: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::Invalid(format!("axis '{spec}' is not name=start:stop:count"));
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(Self {
            name: name.trim().to_string(),
            start: parse_f64(parts[0]).map_err(|_| bad())?,
            stop: parse_f64(parts[1]).map_err(|_| bad())?,
            count: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: ModelKind,
    pub fixed: BTreeMap<String, f64>,
    /// Matrix files of the dense-file model (`h0`, `v`).
    pub files: BTreeMap<String, String>,
    pub axes: Vec<Axis>,
    pub epsilon: f64,
    #[serde(with = "definition_tag")]
    pub definition: Definition,
    pub sizes: Vec<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub seed: u64,
    /// Absolute `|Im E|` threshold overriding the model default.
    pub tol_real: Option<f64>,
    pub fit_degree: usize,
    pub divergence_floor: f64,
    /// Allowed `|Re F − 2⁻ⁿ|` when flagging a straddling interval as an EP.
    pub half_tol: f64,
    /// Verbatim configuration text, echoed into provenance.
    pub source: String,
}

mod definition_tag {
    use ptfid_core::fidelity::Definition;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Definition, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(d.tag())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Definition, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_FIT_DEGREE: usize = 2;
pub const DEFAULT_DIVERGENCE_FLOOR: f64 = -1e4;
pub const DEFAULT_HALF_TOL: f64 = 2e-2;

fn parse_f64(s: &str) -> Result<f64, std::num::ParseFloatError> {
    s.trim().parse::<f64>()
}

fn syntax(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

#[derive(Default)]
struct AxisDraft {
    start: Option<f64>,
    stop: Option<f64>,
    count: Option<usize>,
}

impl SweepConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut model = None;
        let mut fixed = BTreeMap::new();
        let mut files = BTreeMap::new();
        let mut axes: Vec<(String, AxisDraft)> = Vec::new();
        let mut epsilon = DEFAULT_EPSILON;
        let mut definition = Definition::Metricized;
        let mut sizes = Vec::new();
        let mut output = None;
        let mut format = Format::Csv;
        let mut threads = 0;
        let mut seed = DEFAULT_SEED;
        let mut tol_real = None;
        let mut fit_degree = DEFAULT_FIT_DEGREE;
        let mut divergence_floor = DEFAULT_DIVERGENCE_FLOOR;
        let mut half_tol = DEFAULT_HALF_TOL;
        let mut section = String::new();

        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| syntax(ln, "unterminated section header"))?.trim();
                match name {
                    "fixed" | "output" => {}
                    _ => {
                        let axis = name
                            .strip_prefix("axis.")
                            .filter(|a| !a.is_empty())
                            .ok_or_else(|| syntax(ln, format!("unknown section [{name}]")))?;
                        if axes.iter().any(|(a, _)| a == axis) {
                            return Err(syntax(ln, format!("axis '{axis}' defined twice")));
                        }
                        axes.push((axis.to_string(), AxisDraft::default()));
                    }
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| syntax(ln, "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || parse_f64(value).map_err(|_| syntax(ln, format!("'{value}' is not a number")));
            let int = || value.parse::<u64>().map_err(|_| syntax(ln, format!("'{value}' is not an integer")));
            match section.as_str() {
                "" => match key {
                    "model" => model = Some(value.parse::<ModelKind>()?),
                    "epsilon" => epsilon = num()?,
                    "definition" => {
                        definition = value.parse().map_err(|e: ptfid_core::Error| syntax(ln, e.to_string()))?
                    }
                    "sizes" => {
                        sizes = value
                            .split(',')
                            .map(|s| s.trim().parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| syntax(ln, "sizes must be a comma-separated list of integers"))?
                    }
                    "threads" => threads = int()? as usize,
                    "seed" => seed = int()?,
                    "tol_real" => tol_real = Some(num()?),
                    "fit_degree" => fit_degree = int()? as usize,
                    "divergence_floor" => divergence_floor = num()?,
                    "half_tol" => half_tol = num()?,
                    _ => return Err(ConfigError::UnknownKey { section: "top level".into(), key: key.into() }),
                },
                "fixed" => {
                    if key == "h0" || key == "v" {
                        files.insert(key.to_string(), value.to_string());
                    } else if key == "L" {
                        let l = value.parse::<usize>().map_err(|_| syntax(ln, "L must be an integer"))?;
                        fixed.insert(key.to_string(), l as f64);
                    } else {
                        fixed.insert(key.to_string(), num()?);
                    }
                }
                "output" => match key {
                    "path" => output = Some(PathBuf::from(value)),
                    "format" => format = value.parse()?,
                    _ => return Err(ConfigError::UnknownKey { section: "output".into(), key: key.into() }),
                },
                axis_section => {
                    let draft = &mut axes.last_mut().expect("axis section opened").1;
                    match key {
                        "start" => draft.start = Some(num()?),
                        "stop" => draft.stop = Some(num()?),
                        "count" => draft.count = Some(int()? as usize),
                        _ => return Err(ConfigError::UnknownKey { section: axis_section.into(), key: key.into() }),
                    }
                }
            }
        }

        let model = model.ok_or_else(|| ConfigError::Invalid("missing 'model'".into()))?;
        let axes = axes
            .into_iter()
            .map(|(name, d)| {
                let missing = |k: &str| ConfigError::Invalid(format!("axis '{name}' is missing '{k}'"));
                Ok(Axis {
                    start: d.start.ok_or_else(|| missing("start"))?,
                    stop: d.stop.ok_or_else(|| missing("stop"))?,
                    count: d.count.ok_or_else(|| missing("count"))?,
                    name,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let mut cfg = Self {
            model,
            fixed,
            files,
            axes,
            epsilon,
            definition,
            sizes,
            output,
            format,
            threads,
            seed,
            tol_real,
            fit_degree,
            divergence_floor,
            half_tol,
            source: text.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks names, ranges and model-specific requirements; moves a fixed `L` into `sizes`.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.axes.is_empty() {
            return invalid("at least one [axis.NAME] section is required".into());
        }
        let params = self.model.parameters();
        for a in &self.axes {
            if !params.contains(&a.name.as_str()) {
                return Err(ConfigError::UnknownName { model: self.model, name: a.name.clone() });
            }
            if a.count < 2 {
                return invalid(format!("axis '{}' needs count >= 2, got {}", a.name, a.count));
            }
            if !(a.start.is_finite() && a.stop.is_finite()) || a.start == a.stop {
                return invalid(format!("axis '{}' needs distinct finite endpoints", a.name));
            }
            if self.fixed.contains_key(&a.name) {
                return invalid(format!("'{}' is both fixed and swept", a.name));
            }
        }
        for (name, v) in &self.fixed {
            if name != "L" && !params.contains(&name.as_str()) {
                return Err(ConfigError::UnknownName { model: self.model, name: name.clone() });
            }
            if !v.is_finite() {
                return invalid(format!("'{name}' must be finite"));
            }
        }
        if let Some(l) = self.fixed.remove("L") {
            if !self.sizes.is_empty() {
                return invalid("give either [fixed] L or sizes, not both".into());
            }
            self.sizes.push(l as usize);
        }
        if let Some(t) = self.tol_real {
            if !(t > 0.0) {
                return invalid("tol_real must be positive".into());
            }
        }
        if !(self.half_tol > 0.0) {
            return invalid("half_tol must be positive".into());
        }
        match self.model {
            ModelKind::Ssh => {
                if self.sizes.is_empty() {
                    return invalid("ssh needs sizes (or [fixed] L)".into());
                }
                if self.sizes.iter().any(|&l| l < 2) {
                    return invalid("ssh sizes must be >= 2".into());
                }
                if !self.has("v1") {
                    return invalid("ssh needs v1 (fixed or swept)".into());
                }
            }
            ModelKind::Xxz => {
                if self.axes.len() != 1 {
                    return invalid("xxz sweeps exactly one of Jz, gamma".into());
                }
                if self.sizes.is_empty() || self.sizes.iter().any(|&l| l % 2 != 0 || l < 4) {
                    return invalid("xxz needs even sizes >= 4".into());
                }
                let other = if self.axes[0].name == "Jz" { "gamma" } else { "Jz" };
                if !self.fixed.contains_key(other) {
                    return invalid(format!("xxz needs a fixed {other}"));
                }
            }
            ModelKind::DenseFile => {
                if self.axes.len() != 1 {
                    return invalid("dense-file sweeps exactly one axis, lambda".into());
                }
                for f in ["h0", "v"] {
                    if !self.files.contains_key(f) {
                        return invalid(format!("dense-file needs [fixed] {f} = <matrix file>"));
                    }
                }
                if !self.sizes.is_empty() {
                    return invalid("dense-file takes its dimension from the matrix files".into());
                }
            }
        }
        if self.model != ModelKind::DenseFile && !self.files.is_empty() {
            return invalid("matrix files are only used by the dense-file model".into());
        }
        Ok(())
    }

    fn has(&self, name: &str) -> bool {
        self.fixed.contains_key(name) || self.axes.iter().any(|a| a.name == name)
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(|a| a.name.clone()).collect()
    }

    /// Cartesian grid, first axis outermost.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![Vec::new()];
        for vals in &values {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SSH: &str = "model = ssh\nsizes = 101\n[fixed]\nv2 = 0\n[axis.v1]\nstart = 0.7\nstop = 1.2\ncount = 6\n[axis.u]\nstart = 0\nstop = 0.2\ncount = 3\n";

    #[test]
    fn parses_sections_and_grid() {
        let c = SweepConfig::parse(SSH).unwrap();
        assert_eq!(c.model, ModelKind::Ssh);
        assert_eq!(c.sizes, vec![101]);
        assert_eq!(c.axis_names(), vec!["v1", "u"]);
        let g = c.grid();
        assert_eq!(g.len(), 18);
        assert_eq!(g[1], vec![0.7, 0.1]);
        assert_eq!(g[17], vec![1.2, 0.2]);
    }

    #[test]
    fn rejects_bad_configs() {
        let one = SSH.replace("count = 3", "count = 1");
        assert!(matches!(SweepConfig::parse(&one), Err(ConfigError::Invalid(_))));
        let unknown = SSH.replace("v2 = 0", "Jz = 0");
        assert!(matches!(SweepConfig::parse(&unknown), Err(ConfigError::UnknownName { .. })));
        assert!(matches!(SweepConfig::parse("model = ssh\nfoo = 1\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(SweepConfig::parse(&SSH.replace("sizes = 101", "epsilon = -1\nsizes = 101")).is_err());
        assert!(SweepConfig::parse("model = xxz\nsizes = 9\n[fixed]\nJz=1\n[axis.gamma]\nstart=0\nstop=1\ncount=3").is_err());
    }

    #[test]
    fn axis_spec() {
        let a = Axis::parse_spec("gamma=0:0.1:11").unwrap();
        assert_eq!(a.values().len(), 11);
        assert_eq!(a.values()[10], 0.1);
        assert!(Axis::parse_spec("gamma=0:0.1").is_err());
    }
}
