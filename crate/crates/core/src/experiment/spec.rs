//! Campaign description files.
//!
//! Flat `key = value` lines; `#` starts a comment. Lists are
//! comma-separated. Keys:
//!
//! | key | type | notes |
//! |-----|------|-------|
//! | `name` | identifier | letters, digits, `_`, `-`, `.` |
//! | `problem` | `QoS` or `MMF` | |
//! | `N` | list of integers | antenna counts, each ≥ `G` |
//! | `G` | integer | number of groups |
//! | `K` | list of integers | one size per group, or one value for all |
//! | `L` | integer | paths per channel |
//! | `power_budget` | real, Watts | required for `MMF` |
//! | `sinr_target` | real, linear | required for `QoS` |
//! | `bits` | list of integers or `inf` | phase resolutions |
//! | `realizations` | integer ≥ 1 | |
//! | `n_rand` | integer ≥ 1 | randomization samples, default 100 |
//! | `base_seed` | integer | default 0 |
//! | `family` | `primary` or `alternate` | default `primary` |
//! | `rho_mode` | `per_group` or `uniform` | default `per_group` |
//! | `spacing` | real | antenna spacing over wavelength, default 0.5 |
//! | `noise_power` | real | default 1 |

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::evaluation::Problem;
use crate::hybrid::{PhaseFamily, Resolution, RhoMode};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: Problem,
    pub n_antennas: Vec<usize>,
    pub group_sizes: Vec<usize>,
    pub n_paths: usize,
    pub power_budget: Option<f64>,
    pub sinr_target: Option<f64>,
    pub bits: Vec<Resolution>,
    pub n_realizations: usize,
    pub n_rand: usize,
    pub base_seed: u64,
    pub family: PhaseFamily,
    pub rho_mode: RhoMode,
    pub spacing_ratio: f64,
    pub noise_power: f64,
}

const KEYS: &[&str] = &[
    "name",
    "problem",
    "N",
    "G",
    "K",
    "L",
    "power_budget",
    "sinr_target",
    "bits",
    "realizations",
    "n_rand",
    "base_seed",
    "family",
    "rho_mode",
    "spacing",
    "noise_power",
];

struct Fields<'a> {
    label: &'a str,
    values: HashMap<&'a str, (usize, &'a str)>,
}

impl<'a> Fields<'a> {
    fn err(&self, line: usize, field: &str, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.label.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<(usize, &'a str)> {
        self.values.get(key).copied()
    }

    fn required(&self, key: &str) -> Result<(usize, &'a str)> {
        self.raw(key).ok_or_else(|| self.err(0, key, "missing required field"))
    }

    fn parse_one<T: FromStr>(&self, key: &str, line: usize, text: &str) -> Result<T> {
        text.trim()
            .parse()
            .map_err(|_| self.err(line, key, format!("cannot parse `{}`", text.trim())))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let (line, text) = self.required(key)?;
        self.parse_one(key, line, text)
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            Some((line, text)) => self.parse_one(key, line, text),
            None => Ok(default),
        }
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key).map(|(line, text)| self.parse_one(key, line, text)).transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<(usize, Vec<T>)> {
        let (line, text) = self.required(key)?;
        let items = text
            .split(',')
            .map(|item| self.parse_one(key, line, item))
            .collect::<Result<Vec<T>>>()?;
        Ok((line, items))
    }

    fn line_of(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |(l, _)| l)
    }
}

impl ExperimentSpec {
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut fields = Fields {
            label,
            values: HashMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(fields.err(line, content, "expected `key = value`"));
            };
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(fields.err(line, key, "unknown field"));
            }
            if fields.values.insert(key, (line, value.trim())).is_some() {
                return Err(fields.err(line, key, "duplicate field"));
            }
        }

        let name: String = fields.get("name")?;
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(fields.err(fields.line_of("name"), "name", "use letters, digits, `_`, `-` or `.`"));
        }
        let problem: Problem = fields.get("problem")?;
        let (_, n_antennas) = fields.list::<usize>("N")?;
        let g: usize = fields.get("G")?;
        let (k_line, mut group_sizes) = fields.list::<usize>("K")?;
        if group_sizes.len() == 1 && g > 1 {
            group_sizes = vec![group_sizes[0]; g];
        }
        if group_sizes.len() != g {
            return Err(fields.err(k_line, "K", format!("expected 1 or {g} sizes, found {}", group_sizes.len())));
        }
        let (_, bits) = fields.list::<Resolution>("bits")?;

        let spec = ExperimentSpec {
            name,
            problem,
            n_antennas,
            group_sizes,
            n_paths: fields.get("L")?,
            power_budget: fields.optional("power_budget")?,
            sinr_target: fields.optional("sinr_target")?,
            bits,
            n_realizations: fields.get("realizations")?,
            n_rand: fields.get_or("n_rand", 100)?,
            base_seed: fields.get_or("base_seed", 0)?,
            family: fields.get_or("family", PhaseFamily::Primary)?,
            rho_mode: fields.get_or("rho_mode", RhoMode::PerGroup)?,
            spacing_ratio: fields.get_or("spacing", 0.5)?,
            noise_power: fields.get_or("noise_power", 1.0)?,
        };
        spec.check(&fields)?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn groups(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn total_users(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    fn check(&self, f: &Fields) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(f.err(f.line_of(key), key, msg));
        let g = self.groups();
        if g == 0 {
            return bad("G", "must be at least 1");
        }
        if self.group_sizes.contains(&0) {
            return bad("K", "every group needs at least one UE");
        }
        if self.n_antennas.is_empty() || self.n_antennas.iter().any(|&n| n < g) {
            return bad("N", "every antenna count must be at least G");
        }
        if self.n_paths == 0 {
            return bad("L", "must be at least 1");
        }
        if self.n_realizations == 0 {
            return bad("realizations", "must be at least 1");
        }
        if self.n_rand == 0 {
            return bad("n_rand", "must be at least 1");
        }
        if self.bits.is_empty() {
            return bad("bits", "list at least one resolution");
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise_power", "must be positive");
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return bad("spacing", "must be positive");
        }
        match self.problem {
            Problem::Mmf => match self.power_budget {
                Some(p) if p > 0.0 && p.is_finite() => {}
                Some(_) => return bad("power_budget", "must be positive"),
                None => return bad("power_budget", "required for MMF"),
            },
            Problem::Qos => match self.sinr_target {
                Some(t) if t > 0.0 && t.is_finite() => {}
                Some(_) => return bad("sinr_target", "must be positive"),
                None => return bad("sinr_target", "required for QoS"),
            },
        }
        Ok(())
    }
}
