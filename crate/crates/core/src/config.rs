//! Plain-text run configuration: `key = value` lines, `#` comments, repeated
//! keys for list-valued settings, plus typed builders for the domain objects
//! the command-line front end assembles from a config.

use crate::fields::{FieldRoster, FieldSpec, Statistics};
use crate::fock::ModeGrid;
use crate::quad::SchwartzTestFn;
use nalgebra::Vector3;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got `{content}`")]
    BadLine { line: usize, content: String },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: {detail}")]
    Invalid { key: String, detail: String },
}

/// Ordered key/value pairs; duplicate keys accumulate.
#[derive(Debug, Clone, Default)]
pub struct Config {
    pub entries: Vec<(String, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::BadLine {
                    line: no + 1,
                    content: raw.trim().to_owned(),
                });
            };
            entries.push((key.trim().to_owned(), value.trim().to_owned()));
        }
        Ok(Config { entries })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Last occurrence wins for scalar settings.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn require(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::Missing(key))
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_scalar(key, v, "a number"),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_scalar(key, v, "an integer"),
        }
    }

    pub fn get_u32(&self, key: &str, default: u32) -> Result<u32, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_scalar(key, v, "an integer"),
        }
    }

    pub fn get_i32(&self, key: &str, default: i32) -> Result<i32, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => parse_scalar(key, v, "an integer"),
        }
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(ConfigError::BadValue {
                key: key.to_owned(),
                value: v.to_owned(),
                expected: "a boolean",
            }),
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        key: key.to_owned(),
        value: value.to_owned(),
        expected,
    })
}

pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| parse_scalar(key, s.trim(), "a comma list of numbers"))
        .collect()
}

pub fn parse_vector3(key: &str, value: &str) -> Result<Vector3<f64>, ConfigError> {
    let v = parse_f64_list(key, value)?;
    if v.len() != 3 {
        return Err(ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
            expected: "three comma-separated numbers",
        });
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

/// Builds the field roster from repeated `field =` lines:
/// `scalar NAME MASS`, `fermi-scalar NAME MASS`, `dirac MASS`, `photon`.
pub fn roster_from_config(cfg: &Config) -> Result<FieldRoster, ConfigError> {
    let lines = cfg.get_all("field");
    if lines.is_empty() {
        return Err(ConfigError::Missing("field"));
    }
    let mut roster = FieldRoster::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let spec = match parts.as_slice() {
            ["scalar", name, mass] => {
                FieldSpec::scalar(name, parse_scalar("field", mass, "a mass")?)
            }
            ["fermi-scalar", name, mass] => FieldSpec::scalar_with_statistics(
                name,
                parse_scalar("field", mass, "a mass")?,
                Statistics::Fermi,
            ),
            ["dirac", mass] => FieldSpec::dirac(parse_scalar("field", mass, "a mass")?),
            ["photon"] => FieldSpec::photon(),
            _ => {
                return Err(ConfigError::BadValue {
                    key: "field".to_owned(),
                    value: line.to_owned(),
                    expected: "`scalar NAME MASS`, `fermi-scalar NAME MASS`, `dirac MASS` or `photon`",
                })
            }
        };
        roster.register(spec).map_err(|e| ConfigError::Invalid {
            key: "field".to_owned(),
            detail: e.to_string(),
        })?;
    }
    Ok(roster)
}

/// Builds the momentum grid from `grid.point =` lines (repeatable) plus
/// `grid.dv` and `grid.nmax`; alternatively `grid.cubic = N H` generates a
/// centered cubic grid.
pub fn grid_from_config(cfg: &Config) -> Result<ModeGrid, ConfigError> {
    let nmax = cfg.get_u32("grid.nmax", 1)?;
    if let Some(spec) = cfg.get("grid.cubic") {
        let parts: Vec<&str> = spec.split_whitespace().collect();
        if let [n, h] = parts.as_slice() {
            let n: usize = parse_scalar("grid.cubic", n, "a point count")?;
            let h: f64 = parse_scalar("grid.cubic", h, "a spacing")?;
            return Ok(ModeGrid::cubic_centered(n, h, nmax));
        }
        return Err(ConfigError::BadValue {
            key: "grid.cubic".to_owned(),
            value: spec.to_owned(),
            expected: "`N H`",
        });
    }
    let points = cfg
        .get_all("grid.point")
        .into_iter()
        .map(|v| parse_vector3("grid.point", v))
        .collect::<Result<Vec<_>, _>>()?;
    if points.is_empty() {
        return Err(ConfigError::Missing("grid.point"));
    }
    let dv = cfg.get_f64("grid.dv", 1.0)?;
    Ok(ModeGrid::from_points(points, dv, nmax))
}

/// Parses one test function literal `centers | widths [| modulation]`, each a
/// comma list with one entry per axis.
pub fn testfn_from_str(key: &str, value: &str) -> Result<SchwartzTestFn, ConfigError> {
    let sections: Vec<&str> = value.split('|').map(str::trim).collect();
    if sections.len() < 2 || sections.len() > 3 {
        return Err(ConfigError::BadValue {
            key: key.to_owned(),
            value: value.to_owned(),
            expected: "`centers | widths [| modulation]`",
        });
    }
    let centers = parse_f64_list(key, sections[0])?;
    let widths = parse_f64_list(key, sections[1])?;
    let mut f =
        SchwartzTestFn::gaussian(&centers, &widths).map_err(|e| ConfigError::Invalid {
            key: key.to_owned(),
            detail: e.to_string(),
        })?;
    if sections.len() == 3 {
        let modulation = parse_f64_list(key, sections[2])?;
        f = f.with_modulation(&modulation).map_err(|e| ConfigError::Invalid {
            key: key.to_owned(),
            detail: e.to_string(),
        })?;
    }
    Ok(f)
}

/// All `testfn =` lines in order, one per interaction slot.
pub fn testfns_from_config(cfg: &Config) -> Result<Vec<SchwartzTestFn>, ConfigError> {
    cfg.get_all("testfn")
        .into_iter()
        .map(|v| testfn_from_str("testfn", v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_repeats_and_overrides() {
        let text = "\
# run setup
grid.dv = 0.2   # cell volume
grid.nmax = 2
grid.point = 0.4, 0.1, -0.2
grid.point = -0.3, 0.5, 0.2
eps = 0.4
eps = 0.1
";
        let cfg = Config::parse(text).unwrap();
        assert_eq!(cfg.get("grid.dv"), Some("0.2"));
        assert_eq!(cfg.get_all("grid.point").len(), 2);
        // Scalar reads take the last occurrence.
        assert_eq!(cfg.get("eps"), Some("0.1"));
        assert_eq!(cfg.get_f64("missing", 7.5).unwrap(), 7.5);
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = Config::parse("this is not a setting").unwrap_err();
        assert!(matches!(err, ConfigError::BadLine { line: 1, .. }));
    }

    #[test]
    fn builds_domain_objects() {
        let text = "\
field = scalar phi 1.0
field = dirac 0.5
field = photon
grid.point = 0.4, 0.1, -0.2
grid.dv = 0.2
grid.nmax = 2
testfn = 3.2,0,0,0 | 0.4,1,1,1
testfn = -3.2,0,0,0 | 0.4,1,1,1 | 0.3,0,0.2,0
";
        let cfg = Config::parse(text).unwrap();
        let roster = roster_from_config(&cfg).unwrap();
        assert_eq!(roster.len(), 3);
        let grid = grid_from_config(&cfg).unwrap();
        assert_eq!(grid.points.len(), 1);
        assert_eq!(grid.nmax, 2);
        let fns = testfns_from_config(&cfg).unwrap();
        assert_eq!(fns.len(), 2);
        assert_eq!(fns[1].axes[0].modulation, 0.3);
    }

    #[test]
    fn cubic_grid_shortcut() {
        let cfg = Config::parse("grid.cubic = 2 0.7\ngrid.nmax = 1").unwrap();
        let grid = grid_from_config(&cfg).unwrap();
        assert_eq!(grid.points.len(), 8);
    }

    #[test]
    fn duplicate_fields_are_reported() {
        let cfg = Config::parse("field = scalar phi 1.0\nfield = scalar phi 2.0").unwrap();
        assert!(matches!(
            roster_from_config(&cfg),
            Err(ConfigError::Invalid { .. })
        ));
    }
}
