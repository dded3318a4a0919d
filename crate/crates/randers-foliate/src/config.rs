//! Run configuration: flags, a flat `key = value` file, and their merge.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use randers_foliate_core::grid::{ExampleKind, ExampleSpec, Scheme};
use randers_foliate_core::verify::{parse_formulas, Formula};

/// Configuration problem; the CLI maps these to exit code 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Format, ConfigError> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => err(format!("unknown format '{s}' (expected json or csv)")),
        }
    }
}

/// Unvalidated settings, as read from the file or the command line.
/// Later layers override earlier ones field by field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub example: Option<String>,
    pub params: BTreeMap<String, String>,
    pub res: Option<String>,
    pub formulas: Option<String>,
    pub scheme: Option<String>,
    pub seed: Option<String>,
    pub jobs: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl RawConfig {
    /// Parses a flat file of `key = value` lines. `#` starts a comment;
    /// parameters are given as `param.NAME = value`.
    pub fn parse_file_contents(text: &str, origin: &str) -> Result<RawConfig, ConfigError> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("{origin}:{}: expected 'key = value'", i + 1));
            };
            let (key, value) = (key.trim(), value.trim().to_string());
            match key {
                "example" => raw.example = Some(value),
                "res" => raw.res = Some(value),
                "formulas" => raw.formulas = Some(value),
                "scheme" => raw.scheme = Some(value),
                "seed" => raw.seed = Some(value),
                "jobs" => raw.jobs = Some(value),
                "out" => raw.out = Some(PathBuf::from(value)),
                "format" => raw.format = Some(value),
                _ => match key.strip_prefix("param.") {
                    Some(name) if !name.is_empty() => {
                        raw.params.insert(name.to_string(), value);
                    }
                    _ => return err(format!("{origin}:{}: unknown key '{key}'", i + 1)),
                },
            }
        }
        Ok(raw)
    }

    pub fn read_file(path: &Path) -> Result<RawConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        RawConfig::parse_file_contents(&text, &path.display().to_string())
    }

    /// `self` overridden by every field set in `top`.
    pub fn overridden_by(mut self, top: RawConfig) -> RawConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if top.$f.is_some() { self.$f = top.$f; } )* };
        }
        take!(example, res, formulas, scheme, seed, jobs, out, format);
        self.params.extend(top.params);
        self
    }
}

/// Parses `k=v` from a `--param` flag.
pub fn parse_param_flag(s: &str) -> Result<(String, String), ConfigError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => err(format!("--param expects k=v, got '{s}'")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub example: ExampleSpec,
    pub resolutions: Vec<usize>,
    pub formulas: Vec<Formula>,
    pub scheme: Scheme,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn parse_num<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, ConfigError> {
    s.trim()
        .parse()
        .map_err(|_| ConfigError(format!("invalid {what} '{s}'")))
}

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<RunConfig, ConfigError> {
        let Some(name) = raw.example else {
            return err("no example given (use --example or --list)");
        };
        let Some(kind) = ExampleKind::parse(&name) else {
            return err(format!("unknown example '{name}' (see --list)"));
        };
        let mut example = ExampleSpec::new(kind);
        for (k, v) in &raw.params {
            example = example.with(k, parse_num(&format!("value for parameter {k}"), v)?);
        }
        example.resolved_params().map_err(|e| ConfigError(e.to_string()))?;

        let resolutions = match &raw.res {
            Some(s) => s
                .split(',')
                .map(|r| parse_num::<usize>("resolution", r))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![kind.entry().default_resolution],
        };
        if resolutions.is_empty() {
            return err("at least one resolution is required");
        }
        if let Some(r) = resolutions.iter().find(|r| **r < 8) {
            return err(format!("resolution {r} is below the minimum of 8"));
        }
        let formulas = parse_formulas(raw.formulas.as_deref().unwrap_or("all")).map_err(|e| ConfigError(e.to_string()))?;
        let scheme = match raw.scheme.as_deref() {
            None => Scheme::Spectral,
            Some(s) => Scheme::parse(s).ok_or_else(|| ConfigError(format!("unknown scheme '{s}'")))?,
        };
        let seed = raw.seed.as_deref().map_or(Ok(0), |s| parse_num("seed", s))?;
        let jobs = match raw.jobs.as_deref() {
            None => None,
            Some(s) => {
                let j: usize = parse_num("job count", s)?;
                if j == 0 {
                    return err("--jobs must be at least 1");
                }
                Some(j)
            }
        };
        let format = match raw.format.as_deref() {
            Some(f) => Format::parse(f)?,
            None => match raw.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
                Some("csv") => Format::Csv,
                _ => Format::Json,
            },
        };
        Ok(RunConfig {
            example,
            resolutions,
            formulas,
            scheme,
            seed,
            jobs,
            out: raw.out,
            format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = RawConfig::parse_file_contents(
            "example = flat-graph\nres = 16,32 # sweep\nparam.amp = 0.1\nseed = 4\n",
            "cfg",
        )
        .unwrap();
        let mut flags = RawConfig {
            res: Some("24".into()),
            ..Default::default()
        };
        flags.params.insert("b1".into(), "0.1".into());
        let cfg = RunConfig::from_raw(file.overridden_by(flags)).unwrap();
        assert_eq!(cfg.resolutions, vec![24]);
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.example.params.len(), 2);
    }

    #[test]
    fn line_numbers_in_errors() {
        let e = RawConfig::parse_file_contents("example = flat-graph\nbogus\n", "f.cfg").unwrap_err();
        assert!(e.0.starts_with("f.cfg:2:"), "{e}");
    }

    #[test]
    fn rejects_unknown_names() {
        let raw = RawConfig {
            example: Some("nosuch".into()),
            ..Default::default()
        };
        assert!(RunConfig::from_raw(raw).is_err());
        let raw = RawConfig {
            example: Some("flat-graph".into()),
            formulas: Some("reeb,nosuch".into()),
            ..Default::default()
        };
        assert!(RunConfig::from_raw(raw).is_err());
    }
}
