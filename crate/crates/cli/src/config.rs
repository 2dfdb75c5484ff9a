//! Flat `key = value` configuration with typed accessors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UsageError {
    #[error("{0}")]
    Message(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("parameter `{key}`: cannot parse `{value}` as {what}")]
    BadValue {
        key: String,
        value: String,
        what: &'static str,
    },
    #[error("parameter `{0}` is required")]
    Missing(String),
    #[error("unknown parameter `{key}` for experiment {experiment}")]
    UnknownKey { key: String, experiment: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    GroundState,
    GapScan,
    Scaling,
    Correction,
    Graphs,
    IteratedIntegral,
    StarkSpectrum,
    KernelCheck,
    Profile,
    ProfileLimit,
    Transverse,
    ZdSpectrum,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::GroundState,
        Experiment::GapScan,
        Experiment::Scaling,
        Experiment::Correction,
        Experiment::Graphs,
        Experiment::IteratedIntegral,
        Experiment::StarkSpectrum,
        Experiment::KernelCheck,
        Experiment::Profile,
        Experiment::ProfileLimit,
        Experiment::Transverse,
        Experiment::ZdSpectrum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GroundState => "ground-state",
            Experiment::GapScan => "gap-scan",
            Experiment::Scaling => "scaling",
            Experiment::Correction => "correction",
            Experiment::Graphs => "graphs",
            Experiment::IteratedIntegral => "iterated-integral",
            Experiment::StarkSpectrum => "stark-spectrum",
            Experiment::KernelCheck => "kernel-check",
            Experiment::Profile => "profile",
            Experiment::ProfileLimit => "profile-limit",
            Experiment::Transverse => "transverse",
            Experiment::ZdSpectrum => "zd-spectrum",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| UsageError::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = UsageError;

    fn from_str(s: &str) -> Result<Self, UsageError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(UsageError::BadValue {
                key: "format".into(),
                value: s.into(),
                what: "csv or json",
            }),
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: BTreeMap<String, String>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: Option<u64>,
}

const RESERVED: [&str; 4] = ["experiment", "out", "format", "seed"];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError::Message(format!("config line {}: expected `key = value`", n + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(UsageError::Message(format!("config line {}: empty key", n + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            params: BTreeMap::new(),
            out: None,
            format: Format::Csv,
            seed: None,
        }
    }

    /// Builds a configuration from a parsed map; reserved keys fill the typed fields.
    pub fn from_map(mut map: BTreeMap<String, String>, experiment: Option<Experiment>) -> Result<Self, UsageError> {
        let experiment = match (experiment, map.remove("experiment")) {
            (Some(e), _) => e,
            (None, Some(name)) => name.parse()?,
            (None, None) => return Err(UsageError::Missing("experiment".into())),
        };
        let mut cfg = Self::new(experiment);
        if let Some(o) = map.remove("out") {
            cfg.out = Some(PathBuf::from(o));
        }
        if let Some(f) = map.remove("format") {
            cfg.format = f.parse()?;
        }
        if let Some(s) = map.remove("seed") {
            cfg.seed = Some(parse_value("seed", &s)?);
        }
        cfg.params = map;
        Ok(cfg)
    }

    /// Inverse of [`parse_text`] + [`Self::from_map`]; keys sorted.
    pub fn to_text(&self) -> String {
        let mut s = format!("experiment = {}\n", self.experiment);
        s.push_str(&format!("format = {}\n", self.format.name()));
        if let Some(o) = &self.out {
            s.push_str(&format!("out = {}\n", o.display()));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Rejects keys that the experiment does not read.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), UsageError> {
        for k in self.params.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(UsageError::UnknownKey {
                    key: k.clone(),
                    experiment: self.experiment.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, UsageError> {
        self.raw(key).map_or(Ok(default), |v| parse_value(key, v))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, UsageError> {
        let v = self.raw(key).ok_or_else(|| UsageError::Missing(key.into()))?;
        parse_value(key, v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>, UsageError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(key, v),
        }
    }

    /// Inclusive integer range `a..b`, or a single integer.
    pub fn range(&self, key: &str, default: (i64, i64)) -> Result<(i64, i64), UsageError> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        let bad = || UsageError::BadValue {
            key: key.into(),
            value: v.into(),
            what: "integer range a..b",
        };
        let (lo, hi) = match v.split_once("..") {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().trim_start_matches('=').parse().map_err(|_| bad())?,
            ),
            None => {
                let x = v.trim().parse().map_err(|_| bad())?;
                (x, x)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        Ok((lo, hi))
    }

    pub fn vec3(&self, key: &str, default: [f64; 3]) -> Result<[f64; 3], UsageError> {
        let v: Vec<f64> = self.list(key, &default)?;
        v.try_into().map_err(|_| UsageError::BadValue {
            key: key.into(),
            value: self.raw(key).unwrap_or_default().into(),
            what: "three comma-separated reals",
        })
    }

    /// Comma-separated complex numbers written `re` or `re:im`.
    pub fn complex_list(&self, key: &str) -> Result<Option<Vec<Complex64>>, UsageError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|item| {
                let item = item.trim();
                let (re, im) = item.split_once(':').unwrap_or((item, "0"));
                match (re.trim().parse(), im.trim().parse()) {
                    (Ok(a), Ok(b)) => Ok(Complex64::new(a, b)),
                    _ => Err(UsageError::BadValue {
                        key: key.into(),
                        value: item.into(),
                        what: "complex `re:im`",
                    }),
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn require_seed(&self) -> Result<u64, UsageError> {
        self.seed.ok_or_else(|| {
            UsageError::Message(format!(
                "experiment {} is randomized; --seed is mandatory",
                self.experiment
            ))
        })
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.trim().parse().map_err(|_| UsageError::BadValue {
        key: key.into(),
        value: v.into(),
        what: std::any::type_name::<T>(),
    })
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, UsageError> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

/// Command-line arguments after the program name.
#[derive(Debug, Clone, PartialEq)]
pub enum Invocation {
    Help,
    List,
    Run(ExperimentConfig),
}

/// `<experiment> [--config FILE] [--key value]... [--out PATH] [--format csv|json] [--seed N]`.
/// Flags override values read from the config file.
pub fn parse_args<I: IntoIterator<Item = String>>(args: I) -> Result<Invocation, UsageError> {
    let args: Vec<String> = args.into_iter().collect();
    let Some(first) = args.first() else {
        return Err(UsageError::Message("missing experiment; try --help".into()));
    };
    match first.as_str() {
        "-h" | "--help" | "help" => return Ok(Invocation::Help),
        "--list" | "list" => return Ok(Invocation::List),
        _ => {}
    }
    let (experiment, rest) = if first.starts_with("--") {
        (None, &args[..])
    } else {
        (Some(first.parse::<Experiment>()?), &args[1..])
    };
    let mut flags: BTreeMap<String, String> = BTreeMap::new();
    let mut config_file = None;
    let mut it = rest.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| UsageError::Message(format!("unexpected argument `{a}`")))?;
        if key == "help" {
            return Ok(Invocation::Help);
        }
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| UsageError::Message(format!("flag --{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        if key == "config" {
            config_file = Some(value);
        } else {
            flags.insert(key, value);
        }
    }
    let mut map = match config_file {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| UsageError::Message(format!("cannot read config {path}: {e}")))?;
            parse_text(&text)?
        }
        None => BTreeMap::new(),
    };
    map.extend(flags);
    let cfg = ExperimentConfig::from_map(map, experiment)?;
    for k in cfg.params.keys() {
        if RESERVED.contains(&k.as_str()) {
            return Err(UsageError::Message(format!("reserved key {k}")));
        }
    }
    Ok(Invocation::Run(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn flags_and_reserved_keys() {
        let Invocation::Run(c) = parse_args(args("gap-scan --delta 2 --L 4..12 --format json --seed 7")).unwrap()
        else {
            panic!()
        };
        assert_eq!(c.experiment, Experiment::GapScan);
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.range("L", (0, 0)).unwrap(), (4, 12));
        assert_eq!(c.get("delta", 0.0).unwrap(), 2.0);
    }

    #[test]
    fn usage_errors() {
        assert!(matches!(
            parse_args(args("nope")),
            Err(UsageError::UnknownExperiment(_))
        ));
        assert!(parse_args(args("graphs --n")).is_err());
        assert!(parse_args(args("graphs stray")).is_err());
        assert!(parse_args(Vec::<String>::new()).is_err());
        assert_eq!(parse_args(args("--help")).unwrap(), Invocation::Help);
    }

    #[test]
    fn text_round_trip() {
        let text = "# comment\nexperiment = scaling\nlambda = 0.2,0.1\n\nL=6\nseed = 3\n";
        let cfg = ExperimentConfig::from_map(parse_text(text).unwrap(), None).unwrap();
        let once = cfg.to_text();
        let again = ExperimentConfig::from_map(parse_text(&once).unwrap(), None)
            .unwrap()
            .to_text();
        assert_eq!(once, again);
        assert_eq!(cfg.list::<f64>("lambda", &[]).unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn typed_accessors() {
        let mut c = ExperimentConfig::new(Experiment::Profile);
        c.params.insert("B".into(), "1,0,0.5".into());
        c.params.insert("k".into(), "0.5:0.2,1".into());
        c.params.insert("bad".into(), "x".into());
        assert_eq!(c.vec3("B", [0.0; 3]).unwrap(), [1.0, 0.0, 0.5]);
        assert_eq!(c.complex_list("k").unwrap().unwrap()[1], Complex64::new(1.0, 0.0));
        assert!(c.get::<f64>("bad", 0.0).is_err());
        assert!(c.require::<f64>("missing").is_err());
        assert!(c.check_keys(&["B", "k"]).is_err());
    }
}
