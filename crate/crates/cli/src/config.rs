//! Experiment configuration: `key = value` files, `--key value` flags and
//! per-command schemas.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sample,
    Estimate,
    Stability,
    ExitTime,
    Transition,
    Metastability,
    Converge,
    Train,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 9] = [
        Command::Sample,
        Command::Estimate,
        Command::Stability,
        Command::ExitTime,
        Command::Transition,
        Command::Metastability,
        Command::Converge,
        Command::Train,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Sample => "sample",
            Command::Estimate => "estimate",
            Command::Stability => "stability",
            Command::ExitTime => "exit-time",
            Command::Transition => "transition",
            Command::Metastability => "metastability",
            Command::Converge => "converge",
            Command::Train => "train",
            Command::Sweep => "sweep",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::Metastability => Format::Json,
            _ => Format::Csv,
        }
    }

    pub fn schema(self) -> &'static [Key] {
        schema(self)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::usage(format!("unknown command `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    UInt,
    Bool,
    FloatList,
    UIntList,
    Path,
    Choice(&'static [&'static str]),
}

impl Kind {
    fn describe(self) -> String {
        match self {
            Kind::Float => "a finite number".into(),
            Kind::UInt => "a non-negative integer".into(),
            Kind::Bool => "true or false".into(),
            Kind::FloatList => "a comma-separated list of finite numbers".into(),
            Kind::UIntList => "a comma-separated list of non-negative integers".into(),
            Kind::Path => "a path".into(),
            Kind::Choice(options) => format!("one of {}", options.join(", ")),
        }
    }
}

/// One schema entry. Keys without a default are optional unless `required`.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub required: bool,
}

const fn key(name: &'static str, kind: Kind, default: &'static str) -> Key {
    Key {
        name,
        kind,
        default: Some(default),
        required: false,
    }
}

const fn optional(name: &'static str, kind: Kind) -> Key {
    Key {
        name,
        kind,
        default: None,
        required: false,
    }
}

const fn required(name: &'static str, kind: Kind) -> Key {
    Key {
        name,
        kind,
        default: None,
        required: true,
    }
}

const OBJECTIVES: &[&str] = &["quadratic", "double-well", "power-norm"];
const NORMALIZATIONS: &[&str] = &["unit-density", "characteristic"];
const LOSSES: &[&str] = &["nll", "hinge"];
const INITS: &[&str] = &["fan-in", "unit-gaussian"];

const SAMPLE: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    required("alpha", Kind::Float),
    key("sigma", Kind::Float, "1"),
    key("n", Kind::UInt, "1000"),
];

const ESTIMATE: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    optional("alpha", Kind::Float),
    key("sigma", Kind::Float, "1"),
    key("n", Kind::UInt, "100000"),
    optional("input", Kind::Path),
    optional("k1", Kind::UInt),
];

const STABILITY: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    optional("alpha", Kind::Float),
    key("sigma", Kind::Float, "1"),
    key("n", Kind::UInt, "120000"),
    optional("input", Kind::Path),
    key("k1", Kind::UInt, "10"),
    key("threshold", Kind::Float, "0.05"),
];

const EXIT_TIME: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    key("objective", Kind::Choice(OBJECTIVES), "quadratic"),
    key("dim", Kind::UInt, "1"),
    key("m1", Kind::Float, "-1"),
    key("m2", Kind::Float, "2"),
    key("gamma", Kind::Float, "0.5"),
    required("alpha", Kind::Float),
    required("eps", Kind::Float),
    key("eta", Kind::Float, "0.001"),
    key("sigma_brownian", Kind::Float, "0"),
    key("normalization", Kind::Choice(NORMALIZATIONS), "unit-density"),
    key("a", Kind::Float, "1"),
    key("xi", Kind::Float, "0"),
    optional("center", Kind::FloatList),
    key("reps", Kind::UInt, "100"),
    key("max_steps", Kind::UInt, "100000000"),
    key("max_diverged", Kind::Float, "0.5"),
    optional("records", Kind::Path),
];

const TRANSITION: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    key("m1", Kind::Float, "-1"),
    key("m2", Kind::Float, "2"),
    required("alpha", Kind::Float),
    required("eps", Kind::Float),
    key("eta", Kind::Float, "0.001"),
    key("sigma_brownian", Kind::Float, "0"),
    key("normalization", Kind::Choice(NORMALIZATIONS), "unit-density"),
    key("delta", Kind::Float, "0.3"),
    optional("w0", Kind::Float),
    key("steps", Kind::UInt, "1000000"),
    key("reps", Kind::UInt, "10"),
    key("max_diverged", Kind::Float, "0.5"),
];

const METASTABILITY: &[Key] = &[
    required("minima", Kind::FloatList),
    required("saddles", Kind::FloatList),
    required("alpha", Kind::Float),
];

const CONVERGE: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    key("objective", Kind::Choice(&["power-norm", "quadratic"]), "power-norm"),
    key("dim", Kind::UInt, "10"),
    key("noise", Kind::Choice(&["stable", "gaussian", "none"]), "stable"),
    key("alpha", Kind::Float, "1.5"),
    key("scale", Kind::Float, "1"),
    optional("gamma", Kind::Float),
    optional("holder_m", Kind::Float),
    optional("sigma_gamma", Kind::Float),
    key("ks", Kind::UIntList, "100,1000,10000"),
    optional("c", Kind::Float),
    optional("eta", Kind::Float),
    key("reps", Kind::UInt, "100"),
    key("w0", Kind::Float, "1"),
    key("sigma_draws", Kind::UInt, "20000"),
    key("max_diverged", Kind::Float, "0.5"),
];

const TRAIN: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    key("data", Kind::Path, "blobs"),
    key("blobs_n", Kind::UInt, "1000"),
    key("blobs_dim", Kind::UInt, "20"),
    key("blobs_classes", Kind::UInt, "3"),
    key("blobs_spread", Kind::Float, "1"),
    key("width", Kind::UInt, "128"),
    key("depth", Kind::UInt, "3"),
    key("init", Kind::Choice(INITS), "fan-in"),
    key("loss", Kind::Choice(LOSSES), "nll"),
    key("batch", Kind::UInt, "100"),
    key("eta", Kind::Float, "0.1"),
    key("iters", Kind::UInt, "1000"),
    key("log_every", Kind::UInt, "100"),
    optional("k1", Kind::UInt),
    optional("inject_alpha", Kind::Float),
    key("stability", Kind::Bool, "false"),
    key("stop_at_full_accuracy", Kind::Bool, "true"),
];

const SWEEP: &[Key] = &[
    key("seed", Kind::UInt, "0"),
    key("data", Kind::Path, "blobs"),
    key("blobs_n", Kind::UInt, "1000"),
    key("blobs_dim", Kind::UInt, "20"),
    key("blobs_classes", Kind::UInt, "3"),
    key("blobs_spread", Kind::Float, "1"),
    key("widths", Kind::UIntList, "16"),
    key("depths", Kind::UIntList, "2"),
    key("batch_sizes", Kind::UIntList, "24,48,96"),
    key("etas", Kind::FloatList, "0.1,0.2,0.4"),
    key("iters", Kind::UInt, "500"),
    key("log_every", Kind::UInt, "100"),
    key("init", Kind::Choice(INITS), "fan-in"),
    key("loss", Kind::Choice(LOSSES), "nll"),
    key("max_diverged", Kind::Float, "0.5"),
];

fn schema(command: Command) -> &'static [Key] {
    match command {
        Command::Sample => SAMPLE,
        Command::Estimate => ESTIMATE,
        Command::Stability => STABILITY,
        Command::ExitTime => EXIT_TIME,
        Command::Transition => TRANSITION,
        Command::Metastability => METASTABILITY,
        Command::Converge => CONVERGE,
        Command::Train => TRAIN,
        Command::Sweep => SWEEP,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Float(f64),
    UInt(u64),
    Bool(bool),
    FloatList(Vec<f64>),
    UIntList(Vec<u64>),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T: ToString>(xs: &[T]) -> String {
            xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        match self {
            Value::Float(x) => write!(f, "{x}"),
            Value::UInt(x) => write!(f, "{x}"),
            Value::Bool(x) => write!(f, "{x}"),
            Value::FloatList(xs) => f.write_str(&join(xs)),
            Value::UIntList(xs) => f.write_str(&join(xs)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_value(key: &Key, raw: &str) -> Result<Value, CliError> {
    let raw = raw.trim();
    let bad = || CliError::config(key.name, format!("expected {}, got `{raw}`", key.kind.describe()));
    let list = |raw: &str| -> Vec<String> { raw.split(',').map(|s| s.trim().to_string()).collect() };
    Ok(match key.kind {
        Kind::Float => Value::Float(parse_float(raw).ok_or_else(bad)?),
        Kind::UInt => Value::UInt(raw.parse().map_err(|_| bad())?),
        Kind::Bool => Value::Bool(raw.parse().map_err(|_| bad())?),
        Kind::FloatList => Value::FloatList(
            list(raw)
                .iter()
                .map(|s| parse_float(s))
                .collect::<Option<_>>()
                .ok_or_else(bad)?,
        ),
        Kind::UIntList => Value::UIntList(
            list(raw)
                .iter()
                .map(|s| s.parse().ok())
                .collect::<Option<_>>()
                .ok_or_else(bad)?,
        ),
        Kind::Path if !raw.is_empty() => Value::Text(raw.to_string()),
        Kind::Choice(options) if options.contains(&raw) => Value::Text(raw.to_string()),
        Kind::Path | Kind::Choice(_) => return Err(bad()),
    })
}

/// A fully resolved experiment: every schema key with a default is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub params: BTreeMap<String, Value>,
}

/// Raw key/value pairs from one source, duplicates rejected.
#[derive(Debug, Default)]
struct RawPairs {
    pairs: Vec<(String, String)>,
}

impl RawPairs {
    fn insert(&mut self, key: String, value: String) -> Result<(), CliError> {
        if self.pairs.iter().any(|(k, _)| *k == key) {
            return Err(CliError::config(&key, "duplicate key"));
        }
        self.pairs.push((key, value));
        Ok(())
    }

    fn take(&mut self, key: &str) -> Option<String> {
        let i = self.pairs.iter().position(|(k, _)| k == key)?;
        Some(self.pairs.remove(i).1)
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn parse_file_pairs(text: &str) -> Result<RawPairs, CliError> {
    let mut raw = RawPairs::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)));
        };
        let k = normalize_key(k);
        if k.is_empty() {
            return Err(CliError::usage(format!("line {}: empty key", lineno + 1)));
        }
        raw.insert(k, v.trim().to_string())?;
    }
    Ok(raw)
}

/// `--key value` or `--key=value` pairs.
pub fn parse_flag_pairs(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut raw = RawPairs::default();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(CliError::usage(format!("unexpected argument `{arg}`")));
        };
        let (k, v) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::config(&normalize_key(flag), "flag is missing its value"))?;
                (flag.to_string(), v.clone())
            }
        };
        raw.insert(normalize_key(&k), v)?;
    }
    Ok(raw.pairs)
}

impl ExperimentConfig {
    /// Parse a config file; the command comes from its `command` line.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::resolve(None, Some(text), &[])
    }

    /// Merge a config file with flag pairs; flags win, and a command given
    /// on the command line wins over the file's.
    pub fn resolve(command: Option<&str>, file: Option<&str>, flags: &[(String, String)]) -> Result<Self, CliError> {
        let mut merged = match file {
            Some(text) => parse_file_pairs(text)?,
            None => RawPairs::default(),
        };
        for (k, v) in flags {
            merged.take(k);
            merged.pairs.push((k.clone(), v.clone()));
        }
        let file_command = merged.take("command");
        let command: Command = match command.map(str::to_string).or(file_command) {
            Some(c) if !c.trim().is_empty() => c.trim().parse()?,
            _ => return Err(CliError::usage("no command given")),
        };
        let format = match merged.take("format") {
            None => command.default_format(),
            Some(f) => match f.trim() {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => return Err(CliError::config("format", format!("expected csv or json, got `{other}`"))),
            },
        };
        let output = merged.take("output").map(|p| PathBuf::from(p.trim()));

        let keys = command.schema();
        let mut params = BTreeMap::new();
        for (k, v) in &merged.pairs {
            let Some(entry) = keys.iter().find(|s| s.name == k) else {
                return Err(CliError::config(k, format!("unknown key for `{command}`")));
            };
            params.insert(k.clone(), parse_value(entry, v)?);
        }
        for entry in keys {
            if params.contains_key(entry.name) {
                continue;
            }
            if entry.required {
                return Err(CliError::config(entry.name, "missing required key"));
            }
            if let Some(d) = entry.default {
                params.insert(entry.name.to_string(), parse_value(entry, d).expect("schema defaults parse"));
            }
        }
        Ok(ExperimentConfig {
            command,
            format,
            output,
            params,
        })
    }

    /// Canonical `key = value` text; `parse` of the result gives back an
    /// equal config.
    pub fn serialize(&self) -> String {
        let mut s = format!("command = {}\nformat = {}\n", self.command, self.format);
        if let Some(out) = &self.output {
            s.push_str(&format!("output = {}\n", out.display()));
        }
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.params.get(key)
    }

    pub fn opt_f64(&self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            other => panic!("key `{key}` holds {other:?}, not a float"),
        }
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.opt_f64(key).unwrap_or_else(|| panic!("key `{key}` has no value"))
    }

    pub fn opt_u64(&self, key: &str) -> Option<u64> {
        match self.get(key)? {
            Value::UInt(x) => Some(*x),
            other => panic!("key `{key}` holds {other:?}, not an integer"),
        }
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.opt_u64(key).unwrap_or_else(|| panic!("key `{key}` has no value"))
    }

    pub fn usize(&self, key: &str) -> usize {
        self.u64(key) as usize
    }

    pub fn bool(&self, key: &str) -> bool {
        match self.get(key) {
            Some(Value::Bool(b)) => *b,
            other => panic!("key `{key}` holds {other:?}, not a bool"),
        }
    }

    pub fn opt_text(&self, key: &str) -> Option<&str> {
        match self.get(key)? {
            Value::Text(s) => Some(s),
            other => panic!("key `{key}` holds {other:?}, not text"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        self.opt_text(key).unwrap_or_else(|| panic!("key `{key}` has no value"))
    }

    pub fn opt_f64_list(&self, key: &str) -> Option<&[f64]> {
        match self.get(key)? {
            Value::FloatList(xs) => Some(xs),
            other => panic!("key `{key}` holds {other:?}, not a float list"),
        }
    }

    pub fn f64_list(&self, key: &str) -> &[f64] {
        self.opt_f64_list(key).unwrap_or_else(|| panic!("key `{key}` has no value"))
    }

    pub fn usize_list(&self, key: &str) -> Vec<usize> {
        match self.get(key) {
            Some(Value::UIntList(xs)) => xs.iter().map(|&x| x as usize).collect(),
            other => panic!("key `{key}` holds {other:?}, not an integer list"),
        }
    }
}
