//! Text formats: grids `a:b:n`, CSV matrices, cost-family JSON and run configurations.

use crate::error::{Error, Result};
use crate::scalar::{Family, ScalarCost};
use crate::transport::SinhCost;
use nalgebra::DMatrix;
use serde::Deserialize;
use std::collections::BTreeMap;

/// Largest grid accepted from text.
pub const MAX_GRID: usize = 10_000_000;

/// `a:b:n`, `n >= 2` evenly spaced points from `a` to `b` inclusive (`n = 1` gives `[a]`).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(Error::Parse(format!("grid '{text}' is not of the form a:b:n")));
    };
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| Error::Parse(format!("'{s}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse(format!("'{s}' is not finite")))
        }
    };
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| Error::Parse(format!("'{n}' is not a point count")))?;
    if n == 0 || n > MAX_GRID {
        return Err(Error::Validation(format!("grid point count {n} is not in 1..={MAX_GRID}")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect())
}

/// Rectangular matrix of finite numbers, one row per record, no header.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(format!("CSV: {e}")))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| match f.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse(format!("CSV field '{f}' is not a finite number"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!("CSV row of length {} after rows of length {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Parse("CSV matrix is empty".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A validated cost from JSON such as `{"variant": "LambertType", "params": {...}, "branch": 0}`.
pub fn parse_family_json(text: &str) -> Result<ScalarCost> {
    serde_json::from_str(text).map_err(|e| {
        let msg = e.to_string();
        if e.is_data() {
            Error::Validation(msg)
        } else {
            Error::Parse(msg)
        }
    })
}

/// Named costs accepted on the command line.
pub fn named_family(name: &str) -> Result<ScalarCost> {
    let family = match name {
        "sinh" => Family::GeneralizedHyperbolic { p0: -0.5, p1: -1.0, p2: 0.5, p3: 1.0 },
        "sinh-transport" => SinhCost::canonical(1.0)?.family(),
        "log" => Family::LogType { p0: -1.0, p1: 1.0, p2: 1.0 },
        "lambert" => Family::LambertType { a0: 0.0, a1: 1.0, a2: 1.0 },
        "exp-trig" => Family::ExpTrig { b0: 1.0, b1: 0.0, b2: 1.0, b3: 0.0 },
        "square-distance" => Family::SquareDistanceSphere,
        "euclidean" => Family::Affine { a0: 0.0, a1: -1.0 },
        _ => return Err(Error::Validation(format!("unknown cost name '{name}'"))),
    };
    ScalarCost::new(family, 0)
}

/// Subcommands a run configuration may name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    MtwCheck,
    Conjugate,
    Divergence,
    Geodesic,
    SampleMvt,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::MtwCheck => "mtw-check",
            Command::Conjugate => "conjugate",
            Command::Divergence => "divergence",
            Command::Geodesic => "geodesic",
            Command::SampleMvt => "sample-mvt",
        }
    }
}

/// Overrides for scalar solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// A flag value in a configuration file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ArgValue {
    Flag(bool),
    Number(f64),
    Text(String),
    List(Vec<f64>),
}

/// JSON alternative to command-line flags; `args` holds the remaining flags by long name.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub family: Option<ScalarCost>,
    #[serde(default)]
    pub manifold: Option<String>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub tolerance: Option<ToleranceOverride>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub args: BTreeMap<String, ArgValue>,
}

fn number_text(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

impl RunConfig {
    /// Equivalent argument list, starting with the subcommand; values are attached as `--key=value`.
    pub fn to_args(&self) -> Result<Vec<String>> {
        let mut out = vec![self.command.name().to_string()];
        let mut push = |key: &str, val: Option<String>| match val {
            Some(v) => out.push(format!("--{key}={v}")),
            None => out.push(format!("--{key}")),
        };
        if let Some(f) = &self.family {
            push("family-json", Some(serde_json::to_string(f).map_err(|e| Error::Parse(e.to_string()))?));
        }
        if let Some(m) = &self.manifold {
            push("manifold", Some(m.clone()));
        }
        if let Some(o) = &self.output {
            push("out", Some(o.clone()));
        }
        if let Some(s) = self.seed {
            push("seed", Some(s.to_string()));
        }
        if let Some(t) = &self.tolerance {
            if let Some(v) = t.atol {
                push("atol", Some(number_text(v)));
            }
            if let Some(v) = t.rtol {
                push("rtol", Some(number_text(v)));
            }
            if let Some(v) = t.max_iter {
                push("max-iter", Some(v.to_string()));
            }
        }
        for (key, val) in &self.args {
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-') {
                return Err(Error::Validation(format!("configuration key '{key}' is not a flag name")));
            }
            match val {
                ArgValue::Flag(true) => push(key, None),
                ArgValue::Flag(false) => {}
                ArgValue::Number(v) => push(key, Some(number_text(*v))),
                ArgValue::Text(s) => push(key, Some(s.clone())),
                ArgValue::List(v) => push(key, Some(v.iter().map(|x| number_text(*x)).collect::<Vec<_>>().join(","))),
            }
        }
        Ok(out)
    }
}

/// Reads a run configuration from JSON.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Validation(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    })?;
    cfg.to_args()?;
    Ok(cfg)
}
