//! Flat `key = value` configuration files and the small expression grammar
//! shared with the command line.
//!
//! ```text
//! # dichotomy run
//! alpha = 1
//! n_modes = 4096
//! initial.kind = step
//! initial.jumps = 0, pi
//! initial.values = 1, 0
//! times.rational = 1/2, 1/3, 2/5
//! times.irrational = golden, sqrt2, e, pi
//! dimension.levels = 12
//! seed = 7
//! ```
//!
//! Real numbers may be written with `pi`: `pi/3`, `2pi/5`, `-0.5*pi`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{make_random_data, make_smoothed_step, make_sobolev_data, make_step_function, StepFunctionSpec};
use crate::error::{Error, Result};
use crate::spectral::FourierState;

/// Parsed `key = value` lines in file order-independent form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::InvalidConfig(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Parses `key` with `FromStr`, if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::InvalidConfig(format!("{key} = '{v}': {e}")))
            })
            .transpose()
    }

    /// Parses `key` as a real expression, if present.
    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| parse_real(v).map_err(|e| Error::InvalidConfig(format!("{key}: {e}"))))
            .transpose()
    }

    /// Rejects keys outside `known`.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidConfig(format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

fn parse_factor(tok: &str) -> Result<f64> {
    let tok = tok.trim();
    let bad = || Error::InvalidConfig(format!("cannot parse '{tok}' as a number"));
    if tok.is_empty() {
        return Err(bad());
    }
    if let Some(coef) = tok.strip_suffix("pi") {
        let coef = coef.trim();
        return if coef.is_empty() {
            Ok(PI)
        } else {
            coef.parse::<f64>().map(|c| c * PI).map_err(|_| bad())
        };
    }
    tok.parse::<f64>().map_err(|_| bad())
}

fn parse_product(text: &str) -> Result<f64> {
    text.split('*').map(parse_factor).product()
}

/// Real number with optional `pi` factors: `a*b/c*d`, where each factor is
/// a decimal, `pi`, or `<decimal>pi`.
pub fn parse_real(text: &str) -> Result<f64> {
    let text = text.trim();
    let (sign, body) = match text.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, text),
    };
    let mut parts = body.split('/');
    let num = parse_product(parts.next().unwrap_or(""))?;
    let value = match (parts.next(), parts.next()) {
        (None, _) => num,
        (Some(den), None) => {
            let den = parse_product(den)?;
            if den == 0.0 {
                return Err(Error::InvalidConfig(format!("division by zero in '{text}'")));
            }
            num / den
        }
        _ => return Err(Error::InvalidConfig(format!("more than one '/' in '{text}'"))),
    };
    if !value.is_finite() {
        return Err(Error::InvalidConfig(format!("'{text}' is not finite")));
    }
    Ok(sign * value)
}

/// Comma-separated items, trimmed, empties dropped.
pub fn split_list(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

pub fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    split_list(text).into_iter().map(parse_real).collect()
}

/// Where initial data come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    Step(StepFunctionSpec),
    SmoothedStep { step: StepFunctionSpec, width: f64 },
    Sobolev { sigma0: f64, seed: u64 },
    /// Gaussian coefficients under `⟨k⟩^{−4}`, normalized in `H¹`.
    Random { seed: u64, h1_norm: f64 },
    File { path: PathBuf },
}

/// Default `H¹` norm of `random` data.
pub const RANDOM_H1_NORM: f64 = 0.5;
/// Envelope exponent of `random` data.
pub const RANDOM_DECAY: f64 = 4.0;

impl InitialSpec {
    /// Parses the command-line form:
    ///
    /// * `step:<x>=<v>,<x>=<v>,…`: value `v` from jump location `x` on,
    /// * `smoothed-step:<width>:<x>=<v>,…`,
    /// * `sobolev:<sigma0>:<seed>`,
    /// * `random:<seed>`,
    /// * `file:<path.json>`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("initial data '{text}' needs the form kind:args")))?;
        match kind {
            "step" => Ok(InitialSpec::Step(parse_jump_pairs(rest)?)),
            "smoothed-step" => {
                let (width, pairs) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidConfig("smoothed-step:<width>:<x>=<v>,…".into()))?;
                Ok(InitialSpec::SmoothedStep {
                    step: parse_jump_pairs(pairs)?,
                    width: parse_real(width)?,
                })
            }
            "sobolev" => {
                let (sigma0, seed) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidConfig("sobolev:<sigma0>:<seed>".into()))?;
                Ok(InitialSpec::Sobolev {
                    sigma0: parse_real(sigma0)?,
                    seed: parse_seed(seed)?,
                })
            }
            "random" => Ok(InitialSpec::Random {
                seed: parse_seed(rest)?,
                h1_norm: RANDOM_H1_NORM,
            }),
            "file" => Ok(InitialSpec::File { path: PathBuf::from(rest) }),
            other => Err(Error::InvalidConfig(format!("unknown initial data kind '{other}'"))),
        }
    }

    pub fn build(&self, n_modes: usize) -> Result<FourierState> {
        match self {
            InitialSpec::Step(spec) => make_step_function(spec, n_modes),
            InitialSpec::SmoothedStep { step, width } => make_smoothed_step(step, n_modes, *width),
            InitialSpec::Sobolev { sigma0, seed } => Ok(make_sobolev_data(*sigma0, *seed, n_modes)),
            InitialSpec::Random { seed, h1_norm } => Ok(make_random_data(n_modes, RANDOM_DECAY, 1.0, *h1_norm, *seed)),
            InitialSpec::File { path } => {
                let g = FourierState::read_json(path)?;
                if g.n_modes() != n_modes {
                    return Err(Error::BandMismatch {
                        left: g.n_modes(),
                        right: n_modes,
                    });
                }
                Ok(g)
            }
        }
    }

    /// Input file to hash into a run manifest, if any.
    pub fn input_path(&self) -> Option<&Path> {
        match self {
            InitialSpec::File { path } => Some(path),
            _ => None,
        }
    }
}

fn parse_seed(text: &str) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("seed '{text}': {e}")))
}

fn parse_jump_pairs(text: &str) -> Result<StepFunctionSpec> {
    let mut jumps = Vec::new();
    let mut values = Vec::new();
    for item in split_list(text) {
        let (x, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("'{item}' should be <location>=<value>")))?;
        jumps.push(parse_real(x)?);
        values.push(parse_real(v)?);
    }
    StepFunctionSpec::new(jumps, values).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Reads the `initial.*` keys of a config file.
pub fn initial_from_keys(kv: &KeyValues) -> Result<InitialSpec> {
    let kind = kv.get("initial.kind").unwrap_or("step");
    let seed = kv.parsed::<u64>("seed")?.unwrap_or(0);
    let step = || -> Result<StepFunctionSpec> {
        let jumps = kv.get("initial.jumps").map(parse_real_list).transpose()?;
        let values = kv.get("initial.values").map(parse_real_list).transpose()?;
        match (jumps, values) {
            (None, None) => Ok(StepFunctionSpec::indicator_half()),
            (Some(j), Some(v)) => StepFunctionSpec::new(j, v).map_err(|e| Error::InvalidConfig(e.to_string())),
            _ => Err(Error::InvalidConfig("initial.jumps and initial.values go together".into())),
        }
    };
    match kind {
        "step" => Ok(InitialSpec::Step(step()?)),
        "smoothed-step" => Ok(InitialSpec::SmoothedStep {
            step: step()?,
            width: kv
                .real("initial.width")?
                .ok_or_else(|| Error::InvalidConfig("smoothed-step needs initial.width".into()))?,
        }),
        "sobolev" => Ok(InitialSpec::Sobolev {
            sigma0: kv.real("initial.sigma0")?.unwrap_or(0.5),
            seed,
        }),
        "random" => Ok(InitialSpec::Random {
            seed,
            h1_norm: kv.real("initial.h1_norm")?.unwrap_or(RANDOM_H1_NORM),
        }),
        "file" => Ok(InitialSpec::File {
            path: PathBuf::from(
                kv.get("initial.path")
                    .ok_or_else(|| Error::InvalidConfig("initial.kind = file needs initial.path".into()))?,
            ),
        }),
        other => Err(Error::InvalidConfig(format!("unknown initial.kind '{other}'"))),
    }
}
