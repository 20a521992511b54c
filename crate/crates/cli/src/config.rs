//! Run configuration: a flat `key = value` file overlaid by command-line flags.
//!
//! ```text
//! # comment
//! data       = population.csv      # or: fixture = values.txt
//! n          = 7
//! estimators = t1,t2,t5            # or: all
//! params     = quadratic; t3:alpha=1.5; t5:delta1=-1
//! mode       = both                # as-published | re-derived | both
//! reps       = 100000
//! seed       = 42
//! budget     = 2000000
//! workers    = 4
//! symbols    = A1=0.2,A2=0.1,theta=0.004,S=0
//! out        = records.tsv
//! ```
//!
//! `params` is a `;`-separated list. A bare word picks the parameter policy
//! (`explicit`, `published` or `quadratic`); `tK:name=value,...` sets explicit
//! values, or the fixed inputs of an optimized family (t3 `alpha`, t5 `delta1`,
//! `delta2`, `c`, `d`). Giving one weight of a pair sets the other to its
//! complement.

use std::collections::BTreeMap;
use std::path::PathBuf;

use ratiolab::approximation::{OptimumMethod, PublishedSymbols};
use ratiolab::estimators::validate_spec;
use ratiolab::moments::DEFAULT_BUDGET;
use ratiolab::{EstimatorSpec, Family};

use crate::error::{CliError, CliResult};

pub const KEYS: [&str; 12] = [
    "data",
    "fixture",
    "n",
    "estimators",
    "params",
    "mode",
    "reps",
    "seed",
    "budget",
    "workers",
    "symbols",
    "out",
];

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Fixture(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ParamPolicy {
    Explicit,
    Optimal(OptimumMethod),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeSelection {
    AsPublished,
    ReDerived,
    Both,
}

/// Unparsed key/value pairs; later layers override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("config line {}: expected `key = value`", i + 1))
            })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(CliError::config(format!(
                    "config line {}: unknown key `{k}`",
                    i + 1
                )));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key));
        self.values.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Drops `data` and `fixture`, so another layer can pick the source.
    pub fn without_source(mut self) -> Self {
        self.values.remove("data");
        self.values.remove("fixture");
        self
    }

    pub fn overlay(mut self, other: RawConfig) -> Self {
        self.values.extend(other.values);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub source: DataSource,
    pub n: Option<usize>,
    pub estimators: Vec<Family>,
    pub policy: ParamPolicy,
    /// Explicit values (or fixed inputs for optimized families).
    pub overrides: BTreeMap<Family, Vec<(String, f64)>>,
    pub mode: ModeSelection,
    pub reps: u64,
    pub seed: Option<u64>,
    pub budget: u128,
    pub workers: Option<usize>,
    pub symbols: PublishedSymbols,
    pub out: Option<PathBuf>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::config(format!("{key}: cannot parse `{v}`")))
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let source = match (raw.get("data"), raw.get("fixture")) {
            (Some(d), None) => DataSource::Csv(PathBuf::from(d)),
            (None, Some(f)) => DataSource::Fixture(PathBuf::from(f)),
            (Some(_), Some(_)) => {
                return Err(CliError::config("give either data or fixture, not both"))
            }
            (None, None) => {
                return Err(CliError::config(
                    "a data source is required (data or fixture)",
                ))
            }
        };
        let n = raw
            .get("n")
            .map(|v| parse_num::<usize>("n", v))
            .transpose()?;
        if n == Some(0) {
            return Err(CliError::config("n must be at least 1"));
        }
        if matches!(source, DataSource::Csv(_)) && n.is_none() {
            return Err(CliError::config("n is required with a CSV population"));
        }
        let fixture = matches!(source, DataSource::Fixture(_));
        if fixture {
            if let Some(k) = ["reps", "budget", "workers"]
                .into_iter()
                .find(|k| raw.get(k).is_some())
            {
                return Err(CliError::config(format!(
                    "`{k}` configures the sampling oracle, which needs raw data; a fixture has none"
                )));
            }
        }
        let estimators = parse_estimators(raw.get("estimators").unwrap_or("all"))?;
        let (policy, overrides) = parse_params(raw.get("params").unwrap_or(""))?;
        let mode = match raw.get("mode").unwrap_or("both") {
            "as-published" => ModeSelection::AsPublished,
            "re-derived" => ModeSelection::ReDerived,
            "both" => ModeSelection::Both,
            other => {
                return Err(CliError::config(format!(
                    "mode must be as-published, re-derived or both, not `{other}`"
                )))
            }
        };
        let reps = raw
            .get("reps")
            .map(|v| parse_num("reps", v))
            .transpose()?
            .unwrap_or(100_000);
        if reps == 0 {
            return Err(CliError::config("reps must be at least 1"));
        }
        let seed = raw.get("seed").map(|v| parse_num("seed", v)).transpose()?;
        let budget = raw
            .get("budget")
            .map(|v| parse_num("budget", v))
            .transpose()?
            .unwrap_or(DEFAULT_BUDGET);
        let workers = raw
            .get("workers")
            .map(|v| parse_num::<usize>("workers", v))
            .transpose()?;
        if workers == Some(0) {
            return Err(CliError::config("workers must be at least 1"));
        }
        let symbols = parse_symbols(raw.get("symbols").unwrap_or(""))?;
        let cfg = Self {
            source,
            n,
            estimators,
            policy,
            overrides,
            mode,
            reps,
            seed,
            budget,
            workers,
            symbols,
            out: raw.get("out").map(PathBuf::from),
        };
        for f in &cfg.estimators {
            cfg.spec_for(*f)?;
        }
        Ok(cfg)
    }

    /// The explicit spec, or the template whose fixed inputs an optimizer keeps.
    pub fn spec_for(&self, family: Family) -> CliResult<EstimatorSpec> {
        let mut spec = family.default_spec();
        let empty = Vec::new();
        let given = self.overrides.get(&family).unwrap_or(&empty);
        let has = |name: &str| given.iter().any(|(k, _)| k == name);
        for (name, value) in given {
            if let ParamPolicy::Optimal(_) = self.policy {
                let fixed: &[&str] = match family {
                    Family::T3 => &["alpha"],
                    Family::T5 => &["delta1", "delta2", "c", "d"],
                    _ => &[],
                };
                if !fixed.contains(&name.as_str()) {
                    return Err(CliError::config(format!(
                        "{family}:{name} is optimized; only fixed inputs may be set under an optimal policy"
                    )));
                }
            }
            set_param(&mut spec, name, *value)?;
        }
        // complete a weight pair from one given member
        for (a, b) in [("lambda1", "lambda2"), ("w1", "w2"), ("k1", "k2")] {
            if has(a) && !has(b) {
                let v = param(&spec, a);
                set_param(&mut spec, b, 1.0 - v)?;
            } else if has(b) && !has(a) {
                let v = param(&spec, b);
                set_param(&mut spec, a, 1.0 - v)?;
            }
        }
        let problems = validate_spec(&spec);
        if !problems.is_empty() {
            return Err(CliError::config(format!(
                "{family}: {}",
                problems.join("; ")
            )));
        }
        Ok(spec)
    }
}

fn param(spec: &EstimatorSpec, name: &str) -> f64 {
    spec.params()
        .into_iter()
        .find(|(k, _)| *k == name)
        .map(|(_, v)| v)
        .unwrap_or(f64::NAN)
}

fn set_param(spec: &mut EstimatorSpec, name: &str, value: f64) -> CliResult<()> {
    let family = spec.family();
    let slot: Option<&mut f64> = match (spec, name) {
        (EstimatorSpec::T1 { alpha1, .. }, "alpha1") => Some(alpha1),
        (EstimatorSpec::T1 { alpha2, .. }, "alpha2") => Some(alpha2),
        (EstimatorSpec::T2 { lambda1, .. }, "lambda1") => Some(lambda1),
        (EstimatorSpec::T2 { lambda2, .. }, "lambda2") => Some(lambda2),
        (EstimatorSpec::T3 { w1, .. }, "w1") => Some(w1),
        (EstimatorSpec::T3 { w2, .. }, "w2") => Some(w2),
        (EstimatorSpec::T3 { alpha, .. }, "alpha") => Some(alpha),
        (EstimatorSpec::T4 { beta1, .. }, "beta1") => Some(beta1),
        (EstimatorSpec::T4 { beta2, .. }, "beta2") => Some(beta2),
        (EstimatorSpec::T5 { k1, .. }, "k1") => Some(k1),
        (EstimatorSpec::T5 { k2, .. }, "k2") => Some(k2),
        (EstimatorSpec::T5 { c, .. }, "c") => Some(c),
        (EstimatorSpec::T5 { d, .. }, "d") => Some(d),
        (EstimatorSpec::T5 { delta1, delta2, .. }, "delta1" | "delta2") => {
            if value.fract() != 0.0 || value.abs() > 1.0 {
                return Err(CliError::config(format!(
                    "{family}:{name} must be -1, 0 or 1"
                )));
            }
            *(if name == "delta1" { delta1 } else { delta2 }) = value as i32;
            None
        }
        _ => {
            return Err(CliError::config(format!(
                "{family} has no parameter `{name}`"
            )))
        }
    };
    if let Some(s) = slot {
        *s = value;
    }
    Ok(())
}

fn parse_estimators(v: &str) -> CliResult<Vec<Family>> {
    if v.trim() == "all" {
        return Ok(Family::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f = Family::parse(item)
            .ok_or_else(|| CliError::config(format!("unknown estimator `{item}`")))?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(CliError::config("select at least one estimator"));
    }
    out.sort();
    Ok(out)
}

type Overrides = BTreeMap<Family, Vec<(String, f64)>>;

fn parse_params(v: &str) -> CliResult<(ParamPolicy, Overrides)> {
    let mut policy = ParamPolicy::Explicit;
    let mut overrides: Overrides = BTreeMap::new();
    for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "explicit" => policy = ParamPolicy::Explicit,
            "published" => policy = ParamPolicy::Optimal(OptimumMethod::PublishedFormula),
            "quadratic" => policy = ParamPolicy::Optimal(OptimumMethod::QuadraticSolve),
            _ => {
                let (fam, assignments) = item
                    .split_once(':')
                    .ok_or_else(|| CliError::config(format!("params: cannot read `{item}`")))?;
                let family = Family::parse(fam).ok_or_else(|| {
                    CliError::config(format!("params: unknown estimator `{fam}`"))
                })?;
                for a in assignments
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                {
                    let (k, val) = a.split_once('=').ok_or_else(|| {
                        CliError::config(format!("params: expected name=value in `{a}`"))
                    })?;
                    let key = format!("params {family}:{}", k.trim());
                    let x: f64 = parse_num(&key, val)?;
                    if !x.is_finite() {
                        return Err(CliError::config(format!("{key} must be finite")));
                    }
                    overrides
                        .entry(family)
                        .or_default()
                        .push((k.trim().to_string(), x));
                }
            }
        }
    }
    Ok((policy, overrides))
}

fn parse_symbols(v: &str) -> CliResult<PublishedSymbols> {
    let mut s = PublishedSymbols::default();
    for a in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, val) = a
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("symbols: expected name=value in `{a}`")))?;
        let x: f64 = parse_num(&format!("symbols {}", k.trim()), val)?;
        let slot = match k.trim() {
            "A1" => &mut s.a1,
            "A2" => &mut s.a2,
            "theta" => &mut s.theta,
            "S" => &mut s.s,
            "M2" => &mut s.m2,
            "N2" => &mut s.n2,
            "alpha_product" => &mut s.alpha_product,
            other => {
                return Err(CliError::config(format!(
                    "symbols: unknown symbol `{other}`"
                )))
            }
        };
        *slot = Some(x);
    }
    Ok(s)
}
