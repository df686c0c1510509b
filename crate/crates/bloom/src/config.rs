//! Versioned JSON run configuration.
//!
//! Every field has a default, so `{}` is a valid file. Unknown keys are collected
//! over the whole document and reported together. Environment variables named
//! `BLOOM_<SECTION>__<KEY>` override single values, e.g. `BLOOM_PARAMS__P_H=0`
//! or `BLOOM_SIM1D__NX=41`; key matching is case-insensitive unless that is
//! ambiguous (`Q_m` vs `Q_M`), in which case the exact spelling is required.

use std::path::{Path, PathBuf};

use bloom_core::fem::{Options2D, Stabilization};
use bloom_core::sensitivity::{Factor, Scenario1D, SobolProblem};
use bloom_core::{HomState, ModelParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const ENV_PREFIX: &str = "BLOOM_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    /// Required by `sobol`; the other subcommands are deterministic.
    pub seed: Option<u64>,
    pub params: ModelParams,
    pub wind: WindConfig,
    pub ode: OdeConfig,
    pub stability: StabilityConfig,
    pub sim1d: Sim1dConfig,
    pub sim2d: Sim2dConfig,
    pub sobol: SobolConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            version: SCHEMA_VERSION,
            seed: None,
            params: ModelParams::default(),
            wind: WindConfig::default(),
            ode: OdeConfig::default(),
            stability: StabilityConfig::default(),
            sim1d: Sim1dConfig::default(),
            sim2d: Sim2dConfig::default(),
            sobol: SobolConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindMode {
    #[default]
    None,
    Constant,
    Oscillatory,
    Series,
}

/// Wind forcing shared by `sim1d`, `sim2d` and `sobol`. The 1D solver uses the
/// east component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub mode: WindMode,
    /// Constant wind (m/s).
    pub velocity_mps: [f64; 2],
    /// Oscillatory wind amplitude (m/s), period (days) and phase (rad).
    pub amplitude_mps: f64,
    pub period_days: f64,
    pub phase: f64,
    /// CSV with `timestamp,u_mps,v_mps`, relative to the config file.
    pub file: Option<PathBuf>,
    /// Average the records per day before interpolating.
    pub daily: bool,
    /// Day zero for ISO-8601 timestamps, e.g. `2023-05-01T00:00:00`.
    /// Defaults to midnight of the first record.
    pub start: Option<String>,
}

impl Default for WindConfig {
    fn default() -> Self {
        WindConfig {
            mode: WindMode::None,
            velocity_mps: [0.0, 0.0],
            amplitude_mps: 1.0,
            period_days: 10.0,
            phase: 0.0,
            file: None,
            daily: true,
            start: None,
        }
    }
}

/// Initial state as biomass, quota and dissolved phosphorus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    #[serde(rename = "B")]
    pub biomass: f64,
    #[serde(rename = "Q")]
    pub quota: f64,
    #[serde(rename = "P")]
    pub dissolved: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState { biomass: 1.0, quota: 0.02, dissolved: 0.2 }
    }
}

impl InitialState {
    pub fn to_state(self) -> HomState {
        HomState::from_quota(self.biomass, self.quota, self.dissolved)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    pub initial: InitialState,
    pub t_end: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { initial: InitialState::default(), t_end: 4000.0, rtol: 1e-8, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumChoice {
    /// Positive equilibrium when `R0 > 1`, extinction otherwise.
    #[default]
    Auto,
    Extinction,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub equilibrium: EquilibriumChoice,
    pub n_max: u32,
    /// Scalar wind along the mode direction (m/day).
    pub wind: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { equilibrium: EquilibriumChoice::Auto, n_max: 30, wind: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim1dConfig {
    /// Domain length (m).
    pub length: f64,
    pub nx: usize,
    pub t_end: f64,
    /// Sampling interval of the CSV output (days).
    pub output_every: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Sim1dConfig {
    fn default() -> Self {
        Sim1dConfig { length: 1000.0, nx: 101, t_end: 1000.0, output_every: 10.0, rtol: 1e-6, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim2dConfig {
    /// gmsh file, relative to the config file. Without it a synthetic lake is meshed.
    pub mesh: Option<PathBuf>,
    /// Synthetic lake radius (m) and number of node rings.
    pub lake_radius: f64,
    pub lake_rings: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: f64,
    pub tol: f64,
    pub eps: f64,
    pub stabilization: Stabilization,
}

impl Default for Sim2dConfig {
    fn default() -> Self {
        let o = Options2D::default();
        Sim2dConfig {
            mesh: None,
            lake_radius: 1000.0,
            lake_rings: 8,
            dt: o.dt,
            t_end: 365.0,
            output_every: 5.0,
            tol: o.tol,
            eps: o.eps,
            stabilization: o.stabilization,
        }
    }
}

impl Sim2dConfig {
    pub fn options(&self) -> Options2D {
        Options2D { dt: self.dt, tol: self.tol, eps: self.eps, stabilization: self.stabilization, ..Options2D::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolConfig {
    /// Base samples; the design has `n (d + 2)` rows.
    pub n: usize,
    pub factors: Vec<Factor>,
    pub length: f64,
    pub nx: usize,
    pub horizon: f64,
    pub bin_days: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for SobolConfig {
    fn default() -> Self {
        let s = Scenario1D::default();
        SobolConfig {
            n: 256,
            factors: SobolProblem::lake().factors,
            length: s.length,
            nx: s.nx,
            horizon: s.horizon,
            bin_days: s.bin_days,
            rtol: s.rtol,
            atol: s.atol,
        }
    }
}

impl SobolConfig {
    pub fn problem(&self) -> SobolProblem {
        SobolProblem { factors: self.factors.clone() }
    }

    pub fn scenario(&self) -> Scenario1D {
        Scenario1D {
            length: self.length,
            nx: self.nx,
            horizon: self.horizon,
            bin_days: self.bin_days,
            rtol: self.rtol,
            atol: self.atol,
        }
    }
}

impl Config {
    /// Reads `path`, applies `BLOOM_` overrides from `env` and validates.
    /// Relative file paths inside the config are resolved against its directory.
    pub fn load<I, K, V>(path: &Path, env: I) -> Result<Config>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::from_json(&text, env)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(dir);
        Ok(cfg)
    }

    pub fn from_json<I, K, V>(text: &str, env: I) -> Result<Config>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut value: Value = serde_json::from_str(text)?;
        if !value.is_object() {
            return Err(Error::Config("top level must be a JSON object".into()));
        }
        let schema = serde_json::to_value(Config::default())?;
        let mut unknown = Vec::new();
        collect_unknown(&value, &schema, "", &mut unknown);
        apply_env(&mut value, &schema, env, &mut unknown)?;
        if !unknown.is_empty() {
            return Err(Error::UnknownKeys(unknown));
        }
        let cfg: Config = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults with environment overrides only.
    pub fn from_env<I, K, V>(env: I) -> Result<Config>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        Config::from_json("{}", env)
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        for p in [&mut self.wind.file, &mut self.sim2d.mesh].into_iter().flatten() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported version {}, expected {SCHEMA_VERSION}", self.version)));
        }
        self.params.validate()?;
        if self.wind.mode == WindMode::Series && self.wind.file.is_none() {
            return Err(Error::Config("wind.mode = \"series\" needs wind.file".into()));
        }
        self.sobol.problem().validate_for(&self.params)?;
        Ok(())
    }

    /// Canonical serialization: struct field order, shortest round-trip floats.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of [`Config::canonical_json`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn collect_unknown(value: &Value, schema: &Value, prefix: &str, out: &mut Vec<String>) {
    match (value, schema) {
        (Value::Object(v), Value::Object(s)) => {
            for (k, child) in v {
                match s.get(k) {
                    Some(sc) => collect_unknown(child, sc, &join(prefix, k), out),
                    None => out.push(join(prefix, k)),
                }
            }
        }
        // Array elements are checked against the first default element.
        (Value::Array(v), Value::Array(s)) => {
            if let Some(sc) = s.first() {
                for (i, child) in v.iter().enumerate() {
                    collect_unknown(child, sc, &format!("{prefix}[{i}]"), out);
                }
            }
        }
        _ => {}
    }
}

/// Resolves an environment key against the schema: exact match first, then a
/// unique case-insensitive match.
fn match_key(schema: &Map<String, Value>, key: &str) -> Option<String> {
    if schema.contains_key(key) {
        return Some(key.to_string());
    }
    let mut hits = schema.keys().filter(|k| k.eq_ignore_ascii_case(key));
    match (hits.next(), hits.next()) {
        (Some(k), None) => Some(k.clone()),
        _ => None,
    }
}

fn apply_env<I, K, V>(value: &mut Value, schema: &Value, env: I, unknown: &mut Vec<String>) -> Result<()>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut vars: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.as_ref().starts_with(ENV_PREFIX))
        .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
        .collect();
    vars.sort();
    'vars: for (name, raw) in vars {
        let mut keys = Vec::new();
        let mut sc = schema;
        for seg in name[ENV_PREFIX.len()..].split("__") {
            let Some(key) = sc.as_object().and_then(|m| match_key(m, seg)) else {
                unknown.push(name.clone());
                continue 'vars;
            };
            sc = &sc[&key];
            keys.push(key);
        }
        let not_object = || Error::Config(format!("{name}: parent is not an object"));
        let (last, parents) = keys.split_last().expect("split yields at least one segment");
        let mut node = &mut *value;
        for k in parents {
            node = node.as_object_mut().ok_or_else(not_object)?.entry(k.clone()).or_insert_with(|| Value::Object(Map::new()));
        }
        // Numbers, booleans and null parse as JSON; anything else is a string.
        let parsed = serde_json::from_str(&raw).unwrap_or(Value::String(raw.clone()));
        node.as_object_mut().ok_or_else(not_object)?.insert(last.clone(), parsed);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO_ENV: [(&str, &str); 0] = [];

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(Config::from_json("{}", NO_ENV).unwrap(), Config::default());
    }

    #[test]
    fn default_round_trips() {
        let cfg = Config::default();
        let back = Config::from_json(&cfg.canonical_json(), NO_ENV).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let text = r#"{"params": {"P_h": 0.1, "Ph": 1, "gamma": 2}, "sim1d": {"nodes": 3}, "extra": true,
                       "sobol": {"factors": [{"name": "K_bg", "lower": 0.1, "upper": 1, "dist": "u"}]}}"#;
        match Config::from_json(text, NO_ENV) {
            Err(Error::UnknownKeys(keys)) => {
                assert_eq!(keys, ["extra", "params.Ph", "params.gamma", "sim1d.nodes", "sobol.factors[0].dist"]);
            }
            other => panic!("expected unknown keys, got {other:?}"),
        }
    }

    #[test]
    fn env_overrides_reach_nested_values() {
        let env = [("BLOOM_PARAMS__P_H", "0"), ("BLOOM_SIM1D__NX", "41"), ("BLOOM_SEED", "7"), ("HOME", "/root")];
        let cfg = Config::from_json(r#"{"params": {"P_h": 2}}"#, env).unwrap();
        assert_eq!(cfg.params.p_h, 0.0);
        assert_eq!(cfg.sim1d.nx, 41);
        assert_eq!(cfg.seed, Some(7));
    }

    #[test]
    fn env_strings_and_enums() {
        let env = [("BLOOM_SIM2D__MESH", "lake.msh"), ("BLOOM_SIM2D__STABILIZATION", "discrete_upwind")];
        let mut cfg = Config::from_env(env).unwrap();
        cfg.resolve_paths(Path::new("/data"));
        assert_eq!(cfg.sim2d.mesh.as_deref(), Some(Path::new("/data/lake.msh")));
        assert_eq!(cfg.sim2d.stabilization, Stabilization::DiscreteUpwind);
    }

    #[test]
    fn ambiguous_env_key_needs_exact_case() {
        assert!(matches!(Config::from_env([("BLOOM_PARAMS__Q_m", "0.005")]), Ok(c) if c.params.q_min == 0.005));
        assert!(matches!(Config::from_env([("BLOOM_PARAMS__Q_M", "0.05")]), Ok(c) if c.params.q_max == 0.05));
        assert!(matches!(Config::from_env([("BLOOM_PARAMS__q_m", "0.05")]), Err(Error::UnknownKeys(k)) if k == ["BLOOM_PARAMS__q_m"]));
    }

    #[test]
    fn unknown_env_keys_are_reported() {
        let env = [("BLOOM_SIM1D__WIDTH", "3"), ("BLOOM_NOPE", "1")];
        match Config::from_env(env) {
            Err(Error::UnknownKeys(keys)) => assert_eq!(keys, ["BLOOM_NOPE", "BLOOM_SIM1D__WIDTH"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(Config::from_json(r#"{"version": 2}"#, NO_ENV).is_err());
        assert!(Config::from_json(r#"{"params": {"r": -1}}"#, NO_ENV).is_err());
        assert!(Config::from_json(r#"{"wind": {"mode": "series"}}"#, NO_ENV).is_err());
        assert!(Config::from_json(r#"{"wind": {"mode": "gale"}}"#, NO_ENV).is_err());
        assert!(Config::from_json("[]", NO_ENV).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = a.clone();
        b.params.p_h = 0.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
