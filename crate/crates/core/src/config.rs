//! Run configuration stored as flat `key = value` text.
//!
//! Keys are the field names below; `#` starts a comment. Parsing starts from
//! the defaults, so a file only needs the keys it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::descriptors::LandmarkParams;
use crate::elastic::EnergyParams;
use crate::error::{Error, Result};
use crate::fmap::MapWeights;
use crate::genetic::GaParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh_a: Option<PathBuf>,
    pub mesh_b: Option<PathBuf>,
    pub seed: u64,
    /// Scale meshes to unit area and center them before anything else.
    pub normalize: bool,

    pub ks: usize,
    pub kt: usize,

    pub d_eps: f64,
    pub d_eps_growth: f64,
    pub m_max: usize,
    pub d_adj: f64,
    pub centers_terms: usize,
    pub wks_scales: usize,
    pub wks_sigma: f64,
    pub eps_wks: f64,

    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub eta: f64,
    pub gamma: f64,

    pub e_max: f64,
    pub population: usize,
    pub max_attempts: usize,
    pub crossover: f64,
    pub growth: f64,
    pub shrinkage: f64,
    pub n_sh: usize,
    pub guidance: f64,
    pub patience: usize,
    pub max_generations: usize,
    pub convergence_threshold: f64,
    pub population_log_interval: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lm = LandmarkParams::default();
        let w = MapWeights::default();
        let e = EnergyParams::default();
        let ga = GaParams::default();
        Self {
            mesh_a: None,
            mesh_b: None,
            seed: 1,
            normalize: true,
            ks: 30,
            kt: 60,
            d_eps: lm.d_eps,
            d_eps_growth: lm.d_eps_growth,
            m_max: lm.m_max,
            d_adj: lm.d_adj,
            centers_terms: lm.centers_n,
            wks_scales: crate::descriptors::DEFAULT_ENERGY_SCALES,
            wks_sigma: crate::descriptors::DEFAULT_SIGMA_STEPS,
            eps_wks: 0.2,
            alpha: w.alpha,
            beta: w.beta,
            mu: e.mu,
            eta: e.eta,
            gamma: e.gamma,
            e_max: ga.e_max,
            population: ga.population,
            max_attempts: ga.max_attempts,
            crossover: ga.crossover,
            growth: ga.growth,
            shrinkage: ga.shrinkage,
            n_sh: ga.n_sh,
            guidance: ga.guidance,
            patience: ga.patience,
            max_generations: ga.max_generations,
            convergence_threshold: ga.convergence_threshold,
            population_log_interval: ga.population_log_interval,
        }
    }
}

fn as_map(cfg: &RunConfig) -> Map<String, Value> {
    match serde_json::to_value(cfg).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!("config is a struct"),
    }
}

impl RunConfig {
    pub fn keys() -> Vec<String> {
        as_map(&Self::default()).keys().cloned().collect()
    }

    /// Sets one field from its text form.
    pub fn set(&mut self, key: &str, text: &str) -> Result<()> {
        let mut map = as_map(self);
        let current = map
            .get(key)
            .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        let text = text.trim();
        let value = match current {
            Value::Bool(_) => Value::Bool(
                text.parse()
                    .map_err(|_| Error::Config(format!("`{key}` expects true or false, got `{text}`")))?,
            ),
            Value::Number(_) => {
                let v: Value = serde_json::from_str(text)
                    .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{text}`")))?;
                if !v.is_number() {
                    return Err(Error::Config(format!("`{key}` expects a number, got `{text}`")));
                }
                v
            }
            // paths, possibly unset
            _ if text.is_empty() || text == "none" => Value::Null,
            _ => Value::String(text.to_string()),
        };
        map.insert(key.to_string(), value);
        *self = serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Config(format!("`{key}`: {e}")))?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        as_map(self).get(key).map(|v| match v {
            Value::Null => "none".to_string(),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key, one per line, in alphabetical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in Self::keys() {
            out.push_str(&format!("{key} = {}\n", self.get(&key).expect("known key")));
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("crossover", self.crossover),
            ("growth", self.growth),
            ("shrinkage", self.shrinkage),
            ("guidance", self.guidance),
            ("gamma", self.gamma),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("`{name}` must lie in [0, 1], got {p}")));
            }
        }
        if self.ks == 0 || self.ks > self.kt {
            return Err(Error::Config(format!(
                "need 0 < ks <= kt, got ks = {} and kt = {}",
                self.ks, self.kt
            )));
        }
        if self.centers_terms + 1 > self.kt {
            return Err(Error::Config(format!(
                "centers_terms = {} needs kt > {}",
                self.centers_terms, self.centers_terms
            )));
        }
        if self.population == 0 || self.m_max == 0 || self.wks_scales < 2 {
            return Err(Error::Config("population, m_max and wks_scales must be positive".into()));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mu", self.mu),
            ("eta", self.eta),
            ("d_eps", self.d_eps),
            ("d_adj", self.d_adj),
            ("eps_wks", self.eps_wks),
            ("wks_sigma", self.wks_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("`{name}` must be finite and >= 0, got {v}")));
            }
        }
        if !(self.d_eps_growth > 1.0) {
            return Err(Error::Config("`d_eps_growth` must exceed 1".into()));
        }
        Ok(())
    }

    pub fn landmark_params(&self) -> LandmarkParams {
        LandmarkParams {
            d_eps: self.d_eps,
            m_max: self.m_max,
            d_eps_growth: self.d_eps_growth,
            d_adj: self.d_adj,
            centers_n: self.centers_terms,
        }
    }

    pub fn map_weights(&self) -> MapWeights {
        MapWeights {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn energy_params(&self) -> EnergyParams {
        EnergyParams {
            mu: self.mu,
            eta: self.eta,
            gamma: self.gamma,
            ..EnergyParams::default()
        }
    }

    pub fn ga_params(&self) -> GaParams {
        GaParams {
            population: self.population,
            max_attempts: self.max_attempts,
            e_max: self.e_max,
            crossover: self.crossover,
            growth: self.growth,
            shrinkage: self.shrinkage,
            n_sh: self.n_sh,
            guidance: self.guidance,
            patience: self.patience,
            max_generations: self.max_generations,
            convergence_threshold: self.convergence_threshold,
            population_log_interval: self.population_log_interval,
        }
    }
}
