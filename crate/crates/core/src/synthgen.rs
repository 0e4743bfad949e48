//! Synthetic corpora with a known globalization shock.
//!
//! Countries are named `AA`, `AB`, `AC`, ... in index order. For every year
//! and every home country (in that order) the generator emits `base_volume`
//! movies. Each movie always carries its home region and then, visiting the
//! other countries in index order, adds each one with probability
//! `cross_prob`. Movies homed in the shock country use
//! `min(1, cross_prob * shock_factor)` from `shock_year` onward, so the shock
//! is a persistent step. Draws come from a ChaCha8 stream seeded with
//! `seed`, one Bernoulli draw per (movie, other country).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::MovieRecord;
use crate::region::Region;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Invalid(String),
    #[error("config file: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_countries: usize,
    pub year_from: i32,
    pub year_to: i32,
    pub base_volume: usize,
    pub cross_prob: f64,
    pub shock_year: Option<i32>,
    pub shock_country: Option<Region>,
    pub shock_factor: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_countries: 5,
            year_from: 1980,
            year_to: 2019,
            base_volume: 200,
            cross_prob: 0.05,
            shock_year: None,
            shock_country: None,
            shock_factor: 1.0,
            seed: 0,
        }
    }
}

/// Code of the `index`-th synthetic country: `AA`, `AB`, ..., `AZ`, `BA`, ...
pub fn country_code(index: usize) -> Region {
    let hi = (b'A' + (index / 26 % 26) as u8) as char;
    let lo = (b'A' + (index % 26) as u8) as char;
    let mut code = String::new();
    if index >= 26 * 26 {
        code.push_str(&(index / (26 * 26)).to_string());
    }
    code.push(hi);
    code.push(lo);
    Region::parse(&code).expect("alphanumeric code")
}

impl SynthConfig {
    pub fn countries(&self) -> Vec<Region> {
        (0..self.n_countries).map(country_code).collect()
    }

    /// Shock country, defaulting to the first country when only a year is set.
    pub fn effective_shock_country(&self) -> Option<Region> {
        self.shock_year?;
        Some(self.shock_country.clone().unwrap_or_else(|| country_code(0)))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        if self.n_countries < 2 {
            return bad(format!("n_countries must be >= 2, got {}", self.n_countries));
        }
        if self.base_volume < 1 {
            return bad("base_volume must be >= 1".into());
        }
        if self.year_from > self.year_to {
            return bad(format!("empty year range {}..={}", self.year_from, self.year_to));
        }
        if !(0.0..=1.0).contains(&self.cross_prob) {
            return bad(format!("cross_prob must lie in [0, 1], got {}", self.cross_prob));
        }
        if !self.shock_factor.is_finite() || self.shock_factor < 1.0 {
            return bad(format!("shock_factor must be >= 1, got {}", self.shock_factor));
        }
        if let Some(y) = self.shock_year {
            if !(self.year_from..=self.year_to).contains(&y) {
                return bad(format!("shock_year {y} outside the year range"));
            }
        }
        if let Some(c) = &self.shock_country {
            if !self.countries().contains(c) {
                return bad(format!("shock_country {c} is not one of the generated countries"));
            }
        }
        Ok(())
    }

    /// Reads flat `key = value` lines whose keys are the config field names.
    /// `years` is either `[from, to]` or a string `"from..to"`.
    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| SynthError::Config(e.to_string()))?;
        let mut cfg = SynthConfig::default();
        cfg.apply_table(&table)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, SynthError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn apply_table(&mut self, table: &toml::Table) -> Result<(), SynthError> {
        let err = |key: &str, want: &str| SynthError::Config(format!("{key}: expected {want}"));
        let int = |key: &str, v: &toml::Value| v.as_integer().ok_or_else(|| err(key, "an integer"));
        let real = |key: &str, v: &toml::Value| {
            v.as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .ok_or_else(|| err(key, "a number"))
        };
        let non_negative = |key: &str, i: i64| {
            usize::try_from(i).map_err(|_| err(key, "a non-negative integer"))
        };
        for (key, v) in table {
            match key.as_str() {
                "n_countries" => self.n_countries = non_negative(key, int(key, v)?)?,
                "base_volume" => self.base_volume = non_negative(key, int(key, v)?)?,
                "cross_prob" => self.cross_prob = real(key, v)?,
                "shock_factor" => self.shock_factor = real(key, v)?,
                "shock_year" => self.shock_year = Some(int(key, v)? as i32),
                "seed" => {
                    self.seed = u64::try_from(int(key, v)?).map_err(|_| err(key, "a non-negative integer"))?
                }
                "shock_country" => {
                    let s = v.as_str().ok_or_else(|| err(key, "a string"))?;
                    self.shock_country =
                        Some(Region::parse(s).map_err(|e| SynthError::Config(e.to_string()))?);
                }
                "years" => {
                    let (from, to) = parse_years_value(v).ok_or_else(|| {
                        err(key, "[from, to] or \"from..to\"")
                    })?;
                    self.year_from = from;
                    self.year_to = to;
                }
                other => return Err(SynthError::Config(format!("unknown key {other:?}"))),
            }
        }
        Ok(())
    }

    /// Flat key -> value view, used for run manifests.
    pub fn to_options(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("n_countries".into(), self.n_countries.to_string());
        m.insert("years".into(), format!("{}..{}", self.year_from, self.year_to));
        m.insert("base_volume".into(), self.base_volume.to_string());
        m.insert("cross_prob".into(), self.cross_prob.to_string());
        m.insert(
            "shock_year".into(),
            self.shock_year.map(|y| y.to_string()).unwrap_or_default(),
        );
        m.insert(
            "shock_country".into(),
            self.effective_shock_country()
                .map(|c| c.to_string())
                .unwrap_or_default(),
        );
        m.insert("shock_factor".into(), self.shock_factor.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m
    }
}

/// Parses `"1980..2019"`, `"1980-2019"` or `[1980, 2019]`.
pub fn parse_years_value(v: &toml::Value) -> Option<(i32, i32)> {
    match v {
        toml::Value::String(s) => parse_years_str(s),
        toml::Value::Array(a) if a.len() == 2 => {
            Some((a[0].as_integer()? as i32, a[1].as_integer()? as i32))
        }
        _ => None,
    }
}

pub fn parse_years_str(s: &str) -> Option<(i32, i32)> {
    let (a, b) = s.split_once("..").or_else(|| s.split_once('-'))?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Generates a corpus; identical configs give identical output.
pub fn generate(config: &SynthConfig) -> Result<Vec<MovieRecord>, SynthError> {
    config.validate()?;
    let countries = config.countries();
    let shock = config
        .effective_shock_country()
        .and_then(|c| countries.iter().position(|x| *x == c));
    let shocked_prob = (config.cross_prob * config.shock_factor).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(
        (config.year_to - config.year_from + 1) as usize * countries.len() * config.base_volume,
    );
    for year in config.year_from..=config.year_to {
        for (home, home_code) in countries.iter().enumerate() {
            let shocked = shock == Some(home) && config.shock_year.is_some_and(|y| year >= y);
            let p = if shocked { shocked_prob } else { config.cross_prob };
            for k in 0..config.base_volume {
                let mut regions = BTreeSet::new();
                regions.insert(home_code.clone());
                for (other, code) in countries.iter().enumerate() {
                    if other != home && rng.gen_bool(p) {
                        regions.insert(code.clone());
                    }
                }
                out.push(MovieRecord {
                    movie_id: format!("s{year}-{home_code}-{k}"),
                    year,
                    regions,
                });
            }
        }
    }
    Ok(out)
}
