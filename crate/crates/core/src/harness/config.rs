//! Simulation configuration in a flat `key = value` format.

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Blocks per Monte Carlo shard.
pub const SHARD_BLOCKS: usize = 1000;
pub const MIN_SAMPLES: usize = 1000;

/// How the nested pair for each rate point is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    ScaleRotate,
    Complex,
    Quaternion,
    ConstructionA,
}

impl PairKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PairKind::ScaleRotate => "scale-rotate",
            PairKind::Complex => "complex",
            PairKind::Quaternion => "quaternion",
            PairKind::ConstructionA => "construction-a",
        }
    }
}

impl FromStr for PairKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "scale-rotate" => PairKind::ScaleRotate,
            "complex" => PairKind::Complex,
            "quaternion" => PairKind::Quaternion,
            "construction-a" => PairKind::ConstructionA,
            _ => return Err(Error::Config(format!("unknown construction `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Fine lattice tag; for Construction A the transform `G`.
    pub lattice: String,
    pub construction: PairKind,
    /// Target rates, mapped to construction parameters.
    pub rates: Vec<f64>,
    /// Explicit construction parameters, one entry per point: `β²` for
    /// scale-rotate, `a:b` for complex, `a:b:c:d` for quaternion and `k` for
    /// Construction A.
    pub params: Vec<String>,
    pub sigma_z_sq: f64,
    pub sigma_y_sq: f64,
    /// Number of `n`-dimensional blocks.
    pub samples: usize,
    pub seed: u64,
    pub mmse: bool,
    pub output: Option<PathBuf>,
    /// Seed of the Construction A generator matrix.
    pub code_seed: u64,
    pub prime: u64,
    /// Blocks per point of the scale search; 0 uses the analytic scale.
    pub scale_samples: usize,
    /// Scale factors tried around the analytic optimum.
    pub scale_points: usize,
    pub threads: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            lattice: "E8".into(),
            construction: PairKind::ScaleRotate,
            rates: Vec::new(),
            params: Vec::new(),
            sigma_z_sq: 0.01,
            sigma_y_sq: 1.0,
            samples: 10_000,
            seed: 1,
            mmse: true,
            output: None,
            code_seed: 1,
            prime: 17,
            scale_samples: 2000,
            scale_points: 9,
            threads: 0,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value `{v}` for `{key}`"))),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split([',', ' ']).map(str::trim).filter(|s| !s.is_empty())
}

impl SimConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = SimConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "lattice" => self.lattice = v.to_string(),
            "construction" => self.construction = v.parse()?,
            "rates" => self.rates = split_list(v).map(|s| parse_num(key, s)).collect::<Result<_>>()?,
            "params" => self.params = split_list(v).map(String::from).collect(),
            "sigma_z_sq" => self.sigma_z_sq = parse_num(key, v)?,
            "sigma_y_sq" => self.sigma_y_sq = parse_num(key, v)?,
            "samples" => self.samples = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "mmse" => self.mmse = parse_bool(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "code_seed" => self.code_seed = parse_num(key, v)?,
            "prime" => self.prime = parse_num(key, v)?,
            "scale_samples" => self.scale_samples = parse_num(key, v)?,
            "scale_points" => self.scale_points = parse_num(key, v)?,
            "threads" => self.threads = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Config(format!("samples must be at least {MIN_SAMPLES}, got {}", self.samples)));
        }
        if !(self.sigma_z_sq > 0.0) || !(self.sigma_y_sq > 0.0) {
            return Err(Error::Config("variances must be positive".into()));
        }
        if self.rates.is_empty() && self.params.is_empty() {
            return Err(Error::Config("no rates or params given".into()));
        }
        if !self.rates.is_empty() && !self.params.is_empty() {
            return Err(Error::Config("give rates or params, not both".into()));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::Config(format!("rates must be positive, got {r}")));
        }
        if self.scale_samples > 0 && self.scale_points < 3 {
            return Err(Error::Config("scale_points must be at least 3".into()));
        }
        Ok(())
    }

    pub fn thread_count(&self) -> usize {
        if self.threads > 0 {
            self.threads
        } else {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let mut c = SimConfig::parse("lattice = D4  # fine\nrates = 1, 1.5\nmmse=off\n\nsamples=2000").unwrap();
        assert_eq!(c.lattice, "D4");
        assert_eq!(c.rates, vec![1.0, 1.5]);
        assert!(!c.mmse);
        assert_eq!(c.sigma_z_sq, 0.01);
        c.set("samples", "5000").unwrap();
        assert_eq!(c.samples, 5000);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SimConfig::parse("nope = 1").unwrap_err().is_config());
        assert!(SimConfig::parse("samples").is_err());
        let c = SimConfig::parse("rates = 1\nsamples = 10").unwrap();
        assert!(c.validate().is_err());
        let c = SimConfig::parse("rates = 1\nsigma_z_sq = 0").unwrap();
        assert!(c.validate().is_err());
        assert!(SimConfig::parse("construction = magic").is_err());
    }
}
