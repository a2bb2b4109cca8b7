//! Building the nested pair for one operating point.

use crate::error::{Error, Result};
use crate::lattice::{named, Lattice};
use crate::nesting::{
    nest_by_complex, nest_by_quaternion_blocks, nest_by_scale_rotate, nest_construction_a, ComplexBase, NestedPair,
};

use super::config::{PairKind, SimConfig};

/// Construction parameters of one point.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSpec {
    ScaleRotate { beta_sq: f64 },
    Complex { a: i64, b: i64 },
    Quaternion { a: i64, b: i64, c: i64, d: i64 },
    ConstructionA { k: usize },
}

fn ints(s: &str, count: usize) -> Result<Vec<i64>> {
    let v: Vec<i64> = s
        .split(':')
        .map(|t| t.trim().parse::<i64>().map_err(|_| Error::Config(format!("bad parameter `{s}`"))))
        .collect::<Result<_>>()?;
    if v.len() != count {
        return Err(Error::Config(format!("parameter `{s}` needs {count} fields")));
    }
    Ok(v)
}

impl PairSpec {
    pub fn parse(kind: PairKind, s: &str) -> Result<Self> {
        Ok(match kind {
            PairKind::ScaleRotate => {
                PairSpec::ScaleRotate { beta_sq: s.parse().map_err(|_| Error::Config(format!("bad beta_sq `{s}`")))? }
            }
            PairKind::Complex => {
                let v = ints(s, 2)?;
                PairSpec::Complex { a: v[0], b: v[1] }
            }
            PairKind::Quaternion => {
                let v = ints(s, 4)?;
                PairSpec::Quaternion { a: v[0], b: v[1], c: v[2], d: v[3] }
            }
            PairKind::ConstructionA => {
                let v = ints(s, 1)?;
                if v[0] < 1 {
                    return Err(Error::Config(format!("bad code dimension `{s}`")));
                }
                PairSpec::ConstructionA { k: v[0] as usize }
            }
        })
    }

    /// Parameters whose pair has rate `rate` (bits per dimension) for the
    /// lattice in `config`. Complex and quaternion multipliers are the
    /// lexicographically largest `(a, b, …)` with `a ≥ b ≥ … ≥ 0` of the
    /// required norm.
    pub fn for_rate(config: &SimConfig, rate: f64) -> Result<Self> {
        let norm = 4f64.powf(rate);
        let int_norm = || -> Result<i64> {
            let r = norm.round();
            if (norm - r).abs() > 1e-6 * norm {
                return Err(Error::Config(format!("rate {rate} needs a multiplier of norm {norm}, not an integer")));
            }
            Ok(r as i64)
        };
        Ok(match config.construction {
            PairKind::ScaleRotate => PairSpec::ScaleRotate { beta_sq: norm },
            PairKind::Complex => {
                let target = int_norm()?;
                let base = complex_base(&config.lattice)?;
                let mut found = None;
                'outer: for a in (0..=target).rev() {
                    for b in (0..=a).rev() {
                        let nm = match base {
                            ComplexBase::Z2 => a * a + b * b,
                            ComplexBase::A2 => a * a + a * b + b * b,
                        };
                        if nm == target {
                            found = Some((a, b));
                            break 'outer;
                        }
                    }
                }
                let (a, b) = found.ok_or_else(|| {
                    Error::NoSimilarSublattice(format!("no multiplier of norm {target} for {}", config.lattice))
                })?;
                PairSpec::Complex { a, b }
            }
            PairKind::Quaternion => {
                let target = int_norm()?;
                let r = (target as f64).sqrt() as i64 + 1;
                for a in (0..=r).rev() {
                    for b in (0..=a).rev() {
                        for c in (0..=b).rev() {
                            for d in (0..=c).rev() {
                                if a * a + b * b + c * c + d * d == target {
                                    return Ok(PairSpec::Quaternion { a, b, c, d });
                                }
                            }
                        }
                    }
                }
                return Err(Error::NoSimilarSublattice(format!("no quaternion of norm {target}")));
            }
            PairKind::ConstructionA => {
                let n = named(&config.lattice)?.dim() as f64;
                let k = (rate * n / (config.prime as f64).log2()).round().max(1.0) as usize;
                PairSpec::ConstructionA { k }
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            PairSpec::ScaleRotate { beta_sq } => format!("beta_sq={beta_sq}"),
            PairSpec::Complex { a, b } => format!("xi={a}:{b}"),
            PairSpec::Quaternion { a, b, c, d } => format!("xi={a}:{b}:{c}:{d}"),
            PairSpec::ConstructionA { k } => format!("k={k}"),
        }
    }

    pub fn build(&self, config: &SimConfig) -> Result<NestedPair> {
        let fine = named(&config.lattice)?;
        match *self {
            PairSpec::ScaleRotate { beta_sq } => nest_by_scale_rotate(&fine, beta_sq),
            PairSpec::Complex { a, b } => nest_by_complex(a, b, complex_base(&config.lattice)?),
            PairSpec::Quaternion { a, b, c, d } => {
                let blocks = quaternion_blocks(&fine)?;
                nest_by_quaternion_blocks(a, b, c, d, blocks)
            }
            PairSpec::ConstructionA { k } => {
                let n = fine.dim();
                nest_construction_a(n, k, config.prime, config.code_seed, &fine)
            }
        }
    }
}

fn complex_base(tag: &str) -> Result<ComplexBase> {
    match tag {
        "Z2" => Ok(ComplexBase::Z2),
        "A2" => Ok(ComplexBase::A2),
        _ => Err(Error::Config(format!("complex construction needs Z2 or A2, got `{tag}`"))),
    }
}

fn quaternion_blocks(fine: &Lattice) -> Result<usize> {
    let n = fine.dim();
    let zn = fine.similarity().map(|s| s.family == crate::lattice::Family::Zn && s.norm_scale == 1.0);
    if n % 4 != 0 || zn != Some(true) {
        return Err(Error::Config(format!("quaternion construction needs Z4k, got `{}`", fine.name())));
    }
    Ok(n / 4)
}

/// All point specs of a configuration, in order.
pub fn point_specs(config: &SimConfig) -> Result<Vec<PairSpec>> {
    if config.params.is_empty() {
        config.rates.iter().map(|&r| PairSpec::for_rate(config, r)).collect()
    } else {
        config.params.iter().map(|p| PairSpec::parse(config.construction, p)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lattice: &str, kind: PairKind) -> SimConfig {
        SimConfig { lattice: lattice.into(), construction: kind, ..SimConfig::default() }
    }

    #[test]
    fn rates_map_to_parameters() {
        let c = cfg("E8", PairKind::ScaleRotate);
        assert_eq!(PairSpec::for_rate(&c, 1.5).unwrap(), PairSpec::ScaleRotate { beta_sq: 8.0 });
        let c = cfg("Z2", PairKind::Complex);
        assert_eq!(PairSpec::for_rate(&c, 1.5).unwrap(), PairSpec::Complex { a: 2, b: 2 });
        let c = cfg("A2", PairKind::Complex);
        assert_eq!(PairSpec::for_rate(&c, 0.5 * 7f64.log2()).unwrap(), PairSpec::Complex { a: 2, b: 1 });
        let c = cfg("Z4", PairKind::Quaternion);
        assert_eq!(PairSpec::for_rate(&c, 1.0).unwrap(), PairSpec::Quaternion { a: 2, b: 0, c: 0, d: 0 });
        let c = cfg("D4", PairKind::ConstructionA);
        assert_eq!(PairSpec::for_rate(&c, 2.0).unwrap(), PairSpec::ConstructionA { k: 2 });
        assert!(PairSpec::for_rate(&cfg("Z2", PairKind::Complex), 0.3).is_err());
    }

    #[test]
    fn built_pairs_have_the_rate() {
        for (tag, kind, p, rate) in [
            ("D4", PairKind::ScaleRotate, "4", 1.0),
            ("Z2", PairKind::Complex, "2:2", 1.5),
            ("Z8", PairKind::Quaternion, "1:1:0:0", 0.5),
        ] {
            let c = cfg(tag, kind);
            let pair = PairSpec::parse(kind, p).unwrap().build(&c).unwrap();
            assert!((pair.rate() - rate).abs() < 1e-12, "{tag}: {}", pair.rate());
        }
        let c = cfg("D4", PairKind::ConstructionA);
        let pair = PairSpec::parse(PairKind::ConstructionA, "1").unwrap().build(&c).unwrap();
        assert_eq!(pair.nesting_ratio(), 17);
        assert!(PairSpec::parse(PairKind::Quaternion, "1:2").is_err());
        assert!(PairSpec::parse(PairKind::Quaternion, "1:0:0:0").unwrap().build(&cfg("D4", PairKind::Quaternion)).is_err());
    }
}
