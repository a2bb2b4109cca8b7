//! Sharded Monte Carlo simulation of the Wyner-Ziv codec.

use crate::codec::{mmse_blend, mmse_weight, Codec};
use crate::decode::sq_dist;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::nesting::{coset_leaders_capped, CosetTable, NestedPair};
use crate::normal::NormalSampler;
use crate::rd::{optimize_vc_with_g, wz_limit, Bound, Method, NoiseModel, RDPoint};
use crate::voronoi::normalized_second_moment;

use super::config::{SimConfig, SHARD_BLOCKS};
use super::pairs::point_specs;

/// Largest nesting ratio for which the coset table is stored explicitly.
pub const EXPLICIT_TABLE_CAP: u64 = 1 << 16;
/// Samples used to estimate `G` of lattices without a tabulated value.
pub const G_SAMPLES: usize = 20_000;
/// Range of the scale search relative to the analytic optimum.
pub const SCALE_RANGE: (f64, f64) = (0.5, 1.3);
/// Offset of the seed used by the scale search.
pub const SEARCH_SEED_OFFSET: u64 = 1 << 40;

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl McStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Pooled statistics of two disjoint sample sets.
    pub fn merge(&self, o: &McStats) -> McStats {
        if self.count == 0 {
            return *o;
        }
        if o.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, o.count as f64);
        let n = na + nb;
        let d = o.mean - self.mean;
        McStats { count: self.count + o.count, mean: self.mean + d * nb / n, m2: self.m2 + o.m2 + d * d * na * nb / n }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// One codec run: the pair (already scaled) and the decoder settings.
pub struct Trial<'a> {
    pub pair: &'a NestedPair,
    pub table: &'a CosetTable,
    pub noise: NoiseModel,
    /// Weight of the MMSE blend, or `None` for the plain decoder.
    pub mmse: Option<f64>,
}

impl Trial<'_> {
    /// Per-dimension squared error of one shard of `blocks` blocks.
    pub fn shard(&self, blocks: usize, seed: u64) -> McStats {
        let n = self.pair.dim();
        let mut rng = NormalSampler::new(seed);
        let mut codec = Codec::new(self.pair, self.table);
        let (sy, sz) = (self.noise.sigma_y_sq.sqrt(), self.noise.sigma_z_sq.sqrt());
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut x = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut st = McStats::default();
        for _ in 0..blocks {
            rng.fill(&mut y, sy);
            rng.fill(&mut z, sz);
            for i in 0..n {
                x[i] = y[i] + z[i];
            }
            let idx = codec.encode(&x);
            codec.decode_into(idx, &y, &mut out).expect("encoder index is in range");
            if let Some(w) = self.mmse {
                mmse_blend(&mut out, &y, w);
            }
            st.push(sq_dist(&x, &out) / n as f64);
        }
        st
    }

    /// `samples` blocks in shards of [`SHARD_BLOCKS`], shard `i` seeded with
    /// `seed + i`. The result does not depend on `threads`.
    pub fn run(&self, samples: usize, seed: u64, threads: usize) -> McStats {
        let shards = samples.div_ceil(SHARD_BLOCKS);
        let size = |i: usize| SHARD_BLOCKS.min(samples - i * SHARD_BLOCKS);
        let threads = threads.clamp(1, shards.max(1));
        let mut parts = vec![McStats::default(); shards];
        if threads == 1 {
            for (i, p) in parts.iter_mut().enumerate() {
                *p = self.shard(size(i), seed.wrapping_add(i as u64));
            }
        } else {
            let per = shards.div_ceil(threads);
            std::thread::scope(|s| {
                for (c, chunk) in parts.chunks_mut(per).enumerate() {
                    s.spawn(move || {
                        for (j, p) in chunk.iter_mut().enumerate() {
                            let i = c * per + j;
                            *p = self.shard(size(i), seed.wrapping_add(i as u64));
                        }
                    });
                }
            });
        }
        parts.iter().fold(McStats::default(), |acc, p| acc.merge(p))
    }
}

/// Explicit table for small `N`, implicit otherwise.
pub fn table_for(pair: &NestedPair) -> Result<CosetTable> {
    if pair.nesting_ratio() <= EXPLICIT_TABLE_CAP {
        coset_leaders_capped(pair, EXPLICIT_TABLE_CAP)
    } else {
        Ok(CosetTable::implicit(pair))
    }
}

/// `G(Λ_F)`: tabulated or estimated.
pub fn fine_g(fine: &Lattice) -> f64 {
    normalized_second_moment(fine, G_SAMPLES, 1)
}

/// Scale of `pair` that minimizes the Q-integral bound on `D_n`.
pub fn analytic_scale(pair: &NestedPair, g: f64, sigma_z_sq: f64) -> Result<f64> {
    let opt = optimize_vc_with_g(g, pair.coarse(), pair.rate(), sigma_z_sq, Bound::UpperQIntegral)?;
    Ok((opt.v_c / pair.coarse().volume()).powf(1.0 / pair.dim() as f64))
}

/// Result of simulating one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    pub rate: f64,
    pub scale: f64,
    pub stats: McStats,
    pub d_s: f64,
}

/// Everything needed to run a pair at a given scale.
pub struct PairSim<'a> {
    pub pair: &'a NestedPair,
    pub table: &'a CosetTable,
    pub g: f64,
    pub noise: NoiseModel,
    pub mmse: bool,
    pub threads: usize,
}

impl PairSim<'_> {
    /// `D_S = G·V_F^{2/n}` at scale `s`.
    pub fn d_s(&self, s: f64) -> f64 {
        let n = self.pair.dim() as f64;
        self.g * (self.pair.fine().volume().powf(2.0 / n)) * s * s
    }

    pub fn run_at(&self, s: f64, samples: usize, seed: u64) -> Result<McStats> {
        let pair = self.pair.scaled(s)?;
        let table = self.table.scaled(s);
        let w = self.mmse.then(|| mmse_weight(self.noise.sigma_z_sq, self.d_s(s)));
        Ok(Trial { pair: &pair, table: &table, noise: self.noise, mmse: w }.run(samples, seed, self.threads))
    }

    /// Best of `points` log-spaced scales in `SCALE_RANGE` around `s0`,
    /// all run on the same samples, refined by a parabola through the
    /// best grid point and its neighbours.
    pub fn search_scale(&self, s0: f64, points: usize, samples: usize, seed: u64) -> Result<f64> {
        let (lo, hi) = ((s0 * SCALE_RANGE.0).ln(), (s0 * SCALE_RANGE.1).ln());
        let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
        let vals = grid
            .iter()
            .map(|&l| self.run_at(l.exp(), samples, seed).map(|s| s.mean))
            .collect::<Result<Vec<f64>>>()?;
        let i = (0..points).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
        if i == 0 || i == points - 1 {
            return Ok(grid[i].exp());
        }
        let h = grid[1] - grid[0];
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        let den = a - 2.0 * b + c;
        let off = if den > 0.0 { (0.5 * h * (a - c) / den).clamp(-h, h) } else { 0.0 };
        Ok((grid[i] + off).exp())
    }
}

/// Simulates every point of `config`: one MonteCarlo point per pair
/// followed by the matching WzLimit points.
pub fn simulate(config: &SimConfig) -> Result<Vec<RDPoint>> {
    simulate_with_progress(config, |_| {})
}

pub fn simulate_with_progress<F: FnMut(&RDPoint)>(config: &SimConfig, mut progress: F) -> Result<Vec<RDPoint>> {
    config.validate()?;
    let noise = NoiseModel::new(config.sigma_z_sq, config.sigma_y_sq)?;
    let specs = point_specs(config)?;
    let mut mc = Vec::new();
    for spec in &specs {
        let pair = spec.build(config).map_err(|e| match e {
            e if e.is_config() => e,
            e => Error::InvalidNesting(format!("{} with {}: {e}", config.lattice, spec.label())),
        })?;
        let run = simulate_pair(&pair, config, noise)?;
        let p = RDPoint::new(run.rate, run.stats.mean, Method::MonteCarlo, config.lattice.clone())
            .with("stderr", run.stats.stderr())
            .with("sigma_z_sq", config.sigma_z_sq)
            .with("N", pair.nesting_ratio() as f64)
            .with("seed", config.seed as f64)
            .with("scale", run.scale)
            .with("d_s", run.d_s);
        progress(&p);
        mc.push(p);
    }
    let wz: Vec<RDPoint> = mc
        .iter()
        .map(|p| {
            RDPoint::new(p.rate, wz_limit(p.rate, config.sigma_z_sq), Method::WzLimit, config.lattice.clone())
                .with("stderr", 0.0)
                .with("sigma_z_sq", config.sigma_z_sq)
                .with("N", p.params["N"])
                .with("seed", config.seed as f64)
        })
        .collect();
    mc.extend(wz);
    Ok(mc)
}

/// Scale search followed by the final run with the base seed.
pub fn simulate_pair(pair: &NestedPair, config: &SimConfig, noise: NoiseModel) -> Result<PairRun> {
    let table = table_for(pair)?;
    let g = fine_g(pair.fine());
    let sim = PairSim { pair, table: &table, g, noise, mmse: config.mmse, threads: config.thread_count() };
    let s0 = analytic_scale(pair, g, noise.sigma_z_sq)?;
    let scale = if config.scale_samples > 0 {
        let seed = config.seed.wrapping_add(SEARCH_SEED_OFFSET);
        sim.search_scale(s0, config.scale_points, config.scale_samples, seed)?
    } else {
        s0
    };
    let stats = sim.run_at(scale, config.samples, config.seed)?;
    Ok(PairRun { rate: pair.rate(), scale, stats, d_s: sim.d_s(scale) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::PairKind;

    #[test]
    fn merge_matches_direct() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 * 0.01).collect();
        let mut all = McStats::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = McStats::default();
        let mut b = McStats::default();
        xs[..10].iter().for_each(|&x| a.push(x));
        xs[10..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.count, all.count);
        assert!((m.mean - all.mean).abs() < 1e-14);
        assert!((m.variance() - all.variance()).abs() < 1e-13);
    }

    #[test]
    fn threads_do_not_change_results() {
        let pair = crate::nesting::nest_by_scale_rotate(&crate::lattice::named("A2").unwrap(), 4.0).unwrap();
        let pair = pair.scaled(0.1).unwrap();
        let table = table_for(&pair).unwrap();
        let t = Trial { pair: &pair, table: &table, noise: NoiseModel::default(), mmse: Some(0.9) };
        let a = t.run(3500, 7, 1);
        let b = t.run(3500, 7, 3);
        assert_eq!(a, b);
        assert_eq!(a.count, 3500);
    }

    #[test]
    fn simulate_appends_limits() {
        let c = SimConfig {
            lattice: "Z2".into(),
            construction: PairKind::Complex,
            rates: vec![1.0],
            samples: 1000,
            scale_samples: 1000,
            scale_points: 3,
            threads: 1,
            ..SimConfig::default()
        };
        let pts = simulate(&c).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].method, Method::MonteCarlo);
        assert_eq!(pts[1].method, Method::WzLimit);
        assert!(pts[0].distortion > pts[1].distortion);
        assert_eq!(pts[0].param("N"), Some(4.0));
    }
}
