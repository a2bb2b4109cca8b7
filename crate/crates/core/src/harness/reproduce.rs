//! Recipes that regenerate the figures as CSV files plus an SVG each.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lattice::named;
use crate::nesting::{nest_by_scale_rotate, planar_scatter};
use crate::rd::{optimize_vc_accurate, wz_limit, Method, RDPoint, UnimodularTheta};

use super::config::{PairKind, SimConfig};
use super::output::{bound_points, write_bound_csv, write_simulate_csv};
use super::sim::{fine_g, simulate, table_for};
use super::svg::{plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 7] =
        [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Figure::Fig1 => "Accurate channel component vs packing lower bound",
            Figure::Fig2 => "Upper bound on D_n for even unimodular lattices",
            Figure::Fig3 => "Quaternion nesting on Z4 and Z8",
            Figure::Fig4 => "A2 nested by sqrt(7) with rotation",
            Figure::Fig5 => "D3 and D3* nested pairs",
            Figure::Fig6 => "Leech lattice nested pairs",
            Figure::Fig7 => "Construction A ensembles, p = 17",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.to_ascii_lowercase();
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == t || f.as_str()[3..] == t)
            .ok_or_else(|| Error::Config(format!("unknown figure `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproOptions {
    pub out_dir: PathBuf,
    pub samples: usize,
    pub seed: u64,
    pub threads: usize,
    pub sigma_z_sq: f64,
    pub scale_samples: usize,
}

impl Default for ReproOptions {
    fn default() -> Self {
        ReproOptions {
            out_dir: PathBuf::from("figures"),
            samples: 10_000,
            seed: 1,
            threads: 0,
            sigma_z_sq: 0.01,
            scale_samples: 2000,
        }
    }
}

/// One curve of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub points: Vec<RDPoint>,
    pub simulated: bool,
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if c == '*' {
            out.push_str("dual");
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let k = ((hi - lo) / step).round() as usize;
    (0..=k).map(|i| lo + step * i as f64).collect()
}

fn wz_curve(rates: &[f64], s2: f64) -> Curve {
    let points = rates
        .iter()
        .map(|&r| RDPoint::new(r, wz_limit(r, s2), Method::WzLimit, "-").with("sigma_z_sq", s2))
        .collect();
    Curve { name: "Wyner-Ziv limit".into(), points, simulated: false }
}

fn analytic(name: &str, tag: &str, rates: Vec<f64>, s2: f64, m: Method) -> Result<Curve> {
    let c = SimConfig { lattice: tag.into(), rates, sigma_z_sq: s2, ..SimConfig::default() };
    Ok(Curve { name: name.into(), points: bound_points(&c, &[m])?, simulated: false })
}

fn accurate_curve(name: &str, tag: &str, beta_sq: &[f64], s2: f64) -> Result<Curve> {
    let fine = named(tag)?;
    let g = fine_g(&fine);
    let mut points = Vec::new();
    for &b in beta_sq {
        let pair = nest_by_scale_rotate(&fine, b)?;
        let table = table_for(&pair)?;
        let opt = optimize_vc_accurate(&pair, &table, g, s2)?;
        points.push(
            RDPoint::new(pair.rate(), opt.d_n, Method::Accurate, tag)
                .with("sigma_z_sq", s2)
                .with("N", pair.nesting_ratio() as f64),
        );
    }
    Ok(Curve { name: name.into(), points, simulated: false })
}

fn unimodular_curve(name: &str, theta: &UnimodularTheta, rates: &[f64], s2: f64) -> Result<Curve> {
    let n = theta.dim() as f64;
    let mut points = Vec::new();
    for &r in rates {
        let opt = theta.optimize(r, s2)?;
        points.push(
            RDPoint::new(r, opt.d_n, Method::UpperTheta, name)
                .with("sigma_z_sq", s2)
                .with("N", (n * r).exp2().round()),
        );
    }
    Ok(Curve { name: name.into(), points, simulated: false })
}

fn mc_curve(name: &str, o: &ReproOptions, base: SimConfig) -> Result<Curve> {
    let c = SimConfig {
        sigma_z_sq: o.sigma_z_sq,
        samples: o.samples,
        seed: o.seed,
        threads: o.threads,
        scale_samples: o.scale_samples,
        ..base
    };
    let points = simulate(&c)?.into_iter().filter(|p| p.method == Method::MonteCarlo).collect();
    Ok(Curve { name: name.into(), points, simulated: true })
}

fn mc_config(tag: &str, kind: PairKind, params: &[&str]) -> SimConfig {
    SimConfig {
        lattice: tag.into(),
        construction: kind,
        params: params.iter().map(|s| s.to_string()).collect(),
        ..SimConfig::default()
    }
}

/// The curves of `fig` (not for Fig4, which is a scatter plot).
pub fn figure_curves(fig: Figure, o: &ReproOptions) -> Result<Vec<Curve>> {
    let s2 = o.sigma_z_sq;
    Ok(match fig {
        Figure::Fig1 => {
            let rates = grid(1.0, 3.0, 0.25);
            vec![
                wz_curve(&rates, s2),
                analytic("E8 lower bound", "E8", rates.clone(), s2, Method::LowerPacking)?,
                accurate_curve("E8 accurate", "E8", &[4.0, 8.0, 16.0], s2)?,
                analytic("Z8 lower bound", "Z8", rates.clone(), s2, Method::LowerPacking)?,
                accurate_curve("Z8 accurate", "Z8", &[4.0, 16.0, 64.0], s2)?,
            ]
        }
        Figure::Fig2 => {
            let rates = grid(0.5, 4.0, 0.25);
            vec![
                wz_curve(&rates, s2),
                unimodular_curve("n=8 E8", &UnimodularTheta::extremal(8)?, &rates, s2)?,
                unimodular_curve("n=24 Leech", &UnimodularTheta::extremal(24)?, &rates, s2)?,
                unimodular_curve("n=80 extremal", &UnimodularTheta::extremal(80)?, &rates, s2)?,
                unimodular_curve("n=96 average", &UnimodularTheta::average(96)?, &rates, s2)?,
            ]
        }
        Figure::Fig3 => {
            let p = ["1:1:0:0", "1:1:1:1", "2:2:0:0", "4:0:0:0"];
            vec![
                wz_curve(&grid(0.5, 2.0, 0.25), s2),
                mc_curve("Z4 quaternion", o, mc_config("Z4", PairKind::Quaternion, &p))?,
                mc_curve("Z8 quaternion", o, mc_config("Z8", PairKind::Quaternion, &p))?,
            ]
        }
        Figure::Fig4 => return Err(Error::Config("fig4 is a scatter plot".into())),
        Figure::Fig5 => {
            let p = ["4", "9", "16"];
            vec![
                wz_curve(&grid(1.0, 2.0, 0.25), s2),
                mc_curve("D3", o, mc_config("D3", PairKind::ScaleRotate, &p))?,
                mc_curve("D3*", o, mc_config("D3*", PairKind::ScaleRotate, &p))?,
            ]
        }
        Figure::Fig6 => {
            let p = ["4", "9", "16", "25", "36"];
            vec![
                wz_curve(&grid(1.0, 2.75, 0.25), s2),
                analytic("Leech lower bound", "Leech", grid(1.0, 2.75, 0.25), s2, Method::LowerPacking)?,
                mc_curve("Leech", o, mc_config("Leech", PairKind::ScaleRotate, &p))?,
            ]
        }
        Figure::Fig7 => {
            let ca = |tag: &str, ks: &[&str]| mc_config(tag, PairKind::ConstructionA, ks);
            vec![
                wz_curve(&grid(1.0, 2.25, 0.25), s2),
                mc_curve("n=2 A2", o, ca("A2", &["1"]))?,
                mc_curve("n=4 D4", o, ca("D4", &["1", "2"]))?,
                mc_curve("n=8 E8", o, ca("E8", &["2", "4"]))?,
                mc_curve("n=24 Leech", o, ca("Leech", &["6", "12"]))?,
            ]
        }
    })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes one CSV per curve and a combined SVG into `o.out_dir`; returns
/// the paths written.
pub fn reproduce(fig: Figure, o: &ReproOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&o.out_dir)?;
    let stem = fig.as_str();
    let mut written = Vec::new();
    if fig == Figure::Fig4 {
        let pair = nest_by_scale_rotate(&named("A2")?, 7.0)?;
        let (fine, coarse) = planar_scatter(&pair, 6.0)?;
        let path = o.out_dir.join(format!("{stem}_scatter.csv"));
        let mut w = create(&path)?;
        use std::io::Write;
        writeln!(w, "set,x,y")?;
        for (set, pts) in [("fine", &fine), ("coarse", &coarse)] {
            for p in pts.iter() {
                writeln!(w, "{set},{},{}", p[0], p[1])?;
            }
        }
        w.flush()?;
        written.push(path);
        let series = vec![
            Series::scatter("fine A2", fine.iter().map(|p| (p[0], p[1])).collect()),
            Series::scatter("coarse sqrt(7) A2", coarse.iter().map(|p| (p[0], p[1])).collect()),
        ];
        let svg_path = o.out_dir.join(format!("{stem}.svg"));
        fs::write(&svg_path, plot(fig.title(), "x", "y", &series))?;
        written.push(svg_path);
        return Ok(written);
    }
    let curves = figure_curves(fig, o)?;
    let mut series = Vec::new();
    for c in &curves {
        let path = o.out_dir.join(format!("{stem}_{}.csv", slug(&c.name)));
        let mut w = create(&path)?;
        if c.simulated {
            write_simulate_csv(&mut w, &c.points)?;
        } else {
            write_bound_csv(&mut w, &c.points)?;
        }
        std::io::Write::flush(&mut w)?;
        written.push(path);
        series.push(Series::line(&c.name, c.points.iter().map(|p| (p.rate, 10.0 * p.distortion.log10())).collect()));
    }
    let svg_path = o.out_dir.join(format!("{stem}.svg"));
    fs::write(&svg_path, plot(fig.title(), "rate R (bits/dim)", "10 log10 D (dB)", &series))?;
    written.push(svg_path);
    Ok(written)
}
