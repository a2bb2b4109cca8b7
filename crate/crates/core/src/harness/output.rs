//! Analytic curves and CSV output.

use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::named;
use crate::rd::{optimize_vc_accurate, optimize_vc_with_g, wz_limit, Bound, Method, RDPoint};

use super::config::SimConfig;
use super::pairs::PairSpec;
use super::sim::{fine_g, table_for};

pub const SIMULATE_HEADER: &str = "rate,distortion,stderr,method,lattice,sigma_z_sq,N,seed";
pub const BOUND_HEADER: &str = "rate,distortion,method,lattice,sigma_z_sq,N";

/// Integers print without a fractional part, everything else in shortest
/// round-trip form.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn param(p: &RDPoint, key: &str) -> String {
    p.param(key).map(fmt_num).unwrap_or_default()
}

pub fn write_simulate_csv<W: Write>(mut w: W, points: &[RDPoint]) -> Result<()> {
    writeln!(w, "{SIMULATE_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_num(p.rate),
            fmt_num(p.distortion),
            param(p, "stderr"),
            p.method.as_str(),
            p.lattice,
            param(p, "sigma_z_sq"),
            param(p, "N"),
            param(p, "seed"),
        )?;
    }
    Ok(())
}

pub fn write_bound_csv<W: Write>(mut w: W, points: &[RDPoint]) -> Result<()> {
    writeln!(w, "{BOUND_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_num(p.rate),
            fmt_num(p.distortion),
            p.method.as_str(),
            p.lattice,
            param(p, "sigma_z_sq"),
            param(p, "N"),
        )?;
    }
    Ok(())
}

/// Optimized `D_n` of the lattice family `tag` (fine and coarse similar)
/// under each requested method, for every rate. `Accurate` needs an actual
/// pair, built from the rate with `config`'s construction.
pub fn bound_points(config: &SimConfig, methods: &[Method]) -> Result<Vec<RDPoint>> {
    let lat = named(&config.lattice)?;
    let n = lat.dim();
    let g = fine_g(&lat);
    let s2 = config.sigma_z_sq;
    if !(s2 > 0.0) {
        return Err(Error::Config("sigma_z_sq must be positive".into()));
    }
    let mut out = Vec::new();
    for &m in methods {
        for &rate in &config.rates {
            let mut nr = (n as f64 * rate).exp2();
            let d = match m {
                Method::WzLimit => wz_limit(rate, s2),
                Method::UpperTheta => optimize_vc_with_g(g, &lat, rate, s2, Bound::UpperTheta)?.d_n,
                Method::UpperQIntegral => optimize_vc_with_g(g, &lat, rate, s2, Bound::UpperQIntegral)?.d_n,
                Method::LowerPacking => optimize_vc_with_g(g, &lat, rate, s2, Bound::LowerPacking)?.d_n,
                Method::Accurate => {
                    let pair = PairSpec::for_rate(config, rate)?.build(config)?;
                    let table = table_for(&pair)?;
                    nr = pair.nesting_ratio() as f64;
                    optimize_vc_accurate(&pair, &table, g, s2)?.d_n
                }
                Method::MonteCarlo => return Err(Error::Config("monte-carlo is not an analytic method".into())),
            };
            out.push(
                RDPoint::new(rate, d, m, config.lattice.clone()).with("sigma_z_sq", s2).with("N", nr.round()),
            );
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let p = RDPoint::new(1.5, 0.00125, Method::WzLimit, "E8")
            .with("stderr", 0.0)
            .with("sigma_z_sq", 0.01)
            .with("N", 4096.0)
            .with("seed", 3.0);
        let mut buf = Vec::new();
        write_simulate_csv(&mut buf, &[p.clone()]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rate,distortion,stderr,method,lattice,sigma_z_sq,N,seed\n1.5,0.00125,0,wz-limit,E8,0.01,4096,3\n"
        );
        let mut buf = Vec::new();
        write_bound_csv(&mut buf, &[p]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "rate,distortion,method,lattice,sigma_z_sq,N\n1.5,0.00125,wz-limit,E8,0.01,4096\n"
        );
    }

    #[test]
    fn bounds_are_ordered() {
        let c = SimConfig { lattice: "D4".into(), rates: vec![1.0, 2.0], ..SimConfig::default() };
        let pts = bound_points(&c, &[Method::LowerPacking, Method::UpperQIntegral, Method::UpperTheta]).unwrap();
        assert_eq!(pts.len(), 6);
        for i in 0..2 {
            assert!(pts[i].distortion <= pts[i + 2].distortion);
            assert!(pts[i + 2].distortion <= pts[i + 4].distortion);
        }
        assert!(pts[1].distortion < pts[0].distortion);
    }
}
