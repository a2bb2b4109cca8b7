use nestlat::harness::sim::{analytic_scale, fine_g, table_for, PairSim, Trial};
use nestlat::harness::{simulate, write_simulate_csv, PairKind, SimConfig};
use nestlat::nesting::{nest_by_complex, nest_by_scale_rotate, ComplexBase, NestedPair};
use nestlat::rd::{dc_accurate, optimize_vc_with_g, Bound, NoiseModel};
use nestlat::{named, Method};

const S2: f64 = 0.01;

/// Pair at `factor` times its analytic scale, which must be in high
/// resolution.
fn high_res_pair(tag: &str, beta_sq: f64, factor: f64) -> (NestedPair, f64) {
    let fine = named(tag).unwrap();
    let g = fine_g(&fine);
    let pair = nest_by_scale_rotate(&fine, beta_sq).unwrap();
    let pair = pair.scaled(factor * analytic_scale(&pair, g, S2).unwrap()).unwrap();
    assert!(nestlat::rd::high_resolution(&pair, S2), "{tag}");
    (pair, g)
}

#[test]
fn monte_carlo_matches_decomposition_in_high_resolution() {
    // Shrunk below the optimum so that coset errors are frequent enough to
    // be seen in 10^5 samples.
    for (tag, beta_sq) in [("Z2", 1024.0), ("A2", 256.0), ("D4", 256.0)] {
        let (pair, g) = high_res_pair(tag, beta_sq, 0.6);
        let table = table_for(&pair).unwrap();
        let n = pair.dim() as f64;
        let d_s = g * pair.fine().volume().powf(2.0 / n);
        let d_c = dc_accurate(&pair, &table, S2).unwrap();
        let st = Trial { pair: &pair, table: &table, noise: NoiseModel::default(), mmse: None }.run(100_000, 11, 4);
        let z = (st.mean - d_s - d_c) / st.stderr();
        assert!(z.abs() < 3.0, "{tag}: mc {} model {} + {} (z = {z:.2})", st.mean, d_s, d_c);
    }
}

#[test]
fn monte_carlo_between_bounds_in_high_resolution() {
    for (tag, beta_sq) in [("A2", 256.0), ("D4", 256.0)] {
        let (pair, g) = high_res_pair(tag, beta_sq, 1.0);
        let table = table_for(&pair).unwrap();
        let sim = PairSim { pair: &pair, table: &table, g, noise: NoiseModel::default(), mmse: false, threads: 4 };
        let st = sim.run_at(1.0, 100_000, 5).unwrap();
        let r = pair.rate();
        let lo = optimize_vc_with_g(g, pair.coarse(), r, S2, Bound::LowerPacking).unwrap().d_n;
        let up = optimize_vc_with_g(g, pair.coarse(), r, S2, Bound::UpperTheta).unwrap().d_n;
        let tol = 3.0 * st.stderr();
        assert!(st.mean >= lo - tol && st.mean <= up + tol, "{tag}: {lo} <= {} <= {up}", st.mean);
    }
}

fn small_config() -> SimConfig {
    SimConfig {
        lattice: "A2".into(),
        construction: PairKind::ScaleRotate,
        params: vec!["4".into(), "7".into()],
        samples: 3000,
        scale_samples: 1000,
        scale_points: 5,
        seed: 42,
        ..SimConfig::default()
    }
}

#[test]
fn identical_seeds_give_identical_csv() {
    let csv = |c: &SimConfig| {
        let mut buf = Vec::new();
        write_simulate_csv(&mut buf, &simulate(c).unwrap()).unwrap();
        buf
    };
    let mut c = small_config();
    c.threads = 1;
    let a = csv(&c);
    c.threads = 3;
    assert_eq!(a, csv(&c));
    c.seed = 43;
    assert_ne!(a, csv(&c));
}

#[test]
fn stderr_shrinks_as_inverse_square_root() {
    let pair = nest_by_complex(2, 1, ComplexBase::A2).unwrap();
    let g = fine_g(pair.fine());
    let pair = pair.scaled(analytic_scale(&pair, g, S2).unwrap()).unwrap();
    let table = table_for(&pair).unwrap();
    let t = Trial { pair: &pair, table: &table, noise: NoiseModel::default(), mmse: None };
    let se: Vec<f64> = [1_000, 10_000, 100_000].iter().map(|&m| t.run(m, 3, 4).stderr()).collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.25, "{se:?}");
    }
}

#[test]
fn mmse_never_hurts() {
    for (tag, beta_sq) in [("A2", 7.0), ("D4", 4.0), ("E8", 8.0), ("Z2", 16.0)] {
        let pair = nest_by_scale_rotate(&named(tag).unwrap(), beta_sq).unwrap();
        let table = table_for(&pair).unwrap();
        let g = fine_g(pair.fine());
        let s0 = analytic_scale(&pair, g, S2).unwrap();
        for f in [0.6, 1.0, 1.3] {
            let mk = |mmse| PairSim { pair: &pair, table: &table, g, noise: NoiseModel::default(), mmse, threads: 2 };
            let plain = mk(false).run_at(s0 * f, 5000, 9).unwrap().mean;
            let blended = mk(true).run_at(s0 * f, 5000, 9).unwrap().mean;
            assert!(blended <= plain, "{tag} x{f}: {blended} > {plain}");
        }
    }
}

#[test]
fn vanishing_noise_leaves_the_source_component() {
    let pair = nest_by_scale_rotate(&named("D4").unwrap(), 4.0).unwrap().scaled(0.05).unwrap();
    let table = table_for(&pair).unwrap();
    let noise = NoiseModel::new(1e-8, 1.0).unwrap();
    let st = Trial { pair: &pair, table: &table, noise, mmse: None }.run(20_000, 2, 2);
    let d_s = fine_g(pair.fine()) * pair.fine().volume().sqrt();
    assert!((st.mean - d_s).abs() < 4.0 * st.stderr(), "{} vs {d_s}", st.mean);
}

#[test]
fn construction_errors_name_the_parameters() {
    let c = SimConfig { lattice: "E8".into(), params: vec!["3".into()], samples: 1000, ..SimConfig::default() };
    let e = simulate(&c).unwrap_err();
    assert!(!e.is_config());
    assert!(e.to_string().contains("beta_sq=3"), "{e}");
    let pts = simulate(&small_config()).unwrap();
    assert_eq!(pts.iter().filter(|p| p.method == Method::WzLimit).count(), 2);
}
