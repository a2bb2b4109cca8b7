//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Exits 0 so the workspace test run stays green; set ACCEPTANCE_STRICT=1
//! to exit 1 when any criterion fails.

use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nestlat::harness::config::PairKind;
use nestlat::harness::pairs::PairSpec;
use nestlat::harness::sim::{fine_g, table_for};
use nestlat::harness::{simulate, SimConfig};
use nestlat::lattice::named;
use nestlat::modular::{
    discriminant_qexp, eisenstein_polynomials, eisenstein_qexp, jacobi_theta_qexp, EisensteinPolynomial, ThetaForm,
};
use nestlat::nesting::{coset_leaders, is_clean, nest_by_complex, nest_by_scale_rotate, ComplexBase};
use nestlat::qseries::QSeries;
use nestlat::rd::{
    dc_accurate, dc_lower_packing, dc_upper_q_integral, dc_upper_theta, gap_db, optimize_vc_accurate,
    optimize_vc_with_g, wz_limit, Bound, Method, UnimodularTheta,
};
use nestlat::{DecoderKind, NestedPair, RDPoint};

struct Report {
    lines: Vec<(String, bool)>,
}

impl Report {
    fn check(&mut self, name: &str, pass: bool, detail: String, t: Instant) {
        println!("{} {name}: {detail} [{:.1}s]", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        self.lines.push((name.to_string(), pass));
    }
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn pair_for(tag: &str, kind: PairKind, params: &str) -> NestedPair {
    let c = SimConfig { lattice: tag.into(), construction: kind, ..SimConfig::default() };
    PairSpec::parse(kind, params).and_then(|s| s.build(&c)).unwrap_or_else(|e| panic!("{tag} {params}: {e}"))
}

/// Pair scaled so that `V_F^{2/n} = v2`.
fn at_fine_scale(pair: &NestedPair, v2: f64) -> NestedPair {
    let n = pair.dim() as f64;
    let s = (v2.powf(n / 2.0) / pair.fine().volume()).powf(1.0 / n);
    pair.scaled(s).unwrap()
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let v = wz_limit(1.5, 0.01);
    r.check("1 wz limit", v == 0.00125, format!("wz_limit(1.5, 0.01) = {v}"), t);
}

fn criterion_2(r: &mut Report) {
    let t = Instant::now();
    let specs: &[(&str, PairKind, &[&str])] = &[
        ("Z2", PairKind::Complex, &["1:1", "2:1", "2:2", "3:2", "4:1"]),
        ("A2", PairKind::Complex, &["1:1", "2:1", "3:1", "3:2"]),
        ("Z4", PairKind::Quaternion, &["1:1:0:0", "1:1:1:1", "2:1:1:0", "2:1:1:1"]),
        ("D4", PairKind::ScaleRotate, &["2", "4", "8", "16"]),
        ("E8", PairKind::ScaleRotate, &["2", "4", "8"]),
    ];
    let mut pairs = 0;
    let mut bad = Vec::new();
    for (tag, kind, params) in specs {
        for p in *params {
            let pair = at_fine_scale(&pair_for(tag, *kind, p), 0.0025);
            let table = table_for(&pair).unwrap();
            let n = pair.dim();
            pairs += 1;
            for s2 in [0.01, 0.04] {
                let co = pair.coarse();
                let lo = dc_lower_packing(co, s2, n).unwrap();
                let acc = dc_accurate(&pair, &table, s2);
                let q = dc_upper_q_integral(co, s2, n).unwrap();
                let th = dc_upper_theta(co, s2, n).unwrap();
                match acc {
                    Ok(a) if lo <= a && a <= q && q <= th => {}
                    Ok(a) => bad.push(format!("{tag} {p} σ²={s2}: {lo:.4e} {a:.4e} {q:.4e} {th:.4e}")),
                    Err(e) => bad.push(format!("{tag} {p} σ²={s2}: {e}")),
                }
            }
        }
    }
    let detail = format!("{pairs} pairs × 2 noise levels, {} violations {}", bad.len(), bad.join("; "));
    r.check("2 bound ordering", pairs >= 20 && bad.is_empty(), detail, t);
}

fn criterion_3(r: &mut Report) {
    let t = Instant::now();
    let s2 = 0.01;
    let e8 = named("E8").unwrap();
    let g = fine_g(&e8);
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for b2 in ["4", "8", "16"] {
        let pair = pair_for("E8", PairKind::ScaleRotate, b2);
        let table = table_for(&pair).unwrap();
        let acc = optimize_vc_accurate(&pair, &table, g, s2).unwrap().d_n;
        let lo = optimize_vc_with_g(g, pair.coarse(), pair.rate(), s2, Bound::LowerPacking).unwrap().d_n;
        let d = db(acc / lo).abs();
        worst = worst.max(d);
        parts.push(format!("R={}: {d:.3} dB", pair.rate()));
    }
    r.check("3a E8 accurate vs packing", worst <= 0.2, format!("{} (limit 0.2 dB)", parts.join(", ")), t);

    let t = Instant::now();
    let z8 = named("Z8").unwrap();
    let pair = nest_by_scale_rotate(&z8, 64.0).unwrap();
    let table = table_for(&pair).unwrap();
    let g = fine_g(&z8);
    let acc = optimize_vc_accurate(&pair, &table, g, s2).unwrap().d_n;
    let lo = optimize_vc_with_g(g, pair.coarse(), 3.0, s2, Bound::LowerPacking).unwrap().d_n;
    let d = db(acc / lo);
    r.check("3b Z8 gap at R=3", d >= 0.3, format!("{d:.3} dB (need >= 0.3 dB)"), t);
}

fn simulate_gap(tag: &str, kind: PairKind, params: &str, samples: usize) -> Vec<RDPoint> {
    let c = SimConfig {
        lattice: tag.into(),
        construction: kind,
        params: vec![params.into()],
        samples,
        sigma_z_sq: 0.01,
        ..SimConfig::default()
    };
    simulate(&c).unwrap().into_iter().filter(|p| p.method == Method::MonteCarlo).collect()
}

fn criterion_4(r: &mut Report) {
    for (tag, target) in [("E8", 1.07), ("D4", 2.52)] {
        let t = Instant::now();
        let p = &simulate_gap(tag, PairKind::ScaleRotate, "8", 100_000)[0];
        let gap = p.gap_db(0.01);
        r.check(
            &format!("4 {tag} simulated gap"),
            (gap - target).abs() <= 0.3,
            format!("R={} gap {gap:.3} dB (target {target} ± 0.3)", p.rate),
            t,
        );
    }
}

fn criterion_5(r: &mut Report) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for b2 in ["4", "9", "16", "25", "36"] {
        let p = &simulate_gap("Leech", PairKind::ScaleRotate, b2, 10_000)[0];
        let gap = p.gap_db(0.01);
        ok &= p.rate < 3.0 && gap <= 1.58;
        parts.push(format!("R={:.3}: {gap:.3} dB", p.rate));
    }
    r.check("5 Leech simulated gap", ok, format!("{} (limit 1.58 dB)", parts.join(", ")), t);
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let mut parts = Vec::new();
    let mut ok = false;
    for k in ["6", "12"] {
        let p = &simulate_gap("Leech", PairKind::ConstructionA, k, 10_000)[0];
        let gap = p.gap_db(0.01);
        ok |= (gap - 1.87).abs() <= 0.4;
        parts.push(format!("k={k} R={:.3}: {gap:.3} dB", p.rate));
    }
    r.check("6 random ensemble n=24", ok, format!("{} (target 1.87 ± 0.4 dB at one point)", parts.join(", ")), t);
}

fn criterion_7(r: &mut Report) {
    let t = Instant::now();
    let order = 10;
    let e2 = eisenstein_qexp(2, order).unwrap();
    let e4 = eisenstein_qexp(4, order).unwrap();
    let e6 = eisenstein_qexp(6, order).unwrap();
    let k = |num: i64, den: i64| BigRational::new(BigInt::from(num), BigInt::from(den));
    let mut fails = Vec::new();
    if e2.q_derivative() != (&(&e2 * &e2) - &e4).scale(&k(1, 12)) {
        fails.push("dE2");
    }
    if e4.q_derivative() != (&(&e2 * &e4) - &e6).scale(&k(1, 3)) {
        fails.push("dE4");
    }
    if e6.q_derivative() != (&(&e2 * &e6) - &(&e4 * &e4)).scale(&k(1, 2)) {
        fails.push("dE6");
    }
    let delta = discriminant_qexp(order);
    let head = QSeries::from_integers(&[0, 1, -24, 252]);
    if delta.truncate(3) != head || delta != (&e4.pow(3) - &e6.pow(2)).scale(&k(1, 1728)) {
        fails.push("Δ");
    }
    // Theta series in u = q^{1/4}; E4 at the doubled nome is E4 in u^8.
    let u_order = 8 * order;
    let th: Vec<QSeries> = [2u8, 3, 4].iter().map(|&w| jacobi_theta_qexp(w, u_order).unwrap().pow(8)).collect();
    let sum = (&(&th[0] + &th[1]) + &th[2]).scale(&k(1, 2));
    if sum != e4.dilate(8) {
        fails.push("E4 theta identity");
    }
    if ThetaForm::leech().qexp(order).coeff(2) != k(196560, 1) {
        fails.push("Leech norm-4 shell");
    }
    if eisenstein_polynomials(4)[2] != EisensteinPolynomial::e4().pow(2) {
        fails.push("E8 = E4²");
    }
    let detail = if fails.is_empty() { format!("all identities hold to order {order}") } else { fails.join(", ") };
    r.check("7 modular identities", fails.is_empty(), detail, t);
}

fn criterion_8(r: &mut Report) {
    use nestlat::theta::{theta_direct_pair, theta_modular_pair};
    let t = Instant::now();
    let mut worst_val: f64 = 0.0;
    let mut worst_der: f64 = 0.0;
    for tag in ["E8", "Leech"] {
        let lat = named(tag).unwrap();
        for tau in [0.5, 1.0, 2.0] {
            let (a, da) = theta_direct_pair(&lat, tau, 1e-15).unwrap();
            let (b, db_) = theta_modular_pair(&lat, tau).unwrap().expect("modular path");
            worst_val = worst_val.max(((a - b) / b).abs());
            let h = 1e-3 * tau;
            // The modular path keeps Θ - 1 to full precision at large τ.
            let f = |x: f64| theta_modular_pair(&lat, x).unwrap().expect("modular path").0;
            let fd = (f(tau - 2.0 * h) - 8.0 * f(tau - h) + 8.0 * f(tau + h) - f(tau + 2.0 * h)) / (12.0 * h);
            worst_der = worst_der.max(((da - fd) / fd).abs()).max(((db_ - fd) / fd).abs());
        }
    }
    r.check(
        "8 theta cross-path",
        worst_val <= 1e-9 && worst_der <= 1e-6,
        format!("max rel diff {worst_val:.2e} (limit 1e-9), derivative vs FD {worst_der:.2e} (limit 1e-6)"),
        t,
    );
}

fn leaders_ok(pair: &NestedPair) -> bool {
    let n = pair.nesting_ratio();
    let table = coset_leaders(pair).unwrap();
    let mut seen: Vec<u64> = (0..n).map(|i| table.index_of(pair, &table.leader(pair, i).unwrap())).collect();
    seen.sort_unstable();
    seen.dedup();
    table.len() == n && seen.len() as u64 == n
}

fn criterion_9(r: &mut Report) {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    let mut leader_bad = Vec::new();
    let mut checked = 0;
    for (base, tag) in [(ComplexBase::Z2, "Z2"), (ComplexBase::A2, "A2")] {
        for a in -5i64..=5 {
            for b in -5i64..=5 {
                // The range applies to the nesting ratio, the norm of the multiplier.
                let m = match base {
                    ComplexBase::Z2 => a * a + b * b,
                    ComplexBase::A2 => a * a + a * b + b * b,
                };
                if !(2..=25).contains(&m) {
                    continue;
                }
                checked += 1;
                let expected = match base {
                    ComplexBase::Z2 => m % 2 == 1,
                    ComplexBase::A2 => a.gcd(&b) == 1,
                };
                match nest_by_complex(a, b, base) {
                    Ok(pair) => {
                        let clean = is_clean(&pair).unwrap();
                        if clean != expected {
                            mismatches.push(format!("{tag} ({a},{b}) N={} clean={clean}", pair.nesting_ratio()));
                        }
                        if !leaders_ok(&pair) {
                            leader_bad.push(format!("{tag} ({a},{b})"));
                        }
                    }
                    Err(e) => mismatches.push(format!("{tag} ({a},{b}): {e}")),
                }
            }
        }
    }
    r.check(
        "9a cleanness iff conditions",
        mismatches.is_empty(),
        format!("{checked} multipliers, {} mismatches {}", mismatches.len(), mismatches.join("; ")),
        t,
    );

    let t = Instant::now();
    let mut count = 0;
    let others: &[(&str, PairKind, &[&str])] = &[
        ("Z4", PairKind::Quaternion, &["1:1:0:0", "1:1:1:1", "2:1:1:0", "2:1:1:1", "2:2:0:0", "4:0:0:0"]),
        ("D4", PairKind::ScaleRotate, &["2", "4", "8", "16", "64"]),
        ("E8", PairKind::ScaleRotate, &["2", "4", "8"]),
        ("D3", PairKind::ScaleRotate, &["4", "9", "16"]),
        ("A2", PairKind::ScaleRotate, &["3", "7", "49"]),
    ];
    for (tag, kind, params) in others {
        for p in *params {
            let pair = pair_for(tag, *kind, p);
            if pair.nesting_ratio() > 4096 {
                continue;
            }
            count += 1;
            if !leaders_ok(&pair) {
                leader_bad.push(format!("{tag} {p}"));
            }
        }
    }
    r.check(
        "9b coset leader counts",
        leader_bad.is_empty(),
        format!("{} pairs with N <= 4096, {} bad {}", count + checked, leader_bad.len(), leader_bad.join("; ")),
        t,
    );
}

fn criterion_10(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut bad = Vec::new();
    let mut lattices = 0;
    for tag in ["Z1", "Z2", "Z8", "A2", "D3", "D3*", "D4", "E8"] {
        for scale in [1.0, 0.37] {
            let lat = named(tag).unwrap().scaled(scale).unwrap();
            if lat.decoder() == DecoderKind::GenericSphere {
                continue;
            }
            lattices += 1;
            let n = lat.dim();
            let mut mism = 0;
            for _ in 0..1000 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-4.0..4.0) * scale).collect();
                let f = lat.closest_point(&x).unwrap();
                let s = lat.closest_point_sphere(&x).unwrap();
                if f.integer_coords != s.integer_coords {
                    mism += 1;
                }
            }
            if mism > 0 {
                bad.push(format!("{tag}×{scale}: {mism}"));
            }
        }
    }
    r.check(
        "10 fast decoders vs sphere decoder",
        bad.is_empty() && lattices > 0,
        format!("{lattices} lattices × 1000 inputs, points differing {}", if bad.is_empty() { "none".into() } else { bad.join(", ") }),
        t,
    );
}

fn average_curve(r: &mut Report) {
    let t = Instant::now();
    let s2 = 0.01;
    let base = UnimodularTheta::average(8).unwrap();
    let big = UnimodularTheta::average(96).unwrap();
    let rates: Vec<f64> = (0..15).map(|i| 0.5 + 0.25 * i as f64).collect();
    let mut prev = f64::INFINITY;
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for &rate in &rates {
        let d96 = big.optimize(rate, s2).unwrap().d_n;
        let d8 = base.optimize(rate, s2).unwrap().d_n;
        ok &= d96 < prev && d96 < d8;
        worst_margin = worst_margin.min(gap_db(d8, d96));
        prev = d96;
    }
    r.check(
        "average theta n=96",
        ok,
        format!("monotone over R in [0.5, 4], below n=8 by at least {worst_margin:.3} dB"),
        t,
    );
}

fn main() {
    let start = Instant::now();
    let mut r = Report { lines: Vec::new() };
    criterion_1(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_10(&mut r);
    criterion_9(&mut r);
    average_curve(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    criterion_4(&mut r);
    criterion_5(&mut r);
    criterion_6(&mut r);
    let passed = r.lines.iter().filter(|l| l.1).count();
    println!("{passed}/{} checks passed in {:.0}s", r.lines.len(), start.elapsed().as_secs_f64());
    if passed < r.lines.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
