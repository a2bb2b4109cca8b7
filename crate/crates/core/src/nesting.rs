//! Nested lattice pairs: constructions, verification, coset leaders and
//! cleanness.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::enumerate::{min_norm, visit_points};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticePoint};
use crate::linalg::{hermite_lower, rank_mod_p, round_to_integer, CosetIndexer};
use crate::modular::family_theta_qexp;

/// Default cap on the size of an explicit coset table.
pub const DEFAULT_LEADER_CAP: u64 = 1 << 20;

/// Rounding tolerance when recovering the relation matrix of a construction.
const CONSTRUCT_TOL: f64 = 1e-6;
/// Tolerance when verifying an existing pair.
const VERIFY_TOL: f64 = 1e-9;
/// Redraws allowed for a rank-deficient Construction-A generator.
const MAX_REDRAWS: usize = 32;
/// Point budget for rotation searches.
const ROTATION_SEARCH_CAP: usize = 2_000_000;

/// Base lattice for [`nest_by_complex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexBase {
    Z2,
    A2,
}

/// How a pair was built.
#[derive(Debug, Clone, PartialEq)]
pub enum Construction {
    ComplexMul { a: i64, b: i64, base: ComplexBase },
    QuaternionMul { a: i64, b: i64, c: i64, d: i64, blocks: usize },
    ScaleRotate { beta_sq: f64, angle: f64 },
    ConstructionA { n: usize, k: usize, p: u64, seed: u64, rank: usize },
    Explicit,
}

impl Construction {
    pub fn tag(&self) -> &'static str {
        match self {
            Construction::ComplexMul { .. } => "complex",
            Construction::QuaternionMul { .. } => "quaternion",
            Construction::ScaleRotate { .. } => "scale-rotate",
            Construction::ConstructionA { .. } => "construction-a",
            Construction::Explicit => "explicit",
        }
    }

    fn to_line(&self) -> String {
        match self {
            Construction::ComplexMul { a, b, base } => {
                let base = match base {
                    ComplexBase::Z2 => "Z2",
                    ComplexBase::A2 => "A2",
                };
                format!("complex {a} {b} {base}")
            }
            Construction::QuaternionMul { a, b, c, d, blocks } => format!("quaternion {a} {b} {c} {d} {blocks}"),
            Construction::ScaleRotate { beta_sq, angle } => format!("scale-rotate {beta_sq:?} {angle:?}"),
            Construction::ConstructionA { n, k, p, seed, rank } => format!("construction-a {n} {k} {p} {seed} {rank}"),
            Construction::Explicit => "explicit".to_string(),
        }
    }

    fn from_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Parse(format!("bad construction line `{line}`"));
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad());
        let uint = |s: &str| s.parse::<u64>().map_err(|_| bad());
        Ok(match f.as_slice() {
            ["complex", a, b, base] => Construction::ComplexMul {
                a: int(a)?,
                b: int(b)?,
                base: match *base {
                    "Z2" => ComplexBase::Z2,
                    "A2" => ComplexBase::A2,
                    _ => return Err(bad()),
                },
            },
            ["quaternion", a, b, c, d, blocks] => Construction::QuaternionMul {
                a: int(a)?,
                b: int(b)?,
                c: int(c)?,
                d: int(d)?,
                blocks: uint(blocks)? as usize,
            },
            ["scale-rotate", beta_sq, angle] => Construction::ScaleRotate {
                beta_sq: beta_sq.parse().map_err(|_| bad())?,
                angle: angle.parse().map_err(|_| bad())?,
            },
            ["construction-a", n, k, p, seed, rank] => Construction::ConstructionA {
                n: uint(n)? as usize,
                k: uint(k)? as usize,
                p: uint(p)?,
                seed: uint(seed)?,
                rank: uint(rank)? as usize,
            },
            ["explicit"] => Construction::Explicit,
            _ => return Err(bad()),
        })
    }
}

/// Fine lattice, coarse sublattice and the integer relation `M_C = M_F·P`.
#[derive(Debug, Clone)]
pub struct NestedPair {
    fine: Lattice,
    coarse: Lattice,
    relation: DMatrix<i64>,
    nesting_ratio: u64,
    construction: Construction,
    indexer: CosetIndexer,
}

impl NestedPair {
    /// Builds a pair from two lattices, recovering `P = M_F⁻¹ M_C`.
    pub fn new(fine: Lattice, coarse: Lattice, construction: Construction) -> Result<Self> {
        let relation = relation_matrix(&fine, &coarse, CONSTRUCT_TOL)?;
        Self::with_relation(fine, coarse, relation, construction)
    }

    fn with_relation(fine: Lattice, coarse: Lattice, relation: DMatrix<i64>, construction: Construction) -> Result<Self> {
        let indexer = CosetIndexer::new(&relation)
            .map_err(|e| Error::InvalidNesting(format!("relation matrix is singular: {e}")))?;
        let nesting_ratio = indexer.count();
        if nesting_ratio < 2 {
            return Err(Error::InvalidNesting(format!(
                "nesting ratio {nesting_ratio} is not a proper sublattice"
            )));
        }
        Ok(NestedPair { fine, coarse, relation, nesting_ratio, construction, indexer })
    }

    pub fn fine(&self) -> &Lattice {
        &self.fine
    }

    pub fn coarse(&self) -> &Lattice {
        &self.coarse
    }

    pub fn relation(&self) -> &DMatrix<i64> {
        &self.relation
    }

    pub fn nesting_ratio(&self) -> u64 {
        self.nesting_ratio
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn dim(&self) -> usize {
        self.fine.dim()
    }

    pub fn indexer(&self) -> &CosetIndexer {
        &self.indexer
    }

    /// `(1/n) log₂ N` bits per dimension.
    pub fn rate(&self) -> f64 {
        (self.nesting_ratio as f64).log2() / self.dim() as f64
    }

    /// The same pair with both lattices multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<NestedPair> {
        Ok(NestedPair {
            fine: self.fine.scaled(s)?,
            coarse: self.coarse.scaled(s)?,
            relation: self.relation.clone(),
            nesting_ratio: self.nesting_ratio,
            construction: self.construction.clone(),
            indexer: self.indexer.clone(),
        })
    }

    /// Coset index of a fine point given by its integer coordinates.
    pub fn coset_index(&self, fine_integer_coords: &[i64]) -> u64 {
        let mut v = fine_integer_coords.to_vec();
        self.indexer.reduce(&mut v)
    }

    /// Leader of coset `index`: `r - Q_C(r)` for the canonical residue `r`.
    pub fn leader(&self, index: u64) -> Result<LatticePoint> {
        if index >= self.nesting_ratio {
            return Err(Error::IndexOutOfRange { index, n: self.nesting_ratio });
        }
        let r = self.indexer.representative(index);
        let p = self.fine.point_from_integer(&r);
        let q = self.coarse.closest_point(&p)?;
        let coords: Vec<f64> = p.iter().zip(&q.coords).map(|(a, b)| a - b).collect();
        let integer_coords = self.fine.integer_coords(&coords);
        Ok(LatticePoint { coords, integer_coords })
    }

    /// Plain-text form; round-trips through [`NestedPair::from_text`].
    pub fn to_text(&self) -> String {
        let mut s = String::from("nested-pair\n");
        let _ = writeln!(s, "construction {}", self.construction.to_line());
        s.push_str("fine\n");
        s.push_str(&self.fine.to_text());
        s.push_str("coarse\n");
        s.push_str(&self.coarse.to_text());
        s.push_str("relation\n");
        for i in 0..self.relation.nrows() {
            let row: Vec<String> = (0..self.relation.ncols()).map(|j| self.relation[(i, j)].to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<NestedPair> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let bad = |m: &str| Error::Parse(format!("nested pair: {m}"));
        if lines.first() != Some(&"nested-pair") {
            return Err(bad("missing header"));
        }
        let cons_line = lines
            .get(1)
            .and_then(|l| l.strip_prefix("construction "))
            .ok_or_else(|| bad("missing construction"))?;
        let construction = Construction::from_line(cons_line)?;
        let pos = |key: &str| lines.iter().position(|l| *l == key).ok_or_else(|| bad(key));
        let (fi, ci, ri) = (pos("fine")?, pos("coarse")?, pos("relation")?);
        let fine = Lattice::from_text(&lines[fi + 1..ci].join("\n"))?;
        let coarse = Lattice::from_text(&lines[ci + 1..ri].join("\n"))?;
        let n = fine.dim();
        let mut vals = Vec::with_capacity(n * n);
        for l in &lines[ri + 1..] {
            for t in l.split_whitespace() {
                vals.push(t.parse::<i64>().map_err(|_| bad("relation entry"))?);
            }
        }
        if vals.len() != n * n {
            return Err(bad("relation size"));
        }
        let relation = DMatrix::from_row_slice(n, n, &vals);
        Self::with_relation(fine, coarse, relation, construction)
    }
}

/// `P = M_F⁻¹ M_C` rounded, or an error if it is not integral within `tol`.
pub fn relation_matrix(fine: &Lattice, coarse: &Lattice, tol: f64) -> Result<DMatrix<i64>> {
    if fine.dim() != coarse.dim() {
        return Err(Error::DimensionMismatch { expected: fine.dim(), got: coarse.dim() });
    }
    let p = fine.inverse_basis() * coarse.basis();
    round_to_integer(&p, tol).ok_or_else(|| Error::InvalidNesting("M_F⁻¹·M_C is not an integer matrix".into()))
}

// ---------------------------------------------------------------------------
// Constructions
// ---------------------------------------------------------------------------

/// Coarse lattice `ξ·Λ_F` in the plane. For `Z²`, `ξ = a + bi`; for `A₂`
/// (the Eisenstein integers), `ξ = a + b·e^{iπ/3}`.
pub fn nest_by_complex(a: i64, b: i64, base: ComplexBase) -> Result<NestedPair> {
    let (fine, re, im) = match base {
        ComplexBase::Z2 => (crate::lattice::integer_lattice(2)?, a as f64, b as f64),
        ComplexBase::A2 => (
            crate::lattice::hexagonal()?,
            a as f64 + 0.5 * b as f64,
            b as f64 * 3f64.sqrt() / 2.0,
        ),
    };
    let norm = re * re + im * im;
    if norm < 2.0 - 1e-9 {
        return Err(Error::InvalidNesting(format!(
            "multiplier ({a}, {b}) has norm {norm:.0}; need at least 2"
        )));
    }
    let mul = DMatrix::from_row_slice(2, 2, &[re, -im, im, re]);
    let basis = &mul * fine.basis();
    let s = norm.sqrt();
    let name = format!("({a},{b})·{}", fine.name());
    let coarse = if im.abs() < 1e-12 && re > 0.0 {
        fine.with_scaled_basis(name, basis, s)?
    } else {
        fine.similar_with_basis(name, basis, s)?
    };
    NestedPair::new(fine, coarse, Construction::ComplexMul { a, b, base })
}

/// Left multiplication by the Lipschitz quaternion `a + bi + cj + dk` on
/// `Z⁴`, as the 4×4 matrix acting on `(x, y, z, w)`.
pub fn quaternion_matrix(a: i64, b: i64, c: i64, d: i64) -> DMatrix<i64> {
    DMatrix::from_row_slice(4, 4, &[a, -b, -c, -d, b, a, -d, c, c, d, a, -b, d, -c, b, a])
}

/// Coarse lattice `ξ·Z⁴` for a Lipschitz quaternion `ξ`.
pub fn nest_by_quaternion(a: i64, b: i64, c: i64, d: i64) -> Result<NestedPair> {
    nest_by_quaternion_blocks(a, b, c, d, 1)
}

/// `ξ` applied to each 4-dimensional block of `Z^{4·blocks}`.
pub fn nest_by_quaternion_blocks(a: i64, b: i64, c: i64, d: i64, blocks: usize) -> Result<NestedPair> {
    let norm = a * a + b * b + c * c + d * d;
    if norm == 0 {
        return Err(Error::InvalidNesting("quaternion multiplier is zero".into()));
    }
    if norm < 2 {
        return Err(Error::InvalidNesting("unit quaternion multiplier gives the identity".into()));
    }
    if blocks == 0 {
        return Err(Error::InvalidArgument("need at least one block".into()));
    }
    let n = 4 * blocks;
    let q = quaternion_matrix(a, b, c, d);
    let mut p = DMatrix::<i64>::zeros(n, n);
    for blk in 0..blocks {
        for i in 0..4 {
            for j in 0..4 {
                p[(4 * blk + i, 4 * blk + j)] = q[(i, j)];
            }
        }
    }
    let fine = crate::lattice::integer_lattice(n)?;
    let s = (norm as f64).sqrt();
    let name = format!("({a},{b},{c},{d})·Z{n}");
    let basis = p.map(|v| v as f64);
    let coarse = if b == 0 && c == 0 && d == 0 && a > 0 {
        fine.with_scaled_basis(name, basis, s)?
    } else {
        fine.similar_with_basis(name, basis, s)?
    };
    NestedPair::with_relation(fine, coarse, p, Construction::QuaternionMul { a, b, c, d, blocks })
}

fn is_fine_norm(fine: &Lattice, target: f64) -> Result<bool> {
    if let Some(sim) = fine.similarity() {
        let t = target / sim.norm_scale;
        let ti = t.round();
        if let Ok(Some(q)) = family_theta_qexp(sim.family, fine.dim(), ti.max(0.0) as usize) {
            if (t - ti).abs() > 1e-9 * t.max(1.0) {
                return Ok(false);
            }
            return Ok(!num_traits::Zero::is_zero(&q.coeff(ti as usize)));
        }
    }
    let mut found = false;
    let tol = 1e-9 * target.max(1.0);
    visit_points(fine, &vec![0.0; fine.dim()], target + tol, ROTATION_SEARCH_CAP, |_, d| {
        if (d - target).abs() <= tol {
            found = true;
        }
    })
    .map_err(|_| Error::NoSimilarSublattice(format!("norm {target} is beyond the search budget")))?;
    Ok(found)
}

/// Block rotation by `angle` on coordinate pairs (0,1), (2,3), …; a trailing
/// odd coordinate is left fixed.
fn block_rotation(n: usize, angle: f64) -> DMatrix<f64> {
    let mut r = DMatrix::<f64>::identity(n, n);
    let (s, c) = angle.sin_cos();
    for p in 0..n / 2 {
        let (i, j) = (2 * p, 2 * p + 1);
        r[(i, i)] = c;
        r[(i, j)] = -s;
        r[(j, i)] = s;
        r[(j, j)] = c;
    }
    r
}

/// Angle taking `v` to `w` under a block rotation, if one exists.
fn block_angle(v: &[f64], w: &[f64], tol: f64) -> Option<f64> {
    let n = v.len();
    // Pick the plane where v has the most weight.
    let best = (0..n / 2)
        .max_by(|&a, &b| {
            let na = v[2 * a].hypot(v[2 * a + 1]);
            let nb = v[2 * b].hypot(v[2 * b + 1]);
            na.total_cmp(&nb)
        })
        .unwrap_or(0);
    let (i, j) = (2 * best, 2 * best + 1);
    if v[i].hypot(v[j]) < tol {
        return None;
    }
    let angle = (w[j].atan2(w[i]) - v[j].atan2(v[i])).rem_euclid(TAU);
    let r = block_rotation(n, angle);
    let rv: Vec<f64> = (0..n).map(|a| (0..n).map(|b| r[(a, b)] * v[b]).sum()).collect();
    rv.iter().zip(w).all(|(x, y)| (x - y).abs() <= tol).then_some(angle)
}

/// Coarse lattice `β·R·Λ_F`, with `R` the identity when it suffices and
/// otherwise the first rotation (by increasing angle) that maps the scaled
/// basis onto fine points. In dimension 2 `R` is a plane rotation; above
/// that it is the same rotation on each coordinate pair.
pub fn nest_by_scale_rotate(fine: &Lattice, beta_sq: f64) -> Result<NestedPair> {
    let n = fine.dim();
    if !(beta_sq > 1.0) {
        return Err(Error::InvalidNesting(format!("beta_sq must exceed 1, got {beta_sq}")));
    }
    let (d_min, _) = min_norm(fine)?;
    if !is_fine_norm(fine, beta_sq * d_min)? {
        return Err(Error::NoSimilarSublattice(format!(
            "{beta_sq} times the minimal norm is not a norm of {}",
            fine.name()
        )));
    }
    let beta = beta_sq.sqrt();
    let name = format!("{}·{}", fmt_beta(beta_sq), fine.name());
    let try_angle = |angle: f64| -> Option<NestedPair> {
        let basis = if angle == 0.0 {
            fine.basis() * beta
        } else if n == 2 {
            block_rotation(2, angle) * fine.basis() * beta
        } else {
            block_rotation(n, angle) * fine.basis() * beta
        };
        let coarse = if angle == 0.0 {
            fine.with_scaled_basis(name.clone(), basis, beta).ok()?
        } else {
            fine.similar_with_basis(name.clone(), basis, beta).ok()?
        };
        let p = relation_matrix(fine, &coarse, CONSTRUCT_TOL).ok()?;
        NestedPair::with_relation(fine.clone(), coarse, p, Construction::ScaleRotate { beta_sq, angle }).ok()
    };
    if (beta - beta.round()).abs() < 1e-9 {
        if let Some(p) = try_angle(0.0) {
            return check_similar_ratio(p, beta_sq);
        }
    }
    if n % 2 == 1 {
        return Err(Error::NoSimilarSublattice(format!("no rotation search in odd dimension {n} for beta_sq = {beta_sq}")));
    }
    // Candidate angles: images of a shortest vector among fine points.
    let reduced = fine.sphere_decoder().reduced_basis();
    let shortest = (0..n)
        .min_by(|&a, &b| reduced.column(a).norm_squared().total_cmp(&reduced.column(b).norm_squared()))
        .unwrap_or(0);
    let m1: Vec<f64> = reduced.column(shortest).iter().copied().collect();
    let target = beta_sq * m1.iter().map(|x| x * x).sum::<f64>();
    let scaled: Vec<f64> = m1.iter().map(|x| x * beta).collect();
    let tol = 1e-7 * (1.0 + target.sqrt());
    let mut angles: Vec<f64> = Vec::new();
    visit_points(fine, &vec![0.0; n], target * (1.0 + 1e-9), ROTATION_SEARCH_CAP, |f, d| {
        if (d - target).abs() <= 1e-9 * target.max(1.0) {
            if let Some(a) = block_angle(&scaled, f, tol) {
                angles.push(a);
            }
        }
    })
    .map_err(|_| Error::NoSimilarSublattice(format!("rotation search for beta_sq = {beta_sq} exceeds its budget")))?;
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-10);
    for a in angles {
        let a = if a > TAU - 1e-12 { 0.0 } else { a };
        if let Some(p) = try_angle(a) {
            return check_similar_ratio(p, beta_sq);
        }
    }
    Err(Error::NoSimilarSublattice(format!("no rotation maps {} into itself at beta_sq = {beta_sq}", fine.name())))
}

fn check_similar_ratio(pair: NestedPair, beta_sq: f64) -> Result<NestedPair> {
    let n = pair.dim() as u32;
    let b = beta_sq.round();
    let exact = if b == beta_sq && n % 2 == 0 { (b as u64).checked_pow(n / 2) } else { None };
    let expect = exact.unwrap_or_else(|| beta_sq.powf(n as f64 / 2.0).round() as u64);
    let ok = match exact {
        Some(e) => pair.nesting_ratio() == e,
        None => ((pair.nesting_ratio() as f64) / (expect as f64) - 1.0).abs() < 1e-12,
    };
    if !ok {
        return Err(Error::Internal(format!(
            "similar sublattice has index {} but beta_sq^(n/2) = {expect}",
            pair.nesting_ratio()
        )));
    }
    Ok(pair)
}

fn fmt_beta(beta_sq: f64) -> String {
    let b = beta_sq.sqrt();
    if (b - b.round()).abs() < 1e-9 {
        format!("{}", b.round())
    } else {
        format!("√{beta_sq}")
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Random nested pair by Construction A: a `k×n` matrix over `Z_p` drawn
/// from `seed` spans a code `C`; the fine lattice is `G·(1/p)(C + pZⁿ)` and
/// the coarse lattice is `G·Zⁿ`, where `G` is the basis of `transform`.
/// The nesting ratio is `p^rank`.
pub fn nest_construction_a(n: usize, k: usize, p: u64, seed: u64, transform: &Lattice) -> Result<NestedPair> {
    nest_construction_a_with(n, k, p, seed, transform, |rng, k, n, p| {
        (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..p)).collect()).collect()
    })
}

/// As [`nest_construction_a`] with a caller-supplied generator draw.
pub fn nest_construction_a_with<F>(n: usize, k: usize, p: u64, seed: u64, transform: &Lattice, mut draw: F) -> Result<NestedPair>
where
    F: FnMut(&mut ChaCha8Rng, usize, usize, u64) -> Vec<Vec<u64>>,
{
    if !is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if transform.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: transform.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = None;
    for _ in 0..MAX_REDRAWS {
        let m = draw(&mut rng, k, n, p);
        if rank_mod_p(&m, p) == k {
            rows = Some(m);
            break;
        }
    }
    let rows = rows.ok_or_else(|| {
        Error::InvalidNesting(format!("no full-rank {k}x{n} generator over Z_{p} in {MAX_REDRAWS} draws"))
    })?;
    let pi = p as i64;
    let mut gens = DMatrix::<i64>::zeros(n, k + n);
    for (j, row) in rows.iter().enumerate() {
        for i in 0..n {
            gens[(i, j)] = row[i] as i64;
        }
    }
    for i in 0..n {
        gens[(i, k + i)] = pi;
    }
    let h = hermite_lower(&gens)?;
    let hf = h.map(|v| v as f64);
    let g = transform.basis();
    let fine_basis = g * &hf / p as f64;
    let fine = Lattice::from_basis(format!("A({n},{k},{p})·{}", transform.name()), fine_basis)?;
    let coarse = transform.clone();
    let hinv = hf.try_inverse().ok_or(Error::SingularBasis { det: 0.0 })?;
    let relation = round_to_integer(&(hinv * p as f64), CONSTRUCT_TOL)
        .ok_or_else(|| Error::Internal("Construction-A relation is not integral".into()))?;
    let pair = NestedPair::with_relation(fine, coarse, relation, Construction::ConstructionA { n, k, p, seed, rank: k })?;
    let expect = p.checked_pow(k as u32);
    if expect != Some(pair.nesting_ratio()) {
        return Err(Error::Internal(format!("index {} differs from p^rank", pair.nesting_ratio())));
    }
    Ok(pair)
}

// ---------------------------------------------------------------------------
// Verification, coset leaders, cleanness
// ---------------------------------------------------------------------------

/// Whether `coarse ⊂ fine` with index at least 2; also checks that 100
/// random coarse points quantize to themselves in the fine lattice.
pub fn verify_lattices(fine: &Lattice, coarse: &Lattice, seed: u64) -> bool {
    let Ok(p) = relation_matrix(fine, coarse, VERIFY_TOL) else {
        return false;
    };
    let det = p.map(|v| v as f64).determinant().abs();
    if det < 1.5 {
        return false;
    }
    let n = fine.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    for _ in 0..100 {
        let z: Vec<i64> = (0..n).map(|_| rng.gen_range(-5..=5)).collect();
        let c = coarse.point_from_integer(&z);
        fine.quantize_into(&c, &mut out);
        if c.iter().zip(&out).any(|(a, b)| (a - b).abs() > VERIFY_TOL * (1.0 + a.abs())) {
            return false;
        }
    }
    true
}

pub fn verify_nesting(pair: &NestedPair) -> bool {
    verify_lattices(pair.fine(), pair.coarse(), 0x5eed)
}

/// Coset leaders of a pair, explicit (stored) or computed on demand.
#[derive(Debug, Clone)]
pub struct CosetTable {
    n: u64,
    leaders: Option<Vec<LatticePoint>>,
}

impl CosetTable {
    /// A table that computes leaders when asked; works for any `N`.
    pub fn implicit(pair: &NestedPair) -> Self {
        CosetTable { n: pair.nesting_ratio(), leaders: None }
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_explicit(&self) -> bool {
        self.leaders.is_some()
    }

    /// Stored leaders, index order.
    pub fn leaders(&self) -> Option<&[LatticePoint]> {
        self.leaders.as_deref()
    }

    /// Leader with the given index.
    pub fn leader(&self, pair: &NestedPair, index: u64) -> Result<LatticePoint> {
        if index >= self.n {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        match &self.leaders {
            Some(l) => Ok(l[index as usize].clone()),
            None => pair.leader(index),
        }
    }

    /// The table of the pair scaled by `s`.
    pub fn scaled(&self, s: f64) -> CosetTable {
        let leaders = self.leaders.as_ref().map(|l| {
            l.iter()
                .map(|p| LatticePoint { coords: p.coords.iter().map(|c| c * s).collect(), integer_coords: p.integer_coords.clone() })
                .collect()
        });
        CosetTable { n: self.n, leaders }
    }

    /// Index of a leader (or any fine point of its coset).
    pub fn index_of(&self, pair: &NestedPair, point: &LatticePoint) -> u64 {
        pair.coset_index(&point.integer_coords)
    }
}

/// All `N` coset leaders, with the default cap.
pub fn coset_leaders(pair: &NestedPair) -> Result<CosetTable> {
    coset_leaders_capped(pair, DEFAULT_LEADER_CAP)
}

pub fn coset_leaders_capped(pair: &NestedPair, cap: u64) -> Result<CosetTable> {
    let n = pair.nesting_ratio();
    if n > cap {
        return Err(Error::EnumerationCap { cap: cap as usize });
    }
    let leaders = (0..n).map(|i| pair.leader(i)).collect::<Result<Vec<_>>>()?;
    Ok(CosetTable { n, leaders: Some(leaders) })
}

/// Whether no fine point lies on the boundary of a coarse Voronoi cell.
pub fn is_clean(pair: &NestedPair) -> Result<bool> {
    is_clean_capped(pair, DEFAULT_LEADER_CAP)
}

pub fn is_clean_capped(pair: &NestedPair, cap: u64) -> Result<bool> {
    let table = coset_leaders_capped(pair, cap)?;
    for l in table.leaders().unwrap_or(&[]) {
        if pair.coarse().nearest_set(&l.coords)?.len() > 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Coset leaders found by enumerating fine points in a ball around the
/// origin and keeping those that quantize to the origin in the coarse
/// lattice. Independent of the residue machinery; used as a check.
pub fn leaders_by_enumeration(pair: &NestedPair, radius_sq: f64) -> Result<Vec<LatticePoint>> {
    let n = pair.dim();
    let mut out = Vec::new();
    let mut q = vec![0.0; n];
    let mut err = None;
    visit_points(pair.fine(), &vec![0.0; n], radius_sq, crate::enumerate::DEFAULT_CAP, |p, _| {
        pair.coarse().quantize_into(p, &mut q);
        if q.iter().all(|v| v.abs() < 1e-9) {
            match pair.fine().closest_point(p) {
                Ok(lp) => out.push(lp),
                Err(e) => err = Some(e),
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(out)
}

/// Fine and coarse points in the box `[-half, half]²` for a planar pair,
/// for plotting. Returns `(fine, coarse)`.
pub fn planar_scatter(pair: &NestedPair, half: f64) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    if pair.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: pair.dim() });
    }
    let r2 = 2.0 * half * half;
    let collect = |lat: &Lattice| -> Result<Vec<[f64; 2]>> {
        let mut v = Vec::new();
        visit_points(lat, &[0.0, 0.0], r2, crate::enumerate::DEFAULT_CAP, |p, _| {
            if p[0].abs() <= half && p[1].abs() <= half {
                v.push([p[0], p[1]]);
            }
        })?;
        v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        Ok(v)
    };
    Ok((collect(pair.fine())?, collect(pair.coarse())?))
}

/// Rotation angle of a scale-rotate pair in degrees, in `[0, 360)`.
pub fn rotation_degrees(pair: &NestedPair) -> Option<f64> {
    match pair.construction() {
        Construction::ScaleRotate { angle, .. } => Some(angle * 180.0 / PI),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::named;

    #[test]
    fn complex_examples() {
        let p = nest_by_complex(2, 1, ComplexBase::Z2).unwrap();
        assert_eq!(p.nesting_ratio(), 5);
        assert!(is_clean(&p).unwrap());
        assert!(verify_nesting(&p));
        let p = nest_by_complex(1, 1, ComplexBase::Z2).unwrap();
        assert_eq!(p.nesting_ratio(), 2);
        assert!(!is_clean(&p).unwrap());
        assert!(nest_by_complex(1, 0, ComplexBase::Z2).is_err());
        let p = nest_by_complex(2, 1, ComplexBase::A2).unwrap();
        assert_eq!(p.nesting_ratio(), 7);
        assert!(is_clean(&p).unwrap());
    }

    #[test]
    fn quaternion_examples() {
        assert_eq!(nest_by_quaternion(1, 1, 1, 0).unwrap().nesting_ratio(), 9);
        let p = nest_by_quaternion(1, 1, 0, 0).unwrap();
        assert_eq!(p.nesting_ratio(), 4);
        assert!(verify_nesting(&p));
        assert!(nest_by_quaternion(1, 0, 0, 0).is_err());
        assert!(nest_by_quaternion(0, 0, 0, 0).is_err());
    }

    #[test]
    fn scale_rotate_examples() {
        let a2 = named("A2").unwrap();
        let p = nest_by_scale_rotate(&a2, 7.0).unwrap();
        assert_eq!(p.nesting_ratio(), 7);
        assert!((rotation_degrees(&p).unwrap() - 19.106_605_350_869_1).abs() < 1e-6);
        let p = nest_by_scale_rotate(&a2, 9.0).unwrap();
        assert_eq!(p.nesting_ratio(), 9);
        assert_eq!(rotation_degrees(&p).unwrap(), 0.0);
        let z2 = named("Z2").unwrap();
        assert!(matches!(nest_by_scale_rotate(&z2, 3.0), Err(Error::NoSimilarSublattice(_))));
    }

    #[test]
    fn e8_rotated_by_45_degrees() {
        let e8 = named("E8").unwrap();
        let p = nest_by_scale_rotate(&e8, 8.0).unwrap();
        assert_eq!(p.nesting_ratio(), 4096);
        assert!((p.rate() - 1.5).abs() < 1e-12);
        assert!((rotation_degrees(&p).unwrap() - 45.0).abs() < 1e-9);
        assert!(verify_nesting(&p));
    }

    #[test]
    fn construction_a_examples() {
        let a2 = named("A2").unwrap();
        let p = nest_construction_a(2, 1, 5, 11, &a2).unwrap();
        assert_eq!(p.nesting_ratio(), 5);
        assert!(verify_nesting(&p));
        let err = nest_construction_a_with(2, 1, 5, 1, &a2, |_, k, n, _| vec![vec![0; n]; k]);
        assert!(err.is_err());
        let e8 = named("E8").unwrap();
        let p = nest_construction_a(8, 4, 3, 2, &e8).unwrap();
        assert!((p.rate() - 4.0 * 3f64.log2() / 8.0).abs() < 1e-12);
    }

    #[test]
    fn z1_four_leaders() {
        let z1 = named("Z1").unwrap();
        let c = Lattice::from_basis("4Z", DMatrix::from_element(1, 1, 4.0)).unwrap();
        let pair = NestedPair::new(z1, c, Construction::Explicit).unwrap();
        let t = coset_leaders(&pair).unwrap();
        let mut v: Vec<f64> = t.leaders().unwrap().iter().map(|l| l.coords[0]).collect();
        assert_eq!(v[0], 0.0);
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![-1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn incompatible_lattices() {
        let a2 = named("A2").unwrap();
        let z2 = named("Z2").unwrap().scaled(2.0).unwrap();
        assert!(!verify_lattices(&a2, &z2, 1));
        assert!(NestedPair::new(a2, z2, Construction::Explicit).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = nest_by_scale_rotate(&named("A2").unwrap(), 7.0).unwrap();
        let back = NestedPair::from_text(&p.to_text()).unwrap();
        assert_eq!(back.to_text(), p.to_text());
        assert_eq!(back.relation(), p.relation());
    }
}
