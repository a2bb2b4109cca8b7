//! Lattice representation, named lattices and closest-point quantization.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::decode::{lex_cmp, sq_dist, FastKind, SphereDecoder};
use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt_sq_norms, hermite_lower};

/// Which closest-point algorithm a lattice uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    ZnFast,
    DnFast,
    DnDualFast,
    A2Fast,
    E8Fast,
    LeechSphere,
    GenericSphere,
}

impl DecoderKind {
    fn fast(self) -> Option<FastKind> {
        match self {
            DecoderKind::ZnFast => Some(FastKind::Zn),
            DecoderKind::DnFast => Some(FastKind::Dn),
            DecoderKind::DnDualFast => Some(FastKind::DnDual),
            DecoderKind::A2Fast => Some(FastKind::A2),
            DecoderKind::E8Fast => Some(FastKind::E8),
            DecoderKind::LeechSphere | DecoderKind::GenericSphere => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::ZnFast => "zn",
            DecoderKind::DnFast => "dn",
            DecoderKind::DnDualFast => "dn-dual",
            DecoderKind::A2Fast => "a2",
            DecoderKind::E8Fast => "e8",
            DecoderKind::LeechSphere => "leech-sphere",
            DecoderKind::GenericSphere => "sphere",
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "zn" => DecoderKind::ZnFast,
            "dn" => DecoderKind::DnFast,
            "dn-dual" => DecoderKind::DnDualFast,
            "a2" => DecoderKind::A2Fast,
            "e8" => DecoderKind::E8Fast,
            "leech-sphere" => DecoderKind::LeechSphere,
            "sphere" => DecoderKind::GenericSphere,
            other => return Err(Error::Parse(format!("unknown decoder `{other}`"))),
        })
    }
}

/// Standard lattice families with known theta series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Zn,
    Dn,
    DnDual,
    A2,
    E8,
    Leech,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Zn => "Zn",
            Family::Dn => "Dn",
            Family::DnDual => "Dn*",
            Family::A2 => "A2",
            Family::E8 => "E8",
            Family::Leech => "Leech",
        }
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Zn" => Family::Zn,
            "Dn" => Family::Dn,
            "Dn*" => Family::DnDual,
            "A2" => Family::A2,
            "E8" => Family::E8,
            "Leech" => Family::Leech,
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        })
    }
}

/// The lattice is `sqrt(norm_scale)` times an orthogonal image of the
/// standard member of `family`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub family: Family,
    pub norm_scale: f64,
}

/// A point of a lattice with both Cartesian and basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub coords: Vec<f64>,
    pub integer_coords: Vec<i64>,
}

impl LatticePoint {
    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }
}

/// An n-dimensional lattice given by a column basis `M` (points are `M·i`).
#[derive(Clone)]
pub struct Lattice {
    name: String,
    basis: DMatrix<f64>,
    inverse: DMatrix<f64>,
    volume: f64,
    decoder: DecoderKind,
    /// Point set equals `fast_scale` times the standard lattice of the fast
    /// decoder, when one is attached.
    fast_scale: f64,
    similarity: Option<Similarity>,
    sphere: Arc<SphereDecoder>,
}

impl std::fmt::Debug for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lattice")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("decoder", &self.decoder)
            .field("volume", &self.volume)
            .finish()
    }
}

const SINGULAR_TOL: f64 = 1e-12;

impl Lattice {
    /// Builds a lattice from a column basis. Uses the generic sphere decoder.
    pub fn from_basis(name: impl Into<String>, basis: DMatrix<f64>) -> Result<Self> {
        Self::build(name.into(), basis, DecoderKind::GenericSphere, 1.0, None)
    }

    fn build(
        name: String,
        basis: DMatrix<f64>,
        decoder: DecoderKind,
        fast_scale: f64,
        similarity: Option<Similarity>,
    ) -> Result<Self> {
        let n = basis.nrows();
        if n == 0 || basis.ncols() != n {
            return Err(Error::InvalidArgument("basis must be a nonempty square matrix".into()));
        }
        let det = basis.determinant();
        let sv = basis.singular_values();
        let smax = sv.max();
        if !det.is_finite() || det == 0.0 || sv.min() <= SINGULAR_TOL * smax {
            return Err(Error::SingularBasis { det });
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis { det })?;
        let sphere = Arc::new(SphereDecoder::new(&basis));
        Ok(Lattice {
            name,
            basis,
            inverse,
            volume: det.abs(),
            decoder,
            fast_scale,
            similarity,
            sphere,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn inverse_basis(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn decoder(&self) -> DecoderKind {
        self.decoder
    }

    pub fn similarity(&self) -> Option<Similarity> {
        self.similarity
    }

    pub fn sphere_decoder(&self) -> &SphereDecoder {
        &self.sphere
    }

    /// Cell volume `|det M|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Product of Gram-Schmidt norms; equals the volume for a valid basis.
    pub fn volume_gram_schmidt(&self) -> f64 {
        gram_schmidt_sq_norms(&self.basis).iter().map(|v| v.sqrt()).product()
    }

    /// Same lattice multiplied by `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Lattice> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("scale must be positive, got {s}")));
        }
        Self::build(
            self.name.clone(),
            &self.basis * s,
            self.decoder,
            self.fast_scale * s,
            self.similarity.map(|sim| Similarity { family: sim.family, norm_scale: sim.norm_scale * s * s }),
        )
    }

    /// Same point set with a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// A lattice with basis `basis` that is known to be `s·Λ` for this
    /// lattice `Λ` and a positive scalar `s`. Keeps the fast decoder.
    pub(crate) fn with_scaled_basis(&self, name: String, basis: DMatrix<f64>, s: f64) -> Result<Lattice> {
        Self::build(
            name,
            basis,
            self.decoder,
            self.fast_scale * s,
            self.similarity.map(|sim| Similarity { family: sim.family, norm_scale: sim.norm_scale * s * s }),
        )
    }

    /// A lattice with an arbitrary new basis that is similar to this one
    /// (rotation + scale `s`). The fast decoder is dropped unless the rotation
    /// is trivial.
    pub(crate) fn similar_with_basis(&self, name: String, basis: DMatrix<f64>, s: f64) -> Result<Lattice> {
        Self::build(
            name,
            basis,
            DecoderKind::GenericSphere,
            1.0,
            self.similarity.map(|sim| Similarity { family: sim.family, norm_scale: sim.norm_scale * s * s }),
        )
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Nearest lattice point, Cartesian coordinates only. `out` must have
    /// length `dim`.
    pub fn quantize_into(&self, x: &[f64], out: &mut [f64]) {
        match self.decoder.fast() {
            Some(kind) => {
                if self.fast_scale == 1.0 {
                    kind.decode(x, out);
                } else {
                    let s = self.fast_scale;
                    let xs: Vec<f64> = x.iter().map(|v| v / s).collect();
                    kind.decode(&xs, out);
                    for v in out.iter_mut() {
                        *v *= s;
                    }
                }
            }
            None => {
                let (_, p, _, _) = self.sphere.closest(x);
                out.copy_from_slice(&p);
            }
        }
    }

    /// Nearest lattice point (Q_Λ(x)) with the crate-wide tie rule.
    pub fn closest_point(&self, x: &[f64]) -> Result<LatticePoint> {
        self.check_dim(x)?;
        match self.decoder.fast() {
            Some(_) => {
                let mut out = vec![0.0; self.dim()];
                self.quantize_into(x, &mut out);
                let integer_coords = self.integer_coords(&out);
                Ok(LatticePoint { coords: out, integer_coords })
            }
            None => Ok(self.closest_point_sphere_unchecked(x)),
        }
    }

    /// Nearest point by sphere decoding regardless of the attached decoder.
    pub fn closest_point_sphere(&self, x: &[f64]) -> Result<LatticePoint> {
        self.check_dim(x)?;
        Ok(self.closest_point_sphere_unchecked(x))
    }

    fn closest_point_sphere_unchecked(&self, x: &[f64]) -> LatticePoint {
        let (z, p, _, _) = self.sphere.closest(x);
        LatticePoint { coords: p, integer_coords: self.sphere.original_coords(&z) }
    }

    /// All lattice points at the minimal distance from `x` (within the tie
    /// tolerance), sorted by the tie rule.
    pub fn nearest_set(&self, x: &[f64]) -> Result<Vec<LatticePoint>> {
        self.check_dim(x)?;
        let mut pts: Vec<LatticePoint> = self
            .sphere
            .nearest_set(x)
            .into_iter()
            .map(|z| {
                let mut p = vec![0.0; self.dim()];
                self.sphere.point(&z, &mut p);
                LatticePoint { coords: p, integer_coords: self.sphere.original_coords(&z) }
            })
            .collect();
        pts.sort_by(|a, b| lex_cmp(&a.coords, &b.coords));
        Ok(pts)
    }

    /// Basis coordinates of a lattice point given in Cartesian form.
    pub fn integer_coords(&self, coords: &[f64]) -> Vec<i64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let s: f64 = (0..n).map(|j| self.inverse[(i, j)] * coords[j]).sum();
                s.round() as i64
            })
            .collect()
    }

    /// Cartesian coordinates `M·i`.
    pub fn point_from_integer(&self, i: &[i64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|c| self.basis[(r, c)] * i[c] as f64).sum())
            .collect()
    }

    /// Whether `x` is a lattice point (to within `tol` per coordinate).
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let i = self.integer_coords(x);
        let back = self.point_from_integer(&i);
        back.iter().zip(x).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// Gram matrix `MᵀM`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.basis.transpose() * &self.basis
    }

    /// Squared distance from `x` to its nearest lattice point.
    pub fn distance_sq(&self, x: &[f64]) -> f64 {
        let mut out = vec![0.0; self.dim()];
        self.quantize_into(x, &mut out);
        sq_dist(x, &out)
    }

    /// Plain-text form: a header line, then `n`, then `n` rows of `M`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sim = match self.similarity {
            Some(sim) => format!("{} {:?}", sim.family.as_str(), sim.norm_scale),
            None => "none".to_string(),
        };
        let _ = writeln!(
            s,
            "lattice {} {} {:?} {}",
            self.name.replace(char::is_whitespace, "_"),
            self.decoder.as_str(),
            self.fast_scale,
            sim
        );
        s.push_str(&matrix_to_text(&self.basis));
        s
    }

    pub fn from_text(text: &str) -> Result<Lattice> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty lattice text".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() < 5 || fields[0] != "lattice" {
            return Err(Error::Parse(format!("bad lattice header `{header}`")));
        }
        let name = fields[1].to_string();
        let decoder: DecoderKind = fields[2].parse()?;
        let fast_scale: f64 = fields[3]
            .parse()
            .map_err(|_| Error::Parse(format!("bad scale `{}`", fields[3])))?;
        let similarity = if fields[4] == "none" {
            None
        } else {
            let family: Family = fields[4].parse()?;
            let norm_scale: f64 = fields
                .get(5)
                .ok_or_else(|| Error::Parse("missing similarity scale".into()))?
                .parse()
                .map_err(|_| Error::Parse("bad similarity scale".into()))?;
            Some(Similarity { family, norm_scale })
        };
        let rest: Vec<&str> = lines.collect();
        let basis = parse_matrix(&rest.join("\n"))?;
        Self::build(name, basis, decoder, fast_scale, similarity)
    }

    /// Loads an arbitrary lattice from the plain matrix format (`n`, then
    /// `n` rows of `M`).
    pub fn from_matrix_text(name: impl Into<String>, text: &str) -> Result<Lattice> {
        Self::from_basis(name, parse_matrix(text)?)
    }
}

/// `n` on the first line then `n` rows of `n` numbers, shortest round-trip
/// float formatting.
pub fn matrix_to_text(m: &DMatrix<f64>) -> String {
    let mut s = format!("{}\n", m.nrows());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

/// Parses the plain matrix format.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut tokens = text.split_whitespace();
    let n: usize = tokens
        .next()
        .ok_or_else(|| Error::Parse("missing dimension".into()))?
        .parse()
        .map_err(|_| Error::Parse("dimension is not an integer".into()))?;
    if n == 0 {
        return Err(Error::Parse("dimension must be positive".into()));
    }
    let mut vals = Vec::with_capacity(n * n);
    for t in tokens {
        vals.push(t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{t}`")))?);
    }
    if vals.len() != n * n {
        return Err(Error::Parse(format!("expected {} entries, found {}", n * n, vals.len())));
    }
    Ok(DMatrix::from_row_slice(n, n, &vals))
}

// ---------------------------------------------------------------------------
// Named lattices
// ---------------------------------------------------------------------------

/// Tags accepted by [`named`], for listing.
pub const NAMED_TAGS: &[&str] = &["Z1..Zn", "Dn (n>=2)", "Dn* (n>=2)", "A2", "E8", "Leech"];

pub fn integer_lattice(n: usize) -> Result<Lattice> {
    Lattice::build(
        format!("Z{n}"),
        DMatrix::identity(n, n),
        DecoderKind::ZnFast,
        1.0,
        Some(Similarity { family: Family::Zn, norm_scale: 1.0 }),
    )
}

/// Checkerboard lattice: integer vectors with even coordinate sum.
pub fn checkerboard(n: usize) -> Result<Lattice> {
    if n < 2 {
        return Err(Error::InvalidArgument("D_n needs n >= 2".into()));
    }
    let mut m = DMatrix::zeros(n, n);
    m[(0, 0)] = -1.0;
    m[(1, 0)] = -1.0;
    for j in 1..n {
        m[(j - 1, j)] = 1.0;
        m[(j, j)] = -1.0;
    }
    Lattice::build(
        format!("D{n}"),
        m,
        DecoderKind::DnFast,
        1.0,
        Some(Similarity { family: Family::Dn, norm_scale: 1.0 }),
    )
}

/// Dual of the checkerboard lattice: `Zⁿ ∪ (Zⁿ + ½·1)`.
pub fn checkerboard_dual(n: usize) -> Result<Lattice> {
    if n < 2 {
        return Err(Error::InvalidArgument("D_n* needs n >= 2".into()));
    }
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        m[(j, j)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = 0.5;
    }
    Lattice::build(
        format!("D{n}*"),
        m,
        DecoderKind::DnDualFast,
        1.0,
        Some(Similarity { family: Family::DnDual, norm_scale: 1.0 }),
    )
}

/// Hexagonal lattice with basis (1, 0), (-1/2, √3/2).
pub fn hexagonal() -> Result<Lattice> {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.5, 0.0, 3f64.sqrt() / 2.0]);
    Lattice::build(
        "A2".into(),
        m,
        DecoderKind::A2Fast,
        1.0,
        Some(Similarity { family: Family::A2, norm_scale: 1.0 }),
    )
}

/// Gosset lattice `D₈ ∪ (D₈ + ½·1)`.
pub fn gosset() -> Result<Lattice> {
    let mut m = DMatrix::zeros(8, 8);
    m[(0, 0)] = 2.0;
    for j in 1..7 {
        m[(j - 1, j)] = -1.0;
        m[(j, j)] = 1.0;
    }
    for i in 0..8 {
        m[(i, 7)] = 0.5;
    }
    Lattice::build(
        "E8".into(),
        m,
        DecoderKind::E8Fast,
        1.0,
        Some(Similarity { family: Family::E8, norm_scale: 1.0 }),
    )
}

/// Generator rows of the extended binary Golay code (cyclic code of length
/// 23 with generator polynomial 1+x²+x⁴+x⁵+x⁶+x¹⁰+x¹¹, plus parity).
pub fn golay_generator() -> Vec<[u8; 24]> {
    const G: [u8; 12] = [1, 0, 1, 0, 1, 1, 1, 0, 0, 0, 1, 1];
    (0..12)
        .map(|shift| {
            let mut row = [0u8; 24];
            for (k, &g) in G.iter().enumerate() {
                row[shift + k] = g;
            }
            row[23] = row[..23].iter().sum::<u8>() % 2;
            row
        })
        .collect()
}

fn leech_integer_basis() -> Result<DMatrix<i64>> {
    let mut gens: Vec<Vec<i64>> = Vec::new();
    for c in golay_generator() {
        gens.push(c.iter().map(|&b| 2 * i64::from(b)).collect());
    }
    let mut v = vec![0i64; 24];
    v[0] = 4;
    v[1] = 4;
    gens.push(v);
    for i in 0..23 {
        let mut v = vec![0i64; 24];
        v[i] = 4;
        v[i + 1] = -4;
        gens.push(v);
    }
    let mut odd = vec![1i64; 24];
    odd[0] = -3;
    gens.push(odd);
    let g = DMatrix::from_fn(24, gens.len(), |i, j| gens[j][i]);
    hermite_lower(&g)
}

/// Leech lattice, unimodular scaling (minimal norm 4). The basis is the
/// Hermite form of the Golay-code construction in √8-scaled coordinates.
pub fn leech() -> Result<Lattice> {
    static CACHE: OnceLock<Lattice> = OnceLock::new();
    if let Some(l) = CACHE.get() {
        return Ok(l.clone());
    }
    let h = leech_integer_basis()?;
    let m = h.map(|v| v as f64 / 8f64.sqrt());
    let lat = Lattice::build(
        "Leech".into(),
        m,
        DecoderKind::LeechSphere,
        1.0,
        Some(Similarity { family: Family::Leech, norm_scale: 1.0 }),
    )?;
    Ok(CACHE.get_or_init(|| lat).clone())
}

/// Looks up a lattice by tag: `Z<n>`, `D<n>`, `D<n>*`, `A2`, `E8`, `Leech`.
pub fn named(tag: &str) -> Result<Lattice> {
    let t = tag.trim();
    let parse_n = |s: &str| -> Result<usize> {
        s.parse::<usize>()
            .ok()
            .filter(|&n| n >= 1 && n <= 64)
            .ok_or_else(|| Error::UnknownLattice(tag.to_string()))
    };
    match t {
        "A2" => hexagonal(),
        "E8" => gosset(),
        "Leech" | "L24" | "Lambda24" => leech(),
        _ if t.starts_with('Z') => integer_lattice(parse_n(&t[1..])?),
        _ if t.starts_with('D') && t.ends_with('*') => checkerboard_dual(parse_n(&t[1..t.len() - 1])?),
        _ if t.starts_with('D') => checkerboard(parse_n(&t[1..])?),
        _ => Err(Error::UnknownLattice(tag.to_string())),
    }
}

/// Normalized second moment for families where it is known in closed form
/// or tabulated to high precision.
pub fn known_normalized_second_moment(lat: &Lattice) -> Option<f64> {
    let sim = lat.similarity()?;
    let n = lat.dim();
    Some(match (sim.family, n) {
        (Family::Zn, _) => 1.0 / 12.0,
        (Family::A2, 2) => 5.0 / (36.0 * 3f64.sqrt()),
        (Family::Dn, 3) => 0.078_745_1,
        (Family::DnDual, 3) => 0.078_543_3,
        (Family::Dn, 4) | (Family::DnDual, 4) => 0.076_603_2,
        (Family::E8, 8) => 0.071_682_1,
        (Family::Leech, 24) => 0.065_770_8,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golay_code_has_minimum_weight_eight() {
        let g = golay_generator();
        let mut min_w = 24;
        for mask in 1u32..(1 << 12) {
            let mut w = [0u8; 24];
            for (k, row) in g.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    for i in 0..24 {
                        w[i] ^= row[i];
                    }
                }
            }
            let wt = w.iter().map(|&b| b as usize).sum::<usize>();
            min_w = min_w.min(wt);
        }
        assert_eq!(min_w, 8);
    }

    #[test]
    fn named_volumes() {
        for (tag, vol) in [("Z3", 1.0), ("D4", 2.0), ("D3*", 0.5), ("E8", 1.0), ("Leech", 1.0)] {
            let l = named(tag).unwrap();
            assert!((l.volume() - vol).abs() < 1e-9, "{tag}: {}", l.volume());
            let rel = (l.volume_gram_schmidt() - l.volume()).abs() / l.volume();
            assert!(rel < 1e-10);
        }
        let a2 = named("A2").unwrap();
        assert!((a2.volume() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_basis_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(Lattice::from_basis("bad", m), Err(Error::SingularBasis { .. })));
    }

    #[test]
    fn dimension_mismatch() {
        let z = named("Z2").unwrap();
        assert!(matches!(z.closest_point(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spec_examples() {
        let z = named("Z2").unwrap();
        assert_eq!(z.closest_point(&[0.2, -0.4]).unwrap().coords, vec![0.0, 0.0]);
        let d3 = named("D3").unwrap();
        assert_eq!(d3.closest_point(&[0.6, 0.6, 0.6]).unwrap().coords, vec![0.0, 1.0, 1.0]);
        let e8 = named("E8").unwrap();
        let h = vec![0.5; 8];
        assert_eq!(e8.closest_point(&h).unwrap().coords, h);
    }

    #[test]
    fn text_round_trip() {
        let l = named("A2").unwrap().scaled(0.3).unwrap();
        let back = Lattice::from_text(&l.to_text()).unwrap();
        assert_eq!(back.basis(), l.basis());
        assert_eq!(back.decoder(), l.decoder());
        assert_eq!(back.similarity(), l.similarity());
    }

    #[test]
    fn unknown_tag() {
        assert!(matches!(named("Q7"), Err(Error::UnknownLattice(_))));
    }
}
