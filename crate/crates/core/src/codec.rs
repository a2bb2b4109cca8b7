//! Wyner-Ziv encoder and decoder over a nested pair.
//!
//! The encoder quantizes `x` in the fine lattice and sends the index of its
//! coset modulo the coarse lattice. The decoder picks the member of that
//! coset closest to the side information `y`.

use crate::error::{Error, Result};
use crate::nesting::{CosetTable, NestedPair};

/// Coset index in `[0, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WzIndex {
    pub value: u64,
}

impl WzIndex {
    pub fn new(value: u64) -> Self {
        WzIndex { value }
    }
}

fn check_dim(pair: &NestedPair, got: usize) -> Result<()> {
    if got != pair.dim() {
        return Err(Error::DimensionMismatch { expected: pair.dim(), got });
    }
    Ok(())
}

/// Index of the coset leader `s = Q_F(x) - Q_C(Q_F(x))`.
pub fn encode(pair: &NestedPair, table: &CosetTable, x: &[f64]) -> Result<WzIndex> {
    check_dim(pair, x.len())?;
    let mut q = vec![0.0; x.len()];
    pair.fine().quantize_into(x, &mut q);
    let idx = pair.coset_index(&pair.fine().integer_coords(&q));
    if idx >= table.len() {
        return Err(Error::Internal(format!("coset index {idx} is not in a table of {}", table.len())));
    }
    Ok(WzIndex::new(idx))
}

/// `s + Q_C(y - s)` for the leader `s` of `idx`.
pub fn decode(pair: &NestedPair, table: &CosetTable, idx: WzIndex, y: &[f64]) -> Result<Vec<f64>> {
    check_dim(pair, y.len())?;
    let s = table.leader(pair, idx.value)?.coords;
    let mut out = vec![0.0; y.len()];
    decode_with_leader(pair, &s, y, &mut out);
    Ok(out)
}

pub(crate) fn decode_with_leader(pair: &NestedPair, s: &[f64], y: &[f64], out: &mut [f64]) {
    let diff: Vec<f64> = y.iter().zip(s).map(|(a, b)| a - b).collect();
    pair.coarse().quantize_into(&diff, out);
    for (o, v) in out.iter_mut().zip(s) {
        *o += v;
    }
}

/// Linear MMSE blend `y + σ²/(σ² + d_s)·(x̂ - y)` of the plain decoder output.
pub fn decode_mmse(
    pair: &NestedPair,
    table: &CosetTable,
    idx: WzIndex,
    y: &[f64],
    sigma_z_sq: f64,
    d_s: f64,
) -> Result<Vec<f64>> {
    if !(sigma_z_sq > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_z_sq must be positive, got {sigma_z_sq}")));
    }
    if !(d_s >= 0.0) {
        return Err(Error::InvalidArgument(format!("d_s must be non-negative, got {d_s}")));
    }
    let mut x = decode(pair, table, idx, y)?;
    mmse_blend(&mut x, y, mmse_weight(sigma_z_sq, d_s));
    Ok(x)
}

pub fn mmse_weight(sigma_z_sq: f64, d_s: f64) -> f64 {
    sigma_z_sq / (sigma_z_sq + d_s)
}

pub(crate) fn mmse_blend(x: &mut [f64], y: &[f64], w: f64) {
    for (a, b) in x.iter_mut().zip(y) {
        *a = b + w * (*a - b);
    }
}

/// `(1/n) log₂ N` bits per dimension.
pub fn rate(pair: &NestedPair) -> f64 {
    pair.rate()
}

/// Reusable encoder/decoder state for repeated use on one pair. Leaders are
/// looked up in the table when it is explicit; otherwise the canonical coset
/// representative stands in for the leader, which gives the same output.
pub struct Codec<'a> {
    pair: &'a NestedPair,
    table: &'a CosetTable,
    q: Vec<f64>,
    diff: Vec<f64>,
    s: Vec<f64>,
}

impl<'a> Codec<'a> {
    pub fn new(pair: &'a NestedPair, table: &'a CosetTable) -> Self {
        let n = pair.dim();
        Codec { pair, table, q: vec![0.0; n], diff: vec![0.0; n], s: vec![0.0; n] }
    }

    pub fn encode(&mut self, x: &[f64]) -> WzIndex {
        self.pair.fine().quantize_into(x, &mut self.q);
        let ic = self.pair.fine().integer_coords(&self.q);
        WzIndex::new(self.pair.coset_index(&ic))
    }

    /// Plain decode into `out`.
    pub fn decode_into(&mut self, idx: WzIndex, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.pair.dim();
        if idx.value >= self.table.len() {
            return Err(Error::IndexOutOfRange { index: idx.value, n: self.table.len() });
        }
        match self.table.leaders() {
            Some(l) => self.s.copy_from_slice(&l[idx.value as usize].coords),
            None => {
                let r = self.pair.indexer().representative(idx.value);
                self.s.copy_from_slice(&self.pair.fine().point_from_integer(&r));
            }
        }
        for i in 0..n {
            self.diff[i] = y[i] - self.s[i];
        }
        self.pair.coarse().quantize_into(&self.diff, out);
        for i in 0..n {
            out[i] += self.s[i];
        }
        Ok(())
    }
}
