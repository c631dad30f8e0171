//! Finite truncations of explicit bases and of the ways they are combined.
//!
//! A [`BasisTruncation`] stores `d` basis vectors as columns in an ambient
//! coordinate space together with the ambient norm, so that the synthesis
//! map `a ↦ Σ a_j x_j` is a plain matrix-vector product. Coefficient
//! functionals are therefore read off directly from the coefficient vector.
//!
//! Indices are zero-based throughout the API.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spaces::{Block, Exponent, SpaceDesc, SpaceError};

/// Singular values below this (relative to `max(1, σ_max)`) count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum BasisError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("columns are linearly dependent: rank {rank} < {d}")]
    RankDeficient { rank: usize, d: usize },
    #[error("column {index} has length {len}, ambient dimension is {ambient_dim}")]
    ColumnLength { index: usize, len: usize, ambient_dim: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("basis document: {0}")]
    Document(#[from] serde_json::Error),
}

#[derive(Debug, Clone)]
pub struct BasisTruncation {
    label: String,
    space: SpaceDesc,
    ambient_dim: usize,
    columns: Vec<Vec<f64>>,
    sparse: Vec<Vec<(usize, f64)>>,
    seminormalization: f64,
}

impl BasisTruncation {
    /// Validates dimensions and linear independence of `columns`.
    pub fn new(
        label: impl Into<String>,
        space: SpaceDesc,
        ambient_dim: usize,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, BasisError> {
        if columns.is_empty() {
            return Err(BasisError::InvalidArgument("a basis needs at least one vector".into()));
        }
        space.validate_for_dim(ambient_dim)?;
        for (index, c) in columns.iter().enumerate() {
            if c.len() != ambient_dim {
                return Err(BasisError::ColumnLength { index, len: c.len(), ambient_dim });
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(BasisError::InvalidArgument(format!(
                    "column {index} has a non-finite entry"
                )));
            }
        }
        let d = columns.len();
        let rank = column_rank(&columns, ambient_dim);
        if rank < d {
            return Err(BasisError::RankDeficient { rank, d });
        }
        let sparse: Vec<Vec<(usize, f64)>> = columns
            .iter()
            .map(|c| c.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect())
            .collect();
        let norms: Vec<f64> = columns.iter().map(|c| space.eval(c)).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(BasisTruncation {
            label: label.into(),
            space,
            ambient_dim,
            columns,
            sparse,
            seminormalization: max.max(1.0 / min),
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of basis vectors.
    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn space(&self) -> &SpaceDesc {
        &self.space
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    /// Smallest `c` with `1/c ≤ ‖x_j‖ ≤ c` for every column.
    pub fn seminormalization(&self) -> f64 {
        self.seminormalization
    }

    /// Ambient norm, without dimension checks.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.space.eval(v)
    }

    /// `Σ_j coeffs[j] x_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        self.synthesize_into(coeffs, &mut out);
        out
    }

    pub(crate) fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &a) in coeffs.iter().enumerate() {
            if a != 0.0 {
                self.add_column(j, a, out);
            }
        }
    }

    /// Synthesis restricted to the indices in `set`.
    pub(crate) fn synthesize_subset_into(&self, coeffs: &[f64], set: &[usize], out: &mut [f64]) {
        out.fill(0.0);
        for &j in set {
            if coeffs[j] != 0.0 {
                self.add_column(j, coeffs[j], out);
            }
        }
    }

    pub(crate) fn sparse_column(&self, j: usize) -> &[(usize, f64)] {
        &self.sparse[j]
    }

    #[inline]
    pub(crate) fn add_column(&self, j: usize, scale: f64, out: &mut [f64]) {
        for &(i, x) in &self.sparse[j] {
            out[i] += scale * x;
        }
    }

    /// One past the largest ambient coordinate used by the first `k` columns.
    fn support_end(&self, k: usize) -> usize {
        self.sparse[..k].iter().filter_map(|c| c.last().map(|(i, _)| i + 1)).max().unwrap_or(1)
    }

    /// The first `k` basis vectors, living on the shortest ambient prefix
    /// that contains them.
    pub fn truncate(&self, k: usize) -> Result<BasisTruncation, BasisError> {
        if k == 0 || k > self.d() {
            return Err(BasisError::InvalidArgument(format!(
                "cannot truncate a {}-vector basis to {k}",
                self.d()
            )));
        }
        if k == self.d() {
            return Ok(self.clone());
        }
        let n = self.support_end(k);
        let space = self.space.restrict_prefix(n)?;
        let columns = self.columns[..k].iter().map(|c| c[..n].to_vec()).collect();
        BasisTruncation::new(format!("{}[..{k}]", self.label), space, n, columns)
    }

    pub fn to_document(&self) -> BasisDocument {
        BasisDocument {
            label: self.label.clone(),
            d: self.d(),
            ambient_dim: self.ambient_dim,
            space: self.space.to_string(),
            columns: self.columns.clone(),
        }
    }

    /// Accepts an externally supplied basis (e.g. a construction done
    /// elsewhere) as long as it passes the usual validation.
    pub fn from_document(doc: BasisDocument) -> Result<Self, BasisError> {
        if doc.d != doc.columns.len() {
            return Err(BasisError::InvalidArgument(format!(
                "document declares d={} but has {} columns",
                doc.d,
                doc.columns.len()
            )));
        }
        let space: SpaceDesc = doc.space.parse()?;
        BasisTruncation::new(doc.label, space, doc.ambient_dim, doc.columns)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("basis documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, BasisError> {
        Self::from_document(serde_json::from_str(text)?)
    }
}

/// Serialized form of a basis: `{label, d, ambient_dim, space, columns}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub label: String,
    pub d: usize,
    pub ambient_dim: usize,
    pub space: String,
    pub columns: Vec<Vec<f64>>,
}

pub(crate) fn column_rank(columns: &[Vec<f64>], rows: usize) -> usize {
    if columns.len() > rows {
        // Still report the true rank of the wide matrix.
        let m = DMatrix::from_fn(columns.len(), rows, |j, i| columns[j][i]);
        return rank_of(m);
    }
    let m = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    rank_of(m)
}

fn rank_of(m: DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let tol = RANK_TOLERANCE * max.max(1.0);
    sv.iter().filter(|s| **s > tol).count()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn require_positive(d: usize, what: &str) -> Result<(), BasisError> {
    if d == 0 {
        return Err(BasisError::InvalidArgument(format!("{what}: d must be at least 1")));
    }
    Ok(())
}

/// `e_1, …, e_d` in `space`.
pub fn unit_vector_system(d: usize, space: SpaceDesc) -> Result<BasisTruncation, BasisError> {
    require_positive(d, "unit vector system")?;
    let label = format!("unit:{d}:{space}");
    BasisTruncation::new(label, space, d, (0..d).map(|j| unit(d, j)).collect())
}

/// Lindenstrauss sequence `l_j = e_j - (e_{2j} + e_{2j+1})/2` in `ℓ_1^{2d+1}`
/// (one-based indices in the formula).
pub fn lindenstrauss(d: usize) -> Result<BasisTruncation, BasisError> {
    require_positive(d, "lindenstrauss")?;
    let n = 2 * d + 1;
    let columns = (1..=d)
        .map(|j| {
            let mut c = vec![0.0; n];
            c[j - 1] = 1.0;
            c[2 * j - 1] = -0.5;
            c[2 * j] = -0.5;
            c
        })
        .collect();
    BasisTruncation::new(format!("lindenstrauss:{d}"), SpaceDesc::lp(1.0), n, columns)
}

/// Summing system `s_j = e_1 + … + e_j` in the `c0` truncation of dimension `d`.
pub fn summing(d: usize) -> Result<BasisTruncation, BasisError> {
    require_positive(d, "summing")?;
    let columns = (1..=d).map(|j| (0..d).map(|i| if i < j { 1.0 } else { 0.0 }).collect()).collect();
    BasisTruncation::new(format!("summing:{d}"), SpaceDesc::C0Trunc(d), d, columns)
}

/// Difference system `d_j = e_j - e_{j-1}` (with `e_0 = 0`) in `ℓ_1^d`.
pub fn difference(d: usize) -> Result<BasisTruncation, BasisError> {
    require_positive(d, "difference")?;
    let columns = (0..d)
        .map(|j| {
            let mut c = unit(d, j);
            if j > 0 {
                c[j - 1] = -1.0;
            }
            c
        })
        .collect();
    BasisTruncation::new(format!("difference:{d}"), SpaceDesc::lp(1.0), d, columns)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Source of every vector of `interleave(B0, B1)`: `(x_1,0),(0,y_1),(x_2,0),…`,
/// followed by the unmatched tail of the longer basis in order.
pub fn interleave_positions(d0: usize, d1: usize) -> Vec<(Side, usize)> {
    let common = d0.min(d1);
    let mut out = Vec::with_capacity(d0 + d1);
    for j in 0..common {
        out.push((Side::First, j));
        out.push((Side::Second, j));
    }
    out.extend((common..d0).map(|j| (Side::First, j)));
    out.extend((common..d1).map(|j| (Side::Second, j)));
    out
}

/// Position of `(side, j)` inside `interleave(B0, B1)`.
pub fn interleave_index(side: Side, j: usize, d0: usize, d1: usize) -> usize {
    let common = d0.min(d1);
    match side {
        Side::First if j < common => 2 * j,
        Side::Second if j < common => 2 * j + 1,
        Side::First => 2 * common + (j - common),
        Side::Second => 2 * common + (j - common),
    }
}

/// Direct sum `B0 ⊕ B1` in `X ⊕ Y` with `‖(x, y)‖ = max(‖x‖, ‖y‖)`.
pub fn interleave(
    b0: &BasisTruncation,
    b1: &BasisTruncation,
) -> Result<BasisTruncation, BasisError> {
    let (n0, n1) = (b0.ambient_dim, b1.ambient_dim);
    let n = n0 + n1;
    let columns = interleave_positions(b0.d(), b1.d())
        .into_iter()
        .map(|(side, j)| {
            let mut c = vec![0.0; n];
            match side {
                Side::First => c[..n0].copy_from_slice(b0.column(j)),
                Side::Second => c[n0..].copy_from_slice(b1.column(j)),
            }
            c
        })
        .collect();
    let space = SpaceDesc::MixedSum {
        outer: Exponent::Inf,
        blocks: vec![Block::new(b0.space.clone(), n0), Block::new(b1.space.clone(), n1)],
    };
    BasisTruncation::new(format!("interleave({},{})", b0.label, b1.label), space, n, columns)
}

/// `(r, j)` with `k = j + Σ_{n<r} d_n` and `j < d_r` (all zero-based), or
/// `None` when `k` is past the last block.
pub fn block_index(dims: &[usize], k: usize) -> Option<(usize, usize)> {
    let mut offset = 0;
    for (r, &d) in dims.iter().enumerate() {
        if k < offset + d {
            return Some((r, k - offset));
        }
        offset += d;
    }
    None
}

/// Offset of block `r`: `Σ_{n<r} d_n`.
pub fn block_offset(dims: &[usize], r: usize) -> usize {
    dims[..r].iter().sum()
}

/// Dyadic ladder `2^lo, …, 2^hi`.
pub fn dyadic_dims(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|n| 1usize << n).collect()
}

/// `⊕_n B[d_n]` in `(⊕_n X^{d_n}[B])_p`.
pub fn block_sum(
    b: &BasisTruncation,
    dims: &[usize],
    p: Exponent,
) -> Result<BasisTruncation, BasisError> {
    let blocks: Vec<(usize, BlockMapPair)> = dims
        .iter()
        .map(|&dn| {
            let t = b.truncate(dn)?;
            Ok((dn, BlockMapPair::identity(t.ambient_dim, t.space.clone())))
        })
        .collect::<Result<_, BasisError>>()?;
    let mut out = pq_block_sum(b, &blocks, p, Exponent::Inf)?;
    out.label = format!("blocksum({},dims={},p={})", b.label, dims_label(dims), outer_label(p));
    Ok(out)
}

fn dims_label(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";")
}

fn outer_label(p: Exponent) -> String {
    match p {
        Exponent::Finite(q) => q.to_string(),
        Exponent::Inf => "0".into(),
    }
}

/// A pair of linear maps `(P, Q)` on the ambient coordinates of a truncation
/// `X^{d_n}[B]`, with targets `Y_n` and `Z_n`. Either target may be
/// zero-dimensional (a map with zero rows).
#[derive(Debug, Clone)]
pub struct BlockMapPair {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub target_y: SpaceDesc,
    pub target_z: SpaceDesc,
}

impl BlockMapPair {
    /// `P = Id`, `Q = 0`.
    pub fn identity(ambient_dim: usize, space: SpaceDesc) -> Self {
        BlockMapPair {
            p: DMatrix::identity(ambient_dim, ambient_dim),
            q: DMatrix::zeros(0, ambient_dim),
            target_y: space.clone(),
            target_z: space,
        }
    }

    /// Coordinate restrictions to `[0, split)` and `[split, ambient_dim)`.
    pub fn coordinate_split(
        ambient_dim: usize,
        split: usize,
        target_y: SpaceDesc,
        target_z: SpaceDesc,
    ) -> Self {
        let split = split.min(ambient_dim);
        let p = DMatrix::from_fn(split, ambient_dim, |i, j| if i == j { 1.0 } else { 0.0 });
        let q = DMatrix::from_fn(ambient_dim - split, ambient_dim, |i, j| {
            if i + split == j {
                1.0
            } else {
                0.0
            }
        });
        BlockMapPair { p, q, target_y, target_z }
    }

    fn apply(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum()).collect()
    }
}

type BlockImages = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// `⊕_n B[P_n, Q_n]` in `(⊕ Y_n)_p ⊕ (⊕ Z_n)_q` (max of the two norms).
/// When one side is zero-dimensional in every block it is dropped, so
/// `P = Id, Q = 0` reproduces [`block_sum`] exactly.
pub fn pq_block_sum(
    b: &BasisTruncation,
    blocks: &[(usize, BlockMapPair)],
    p: Exponent,
    q: Exponent,
) -> Result<BasisTruncation, BasisError> {
    if blocks.is_empty() {
        return Err(BasisError::InvalidArgument("no blocks".into()));
    }
    let mut y_blocks = Vec::new();
    let mut z_blocks = Vec::new();
    // Per block: the `P` and `Q` images of its vectors.
    let mut images: Vec<BlockImages> = Vec::with_capacity(blocks.len());
    for (r, (dn, maps)) in blocks.iter().enumerate() {
        if *dn == 0 || *dn > b.d() {
            return Err(BasisError::InvalidArgument(format!(
                "block {r}: dimension {dn} outside 1..={}",
                b.d()
            )));
        }
        let t = b.truncate(*dn)?;
        if maps.p.ncols() != t.ambient_dim || maps.q.ncols() != t.ambient_dim {
            return Err(BasisError::InvalidArgument(format!(
                "block {r}: maps act on dimension {} / {}, truncation lives in {}",
                maps.p.ncols(),
                maps.q.ncols(),
                t.ambient_dim
            )));
        }
        let ys: Vec<Vec<f64>> =
            t.columns().iter().map(|x| BlockMapPair::apply(&maps.p, x)).collect();
        let zs: Vec<Vec<f64>> =
            t.columns().iter().map(|x| BlockMapPair::apply(&maps.q, x)).collect();
        let stacked: Vec<Vec<f64>> =
            ys.iter().zip(&zs).map(|(y, z)| y.iter().chain(z).copied().collect()).collect();
        let rank = column_rank(&stacked, maps.p.nrows() + maps.q.nrows());
        if rank < *dn {
            return Err(BasisError::RankDeficient { rank, d: *dn });
        }
        if maps.p.nrows() > 0 {
            maps.target_y.validate_for_dim(maps.p.nrows())?;
            y_blocks.push(Block::new(maps.target_y.clone(), maps.p.nrows()));
        }
        if maps.q.nrows() > 0 {
            maps.target_z.validate_for_dim(maps.q.nrows())?;
            z_blocks.push(Block::new(maps.target_z.clone(), maps.q.nrows()));
        }
        images.push((ys, zs));
    }
    let y_dim: usize = y_blocks.iter().map(|b| b.dim).sum();
    let z_dim: usize = z_blocks.iter().map(|b| b.dim).sum();
    let n = y_dim + z_dim;
    let mut columns = Vec::new();
    let (mut y_off, mut z_off) = (0, y_dim);
    for (ys, zs) in &images {
        for (y, z) in ys.iter().zip(zs) {
            let mut c = vec![0.0; n];
            c[y_off..y_off + y.len()].copy_from_slice(y);
            c[z_off..z_off + z.len()].copy_from_slice(z);
            columns.push(c);
        }
        y_off += ys.first().map_or(0, |y| y.len());
        z_off += zs.first().map_or(0, |z| z.len());
    }
    let y_space = (!y_blocks.is_empty()).then_some(SpaceDesc::MixedSum { outer: p, blocks: y_blocks });
    let z_space = (!z_blocks.is_empty()).then_some(SpaceDesc::MixedSum { outer: q, blocks: z_blocks });
    let space = match (y_space, z_space) {
        (Some(y), None) => y,
        (None, Some(z)) => z,
        (Some(y), Some(z)) => SpaceDesc::MixedSum {
            outer: Exponent::Inf,
            blocks: vec![Block::new(y, y_dim), Block::new(z, z_dim)],
        },
        (None, None) => {
            return Err(BasisError::InvalidArgument("both block targets are empty".into()))
        }
    };
    let dims: Vec<usize> = blocks.iter().map(|(d, _)| *d).collect();
    let label = format!(
        "pqsum({},dims={},p={},q={})",
        b.label,
        dims_label(&dims),
        outer_label(p),
        outer_label(q)
    );
    BasisTruncation::new(label, space, n, columns)
}

/// `B[d_n]` with `d_n = 2^n` split into coordinate halves of `ℓ_1^{d_n}`,
/// each half carrying its own ℓ_1 norm. `b` must live in `ℓ_1`.
pub fn half_split_sum(
    b: &BasisTruncation,
    dims: &[usize],
    p: Exponent,
    q: Exponent,
) -> Result<BasisTruncation, BasisError> {
    let blocks = dims
        .iter()
        .map(|&dn| {
            let t = b.truncate(dn)?;
            let n = t.ambient_dim();
            let split = n.div_ceil(2);
            Ok((dn, BlockMapPair::coordinate_split(n, split, SpaceDesc::lp(1.0), SpaceDesc::lp(1.0))))
        })
        .collect::<Result<Vec<_>, BasisError>>()?;
    pq_block_sum(b, &blocks, p, q)
}

/// Stand-in for the `ℓ_∞^n ⊕ ℓ_2^{2^n-n-2}` block construction: the unit
/// vectors of dimension `2^n - 2` in block `n` (for `n = 2..=n_max`), split by
/// the canonical projections onto the first `n` and the remaining
/// coordinates. The `ℓ_∞` parts are summed in the `c0` sense, the `ℓ_2`
/// parts in the `ℓ_p` sense.
pub fn canonical_split_instance(n_max: u32, p: Exponent) -> Result<BasisTruncation, BasisError> {
    if n_max < 2 {
        return Err(BasisError::InvalidArgument("n_max must be at least 2".into()));
    }
    let d = (1usize << n_max) - 2;
    let b = unit_vector_system(d, SpaceDesc::lp(2.0))?;
    let blocks = (2..=n_max)
        .map(|n| {
            let dn = (1usize << n) - 2;
            let maps = BlockMapPair::coordinate_split(
                dn,
                n as usize,
                SpaceDesc::linf(),
                SpaceDesc::lp(2.0),
            );
            (dn, maps)
        })
        .collect::<Vec<_>>();
    let mut out = pq_block_sum(&b, &blocks, Exponent::Inf, p)?;
    out.label = format!("canonical-split(n={n_max},p={})", outer_label(p));
    Ok(out)
}

/// `(a_1, a_2, …) ↦ (a_1, 0, a_2, 0, …)`.
pub fn lorentz_lift(v: &[f64]) -> Vec<f64> {
    v.iter().flat_map(|&a| [a, 0.0]).collect()
}

/// `(a_1, a_2, …) ↦ (a_1 - a_2, a_3 - a_4, …)`; an odd tail is paired with 0.
pub fn lorentz_retract(v: &[f64]) -> Vec<f64> {
    v.chunks(2).map(|c| c[0] - c.get(1).copied().unwrap_or(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vectors() {
        let b = unit_vector_system(3, SpaceDesc::lp(2.0)).unwrap();
        assert_eq!(b.columns(), &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let b = unit_vector_system(1, SpaceDesc::Bv).unwrap();
        assert_eq!(b.columns(), &[vec![1.0]]);
        let b = unit_vector_system(4, SpaceDesc::lp(1.0)).unwrap();
        assert!(b.columns().iter().all(|c| b.norm(c) == 1.0));
        assert_eq!(b.seminormalization(), 1.0);
    }

    #[test]
    fn lindenstrauss_columns() {
        let b = lindenstrauss(3).unwrap();
        assert_eq!(b.ambient_dim(), 7);
        assert_eq!(b.column(0), &[1.0, -0.5, -0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(b.columns().iter().all(|c| b.norm(c) == 2.0));
        assert_eq!(lindenstrauss(2).unwrap().d(), 2);
    }

    #[test]
    fn summing_columns() {
        let b = summing(3).unwrap();
        assert_eq!(b.column(1), &[1.0, 1.0, 0.0]);
        assert!(b.columns().iter().all(|c| b.norm(c) == 1.0));
        assert_eq!(summing(1).unwrap().columns(), &[vec![1.0]]);
    }

    #[test]
    fn difference_columns() {
        let b = difference(3).unwrap();
        assert_eq!(
            b.columns(),
            &[vec![1.0, 0.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0]]
        );
        assert_eq!(b.synthesize(&[1.0, 1.0, 1.0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(b.norm(b.column(0)), 1.0);
        assert_eq!(b.norm(b.column(2)), 2.0);
    }

    #[test]
    fn rank_deficiency_detected() {
        let cols = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(
            BasisTruncation::new("bad", SpaceDesc::lp(1.0), 2, cols),
            Err(BasisError::RankDeficient { rank: 1, d: 2 })
        ));
        let cols = vec![vec![1.0], vec![0.5]];
        assert!(BasisTruncation::new("wide", SpaceDesc::lp(1.0), 1, cols).is_err());
    }

    #[test]
    fn interleave_layout() {
        let b0 = unit_vector_system(2, SpaceDesc::lp(1.0)).unwrap();
        let b1 = unit_vector_system(2, SpaceDesc::lp(2.0)).unwrap();
        let b = interleave(&b0, &b1).unwrap();
        assert_eq!(
            b.columns(),
            &[
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0]
            ]
        );
        assert_eq!(b.space().to_string(), "mixed:q=0[lp:1^2,lp:2^2]");
        for (k, (side, j)) in interleave_positions(2, 2).into_iter().enumerate() {
            let orig = match side {
                Side::First => b0.norm(b0.column(j)),
                Side::Second => b1.norm(b1.column(j)),
            };
            assert_eq!(b.norm(b.column(k)), orig);
        }
    }

    #[test]
    fn interleave_unequal_tail() {
        let positions = interleave_positions(3, 1);
        assert_eq!(positions, vec![(Side::First, 0), (Side::Second, 0), (Side::First, 1), (Side::First, 2)]);
        for (k, (side, j)) in positions.into_iter().enumerate() {
            assert_eq!(interleave_index(side, j, 3, 1), k);
        }
        for (k, (side, j)) in interleave_positions(1, 4).into_iter().enumerate() {
            assert_eq!(interleave_index(side, j, 1, 4), k);
        }
    }

    #[test]
    fn block_sum_of_difference() {
        let b = difference(4).unwrap();
        let s = block_sum(&b, &[2, 4], Exponent::Finite(1.0)).unwrap();
        assert_eq!(s.d(), 6);
        assert_eq!(s.space().to_string(), "mixed:q=1[lp:1^2,lp:1^4]");
        assert_eq!(s.column(3), &[0.0, 0.0, -1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn block_sum_single_block_is_truncation() {
        let b = lindenstrauss(4).unwrap();
        for p in [Exponent::Finite(1.0), Exponent::Finite(3.0), Exponent::Inf] {
            let s = block_sum(&b, &[4], p).unwrap();
            assert_eq!(s.columns(), b.columns());
            let v = b.synthesize(&[1.0, -2.0, 0.5, 3.0]);
            assert_eq!(s.norm(&v), b.norm(&v));
        }
    }

    #[test]
    fn block_index_is_a_bijection() {
        let dims = dyadic_dims(1, 6);
        let total: usize = dims.iter().sum();
        for k in 0..total {
            let (r, j) = block_index(&dims, k).unwrap();
            assert!(j < dims[r]);
            assert_eq!(k, j + block_offset(&dims, r));
        }
        assert_eq!(block_index(&dims, total), None);
    }

    #[test]
    fn pq_identity_reduces_to_block_sum() {
        let b = difference(8).unwrap();
        let dims = [2, 4, 8];
        let plain = block_sum(&b, &dims, Exponent::Finite(2.0)).unwrap();
        let blocks: Vec<_> = dims
            .iter()
            .map(|&d| (d, BlockMapPair::identity(d, SpaceDesc::lp(1.0))))
            .collect();
        let pq = pq_block_sum(&b, &blocks, Exponent::Finite(2.0), Exponent::Inf).unwrap();
        assert_eq!(pq.columns(), plain.columns());
        assert_eq!(pq.space(), plain.space());
    }

    #[test]
    fn pq_rank_deficiency() {
        let b = difference(4).unwrap();
        let p = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let maps = BlockMapPair {
            p,
            q: DMatrix::zeros(0, 2),
            target_y: SpaceDesc::lp(1.0),
            target_z: SpaceDesc::lp(1.0),
        };
        assert!(matches!(
            pq_block_sum(&b, &[(2, maps)], Exponent::Finite(1.0), Exponent::Finite(1.0)),
            Err(BasisError::RankDeficient { .. })
        ));
    }

    #[test]
    fn canonical_split_builds() {
        let b = canonical_split_instance(5, Exponent::Finite(2.0)).unwrap();
        // blocks n = 2..=5 with d_n = 2^n - 2
        assert_eq!(b.d(), 2 + 6 + 14 + 30);
        assert_eq!(b.ambient_dim(), b.d());
    }

    #[test]
    fn lift_and_retract() {
        assert_eq!(lorentz_lift(&[1.0, 2.0]), vec![1.0, 0.0, 2.0, 0.0]);
        assert_eq!(lorentz_retract(&[1.0, 0.0, 2.0, 0.0]), vec![1.0, 2.0]);
        assert_eq!(lorentz_retract(&[3.0, 1.0, 2.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn lift_doubles_the_variation() {
        let f = [0.5, -2.0, 1.25];
        let lifted = lorentz_lift(&f);
        let l1: f64 = f.iter().map(|x| x.abs()).sum();
        assert_eq!(crate::spaces::norm(&SpaceDesc::Bv, &lifted).unwrap(), 2.0 * l1);
    }

    #[test]
    fn document_round_trip() {
        let b = lindenstrauss(3).unwrap();
        let back = BasisTruncation::from_json(&b.to_json()).unwrap();
        assert_eq!(back.columns(), b.columns());
        assert_eq!(back.space(), b.space());
        let mut doc = b.to_document();
        doc.d = 5;
        assert!(BasisTruncation::from_document(doc).is_err());
    }
}
