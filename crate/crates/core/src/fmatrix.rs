//! Friedrichs matrices: validation, extraction from a collection of
//! subspaces, and realization of an admissible matrix by concrete subspaces.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subspace::{
    check_tol, cross_gram, friedrichs_number, intersection, matrix_norm, Frame, Scalar,
    ScalarField,
};

/// A broken invariant of a candidate Friedrichs matrix. Indices are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    TooSmall { n: usize },
    NotSymmetric { row: usize, col: usize },
    NonZeroDiagonal { index: usize },
    OutOfRange { row: usize, col: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooSmall { n } => write!(f, "matrix too small: n = {n} < 2"),
            Violation::NotSymmetric { row, col } => {
                write!(f, "not symmetric at ({row},{col})")
            }
            Violation::NonZeroDiagonal { index } => {
                write!(f, "nonzero diagonal at ({index},{index})")
            }
            Violation::OutOfRange { row, col, value } => {
                write!(f, "entry out of range at ({row},{col}): {value}")
            }
        }
    }
}

/// Checks every Friedrichs-matrix invariant and returns all violations.
/// An empty list means the matrix is admissible.
pub fn validate(entries: &DMatrix<f64>) -> Result<Vec<Violation>> {
    let (rows, cols) = entries.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    let n = rows;
    let mut out = Vec::new();
    if n < 2 {
        out.push(Violation::TooSmall { n });
    }
    for k in 0..n {
        if entries[(k, k)] != 0.0 {
            out.push(Violation::NonZeroDiagonal { index: k + 1 });
        }
        for l in 0..n {
            if k == l {
                continue;
            }
            let v = entries[(k, l)];
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::OutOfRange { row: k + 1, col: l + 1, value: v });
            }
            if k < l && v != entries[(l, k)] {
                out.push(Violation::NotSymmetric { row: k + 1, col: l + 1 });
            }
        }
    }
    Ok(out)
}

/// Symmetric matrix of pairwise Friedrichs numbers with zero diagonal and
/// off-diagonal entries in `[0, 1]`. Always valid once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct FriedrichsMatrix {
    entries: DMatrix<f64>,
}

impl FriedrichsMatrix {
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let violations = validate(&entries)?;
        if violations.is_empty() {
            Ok(FriedrichsMatrix { entries })
        } else {
            Err(Error::InvalidMatrix(violations))
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare { rows: n, cols: bad.len() });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_matrix(DMatrix::from_row_slice(n, n, &flat))
    }

    /// Builds a matrix from a function of the (0-based) upper-triangle pair.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in k + 1..n {
                let v = f(k, l);
                m[(k, l)] = v;
                m[(l, k)] = v;
            }
        }
        Self::from_matrix(m)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry at 0-based position `(k, l)`.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[(k, l)]
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Off-diagonal values `(k, l, c_kl)` with `k < l`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |k| (k + 1..n).map(move |l| (k, l, self.get(k, l))))
    }

    pub fn has_unit_entry(&self) -> bool {
        self.upper_entries().any(|(_, _, v)| v == 1.0)
    }

    /// Max entrywise absolute difference to another matrix of the same size.
    pub fn max_abs_diff(&self, other: &FriedrichsMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl Serialize for FriedrichsMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixFile { n: self.n(), entries: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FriedrichsMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixFile::deserialize(d)?;
        if raw.entries.len() != raw.n {
            return Err(serde::de::Error::custom(format!(
                "declared n = {} but {} rows given",
                raw.n,
                raw.entries.len()
            )));
        }
        FriedrichsMatrix::from_rows(&raw.entries).map_err(serde::de::Error::custom)
    }
}

/// Ambient space plus `N >= 2` subspaces of it.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation<T: Scalar = f64> {
    ambient_dim: usize,
    frames: Vec<Frame<T>>,
}

impl<T: Scalar> Constellation<T> {
    pub fn new(frames: Vec<Frame<T>>) -> Result<Self> {
        if frames.len() < 2 {
            return Err(Error::TooFew { n: frames.len(), min: 2 });
        }
        let ambient_dim = frames[0].ambient_dim();
        for f in &frames {
            if f.ambient_dim() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, found: f.ambient_dim() });
            }
        }
        Ok(Constellation { ambient_dim, frames })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Frame<T>] {
        &self.frames
    }

    pub fn field(&self) -> ScalarField {
        T::FIELD
    }
}

/// Pairwise Friedrichs numbers of a constellation, symmetrized by averaging
/// the `(k, l)` and `(l, k)` computations.
pub fn from_constellation<T: Scalar>(k: &Constellation<T>, tol: f64) -> Result<FriedrichsMatrix> {
    check_tol(tol)?;
    let frames = k.frames();
    FriedrichsMatrix::try_from_fn(frames.len(), |a, b| {
        let ab = friedrichs_number(&frames[a], &frames[b], tol)?;
        let ba = friedrichs_number(&frames[b], &frames[a], tol)?;
        Ok(0.5 * (ab + ba))
    })
}

impl FriedrichsMatrix {
    fn try_from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Result<f64>) -> Result<Self> {
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for l in k + 1..n {
                let v = f(k, l)?;
                m[(k, l)] = v;
                m[(l, k)] = v;
            }
        }
        Self::from_matrix(m)
    }
}

/// Position of the basis vector `e_{k,l}` (0-based, `k != l`) in the
/// lexicographic ordering of ordered pairs.
fn pair_index(n: usize, k: usize, l: usize) -> usize {
    k * (n - 1) + if l < k { l } else { l - 1 }
}

/// Builds `N` subspaces of `F^{N(N-1)}` whose Friedrichs matrix is exactly
/// `c`. Subspace `k` is spanned by the orthonormal vectors
///
/// ```text
/// x_{k,l} = e_{k,l}                                   (k < l)
/// x_{k,l} = c_{l,k} e_{l,k} + sqrt(1 - c_{l,k}^2) e_{k,l}   (l < k)
/// ```
///
/// The subspaces intersect pairwise trivially and, for `N >= 3`, every
/// product of three distinct projectors vanishes. Entries equal to 1 are
/// refused; see [`realize_clamped`].
pub fn realize<T: Scalar>(c: &FriedrichsMatrix) -> Result<Constellation<T>> {
    if let Some((k, l, _)) = c.upper_entries().find(|&(_, _, v)| v >= 1.0) {
        return Err(Error::UnitEntry { row: k + 1, col: l + 1 });
    }
    let n = c.n();
    let dim = n * (n - 1);
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let mut basis = DMatrix::<T>::zeros(dim, n - 1);
        for (col, l) in (0..n).filter(|&l| l != k).enumerate() {
            if k < l {
                basis[(pair_index(n, k, l), col)] = T::one();
            } else {
                let c_lk = c.get(l, k);
                basis[(pair_index(n, l, k), col)] = T::from_real(c_lk);
                basis[(pair_index(n, k, l), col)] = T::from_real((1.0 - c_lk * c_lk).sqrt());
            }
        }
        frames.push(Frame::from_orthonormal(basis)?);
    }
    Constellation::new(frames)
}

/// Like [`realize`], but entries equal to 1 are first replaced by `1 - eta`.
pub fn realize_clamped<T: Scalar>(c: &FriedrichsMatrix, eta: f64) -> Result<Constellation<T>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParams(format!("clamp eta must lie in (0, 1), got {eta}")));
    }
    let clamped = FriedrichsMatrix::from_fn(c.n(), |k, l| c.get(k, l).min(1.0 - eta))?;
    realize(&clamped)
}

/// Largest `||P_k P_l P_m||` over mutually distinct triples.
pub fn max_triple_product_norm<T: Scalar>(k: &Constellation<T>) -> Result<f64> {
    let n = k.len();
    if n < 3 {
        return Err(Error::TooFew { n, min: 3 });
    }
    let frames = k.frames();
    let mut grams = vec![vec![None; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                grams[a][b] = Some(cross_gram(&frames[a], &frames[b])?);
            }
        }
    }
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            for m in (0..n).filter(|&m| m != a && m != b) {
                // P_a P_b P_m = B_a (G_ab G_bm) B_m*, and the outer factors are isometries.
                let core = grams[a][b].as_ref().unwrap() * grams[b][m].as_ref().unwrap();
                worst = worst.max(matrix_norm(&core));
            }
        }
    }
    Ok(worst)
}

/// True iff every product of three mutually distinct projectors has
/// operator norm at most `tol`.
pub fn triple_products_vanish<T: Scalar>(k: &Constellation<T>, tol: f64) -> Result<bool> {
    check_tol(tol)?;
    Ok(max_triple_product_norm(k)? <= tol)
}

/// True iff `M_k ∩ M_l = {0}` for every pair `k != l`.
pub fn pairwise_intersections_trivial<T: Scalar>(k: &Constellation<T>, tol: f64) -> Result<bool> {
    let frames = k.frames();
    for a in 0..frames.len() {
        for b in a + 1..frames.len() {
            if intersection(&[frames[a].clone(), frames[b].clone()], tol)?.is_some() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Constellation of one-dimensional subspaces spanned by the given vectors.
pub fn lines<T: Scalar>(vectors: &[DVector<T>]) -> Result<Constellation<T>> {
    let frames = vectors.iter().map(Frame::line).collect::<Result<Vec<_>>>()?;
    Constellation::new(frames)
}
