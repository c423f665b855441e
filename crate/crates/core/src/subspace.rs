//! Dense linear algebra for finite-dimensional subspaces.
//!
//! A subspace is carried by a [`Frame`], an orthonormal basis stored as the
//! columns of a matrix. Everything here works over either the reals or the
//! complex numbers, selected by the [`Scalar`] type parameter.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosines at or above `1 - DEFAULT_TOL` are treated as directions lying in
/// the intersection of two subspaces.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Allowed deviation of `B* B` from the identity for a frame basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarField {
    Real,
    Complex,
}

/// Scalar types a [`Frame`] may be built over.
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const FIELD: ScalarField;
}

impl Scalar for f64 {
    const FIELD: ScalarField = ScalarField::Real;
}

impl Scalar for Complex<f64> {
    const FIELD: ScalarField = ScalarField::Complex;
}

pub(crate) fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::BadTolerance(tol))
    }
}

/// Orthonormal basis of a nonzero subspace of `F^ambient_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<T: Scalar = f64> {
    basis: DMatrix<T>,
}

impl<T: Scalar> Frame<T> {
    /// Wraps a matrix whose columns are already orthonormal. Fails if they
    /// are not orthonormal within [`ORTHONORMAL_TOL`].
    pub fn from_orthonormal(basis: DMatrix<T>) -> Result<Self> {
        let (rows, cols) = basis.shape();
        if cols == 0 || rows == 0 {
            return Err(Error::EmptyInput("frame basis"));
        }
        if cols > rows {
            return Err(Error::NotOrthonormal { deviation: f64::INFINITY });
        }
        let gram = basis.adjoint() * &basis;
        let mut deviation = 0.0f64;
        for i in 0..cols {
            for j in 0..cols {
                let target = if i == j { T::one() } else { T::zero() };
                deviation = deviation.max((gram[(i, j)] - target).modulus());
            }
        }
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Frame { basis })
    }

    /// Line spanned by a single nonzero vector.
    pub fn line(v: &DVector<T>) -> Result<Self> {
        orthonormalize(std::slice::from_ref(v), DEFAULT_TOL)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Dimension of the subspace.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn field(&self) -> ScalarField {
        T::FIELD
    }

    /// Basis vectors as the columns of an `ambient_dim x rank` matrix.
    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<DVector<T>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &DVector<T>) -> DVector<T> {
        &self.basis * (self.basis.adjoint() * x)
    }
}

/// Matrix of inner products `<b_i, c_j>` between the two bases.
pub(crate) fn cross_gram<T: Scalar>(f1: &Frame<T>, f2: &Frame<T>) -> Result<DMatrix<T>> {
    same_ambient(f1.ambient_dim(), f2.ambient_dim())?;
    Ok(f1.basis.adjoint() * &f2.basis)
}

fn same_ambient(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Square matrix acting on the ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T: Scalar = f64> {
    entries: DMatrix<T>,
}

impl<T: Scalar> Operator<T> {
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyInput("operator"));
        }
        Ok(Operator { entries })
    }

    pub fn identity(dim: usize) -> Self {
        Operator { entries: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator { entries: DMatrix::zeros(dim, dim) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    /// `self * rhs`, i.e. `rhs` is applied first.
    pub fn compose(&self, rhs: &Operator<T>) -> Result<Operator<T>> {
        same_ambient(self.ambient_dim(), rhs.ambient_dim())?;
        Ok(Operator { entries: &self.entries * &rhs.entries })
    }

    pub fn sub(&self, rhs: &Operator<T>) -> Result<Operator<T>> {
        same_ambient(self.ambient_dim(), rhs.ambient_dim())?;
        Ok(Operator { entries: &self.entries - &rhs.entries })
    }

    pub fn apply(&self, x: &DVector<T>) -> Result<DVector<T>> {
        same_ambient(self.ambient_dim(), x.len())?;
        Ok(&self.entries * x)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator<T>) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (*a - *b).modulus())
            .fold(0.0, f64::max)
    }
}

/// Builds an orthonormal frame for the span of `vectors` by modified
/// Gram-Schmidt with one reorthogonalization pass. Vectors whose residual
/// norm is at most `tol` are dropped.
pub fn orthonormalize<T: Scalar>(vectors: &[DVector<T>], tol: f64) -> Result<Frame<T>> {
    check_tol(tol)?;
    let first = vectors.first().ok_or(Error::EmptyInput("vectors"))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::EmptyInput("vector entries"));
    }
    let mut accepted: Vec<DVector<T>> = Vec::new();
    for v in vectors {
        same_ambient(dim, v.len())?;
        let mut r = v.clone();
        for _pass in 0..2 {
            for q in &accepted {
                let coeff = q.dotc(&r);
                r.axpy(-coeff, q, T::one());
            }
        }
        let norm = r.norm();
        if norm > tol {
            r.unscale_mut(norm);
            accepted.push(r);
        }
        if accepted.len() == dim {
            break;
        }
    }
    if accepted.is_empty() {
        return Err(Error::ZeroSpan);
    }
    Frame::from_orthonormal(DMatrix::from_columns(&accepted))
}

/// Orthogonal projector `sum_i b_i b_i*` onto the frame's subspace.
pub fn projector<T: Scalar>(f: &Frame<T>) -> Operator<T> {
    Operator { entries: &f.basis * f.basis.adjoint() }
}

/// Singular values of the cross-Gram matrix, sorted descending and clamped
/// into `[0, 1]`.
pub fn principal_cosines<T: Scalar>(f1: &Frame<T>, f2: &Frame<T>) -> Result<Vec<f64>> {
    let gram = cross_gram(f1, f2)?;
    let mut cosines: Vec<f64> = gram
        .singular_values()
        .iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    Ok(cosines)
}

/// Friedrichs number of two subspaces: the largest principal cosine once the
/// intersection directions (cosines `>= 1 - tol`) are discarded, or 0 if
/// nothing remains.
pub fn friedrichs_number<T: Scalar>(f1: &Frame<T>, f2: &Frame<T>, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let cosines = principal_cosines(f1, f2)?;
    Ok(cosines
        .into_iter()
        .find(|&c| c < 1.0 - tol)
        .unwrap_or(0.0))
}

/// Largest singular value.
pub fn operator_norm<T: Scalar>(a: &Operator<T>) -> f64 {
    matrix_norm(&a.entries)
}

pub(crate) fn matrix_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    // Exact zeros are common (e.g. vanishing triple products); skip the SVD.
    if m.iter().all(|x| x.is_zero()) {
        return 0.0;
    }
    m.singular_values().max()
}

/// Intersection of all frames, accumulated pairwise. `None` means `{0}`.
pub fn intersection<T: Scalar>(frames: &[Frame<T>], tol: f64) -> Result<Option<Frame<T>>> {
    check_tol(tol)?;
    let (first, rest) = frames.split_first().ok_or(Error::EmptyInput("frames"))?;
    let mut acc = first.clone();
    for f in rest {
        match intersect_pair(&acc, f, tol)? {
            Some(next) => acc = next,
            None => return Ok(None),
        }
    }
    Ok(Some(acc))
}

fn intersect_pair<T: Scalar>(a: &Frame<T>, b: &Frame<T>, tol: f64) -> Result<Option<Frame<T>>> {
    let gram = cross_gram(a, b)?;
    let svd = gram.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= 1.0 - tol)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Ok(None);
    }
    let directions: Vec<DVector<T>> = keep.iter().map(|&i| &a.basis * u.column(i)).collect();
    orthonormalize(&directions, tol).map(Some)
}
