use nalgebra::{DMatrix, DVector};

use super::tag::{structural_tol, GroupTag};
use crate::error::{LieError, Result};
use crate::scalar::Real;

/// A group element in matrix form, tagged with its family.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement<T: Real> {
    tag: GroupTag,
    matrix: DMatrix<T>,
}

/// Tangent coordinates at the identity, tagged with their group.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T: Real> {
    tag: GroupTag,
    coords: DVector<T>,
}

impl<T: Real> GroupElement<T> {
    /// Validates shape and group structure (orthonormality within 1e-9).
    pub fn new(tag: GroupTag, matrix: DMatrix<T>) -> Result<Self> {
        tag.validate()?;
        tag.check_element(&matrix, structural_tol::<T>())?;
        Ok(Self { tag, matrix })
    }

    /// Skips the structural check; the caller guarantees a valid element.
    pub fn from_matrix_unchecked(tag: GroupTag, matrix: DMatrix<T>) -> Self {
        debug_assert_eq!(matrix.nrows(), tag.matrix_size());
        Self { tag, matrix }
    }

    pub fn identity(tag: GroupTag) -> Self {
        let matrix = tag.identity();
        Self { tag, matrix }
    }

    pub fn exp(v: &TangentVector<T>) -> Self {
        let matrix = v.tag.exp(&v.coords).expect("tangent dimension checked at construction");
        Self { tag: v.tag.clone(), matrix }
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<T> {
        self.matrix
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_group(&other.tag)?;
        Ok(Self { tag: self.tag.clone(), matrix: self.tag.compose(&self.matrix, &other.matrix)? })
    }

    pub fn inverse(&self) -> Self {
        let matrix = self.tag.inverse(&self.matrix).expect("shape checked at construction");
        Self { tag: self.tag.clone(), matrix }
    }

    pub fn log(&self) -> Result<TangentVector<T>> {
        Ok(TangentVector { tag: self.tag.clone(), coords: self.tag.log(&self.matrix)? })
    }

    /// Coordinates of `log(X)`, i.e. `logvee`.
    pub fn logvee(&self) -> Result<DVector<T>> {
        self.tag.log(&self.matrix)
    }

    pub fn adjoint(&self) -> DMatrix<T> {
        self.tag.adjoint(&self.matrix).expect("shape checked at construction")
    }

    /// `X exp(v)`.
    pub fn oplus_right(&self, v: &DVector<T>) -> Result<Self> {
        let e = self.tag.exp(v)?;
        Ok(Self { tag: self.tag.clone(), matrix: self.tag.compose(&self.matrix, &e)? })
    }

    /// `exp(v) X`.
    pub fn oplus_left(&self, v: &DVector<T>) -> Result<Self> {
        let e = self.tag.exp(v)?;
        Ok(Self { tag: self.tag.clone(), matrix: self.tag.compose(&e, &self.matrix)? })
    }

    /// `logvee(self^-1 other)`.
    pub fn ominus_right(&self, other: &Self) -> Result<DVector<T>> {
        self.inverse().compose(other)?.logvee()
    }

    /// Geodesic distance `||logvee(self^-1 other)||`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        Ok(self.ominus_right(other)?.norm())
    }

    fn same_group(&self, other: &GroupTag) -> Result<()> {
        if &self.tag != other {
            return Err(LieError::InvalidArgument(format!("group mismatch: {:?} vs {:?}", self.tag, other)));
        }
        Ok(())
    }
}

impl<T: Real> TangentVector<T> {
    pub fn new(tag: GroupTag, coords: DVector<T>) -> Result<Self> {
        tag.validate()?;
        if coords.len() != tag.dim() {
            return Err(LieError::DimensionMismatch { expected: tag.dim(), got: coords.len() });
        }
        Ok(Self { tag, coords })
    }

    pub fn from_slice(tag: GroupTag, coords: &[T]) -> Result<Self> {
        Self::new(tag, DVector::from_column_slice(coords))
    }

    pub fn zero(tag: GroupTag) -> Self {
        let coords = DVector::zeros(tag.dim());
        Self { tag, coords }
    }

    pub fn tag(&self) -> &GroupTag {
        &self.tag
    }

    pub fn coords(&self) -> &DVector<T> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<T> {
        self.coords
    }

    pub fn hat(&self) -> DMatrix<T> {
        self.tag.hat(&self.coords).expect("dimension checked at construction")
    }

    pub fn vee(tag: GroupTag, m: &DMatrix<T>) -> Result<Self> {
        let coords = tag.vee(m)?;
        Ok(Self { tag, coords })
    }

    pub fn exp(&self) -> GroupElement<T> {
        GroupElement::exp(self)
    }

    pub fn left_jacobian(&self) -> DMatrix<T> {
        self.tag.left_jacobian(&self.coords).expect("dimension checked at construction")
    }

    pub fn left_jacobian_inv(&self) -> Result<DMatrix<T>> {
        self.tag.left_jacobian_inv(&self.coords)
    }

    pub fn right_jacobian(&self) -> DMatrix<T> {
        self.tag.right_jacobian(&self.coords).expect("dimension checked at construction")
    }

    pub fn right_jacobian_inv(&self) -> Result<DMatrix<T>> {
        self.tag.right_jacobian_inv(&self.coords)
    }
}
