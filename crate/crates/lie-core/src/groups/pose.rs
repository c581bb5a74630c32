use std::ops::Mul;

use nalgebra::{DMatrix, Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use super::so3::{self, skew};
use super::{GroupElement, GroupTag};
use crate::error::Result;
use crate::scalar::Real;

/// Fixed-size SE(3) element for kinematics and hot loops.
///
/// Tangent vectors are `(rho, phi)`, matching [`GroupTag::SE3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T: Real> {
    pub rot: Matrix3<T>,
    pub trans: Vector3<T>,
}

impl<T: Real> Pose<T> {
    pub fn new(rot: Matrix3<T>, trans: Vector3<T>) -> Self {
        Self { rot, trans }
    }

    pub fn identity() -> Self {
        Self { rot: Matrix3::identity(), trans: Vector3::zeros() }
    }

    pub fn from_translation(trans: Vector3<T>) -> Self {
        Self { rot: Matrix3::identity(), trans }
    }

    pub fn from_rotation(rot: Matrix3<T>) -> Self {
        Self { rot, trans: Vector3::zeros() }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rot.transpose();
        Self { rot: rt, trans: -(rt * self.trans) }
    }

    pub fn transform_point(&self, p: &Vector3<T>) -> Vector3<T> {
        self.rot * p + self.trans
    }

    pub fn exp(xi: &Vector6<T>) -> Self {
        let rho = xi.fixed_rows::<3>(0).into_owned();
        let phi = xi.fixed_rows::<3>(3).into_owned();
        Self { rot: so3::exp(&phi), trans: so3::left_jacobian(&phi) * rho }
    }

    pub fn log(&self) -> Result<Vector6<T>> {
        let phi = so3::log(&self.rot)?;
        let rho = so3::left_jacobian_inv(&phi)? * self.trans;
        Ok(Vector6::new(rho.x, rho.y, rho.z, phi.x, phi.y, phi.z))
    }

    /// `[[R, S(p) R], [0, R]]`.
    pub fn adjoint(&self) -> Matrix6<T> {
        let mut a = Matrix6::zeros();
        a.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rot);
        a.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rot);
        a.fixed_view_mut::<3, 3>(0, 3).copy_from(&(skew(&self.trans) * self.rot));
        a
    }

    pub fn to_homogeneous(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rot);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.trans);
        m
    }

    pub fn to_element(&self) -> GroupElement<T> {
        let m = self.to_homogeneous();
        GroupElement::from_matrix_unchecked(GroupTag::SE3, DMatrix::from_column_slice(4, 4, m.as_slice()))
    }

    pub fn from_homogeneous(m: &DMatrix<T>) -> Self {
        Self {
            rot: m.fixed_view::<3, 3>(0, 0).into_owned(),
            trans: m.fixed_view::<3, 1>(0, 3).into_owned(),
        }
    }
}

impl<T: Real> Mul for Pose<T> {
    type Output = Pose<T>;

    fn mul(self, rhs: Pose<T>) -> Pose<T> {
        Pose { rot: self.rot * rhs.rot, trans: self.rot * rhs.trans + self.trans }
    }
}

impl<'a, T: Real> Mul<&'a Pose<T>> for &'a Pose<T> {
    type Output = Pose<T>;

    fn mul(self, rhs: &Pose<T>) -> Pose<T> {
        *self * *rhs
    }
}
