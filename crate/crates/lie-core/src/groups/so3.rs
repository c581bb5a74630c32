//! Closed forms on SO(3) shared by every group family.
//!
//! Coefficients that suffer cancellation near the identity switch to their
//! Taylor series below [`series_threshold`].

use nalgebra::{Matrix3, Vector3};

use crate::error::{LieError, Result};
use crate::scalar::Real;

/// Distance to pi below which the rotation logarithm is reported as ambiguous.
pub const PI_GUARD: f64 = 1e-9;

/// Angle below which series expansions replace the closed forms.
///
/// `eps^(1/6)` keeps the truncation error of the fourth-order series at
/// machine precision (about 2.5e-3 for `f64`, 0.07 for `f32`).
#[inline]
pub fn series_threshold<T: Real>() -> T {
    T::default_epsilon().powf(T::lit(1.0 / 6.0))
}

#[inline]
pub fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`skew`]; reads only the lower/upper entries, no validation.
#[inline]
pub fn unskew<T: Real>(m: &Matrix3<T>) -> Vector3<T> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

struct Coeffs<T> {
    /// sin(t)/t
    a: T,
    /// (1 - cos t)/t^2
    b: T,
    /// (t - sin t)/t^3
    c: T,
}

fn coeffs<T: Real>(theta: T) -> Coeffs<T> {
    let t2 = theta * theta;
    let t4 = t2 * t2;
    if theta < series_threshold::<T>() {
        Coeffs {
            a: T::one() - t2 / T::lit(6.0) + t4 / T::lit(120.0),
            b: T::lit(0.5) - t2 / T::lit(24.0) + t4 / T::lit(720.0),
            c: T::lit(1.0 / 6.0) - t2 / T::lit(120.0) + t4 / T::lit(5040.0),
        }
    } else {
        let s = theta.sin();
        let half = theta * T::lit(0.5);
        let sh = half.sin() / half;
        Coeffs {
            a: s / theta,
            // half-angle form avoids the 1 - cos t cancellation
            b: T::lit(0.5) * sh * sh,
            c: (theta - s) / (t2 * theta),
        }
    }
}

pub fn exp<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let k = coeffs(phi.norm());
    let s = skew(phi);
    Matrix3::identity() + s * k.a + s * s * k.b
}

/// Principal logarithm, `||phi|| <= pi`.
pub fn log<T: Real>(r: &Matrix3<T>) -> Result<Vector3<T>> {
    let half = T::lit(0.5);
    let w = unskew(&(r - r.transpose()));
    let cos = ((r.trace() - T::one()) * half).clamp(-T::one(), T::one());
    let sin = w.norm() * half;
    let theta = sin.atan2(cos);

    if theta < series_threshold::<T>() {
        let t2 = theta * theta;
        let f = T::one() + t2 / T::lit(6.0) + T::lit(7.0 / 360.0) * t2 * t2;
        return Ok(w * (half * f));
    }
    if cos > T::lit(-0.99) {
        return Ok(w * (theta / (T::lit(2.0) * sin)));
    }

    // Near pi: the symmetric part is cos I + (1 - cos) a a^T.
    let sym = (r + r.transpose()) * half - Matrix3::identity() * cos;
    let (mut i, mut best) = (0, sym[(0, 0)]);
    for j in 1..3 {
        if sym[(j, j)] > best {
            i = j;
            best = sym[(j, j)];
        }
    }
    let mut axis: Vector3<T> = sym.column(i).into_owned();
    axis /= axis.norm();
    if axis.dot(&w) < T::zero() {
        axis = -axis;
    }
    if T::pi() - theta < T::lit(PI_GUARD) {
        let a = [axis.x.to_f64_lossy(), axis.y.to_f64_lossy(), axis.z.to_f64_lossy()];
        return Err(LieError::AmbiguousLog {
            angle: theta.to_f64_lossy(),
            axes: [a, [-a[0], -a[1], -a[2]]],
        });
    }
    Ok(axis * theta)
}

pub fn left_jacobian<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    let k = coeffs(phi.norm());
    let s = skew(phi);
    Matrix3::identity() + s * k.b + s * s * k.c
}

pub fn right_jacobian<T: Real>(phi: &Vector3<T>) -> Matrix3<T> {
    left_jacobian(&-phi)
}

pub fn left_jacobian_inv<T: Real>(phi: &Vector3<T>) -> Result<Matrix3<T>> {
    let theta = phi.norm();
    let e = if theta < series_threshold::<T>() {
        let t2 = theta * theta;
        T::lit(1.0 / 12.0) + t2 / T::lit(720.0) + t2 * t2 / T::lit(30240.0)
    } else {
        let (sh, ch) = (theta * T::lit(0.5)).sin_cos();
        if sh.abs() < T::lit(PI_GUARD) {
            return Err(LieError::SingularJacobian { angle: theta.to_f64_lossy() });
        }
        T::one() / (theta * theta) - ch / (T::lit(2.0) * theta * sh)
    };
    let s = skew(phi);
    Ok(Matrix3::identity() - s * T::lit(0.5) + s * s * e)
}

pub fn right_jacobian_inv<T: Real>(phi: &Vector3<T>) -> Result<Matrix3<T>> {
    left_jacobian_inv(&-phi)
}

/// Evaluates `sum_n a(n) t2^n` for `n < terms`.
fn power_series<T: Real>(t2: T, terms: usize, a: impl Fn(usize) -> f64) -> T {
    (0..terms).rev().fold(T::zero(), |acc, n| acc * t2 + T::lit(a(n)))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Below this angle the `Q_l` coefficients are summed as series: their
/// closed forms cancel against constants of order one.
const Q_SERIES_ANGLE: f64 = 0.5;

/// Off-diagonal block of the SE(3) left Jacobian for tangent `(rho, phi)`.
pub fn q_left<T: Real>(rho: &Vector3<T>, phi: &Vector3<T>) -> Matrix3<T> {
    let theta = phi.norm();
    let t2 = theta * theta;
    let t4 = t2 * t2;
    let (c1, c2, c3) = if theta < T::lit(Q_SERIES_ANGLE) {
        let sign = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
        (
            power_series(t2, 12, |n| sign(n) / factorial(2 * n + 3)),
            power_series(t2, 12, |n| sign(n) / factorial(2 * n + 4)),
            power_series(t2, 12, |n| sign(n) * (2 * n + 2) as f64 / (2.0 * factorial(2 * n + 5))),
        )
    } else {
        let (s, c) = theta.sin_cos();
        (
            (theta - s) / (t2 * theta),
            (t2 + T::lit(2.0) * c - T::lit(2.0)) / (T::lit(2.0) * t4),
            (T::lit(2.0) * theta - T::lit(3.0) * s + theta * c) / (T::lit(2.0) * t4 * theta),
        )
    };
    let p = skew(phi);
    let r = skew(rho);
    let pr = p * r;
    let rp = r * p;
    let prp = pr * p;
    r * T::lit(0.5)
        + (pr + rp + prp) * c1
        + (p * pr + rp * p - prp * T::lit(3.0)) * c2
        + (prp * p + p * prp) * c3
}

/// Rotation from roll/pitch/yaw, `R = Rz(yaw) Ry(pitch) Rx(roll)`.
pub fn rpy_to_rotation<T: Real>(roll: T, pitch: T, yaw: T) -> Matrix3<T> {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Matrix3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// Inverse of [`rpy_to_rotation`]. Fails within 1e-6 rad of gimbal lock.
pub fn rotation_to_rpy<T: Real>(r: &Matrix3<T>) -> Result<(T, T, T)> {
    let pitch = (-r[(2, 0)]).atan2((r[(0, 0)] * r[(0, 0)] + r[(1, 0)] * r[(1, 0)]).sqrt());
    if T::frac_pi_2() - pitch.abs() < T::lit(1e-6) {
        return Err(LieError::GimbalLock { pitch: pitch.to_f64_lossy() });
    }
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    Ok((roll, pitch, yaw))
}

/// Projects a near-rotation onto SO(3) through its polar factor.
pub fn orthonormalize<T: Real>(r: &Matrix3<T>) -> Matrix3<T> {
    let svd = r.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < T::zero() {
        d[(2, 2)] = -T::one();
    }
    u * d * vt
}
