use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::so3::{self, skew, unskew};
use crate::error::{LieError, Result};
use crate::scalar::Real;

/// Group family of an element or tangent vector.
///
/// Tangent coordinates are linear-first: SE(3) is `(rho, phi)` and
/// SE_k(3) is `(t_1, phi, t_2, .., t_k)`. Composite groups concatenate the
/// coordinates of their factors, and their matrices are block-diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroupTag {
    SO3,
    SE3,
    /// SE_k(3), `k >= 1` translation-like columns.
    SEk3(usize),
    /// Translations R^n in homogeneous form.
    Tn(usize),
    Composite(Vec<GroupTag>),
}

/// Offset of the `i`-th translation-like block inside SE_k(3) coordinates.
#[inline]
pub fn sek_trans_offset(i: usize) -> usize {
    if i == 0 {
        0
    } else {
        3 + 3 * i
    }
}

/// Offset of the rotation block inside SE_k(3) coordinates.
pub const SEK_ROT_OFFSET: usize = 3;

fn v3<T: Real>(v: &DVector<T>, at: usize) -> Vector3<T> {
    Vector3::new(v[at], v[at + 1], v[at + 2])
}

fn rot<T: Real>(m: &DMatrix<T>) -> Matrix3<T> {
    m.fixed_view::<3, 3>(0, 0).into_owned()
}

fn put3<T: Real>(m: &mut DMatrix<T>, r: usize, c: usize, b: &Matrix3<T>) {
    m.fixed_view_mut::<3, 3>(r, c).copy_from(b);
}

impl GroupTag {
    /// Tangent dimension.
    pub fn dim(&self) -> usize {
        match self {
            GroupTag::SO3 => 3,
            GroupTag::SE3 => 6,
            GroupTag::SEk3(k) => 3 + 3 * k,
            GroupTag::Tn(n) => *n,
            GroupTag::Composite(parts) => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Side length of the matrix representation.
    pub fn matrix_size(&self) -> usize {
        match self {
            GroupTag::SO3 => 3,
            GroupTag::SE3 => 4,
            GroupTag::SEk3(k) => 3 + k,
            GroupTag::Tn(n) => n + 1,
            GroupTag::Composite(parts) => parts.iter().map(|p| p.matrix_size()).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupTag::SEk3(0) => Err(LieError::InvalidArgument("SE_k(3) needs k >= 1".into())),
            GroupTag::Tn(0) => Err(LieError::InvalidArgument("T(n) needs n >= 1".into())),
            GroupTag::Composite(parts) if parts.is_empty() => {
                Err(LieError::InvalidArgument("empty composite group".into()))
            }
            GroupTag::Composite(parts) => parts.iter().try_for_each(|p| p.validate()),
            _ => Ok(()),
        }
    }

    /// Number of SE_k(3) translation columns; SE(3) counts as k = 1.
    fn sek(&self) -> Option<usize> {
        match self {
            GroupTag::SE3 => Some(1),
            GroupTag::SEk3(k) => Some(*k),
            _ => None,
        }
    }

    /// `(factor, matrix offset, tangent offset)` for each leaf factor.
    pub fn leaves(&self) -> Vec<(GroupTag, usize, usize)> {
        let mut out = Vec::new();
        self.collect_leaves(0, 0, &mut out);
        out
    }

    fn collect_leaves(&self, m0: usize, t0: usize, out: &mut Vec<(GroupTag, usize, usize)>) {
        match self {
            GroupTag::Composite(parts) => {
                let (mut m, mut t) = (m0, t0);
                for p in parts {
                    p.collect_leaves(m, t, out);
                    m += p.matrix_size();
                    t += p.dim();
                }
            }
            leaf => out.push((leaf.clone(), m0, t0)),
        }
    }

    fn check_tangent<T: Real>(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(LieError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    fn check_matrix<T: Real>(&self, m: &DMatrix<T>) -> Result<()> {
        let n = self.matrix_size();
        if m.nrows() != n || m.ncols() != n {
            return Err(LieError::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
        }
        Ok(())
    }

    pub fn identity<T: Real>(&self) -> DMatrix<T> {
        DMatrix::identity(self.matrix_size(), self.matrix_size())
    }

    /// Applies `f` to every leaf with its matrix block and tangent segment,
    /// assembling a block-diagonal result of the given per-leaf size.
    fn blockwise<T: Real, F>(&self, size: impl Fn(&GroupTag) -> usize, mut f: F) -> Result<DMatrix<T>>
    where
        F: FnMut(&GroupTag, usize, usize) -> Result<DMatrix<T>>,
    {
        let leaves = self.leaves();
        let total: usize = leaves.iter().map(|(g, _, _)| size(g)).sum();
        let mut out = DMatrix::zeros(total, total);
        let mut at = 0;
        for (g, m0, t0) in &leaves {
            let b = f(g, *m0, *t0)?;
            let s = size(g);
            out.view_mut((at, at), (s, s)).copy_from(&b);
            at += s;
        }
        Ok(out)
    }

    pub fn hat<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_tangent(v)?;
        self.blockwise(|g| g.matrix_size(), |g, _, t0| {
            let seg = v.rows(t0, g.dim()).into_owned();
            Ok(leaf_hat(g, &seg))
        })
    }

    pub fn vee<T: Real>(&self, m: &DMatrix<T>) -> Result<DVector<T>> {
        self.check_matrix(m)?;
        let tol = structural_tol::<T>() * (T::one() + m.amax());
        let mut out = DVector::zeros(self.dim());
        let n = self.matrix_size();
        for (g, m0, t0) in self.leaves() {
            let s = g.matrix_size();
            // entries outside the diagonal blocks must vanish
            for r in m0..m0 + s {
                for c in (0..n).filter(|c| *c < m0 || *c >= m0 + s) {
                    if m[(r, c)].abs() > tol {
                        return Err(LieError::InvalidArgument("not a Lie algebra element".into()));
                    }
                }
            }
            let b = m.view((m0, m0), (s, s)).into_owned();
            out.rows_mut(t0, g.dim()).copy_from(&leaf_vee(&g, &b, tol)?);
        }
        Ok(out)
    }

    pub fn exp<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_tangent(v)?;
        self.blockwise(|g| g.matrix_size(), |g, _, t0| Ok(leaf_exp(g, &v.rows(t0, g.dim()).into_owned())))
    }

    pub fn log<T: Real>(&self, m: &DMatrix<T>) -> Result<DVector<T>> {
        self.check_matrix(m)?;
        let mut out = DVector::zeros(self.dim());
        for (g, m0, t0) in self.leaves() {
            let s = g.matrix_size();
            let b = m.view((m0, m0), (s, s)).into_owned();
            out.rows_mut(t0, g.dim()).copy_from(&leaf_log(&g, &b)?);
        }
        Ok(out)
    }

    pub fn compose<T: Real>(&self, a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_matrix(a)?;
        self.check_matrix(b)?;
        self.blockwise(|g| g.matrix_size(), |g, m0, _| {
            let s = g.matrix_size();
            Ok(a.view((m0, m0), (s, s)) * b.view((m0, m0), (s, s)))
        })
    }

    pub fn inverse<T: Real>(&self, m: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_matrix(m)?;
        self.blockwise(|g| g.matrix_size(), |g, m0, _| {
            let s = g.matrix_size();
            Ok(leaf_inverse(g, &m.view((m0, m0), (s, s)).into_owned()))
        })
    }

    pub fn adjoint<T: Real>(&self, m: &DMatrix<T>) -> Result<DMatrix<T>> {
        self.check_matrix(m)?;
        self.blockwise(|g| g.dim(), |g, m0, _| {
            let s = g.matrix_size();
            Ok(leaf_adjoint(g, &m.view((m0, m0), (s, s)).into_owned()))
        })
    }

    /// Small adjoint `ad(v)` with `ad(v) w = vee([hat v, hat w])`.
    pub fn small_adjoint<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_tangent(v)?;
        self.blockwise(|g| g.dim(), |g, _, t0| Ok(leaf_small_adjoint(g, &v.rows(t0, g.dim()).into_owned())))
    }

    pub fn left_jacobian<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_tangent(v)?;
        self.blockwise(|g| g.dim(), |g, _, t0| Ok(leaf_jl(g, &v.rows(t0, g.dim()).into_owned())))
    }

    pub fn left_jacobian_inv<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_tangent(v)?;
        self.blockwise(|g| g.dim(), |g, _, t0| leaf_jl_inv(g, &v.rows(t0, g.dim()).into_owned()))
    }

    /// `J_r(v) = J_l(-v)`.
    pub fn right_jacobian<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.left_jacobian(&-v)
    }

    pub fn right_jacobian_inv<T: Real>(&self, v: &DVector<T>) -> Result<DMatrix<T>> {
        self.left_jacobian_inv(&-v)
    }

    /// Checks that `m` lies on the group up to `tol`.
    pub fn check_element<T: Real>(&self, m: &DMatrix<T>, tol: T) -> Result<()> {
        self.check_matrix(m)?;
        let n = self.matrix_size();
        let bad = |what: &str| Err(LieError::InvalidArgument(format!("not a group element: {what}")));
        for (g, m0, _) in self.leaves() {
            let s = g.matrix_size();
            for r in m0..m0 + s {
                for c in (0..n).filter(|c| *c < m0 || *c >= m0 + s) {
                    if m[(r, c)].abs() > tol {
                        return bad("off-block entry");
                    }
                }
            }
            let b = m.view((m0, m0), (s, s)).into_owned();
            let is_tn = matches!(g, GroupTag::Tn(_));
            if !is_tn {
                let r = rot(&b);
                if (r.transpose() * r - Matrix3::identity()).amax() > tol
                    || (r.determinant() - T::one()).abs() > tol
                {
                    return bad("rotation block is not orthonormal with det 1");
                }
            } else if (b.view((0, 0), (s - 1, s - 1)).into_owned() - DMatrix::identity(s - 1, s - 1)).amax() > tol {
                return bad("translation group must have identity block");
            }
            // bottom rows of the homogeneous part are [0 I]
            for r in (if is_tn { s - 1 } else { 3 })..s {
                for c in 0..s {
                    let want = if r == c { T::one() } else { T::zero() };
                    if (b[(r, c)] - want).abs() > tol {
                        return bad("bottom rows must be [0 I]");
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tolerance for structural checks (1e-9 for `f64`).
pub fn structural_tol<T: Real>() -> T {
    T::lit(1e-9).max(T::default_epsilon() * T::lit(1e3))
}

fn leaf_hat<T: Real>(g: &GroupTag, v: &DVector<T>) -> DMatrix<T> {
    let s = g.matrix_size();
    let mut m = DMatrix::zeros(s, s);
    match g {
        GroupTag::SO3 => put3(&mut m, 0, 0, &skew(&v3(v, 0))),
        GroupTag::Tn(n) => m.view_mut((0, *n), (*n, 1)).copy_from(v),
        _ => {
            let k = g.sek().unwrap();
            put3(&mut m, 0, 0, &skew(&v3(v, SEK_ROT_OFFSET)));
            for i in 0..k {
                m.fixed_view_mut::<3, 1>(0, 3 + i).copy_from(&v3(v, sek_trans_offset(i)));
            }
        }
    }
    m
}

fn leaf_vee<T: Real>(g: &GroupTag, m: &DMatrix<T>, tol: T) -> Result<DVector<T>> {
    let s = g.matrix_size();
    let mut v = DVector::zeros(g.dim());
    let not_algebra = || Err(LieError::InvalidArgument("not a Lie algebra element".into()));
    match g {
        GroupTag::Tn(n) => {
            for r in 0..s {
                for c in 0..*n {
                    if m[(r, c)].abs() > tol {
                        return not_algebra();
                    }
                }
            }
            if m[(*n, *n)].abs() > tol {
                return not_algebra();
            }
            v.copy_from(&m.view((0, *n), (*n, 1)));
        }
        _ => {
            let w = rot(m);
            if (w + w.transpose()).amax() > tol {
                return not_algebra();
            }
            for r in 3..s {
                for c in 0..s {
                    if m[(r, c)].abs() > tol {
                        return not_algebra();
                    }
                }
            }
            let phi = unskew(&w);
            if let Some(k) = g.sek() {
                v.fixed_rows_mut::<3>(SEK_ROT_OFFSET).copy_from(&phi);
                for i in 0..k {
                    v.fixed_rows_mut::<3>(sek_trans_offset(i)).copy_from(&m.fixed_view::<3, 1>(0, 3 + i));
                }
            } else {
                v.copy_from(&phi);
            }
        }
    }
    Ok(v)
}

fn leaf_exp<T: Real>(g: &GroupTag, v: &DVector<T>) -> DMatrix<T> {
    let s = g.matrix_size();
    let mut m = DMatrix::identity(s, s);
    match g {
        GroupTag::SO3 => put3(&mut m, 0, 0, &so3::exp(&v3(v, 0))),
        GroupTag::Tn(n) => m.view_mut((0, *n), (*n, 1)).copy_from(v),
        _ => {
            let k = g.sek().unwrap();
            let phi = v3(v, SEK_ROT_OFFSET);
            let j = so3::left_jacobian(&phi);
            put3(&mut m, 0, 0, &so3::exp(&phi));
            for i in 0..k {
                m.fixed_view_mut::<3, 1>(0, 3 + i).copy_from(&(j * v3(v, sek_trans_offset(i))));
            }
        }
    }
    m
}

fn leaf_log<T: Real>(g: &GroupTag, m: &DMatrix<T>) -> Result<DVector<T>> {
    let mut v = DVector::zeros(g.dim());
    match g {
        GroupTag::SO3 => v.copy_from(&so3::log(&rot(m))?),
        GroupTag::Tn(n) => v.copy_from(&m.view((0, *n), (*n, 1))),
        _ => {
            let k = g.sek().unwrap();
            let phi = so3::log(&rot(m))?;
            let ji = so3::left_jacobian_inv(&phi)?;
            v.fixed_rows_mut::<3>(SEK_ROT_OFFSET).copy_from(&phi);
            for i in 0..k {
                let t: Vector3<T> = m.fixed_view::<3, 1>(0, 3 + i).into_owned();
                v.fixed_rows_mut::<3>(sek_trans_offset(i)).copy_from(&(ji * t));
            }
        }
    }
    Ok(v)
}

fn leaf_inverse<T: Real>(g: &GroupTag, m: &DMatrix<T>) -> DMatrix<T> {
    let s = g.matrix_size();
    let mut out = DMatrix::identity(s, s);
    match g {
        GroupTag::Tn(n) => out.view_mut((0, *n), (*n, 1)).copy_from(&-m.view((0, *n), (*n, 1))),
        _ => {
            let rt = rot(m).transpose();
            put3(&mut out, 0, 0, &rt);
            for c in 3..s {
                let t: Vector3<T> = m.fixed_view::<3, 1>(0, c).into_owned();
                out.fixed_view_mut::<3, 1>(0, c).copy_from(&-(rt * t));
            }
        }
    }
    out
}

fn leaf_adjoint<T: Real>(g: &GroupTag, m: &DMatrix<T>) -> DMatrix<T> {
    let d = g.dim();
    match g {
        GroupTag::Tn(_) => DMatrix::identity(d, d),
        GroupTag::SO3 => {
            let mut a = DMatrix::zeros(3, 3);
            put3(&mut a, 0, 0, &rot(m));
            a
        }
        _ => {
            let k = g.sek().unwrap();
            let r = rot(m);
            let mut a = DMatrix::zeros(d, d);
            put3(&mut a, SEK_ROT_OFFSET, SEK_ROT_OFFSET, &r);
            for i in 0..k {
                let o = sek_trans_offset(i);
                let t: Vector3<T> = m.fixed_view::<3, 1>(0, 3 + i).into_owned();
                put3(&mut a, o, o, &r);
                put3(&mut a, o, SEK_ROT_OFFSET, &(skew(&t) * r));
            }
            a
        }
    }
}

fn leaf_small_adjoint<T: Real>(g: &GroupTag, v: &DVector<T>) -> DMatrix<T> {
    let d = g.dim();
    let mut a = DMatrix::zeros(d, d);
    match g {
        GroupTag::Tn(_) => {}
        GroupTag::SO3 => put3(&mut a, 0, 0, &skew(&v3(v, 0))),
        _ => {
            let k = g.sek().unwrap();
            let sp = skew(&v3(v, SEK_ROT_OFFSET));
            put3(&mut a, SEK_ROT_OFFSET, SEK_ROT_OFFSET, &sp);
            for i in 0..k {
                let o = sek_trans_offset(i);
                put3(&mut a, o, o, &sp);
                put3(&mut a, o, SEK_ROT_OFFSET, &skew(&v3(v, o)));
            }
        }
    }
    a
}

fn leaf_jl<T: Real>(g: &GroupTag, v: &DVector<T>) -> DMatrix<T> {
    let d = g.dim();
    match g {
        GroupTag::Tn(_) => DMatrix::identity(d, d),
        GroupTag::SO3 => {
            let mut a = DMatrix::zeros(3, 3);
            put3(&mut a, 0, 0, &so3::left_jacobian(&v3(v, 0)));
            a
        }
        _ => {
            let k = g.sek().unwrap();
            let phi = v3(v, SEK_ROT_OFFSET);
            let j = so3::left_jacobian(&phi);
            let mut a = DMatrix::zeros(d, d);
            put3(&mut a, SEK_ROT_OFFSET, SEK_ROT_OFFSET, &j);
            for i in 0..k {
                let o = sek_trans_offset(i);
                put3(&mut a, o, o, &j);
                put3(&mut a, o, SEK_ROT_OFFSET, &so3::q_left(&v3(v, o), &phi));
            }
            a
        }
    }
}

fn leaf_jl_inv<T: Real>(g: &GroupTag, v: &DVector<T>) -> Result<DMatrix<T>> {
    let d = g.dim();
    Ok(match g {
        GroupTag::Tn(_) => DMatrix::identity(d, d),
        GroupTag::SO3 => {
            let mut a = DMatrix::zeros(3, 3);
            put3(&mut a, 0, 0, &so3::left_jacobian_inv(&v3(v, 0))?);
            a
        }
        _ => {
            let k = g.sek().unwrap();
            let phi = v3(v, SEK_ROT_OFFSET);
            let ji = so3::left_jacobian_inv(&phi)?;
            let mut a = DMatrix::zeros(d, d);
            put3(&mut a, SEK_ROT_OFFSET, SEK_ROT_OFFSET, &ji);
            for i in 0..k {
                let o = sek_trans_offset(i);
                put3(&mut a, o, o, &ji);
                put3(&mut a, o, SEK_ROT_OFFSET, &(-(ji * so3::q_left(&v3(v, o), &phi) * ji)));
            }
            a
        }
    })
}
