//! Finite-difference oracles for the filter Jacobians. Each function draws
//! a random state and returns the named gaps between analytic and numeric
//! matrices, relative to `max(1, |analytic|)`.

use legged::estimators::diligent::{self, DiligentState, MotionInput};
use legged::estimators::human::{self, HumanState};
use lie_core::groups::{skew, so3};
use lie_core::{GroupElement64, Pose64};
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand_chacha::ChaCha8Rng;

use super::{central, diligent_state, human_state, relative_gap, vec3};

pub const H: f64 = 1e-6;
pub const TOL: f64 = 1e-5;

pub type Gaps = Vec<(String, f64)>;

pub fn gravity() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -9.80665)
}

pub fn input(rng: &mut ChaCha8Rng) -> MotionInput {
    MotionInput { acc: vec3(rng, 5.0) - gravity(), gyro: vec3(rng, 1.0), dt: 0.01, contacts: [true, false] }
}

fn se3_log(p: &Pose64) -> DVector<f64> {
    DVector::from_column_slice(p.log().unwrap().as_slice())
}

fn so3_log(r: &Matrix3<f64>) -> DVector<f64> {
    DVector::from_column_slice(so3::log(r).unwrap().as_slice())
}

/// `X_hat exp(e)` for the left error, `exp(e) X_hat` for the right one.
pub fn perturb(x: &GroupElement64, e: &DVector<f64>, left: bool) -> GroupElement64 {
    if left {
        x.oplus_right(e).unwrap()
    } else {
        x.oplus_left(e).unwrap()
    }
}

/// Error rate `d/dt log(eta)` at `eta = exp(e)` for a flow with matrix
/// velocity `rate`, from `vee(X^-1 dX - eta^-1 (X_hat^-1 dX_hat) eta)` on
/// the left or `vee(dX X^-1 - eta (dX_hat X_hat^-1) eta^-1)` on the right.
pub fn error_rate(
    xhat: &GroupElement64,
    e: &DVector<f64>,
    left: bool,
    rate: &impl Fn(&GroupElement64) -> DMatrix<f64>,
) -> DVector<f64> {
    let tag = xhat.tag();
    let x = perturb(xhat, e, left);
    let (xi, xhi) = (x.inverse(), xhat.inverse());
    let (dx, dxh) = (rate(&x), rate(xhat));
    let m = if left {
        let eta = xhi.compose(&x).unwrap();
        xi.matrix() * &dx - eta.inverse().matrix() * (xhi.matrix() * &dxh) * eta.matrix()
    } else {
        let eta = x.compose(&xhi).unwrap();
        &dx * xi.matrix() - eta.matrix() * (&dxh * xhi.matrix()) * eta.inverse().matrix()
    };
    tag.vee(&m).unwrap()
}

fn put(m: &mut DMatrix<f64>, r: usize, c: usize, b: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(r, c).copy_from(b);
}

/// Matrix velocity of the kinematic-inertial state under the IMU.
fn diligent_rate(x: &GroupElement64, u: &MotionInput) -> DMatrix<f64> {
    let s = DiligentState::from_element(x).unwrap();
    let n = x.matrix().nrows();
    let mut m = DMatrix::zeros(n, n);
    put(&mut m, 0, 0, &(s.r * skew(&(u.gyro - s.bg))));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&s.v);
    m.fixed_view_mut::<3, 1>(0, 4).copy_from(&(s.r * (u.acc - s.ba) + gravity()));
    m
}

/// Matrix velocity of the human state: `dp = v`, `dR = R S(omega)`.
fn human_rate(x: &GroupElement64) -> DMatrix<f64> {
    let s = HumanState::from_element(x).unwrap();
    let n = x.matrix().nrows();
    let mut m = DMatrix::zeros(n, n);
    put(&mut m, 0, 0, &(s.r * skew(&s.omega)));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&s.v);
    m
}

// Columns of the human state matrix.
const COL_P: usize = 3;
const COL_V: usize = 4;
const ROW_OMEGA: usize = 13;
const HOM_OMEGA: usize = 16;
const SIZE: usize = 23;

fn col_vertex(i: usize) -> usize {
    5 + i
}

fn selector(start: usize) -> DMatrix<f64> {
    let mut pi = DMatrix::zeros(3, SIZE);
    pi.fixed_view_mut::<3, 3>(0, start).fill_with_identity();
    pi
}

fn b_vector(entries: &[(usize, f64)]) -> DVector<f64> {
    let mut b = DVector::zeros(SIZE);
    for (i, v) in entries {
        b[*i] = *v;
    }
    b
}

/// Innovation of a right-invariant observation `z = X^-1 b` at `exp(e) X_hat`.
fn right_invariant(xhat: &GroupElement64, b: &DVector<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    central(human::DIM, H, |e| {
        let x = perturb(xhat, e, false);
        pi * (xhat.matrix() * (x.inverse().matrix() * b) - b)
    })
}

/// Innovation of a left-invariant observation `z = X b` at `X_hat exp(e)`.
fn left_invariant(xhat: &GroupElement64, b: &DVector<f64>, pi: &DMatrix<f64>) -> DMatrix<f64> {
    central(human::DIM, H, |e| {
        let x = perturb(xhat, e, true);
        pi * (xhat.inverse().matrix() * (x.matrix() * b) - b)
    })
}

fn gap(name: impl Into<String>, analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> (String, f64) {
    (name.into(), relative_gap(analytic, numeric))
}

/// Discrete motion Jacobians of both diligent variants.
pub fn motion(rng: &mut ChaCha8Rng, landmarks: usize) -> Gaps {
    let s = diligent_state(rng, landmarks);
    let u = input(rng);
    let x = s.to_element();
    [true, false]
        .into_iter()
        .map(|left| {
            let numeric = central(s.dim(), H, |e| {
                diligent::omega(&DiligentState::from_element(&perturb(&x, e, left)).unwrap(), &u, &gravity())
            });
            let analytic =
                if left { diligent::jacobian_left(&s, &u, &gravity()) } else { diligent::jacobian_rie(&s, &u, &gravity()) };
            gap(if left { "motion left" } else { "motion rie" }, &analytic, &numeric)
        })
        .collect()
}

/// Foot pose measurement Jacobians of both diligent variants.
pub fn foot_measurement(rng: &mut ChaCha8Rng) -> Gaps {
    let s = diligent_state(rng, 1);
    let x = s.to_element();
    let mut out = Vec::new();
    for f in 0..2 {
        let predicted = diligent::foot_measurement(&s, f).inverse();
        for left in [true, false] {
            let numeric = central(s.dim(), H, |e| {
                let moved = DiligentState::from_element(&perturb(&x, e, left)).unwrap();
                se3_log(&(predicted * diligent::foot_measurement(&moved, f)))
            });
            let analytic = if left { diligent::h_left(&s, f) } else { diligent::h_rie(&s, f) };
            out.push(gap(format!("foot {f} {}", if left { "left" } else { "rie" }), &analytic, &numeric));
        }
    }
    out
}

/// Continuous error dynamics of both codiligent variants.
pub fn error_dynamics(rng: &mut ChaCha8Rng) -> Gaps {
    let s = diligent_state(rng, 0);
    let u = input(rng);
    let x = s.to_element();
    let rate = |y: &GroupElement64| diligent_rate(y, &u);
    let lie = central(s.dim(), H, |e| error_rate(&x, e, true, &rate));
    let rie = central(s.dim(), H, |e| error_rate(&x, e, false, &rate));
    vec![gap("F_c left", &diligent::fc_lie(&s, &u), &lie), gap("F_c rie", &diligent::fc_rie(&s, &gravity()), &rie)]
}

pub fn human_error_dynamics(rng: &mut ChaCha8Rng) -> Gaps {
    let s = human_state(rng);
    let x = s.to_element();
    let numeric = central(human::DIM, H, |e| error_rate(&x, e, false, &human_rate));
    vec![gap("human F_c", &human::fc(&s), &numeric)]
}

/// Invariant observations of the human filter, for vertex `i`.
pub fn human_invariant(rng: &mut ChaCha8Rng, i: usize) -> Gaps {
    let x = human_state(rng).to_element();
    let right = |b: &[(usize, f64)], row| right_invariant(&x, &b_vector(b), &selector(row));
    let left = |b: &[(usize, f64)], row| left_invariant(&x, &b_vector(b), &selector(row));
    vec![
        gap("relative position", &human::h_relative_position(i), &right(&[(COL_P, 1.0), (col_vertex(i), -1.0)], 0)),
        gap("zupt linear", &human::h_zupt_linear(), &right(&[(COL_V, -1.0)], 0)),
        gap("angular velocity right", &human::h_angular_velocity(), &right(&[(HOM_OMEGA, -1.0)], ROW_OMEGA)),
        gap("angular velocity left", &human::h_angular_velocity(), &left(&[(HOM_OMEGA, 1.0)], ROW_OMEGA)),
        gap("terrain left", &human::h_terrain_left(i), &left(&[(col_vertex(i), 1.0)], 0)),
    ]
}

/// Group-valued observations of the human filter, for vertex `i` and foot `f`.
pub fn human_group(rng: &mut ChaCha8Rng, i: usize, f: usize) -> Gaps {
    let s = human_state(rng);
    let x = s.to_element();
    let at = |e: &DVector<f64>| HumanState::from_element(&perturb(&x, e, false)).unwrap();

    let terrain = central(human::DIM, H, |e| DVector::from_column_slice((at(e).d[i] - s.d[i]).as_slice()));
    let predicted = (s.r.transpose() * s.feet[f]).transpose();
    let rotation = central(human::DIM, H, |e| {
        let y = at(e);
        so3_log(&(predicted * y.r.transpose() * y.feet[f]))
    });
    let plane = central(human::DIM, H, |e| so3_log(&(s.feet[f].transpose() * at(e).feet[f])));
    vec![
        gap("terrain", &human::h_terrain(&s, i), &terrain),
        gap("foot rotation", &human::h_foot_rotation(&s, f), &rotation),
        gap("plane", &human::h_plane(&s, f), &plane),
    ]
}
