//! Closed-form rigid-body dynamics of the rail-mounted two-joint leg.
//!
//! Generalized coordinates are `q = [z_b, phi_hfe, phi_kfe]`: vertical base
//! position above the ground, hip angle and knee angle. Zero joint angles are
//! the fully stretched straight-down pose; positive angles swing the foot
//! toward +x. The base slides on a frictionless vertical rail (rail friction
//! is applied by the simulator, not here), the hip pivot sits
//! `base_hip_offset` below `z_b`.
//!
//! The terms of
//!
//! ```text
//! M(q)·qdd + b(q, qd) + g(q) = J_cᵀ·f_c + Sᵀ·τ
//! ```
//!
//! are hand-derived from the Lagrangian of a prismatic base carrying a planar
//! two-link chain. Rotors are assumed rigidly geared here, so their inertia
//! appears reflected on the joint diagonal of `M`; the simulator uses
//! [`mass_matrix_without_rotors`] when it integrates the rotors as separate
//! series-elastic states.

use nalgebra::{Matrix2x3, Matrix3, Vector2, Vector3};
use thiserror::Error;

use crate::model::LegModel;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("mass matrix is not positive definite at q = {q:?}")]
    SingularMassMatrix { q: [f64; 3] },
}

/// Positions and velocities of the three generalized coordinates.
#[derive(Debug, Clone, Copy)]
pub struct GeneralizedState {
    pub q: Vector3<f64>,
    pub qd: Vector3<f64>,
}

impl GeneralizedState {
    pub fn new(q: Vector3<f64>, qd: Vector3<f64>) -> Self {
        Self { q, qd }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|v| v.is_finite())
    }
}

/// Selection matrix mapping the two actuated joint torques into generalized
/// forces; `Sᵀ τ = [0, τ_hfe, τ_kfe]`.
pub fn selection_matrix() -> Matrix2x3<f64> {
    Matrix2x3::new(0.0, 1.0, 0.0, 0.0, 0.0, 1.0)
}

/// Base vertical Jacobian; constant `[1, 0, 0]`.
pub fn base_jacobian() -> Vector3<f64> {
    Vector3::new(1.0, 0.0, 0.0)
}

/// Planar position of the foot-sphere center, `(x, z)`, x from the rail
/// line, z from the ground.
pub fn foot_position(model: &LegModel, q: &Vector3<f64>) -> Vector2<f64> {
    let [l1, l2] = model.link_lengths;
    let a1 = q[1];
    let a2 = q[1] + q[2];
    Vector2::new(
        l1 * a1.sin() + l2 * a2.sin(),
        q[0] - model.base_hip_offset - l1 * a1.cos() - l2 * a2.cos(),
    )
}

/// Planar velocity of the foot-sphere center.
pub fn foot_velocity(model: &LegModel, q: &Vector3<f64>, qd: &Vector3<f64>) -> Vector2<f64> {
    foot_jacobian(model, q) * qd
}

/// 2×3 Jacobian of the foot position w.r.t. the generalized coordinates;
/// first column is `(0, 1)ᵀ` since base motion moves the foot vertically.
pub fn foot_jacobian(model: &LegModel, q: &Vector3<f64>) -> Matrix2x3<f64> {
    let [l1, l2] = model.link_lengths;
    let (s1, c1) = q[1].sin_cos();
    let (s12, c12) = (q[1] + q[2]).sin_cos();
    Matrix2x3::new(
        0.0,
        l1 * c1 + l2 * c12,
        l2 * c12,
        1.0,
        l1 * s1 + l2 * s12,
        l2 * s12,
    )
}

/// Hip-to-foot-center distance, the quantity driving the stance/flight
/// switching heuristic.
pub fn leg_extension(model: &LegModel, q: &Vector3<f64>) -> f64 {
    let [l1, l2] = model.link_lengths;
    (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * q[2].cos()).sqrt()
}

/// Generalized mass matrix with rotor inertia reflected onto the joint
/// diagonal (rigid-transmission assumption).
pub fn mass_matrix(model: &LegModel, q: &Vector3<f64>) -> Matrix3<f64> {
    let mut m = mass_matrix_without_rotors(model, q);
    m[(1, 1)] += model.reflected_rotor_inertia(0);
    m[(2, 2)] += model.reflected_rotor_inertia(1);
    m
}

/// Generalized mass matrix of base and links only, for plants that carry the
/// rotors as separate states behind the cable springs.
pub fn mass_matrix_without_rotors(model: &LegModel, q: &Vector3<f64>) -> Matrix3<f64> {
    let [l1, _] = model.link_lengths;
    let [m1, m2] = model.link_masses;
    let [c1, c2] = model.link_com_offsets;
    let [i1, i2] = model.link_inertias;
    let s1 = q[1].sin();
    let s12 = (q[1] + q[2]).sin();
    let cos2 = q[2].cos();

    let m_total = model.total_mass();
    // First mass moments of the two rotating bodies about their pivots.
    let a = m1 * c1 + m2 * l1;
    let b = m2 * c2;
    let j1 = i1 + m1 * c1 * c1 + m2 * l1 * l1;
    let j2 = i2 + m2 * c2 * c2;
    let gamma = m2 * l1 * c2;

    let m01 = a * s1 + b * s12;
    let m02 = b * s12;
    let m11 = j1 + j2 + 2.0 * gamma * cos2;
    let m12 = j2 + gamma * cos2;

    Matrix3::new(m_total, m01, m02, m01, m11, m12, m02, m12, j2)
}

/// Coriolis/centripetal generalized forces `b` and gravity generalized
/// forces `g`, both on the left-hand side of the dynamics.
pub fn nonlinear_and_gravity(
    model: &LegModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let [l1, _] = model.link_lengths;
    let [m1, m2] = model.link_masses;
    let [c1, c2] = model.link_com_offsets;
    let (s1, cc1) = q[1].sin_cos();
    let (s12, c12) = (q[1] + q[2]).sin_cos();
    let s2 = q[2].sin();

    let a = m1 * c1 + m2 * l1;
    let b_mom = m2 * c2;
    let gamma = m2 * l1 * c2;
    let w1 = qd[1];
    let w12 = qd[1] + qd[2];

    let b = Vector3::new(
        a * cc1 * w1 * w1 + b_mom * c12 * w12 * w12,
        -gamma * s2 * qd[2] * (2.0 * w1 + qd[2]),
        gamma * s2 * w1 * w1,
    );
    let g = model.gravity
        * Vector3::new(model.total_mass(), a * s1 + b_mom * s12, b_mom * s12);
    (b, g)
}

/// Potential energy of base, payload and links (zero at q = 0 heights).
pub fn potential_energy(model: &LegModel, q: &Vector3<f64>) -> f64 {
    let [l1, _] = model.link_lengths;
    let [m1, m2] = model.link_masses;
    let [c1, c2] = model.link_com_offsets;
    let d = model.base_hip_offset;
    let z = q[0];
    let base = (model.base_mass + model.payload_mass) * z;
    let thigh = m1 * (z - d - c1 * q[1].cos());
    let shank = m2 * (z - d - l1 * q[1].cos() - c2 * (q[1] + q[2]).cos());
    model.gravity * (base + thigh + shank)
}

/// Kinetic energy under the rigid-transmission assumption, `½ qdᵀ M qd`.
pub fn kinetic_energy(model: &LegModel, q: &Vector3<f64>, qd: &Vector3<f64>) -> f64 {
    0.5 * qd.dot(&(mass_matrix(model, q) * qd))
}

/// Forward dynamics: solves `M qdd = J_cᵀ f_c + Sᵀ τ − b − g` for the joint
/// torque pair `tau` and planar contact force `f_c`, using the rigid
/// mass matrix. The system is solved by Cholesky factorization.
pub fn forward_dynamics(
    model: &LegModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
    tau: &Vector2<f64>,
    f_c: &Vector2<f64>,
) -> Result<Vector3<f64>, DynamicsError> {
    let m = mass_matrix(model, q);
    let (b, g) = nonlinear_and_gravity(model, q, qd);
    let rhs = foot_jacobian(model, q).transpose() * f_c + selection_matrix().transpose() * tau
        - b
        - g;
    solve_spd(&m, &rhs).ok_or(DynamicsError::SingularMassMatrix { q: [q[0], q[1], q[2]] })
}

pub(crate) fn solve_spd(m: &Matrix3<f64>, rhs: &Vector3<f64>) -> Option<Vector3<f64>> {
    m.cholesky().map(|chol| chol.solve(rhs))
}
