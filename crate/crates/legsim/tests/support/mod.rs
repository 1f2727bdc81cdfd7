//! Shared oracles for the integration suites: an exact sampled solution of
//! the linear test-bench model via the matrix exponential, its transfer
//! function, and a reference integrator for the rigid leg. These stay
//! independent of the simulation code paths they are used to check.

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};

use legsim::model::LegModel;
use legsim::powertrain::TestBench;

/// Matrix exponential by scaling-and-squaring with a Taylor series.
pub fn expm4(m: &Matrix4<f64>) -> Matrix4<f64> {
    let norm = m.abs().row_sum().max();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings as i32);
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for k in 1..40 {
        term = term * scaled / k as f64;
        sum += term;
        if term.abs().max() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Exact sampled link-side torque of the locked-output bench under a step
/// command, evaluated at `n + 1` uniform instants spaced `dt` apart.
///
/// States are (motor torque, deflection, deflection rate); the constant
/// input enters through the augmented-matrix exponential, so this is a
/// closed-form route with no time-stepping error.
pub fn bench_step_oracle(bench: &TestBench, command: f64, dt: f64, n: usize) -> Vec<f64> {
    let tau_c = 1.0 / (2.0 * std::f64::consts::PI * bench.motors.current_loop_bandwidth_hz);
    let (k, d, i1) = (
        bench.cable.stiffness,
        bench.cable.damping,
        bench.rotor_inertia,
    );
    let mut aug = Matrix4::zeros();
    // A
    aug[(0, 0)] = -1.0 / tau_c;
    aug[(1, 2)] = 1.0;
    aug[(2, 0)] = 1.0 / i1;
    aug[(2, 1)] = -k / i1;
    aug[(2, 2)] = -d / i1;
    // B
    aug[(0, 3)] = 1.0 / tau_c;
    let phi = expm4(&(aug * dt));

    let mut x = Vector3::zeros();
    let mut out = Vec::with_capacity(n + 1);
    out.push(k * x[1] + d * x[2]);
    for _ in 0..n {
        let mut next = Vector3::zeros();
        for r in 0..3 {
            next[r] = phi[(r, 3)] * command;
            for c in 0..3 {
                next[r] += phi[(r, c)] * x[c];
            }
        }
        x = next;
        out.push(k * x[1] + d * x[2]);
    }
    out
}

/// Analytic gain and phase (radians) of the locked bench from command to
/// link-side torque at one frequency.
pub fn bench_transfer(bench: &TestBench, freq_hz: f64) -> (f64, f64) {
    let omega = 2.0 * std::f64::consts::PI * freq_hz;
    let tau_c = 1.0 / (2.0 * std::f64::consts::PI * bench.motors.current_loop_bandwidth_hz);
    let (k, d, i1) = (
        bench.cable.stiffness,
        bench.cable.damping,
        bench.rotor_inertia,
    );
    let loop_gain = 1.0 / (1.0 + (omega * tau_c).powi(2)).sqrt();
    let loop_phase = -(omega * tau_c).atan();
    let num = (k * k + (omega * d).powi(2)).sqrt();
    let den_re = k - i1 * omega * omega;
    let den = (den_re * den_re + (omega * d).powi(2)).sqrt();
    let phase = (omega * d).atan2(k) - (omega * d).atan2(den_re) + loop_phase;
    (loop_gain * num / den, phase)
}

/// RK4 step of the rigid torque-free leg, used as the conservation
/// reference for ballistic arcs.
pub fn rigid_ballistic_step(
    model: &LegModel,
    q: &Vector3<f64>,
    qd: &Vector3<f64>,
    dt: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    let f = |q: &Vector3<f64>, qd: &Vector3<f64>| {
        (
            *qd,
            legsim::dynamics::forward_dynamics(model, q, qd, &Vector2::zeros(), &Vector2::zeros())
                .expect("rigid model is positive definite"),
        )
    };
    let (k1q, k1v) = f(q, qd);
    let (k2q, k2v) = f(&(q + 0.5 * dt * k1q), &(qd + 0.5 * dt * k1v));
    let (k3q, k3v) = f(&(q + 0.5 * dt * k2q), &(qd + 0.5 * dt * k2v));
    let (k4q, k4v) = f(&(q + dt * k3q), &(qd + dt * k3v));
    (
        q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        qd + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

/// Independent per-body kinetic energy: base translation, link CoM
/// velocities from their own trigonometry, rotors at geared rates.
pub fn per_body_kinetic_energy(model: &LegModel, q: &Vector3<f64>, qd: &Vector3<f64>) -> f64 {
    let [l1, _] = model.link_lengths;
    let [m1, m2] = model.link_masses;
    let [c1, c2] = model.link_com_offsets;
    let (zd, w1, w2) = (qd[0], qd[1], qd[2]);
    let a1 = q[1];
    let a2 = q[1] + q[2];
    let w12 = w1 + w2;

    let base = 0.5 * (model.base_mass + model.payload_mass) * zd * zd;
    let v1x = c1 * a1.cos() * w1;
    let v1z = zd + c1 * a1.sin() * w1;
    let thigh = 0.5 * m1 * (v1x * v1x + v1z * v1z) + 0.5 * model.link_inertias[0] * w1 * w1;
    let v2x = l1 * a1.cos() * w1 + c2 * a2.cos() * w12;
    let v2z = zd + l1 * a1.sin() * w1 + c2 * a2.sin() * w12;
    let shank = 0.5 * m2 * (v2x * v2x + v2z * v2z) + 0.5 * model.link_inertias[1] * w12 * w12;
    let rotors = 0.5 * model.rotor_inertias[0] * (model.gear_ratios[0] * w1).powi(2)
        + 0.5 * model.rotor_inertias[1] * (model.gear_ratios[1] * w2).powi(2);
    base + thigh + shank + rotors
}

/// Deterministic pseudo-random in-range states for sampling checks.
pub struct StateSampler {
    state: u64,
}

impl StateSampler {
    pub fn new(seed: u64) -> Self {
        StateSampler {
            state: seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1),
        }
    }

    fn next_unit(&mut self) -> f64 {
        // splitmix64
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z = z ^ (z >> 31);
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_unit()
    }

    pub fn state(&mut self) -> (Vector3<f64>, Vector3<f64>) {
        (
            Vector3::new(
                self.range(0.1, 1.2),
                self.range(-2.0, 2.0),
                self.range(0.0, 3.0),
            ),
            Vector3::new(
                self.range(-4.0, 4.0),
                self.range(-20.0, 20.0),
                self.range(-20.0, 20.0),
            ),
        )
    }
}

/// Symmetry defect of a 3x3 matrix.
pub fn symmetry_defect(m: &Matrix3<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}
