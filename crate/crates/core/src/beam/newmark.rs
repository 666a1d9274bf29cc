//! Average-acceleration Newmark integration (γ = 1/2, β = 1/4) for linear
//! systems `M·ü + C·u̇ + K·u = F(t)` with a diagonal mass matrix.
//!
//! The effective stiffness `K + a0·M + a1·C` is factorized once at
//! construction; every step afterwards is a pair of triangular solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GAMMA: f64 = 0.5;
pub const BETA: f64 = 0.25;

/// Displacement, velocity and acceleration of a linear system at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicState {
    pub time: f64,
    pub displacement: DVector<f64>,
    pub velocity: DVector<f64>,
    pub acceleration: DVector<f64>,
}

impl DynamicState {
    pub fn at_rest(n: usize) -> Self {
        Self {
            time: 0.0,
            displacement: DVector::zeros(n),
            velocity: DVector::zeros(n),
            acceleration: DVector::zeros(n),
        }
    }

    pub fn len(&self) -> usize {
        self.displacement.len()
    }

    pub fn is_empty(&self) -> bool {
        self.displacement.is_empty()
    }
}

/// Integration constants of the Newmark family for a given `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkCoefficients {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
}

impl NewmarkCoefficients {
    pub fn new(dt: f64) -> Self {
        Self {
            a0: 1.0 / (BETA * dt * dt),
            a1: GAMMA / (BETA * dt),
            a2: 1.0 / (BETA * dt),
            a3: 1.0 / (2.0 * BETA) - 1.0,
            a4: GAMMA / BETA - 1.0,
            a5: 0.5 * dt * (GAMMA / BETA - 2.0),
        }
    }
}

/// Persistent Newmark operator over a fixed `(M, C, K, dt)`.
#[derive(Debug, Clone)]
pub struct NewmarkOperator {
    dt: f64,
    coefficients: NewmarkCoefficients,
    mass: DVector<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl NewmarkOperator {
    /// `mass` holds the diagonal of M; entries may be zero for massless DOFs
    /// as long as the effective stiffness stays positive definite.
    pub fn new(
        mass: DVector<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        let n = mass.len();
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidModel(format!("time step must be positive, got {dt}")));
        }
        for m in [&damping, &stiffness] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::ShapeMismatch { expected: n, got: m.nrows() });
            }
        }
        let coefficients = NewmarkCoefficients::new(dt);
        let mut effective = &stiffness + coefficients.a1 * &damping;
        for i in 0..n {
            effective[(i, i)] += coefficients.a0 * mass[i];
        }
        let factor = Cholesky::new(effective).ok_or(Error::FactorizationFailure)?;
        Ok(Self { dt, coefficients, mass, damping, stiffness, factor })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dofs(&self) -> usize {
        self.mass.len()
    }

    pub fn coefficients(&self) -> NewmarkCoefficients {
        self.coefficients
    }

    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Contribution of the state at `t_n` to the effective load at `t_{n+1}`.
    ///
    /// It depends only on the committed state, so a coupling loop that
    /// re-solves the same step with different forces can compute it once.
    pub fn history_load(&self, state: &DynamicState) -> DVector<f64> {
        let c = &self.coefficients;
        let u = &state.displacement;
        let v = &state.velocity;
        let a = &state.acceleration;
        let mut load = &self.damping * (c.a1 * u + c.a4 * v + c.a5 * a);
        for i in 0..load.len() {
            load[i] += self.mass[i] * (c.a0 * u[i] + c.a2 * v[i] + c.a3 * a[i]);
        }
        load
    }

    /// Advance one step using a precomputed [`history_load`](Self::history_load).
    pub fn step_with_history(
        &self,
        state: &DynamicState,
        history: &DVector<f64>,
        force_next: &DVector<f64>,
    ) -> DynamicState {
        let c = &self.coefficients;
        let displacement = self.factor.solve(&(force_next + history));
        let acceleration = c.a0 * (&displacement - &state.displacement)
            - c.a2 * &state.velocity
            - c.a3 * &state.acceleration;
        let velocity = &state.velocity
            + self.dt * ((1.0 - GAMMA) * &state.acceleration + GAMMA * &acceleration);
        DynamicState { time: state.time + self.dt, displacement, velocity, acceleration }
    }

    /// Advance from `state` to `t + dt` under the force evaluated at `t + dt`.
    pub fn step(&self, state: &DynamicState, force_next: &DVector<f64>) -> Result<DynamicState> {
        if force_next.len() != self.dofs() {
            return Err(Error::ShapeMismatch { expected: self.dofs(), got: force_next.len() });
        }
        if state.len() != self.dofs() {
            return Err(Error::ShapeMismatch { expected: self.dofs(), got: state.len() });
        }
        let history = self.history_load(state);
        Ok(self.step_with_history(state, &history, force_next))
    }

    /// Out-of-balance `M·ü + C·u̇ + K·u − F`, relative to the largest term.
    pub fn balance_residual(&self, state: &DynamicState, force: &DVector<f64>) -> f64 {
        let inertia = self.mass.component_mul(&state.acceleration);
        let damping = &self.damping * &state.velocity;
        let elastic = &self.stiffness * &state.displacement;
        let residual = &inertia + &damping + &elastic - force;
        let scale = [inertia.amax(), damping.amax(), elastic.amax(), force.amax()]
            .into_iter()
            .fold(0.0_f64, f64::max);
        if scale == 0.0 {
            residual.amax()
        } else {
            residual.amax() / scale
        }
    }

    /// `½·u̇ᵀMu̇ + ½·uᵀKu`
    pub fn energy(&self, state: &DynamicState) -> f64 {
        let kinetic: f64 = state
            .velocity
            .iter()
            .zip(self.mass.iter())
            .map(|(v, m)| m * v * v)
            .sum();
        let strain = state.displacement.dot(&(&self.stiffness * &state.displacement));
        0.5 * (kinetic + strain)
    }
}
