//! Vehicle models driven through their contact points.
//!
//! Every model is a set of lumped masses joined by linear spring-dashpot
//! pairs. Contact points are massless prescribed DOFs: the bridge (plus road
//! profile) imposes their displacement and velocity, and the dynamic reaction
//! they develop is the force handed back to the bridge.
//!
//! Sign conventions: displacements are positive upward, pitch is positive
//! nose-up, and contact forces are reported as downward-positive loads on the
//! bridge. Gravity is handled once by a static solve; the dynamic equations
//! exclude it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::beam::newmark::{DynamicState, NewmarkOperator};
use crate::error::{Error, Result};

pub const GRAVITY: f64 = 9.81;

pub type VehicleState = DynamicState;

/// Sprung body on a suspension, riding on an axle mass and a tyre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarterCar {
    pub sprung_mass: f64,
    pub unsprung_mass: f64,
    pub suspension_stiffness: f64,
    #[serde(default)]
    pub suspension_damping: f64,
    pub tyre_stiffness: f64,
    #[serde(default)]
    pub tyre_damping: f64,
}

/// Rigid body with bounce and pitch on two suspensions.
///
/// `cg_to_rear` is `d₂`; the CG-to-front distance is `d₁ = d − d₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfCar {
    pub body_mass: f64,
    pub pitch_inertia: f64,
    pub rear_stiffness: f64,
    #[serde(default)]
    pub rear_damping: f64,
    pub front_stiffness: f64,
    #[serde(default)]
    pub front_damping: f64,
    pub axle_spacing: f64,
    pub cg_to_rear: f64,
}

impl HalfCar {
    pub fn cg_to_front(&self) -> f64 {
        self.axle_spacing - self.cg_to_rear
    }
}

/// [`HalfCar`] body with separate axle masses and tyres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullHalfCar {
    pub body_mass: f64,
    pub pitch_inertia: f64,
    pub rear_axle_mass: f64,
    pub front_axle_mass: f64,
    pub rear_stiffness: f64,
    #[serde(default)]
    pub rear_damping: f64,
    pub front_stiffness: f64,
    #[serde(default)]
    pub front_damping: f64,
    pub rear_tyre_stiffness: f64,
    #[serde(default)]
    pub rear_tyre_damping: f64,
    pub front_tyre_stiffness: f64,
    #[serde(default)]
    pub front_tyre_damping: f64,
    pub axle_spacing: f64,
    pub cg_to_rear: f64,
}

impl FullHalfCar {
    pub fn cg_to_front(&self) -> f64 {
        self.axle_spacing - self.cg_to_rear
    }

    pub fn body(&self) -> HalfCar {
        HalfCar {
            body_mass: self.body_mass,
            pitch_inertia: self.pitch_inertia,
            rear_stiffness: self.rear_stiffness,
            rear_damping: self.rear_damping,
            front_stiffness: self.front_stiffness,
            front_damping: self.front_damping,
            axle_spacing: self.axle_spacing,
            cg_to_rear: self.cg_to_rear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VehicleModel {
    OneAxleSimple {
        mass: f64,
        stiffness: f64,
        #[serde(default)]
        damping: f64,
    },
    OneAxleComp(QuarterCar),
    TwoAxleComp1 {
        rear: QuarterCar,
        front: QuarterCar,
        axle_spacing: f64,
    },
    TwoAxleComp2(HalfCar),
    TwoAxleComp3(FullHalfCar),
}

/// One spring-dashpot pair. Its elongation is `Σ coeff·q` over the combined
/// `[free, prescribed]` coordinate vector.
struct Link {
    stiffness: f64,
    damping: f64,
    terms: Vec<(usize, f64)>,
}

impl Link {
    fn new(stiffness: f64, damping: f64, terms: &[(usize, f64)]) -> Self {
        Self { stiffness, damping, terms: terms.to_vec() }
    }
}

impl VehicleModel {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::OneAxleSimple { .. } => "one_axle_simple",
            Self::OneAxleComp(_) => "one_axle_comp",
            Self::TwoAxleComp1 { .. } => "two_axle_comp1",
            Self::TwoAxleComp2(_) => "two_axle_comp2",
            Self::TwoAxleComp3(_) => "two_axle_comp3",
        }
    }

    pub fn num_axles(&self) -> usize {
        match self {
            Self::OneAxleSimple { .. } | Self::OneAxleComp(_) => 1,
            _ => 2,
        }
    }

    /// Axle positions relative to the rear axle [m], ascending.
    pub fn axle_offsets(&self) -> Vec<f64> {
        match self {
            Self::OneAxleSimple { .. } | Self::OneAxleComp(_) => vec![0.0],
            Self::TwoAxleComp1 { axle_spacing, .. } => vec![0.0, *axle_spacing],
            Self::TwoAxleComp2(h) => vec![0.0, h.axle_spacing],
            Self::TwoAxleComp3(h) => vec![0.0, h.axle_spacing],
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::OneAxleSimple { mass, .. } => *mass,
            Self::OneAxleComp(q) => q.sprung_mass + q.unsprung_mass,
            Self::TwoAxleComp1 { rear, front, .. } => {
                rear.sprung_mass + rear.unsprung_mass + front.sprung_mass + front.unsprung_mass
            }
            Self::TwoAxleComp2(h) => h.body_mass,
            Self::TwoAxleComp3(h) => h.body_mass + h.rear_axle_mass + h.front_axle_mass,
        }
    }

    /// Names of the free DOFs, in solver order.
    pub fn dof_names(&self) -> Vec<&'static str> {
        match self {
            Self::OneAxleSimple { .. } => vec!["y_body"],
            Self::OneAxleComp(_) => vec!["y_axle", "y_body"],
            Self::TwoAxleComp1 { .. } => {
                vec!["y_axle_rear", "y_body_rear", "y_axle_front", "y_body_front"]
            }
            Self::TwoAxleComp2(_) => vec!["y_body", "theta_body"],
            Self::TwoAxleComp3(_) => vec!["y_axle_rear", "y_axle_front", "y_body", "theta_body"],
        }
    }

    /// Free DOF holding the vertical body (sprung mass) translation.
    pub fn body_dof(&self) -> usize {
        match self {
            Self::OneAxleSimple { .. } => 0,
            Self::OneAxleComp(_) => 1,
            Self::TwoAxleComp1 { .. } => 1,
            Self::TwoAxleComp2(_) => 0,
            Self::TwoAxleComp3(_) => 2,
        }
    }

    /// Copy with every mass and inertia multiplied by `factor`.
    pub fn with_mass_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        let scale_q = |q: &mut QuarterCar| {
            q.sprung_mass *= factor;
            q.unsprung_mass *= factor;
        };
        match &mut out {
            Self::OneAxleSimple { mass, .. } => *mass *= factor,
            Self::OneAxleComp(q) => scale_q(q),
            Self::TwoAxleComp1 { rear, front, .. } => {
                scale_q(rear);
                scale_q(front);
            }
            Self::TwoAxleComp2(h) => {
                h.body_mass *= factor;
                h.pitch_inertia *= factor;
            }
            Self::TwoAxleComp3(h) => {
                h.body_mass *= factor;
                h.pitch_inertia *= factor;
                h.rear_axle_mass *= factor;
                h.front_axle_mass *= factor;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut positive: Vec<(&str, f64)> = Vec::new();
        let mut non_negative: Vec<(&str, f64)> = Vec::new();
        let quarter = |q: &QuarterCar, p: &mut Vec<(&str, f64)>, nn: &mut Vec<(&str, f64)>| {
            p.extend([
                ("sprung_mass", q.sprung_mass),
                ("unsprung_mass", q.unsprung_mass),
                ("suspension_stiffness", q.suspension_stiffness),
                ("tyre_stiffness", q.tyre_stiffness),
            ]);
            nn.extend([("suspension_damping", q.suspension_damping), ("tyre_damping", q.tyre_damping)]);
        };
        let mut geometry = None;
        match self {
            Self::OneAxleSimple { mass, stiffness, damping } => {
                positive.extend([("mass", *mass), ("stiffness", *stiffness)]);
                non_negative.push(("damping", *damping));
            }
            Self::OneAxleComp(q) => quarter(q, &mut positive, &mut non_negative),
            Self::TwoAxleComp1 { rear, front, axle_spacing } => {
                quarter(rear, &mut positive, &mut non_negative);
                quarter(front, &mut positive, &mut non_negative);
                positive.push(("axle_spacing", *axle_spacing));
            }
            Self::TwoAxleComp2(h) => {
                positive.extend([
                    ("body_mass", h.body_mass),
                    ("pitch_inertia", h.pitch_inertia),
                    ("rear_stiffness", h.rear_stiffness),
                    ("front_stiffness", h.front_stiffness),
                ]);
                non_negative.extend([("rear_damping", h.rear_damping), ("front_damping", h.front_damping)]);
                geometry = Some((h.axle_spacing, h.cg_to_rear));
            }
            Self::TwoAxleComp3(h) => {
                positive.extend([
                    ("body_mass", h.body_mass),
                    ("pitch_inertia", h.pitch_inertia),
                    ("rear_axle_mass", h.rear_axle_mass),
                    ("front_axle_mass", h.front_axle_mass),
                    ("rear_stiffness", h.rear_stiffness),
                    ("front_stiffness", h.front_stiffness),
                    ("rear_tyre_stiffness", h.rear_tyre_stiffness),
                    ("front_tyre_stiffness", h.front_tyre_stiffness),
                ]);
                non_negative.extend([
                    ("rear_damping", h.rear_damping),
                    ("front_damping", h.front_damping),
                    ("rear_tyre_damping", h.rear_tyre_damping),
                    ("front_tyre_damping", h.front_tyre_damping),
                ]);
                geometry = Some((h.axle_spacing, h.cg_to_rear));
            }
        }
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidModel(format!("{}: {name} must be positive, got {v}", self.tag())));
            }
        }
        for (name, v) in non_negative {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "{}: {name} must be non-negative, got {v}",
                    self.tag()
                )));
            }
        }
        if let Some((d, d2)) = geometry {
            if !(d2 > 0.0 && d2 < d) {
                return Err(Error::InvalidModel(format!(
                    "{}: need 0 < cg_to_rear < axle_spacing, got {d2} and {d}",
                    self.tag()
                )));
            }
        }
        Ok(())
    }

    /// Lumped masses of the free DOFs and the spring-dashpot links.
    fn topology(&self) -> (Vec<f64>, Vec<Link>) {
        match self {
            Self::OneAxleSimple { mass, stiffness, damping } => {
                // q = [y, u_c]
                (vec![*mass], vec![Link::new(*stiffness, *damping, &[(0, 1.0), (1, -1.0)])])
            }
            Self::OneAxleComp(q) => {
                // q = [y_u, y_s, u_c]
                (
                    vec![q.unsprung_mass, q.sprung_mass],
                    vec![
                        Link::new(q.tyre_stiffness, q.tyre_damping, &[(0, 1.0), (2, -1.0)]),
                        Link::new(q.suspension_stiffness, q.suspension_damping, &[(1, 1.0), (0, -1.0)]),
                    ],
                )
            }
            Self::TwoAxleComp1 { rear, front, .. } => {
                // q = [y_ur, y_sr, y_uf, y_sf, u_cr, u_cf]
                let mut links = Vec::new();
                for (half, (axle, body, contact)) in [(rear, (0, 1, 4)), (front, (2, 3, 5))] {
                    links.push(Link::new(half.tyre_stiffness, half.tyre_damping, &[(axle, 1.0), (contact, -1.0)]));
                    links.push(Link::new(
                        half.suspension_stiffness,
                        half.suspension_damping,
                        &[(body, 1.0), (axle, -1.0)],
                    ));
                }
                (
                    vec![rear.unsprung_mass, rear.sprung_mass, front.unsprung_mass, front.sprung_mass],
                    links,
                )
            }
            Self::TwoAxleComp2(h) => {
                // q = [y_v, θ_v, u_cr, u_cf]
                let (d1, d2) = (h.cg_to_front(), h.cg_to_rear);
                (
                    vec![h.body_mass, h.pitch_inertia],
                    vec![
                        Link::new(h.rear_stiffness, h.rear_damping, &[(0, 1.0), (1, -d2), (2, -1.0)]),
                        Link::new(h.front_stiffness, h.front_damping, &[(0, 1.0), (1, d1), (3, -1.0)]),
                    ],
                )
            }
            Self::TwoAxleComp3(h) => {
                // q = [y_ur, y_uf, y_v, θ_v, u_cr, u_cf]
                let (d1, d2) = (h.cg_to_front(), h.cg_to_rear);
                (
                    vec![h.rear_axle_mass, h.front_axle_mass, h.body_mass, h.pitch_inertia],
                    vec![
                        Link::new(h.rear_tyre_stiffness, h.rear_tyre_damping, &[(0, 1.0), (4, -1.0)]),
                        Link::new(h.front_tyre_stiffness, h.front_tyre_damping, &[(1, 1.0), (5, -1.0)]),
                        Link::new(h.rear_stiffness, h.rear_damping, &[(2, 1.0), (3, -d2), (0, -1.0)]),
                        Link::new(h.front_stiffness, h.front_damping, &[(2, 1.0), (3, d1), (1, -1.0)]),
                    ],
                )
            }
        }
    }

    /// Gravity load on the free DOFs (pitch DOFs carry none).
    fn gravity_load(&self) -> DVector<f64> {
        let (masses, _) = self.topology();
        let rotational = match self {
            Self::TwoAxleComp2(_) => Some(1),
            Self::TwoAxleComp3(_) => Some(3),
            _ => None,
        };
        DVector::from_iterator(
            masses.len(),
            masses
                .iter()
                .enumerate()
                .map(|(i, m)| if Some(i) == rotational { 0.0 } else { -m * GRAVITY }),
        )
    }
}

/// Assembled matrices of one vehicle, partitioned into free (`f`) and
/// prescribed contact (`p`) DOFs.
#[derive(Debug, Clone)]
pub struct VehicleSystem {
    pub model: VehicleModel,
    /// Diagonal of M over the free DOFs.
    pub mass: DVector<f64>,
    pub stiffness: DMatrix<f64>,
    pub damping: DMatrix<f64>,
    pub k_fp: DMatrix<f64>,
    pub c_fp: DMatrix<f64>,
    pub k_pf: DMatrix<f64>,
    pub c_pf: DMatrix<f64>,
    pub k_pp: DMatrix<f64>,
    pub c_pp: DMatrix<f64>,
    pub axle_offsets: Vec<f64>,
    /// Static axle loads under gravity [N, downward positive].
    pub static_axle_forces: Vec<f64>,
    pub gravity_load: DVector<f64>,
}

pub fn build_system(model: &VehicleModel) -> Result<VehicleSystem> {
    model.validate()?;
    let (masses, links) = model.topology();
    let nf = masses.len();
    let np = model.num_axles();
    let n = nf + np;
    let mut k = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    for link in &links {
        for &(i, bi) in &link.terms {
            for &(j, bj) in &link.terms {
                k[(i, j)] += link.stiffness * bi * bj;
                c[(i, j)] += link.damping * bi * bj;
            }
        }
    }
    let mut system = VehicleSystem {
        model: model.clone(),
        mass: DVector::from_vec(masses),
        stiffness: k.view((0, 0), (nf, nf)).into_owned(),
        damping: c.view((0, 0), (nf, nf)).into_owned(),
        k_fp: k.view((0, nf), (nf, np)).into_owned(),
        c_fp: c.view((0, nf), (nf, np)).into_owned(),
        k_pf: k.view((nf, 0), (np, nf)).into_owned(),
        c_pf: c.view((nf, 0), (np, nf)).into_owned(),
        k_pp: k.view((nf, nf), (np, np)).into_owned(),
        c_pp: c.view((nf, nf), (np, np)).into_owned(),
        axle_offsets: model.axle_offsets(),
        static_axle_forces: Vec::new(),
        gravity_load: model.gravity_load(),
    };
    system.static_axle_forces = static_axle_forces_of(&system)?;
    Ok(system)
}

/// Static solve under gravity with the contacts held at zero.
fn static_axle_forces_of(system: &VehicleSystem) -> Result<Vec<f64>> {
    let chol = system
        .stiffness
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("vehicle stiffness is singular".into()))?;
    let u = chol.solve(&system.gravity_load);
    Ok((&system.k_pf * u).iter().copied().collect())
}

/// Static axle loads [N, downward positive] of a vehicle under gravity.
pub fn static_axle_forces(model: &VehicleModel) -> Result<Vec<f64>> {
    Ok(build_system(model)?.static_axle_forces)
}

impl VehicleSystem {
    pub fn num_free(&self) -> usize {
        self.mass.len()
    }

    pub fn num_axles(&self) -> usize {
        self.axle_offsets.len()
    }

    /// Newmark stepper for this vehicle at a fixed `dt`.
    pub fn integrator(&self, dt: f64) -> Result<VehicleIntegrator<'_>> {
        let op = NewmarkOperator::new(self.mass.clone(), self.damping.clone(), self.stiffness.clone(), dt)?;
        Ok(VehicleIntegrator { system: self, op })
    }

    /// Load on the free DOFs produced by the contact motion.
    pub fn contact_load(&self, u_p: &DVector<f64>, v_p: &DVector<f64>) -> DVector<f64> {
        -(&self.c_fp * v_p + &self.k_fp * u_p)
    }

    /// Dynamic contact forces [N, downward positive on the bridge].
    pub fn reactions(&self, state: &VehicleState, u_p: &DVector<f64>, v_p: &DVector<f64>) -> Vec<f64> {
        let r = &self.k_pf * &state.displacement
            + &self.c_pf * &state.velocity
            + &self.k_pp * u_p
            + &self.c_pp * v_p;
        r.iter().copied().collect()
    }

    /// Undamped natural frequencies [Hz], ascending.
    pub fn natural_frequencies(&self) -> Vec<f64> {
        let inv_sqrt: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let n = self.num_free();
        let scaled = DMatrix::from_fn(n, n, |i, j| self.stiffness[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        let mut f: Vec<f64> = SymmetricEigen::new(scaled)
            .eigenvalues
            .iter()
            .map(|&l| l.max(0.0).sqrt() / (2.0 * std::f64::consts::PI))
            .collect();
        f.sort_by(|a, b| a.total_cmp(b));
        f
    }
}

/// A [`VehicleSystem`] bound to a factorized Newmark operator.
#[derive(Debug, Clone)]
pub struct VehicleIntegrator<'a> {
    pub system: &'a VehicleSystem,
    op: NewmarkOperator,
}

impl VehicleIntegrator<'_> {
    pub fn operator(&self) -> &NewmarkOperator {
        &self.op
    }

    /// Advance one step under prescribed contact displacement `u_p` and
    /// velocity `v_p` at `t + dt`, returning the new state and the dynamic
    /// contact forces.
    pub fn step_imposed(
        &self,
        state: &VehicleState,
        u_p: &DVector<f64>,
        v_p: &DVector<f64>,
    ) -> Result<(VehicleState, Vec<f64>)> {
        self.step_loaded(state, u_p, v_p, None)
    }

    /// As [`step_imposed`](Self::step_imposed) with an extra load on the
    /// free DOFs (e.g. gravity).
    pub fn step_loaded(
        &self,
        state: &VehicleState,
        u_p: &DVector<f64>,
        v_p: &DVector<f64>,
        external: Option<&DVector<f64>>,
    ) -> Result<(VehicleState, Vec<f64>)> {
        let np = self.system.num_axles();
        for len in [u_p.len(), v_p.len()] {
            if len != np {
                return Err(Error::ShapeMismatch { expected: np, got: len });
            }
        }
        if state.len() != self.system.num_free() {
            return Err(Error::ShapeMismatch { expected: self.system.num_free(), got: state.len() });
        }
        let mut load = self.system.contact_load(u_p, v_p);
        if let Some(ext) = external {
            if ext.len() != load.len() {
                return Err(Error::ShapeMismatch { expected: load.len(), got: ext.len() });
            }
            load += ext;
        }
        let next = self.op.step(state, &load)?;
        let reactions = self.system.reactions(&next, u_p, v_p);
        Ok((next, reactions))
    }
}

/// One Newmark step of `system` with a freshly factorized operator.
pub fn step_imposed(
    system: &VehicleSystem,
    state: &VehicleState,
    u_p: &DVector<f64>,
    v_p: &DVector<f64>,
    dt: f64,
) -> Result<(VehicleState, Vec<f64>)> {
    system.integrator(dt)?.step_imposed(state, u_p, v_p)
}

pub fn natural_frequencies(system: &VehicleSystem) -> Vec<f64> {
    system.natural_frequencies()
}
