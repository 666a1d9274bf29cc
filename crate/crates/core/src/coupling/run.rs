use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{
    add_nodal_loads, map_forces, traffic_forces, AnalysisMode, ScenarioConfig, Trajectory, VehicleEntry,
};
use crate::beam::{make_newmark, BridgeMesh, BridgeState, BridgeSystem, NewmarkOperator};
use crate::error::{Error, Result};
use crate::roughness::{generate, RoughnessProfile};
use crate::vehicle::{build_system, VehicleState, VehicleSystem};

/// Diagnostics collected during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    /// Axle-steps whose net contact force was tensile (clamped to zero).
    pub uplift_events: usize,
    /// Axle-steps evaluated outside the roughness profile.
    pub off_profile_samples: usize,
    /// Steps that hit `max_iter` before reaching the tolerance.
    pub non_converged_steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleHistory {
    pub tag: String,
    pub dof_names: Vec<String>,
    pub body_dof: usize,
    pub trajectory: Trajectory,
    /// Static axle loads actually applied [N].
    pub static_axle_forces: Vec<f64>,
    /// `[step][dof]`
    pub displacement: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
    pub acceleration: Vec<Vec<f64>>,
    /// Net downward axle forces, static plus dynamic, before clamping [N], `[step][axle]`.
    pub contact_forces: Vec<Vec<f64>>,
    /// Prescribed contact displacement [m], `[step][axle]`.
    pub contact_displacement: Vec<Vec<f64>>,
}

impl VehicleHistory {
    pub fn dof(&self, field: &[Vec<f64>], dof: usize) -> Vec<f64> {
        field.iter().map(|row| row[dof]).collect()
    }

    pub fn body_displacement(&self) -> Vec<f64> {
        self.dof(&self.displacement, self.body_dof)
    }

    pub fn body_acceleration(&self) -> Vec<f64> {
        self.dof(&self.acceleration, self.body_dof)
    }
}

/// Histories on the common time grid `time[0..=n_steps]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub mode: AnalysisMode,
    pub time: Vec<f64>,
    pub node_coords: Vec<f64>,
    /// Node nearest the middle of the first span.
    pub midspan_node: usize,
    /// Vertical nodal displacement [m], `[step][node]`.
    pub bridge_displacement: Vec<Vec<f64>>,
    pub bridge_velocity: Vec<Vec<f64>>,
    pub bridge_acceleration: Vec<Vec<f64>>,
    pub vehicles: Vec<VehicleHistory>,
    /// Coupling iterations per step (`time[1..]`); empty for decoupled runs.
    pub iterations: Vec<usize>,
    /// Final residual per step; empty for decoupled runs.
    pub residuals: Vec<f64>,
    pub flags: RunFlags,
}

impl SimulationResult {
    pub fn num_steps(&self) -> usize {
        self.time.len() - 1
    }

    pub fn node_history(field: &[Vec<f64>], node: usize) -> Vec<f64> {
        field.iter().map(|row| row[node]).collect()
    }

    pub fn midspan_displacement(&self) -> Vec<f64> {
        Self::node_history(&self.bridge_displacement, self.midspan_node)
    }

    pub fn midspan_velocity(&self) -> Vec<f64> {
        Self::node_history(&self.bridge_velocity, self.midspan_node)
    }

    pub fn midspan_acceleration(&self) -> Vec<f64> {
        Self::node_history(&self.bridge_acceleration, self.midspan_node)
    }

    pub fn converged(&self) -> bool {
        self.flags.non_converged_steps.is_empty()
    }
}

/// Relative change of the vertical nodal field between two iterates: RMS
/// of the change over all nodes divided by the largest current magnitude.
pub fn convergence_residual(current: &[f64], previous: &[f64]) -> f64 {
    let n = current.len() as f64;
    let rms = (current.iter().zip(previous).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt();
    let peak = current.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    if rms == 0.0 {
        0.0
    } else if peak == 0.0 {
        f64::INFINITY
    } else {
        rms / peak
    }
}

struct Vehicle {
    system: VehicleSystem,
    op: NewmarkOperator,
    trajectory: Trajectory,
    static_forces: Vec<f64>,
}

struct Setup {
    bridge: BridgeSystem,
    op: NewmarkOperator,
    vehicles: Vec<Vehicle>,
    profile: Option<RoughnessProfile>,
    traffic: DVector<f64>,
    n_steps: usize,
    dt: f64,
    hermitian: bool,
    midspan_node: usize,
}

impl Setup {
    fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let model = cfg.bridge.with_defaults();
        let bridge = BridgeSystem::new(&model)?;
        let dt = cfg.solver.dt;
        let op = make_newmark(&bridge, dt)?;
        let vehicles = cfg
            .all_vehicles()?
            .iter()
            .map(|entry: &VehicleEntry| {
                let system = build_system(&entry.model)?;
                let op = NewmarkOperator::new(system.mass.clone(), system.damping.clone(), system.stiffness.clone(), dt)?;
                let static_forces = entry.static_axle_forces.clone().unwrap_or_else(|| system.static_axle_forces.clone());
                Ok(Vehicle { system, op, trajectory: entry.trajectory()?, static_forces })
            })
            .collect::<Result<Vec<_>>>()?;
        let profile = match &cfg.roughness {
            Some(r) => Some(generate(&cfg.roughness_spec(r)?)?),
            None => None,
        };
        let traffic = match &cfg.traffic {
            Some(t) => traffic_forces(&bridge.mesh, t, cfg.traffic_seed()),
            None => DVector::zeros(bridge.num_free()),
        };
        let first_span_end = model.support_positions[1];
        let midspan_node = bridge.mesh.nearest_node(0.5 * first_span_end);
        Ok(Self {
            n_steps: cfg.num_steps()?,
            bridge,
            op,
            vehicles,
            profile,
            traffic,
            dt,
            hermitian: cfg.solver.hermitian_interp,
            midspan_node,
        })
    }

    fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    fn mesh(&self) -> &BridgeMesh {
        &self.bridge.mesh
    }

    /// Contact displacement/velocity vectors for a vehicle at `t` given a
    /// bridge state, plus the count of samples outside the road profile.
    fn contact(&self, v: &Vehicle, bridge: &BridgeState, t: f64) -> (DVector<f64>, DVector<f64>, usize) {
        let positions = v.trajectory.axle_positions(t);
        let np = positions.len();
        let (mut u, mut du, mut off) = (DVector::zeros(np), DVector::zeros(np), 0);
        for (a, &x) in positions.iter().enumerate() {
            let c = super::contact_input(self.mesh(), bridge, self.profile.as_ref(), x, v.trajectory.speed, self.hermitian);
            u[a] = c.displacement;
            du[a] = c.velocity;
            off += usize::from(!c.in_profile);
        }
        (u, du, off)
    }

    /// Add the mapped axle forces of one vehicle; returns the uplift count.
    fn add_axle_loads(&self, v: &Vehicle, t: f64, totals: &[f64], load: &mut DVector<f64>) -> usize {
        let (nodal, uplift) = map_forces(self.mesh(), &v.trajectory.axle_positions(t), totals);
        add_nodal_loads(self.mesh(), &nodal, load);
        uplift
    }

    /// Bridge at rest with the acceleration balancing the initial load on
    /// every DOF that carries mass.
    fn initial_bridge(&self, load: &DVector<f64>) -> BridgeState {
        let mut s = BridgeState::at_rest(self.bridge.num_free());
        for (i, &m) in self.bridge.assembly.mass.iter().enumerate() {
            if m > 0.0 {
                s.acceleration[i] = load[i] / m;
            }
        }
        s
    }

    fn record_bridge(&self, s: &BridgeState, out: &mut BridgeRecord) {
        out.displacement.push(self.mesh().vertical_field(&s.displacement));
        out.velocity.push(self.mesh().vertical_field(&s.velocity));
        out.acceleration.push(self.mesh().vertical_field(&s.acceleration));
    }

    fn history(&self, v: &Vehicle) -> VehicleHistory {
        let cap = self.n_steps + 1;
        VehicleHistory {
            tag: v.system.model.tag().to_string(),
            dof_names: v.system.model.dof_names().into_iter().map(String::from).collect(),
            body_dof: v.system.model.body_dof(),
            trajectory: v.trajectory.clone(),
            static_axle_forces: v.static_forces.clone(),
            displacement: Vec::with_capacity(cap),
            velocity: Vec::with_capacity(cap),
            acceleration: Vec::with_capacity(cap),
            contact_forces: Vec::with_capacity(cap),
            contact_displacement: Vec::with_capacity(cap),
        }
    }

    fn finish(self, mode: AnalysisMode, bridge: BridgeRecord, vehicles: Vec<VehicleHistory>, iterations: Vec<usize>, residuals: Vec<f64>, flags: RunFlags) -> SimulationResult {
        SimulationResult {
            mode,
            time: (0..=self.n_steps).map(|n| self.time(n)).collect(),
            node_coords: self.mesh().node_coords.clone(),
            midspan_node: self.midspan_node,
            bridge_displacement: bridge.displacement,
            bridge_velocity: bridge.velocity,
            bridge_acceleration: bridge.acceleration,
            vehicles,
            iterations,
            residuals,
            flags,
        }
    }
}

#[derive(Default)]
struct BridgeRecord {
    displacement: Vec<Vec<f64>>,
    velocity: Vec<Vec<f64>>,
    acceleration: Vec<Vec<f64>>,
}

/// Quasi-static vehicle state following contact motion `(u_p, v_p)`, with
/// the acceleration that satisfies the equations of motion.
fn initial_vehicle(system: &VehicleSystem, u_p: &DVector<f64>, v_p: &DVector<f64>) -> Result<VehicleState> {
    let chol = system
        .stiffness
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("vehicle stiffness is singular".into()))?;
    let displacement = chol.solve(&(-(&system.k_fp * u_p)));
    let velocity = chol.solve(&(-(&system.k_fp * v_p)));
    let residual = system.contact_load(u_p, v_p) - &system.damping * &velocity - &system.stiffness * &displacement;
    let acceleration = residual.component_div(&system.mass);
    Ok(VehicleState { time: 0.0, displacement, velocity, acceleration })
}

fn record_vehicle(h: &mut VehicleHistory, s: &VehicleState, totals: Vec<f64>, u_p: &DVector<f64>) {
    h.displacement.push(s.displacement.iter().copied().collect());
    h.velocity.push(s.velocity.iter().copied().collect());
    h.acceleration.push(s.acceleration.iter().copied().collect());
    h.contact_forces.push(totals);
    h.contact_displacement.push(u_p.iter().copied().collect());
}

fn totals(static_forces: &[f64], dynamic: &[f64]) -> Vec<f64> {
    static_forces.iter().zip(dynamic).map(|(s, d)| s + d).collect()
}

/// Dispatch on the configured mode.
pub fn run(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    match cfg.solver.mode {
        AnalysisMode::Coupled => run_coupled(cfg),
        AnalysisMode::Decoupled => run_decoupled(cfg),
    }
}

/// Per-step fixed-point iteration between the bridge and every vehicle.
pub fn run_coupled(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    let setup = Setup::new(cfg)?;
    let (tol, max_iter) = (cfg.solver.tol, cfg.solver.max_iter);
    let mut flags = RunFlags::default();
    let mut record = BridgeRecord::default();
    let mut histories: Vec<VehicleHistory> = setup.vehicles.iter().map(|v| setup.history(v)).collect();

    let rest = BridgeState::at_rest(setup.bridge.num_free());
    let mut load = setup.traffic.clone();
    let mut vehicle_states = Vec::with_capacity(setup.vehicles.len());
    for (v, h) in setup.vehicles.iter().zip(&mut histories) {
        let (u, du, off) = setup.contact(v, &rest, 0.0);
        flags.off_profile_samples += off;
        let state = initial_vehicle(&v.system, &u, &du)?;
        let f = totals(&v.static_forces, &v.system.reactions(&state, &u, &du));
        flags.uplift_events += setup.add_axle_loads(v, 0.0, &f, &mut load);
        record_vehicle(h, &state, f, &u);
        vehicle_states.push(state);
    }
    let mut bridge = setup.initial_bridge(&load);
    setup.record_bridge(&bridge, &mut record);

    let mut iterations = Vec::with_capacity(setup.n_steps);
    let mut residuals = Vec::with_capacity(setup.n_steps);
    for step in 1..=setup.n_steps {
        let t = setup.time(step);
        let bridge_history = setup.op.history_load(&bridge);
        let vehicle_history: Vec<DVector<f64>> =
            setup.vehicles.iter().zip(&vehicle_states).map(|(v, s)| v.op.history_load(s)).collect();

        let mut iterate = setup.op.step_with_history(&bridge, &bridge_history, &setup.traffic);
        let mut previous = setup.mesh().vertical_field(&iterate.displacement);
        let mut next_vehicles: Vec<(VehicleState, Vec<f64>, DVector<f64>, usize)> = Vec::new();
        let mut k = 0;
        let mut eps;
        loop {
            k += 1;
            next_vehicles.clear();
            let mut load = setup.traffic.clone();
            let mut uplift = 0;
            for ((v, s), hist) in setup.vehicles.iter().zip(&vehicle_states).zip(&vehicle_history) {
                let (u, du, off) = setup.contact(v, &iterate, t);
                let next = v.op.step_with_history(s, hist, &v.system.contact_load(&u, &du));
                let f = totals(&v.static_forces, &v.system.reactions(&next, &u, &du));
                uplift += setup.add_axle_loads(v, t, &f, &mut load);
                next_vehicles.push((next, f, u, off));
            }
            iterate = setup.op.step_with_history(&bridge, &bridge_history, &load);
            let current = setup.mesh().vertical_field(&iterate.displacement);
            eps = convergence_residual(&current, &previous);
            let done = eps < tol || k >= max_iter;
            if done {
                if eps >= tol {
                    flags.non_converged_steps.push(step);
                }
                flags.uplift_events += uplift;
                break;
            }
            previous = current;
        }
        iterations.push(k);
        residuals.push(eps);
        bridge = iterate;
        setup.record_bridge(&bridge, &mut record);
        for ((state, h), (next, f, u, off)) in vehicle_states.iter_mut().zip(&mut histories).zip(next_vehicles.drain(..)) {
            flags.off_profile_samples += off;
            record_vehicle(h, &next, f, &u);
            *state = next;
        }
    }
    Ok(setup.finish(AnalysisMode::Coupled, record, histories, iterations, residuals, flags))
}

/// Bridge under static moving axle loads, then each vehicle driven by the
/// stored bridge motion plus roughness. Vehicle forces are not fed back.
pub fn run_decoupled(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    let setup = Setup::new(cfg)?;
    let mut flags = RunFlags::default();
    let static_load = |t: f64| {
        let mut load = setup.traffic.clone();
        for v in &setup.vehicles {
            setup.add_axle_loads(v, t, &v.static_forces, &mut load);
        }
        load
    };

    let mut record = BridgeRecord::default();
    let mut states = Vec::with_capacity(setup.n_steps + 1);
    let kinematics = |s: &BridgeState| BridgeState {
        time: s.time,
        displacement: s.displacement.clone(),
        velocity: s.velocity.clone(),
        acceleration: DVector::zeros(0),
    };
    let mut bridge = setup.initial_bridge(&static_load(0.0));
    setup.record_bridge(&bridge, &mut record);
    states.push(kinematics(&bridge));
    for step in 1..=setup.n_steps {
        bridge = setup.op.step(&bridge, &static_load(setup.time(step)))?;
        setup.record_bridge(&bridge, &mut record);
        states.push(kinematics(&bridge));
    }

    let mut histories = Vec::with_capacity(setup.vehicles.len());
    for v in &setup.vehicles {
        let mut h = setup.history(v);
        let (u, du, off) = setup.contact(v, &states[0], 0.0);
        flags.off_profile_samples += off;
        let mut state = initial_vehicle(&v.system, &u, &du)?;
        let f = totals(&v.static_forces, &v.system.reactions(&state, &u, &du));
        flags.uplift_events += f.iter().filter(|&&x| x < 0.0).count();
        record_vehicle(&mut h, &state, f, &u);
        for (step, bridge_state) in states.iter().enumerate().skip(1) {
            let (u, du, off) = setup.contact(v, bridge_state, setup.time(step));
            flags.off_profile_samples += off;
            state = v.op.step(&state, &v.system.contact_load(&u, &du))?;
            let f = totals(&v.static_forces, &v.system.reactions(&state, &u, &du));
            flags.uplift_events += f.iter().filter(|&&x| x < 0.0).count();
            record_vehicle(&mut h, &state, f, &u);
        }
        histories.push(h);
    }
    Ok(setup.finish(AnalysisMode::Decoupled, record, histories, Vec::new(), Vec::new(), flags))
}
