//! Vehicle-bridge coupling: contact kinematics, force mapping, background
//! traffic, fleets, scenario configuration and the two time-marching
//! drivers ([`run_coupled`], [`run_decoupled`]).

mod run;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::beam::{BridgeMesh, BridgeModel, BridgeState};
use crate::error::{Error, Result};
use crate::roughness::{RoughnessLevel, RoughnessProfile, RoughnessSpec};
use crate::vehicle::{HalfCar, VehicleModel, GRAVITY};

pub use run::{run, run_coupled, run_decoupled, RunFlags, SimulationResult, VehicleHistory};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const BENCHMARK_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_TRAFFIC_UNIT_MASS: f64 = 2000.0;

/// Constant-speed motion of a vehicle's axle group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Speed [m/s].
    pub speed: f64,
    /// Time at which the rear axle reaches `x = 0` [s].
    pub entry_time: f64,
    /// Axle positions relative to the rear axle [m], ascending from 0.
    pub axle_offsets: Vec<f64>,
}

impl Trajectory {
    pub fn new(speed: f64, entry_time: f64, axle_offsets: Vec<f64>) -> Result<Self> {
        let t = Self { speed, entry_time, axle_offsets };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0) || !self.speed.is_finite() {
            return Err(Error::InvalidScenario(format!("speed must be positive, got {}", self.speed)));
        }
        if self.axle_offsets.first() != Some(&0.0) {
            return Err(Error::InvalidScenario("first axle offset must be 0".into()));
        }
        if self.axle_offsets.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidScenario("axle offsets must be ascending".into()));
        }
        Ok(())
    }

    pub fn rear_position(&self, t: f64) -> f64 {
        self.speed * (t - self.entry_time)
    }

    pub fn axle_positions(&self, t: f64) -> Vec<f64> {
        let rear = self.rear_position(t);
        self.axle_offsets.iter().map(|d| rear + d).collect()
    }

    pub fn wheelbase(&self) -> f64 {
        *self.axle_offsets.last().unwrap_or(&0.0)
    }

    /// Time the rear axle leaves a bridge of length `span`.
    pub fn exit_time(&self, span: f64) -> f64 {
        self.entry_time + span / self.speed
    }

    /// From the first axle reaching `x = 0` to the last axle leaving `x = span`.
    pub fn on_bridge_window(&self, span: f64) -> (f64, f64) {
        (self.entry_time - self.wheelbase() / self.speed, self.exit_time(span))
    }
}

/// Vertical bridge displacement and velocity at `x` from nodal values.
///
/// Linear between the element's end nodes unless `hermitian` is set, in
/// which case the cubic beam shape functions use the nodal rotations too.
pub fn interpolate_bridge(
    mesh: &BridgeMesh,
    state: &BridgeState,
    x: f64,
    hermitian: bool,
) -> Result<(f64, f64)> {
    let (e, xi) = mesh.locate(x)?;
    let value = |field: &DVector<f64>| {
        let node_value = |n: usize, local: usize| {
            mesh.free_index(BridgeMesh::global_dof(n, local)).map_or(0.0, |i| field[i])
        };
        let (wi, wj) = (node_value(e, 1), node_value(e + 1, 1));
        if hermitian {
            let l = mesh.dx;
            let (ti, tj) = (node_value(e, 2), node_value(e + 1, 2));
            let (x2, x3) = (xi * xi, xi * xi * xi);
            (1.0 - 3.0 * x2 + 2.0 * x3) * wi
                + l * (xi - 2.0 * x2 + x3) * ti
                + (3.0 * x2 - 2.0 * x3) * wj
                + l * (x3 - x2) * tj
        } else {
            (1.0 - xi) * wi + xi * wj
        }
    };
    Ok((value(&state.displacement), value(&state.velocity)))
}

/// Prescribed displacement and velocity at one tyre contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactInput {
    pub displacement: f64,
    pub velocity: f64,
    pub on_bridge: bool,
    /// `false` if the roughness profile did not cover `x`.
    pub in_profile: bool,
}

/// Contact motion for an axle at `x` moving at `speed`: bridge deflection
/// (when on the deck) plus road profile.
pub fn contact_input(
    mesh: &BridgeMesh,
    state: &BridgeState,
    profile: Option<&RoughnessProfile>,
    x: f64,
    speed: f64,
    hermitian: bool,
) -> ContactInput {
    let (r, dr, in_profile) = match profile {
        Some(p) => {
            let s = p.eval(x);
            (s.r, s.dr_dx, s.in_domain)
        }
        None => (0.0, 0.0, true),
    };
    let (w, w_dot, on_bridge) = match interpolate_bridge(mesh, state, x, hermitian) {
        Ok((w, v)) => (w, v, true),
        Err(_) => (0.0, 0.0, false),
    };
    ContactInput { displacement: w + r, velocity: w_dot + speed * dr, on_bridge, in_profile }
}

/// Distribute downward axle forces to nodes with linear shape functions.
///
/// Returns downward-positive nodal forces (including support nodes) and the
/// number of axles whose force was tensile and clamped to zero. Axles off
/// the deck contribute nothing.
pub fn map_forces(mesh: &BridgeMesh, axle_positions: &[f64], forces_down: &[f64]) -> (Vec<f64>, usize) {
    let mut nodal = vec![0.0; mesh.num_nodes()];
    let mut uplift = 0;
    for (&x, &f) in axle_positions.iter().zip(forces_down) {
        let Ok((e, xi)) = mesh.locate(x) else { continue };
        let f = if f < 0.0 {
            uplift += 1;
            0.0
        } else {
            f
        };
        nodal[e] += (1.0 - xi) * f;
        nodal[e + 1] += xi * f;
    }
    (nodal, uplift)
}

/// Add downward nodal forces to a free-DOF load vector as negative
/// vertical loads. Forces at restrained nodes go straight to the supports.
pub fn add_nodal_loads(mesh: &BridgeMesh, nodal_down: &[f64], load: &mut DVector<f64>) {
    for (dofs, &f) in mesh.dof_map.iter().zip(nodal_down) {
        if let Some(i) = dofs.uy {
            load[i] -= f;
        }
    }
}

/// Uniformly distributed random background load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSpec {
    pub n_vehicles: usize,
    /// Mass of one background vehicle [kg].
    #[serde(default = "default_unit_mass")]
    pub unit_mass: f64,
    /// Falls back to the scenario seed + 1.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_unit_mass() -> f64 {
    DEFAULT_TRAFFIC_UNIT_MASS
}

impl TrafficSpec {
    pub fn new(n_vehicles: usize, seed: u64) -> Self {
        Self { n_vehicles, unit_mass: DEFAULT_TRAFFIC_UNIT_MASS, seed: Some(seed) }
    }

    pub fn total_force(&self) -> f64 {
        self.n_vehicles as f64 * self.unit_mass * GRAVITY
    }
}

/// Downward nodal traffic forces: uniform random weights on every node
/// with a free vertical DOF, normalized to the total weight.
pub fn traffic_nodal_forces(mesh: &BridgeMesh, spec: &TrafficSpec, seed: u64) -> Vec<f64> {
    let mut nodal = vec![0.0; mesh.num_nodes()];
    let total = spec.total_force();
    if total == 0.0 {
        return nodal;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    for (f, dofs) in nodal.iter_mut().zip(&mesh.dof_map) {
        if dofs.uy.is_some() {
            *f = rng.random::<f64>();
            sum += *f;
        }
    }
    if sum > 0.0 {
        nodal.iter_mut().for_each(|f| *f *= total / sum);
    }
    nodal
}

/// Traffic load as a free-DOF force vector (negative = downward).
pub fn traffic_forces(mesh: &BridgeMesh, spec: &TrafficSpec, seed: u64) -> DVector<f64> {
    let mut load = DVector::zeros(mesh.num_free);
    add_nodal_loads(mesh, &traffic_nodal_forces(mesh, spec, seed), &mut load);
    load
}

/// A random group of half-car vehicles entering one after another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetSpec {
    pub count: usize,
    pub base: HalfCar,
    pub speed: f64,
    /// Rear-axle entry time of the first vehicle [s].
    #[serde(default)]
    pub first_entry: f64,
    /// Distance between consecutive rear axles [m].
    #[serde(default = "default_fleet_spacing")]
    pub spacing: f64,
    /// Half-width of the uniform perturbation about the base values.
    #[serde(default = "default_fleet_spread")]
    pub spread: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_fleet_spacing() -> f64 {
    15.0
}

fn default_fleet_spread() -> f64 {
    0.3
}

/// Perturb body mass, suspension stiffnesses and dampings of the base
/// half-car by independent factors in `[1 − spread, 1 + spread]`.
pub fn generate_fleet(spec: &FleetSpec, seed: u64) -> Result<Vec<VehicleEntry>> {
    if !(spec.spacing > spec.base.axle_spacing) {
        return Err(Error::InvalidScenario("fleet spacing must exceed the wheelbase".into()));
    }
    if !(0.0..1.0).contains(&spec.spread) {
        return Err(Error::InvalidScenario(format!("fleet spread must be in [0, 1), got {}", spec.spread)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factor = || 1.0 + spec.spread * (2.0 * rng.random::<f64>() - 1.0);
    (0..spec.count)
        .map(|i| {
            let mut car = spec.base.clone();
            car.body_mass *= factor();
            let k = factor();
            car.rear_stiffness *= k;
            car.front_stiffness *= k;
            let c = factor();
            car.rear_damping *= c;
            car.front_damping *= c;
            let model = VehicleModel::TwoAxleComp2(car);
            model.validate()?;
            Ok(VehicleEntry {
                model,
                speed: spec.speed,
                entry_time: spec.first_entry + i as f64 * spec.spacing / spec.speed,
                static_axle_forces: None,
            })
        })
        .collect()
}

/// One vehicle of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleEntry {
    pub model: VehicleModel,
    /// Speed [m/s].
    pub speed: f64,
    /// Time the rear axle reaches `x = 0` [s]; negative values start the
    /// vehicle on the deck.
    #[serde(default)]
    pub entry_time: f64,
    /// Replaces the gravity-derived static axle loads [N].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_axle_forces: Option<Vec<f64>>,
}

impl VehicleEntry {
    pub fn new(model: VehicleModel, speed: f64, entry_time: f64) -> Self {
        Self { model, speed, entry_time, static_axle_forces: None }
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(self.speed, self.entry_time, self.model.axle_offsets())
    }
}

/// Road profile settings; the domain is derived from the vehicle paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughnessSettings {
    pub level: RoughnessLevel,
    /// Falls back to the scenario seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_window: Option<usize>,
}

impl RoughnessSettings {
    pub fn new(level: RoughnessLevel) -> Self {
        Self { level, seed: None, grid_step: None, smoothing_window: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisMode {
    #[default]
    Coupled,
    Decoupled,
}

impl AnalysisMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Coupled => "coupled",
            Self::Decoupled => "decoupled",
        }
    }
}

impl std::str::FromStr for AnalysisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "decoupled" => Ok(Self::Decoupled),
            _ => Err(Error::InvalidScenario(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Time step [s].
    pub dt: f64,
    /// End time [s]; defaults to the last rear-axle exit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub mode: AnalysisMode,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub hermitian_interp: bool,
}

fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl SolverSettings {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            t_end: None,
            mode: AnalysisMode::Coupled,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            hermitian_interp: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub bridge: BridgeModel,
    #[serde(default)]
    pub vehicles: Vec<VehicleEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet: Option<FleetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roughness: Option<RoughnessSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficSpec>,
    pub solver: SolverSettings,
    /// Base seed for roughness (seed) and traffic (seed + 1) when those
    /// sections carry none of their own.
    #[serde(default)]
    pub seed: u64,
}

/// Length of road modelled before the first and after the last axle position.
const PROFILE_MARGIN: f64 = 5.0;

impl ScenarioConfig {
    pub fn new(bridge: BridgeModel, vehicles: Vec<VehicleEntry>, solver: SolverSettings) -> Self {
        Self { bridge, vehicles, fleet: None, roughness: None, traffic: None, solver, seed: 0 }
    }

    pub fn roughness_seed(&self) -> u64 {
        self.roughness.as_ref().and_then(|r| r.seed).unwrap_or(self.seed)
    }

    pub fn traffic_seed(&self) -> u64 {
        self.traffic.as_ref().and_then(|t| t.seed).unwrap_or(self.seed.wrapping_add(1))
    }

    pub fn fleet_seed(&self) -> u64 {
        self.fleet.as_ref().and_then(|f| f.seed).unwrap_or(self.seed.wrapping_add(2))
    }

    /// Explicit vehicles followed by the generated fleet.
    pub fn all_vehicles(&self) -> Result<Vec<VehicleEntry>> {
        let mut out = self.vehicles.clone();
        if let Some(fleet) = &self.fleet {
            out.extend(generate_fleet(fleet, self.fleet_seed())?);
        }
        Ok(out)
    }

    /// Explicit `t_end`, or the time the last rear axle leaves the deck.
    pub fn end_time(&self) -> Result<f64> {
        if let Some(t) = self.solver.t_end {
            return Ok(t);
        }
        let mut latest: Option<f64> = None;
        for v in self.all_vehicles()? {
            let exit = v.trajectory()?.exit_time(self.bridge.span_length);
            latest = Some(latest.map_or(exit, |t| t.max(exit)));
        }
        latest.ok_or_else(|| Error::InvalidScenario("t_end is required when there are no vehicles".into()))
    }

    pub fn num_steps(&self) -> Result<usize> {
        Ok((self.end_time()? / self.solver.dt - 1e-9).ceil().max(0.0) as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.bridge.with_defaults().validate()?;
        let s = &self.solver;
        if !(s.dt > 0.0) || !s.dt.is_finite() {
            return Err(Error::InvalidScenario(format!("dt must be positive, got {}", s.dt)));
        }
        if !(s.tol > 0.0) {
            return Err(Error::InvalidScenario(format!("tol must be positive, got {}", s.tol)));
        }
        if s.max_iter < 1 {
            return Err(Error::InvalidScenario("max_iter must be at least 1".into()));
        }
        for v in self.all_vehicles()? {
            v.model.validate()?;
            v.trajectory()?;
            if let Some(f) = &v.static_axle_forces {
                if f.len() != v.model.num_axles() {
                    return Err(Error::InvalidScenario(format!(
                        "static_axle_forces has {} entries for {} axles",
                        f.len(),
                        v.model.num_axles()
                    )));
                }
            }
        }
        if let Some(t) = &self.traffic {
            if !(t.unit_mass >= 0.0) {
                return Err(Error::InvalidScenario("traffic unit_mass must be non-negative".into()));
            }
        }
        let t_end = self.end_time()?;
        if !(t_end > 0.0) {
            return Err(Error::InvalidScenario(format!("t_end must be positive, got {t_end}")));
        }
        if let Some(r) = &self.roughness {
            self.roughness_spec(r)?.validate()?;
        }
        Ok(())
    }

    /// Profile spec covering every axle position over `[0, t_end]`.
    pub fn roughness_spec(&self, settings: &RoughnessSettings) -> Result<RoughnessSpec> {
        let t_end = self.end_time()?;
        let (mut lo, mut hi) = (0.0_f64, self.bridge.span_length);
        for v in self.all_vehicles()? {
            let traj = v.trajectory()?;
            lo = lo.min(traj.rear_position(0.0));
            hi = hi.max(traj.rear_position(t_end) + traj.wheelbase());
        }
        let mut spec = RoughnessSpec::new(
            settings.level,
            self.bridge.span_length,
            lo - PROFILE_MARGIN,
            hi + PROFILE_MARGIN,
            self.roughness_seed(),
        );
        if let Some(step) = settings.grid_step {
            spec.grid_step = step;
        }
        spec.smoothing_window = settings.smoothing_window;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{build_mesh, BridgeSystem};
    use crate::roughness::Harmonic;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn bridge() -> BridgeModel {
        BridgeModel::simply_supported(10.0, 2.0e11, 1e-3, 100.0, 0.0, 10)
    }

    fn state_from_nodes(system: &BridgeSystem, w: &[f64], w_dot: &[f64]) -> BridgeState {
        let mut s = BridgeState::at_rest(system.num_free());
        for (n, d) in system.mesh.dof_map.iter().enumerate() {
            if let Some(i) = d.uy {
                s.displacement[i] = w[n];
                s.velocity[i] = w_dot[n];
            }
        }
        s
    }

    fn one_harmonic(amplitude: f64, frequency: f64) -> RoughnessProfile {
        RoughnessProfile {
            harmonics: vec![Harmonic { amplitude, frequency, phase: 0.0 }],
            frequency_step: 0.01,
            x_start: -100.0,
            x_end: 100.0,
            grid_step: 0.1,
            samples: vec![],
        }
    }

    #[test]
    fn trajectory_positions_and_window() {
        let t = Trajectory::new(10.0, 1.0, vec![0.0, 3.0]).unwrap();
        assert_eq!(t.axle_positions(2.0), vec![10.0, 13.0]);
        assert_eq!(t.on_bridge_window(30.0), (0.7, 4.0));
        assert!(Trajectory::new(0.0, 0.0, vec![0.0]).is_err());
        assert!(Trajectory::new(1.0, 0.0, vec![0.0, 0.0]).is_err());
        assert!(Trajectory::new(1.0, 0.0, vec![1.0]).is_err());
    }

    #[test]
    fn linear_interpolation() {
        let system = BridgeSystem::new(&bridge()).unwrap();
        let n = system.mesh.num_nodes();
        let w: Vec<f64> = (0..n).map(|j| if j == 3 { 1.0 } else { 0.0 }).collect();
        let v: Vec<f64> = w.iter().map(|x| 2.0 * x).collect();
        let s = state_from_nodes(&system, &w, &v);
        assert_eq!(interpolate_bridge(&system.mesh, &s, 3.0, false).unwrap(), (1.0, 2.0));
        assert_eq!(interpolate_bridge(&system.mesh, &s, 2.5, false).unwrap(), (0.5, 1.0));
        assert_eq!(interpolate_bridge(&system.mesh, &s, 4.0, false).unwrap(), (0.0, 0.0));
        assert!(matches!(interpolate_bridge(&system.mesh, &s, 10.5, false), Err(Error::OffBridge(_))));
    }

    #[test]
    fn uniform_field_is_reproduced() {
        let mesh = build_mesh(&bridge()).unwrap();
        let mut s = BridgeState::at_rest(mesh.num_free);
        for d in &mesh.dof_map {
            if let Some(i) = d.uy {
                s.displacement[i] = -0.25;
            }
        }
        for x in [1.0, 1.3, 5.0, 8.99] {
            assert!((interpolate_bridge(&mesh, &s, x, false).unwrap().0 + 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_beats_linear_between_nodes() {
        let model = BridgeModel::simply_supported(10.0, 2.0e11, 1e-3, 100.0, 0.0, 4);
        let system = BridgeSystem::new(&model).unwrap();
        let q = 1000.0;
        let mut load = DVector::zeros(system.num_free());
        let nodal: Vec<f64> = (0..system.mesh.num_nodes()).map(|_| q * system.mesh.dx).collect();
        add_nodal_loads(&system.mesh, &nodal, &mut load);
        let u = system.assembly.stiffness.clone().cholesky().unwrap().solve(&load);
        let s = BridgeState { displacement: u, ..BridgeState::at_rest(system.num_free()) };
        let ei = model.flexural_rigidity();
        let exact = |x: f64| -q * x * (10f64.powi(3) - 2.0 * 10.0 * x * x + x.powi(3)) / (24.0 * ei);
        let x = 1.25;
        let lin = interpolate_bridge(&system.mesh, &s, x, false).unwrap().0;
        let her = interpolate_bridge(&system.mesh, &s, x, true).unwrap().0;
        assert!((her - exact(x)).abs() < (lin - exact(x)).abs());
    }

    #[test]
    fn contact_on_rigid_bridge_and_road() {
        let system = BridgeSystem::new(&bridge()).unwrap();
        let s = BridgeState::at_rest(system.num_free());
        let c = contact_input(&system.mesh, &s, None, 4.0, 10.0, false);
        assert_eq!((c.displacement, c.velocity, c.on_bridge), (0.0, 0.0, true));

        let (a, n, v) = (0.01, 0.1, 10.0);
        let road = one_harmonic(a, n);
        let c = contact_input(&system.mesh, &s, Some(&road), 2.5, v, false);
        assert!(c.displacement.abs() < 1e-15);
        assert!((c.velocity + v * 2.0 * PI * n * a).abs() < 1e-15);

        let c = contact_input(&system.mesh, &s, Some(&road), -20.0, v, false);
        assert!(!c.on_bridge);
        assert!((c.displacement - a * (2.0 * PI * n * -20.0).cos()).abs() < 1e-15);
        let c = contact_input(&system.mesh, &s, Some(&road), -200.0, v, false);
        assert!(!c.in_profile);
    }

    #[test]
    fn contact_superposes_bridge_and_road() {
        let system = BridgeSystem::new(&bridge()).unwrap();
        let delta = -0.003;
        let w: Vec<f64> = system.mesh.node_coords.iter().map(|x| delta * (PI * x / 10.0).sin()).collect();
        let zeros = vec![0.0; w.len()];
        let s = state_from_nodes(&system, &w, &zeros);
        let road = one_harmonic(0.002, 0.37);
        let c = contact_input(&system.mesh, &s, Some(&road), 5.0, 10.0, false);
        assert!((c.displacement - (delta + road.eval(5.0).r)).abs() < 1e-15);
    }

    #[test]
    fn force_mapping_examples() {
        let mesh = build_mesh(&bridge()).unwrap();
        let (nodal, uplift) = map_forces(&mesh, &[3.0], &[500.0]);
        assert_eq!((nodal[3], uplift), (500.0, 0));
        let (nodal, _) = map_forces(&mesh, &[3.5], &[500.0]);
        assert_eq!((nodal[3], nodal[4]), (250.0, 250.0));
        let (nodal, _) = map_forces(&mesh, &[3.25], &[1000.0]);
        assert_eq!((nodal[3], nodal[4]), (750.0, 250.0));
        let (nodal, _) = map_forces(&mesh, &[-0.1, 10.1], &[1000.0, 1000.0]);
        assert!(nodal.iter().all(|&f| f == 0.0));
        let (nodal, uplift) = map_forces(&mesh, &[5.0, 6.0], &[-10.0, 20.0]);
        assert_eq!((nodal[5], nodal[6], uplift), (0.0, 20.0, 1));
    }

    #[test]
    fn nodal_loads_skip_restrained_nodes() {
        let mesh = build_mesh(&bridge()).unwrap();
        let (nodal, _) = map_forces(&mesh, &[0.5, 5.0], &[100.0, 100.0]);
        let mut load = DVector::zeros(mesh.num_free);
        add_nodal_loads(&mesh, &nodal, &mut load);
        assert_eq!(load.sum(), -150.0);
        assert_eq!(load[mesh.dof_map[5].uy.unwrap()], -100.0);
    }

    #[test]
    fn traffic_totals_and_determinism() {
        let mesh = build_mesh(&bridge()).unwrap();
        assert!(traffic_forces(&mesh, &TrafficSpec::new(0, 3), 3).iter().all(|&f| f == 0.0));
        let spec = TrafficSpec::new(5, 3);
        let load = traffic_forces(&mesh, &spec, 3);
        assert!((-load.sum() - 98100.0).abs() <= 1e-9 * 98100.0);
        assert_eq!(load, traffic_forces(&mesh, &spec, 3));
        assert_ne!(load, traffic_forces(&mesh, &spec, 4));
        let nodal = traffic_nodal_forces(&mesh, &spec, 3);
        assert_eq!((nodal[0], nodal[10]), (0.0, 0.0));
        assert!(nodal[1..10].iter().all(|&f| f > 0.0));
    }

    fn base_car() -> HalfCar {
        HalfCar {
            body_mass: 2500.0,
            pitch_inertia: 2300.0,
            rear_stiffness: 1.8e5,
            rear_damping: 1e3,
            front_stiffness: 2.3e5,
            front_damping: 1e3,
            axle_spacing: 3.0,
            cg_to_rear: 1.7,
        }
    }

    #[test]
    fn fleet_is_seeded_and_sequential() {
        let spec = FleetSpec {
            count: 10,
            base: base_car(),
            speed: 20.0,
            first_entry: 0.0,
            spacing: 15.0,
            spread: 0.3,
            seed: None,
        };
        let a = generate_fleet(&spec, 9).unwrap();
        assert_eq!(a, generate_fleet(&spec, 9).unwrap());
        assert_eq!(a.len(), 10);
        for (i, v) in a.iter().enumerate() {
            assert!((v.entry_time - i as f64 * 0.75).abs() < 1e-12);
            let VehicleModel::TwoAxleComp2(car) = &v.model else { panic!() };
            for (x, b) in [
                (car.body_mass, 2500.0),
                (car.rear_stiffness, 1.8e5),
                (car.front_damping, 1e3),
            ] {
                assert!((0.7 * b..=1.3 * b).contains(&x));
            }
            assert_eq!(car.pitch_inertia, 2300.0);
        }
        assert!(generate_fleet(&FleetSpec { spacing: 2.0, ..spec }, 1).is_err());
    }

    #[test]
    fn scenario_defaults_and_validation() {
        let model = VehicleModel::OneAxleSimple { mass: 1200.0, stiffness: 5e5, damping: 0.0 };
        let mut cfg = ScenarioConfig::new(bridge(), vec![VehicleEntry::new(model, 10.0, 0.5)], SolverSettings::new(0.01));
        assert_eq!(cfg.end_time().unwrap(), 1.5);
        assert_eq!(cfg.num_steps().unwrap(), 150);
        cfg.validate().unwrap();
        cfg.seed = 7;
        assert_eq!((cfg.roughness_seed(), cfg.traffic_seed()), (7, 8));
        cfg.roughness = Some(RoughnessSettings::new(RoughnessLevel::Coefficient(1e-6)));
        let spec = cfg.roughness_spec(cfg.roughness.as_ref().unwrap()).unwrap();
        assert_eq!((spec.x_start, spec.x_end), (-10.0, 15.0));
        cfg.solver.tol = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidScenario(_))));
        cfg.solver.tol = 1e-6;
        cfg.vehicles[0].static_axle_forces = Some(vec![1.0, 2.0]);
        assert!(cfg.validate().is_err());
        cfg.vehicles.clear();
        assert!(cfg.end_time().is_err());
    }

    #[test]
    fn scenario_round_trips_through_toml() {
        let text = r#"
            seed = 4
            [bridge]
            span_length = 25.0
            elastic_modulus = 2.75e10
            second_moment = 0.12
            mass_per_length = 4800.0

            [[vehicles]]
            speed = 10.0
            [vehicles.model]
            type = "one_axle_simple"
            mass = 1200.0
            stiffness = 5e5

            [roughness]
            level = "C"

            [traffic]
            n_vehicles = 5

            [solver]
            dt = 0.001
            mode = "decoupled"
        "#;
        let cfg: ScenarioConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.bridge.with_defaults().num_elements, 20);
        assert_eq!(cfg.solver.mode, AnalysisMode::Decoupled);
        assert_eq!(cfg.solver.max_iter, DEFAULT_MAX_ITER);
        assert_eq!(cfg.roughness.as_ref().unwrap().level, RoughnessLevel::Class(crate::roughness::IsoClass::C));
        let back: ScenarioConfig = toml::from_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let bad = text.replace("dt = 0.001", "dt = 0.001\ndtt = 1");
        assert!(toml::from_str::<ScenarioConfig>(&bad).is_err());
    }

    proptest! {
        #[test]
        fn mapping_is_a_partition_of_unity(
            xs in proptest::collection::vec(0.0f64..=10.0, 1..6),
            fs in proptest::collection::vec(0.0f64..1e6, 6),
        ) {
            let mesh = build_mesh(&bridge()).unwrap();
            let (nodal, _) = map_forces(&mesh, &xs, &fs[..xs.len()]);
            let applied: f64 = fs[..xs.len()].iter().sum();
            let mapped: f64 = nodal.iter().sum();
            prop_assert!((mapped - applied).abs() <= 1e-9 * applied.max(1.0));
            let moment: f64 = nodal.iter().zip(&mesh.node_coords).map(|(f, x)| f * x).sum();
            let applied_moment: f64 = xs.iter().zip(&fs).map(|(x, f)| x * f).sum();
            prop_assert!((moment - applied_moment).abs() <= 1e-9 * applied_moment.abs().max(1.0) * 10.0);
        }

        #[test]
        fn interpolation_preserves_affine_fields(a in -1.0f64..1.0, b in -0.1f64..0.1, x in 1.0f64..9.0) {
            let system = BridgeSystem::new(&bridge()).unwrap();
            let w: Vec<f64> = system.mesh.node_coords.iter().map(|x| a + b * x).collect();
            let s = state_from_nodes(&system, &w, &w);
            let (val, vel) = interpolate_bridge(&system.mesh, &s, x, false).unwrap();
            prop_assert!((val - (a + b * x)).abs() < 1e-12);
            prop_assert!((vel - (a + b * x)).abs() < 1e-12);
        }
    }
}
