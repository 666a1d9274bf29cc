//! Built-in scenarios: the four validation cases and the parametric-study
//! bridges with their two reference vehicles.

use serde::{Deserialize, Serialize};

use crate::beam::BridgeModel;
use crate::coupling::{
    RoughnessSettings, ScenarioConfig, SolverSettings, TrafficSpec, VehicleEntry, BENCHMARK_TOLERANCE,
    DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::roughness::{IsoClass, RoughnessLevel};
use crate::vehicle::{FullHalfCar, HalfCar, QuarterCar, VehicleModel};

pub const BENCHMARK_DT: f64 = 1e-3;

pub const BENCHMARK_NAMES: [&str; 12] = [
    "yang2004",
    "yang2019",
    "nube_v1",
    "nube_v2",
    "eshkevari_15_commercial",
    "eshkevari_15_heavy",
    "eshkevari_30_commercial",
    "eshkevari_30_heavy",
    "eshkevari_50_commercial",
    "eshkevari_50_heavy",
    "eshkevari_100_commercial",
    "eshkevari_100_heavy",
];

/// Elastic modulus shared by the parametric-study bridges [Pa].
pub const STUDY_MODULUS: f64 = 27.5e9;
pub const STUDY_DAMPING: f64 = 0.003;
/// Road length driven before the rear axle reaches the deck [m].
pub const STUDY_APPROACH: f64 = 10.0;
pub const STUDY_SPEED: f64 = 10.0;
pub const STUDY_SEED: u64 = 1;

/// One row of the parametric-study bridge set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyBridge {
    pub span: f64,
    pub second_moment: f64,
    pub mass_per_length: f64,
    /// Listed fundamental frequency [Hz].
    pub f1: f64,
    pub mu_commercial: f64,
    pub mu_heavy: f64,
}

pub const STUDY_BRIDGES: [StudyBridge; 4] = [
    StudyBridge { span: 15.0, second_moment: 0.0024, mass_per_length: 49.0, f1: 8.03, mu_commercial: 0.7303, mu_heavy: 24.530 },
    StudyBridge { span: 30.0, second_moment: 0.0188, mass_per_length: 119.0, f1: 3.63, mu_commercial: 0.1495, mu_heavy: 5.022 },
    StudyBridge { span: 50.0, second_moment: 0.1693, mass_per_length: 437.0, f1: 2.05, mu_commercial: 0.0245, mu_heavy: 0.823 },
    StudyBridge { span: 100.0, second_moment: 0.9148, mass_per_length: 1104.0, f1: 0.75, mu_commercial: 0.0049, mu_heavy: 0.163 },
];

pub fn study_bridge(span: f64) -> Result<StudyBridge> {
    STUDY_BRIDGES
        .iter()
        .find(|b| b.span == span)
        .copied()
        .ok_or_else(|| Error::UnknownBenchmark(format!("study bridge with span {span} m")))
}

impl StudyBridge {
    pub fn model(&self) -> BridgeModel {
        BridgeModel::simply_supported(
            self.span,
            STUDY_MODULUS,
            self.second_moment,
            self.mass_per_length,
            STUDY_DAMPING,
            0,
        )
        .with_defaults()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyVehicle {
    Commercial,
    Heavy,
}

impl StudyVehicle {
    pub const ALL: [StudyVehicle; 2] = [Self::Commercial, Self::Heavy];

    pub fn name(self) -> &'static str {
        match self {
            Self::Commercial => "commercial",
            Self::Heavy => "heavy",
        }
    }

    /// Quarter-car models with total masses of 535.9 kg and 18 t.
    pub fn model(self) -> VehicleModel {
        VehicleModel::OneAxleComp(match self {
            Self::Commercial => QuarterCar {
                sprung_mass: 466.5,
                unsprung_mass: 69.4,
                suspension_stiffness: 5.7e4,
                suspension_damping: 2.0e3,
                tyre_stiffness: 1.35e5,
                tyre_damping: 0.0,
            },
            Self::Heavy => QuarterCar {
                sprung_mass: 16_000.0,
                unsprung_mass: 2_000.0,
                suspension_stiffness: 4.0e6,
                suspension_damping: 4.0e4,
                tyre_stiffness: 1.0e7,
                tyre_damping: 0.0,
            },
        })
    }
}

/// Parametric-study scenario: the vehicle starts [`STUDY_APPROACH`] before
/// the deck and the run ends when it leaves.
pub fn study_scenario(
    bridge: StudyBridge,
    vehicle: StudyVehicle,
    class: IsoClass,
    speed: f64,
    traffic: usize,
) -> ScenarioConfig {
    let entry = VehicleEntry::new(vehicle.model(), speed, STUDY_APPROACH / speed);
    let mut solver = SolverSettings::new(BENCHMARK_DT);
    solver.tol = DEFAULT_TOLERANCE;
    let mut cfg = ScenarioConfig::new(bridge.model(), vec![entry], solver);
    cfg.seed = STUDY_SEED;
    cfg.roughness = Some(RoughnessSettings::new(RoughnessLevel::Class(class)));
    if traffic > 0 {
        cfg.traffic = Some(TrafficSpec::new(traffic, STUDY_SEED + 1));
    }
    cfg
}

fn benchmark(bridge: BridgeModel, model: VehicleModel, speed: f64) -> ScenarioConfig {
    // the first axle reaches the deck at t = 0
    let wheelbase = *model.axle_offsets().last().unwrap_or(&0.0);
    let entry = VehicleEntry::new(model, speed, wheelbase / speed);
    let mut solver = SolverSettings::new(BENCHMARK_DT);
    solver.tol = BENCHMARK_TOLERANCE;
    ScenarioConfig::new(bridge.with_defaults(), vec![entry], solver)
}

pub fn yang2004() -> ScenarioConfig {
    let bridge = BridgeModel::simply_supported(25.0, 2.75e10, 0.12, 4800.0, 0.0, 0);
    let vehicle = VehicleModel::OneAxleSimple { mass: 1200.0, stiffness: 5.0e5, damping: 0.0 };
    benchmark(bridge, vehicle, 10.0)
}

pub fn yang2019() -> ScenarioConfig {
    let modulus = 2.75e10;
    let bridge = BridgeModel::simply_supported(30.0, modulus, 1.56e10 / modulus, 4400.0, 0.0, 0);
    let vehicle = VehicleModel::TwoAxleComp2(HalfCar {
        body_mass: 2500.0,
        pitch_inertia: 2300.0,
        rear_stiffness: 1.8e5,
        rear_damping: 0.0,
        front_stiffness: 2.3e5,
        front_damping: 0.0,
        axle_spacing: 3.0,
        cg_to_rear: 1.7,
    });
    benchmark(bridge, vehicle, 10.0)
}

pub fn nube_bridge() -> BridgeModel {
    BridgeModel::simply_supported(27.0, 3.5e10, 1.7055, 19_372.0, 0.0, 0)
}

pub fn nube_v1() -> ScenarioConfig {
    let vehicle = VehicleModel::OneAxleComp(QuarterCar {
        sprung_mass: 8000.0,
        unsprung_mass: 1100.0,
        suspension_stiffness: 2.0e6,
        suspension_damping: 4.0e4,
        tyre_stiffness: 3.5e6,
        tyre_damping: 0.0,
    });
    benchmark(nube_bridge(), vehicle, 25.0)
}

pub fn nube_v2() -> ScenarioConfig {
    let vehicle = VehicleModel::TwoAxleComp3(FullHalfCar {
        body_mass: 10_500.0,
        pitch_inertia: 50_000.0,
        rear_axle_mass: 900.0,
        front_axle_mass: 900.0,
        rear_stiffness: 6.0e6,
        rear_damping: 1.0e4,
        front_stiffness: 6.0e6,
        front_damping: 1.0e4,
        rear_tyre_stiffness: 1.75e6,
        rear_tyre_damping: 0.0,
        front_tyre_stiffness: 1.75e6,
        front_tyre_damping: 0.0,
        axle_spacing: 5.0,
        cg_to_rear: 2.5,
    });
    benchmark(nube_bridge(), vehicle, 25.0)
}

pub fn benchmark_config(name: &str) -> Result<ScenarioConfig> {
    match name {
        "yang2004" => Ok(yang2004()),
        "yang2019" => Ok(yang2019()),
        "nube_v1" => Ok(nube_v1()),
        "nube_v2" => Ok(nube_v2()),
        _ => {
            let unknown = || Error::UnknownBenchmark(name.to_string());
            let rest = name.strip_prefix("eshkevari_").ok_or_else(unknown)?;
            let (span, vehicle) = rest.split_once('_').ok_or_else(unknown)?;
            let span: f64 = span.parse().map_err(|_| unknown())?;
            let vehicle = match vehicle {
                "commercial" => StudyVehicle::Commercial,
                "heavy" => StudyVehicle::Heavy,
                _ => return Err(unknown()),
            };
            let bridge = study_bridge(span).map_err(|_| unknown())?;
            Ok(study_scenario(bridge, vehicle, IsoClass::C, STUDY_SPEED, 0))
        }
    }
}

/// Total vehicle mass over total bridge mass.
pub fn mass_ratio(cfg: &ScenarioConfig) -> Result<f64> {
    let vehicles: f64 = cfg.all_vehicles()?.iter().map(|v| v.model.total_mass()).sum();
    Ok(vehicles / cfg.bridge.total_mass())
}
