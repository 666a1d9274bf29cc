mod common;

use common::modal;
use proptest::prelude::*;
use vbi_core::analysis::benchmarks::{self, StudyVehicle, STUDY_BRIDGES};
use vbi_core::analysis::{compare_modes, run_both};
use vbi_core::coupling::{self, FleetSpec, RoughnessSettings, ScenarioConfig, TrafficSpec};
use vbi_core::roughness::{IsoClass, RoughnessLevel};
use vbi_core::vehicle::{self, HalfCar, VehicleModel};

fn rough_yang2004(scale: f64) -> ScenarioConfig {
    let mut cfg = benchmarks::yang2004();
    let statics = vehicle::static_axle_forces(&cfg.vehicles[0].model).unwrap();
    cfg.vehicles[0].static_axle_forces = Some(statics.iter().map(|f| scale * f).collect());
    let g = IsoClass::B.coefficient() * scale * scale;
    cfg.roughness = Some(RoughnessSettings::new(RoughnessLevel::Coefficient(g)));
    let mut traffic = TrafficSpec::new(3, 11);
    traffic.unit_mass *= scale;
    cfg.traffic = Some(traffic);
    cfg.solver.tol = 1e-10;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn scaling_every_load_leaves_iterations_unchanged(power in -6i32..7) {
        let base = coupling::run_coupled(&rough_yang2004(1.0)).unwrap();
        let scale = 2f64.powi(power);
        let scaled = coupling::run_coupled(&rough_yang2004(scale)).unwrap();
        prop_assert_eq!(&base.iterations, &scaled.iterations);
        for (a, b) in base.midspan_displacement().iter().zip(scaled.midspan_displacement()) {
            prop_assert_eq!(a * scale, b);
        }
    }
}

#[test]
fn coupling_effect_grows_with_vehicle_mass() {
    let bridge = STUDY_BRIDGES[0];
    for vehicle in StudyVehicle::ALL {
        let mut gaps = Vec::new();
        for factor in [0.01, 0.1, 1.0, 10.0] {
            let mut cfg = benchmarks::study_scenario(bridge, vehicle, IsoClass::C, 10.0, 0);
            cfg.vehicles[0].model = cfg.vehicles[0].model.with_mass_scale(factor);
            let (c, d) = run_both(&cfg).unwrap();
            let diff: Vec<f64> =
                c.midspan_displacement().iter().zip(d.midspan_displacement()).map(|(a, b)| a - b).collect();
            gaps.push(modal::rms(&diff));
        }
        assert!(gaps.windows(2).all(|w| w[1] >= w[0]), "{}: {gaps:?}", vehicle.name());
    }
}

#[test]
fn nube_vehicles_are_nearly_decoupled() {
    for cfg in [benchmarks::nube_v1(), benchmarks::nube_v2()] {
        let (c, d) = run_both(&cfg).unwrap();
        let r2 = compare_modes(&c, &d).unwrap().midspan_displacement.r_squared.unwrap();
        assert!(r2 > 0.99, "{r2}");
    }
}

#[test]
fn decoupled_bridge_ignores_vehicle_dynamics() {
    let mut soft = benchmarks::yang2004();
    let mut stiff = soft.clone();
    soft.vehicles[0].model = VehicleModel::OneAxleSimple { mass: 1200.0, stiffness: 1e5, damping: 0.0 };
    stiff.vehicles[0].model = VehicleModel::OneAxleSimple { mass: 1200.0, stiffness: 5e6, damping: 2e3 };
    let a = coupling::run_decoupled(&soft).unwrap();
    let b = coupling::run_decoupled(&stiff).unwrap();
    let (wa, wb) = (a.midspan_displacement(), b.midspan_displacement());
    let gap = wa.iter().zip(&wb).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(gap <= 1e-12 * modal::peak_abs(&wa), "{gap:e}");
    assert_ne!(a.vehicles[0].displacement, b.vehicles[0].displacement);
}

#[test]
fn slow_coupled_crossing_tracks_the_static_influence_line() {
    let mut cfg = benchmarks::yang2004();
    cfg.bridge.damping_ratio = 0.05;
    cfg.vehicles[0].speed = 0.5;
    cfg.solver.dt = 5e-3;
    cfg.solver.tol = 1e-8;
    let result = coupling::run_coupled(&cfg).unwrap();
    let beam = common::oracle_beam(&cfg.bridge, 101);
    let weight = 1200.0 * vehicle::GRAVITY;
    let span = cfg.bridge.span_length;
    let reference: Vec<f64> = result
        .time
        .iter()
        .map(|&ti| {
            let x = 0.5 * (ti - cfg.vehicles[0].entry_time);
            if (0.0..=span).contains(&x) {
                beam.static_deflection(weight, x, 0.5 * span)
            } else {
                0.0
            }
        })
        .collect();
    let r2 = modal::r_squared(&reference, &result.midspan_displacement());
    assert!(r2 > 0.999, "{r2}");
}

#[test]
fn rich_scenario_is_bitwise_repeatable() {
    let mut cfg = benchmarks::study_scenario(STUDY_BRIDGES[1], StudyVehicle::Commercial, IsoClass::D, 15.0, 4);
    cfg.fleet = Some(FleetSpec {
        count: 3,
        base: HalfCar {
            body_mass: 2500.0,
            pitch_inertia: 2300.0,
            rear_stiffness: 1.8e5,
            rear_damping: 4e3,
            front_stiffness: 2.3e5,
            front_damping: 4e3,
            axle_spacing: 3.0,
            cg_to_rear: 1.5,
        },
        speed: 15.0,
        first_entry: 0.5,
        spacing: 12.0,
        spread: 0.3,
        seed: None,
    });
    for mode in [coupling::AnalysisMode::Coupled, coupling::AnalysisMode::Decoupled] {
        cfg.solver.mode = mode;
        assert_eq!(coupling::run(&cfg).unwrap(), coupling::run(&cfg).unwrap());
    }
}

#[test]
fn empty_smooth_scenario_stays_at_rest() {
    let mut cfg = benchmarks::yang2004();
    cfg.vehicles.clear();
    cfg.solver.t_end = Some(0.5);
    for result in [coupling::run_coupled(&cfg).unwrap(), coupling::run_decoupled(&cfg).unwrap()] {
        assert!(result.bridge_displacement.iter().flatten().all(|w| *w == 0.0));
    }
}
