#![allow(dead_code)]

pub mod modal;

use modal::{Body, Quarter, Vehicle};
use vbi_core::analysis::Window;
use vbi_core::beam::BridgeModel;
use vbi_core::coupling::SimulationResult;
use vbi_core::vehicle::{self, FullHalfCar, HalfCar, QuarterCar, VehicleModel};

fn quarter(q: &QuarterCar) -> Quarter {
    Quarter {
        sprung: q.sprung_mass,
        unsprung: q.unsprung_mass,
        k_susp: q.suspension_stiffness,
        c_susp: q.suspension_damping,
        k_tyre: q.tyre_stiffness,
        c_tyre: q.tyre_damping,
    }
}

fn body(h: &HalfCar) -> Body {
    Body {
        mass: h.body_mass,
        inertia: h.pitch_inertia,
        k_rear: h.rear_stiffness,
        c_rear: h.rear_damping,
        k_front: h.front_stiffness,
        c_front: h.front_damping,
        spacing: h.axle_spacing,
        cg_to_rear: h.cg_to_rear,
    }
}

pub fn oracle_vehicle(model: &VehicleModel) -> Vehicle {
    match model {
        VehicleModel::OneAxleSimple { mass, stiffness, damping } => {
            Vehicle::Simple { mass: *mass, k: *stiffness, c: *damping }
        }
        VehicleModel::OneAxleComp(q) => Vehicle::Quarter(quarter(q)),
        VehicleModel::TwoAxleComp1 { rear, front, axle_spacing } => {
            Vehicle::TwinQuarter { rear: quarter(rear), front: quarter(front), spacing: *axle_spacing }
        }
        VehicleModel::TwoAxleComp2(h) => Vehicle::HalfCar(body(h)),
        VehicleModel::TwoAxleComp3(h) => {
            let axle = |m: f64, k: f64, c: f64| Quarter {
                sprung: 0.0,
                unsprung: m,
                k_susp: 0.0,
                c_susp: 0.0,
                k_tyre: k,
                c_tyre: c,
            };
            Vehicle::FullHalfCar {
                body: body(&h.body()),
                rear: axle(h.rear_axle_mass, h.rear_tyre_stiffness, h.rear_tyre_damping),
                front: axle(h.front_axle_mass, h.front_tyre_stiffness, h.front_tyre_damping),
            }
        }
    }
}

pub fn oracle_beam(model: &BridgeModel, modes: usize) -> modal::Beam {
    modal::Beam {
        span: model.span_length,
        flexural_rigidity: model.flexural_rigidity(),
        mass_per_length: model.mass_per_length,
        damping_ratio: model.damping_ratio,
        modes,
    }
}

/// One representative of each vehicle tag with damping everywhere.
pub fn all_tags() -> Vec<VehicleModel> {
    let q = |ms: f64, mu: f64| QuarterCar {
        sprung_mass: ms,
        unsprung_mass: mu,
        suspension_stiffness: 4.0e5,
        suspension_damping: 1.0e4,
        tyre_stiffness: 1.5e6,
        tyre_damping: 2.0e3,
    };
    vec![
        VehicleModel::OneAxleSimple { mass: 1200.0, stiffness: 5.0e5, damping: 3.0e3 },
        VehicleModel::OneAxleComp(q(3000.0, 400.0)),
        VehicleModel::TwoAxleComp1 { rear: q(3000.0, 400.0), front: q(2200.0, 300.0), axle_spacing: 4.0 },
        VehicleModel::TwoAxleComp2(HalfCar {
            body_mass: 2500.0,
            pitch_inertia: 2300.0,
            rear_stiffness: 1.8e5,
            rear_damping: 4.0e3,
            front_stiffness: 2.3e5,
            front_damping: 5.0e3,
            axle_spacing: 3.0,
            cg_to_rear: 1.7,
        }),
        VehicleModel::TwoAxleComp3(FullHalfCar {
            body_mass: 10_500.0,
            pitch_inertia: 50_000.0,
            rear_axle_mass: 900.0,
            front_axle_mass: 700.0,
            rear_stiffness: 6.0e6,
            rear_damping: 1.0e4,
            front_stiffness: 5.0e6,
            front_damping: 1.2e4,
            rear_tyre_stiffness: 1.75e6,
            rear_tyre_damping: 1.0e3,
            front_tyre_stiffness: 1.6e6,
            front_tyre_damping: 1.5e3,
            axle_spacing: 5.0,
            cg_to_rear: 2.2,
        }),
    ]
}

/// Worst relative RMS error over every DOF between the engine's Newmark
/// vehicle and the RK4 oracle (dt/100) under 5 s of two-tone contact motion.
pub fn vehicle_oracle_error(model: &VehicleModel) -> f64 {
    use nalgebra::DVector;
    let dt = 5e-4;
    let steps = 10_000;
    let axles = model.num_axles();
    let input = |t: f64| {
        let tone = |a: usize, t: f64| {
            let phase = 0.7 * a as f64;
            let (w1, w2) = (2.0 * std::f64::consts::PI * 1.3, 2.0 * std::f64::consts::PI * 4.1);
            let decay = (-t / 0.05).exp();
            let ramp = (1.0 - decay).powi(2);
            let dramp = 2.0 * (1.0 - decay) * decay / 0.05;
            let s = 0.01 * (w1 * t + phase).sin() + 0.004 * (w2 * t + 2.0 * phase).sin();
            let ds = 0.01 * w1 * (w1 * t + phase).cos() + 0.004 * w2 * (w2 * t + 2.0 * phase).cos();
            (ramp * s, dramp * s + ramp * ds)
        };
        let (u, ud): (Vec<f64>, Vec<f64>) = (0..axles).map(|a| tone(a, t)).unzip();
        (u, ud)
    };
    let reference = modal::drive(&oracle_vehicle(model), input, dt, steps, 100);

    let system = vehicle::build_system(model).unwrap();
    let integrator = system.integrator(dt).unwrap();
    let mut state = vbi_core::vehicle::VehicleState::at_rest(system.num_free());
    let mut engine = vec![state.displacement.iter().copied().collect::<Vec<_>>()];
    for step in 1..=steps {
        let (u, ud) = input(step as f64 * dt);
        let (next, _) = integrator
            .step_imposed(&state, &DVector::from_vec(u), &DVector::from_vec(ud))
            .unwrap();
        state = next;
        engine.push(state.displacement.iter().copied().collect());
    }
    (0..system.num_free())
        .map(|d| {
            let r: Vec<f64> = reference.displacement.iter().map(|row| row[d]).collect();
            let e: Vec<f64> = engine.iter().map(|row| row[d]).collect();
            modal::relative_rms(&r, &e)
        })
        .fold(0.0, f64::max)
}

/// Samples of `series` inside the first vehicle's on-bridge window.
pub fn in_window(result: &SimulationResult, series: &[f64]) -> Vec<f64> {
    let w = Window::on_bridge(result, 0).unwrap();
    result.time.iter().zip(series).filter(|(t, _)| w.contains(**t)).map(|(_, v)| *v).collect()
}
