//! Reference solutions built from first principles: vehicle equations of
//! motion written out force by force, and a simply supported beam in modal
//! coordinates. Everything is integrated with classical RK4. Only `std`.
//!
//! Displacements are upward positive, pitch is nose-up positive, contact
//! forces are downward-positive loads on the deck.

#![allow(dead_code)]

use std::f64::consts::PI;

pub const G: f64 = 9.81;

#[derive(Debug, Clone, Copy)]
pub struct Quarter {
    pub sprung: f64,
    pub unsprung: f64,
    pub k_susp: f64,
    pub c_susp: f64,
    pub k_tyre: f64,
    pub c_tyre: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Body {
    pub mass: f64,
    pub inertia: f64,
    pub k_rear: f64,
    pub c_rear: f64,
    pub k_front: f64,
    pub c_front: f64,
    pub spacing: f64,
    pub cg_to_rear: f64,
}

impl Body {
    fn arms(&self) -> (f64, f64) {
        (self.spacing - self.cg_to_rear, self.cg_to_rear)
    }
}

#[derive(Debug, Clone)]
pub enum Vehicle {
    /// `[y]`
    Simple { mass: f64, k: f64, c: f64 },
    /// `[y_axle, y_body]`
    Quarter(Quarter),
    /// `[y_axle_r, y_body_r, y_axle_f, y_body_f]`
    TwinQuarter { rear: Quarter, front: Quarter, spacing: f64 },
    /// `[y, θ]`
    HalfCar(Body),
    /// `[y_axle_r, y_axle_f, y, θ]`
    FullHalfCar { body: Body, rear: Quarter, front: Quarter },
}

fn tension(k: f64, c: f64, e: f64, e_dot: f64) -> f64 {
    k * e + c * e_dot
}

impl Vehicle {
    pub fn dofs(&self) -> usize {
        match self {
            Self::Simple { .. } => 1,
            Self::Quarter(_) | Self::HalfCar(_) => 2,
            Self::TwinQuarter { .. } | Self::FullHalfCar { .. } => 4,
        }
    }

    pub fn axle_offsets(&self) -> Vec<f64> {
        match self {
            Self::Simple { .. } | Self::Quarter(_) => vec![0.0],
            Self::TwinQuarter { spacing, .. } => vec![0.0, *spacing],
            Self::HalfCar(b) | Self::FullHalfCar { body: b, .. } => vec![0.0, b.spacing],
        }
    }

    pub fn body_dof(&self) -> usize {
        match self {
            Self::Simple { .. } | Self::HalfCar(_) => 0,
            Self::Quarter(_) | Self::TwinQuarter { .. } => 1,
            Self::FullHalfCar { .. } => 2,
        }
    }

    /// Axle loads under gravity from statics (lever rule for the body).
    pub fn static_loads(&self) -> Vec<f64> {
        match self {
            Self::Simple { mass, .. } => vec![mass * G],
            Self::Quarter(q) => vec![(q.sprung + q.unsprung) * G],
            Self::TwinQuarter { rear, front, .. } => {
                vec![(rear.sprung + rear.unsprung) * G, (front.sprung + front.unsprung) * G]
            }
            Self::HalfCar(b) => {
                let (d1, d2) = b.arms();
                vec![b.mass * G * d1 / b.spacing, b.mass * G * d2 / b.spacing]
            }
            Self::FullHalfCar { body: b, rear, front } => {
                let (d1, d2) = b.arms();
                vec![
                    b.mass * G * d1 / b.spacing + rear.unsprung * G,
                    b.mass * G * d2 / b.spacing + front.unsprung * G,
                ]
            }
        }
    }

    /// Accelerations of the vehicle DOFs and the dynamic contact loads for
    /// contact displacements `u` and velocities `ud`.
    pub fn rates(&self, y: &[f64], yd: &[f64], u: &[f64], ud: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            Self::Simple { mass, k, c } => {
                let f = tension(*k, *c, y[0] - u[0], yd[0] - ud[0]);
                (vec![-f / mass], vec![-f])
            }
            Self::Quarter(q) => {
                let (acc, load) = quarter(q, y[0], y[1], yd[0], yd[1], u[0], ud[0]);
                (acc.to_vec(), vec![load])
            }
            Self::TwinQuarter { rear, front, .. } => {
                let (ar, lr) = quarter(rear, y[0], y[1], yd[0], yd[1], u[0], ud[0]);
                let (af, lf) = quarter(front, y[2], y[3], yd[2], yd[3], u[1], ud[1]);
                (vec![ar[0], ar[1], af[0], af[1]], vec![lr, lf])
            }
            Self::HalfCar(b) => {
                let (d1, d2) = b.arms();
                let fr = tension(b.k_rear, b.c_rear, y[0] - d2 * y[1] - u[0], yd[0] - d2 * yd[1] - ud[0]);
                let ff = tension(b.k_front, b.c_front, y[0] + d1 * y[1] - u[1], yd[0] + d1 * yd[1] - ud[1]);
                (vec![-(fr + ff) / b.mass, (d2 * fr - d1 * ff) / b.inertia], vec![-fr, -ff])
            }
            Self::FullHalfCar { body: b, rear, front } => {
                let (d1, d2) = b.arms();
                let (yr, yf, yb, th) = (y[0], y[1], y[2], y[3]);
                let (vr, vf, vb, om) = (yd[0], yd[1], yd[2], yd[3]);
                let tr = tension(rear.k_tyre, rear.c_tyre, yr - u[0], vr - ud[0]);
                let tf = tension(front.k_tyre, front.c_tyre, yf - u[1], vf - ud[1]);
                let sr = tension(b.k_rear, b.c_rear, yb - d2 * th - yr, vb - d2 * om - vr);
                let sf = tension(b.k_front, b.c_front, yb + d1 * th - yf, vb + d1 * om - vf);
                (
                    vec![
                        (sr - tr) / rear.unsprung,
                        (sf - tf) / front.unsprung,
                        -(sr + sf) / b.mass,
                        (d2 * sr - d1 * sf) / b.inertia,
                    ],
                    vec![-tr, -tf],
                )
            }
        }
    }
}

fn quarter(q: &Quarter, ya: f64, yb: f64, va: f64, vb: f64, u: f64, ud: f64) -> ([f64; 2], f64) {
    let t = tension(q.k_tyre, q.c_tyre, ya - u, va - ud);
    let s = tension(q.k_susp, q.c_susp, yb - ya, vb - va);
    ([(s - t) / q.unsprung, -s / q.sprung], -t)
}

fn rk4<F>(f: &F, t: f64, h: f64, s: &[f64]) -> Vec<f64>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let axpy = |a: f64, k: &[f64]| s.iter().zip(k).map(|(x, d)| x + a * d).collect::<Vec<_>>();
    let k1 = f(t, s);
    let k2 = f(t + 0.5 * h, &axpy(0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(0.5 * h, &k2));
    let k4 = f(t + h, &axpy(h, &k3));
    (0..s.len()).map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// Vehicle history sampled every `dt`.
#[derive(Debug, Clone, Default)]
pub struct VehicleTrace {
    pub time: Vec<f64>,
    pub displacement: Vec<Vec<f64>>,
    pub acceleration: Vec<Vec<f64>>,
    /// Total contact loads (static + dynamic).
    pub contact_forces: Vec<Vec<f64>>,
}

impl VehicleTrace {
    pub fn dof(&self, field: &[Vec<f64>], i: usize) -> Vec<f64> {
        field.iter().map(|row| row[i]).collect()
    }
}

/// Vehicle driven by prescribed contact motion `input(t) -> (u, u̇)`,
/// starting from rest at static equilibrium.
pub fn drive<I>(vehicle: &Vehicle, input: I, dt: f64, steps: usize, substeps: usize) -> VehicleTrace
where
    I: Fn(f64) -> (Vec<f64>, Vec<f64>),
{
    let n = vehicle.dofs();
    let rhs = |t: f64, s: &[f64]| {
        let (u, ud) = input(t);
        let (acc, _) = vehicle.rates(&s[..n], &s[n..], &u, &ud);
        s[n..].iter().copied().chain(acc).collect::<Vec<_>>()
    };
    let statics = vehicle.static_loads();
    let mut trace = VehicleTrace::default();
    let record = |t: f64, s: &[f64], trace: &mut VehicleTrace| {
        let (u, ud) = input(t);
        let (acc, load) = vehicle.rates(&s[..n], &s[n..], &u, &ud);
        trace.time.push(t);
        trace.displacement.push(s[..n].to_vec());
        trace.acceleration.push(acc);
        trace.contact_forces.push(statics.iter().zip(load).map(|(a, b)| a + b).collect());
    };
    let mut s = vec![0.0; 2 * n];
    record(0.0, &s, &mut trace);
    let h = dt / substeps as f64;
    for step in 0..steps {
        for sub in 0..substeps {
            s = rk4(&rhs, step as f64 * dt + sub as f64 * h, h, &s);
        }
        record((step + 1) as f64 * dt, &s, &mut trace);
    }
    trace
}

#[derive(Debug, Clone, Copy)]
pub struct Beam {
    pub span: f64,
    pub flexural_rigidity: f64,
    pub mass_per_length: f64,
    pub damping_ratio: f64,
    pub modes: usize,
}

impl Beam {
    /// Circular frequency of mode `n` (1-based).
    pub fn omega(&self, n: usize) -> f64 {
        let k = n as f64 * PI / self.span;
        k * k * (self.flexural_rigidity / self.mass_per_length).sqrt()
    }

    pub fn frequency_hz(&self, n: usize) -> f64 {
        self.omega(n) / (2.0 * PI)
    }

    fn shape(&self, n: usize, x: f64) -> f64 {
        (n as f64 * PI * x / self.span).sin()
    }

    fn slope(&self, n: usize, x: f64) -> f64 {
        let k = n as f64 * PI / self.span;
        k * (k * x).cos()
    }

    /// Midspan deflection under a static point load `p` at `a` (series).
    pub fn static_deflection(&self, p: f64, a: f64, x: f64) -> f64 {
        let modal_mass = 0.5 * self.mass_per_length * self.span;
        -(1..=self.modes)
            .map(|n| p * self.shape(n, a) * self.shape(n, x) / (modal_mass * self.omega(n).powi(2)))
            .sum::<f64>()
    }
}

/// Result of a coupled crossing sampled every `dt`.
#[derive(Debug, Clone, Default)]
pub struct CrossingTrace {
    pub midspan: Vec<f64>,
    pub vehicle: VehicleTrace,
}

/// A vehicle crossing `beam` at constant `speed`; the rear axle is at
/// `x = 0` when `t = entry_time`. The road off the deck is rigid and smooth,
/// and the vehicle starts at static equilibrium with the beam at rest.
pub fn crossing(
    beam: &Beam,
    vehicle: &Vehicle,
    speed: f64,
    entry_time: f64,
    dt: f64,
    steps: usize,
    substeps: usize,
) -> CrossingTrace {
    let nm = beam.modes;
    let nv = vehicle.dofs();
    let offsets = vehicle.axle_offsets();
    let statics = vehicle.static_loads();
    let modal_mass = 0.5 * beam.mass_per_length * beam.span;
    let on_deck = |x: f64| (0.0..=beam.span).contains(&x);

    let contacts = |t: f64, s: &[f64]| {
        let (q, qd) = (&s[..nm], &s[nm..2 * nm]);
        let mut u = Vec::with_capacity(offsets.len());
        let mut ud = Vec::with_capacity(offsets.len());
        for d in &offsets {
            let x = speed * (t - entry_time) + d;
            if on_deck(x) {
                u.push((1..=nm).map(|n| q[n - 1] * beam.shape(n, x)).sum::<f64>());
                ud.push((1..=nm).map(|n| qd[n - 1] * beam.shape(n, x) + speed * q[n - 1] * beam.slope(n, x)).sum::<f64>());
            } else {
                u.push(0.0);
                ud.push(0.0);
            }
        }
        (u, ud)
    };

    let rates = |t: f64, s: &[f64]| {
        let (u, ud) = contacts(t, s);
        let (y, yd) = (&s[2 * nm..2 * nm + nv], &s[2 * nm + nv..]);
        let (acc, dynamic) = vehicle.rates(y, yd, &u, &ud);
        let mut out = Vec::with_capacity(s.len());
        out.extend_from_slice(&s[nm..2 * nm]);
        for n in 1..=nm {
            let w = beam.omega(n);
            let mut generalized = 0.0;
            for (a, d) in offsets.iter().enumerate() {
                let x = speed * (t - entry_time) + d;
                if on_deck(x) {
                    generalized -= (statics[a] + dynamic[a]) * beam.shape(n, x);
                }
            }
            let (q, qd) = (s[n - 1], s[nm + n - 1]);
            out.push(generalized / modal_mass - 2.0 * beam.damping_ratio * w * qd - w * w * q);
        }
        out.extend_from_slice(yd);
        out.extend(acc);
        (out, dynamic)
    };

    let mut trace = CrossingTrace::default();
    let record = |t: f64, s: &[f64], trace: &mut CrossingTrace| {
        let (rate, dynamic) = rates(t, s);
        let mid = (1..=nm).map(|n| s[n - 1] * beam.shape(n, 0.5 * beam.span)).sum::<f64>();
        trace.midspan.push(mid);
        let v = &mut trace.vehicle;
        v.time.push(t);
        v.displacement.push(s[2 * nm..2 * nm + nv].to_vec());
        v.acceleration.push(rate[2 * nm + nv..].to_vec());
        v.contact_forces.push(statics.iter().zip(dynamic).map(|(a, b)| a + b).collect());
    };
    let f = |t: f64, s: &[f64]| rates(t, s).0;
    let mut s = vec![0.0; 2 * (nm + nv)];
    record(0.0, &s, &mut trace);
    let h = dt / substeps as f64;
    for step in 0..steps {
        for sub in 0..substeps {
            s = rk4(&f, step as f64 * dt + sub as f64 * h, h, &s);
        }
        record((step + 1) as f64 * dt, &s, &mut trace);
    }
    trace
}

/// `1 − SS_res/SS_tot` with `reference` as the truth.
pub fn r_squared(reference: &[f64], other: &[f64]) -> f64 {
    let mean = reference.iter().sum::<f64>() / reference.len() as f64;
    let ss_tot: f64 = reference.iter().map(|r| (r - mean).powi(2)).sum();
    let ss_res: f64 = reference.iter().zip(other).map(|(r, o)| (r - o).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

pub fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

/// RMS of the difference relative to the RMS of `reference`.
pub fn relative_rms(reference: &[f64], other: &[f64]) -> f64 {
    let diff: Vec<f64> = reference.iter().zip(other).map(|(a, b)| a - b).collect();
    rms(&diff) / rms(reference)
}

pub fn peak_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

