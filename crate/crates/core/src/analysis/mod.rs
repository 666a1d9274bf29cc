//! Response metrics, built-in benchmark scenarios and parametric sweeps.

pub mod benchmarks;
pub mod sweep;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coupling::{ScenarioConfig, SimulationResult};
use crate::error::{Error, Result};

pub use benchmarks::{benchmark_config, mass_ratio, BENCHMARK_NAMES};
pub use sweep::{run_sweep, Study, SweepCell, SweepOptions, SweepReport};

/// Closed time interval used to select samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
}

/// Slack when comparing sample times against window bounds.
const TIME_SLACK: f64 = 1e-9;

impl Window {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_end > t_start) {
            return Err(Error::EmptyWindow(t_start, t_end));
        }
        Ok(Self { t_start, t_end })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start - TIME_SLACK && t <= self.t_end + TIME_SLACK
    }

    /// Indices of `time` inside the window.
    pub fn select(&self, time: &[f64]) -> Result<Vec<usize>> {
        let idx: Vec<usize> = (0..time.len()).filter(|&i| self.contains(time[i])).collect();
        if idx.is_empty() {
            return Err(Error::EmptyWindow(self.t_start, self.t_end));
        }
        Ok(idx)
    }

    /// Presence of vehicle `i` on the deck: first axle on to last axle off,
    /// clipped to the simulated interval.
    pub fn on_bridge(result: &SimulationResult, vehicle: usize) -> Result<Self> {
        let h = result
            .vehicles
            .get(vehicle)
            .ok_or_else(|| Error::InvalidScenario(format!("no vehicle {vehicle}")))?;
        let span = *result.node_coords.last().unwrap_or(&0.0);
        let (a, b) = h.trajectory.on_bridge_window(span);
        let end = *result.time.last().unwrap_or(&0.0);
        Self::new(a.max(0.0), b.min(end))
    }
}

/// `1 − Σ(y_ref − y)² / Σ(y_ref − ȳ_ref)²` over the window.
pub fn r_squared(time: &[f64], y_ref: &[f64], y_other: &[f64], window: Window) -> Result<f64> {
    check_lengths(time, y_ref, y_other)?;
    let idx = window.select(time)?;
    let mean = idx.iter().map(|&i| y_ref[i]).sum::<f64>() / idx.len() as f64;
    let total: f64 = idx.iter().map(|&i| (y_ref[i] - mean).powi(2)).sum();
    if total == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let residual: f64 = idx.iter().map(|&i| (y_ref[i] - y_other[i]).powi(2)).sum();
    Ok(1.0 - residual / total)
}

fn check_lengths(time: &[f64], a: &[f64], b: &[f64]) -> Result<()> {
    for len in [a.len(), b.len()] {
        if len != time.len() {
            return Err(Error::ShapeMismatch { expected: time.len(), got: len });
        }
    }
    Ok(())
}

pub fn peak_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Agreement between a reference response and an approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `None` when the reference is constant over the window.
    pub r_squared: Option<f64>,
    pub rms_diff: f64,
    pub peak_ref: f64,
    pub peak_other: f64,
    pub window: Window,
}

pub fn compare(time: &[f64], y_ref: &[f64], y_other: &[f64], window: Window) -> Result<ComparisonReport> {
    check_lengths(time, y_ref, y_other)?;
    let idx = window.select(time)?;
    let r_squared = match r_squared(time, y_ref, y_other, window) {
        Ok(r) => Some(r),
        Err(Error::DegenerateReference) => None,
        Err(e) => return Err(e),
    };
    let pick = |y: &[f64]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
    let (a, b) = (pick(y_ref), pick(y_other));
    let rms_diff = (a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
    Ok(ComparisonReport { r_squared, rms_diff, peak_ref: peak_abs(&a), peak_other: peak_abs(&b), window })
}

/// Distribution of coupling iteration counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub histogram: BTreeMap<usize, usize>,
    pub min: usize,
    pub max: usize,
    /// Most frequent count (smallest on ties).
    pub mode: usize,
    pub steps: usize,
}

impl IterationStats {
    pub fn share(&self, count: usize) -> f64 {
        self.histogram.get(&count).copied().unwrap_or(0) as f64 / self.steps.max(1) as f64
    }
}

pub fn iteration_stats(iterations: &[usize]) -> IterationStats {
    let mut histogram = BTreeMap::new();
    for &k in iterations {
        *histogram.entry(k).or_insert(0) += 1;
    }
    let mode = histogram
        .iter()
        .fold((0, 0), |best, (&k, &n)| if n > best.1 { (k, n) } else { best })
        .0;
    IterationStats {
        min: histogram.keys().next().copied().unwrap_or(0),
        max: histogram.keys().next_back().copied().unwrap_or(0),
        mode,
        steps: iterations.len(),
        histogram,
    }
}

/// Iteration statistics restricted to steps whose end time lies in `window`.
pub fn iteration_stats_in(result: &SimulationResult, window: Window) -> IterationStats {
    let picked: Vec<usize> = result
        .iterations
        .iter()
        .enumerate()
        .filter(|(n, _)| window.contains(result.time[n + 1]))
        .map(|(_, &k)| k)
        .collect();
    iteration_stats(&picked)
}

/// Coupled-vs-decoupled comparison of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub midspan_displacement: ComparisonReport,
    pub body_acceleration: ComparisonReport,
    pub body_displacement: ComparisonReport,
}

/// Compare the first vehicle's on-bridge window of a coupled (reference) and
/// a decoupled run of the same scenario.
pub fn compare_modes(coupled: &SimulationResult, decoupled: &SimulationResult) -> Result<ModeComparison> {
    let window = Window::on_bridge(coupled, 0)?;
    let t = &coupled.time;
    let (vc, vd) = (&coupled.vehicles[0], &decoupled.vehicles[0]);
    Ok(ModeComparison {
        midspan_displacement: compare(t, &coupled.midspan_displacement(), &decoupled.midspan_displacement(), window)?,
        body_acceleration: compare(t, &vc.body_acceleration(), &vd.body_acceleration(), window)?,
        body_displacement: compare(t, &vc.body_displacement(), &vd.body_displacement(), window)?,
    })
}

/// Run `cfg` in both modes.
pub fn run_both(cfg: &ScenarioConfig) -> Result<(SimulationResult, SimulationResult)> {
    let mut c = cfg.clone();
    c.solver.mode = crate::coupling::AnalysisMode::Coupled;
    let mut d = cfg.clone();
    d.solver.mode = crate::coupling::AnalysisMode::Decoupled;
    Ok((crate::coupling::run(&c)?, crate::coupling::run(&d)?))
}
