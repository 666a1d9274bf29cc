//! Parametric studies comparing coupled and decoupled runs cell by cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::benchmarks::{mass_ratio, study_bridge, study_scenario, StudyVehicle, STUDY_SPEED};
use super::{compare_modes, run_both, ModeComparison};
use crate::coupling::{ScenarioConfig, SimulationResult};
use crate::error::{Error, Result};
use crate::roughness::IsoClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Span,
    Speed,
    Roughness,
    Traffic,
}

impl Study {
    pub const ALL: [Study; 4] = [Self::Span, Self::Speed, Self::Roughness, Self::Traffic];

    pub fn name(self) -> &'static str {
        match self {
            Self::Span => "span",
            Self::Speed => "speed",
            Self::Roughness => "roughness",
            Self::Traffic => "traffic",
        }
    }

    /// Grid points of the study.
    pub fn cells(self) -> Vec<CellSpec> {
        let cell = |span, vehicle, class, speed, traffic| CellSpec { span, vehicle, class, speed, traffic };
        use StudyVehicle::{Commercial, Heavy};
        match self {
            Self::Span => [15.0, 30.0, 50.0, 100.0]
                .into_iter()
                .flat_map(|s| [Commercial, Heavy].map(|v| cell(s, v, IsoClass::C, STUDY_SPEED, 0)))
                .collect(),
            Self::Speed => [5.0, 10.0, 15.0, 20.0, 25.0, 30.0]
                .into_iter()
                .map(|v| cell(30.0, Commercial, IsoClass::A, v, 0))
                .collect(),
            Self::Roughness => [IsoClass::A, IsoClass::C, IsoClass::E]
                .into_iter()
                .map(|c| cell(30.0, Commercial, c, STUDY_SPEED, 0))
                .collect(),
            Self::Traffic => [0, 5, 10, 20]
                .into_iter()
                .flat_map(|n| [Commercial, Heavy].map(|v| cell(30.0, v, IsoClass::C, STUDY_SPEED, n)))
                .collect(),
        }
    }
}

impl std::str::FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStudy(s.to_string()))
    }
}

/// Parameters of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub span: f64,
    pub vehicle: StudyVehicle,
    pub class: IsoClass,
    pub speed: f64,
    pub traffic: usize,
}

impl CellSpec {
    pub fn label(&self) -> String {
        format!(
            "L{}_{}_{:?}_v{}_n{}",
            self.span,
            self.vehicle.name(),
            self.class,
            self.speed,
            self.traffic
        )
    }

    pub fn scenario(&self, options: &SweepOptions) -> Result<ScenarioConfig> {
        let mut cfg = study_scenario(study_bridge(self.span)?, self.vehicle, self.class, self.speed, self.traffic);
        cfg.solver.dt = options.dt;
        cfg.solver.tol = options.tol;
        cfg.seed = options.seed;
        if let Some(t) = cfg.traffic.as_mut() {
            t.seed = None;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub dt: f64,
    pub tol: f64,
    /// Roughness seed; traffic uses `seed + 1`.
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            dt: super::benchmarks::BENCHMARK_DT,
            tol: crate::coupling::DEFAULT_TOLERANCE,
            seed: super::benchmarks::STUDY_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub spec: CellSpec,
    pub label: String,
    pub mass_ratio: f64,
    /// Present when both runs succeeded.
    pub comparison: Option<ModeComparison>,
    pub max_iterations: usize,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn displacement_r2(&self) -> Option<f64> {
        self.comparison.as_ref().and_then(|c| c.midspan_displacement.r_squared)
    }

    pub fn acceleration_r2(&self) -> Option<f64> {
        self.comparison.as_ref().and_then(|c| c.body_acceleration.r_squared)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub study: Study,
    pub options: SweepOptions,
    pub cells: Vec<SweepCell>,
}

impl SweepReport {
    pub fn failed(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }

    pub fn cell(&self, span: f64, vehicle: StudyVehicle) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.spec.span == span && c.spec.vehicle == vehicle)
    }
}

/// Run one cell; `observe` sees both results before they are dropped.
pub fn run_cell<F>(spec: CellSpec, options: &SweepOptions, observe: &F) -> SweepCell
where
    F: Fn(&CellSpec, &SimulationResult, &SimulationResult) + Sync,
{
    let mut cell = SweepCell {
        spec,
        label: spec.label(),
        mass_ratio: f64::NAN,
        comparison: None,
        max_iterations: 0,
        error: None,
    };
    let outcome = spec.scenario(options).and_then(|cfg| {
        cell.mass_ratio = mass_ratio(&cfg)?;
        let (c, d) = run_both(&cfg)?;
        observe(&spec, &c, &d);
        cell.max_iterations = c.iterations.iter().copied().max().unwrap_or(0);
        compare_modes(&c, &d)
    });
    match outcome {
        Ok(cmp) => cell.comparison = Some(cmp),
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Run every cell of `study` in parallel; failed cells are recorded and
/// the rest continue.
pub fn run_sweep<F>(study: Study, options: &SweepOptions, observe: F) -> SweepReport
where
    F: Fn(&CellSpec, &SimulationResult, &SimulationResult) + Sync,
{
    let cells = study.cells().into_par_iter().map(|spec| run_cell(spec, options, &observe)).collect();
    SweepReport { study, options: options.clone(), cells }
}
