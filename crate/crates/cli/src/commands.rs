use std::path::Path;
use std::sync::Mutex;

use clap::Args;
use serde::Serialize;
use vbi_core::analysis::benchmarks::{benchmark_config, mass_ratio};
use vbi_core::analysis::sweep::{run_sweep, CellSpec, Study, SweepOptions, SweepReport};
use vbi_core::analysis::{compare_modes, iteration_stats, peak_abs, run_both, IterationStats, ModeComparison, Window};
use vbi_core::coupling::{self, AnalysisMode, RunFlags, ScenarioConfig, SimulationResult};
use vbi_core::format::csv_row;
use vbi_core::roughness::{self, IsoClass, RoughnessLevel, RoughnessSpec, UPPER_FREQUENCY};

use crate::failure::{Failure, Outcome};
use crate::output::{sha256_hex, write_histories, Manifest, OutputDir, Seeds};
use crate::{plot, Overrides};

pub fn load_config(path: &Path) -> Outcome<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn config_text(cfg: &ScenarioConfig) -> Outcome<String> {
    toml::to_string(cfg).map_err(|e| Failure::Config(format!("cannot serialize configuration: {e}")))
}

fn scenario_manifest(cfg: &ScenarioConfig, text: &str) -> Manifest {
    let mut m = Manifest::start();
    m.config_sha256 = Some(sha256_hex(text.as_bytes()));
    m.seeds = Seeds {
        scenario: Some(cfg.seed),
        roughness: cfg.roughness.as_ref().map(|_| cfg.roughness_seed()),
        traffic: cfg.traffic.as_ref().map(|_| cfg.traffic_seed()),
        fleet: cfg.fleet.as_ref().map(|_| cfg.fleet_seed()),
    };
    m
}

#[derive(Serialize)]
struct MidspanSummary {
    node: usize,
    x_m: f64,
    peak_displacement_m: f64,
    peak_acceleration_m_s2: f64,
}

#[derive(Serialize)]
struct VehicleSummary {
    tag: String,
    static_axle_forces_n: Vec<f64>,
    window: Option<Window>,
    peak_body_displacement_m: f64,
    peak_body_acceleration_m_s2: f64,
    min_contact_force_n: f64,
    max_contact_force_n: f64,
}

#[derive(Serialize)]
struct RunSummary {
    mode: AnalysisMode,
    steps: usize,
    dt_s: f64,
    t_end_s: f64,
    mass_ratio: f64,
    converged: bool,
    warnings: Vec<String>,
    midspan: MidspanSummary,
    iterations: Option<IterationStats>,
    flags: RunFlags,
    vehicles: Vec<VehicleSummary>,
}

fn summarize(cfg: &ScenarioConfig, result: &SimulationResult) -> Outcome<RunSummary> {
    let mut warnings = Vec::new();
    if !result.converged() {
        warnings.push(format!(
            "coupling did not converge in {} step(s); first at step {}",
            result.flags.non_converged_steps.len(),
            result.flags.non_converged_steps[0]
        ));
    }
    if result.flags.uplift_events > 0 {
        warnings.push(format!("{} axle uplift event(s) clamped to zero contact force", result.flags.uplift_events));
    }
    if result.flags.off_profile_samples > 0 {
        warnings.push(format!("{} axle sample(s) fell outside the roughness profile", result.flags.off_profile_samples));
    }
    let vehicles = result
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let forces = v.contact_forces.iter().flatten().copied();
            VehicleSummary {
                tag: v.tag.clone(),
                static_axle_forces_n: v.static_axle_forces.clone(),
                window: Window::on_bridge(result, i).ok(),
                peak_body_displacement_m: peak_abs(&v.body_displacement()),
                peak_body_acceleration_m_s2: peak_abs(&v.body_acceleration()),
                min_contact_force_n: forces.clone().fold(f64::INFINITY, f64::min),
                max_contact_force_n: forces.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(RunSummary {
        mode: result.mode,
        steps: result.num_steps(),
        dt_s: cfg.solver.dt,
        t_end_s: *result.time.last().unwrap_or(&0.0),
        mass_ratio: mass_ratio(cfg)?,
        converged: result.converged(),
        warnings,
        midspan: MidspanSummary {
            node: result.midspan_node,
            x_m: result.node_coords[result.midspan_node],
            peak_displacement_m: peak_abs(&result.midspan_displacement()),
            peak_acceleration_m_s2: peak_abs(&result.midspan_acceleration()),
        },
        iterations: (!result.iterations.is_empty()).then(|| iteration_stats(&result.iterations)),
        flags: result.flags.clone(),
        vehicles,
    })
}

pub fn run(config: &Path, out: &Path, mode: Option<AnalysisMode>, overrides: &Overrides) -> Outcome<()> {
    let mut cfg = load_config(config)?;
    overrides.apply(&mut cfg);
    if let Some(mode) = mode {
        cfg.solver.mode = mode;
    }
    cfg.validate()?;
    let text = config_text(&cfg)?;
    let mut manifest = scenario_manifest(&cfg, &text);
    let mut dir = OutputDir::create(out)?;

    let result = coupling::run(&cfg)?;
    let summary = summarize(&cfg, &result)?;
    dir.text("config.toml", &text)?;
    write_histories(&mut dir, "", &result)?;
    dir.json("summary.json", &summary)?;
    for w in &summary.warnings {
        eprintln!("vbi: warning: {w}");
    }
    manifest.details = serde_json::json!({ "mode": result.mode, "steps": result.num_steps() });
    dir.finish(manifest)?;
    println!(
        "{} run: {} steps, peak midspan displacement {:.6e} m -> {}",
        cfg.solver.mode.name(),
        result.num_steps(),
        summary.midspan.peak_displacement_m,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct BenchmarkSummary {
    name: String,
    coupled: RunSummary,
    decoupled: RunSummary,
    comparison: ModeComparison,
}

pub fn benchmark(name: &str, out: &Path, overrides: &Overrides) -> Outcome<()> {
    let mut cfg = benchmark_config(name)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    let text = config_text(&cfg)?;
    let mut manifest = scenario_manifest(&cfg, &text);
    let mut dir = OutputDir::create(out)?;

    let (coupled, decoupled) = run_both(&cfg)?;
    let comparison = compare_modes(&coupled, &decoupled)?;
    dir.text("config.toml", &text)?;
    write_histories(&mut dir, "coupled", &coupled)?;
    write_histories(&mut dir, "decoupled", &decoupled)?;
    let summary = BenchmarkSummary {
        name: name.to_string(),
        coupled: summarize(&cfg, &coupled)?,
        decoupled: summarize(&cfg, &decoupled)?,
        comparison,
    };
    dir.json("summary.json", &summary)?;
    dir.json("comparison.json", &summary.comparison)?;
    manifest.details = serde_json::json!({ "benchmark": name });
    dir.finish(manifest)?;

    let c = &summary.comparison;
    let r2 = |r: Option<f64>| r.map_or("undefined".to_string(), |v| format!("{v:.6}"));
    println!("benchmark {name}");
    println!("  mass ratio               {:.4}", summary.coupled.mass_ratio);
    println!("  peak midspan (coupled)   {:.6e} m", summary.coupled.midspan.peak_displacement_m);
    println!("  peak midspan (decoupled) {:.6e} m", summary.decoupled.midspan.peak_displacement_m);
    println!("  R² midspan displacement  {}", r2(c.midspan_displacement.r_squared));
    println!("  R² body acceleration     {}", r2(c.body_acceleration.r_squared));
    if let Some(stats) = &summary.coupled.iterations {
        println!("  iterations per step      min {} max {} mode {}", stats.min, stats.max, stats.mode);
        for (count, steps) in &stats.histogram {
            println!("    {count:>3}: {steps}");
        }
    }
    for w in &summary.coupled.warnings {
        eprintln!("vbi: warning: {w}");
    }
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct RoughnessArgs {
    /// ISO 8608 class A to E
    #[arg(long, conflicts_with = "coefficient")]
    pub class: Option<String>,
    /// Explicit G_d(n0) [m³]
    #[arg(long)]
    pub coefficient: Option<f64>,
    /// Bridge span used for the frequency resolution [m]
    #[arg(long)]
    pub length: f64,
    /// Profile start [m], defaults to 0
    #[arg(long)]
    pub start: Option<f64>,
    /// Profile end [m], defaults to the span
    #[arg(long)]
    pub end: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sampling interval of the exported grid [m]
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Log-spaced bands in the spectrum check
    #[arg(long, default_value_t = 24)]
    pub bins: usize,
    #[arg(long)]
    pub out: std::path::PathBuf,
}

pub fn roughness(args: &RoughnessArgs) -> Outcome<()> {
    let level = match (&args.class, args.coefficient) {
        (Some(c), _) => RoughnessLevel::Class(
            IsoClass::parse(c).ok_or_else(|| Failure::Config(format!("unknown roughness class `{c}` (expected A to E)")))?,
        ),
        (None, Some(g)) => RoughnessLevel::Coefficient(g),
        (None, None) => return Err(Failure::Config("either --class or --coefficient is required".into())),
    };
    let mut spec = RoughnessSpec::new(
        level,
        args.length,
        args.start.unwrap_or(0.0),
        args.end.unwrap_or(args.length),
        args.seed,
    );
    spec.grid_step = args.grid_step;
    spec.validate()?;
    let profile = roughness::generate(&spec)?;
    let mut manifest = Manifest::start();
    manifest.seeds.roughness = Some(args.seed);
    let mut dir = OutputDir::create(&args.out)?;

    dir.csv(
        "profile.csv",
        ["x_m", "r_m"].map(String::from).to_vec(),
        (0..profile.grid_len()).map(|j| [profile.grid_x(j), profile.samples[j]]),
    )?;
    let g0 = level.coefficient();
    dir.csv(
        "psd.csv",
        ["n_cycles_m", "g_estimate_m3", "g_target_m3"].map(String::from).to_vec(),
        profile.psd_estimate(args.bins).into_iter().map(|(n, g)| [n, g, roughness::psd(g0, n)]),
    )?;
    let rms = profile.rms();
    manifest.details = serde_json::json!({
        "coefficient_m3": g0,
        "frequency_step_cycles_m": profile.frequency_step,
        "lowest_frequency_cycles_m": profile.harmonics.first().map(|h| h.frequency),
        "highest_frequency_cycles_m": UPPER_FREQUENCY,
        "harmonics": profile.harmonics.len(),
        "x_start_m": profile.x_start,
        "x_end_m": profile.x_end,
        "grid_step_m": profile.grid_step,
        "rms_m": rms,
    });
    dir.finish(manifest)?;
    println!(
        "profile: {} harmonics, Δn = {} cycles/m, rms {:.4e} m -> {}",
        profile.harmonics.len(),
        profile.frequency_step,
        rms,
        args.out.display()
    );
    Ok(())
}

fn thread_cap() -> Outcome<Option<usize>> {
    match std::env::var("VBI_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(Failure::Config(format!("VBI_THREADS must be a non-negative integer, got `{v}`"))),
        },
    }
}

fn cell_histories(root: &Path, spec: &CellSpec, c: &SimulationResult, d: &SimulationResult) -> Outcome<OutputDir> {
    let mut dir = OutputDir::create(&root.join(spec.label()))?;
    let (wc, wd) = (c.midspan_displacement(), d.midspan_displacement());
    let (ac, ad) = (c.midspan_acceleration(), d.midspan_acceleration());
    dir.csv(
        "midspan.csv",
        ["t_s", "w_coupled_m", "w_decoupled_m", "a_coupled_m_s2", "a_decoupled_m_s2"].map(String::from).to_vec(),
        (0..c.time.len()).map(|k| [c.time[k], wc[k], wd[k], ac[k], ad[k]]),
    )?;
    let (vc, vd) = (&c.vehicles[0], &d.vehicles[0]);
    let (uc, ud) = (vc.body_displacement(), vd.body_displacement());
    let (bc, bd) = (vc.body_acceleration(), vd.body_acceleration());
    dir.csv(
        "body.csv",
        ["t_s", "u_coupled_m", "u_decoupled_m", "a_coupled_m_s2", "a_decoupled_m_s2"].map(String::from).to_vec(),
        (0..c.time.len()).map(|k| [c.time[k], uc[k], ud[k], bc[k], bd[k]]),
    )?;
    Ok(dir)
}

fn field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Report rows sorted by vehicle then by the study variable so each
/// vehicle forms one contiguous series.
pub fn report_lines(report: &SweepReport) -> (Vec<String>, Vec<String>) {
    let columns = [
        "label",
        "span_m",
        "vehicle",
        "class",
        "class_coefficient_m3",
        "speed_m_s",
        "traffic",
        "mass_ratio",
        "disp_r2",
        "body_acc_r2",
        "body_disp_r2",
        "disp_rms_diff_m",
        "peak_coupled_m",
        "peak_decoupled_m",
        "max_iterations",
        "error",
    ]
    .map(String::from)
    .to_vec();
    let mut cells: Vec<_> = report.cells.iter().collect();
    cells.sort_by(|a, b| {
        let key = |c: &&vbi_core::analysis::SweepCell| {
            (c.spec.vehicle.name(), c.spec.span, c.spec.class.coefficient(), c.spec.speed, c.spec.traffic)
        };
        key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let nan = f64::NAN;
    let lines = cells
        .into_iter()
        .map(|c| {
            let s = &c.spec;
            let cmp = c.comparison.as_ref();
            let disp = cmp.map(|m| &m.midspan_displacement);
            let numbers = csv_row([
                c.mass_ratio,
                disp.and_then(|r| r.r_squared).unwrap_or(nan),
                cmp.and_then(|m| m.body_acceleration.r_squared).unwrap_or(nan),
                cmp.and_then(|m| m.body_displacement.r_squared).unwrap_or(nan),
                disp.map_or(nan, |r| r.rms_diff),
                disp.map_or(nan, |r| r.peak_ref),
                disp.map_or(nan, |r| r.peak_other),
            ]);
            format!(
                "{},{},{},{:?},{},{},{},{numbers},{},{}",
                c.label,
                csv_row([s.span]),
                s.vehicle.name(),
                s.class,
                csv_row([s.class.coefficient()]),
                csv_row([s.speed]),
                s.traffic,
                c.max_iterations,
                field(c.error.as_deref().unwrap_or("")),
            )
        })
        .collect();
    (columns, lines)
}

pub fn sweep(study: &str, out: &Path, dt: Option<f64>, tol: Option<f64>, seed: Option<u64>) -> Outcome<()> {
    let study: Study = study.parse()?;
    let mut options = SweepOptions::default();
    options.dt = dt.unwrap_or(options.dt);
    options.tol = tol.unwrap_or(options.tol);
    options.seed = seed.unwrap_or(options.seed);
    if options.dt.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || options.tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
    {
        return Err(Failure::Config("--dt and --tol must be positive".into()));
    }
    let threads = thread_cap()?;
    let mut manifest = Manifest::start();
    manifest.seeds.scenario = Some(options.seed);
    manifest.seeds.roughness = Some(options.seed);
    manifest.seeds.traffic = Some(options.seed + 1);
    let mut dir = OutputDir::create(out)?;
    let cells_root = out.join("cells");

    let written = Mutex::new(Vec::new());
    let write_errors = Mutex::new(Vec::new());
    let observe = |spec: &CellSpec, c: &SimulationResult, d: &SimulationResult| match cell_histories(&cells_root, spec, c, d) {
        Ok(cell_dir) => written.lock().unwrap().push((spec.label(), cell_dir)),
        Err(e) => write_errors.lock().unwrap().push(e.to_string()),
    };
    let report = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Solver(format!("cannot start worker pool: {e}")))?
            .install(|| run_sweep(study, &options, observe)),
        None => run_sweep(study, &options, observe),
    };
    if let Some(e) = write_errors.into_inner().unwrap().into_iter().next() {
        return Err(Failure::Output(e));
    }
    for (label, cell_dir) in written.into_inner().unwrap() {
        dir.adopt(&format!("cells/{label}"), &cell_dir);
    }

    let (columns, lines) = report_lines(&report);
    dir.text_csv("report.csv", columns, &lines)?;
    dir.json("report.json", &report)?;
    dir.text("plot.gp", &plot::sweep_script(&report))?;
    manifest.details = serde_json::json!({
        "study": study.name(),
        "dt_s": options.dt,
        "tol": options.tol,
        "threads": threads,
        "cells": report.cells.len(),
        "failed_cells": report.failed(),
    });
    dir.finish(manifest)?;

    println!("sweep {}: {} cells, {} failed -> {}", study.name(), report.cells.len(), report.failed(), out.display());
    for c in &report.cells {
        let r2 = |r: Option<f64>| r.map_or("     n/a".to_string(), |v| format!("{v:>8.4}"));
        match &c.error {
            None => println!("  {:<24} mu {:>8.4}  R² disp {}  R² body acc {}", c.label, c.mass_ratio, r2(c.displacement_r2()), r2(c.acceleration_r2())),
            Some(e) => println!("  {:<24} failed: {e}", c.label),
        }
    }
    if !report.cells.is_empty() && report.failed() == report.cells.len() {
        return Err(Failure::Solver(format!("all {} cells failed", report.cells.len())));
    }
    Ok(())
}
