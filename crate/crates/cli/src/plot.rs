//! Gnuplot script for a sweep directory.

use std::fmt::Write as _;

use vbi_core::analysis::benchmarks::StudyVehicle;
use vbi_core::analysis::sweep::Study;
use vbi_core::analysis::SweepReport;

// 1-based columns of report.csv
const DISP_R2: usize = 9;
const BODY_ACC_R2: usize = 10;

fn axis(study: Study) -> (usize, &'static str) {
    match study {
        Study::Span => (2, "span [m]"),
        Study::Roughness => (5, "G_d(n_0) [m^3]"),
        Study::Speed => (6, "speed [m/s]"),
        Study::Traffic => (7, "background vehicles"),
    }
}

/// Four panels: midspan displacement and body acceleration histories of
/// every cell (coupled solid, decoupled dashed), then both R² metrics
/// against the study variable, one line per vehicle.
pub fn sweep_script(report: &SweepReport) -> String {
    let (x_col, x_label) = axis(report.study);
    let name = report.study.name();
    let done: Vec<&str> = report.cells.iter().filter(|c| c.comparison.is_some()).map(|c| c.label.as_str()).collect();
    let vehicles: Vec<&str> = StudyVehicle::ALL
        .into_iter()
        .filter(|v| report.cells.iter().any(|c| c.spec.vehicle == *v))
        .map(|v| v.name())
        .collect();

    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script; run from this directory: gnuplot plot.gp");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 1600,1000 noenhanced");
    let _ = writeln!(s, "set output 'sweep_{name}.png'");
    let _ = writeln!(s, "set multiplot layout 2,2 title '{name} sweep: coupled vs decoupled'");
    let _ = writeln!(s, "set grid");
    let _ = writeln!(s, "set key outside right top font ',8'");

    let histories = |s: &mut String, title: &str, file: &str, ylabel: &str, coupled: usize, decoupled: usize| {
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(s, "set xlabel 't [s]'");
        let _ = writeln!(s, "set ylabel '{ylabel}'");
        if done.is_empty() {
            let _ = writeln!(s, "plot NaN notitle");
            return;
        }
        let series: Vec<String> = done
            .iter()
            .enumerate()
            .flat_map(|(i, label)| {
                let f = format!("'cells/{label}/{file}'");
                [
                    format!("{f} using 1:{coupled} with lines lc {} dt 1 title '{label}'", i + 1),
                    format!("{f} using 1:{decoupled} with lines lc {} dt 2 notitle", i + 1),
                ]
            })
            .collect();
        let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    };
    histories(&mut s, "(a) bridge midspan displacement", "midspan.csv", "w [m]", 2, 3);
    histories(&mut s, "(b) vehicle body acceleration", "body.csv", "a [m/s^2]", 4, 5);

    let _ = writeln!(s, "set key inside bottom left");
    if report.study == Study::Roughness {
        let _ = writeln!(s, "set logscale x");
    }
    for (title, col) in [("(c) R^2 of midspan displacement", DISP_R2), ("(d) R^2 of body acceleration", BODY_ACC_R2)] {
        let _ = writeln!(s, "set title '{title}'");
        let _ = writeln!(s, "set xlabel '{x_label}'");
        let _ = writeln!(s, "set ylabel 'R^2'");
        let series: Vec<String> = vehicles
            .iter()
            .map(|v| format!("'report.csv' using {x_col}:(strcol(3) eq '{v}' ? ${col} : NaN) with linespoints title '{v}'"))
            .collect();
        if series.is_empty() {
            let _ = writeln!(s, "plot NaN notitle");
        } else {
            let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
        }
    }
    let _ = writeln!(s, "unset multiplot");
    s
}
