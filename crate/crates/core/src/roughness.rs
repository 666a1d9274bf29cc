//! ISO 8608 road profiles synthesised as a sum of random-phase harmonics.
//!
//! The displacement PSD is `G_d(n) = G_d(n₀)·(n/n₀)^(−2)` with
//! `n₀ = 0.1 cycles/m`. Harmonic `k` has amplitude `√(2·G_d(n_k)·Δn)`; only
//! the phases are random. Axle inputs are evaluated from the harmonic sum
//! directly; the sampled grid exists for export and spectral checks.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::csv_row;

/// Reference spatial frequency `n₀` [cycles/m].
pub const REFERENCE_FREQUENCY: f64 = 0.1;
/// Upper harmonic bound `n_u` [cycles/m].
pub const UPPER_FREQUENCY: f64 = 10.0;
/// Waviness exponent.
pub const WAVINESS: f64 = 2.0;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IsoClass {
    A,
    B,
    C,
    D,
    E,
}

impl IsoClass {
    pub const ALL: [IsoClass; 5] = [Self::A, Self::B, Self::C, Self::D, Self::E];

    /// Geometric-mean `G_d(n₀)` [m³].
    pub fn coefficient(self) -> f64 {
        1e-6 * match self {
            Self::A => 1.0,
            Self::B => 4.0,
            Self::C => 16.0,
            Self::D => 64.0,
            Self::E => 256.0,
        }
    }

    /// Class limits `(lower, upper)` of `G_d(n₀)` [m³]; class A has no lower limit.
    pub fn limits(self) -> (Option<f64>, f64) {
        let upper = 2.0 * self.coefficient();
        let lower = match self {
            Self::A => None,
            _ => Some(0.5 * self.coefficient()),
        };
        (lower, upper)
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(Self::A),
            "B" => Some(Self::B),
            "C" => Some(Self::C),
            "D" => Some(Self::D),
            "E" => Some(Self::E),
            _ => None,
        }
    }
}

/// Either an ISO class or an explicit `G_d(n₀)` in m³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoughnessLevel {
    Class(IsoClass),
    Coefficient(f64),
}

impl RoughnessLevel {
    pub fn coefficient(self) -> f64 {
        match self {
            Self::Class(c) => c.coefficient(),
            Self::Coefficient(g) => g,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughnessSpec {
    pub level: RoughnessLevel,
    /// Bridge span `L` [m]; sets the frequency increment.
    pub span_length: f64,
    /// Profile start, may be negative to cover the approach [m].
    pub x_start: f64,
    /// Profile end [m].
    pub x_end: f64,
    /// Sampling interval of the exported grid [m].
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default)]
    pub seed: u64,
    /// Odd moving-average window applied to the sampled grid.
    #[serde(default)]
    pub smoothing_window: Option<usize>,
}

fn default_grid_step() -> f64 {
    0.05
}

impl RoughnessSpec {
    pub fn new(level: RoughnessLevel, span_length: f64, x_start: f64, x_end: f64, seed: u64) -> Self {
        Self {
            level,
            span_length,
            x_start,
            x_end,
            grid_step: default_grid_step(),
            seed,
            smoothing_window: None,
        }
    }

    /// `Δn = min(0.01, 1/(2L))` [cycles/m]
    pub fn frequency_step(&self) -> f64 {
        (1.0 / (2.0 * self.span_length)).min(0.01)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.level.coefficient();
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::InvalidSpec(format!("roughness coefficient must be non-negative, got {g}")));
        }
        if !(self.span_length > 0.0) {
            return Err(Error::InvalidSpec(format!("span must be positive, got {}", self.span_length)));
        }
        if !(self.x_end > self.x_start) {
            return Err(Error::InvalidSpec(format!(
                "domain [{}, {}] is empty",
                self.x_start, self.x_end
            )));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::InvalidSpec(format!("grid step must be positive, got {}", self.grid_step)));
        }
        if let Some(w) = self.smoothing_window {
            if w == 0 || w % 2 == 0 {
                return Err(Error::InvalidSpec(format!("smoothing window must be odd, got {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Amplitude [m].
    pub amplitude: f64,
    /// Spatial frequency [cycles/m].
    pub frequency: f64,
    /// Phase [rad].
    pub phase: f64,
}

/// Profile height and slope at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub r: f64,
    pub dr_dx: f64,
    /// `false` when `x` fell outside the generated domain (then `r = dr_dx = 0`).
    pub in_domain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoughnessProfile {
    pub harmonics: Vec<Harmonic>,
    pub frequency_step: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub grid_step: f64,
    /// Sampled (and optionally smoothed) heights at `x_start + j·grid_step`.
    pub samples: Vec<f64>,
}

/// ISO 8608 displacement PSD [m³] at spatial frequency `n`.
pub fn psd(coefficient: f64, n: f64) -> f64 {
    coefficient * (n / REFERENCE_FREQUENCY).powf(-WAVINESS)
}

pub fn generate(spec: &RoughnessSpec) -> Result<RoughnessProfile> {
    spec.validate()?;
    let dn = spec.frequency_step();
    let n_low = dn.min(0.01);
    let count = ((UPPER_FREQUENCY - n_low) / dn + 1e-9).floor() as usize + 1;
    let g0 = spec.level.coefficient();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let harmonics: Vec<Harmonic> = (0..count)
        .map(|k| {
            let frequency = n_low + k as f64 * dn;
            Harmonic {
                amplitude: (2.0 * psd(g0, frequency) * dn).sqrt(),
                frequency,
                phase: 2.0 * PI * rng.random::<f64>(),
            }
        })
        .collect();

    let mut profile = RoughnessProfile {
        harmonics,
        frequency_step: dn,
        x_start: spec.x_start,
        x_end: spec.x_end,
        grid_step: spec.grid_step,
        samples: Vec::new(),
    };
    profile.samples = profile.sample_grid();
    if let Some(window) = spec.smoothing_window {
        profile.samples = moving_average(&profile.samples, window);
    }
    Ok(profile)
}

/// Centered moving average; the window shrinks symmetrically near the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &values[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

impl RoughnessProfile {
    pub fn grid_len(&self) -> usize {
        ((self.x_end - self.x_start) / self.grid_step + 1e-9).floor() as usize + 1
    }

    pub fn grid_x(&self, j: usize) -> f64 {
        self.x_start + j as f64 * self.grid_step
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_start && x <= self.x_end
    }

    /// Harmonic sum and its spatial derivative at `x`.
    pub fn eval(&self, x: f64) -> ProfileSample {
        if !self.contains(x) {
            return ProfileSample { r: 0.0, dr_dx: 0.0, in_domain: false };
        }
        let (mut r, mut slope) = (0.0, 0.0);
        for h in &self.harmonics {
            let omega = 2.0 * PI * h.frequency;
            let (s, c) = (omega * x + h.phase).sin_cos();
            r += h.amplitude * c;
            slope -= h.amplitude * omega * s;
        }
        ProfileSample { r, dr_dx: slope, in_domain: true }
    }

    /// Evaluate the harmonic sum on the uniform grid by rotating phasors,
    /// resynchronising with the exact phase every 256 samples.
    fn sample_grid(&self) -> Vec<f64> {
        const BLOCK: usize = 256;
        let n = self.grid_len();
        let mut out = vec![0.0; n];
        out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
            let j0 = b * BLOCK;
            let x0 = self.grid_x(j0);
            for h in &self.harmonics {
                let omega = 2.0 * PI * h.frequency;
                let step = Complex::from_polar(1.0, omega * self.grid_step);
                let mut z = Complex::from_polar(h.amplitude, omega * x0 + h.phase);
                for v in chunk.iter_mut() {
                    *v += z.re;
                    z *= step;
                }
            }
        });
        out
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|r| r * r).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Periodogram of the sampled grid averaged over log-spaced bands.
    ///
    /// Band edges are snapped to midpoints between harmonic lines so every
    /// band integrates whole line spacings. Returns `(geometric band centre,
    /// Ĝ_d)` pairs for bands that contain at least one line.
    pub fn psd_estimate(&self, n_bins: usize) -> Vec<(f64, f64)> {
        let n = self.samples.len();
        if n < 4 || n_bins == 0 {
            return Vec::new();
        }
        let mut buffer: Vec<Complex<f64>> = self.samples.iter().map(|&r| Complex::new(r, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
        let df = 1.0 / (n as f64 * self.grid_step);
        let one_sided: Vec<f64> = buffer[..=n / 2]
            .iter()
            .map(|z| 2.0 * z.norm_sqr() * self.grid_step / n as f64)
            .collect();

        let dn = self.frequency_step;
        let first_line = self.harmonics.first().map_or(dn, |h| h.frequency);
        let nyquist = 0.5 / self.grid_step;
        let top = UPPER_FREQUENCY.min(nyquist);
        let (lo, hi) = (first_line.max(df), top);
        if !(hi > lo) {
            return Vec::new();
        }
        let snap = |f: f64| first_line + ((f - first_line) / dn).round() * dn - 0.5 * dn;
        let mut edges: Vec<f64> = (0..=n_bins)
            .map(|i| snap(lo * (hi / lo).powf(i as f64 / n_bins as f64)))
            .collect();
        *edges.last_mut().unwrap() = snap(hi) + dn;
        edges.dedup_by(|a, b| (*a - *b).abs() < 0.5 * dn);

        edges
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (w[0].max(df), w[1].min(nyquist));
                if !(b > a) {
                    return None;
                }
                let k0 = (a / df).ceil() as usize;
                let k1 = ((b / df).floor() as usize).min(one_sided.len() - 1);
                if k1 < k0 {
                    return None;
                }
                let power: f64 = one_sided[k0..=k1].iter().sum::<f64>() * df;
                Some(((a * b).sqrt(), power / (b - a)))
            })
            .collect()
    }

    /// Two-column CSV (`x_m,r_m`) of the sampled grid.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x_m,r_m")?;
        for (j, r) in self.samples.iter().enumerate() {
            writeln!(out, "{}", csv_row([self.grid_x(j), *r]))?;
        }
        Ok(())
    }
}
