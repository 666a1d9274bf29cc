//! Result directories: CSV histories, JSON documents and the manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use vbi_core::coupling::SimulationResult;
use vbi_core::format::csv_row;

use crate::failure::{Failure, Outcome};

/// Bumped whenever a CSV column layout changes.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

/// An output directory that remembers what was written into it.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, Option<Vec<String>>)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Outcome<Self> {
        fs::create_dir_all(root).map_err(|e| Failure::write(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    fn open(&mut self, name: &str, columns: Option<Vec<String>>) -> Outcome<(PathBuf, BufWriter<File>)> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Failure::write(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Failure::write(&path, e))?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), columns));
        Ok((path, BufWriter::new(file)))
    }

    /// Write a CSV with a header row and `%.9e` numeric rows.
    pub fn csv<I, R>(&mut self, name: &str, columns: Vec<String>, rows: I) -> Outcome<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = f64>,
    {
        let header = columns.join(",");
        let (path, mut w) = self.open(name, Some(columns))?;
        let body = || -> std::io::Result<()> {
            writeln!(w, "{header}")?;
            for row in rows {
                writeln!(w, "{}", csv_row(row))?;
            }
            w.flush()
        };
        body().map_err(|e| Failure::write(&path, e))
    }

    /// Write a CSV whose rows are already formatted.
    pub fn text_csv(&mut self, name: &str, columns: Vec<String>, lines: &[String]) -> Outcome<()> {
        let header = columns.join(",");
        let (path, mut w) = self.open(name, Some(columns))?;
        let mut body = || -> std::io::Result<()> {
            writeln!(w, "{header}")?;
            for line in lines {
                writeln!(w, "{line}")?;
            }
            w.flush()
        };
        body().map_err(|e| Failure::write(&path, e))
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Outcome<()> {
        let (path, mut w) = self.open(name, None)?;
        w.write_all(contents.as_bytes()).and_then(|_| w.flush()).map_err(|e| Failure::write(&path, e))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Output(e.to_string()))?;
        text.push('\n');
        self.text(name, &text)
    }

    /// Take over the file list of a directory nested under this one.
    pub fn adopt(&mut self, prefix: &str, other: &OutputDir) {
        for (name, columns) in &other.files {
            self.files.push((format!("{prefix}/{name}"), columns.clone()));
        }
    }

    /// Inventory of everything written so far, hashed from disk.
    pub fn inventory(&self) -> Outcome<Vec<FileEntry>> {
        let mut out: Vec<FileEntry> = self
            .files
            .iter()
            .map(|(name, columns)| {
                let path = self.root.join(name);
                let bytes = fs::read(&path).map_err(|e| Failure::Output(format!("cannot read {}: {e}", path.display())))?;
                Ok(FileEntry { path: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(&bytes), columns: columns.clone() })
            })
            .collect::<Outcome<_>>()?;
        out.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(out)
    }

    /// Write `manifest.json` last so the inventory covers every other file.
    pub fn finish(mut self, mut manifest: Manifest) -> Outcome<PathBuf> {
        manifest.files = self.inventory()?;
        manifest.finished_unix_s = unix_now();
        self.json("manifest.json", &manifest)?;
        Ok(self.root.join("manifest.json"))
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Seeds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roughness: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traffic: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fleet: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub engine_version: &'static str,
    pub csv_schema_version: u32,
    pub command: Vec<String>,
    /// SHA-256 of the effective configuration serialized as TOML.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub seeds: Seeds,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn start() -> Self {
        Self {
            tool: "vbi",
            tool_version: env!("CARGO_PKG_VERSION"),
            engine_version: vbi_core::VERSION,
            csv_schema_version: CSV_SCHEMA_VERSION,
            command: std::env::args().collect(),
            config_sha256: None,
            seeds: Seeds::default(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            details: serde_json::Value::Null,
            files: Vec::new(),
        }
    }
}

fn names(prefix: &str, items: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(prefix.to_string()).chain(items).collect()
}

/// Write the fixed set of history files for one run under `dir` (relative
/// to the output root, empty for the root itself).
pub fn write_histories(out: &mut OutputDir, dir: &str, result: &SimulationResult) -> Outcome<()> {
    let at = |name: &str| if dir.is_empty() { name.to_string() } else { format!("{dir}/{name}") };
    let t = &result.time;

    let disp = result.midspan_displacement();
    let vel = result.midspan_velocity();
    let acc = result.midspan_acceleration();
    out.csv(
        &at("bridge_midspan.csv"),
        names("t_s", ["w_m", "w_dot_m_s", "w_ddot_m_s2"].map(String::from)),
        (0..t.len()).map(|i| [t[i], disp[i], vel[i], acc[i]]),
    )?;

    out.csv(
        &at("bridge_nodes.csv"),
        names("t_s", (0..result.node_coords.len()).map(|j| format!("w_node{j}_m"))),
        t.iter().zip(&result.bridge_displacement).map(|(&ti, row)| std::iter::once(ti).chain(row.iter().copied())),
    )?;

    for (i, v) in result.vehicles.iter().enumerate() {
        let columns = names(
            "t_s",
            v.dof_names.iter().flat_map(|d| [format!("{d}_u"), format!("{d}_v"), format!("{d}_a")]),
        );
        let rows = (0..t.len()).map(|k| {
            std::iter::once(t[k]).chain(
                (0..v.dof_names.len()).flat_map(move |d| [v.displacement[k][d], v.velocity[k][d], v.acceleration[k][d]]),
            )
        });
        out.csv(&at(&format!("vehicle_{i}_dofs.csv")), columns, rows)?;
    }

    let columns = names(
        "t_s",
        result.vehicles.iter().enumerate().flat_map(|(i, v)| {
            (0..v.static_axle_forces.len()).map(move |a| format!("vehicle{i}_axle{a}_N"))
        }),
    );
    let rows = (0..t.len()).map(|k| {
        std::iter::once(t[k]).chain(result.vehicles.iter().flat_map(move |v| v.contact_forces[k].iter().copied()))
    });
    out.csv(&at("contact_forces.csv"), columns, rows)?;

    let lines: Vec<String> = result
        .iterations
        .iter()
        .zip(&result.residuals)
        .enumerate()
        .map(|(k, (it, res))| format!("{},{},{it},{}", k + 1, csv_row([t[k + 1]]), csv_row([*res])))
        .collect();
    out.text_csv(&at("iterations.csv"), ["step", "t_s", "iterations", "residual"].map(String::from).to_vec(), &lines)
}
