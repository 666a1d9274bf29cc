//! Euler-Bernoulli bridge model: uniform 2D frame mesh, lumped mass,
//! eigen analysis with static condensation of the rotational DOFs,
//! Rayleigh damping and a persistent Newmark operator.

pub mod newmark;

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use newmark::{DynamicState, NewmarkOperator};

/// State of the bridge over its free DOFs.
pub type BridgeState = DynamicState;

/// Tolerance used when matching support positions to node coordinates.
pub const SUPPORT_TOLERANCE: f64 = 1e-9;

/// Axial area used when a benchmark does not list one. Only `EI` and `m̄`
/// affect the vertical response.
pub const DEFAULT_AREA: f64 = 2.0;

fn default_area() -> f64 {
    DEFAULT_AREA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeModel {
    /// Total length `L` [m].
    pub span_length: f64,
    /// Support coordinates [m], ascending; the first must be at 0 and the
    /// last at `L`. Empty in a config means simply supported.
    #[serde(default)]
    pub support_positions: Vec<f64>,
    /// Young's modulus `E` [Pa].
    pub elastic_modulus: f64,
    /// Second moment of area `I` [m⁴].
    pub second_moment: f64,
    /// Cross-section area `A` [m²].
    #[serde(default = "default_area")]
    pub area: f64,
    /// Mass per unit length `m̄` [kg/m].
    pub mass_per_length: f64,
    /// Target Rayleigh damping ratio `ζ`.
    #[serde(default)]
    pub damping_ratio: f64,
    /// Number of elements `N_e`; 0 in a config selects the default.
    #[serde(default)]
    pub num_elements: usize,
}

impl BridgeModel {
    /// Single span pinned at 0 and on a roller at `L`.
    pub fn simply_supported(
        span_length: f64,
        elastic_modulus: f64,
        second_moment: f64,
        mass_per_length: f64,
        damping_ratio: f64,
        num_elements: usize,
    ) -> Self {
        Self {
            span_length,
            support_positions: vec![0.0, span_length],
            elastic_modulus,
            second_moment,
            area: DEFAULT_AREA,
            mass_per_length,
            damping_ratio,
            num_elements,
        }
    }

    /// Copy with empty supports and a zero element count replaced by defaults.
    pub fn with_defaults(&self) -> Self {
        let mut out = self.clone();
        if out.support_positions.is_empty() {
            out.support_positions = vec![0.0, out.span_length];
        }
        if out.num_elements == 0 {
            out.num_elements = default_num_elements(&out.support_positions);
        }
        out
    }

    pub fn flexural_rigidity(&self) -> f64 {
        self.elastic_modulus * self.second_moment
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_per_length * self.span_length
    }

    pub fn element_length(&self) -> f64 {
        self.span_length / self.num_elements as f64
    }

    /// Closed-form simply supported frequency of mode `k` [Hz] for a span of
    /// length `L`: `f_k = (k²π / 2L²)·√(EI/m̄)`.
    pub fn simply_supported_frequency(&self, k: usize) -> f64 {
        let kf = k as f64;
        kf * kf * PI / (2.0 * self.span_length * self.span_length)
            * (self.flexural_rigidity() / self.mass_per_length).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("span_length", self.span_length),
            ("elastic_modulus", self.elastic_modulus),
            ("second_moment", self.second_moment),
            ("area", self.area),
            ("mass_per_length", self.mass_per_length),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidModel(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.damping_ratio >= 0.0) {
            return Err(Error::InvalidModel(format!(
                "damping_ratio must be non-negative, got {}",
                self.damping_ratio
            )));
        }
        if self.num_elements < 2 {
            return Err(Error::InvalidModel("num_elements must be at least 2".into()));
        }
        let supports = &self.support_positions;
        if supports.len() < 2 {
            return Err(Error::InvalidModel("at least two supports are required".into()));
        }
        if supports.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel("support positions must be strictly ascending".into()));
        }
        if supports[0].abs() > SUPPORT_TOLERANCE
            || (supports[supports.len() - 1] - self.span_length).abs() > SUPPORT_TOLERANCE
        {
            return Err(Error::InvalidModel("first support must be at 0 and last at L".into()));
        }
        Ok(())
    }
}

/// Default element count: 20 per span up to 30 m, else `ceil(span / 1.5)`.
pub fn default_num_elements(support_positions: &[f64]) -> usize {
    support_positions
        .windows(2)
        .map(|w| {
            let span = w[1] - w[0];
            if span <= 30.0 + SUPPORT_TOLERANCE {
                20
            } else {
                (span / 1.5).ceil() as usize
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupportKind {
    /// Horizontal and vertical translation fixed.
    Pin,
    /// Vertical translation fixed.
    Roller,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub node: usize,
    pub position: f64,
    pub kind: SupportKind,
}

/// Free-DOF indices of one node; `None` marks a constrained DOF.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDofs {
    pub ux: Option<usize>,
    pub uy: Option<usize>,
    pub rz: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeMesh {
    pub span_length: f64,
    pub dx: f64,
    pub node_coords: Vec<f64>,
    pub supports: Vec<Support>,
    pub dof_map: Vec<NodeDofs>,
    pub num_free: usize,
    /// Translational lumped mass per node [kg].
    pub lumped_masses: Vec<f64>,
}

impl BridgeMesh {
    pub fn num_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.node_coords.len() - 1
    }

    /// Index of the node closest to `x`.
    pub fn nearest_node(&self, x: f64) -> usize {
        ((x / self.dx).round().max(0.0) as usize).min(self.num_elements())
    }

    /// Element containing `x` and the local coordinate `ξ ∈ [0, 1]`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !(x >= -SUPPORT_TOLERANCE && x <= self.span_length + SUPPORT_TOLERANCE) {
            return Err(Error::OffBridge(x));
        }
        let x = x.clamp(0.0, self.span_length);
        let element = ((x / self.dx).floor() as usize).min(self.num_elements() - 1);
        let xi = ((x - self.node_coords[element]) / self.dx).clamp(0.0, 1.0);
        Ok((element, xi))
    }

    /// Vertical free-DOF values for every node, zero at supports.
    pub fn vertical_field(&self, free: &DVector<f64>) -> Vec<f64> {
        self.dof_map.iter().map(|d| d.uy.map_or(0.0, |i| free[i])).collect()
    }

    /// Rotational free-DOF values for every node.
    pub fn rotation_field(&self, free: &DVector<f64>) -> Vec<f64> {
        self.dof_map.iter().map(|d| d.rz.map_or(0.0, |i| free[i])).collect()
    }

    pub fn support_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.supports.iter().map(|s| s.node)
    }

    /// Global (unconstrained) DOF index: three per node.
    pub fn global_dof(node: usize, local: usize) -> usize {
        3 * node + local
    }

    /// Map from global DOF to free-DOF index.
    pub fn free_index(&self, global: usize) -> Option<usize> {
        let d = &self.dof_map[global / 3];
        match global % 3 {
            0 => d.ux,
            1 => d.uy,
            _ => d.rz,
        }
    }
}

pub fn build_mesh(model: &BridgeModel) -> Result<BridgeMesh> {
    model.validate()?;
    let ne = model.num_elements;
    let dx = model.element_length();
    let node_coords: Vec<f64> = (0..=ne).map(|i| i as f64 * dx).collect();

    let mut supports = Vec::with_capacity(model.support_positions.len());
    for (k, &position) in model.support_positions.iter().enumerate() {
        let node = (position / dx).round() as usize;
        if node > ne || (node_coords[node] - position).abs() > SUPPORT_TOLERANCE {
            return Err(Error::SupportOffMesh(position));
        }
        let kind = if k == 0 { SupportKind::Pin } else { SupportKind::Roller };
        supports.push(Support { node, position, kind });
    }

    let mut dof_map = vec![NodeDofs::default(); ne + 1];
    let mut next = 0;
    let mut take = |fixed: bool| {
        if fixed {
            None
        } else {
            next += 1;
            Some(next - 1)
        }
    };
    for (node, dofs) in dof_map.iter_mut().enumerate() {
        let support = supports.iter().find(|s| s.node == node);
        let fix_x = matches!(support, Some(s) if s.kind == SupportKind::Pin);
        let fix_y = support.is_some();
        dofs.ux = take(fix_x);
        dofs.uy = take(fix_y);
        dofs.rz = take(false);
    }

    let lumped_masses = (0..=ne)
        .map(|i| {
            let tributary = if i == 0 || i == ne { 0.5 * dx } else { dx };
            model.mass_per_length * tributary
        })
        .collect();

    Ok(BridgeMesh {
        span_length: model.span_length,
        dx,
        node_coords,
        supports,
        dof_map,
        num_free: next,
        lumped_masses,
    })
}

/// Assembled bridge matrices. The free-DOF blocks drive the dynamics; the
/// unconstrained matrices are kept for support reactions.
#[derive(Debug, Clone)]
pub struct Assembly {
    /// Diagonal of the lumped mass matrix over the free DOFs.
    pub mass: DVector<f64>,
    pub damping: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub full_mass: DVector<f64>,
    pub full_stiffness: DMatrix<f64>,
}

/// 6×6 stiffness of a horizontal 2D frame element, DOFs `[u1, v1, θ1, u2, v2, θ2]`.
pub fn frame_element_stiffness(ea: f64, ei: f64, length: f64) -> [[f64; 6]; 6] {
    let l = length;
    let a = ea / l;
    let b = 12.0 * ei / (l * l * l);
    let c = 6.0 * ei / (l * l);
    let d = 4.0 * ei / l;
    let e = 2.0 * ei / l;
    [
        [a, 0.0, 0.0, -a, 0.0, 0.0],
        [0.0, b, c, 0.0, -b, c],
        [0.0, c, d, 0.0, -c, e],
        [-a, 0.0, 0.0, a, 0.0, 0.0],
        [0.0, -b, -c, 0.0, b, -c],
        [0.0, c, e, 0.0, -c, d],
    ]
}

/// Assemble the lumped mass and stiffness matrices; damping is left at zero.
pub fn assemble(mesh: &BridgeMesh, model: &BridgeModel) -> Assembly {
    let n_full = 3 * mesh.num_nodes();
    let mut full_stiffness = DMatrix::zeros(n_full, n_full);
    let ke = frame_element_stiffness(
        model.elastic_modulus * model.area,
        model.flexural_rigidity(),
        mesh.dx,
    );
    for e in 0..mesh.num_elements() {
        let base = 3 * e;
        for (i, row) in ke.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                full_stiffness[(base + i, base + j)] += v;
            }
        }
    }
    let mut full_mass = DVector::zeros(n_full);
    for (node, &m) in mesh.lumped_masses.iter().enumerate() {
        full_mass[3 * node] = m;
        full_mass[3 * node + 1] = m;
    }

    let free: Vec<(usize, usize)> = (0..n_full)
        .filter_map(|g| mesh.free_index(g).map(|f| (g, f)))
        .collect();
    let n = mesh.num_free;
    let mut stiffness = DMatrix::zeros(n, n);
    let mut mass = DVector::zeros(n);
    for &(gi, fi) in &free {
        mass[fi] = full_mass[gi];
        for &(gj, fj) in &free {
            stiffness[(fi, fj)] = full_stiffness[(gi, gj)];
        }
    }
    Assembly { mass, damping: DMatrix::zeros(n, n), stiffness, full_mass, full_stiffness }
}

/// Lowest `n_modes` natural frequencies [Hz], ascending.
///
/// Massless DOFs are removed by static (Guyan) condensation before the
/// symmetric generalized eigen solve.
pub fn eigen_frequencies(assembly: &Assembly, n_modes: usize) -> Result<Vec<f64>> {
    let (values, _) = condensed_eigen(&assembly.mass, &assembly.stiffness)?;
    if values.len() < n_modes {
        return Err(Error::SingularSystem(format!(
            "requested {n_modes} modes but only {} dynamic DOFs exist",
            values.len()
        )));
    }
    Ok(values
        .iter()
        .take(n_modes)
        .map(|&lambda| lambda.sqrt() / (2.0 * PI))
        .collect())
}

/// Ascending eigenvalues `ω²` of the condensed system and the mass-DOF
/// index list they refer to.
fn condensed_eigen(mass: &DVector<f64>, stiffness: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<usize>)> {
    let dynamic: Vec<usize> = (0..mass.len()).filter(|&i| mass[i] > 0.0).collect();
    let massless: Vec<usize> = (0..mass.len()).filter(|&i| mass[i] <= 0.0).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| stiffness[(rows[i], cols[j])])
    };
    let k_tt = pick(&dynamic, &dynamic);
    let reduced = if massless.is_empty() {
        k_tt
    } else {
        let k_rr = pick(&massless, &massless);
        let k_rt = pick(&massless, &dynamic);
        let chol = Cholesky::new(k_rr).ok_or_else(|| {
            Error::SingularSystem("stiffness of massless DOFs is not positive definite".into())
        })?;
        let x = chol.solve(&k_rt);
        let mut reduced = k_tt - k_rt.transpose() * x;
        reduced = 0.5 * (&reduced + reduced.transpose());
        reduced
    };
    let inv_sqrt: Vec<f64> = dynamic.iter().map(|&i| 1.0 / mass[i].sqrt()).collect();
    let scaled = DMatrix::from_fn(dynamic.len(), dynamic.len(), |i, j| {
        reduced[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(scaled);
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if values.first().is_some_and(|&v| v <= 1e-12 * scale) {
        return Err(Error::SingularSystem(
            "condensed stiffness has a zero or negative eigenvalue (insufficient supports)".into(),
        ));
    }
    Ok((values, dynamic))
}

/// Rayleigh coefficients `(α_M, β_K)` giving damping ratio `ζ` at both
/// circular frequencies `ω₁`, `ω₂`.
pub fn rayleigh_coefficients(zeta: f64, omega1: f64, omega2: f64) -> Result<(f64, f64)> {
    for omega in [omega1, omega2] {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidFrequency(omega));
        }
    }
    let sum = omega1 + omega2;
    Ok((zeta * 2.0 * omega1 * omega2 / sum, 2.0 * zeta / sum))
}

/// Modal damping ratio produced by Rayleigh coefficients at `ω`.
pub fn rayleigh_modal_damping(alpha_m: f64, beta_k: f64, omega: f64) -> f64 {
    0.5 * (alpha_m / omega + beta_k * omega)
}

/// Mesh, matrices and damping of one bridge, ready for time stepping.
#[derive(Debug, Clone)]
pub struct BridgeSystem {
    pub model: BridgeModel,
    pub mesh: BridgeMesh,
    pub assembly: Assembly,
    pub alpha_m: f64,
    pub beta_k: f64,
}

impl BridgeSystem {
    pub fn new(model: &BridgeModel) -> Result<Self> {
        let mesh = build_mesh(model)?;
        let mut assembly = assemble(&mesh, model);
        let (alpha_m, beta_k) = if model.damping_ratio > 0.0 {
            let f = eigen_frequencies(&assembly, 2)?;
            rayleigh_coefficients(model.damping_ratio, 2.0 * PI * f[0], 2.0 * PI * f[1])?
        } else {
            (0.0, 0.0)
        };
        let mut damping = beta_k * &assembly.stiffness;
        for i in 0..assembly.mass.len() {
            damping[(i, i)] += alpha_m * assembly.mass[i];
        }
        assembly.damping = damping;
        Ok(Self { model: model.clone(), mesh, assembly, alpha_m, beta_k })
    }

    pub fn num_free(&self) -> usize {
        self.mesh.num_free
    }

    pub fn eigen_frequencies(&self, n_modes: usize) -> Result<Vec<f64>> {
        eigen_frequencies(&self.assembly, n_modes)
    }

    /// Vertical support reactions [N, upward positive] for a state under
    /// free-DOF loads, from the unconstrained elastic and damping forces.
    pub fn support_reactions(&self, state: &BridgeState) -> Vec<f64> {
        let n_full = 3 * self.mesh.num_nodes();
        let mut u = DVector::zeros(n_full);
        let mut v = DVector::zeros(n_full);
        for g in 0..n_full {
            if let Some(f) = self.mesh.free_index(g) {
                u[g] = state.displacement[f];
                v[g] = state.velocity[f];
            }
        }
        let k = &self.assembly.full_stiffness;
        let internal = k * (&u + self.beta_k * &v) + self.alpha_m * self.assembly.full_mass.component_mul(&v);
        self.mesh
            .supports
            .iter()
            .map(|s| internal[BridgeMesh::global_dof(s.node, 1)])
            .collect()
    }
}

pub fn make_newmark(system: &BridgeSystem, dt: f64) -> Result<NewmarkOperator> {
    NewmarkOperator::new(
        system.assembly.mass.clone(),
        system.assembly.damping.clone(),
        system.assembly.stiffness.clone(),
        dt,
    )
}
