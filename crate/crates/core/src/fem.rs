//! Plane-stress linear elasticity on 4-node quadrilaterals, packaged as SPD
//! systems whose Dirichlet block is replaced by the identity.
//!
//! Degrees of freedom are node-major with `(u_x, u_y)` interleaved. After
//! [`apply_bcs`] the system is stored in block order: all Dirichlet dofs
//! first, then the free ones; [`SpdSystem::dof_map`] maps back to mesh dofs.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix2x4, Matrix3, SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{QgfaError, Result};

pub type ElementMatrix = SMatrix<f64, 8, 8>;

/// Structured or unstructured quadrilateral mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node indices.
    pub elements: Vec<[usize; 4]>,
}

impl Mesh {
    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    fn validate(&self) -> Result<()> {
        for (e, el) in self.elements.iter().enumerate() {
            if let Some(&bad) = el.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(QgfaError::Geometry {
                    element: e,
                    reason: format!("node index {bad} out of range"),
                });
            }
        }
        Ok(())
    }
}

pub fn build_mesh_rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(QgfaError::param("element counts must be positive"));
    }
    if !(lx > 0.0 && ly > 0.0) {
        return Err(QgfaError::param("domain lengths must be positive"));
    }
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n0 = j * (nx + 1) + i;
            elements.push([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]);
        }
    }
    Ok(Mesh { nodes, elements })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    #[serde(default = "unit_thickness")]
    pub thickness: f64,
}

fn unit_thickness() -> f64 {
    1.0
}

impl Material {
    pub fn new(youngs_modulus: f64, poisson_ratio: f64, thickness: f64) -> Result<Self> {
        let m = Self {
            youngs_modulus,
            poisson_ratio,
            thickness,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0) {
            return Err(QgfaError::param("Young's modulus must be positive"));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(QgfaError::param("Poisson ratio must lie in (-1, 0.5)"));
        }
        if !(self.thickness > 0.0) {
            return Err(QgfaError::param("thickness must be positive"));
        }
        Ok(())
    }

    /// Plane-stress constitutive matrix in Voigt order `(xx, yy, xy)`.
    pub fn plane_stress(&self) -> Matrix3<f64> {
        let nu = self.poisson_ratio;
        let c = self.youngs_modulus / (1.0 - nu * nu);
        Matrix3::new(c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0)
    }
}

/// Bilinear shape-function derivatives with respect to `(ξ, η)`.
fn shape_derivatives(xi: f64, eta: f64) -> Matrix2x4<f64> {
    Matrix2x4::new(
        -(1.0 - eta),
        1.0 - eta,
        1.0 + eta,
        -(1.0 + eta),
        -(1.0 - xi),
        -(1.0 + xi),
        1.0 + xi,
        1.0 - xi,
    ) * 0.25
}

/// Strain-displacement matrix and Jacobian determinant at `(ξ, η)`.
pub fn strain_displacement(coords: &[[f64; 2]; 4], xi: f64, eta: f64) -> (SMatrix<f64, 3, 8>, f64) {
    let dn = shape_derivatives(xi, eta);
    let mut jac = Matrix2::zeros();
    for a in 0..4 {
        for r in 0..2 {
            jac[(r, 0)] += dn[(r, a)] * coords[a][0];
            jac[(r, 1)] += dn[(r, a)] * coords[a][1];
        }
    }
    let det = jac.determinant();
    let mut b = SMatrix::<f64, 3, 8>::zeros();
    if let Some(inv) = jac.try_inverse() {
        let dx = inv * dn;
        for a in 0..4 {
            b[(0, 2 * a)] = dx[(0, a)];
            b[(1, 2 * a + 1)] = dx[(1, a)];
            b[(2, 2 * a)] = dx[(1, a)];
            b[(2, 2 * a + 1)] = dx[(0, a)];
        }
    }
    (b, det)
}

/// Element stiffness by 2×2 Gauss quadrature.
pub fn element_stiffness(coords: &[[f64; 2]; 4], material: &Material) -> Result<ElementMatrix> {
    element_stiffness_indexed(coords, material, 0)
}

fn element_stiffness_indexed(
    coords: &[[f64; 2]; 4],
    material: &Material,
    element: usize,
) -> Result<ElementMatrix> {
    material.validate()?;
    let d = material.plane_stress();
    let g = 1.0 / 3f64.sqrt();
    let mut k = ElementMatrix::zeros();
    for &xi in &[-g, g] {
        for &eta in &[-g, g] {
            let (b, det) = strain_displacement(coords, xi, eta);
            if !(det > 1e-14) {
                return Err(QgfaError::Geometry {
                    element,
                    reason: format!("Jacobian determinant {det:e} at ({xi:.3}, {eta:.3})"),
                });
            }
            k += b.transpose() * d * b * (det * material.thickness);
        }
    }
    Ok(k)
}

fn element_dofs(el: &[usize; 4]) -> [usize; 8] {
    let mut dofs = [0; 8];
    for (a, &n) in el.iter().enumerate() {
        dofs[2 * a] = 2 * n;
        dofs[2 * a + 1] = 2 * n + 1;
    }
    dofs
}

/// Global stiffness `K^G`. Elements are summed in mesh order.
pub fn assemble_global(mesh: &Mesh, material: &Material) -> Result<DMatrix<f64>> {
    mesh.validate()?;
    let n = mesh.n_dofs();
    let mut k = DMatrix::zeros(n, n);
    for (e, el) in mesh.elements.iter().enumerate() {
        let ke = element_stiffness_indexed(&mesh.element_coords(e), material, e)?;
        let dofs = element_dofs(el);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                k[(gi, gj)] += ke[(i, j)];
            }
        }
    }
    Ok(k)
}

/// Prescribed displacements; every other dof carries an applied load
/// (zero unless listed in `loads`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BcSpec {
    pub dirichlet: BTreeMap<usize, f64>,
    #[serde(default)]
    pub loads: BTreeMap<usize, f64>,
}

impl BcSpec {
    fn validate(&self, n_dofs: usize) -> Result<()> {
        if let Some((&dof, _)) = self.dirichlet.iter().find(|(&d, _)| d >= n_dofs) {
            return Err(QgfaError::param(format!("Dirichlet dof {dof} out of range")));
        }
        if let Some((&dof, _)) = self.loads.iter().find(|(&d, _)| d >= n_dofs) {
            return Err(QgfaError::param(format!("load dof {dof} out of range")));
        }
        if let Some((&dof, _)) = self.loads.iter().find(|(d, _)| self.dirichlet.contains_key(d)) {
            return Err(QgfaError::param(format!(
                "dof {dof} is both prescribed and loaded"
            )));
        }
        Ok(())
    }
}

/// SPD system `K u = f` with a hot start `u(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdSystem {
    pub matrix: DMatrix<f64>,
    pub load: DVector<f64>,
    pub hot_start: DVector<f64>,
    pub spectral_norm: f64,
    pub kappa: f64,
    /// `dof_map[i]` is the mesh dof stored in slot `i`.
    pub dof_map: Vec<usize>,
    /// Leading slots holding prescribed displacements.
    pub n_dirichlet: usize,
    /// Dimension before padding.
    pub original_dim: usize,
}

impl SpdSystem {
    /// Wraps an arbitrary SPD matrix; checks symmetry and positivity.
    pub fn new(matrix: DMatrix<f64>, load: DVector<f64>, hot_start: DVector<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(QgfaError::Dimension {
                expected: n,
                got: matrix.ncols(),
            });
        }
        for v in [&load, &hot_start] {
            if v.len() != n {
                return Err(QgfaError::Dimension {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(QgfaError::param("matrix is not symmetric"));
        }
        let (lo, hi) = extreme_eigenvalues(&matrix);
        if !(lo > 0.0) {
            return Err(QgfaError::NotSpd { min_eigenvalue: lo });
        }
        Ok(Self {
            matrix,
            load,
            hot_start,
            spectral_norm: hi,
            kappa: hi / lo,
            dof_map: (0..n).collect(),
            n_dirichlet: 0,
            original_dim: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn with_hot_start(mut self, hot_start: DVector<f64>) -> Result<Self> {
        if hot_start.len() != self.dim() {
            return Err(QgfaError::Dimension {
                expected: self.dim(),
                got: hot_start.len(),
            });
        }
        self.hot_start = hot_start;
        Ok(self)
    }

    pub fn with_load(mut self, load: DVector<f64>) -> Result<Self> {
        if load.len() != self.dim() {
            return Err(QgfaError::Dimension {
                expected: self.dim(),
                got: load.len(),
            });
        }
        self.load = load;
        Ok(self)
    }

    /// `(K/‖K‖, f/‖K‖, u(0))`: same minimiser, spectrum in `[1/κ, 1]`.
    pub fn normalized(&self) -> SpdSystem {
        let s = self.spectral_norm;
        SpdSystem {
            matrix: &self.matrix / s,
            load: &self.load / s,
            hot_start: self.hot_start.clone(),
            spectral_norm: 1.0,
            ..self.clone()
        }
    }

    /// Condition number of the free block `K_NN` alone, if there is one.
    pub fn free_block_kappa(&self) -> Option<f64> {
        let nd = self.n_dirichlet;
        let nf = self.original_dim - nd;
        if nf == 0 {
            return None;
        }
        let block = self.matrix.view((nd, nd), (nf, nf)).into_owned();
        let (lo, hi) = extreme_eigenvalues(&block);
        Some(hi / lo)
    }

    /// Scatters a block-ordered vector back to mesh dof order.
    pub fn to_mesh_order(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dof_map.len());
        for (slot, &dof) in self.dof_map.iter().enumerate() {
            out[dof] = u[slot];
        }
        out
    }

    pub fn to_json(&self) -> SpdSystemJson {
        SpdSystemJson {
            dim: self.dim(),
            matrix: (0..self.dim())
                .map(|i| self.matrix.row(i).iter().copied().collect())
                .collect(),
            load: self.load.iter().copied().collect(),
            hot_start: self.hot_start.iter().copied().collect(),
            spectral_norm: self.spectral_norm,
            kappa: self.kappa,
            kappa_free_block: self.free_block_kappa(),
            dof_map: self.dof_map.clone(),
            n_dirichlet: self.n_dirichlet,
            original_dim: self.original_dim,
        }
    }

    pub fn from_json(j: &SpdSystemJson) -> Result<Self> {
        let n = j.matrix.len();
        if j.matrix.iter().any(|r| r.len() != n) {
            return Err(QgfaError::param("matrix must be square"));
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| j.matrix[r][c]);
        let mut sys = SpdSystem::new(
            matrix,
            DVector::from_vec(j.load.clone()),
            DVector::from_vec(j.hot_start.clone()),
        )?;
        if !j.dof_map.is_empty() {
            sys.dof_map = j.dof_map.clone();
        }
        sys.n_dirichlet = j.n_dirichlet;
        sys.original_dim = if j.original_dim == 0 { n } else { j.original_dim };
        Ok(sys)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, text).map_err(|e| QgfaError::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
        Self::from_json(&serde_json::from_str(&text)?)
    }
}

/// Serialized form of [`SpdSystem`]; `matrix` is a list of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpdSystemJson {
    pub dim: usize,
    pub matrix: Vec<Vec<f64>>,
    pub load: Vec<f64>,
    pub hot_start: Vec<f64>,
    pub spectral_norm: f64,
    pub kappa: f64,
    #[serde(default)]
    pub kappa_free_block: Option<f64>,
    #[serde(default)]
    pub dof_map: Vec<usize>,
    #[serde(default)]
    pub n_dirichlet: usize,
    #[serde(default)]
    pub original_dim: usize,
}

fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Blocks the global stiffness into `blockdiag(I, K_NN)` with load
/// `(u_D; f_N - K_ND u_D)` and hot start `(u_D; 0)`.
pub fn apply_bcs(k_global: &DMatrix<f64>, bcs: &BcSpec) -> Result<SpdSystem> {
    let n = k_global.nrows();
    bcs.validate(n)?;
    if bcs.dirichlet.is_empty() {
        return Err(QgfaError::param("at least one Dirichlet dof is required"));
    }
    let d: Vec<usize> = bcs.dirichlet.keys().copied().collect();
    let free: Vec<usize> = (0..n).filter(|i| !bcs.dirichlet.contains_key(i)).collect();
    let nd = d.len();
    let dof_map: Vec<usize> = d.iter().chain(free.iter()).copied().collect();
    let u_d: Vec<f64> = bcs.dirichlet.values().copied().collect();

    let mut matrix = DMatrix::zeros(n, n);
    let mut load = DVector::zeros(n);
    let mut hot_start = DVector::zeros(n);
    for i in 0..nd {
        matrix[(i, i)] = 1.0;
        load[i] = u_d[i];
        hot_start[i] = u_d[i];
    }
    for (a, &ga) in free.iter().enumerate() {
        for (b, &gb) in free.iter().enumerate() {
            matrix[(nd + a, nd + b)] = k_global[(ga, gb)];
        }
        let coupling: f64 = d.iter().zip(&u_d).map(|(&gd, &ud)| k_global[(ga, gd)] * ud).sum();
        load[nd + a] = bcs.loads.get(&ga).copied().unwrap_or(0.0) - coupling;
    }

    if !free.is_empty() {
        let block = matrix.view((nd, nd), (free.len(), free.len())).into_owned();
        let (lo, hi) = extreme_eigenvalues(&block);
        if !(lo > 1e-12 * hi) {
            return Err(QgfaError::Singular(format!(
                "free block has eigenvalue {lo:e} (largest {hi:e}); constraints do not remove rigid-body modes"
            )));
        }
    }
    let (lo, hi) = extreme_eigenvalues(&matrix);
    Ok(SpdSystem {
        matrix,
        load,
        hot_start,
        spectral_norm: hi,
        kappa: hi / lo,
        dof_map,
        n_dirichlet: nd,
        original_dim: n,
    })
}

/// Reaction forces `f_D = K_DD u_D + K_DN u_N` for a mesh-ordered solution.
pub fn reactions(k_global: &DMatrix<f64>, bcs: &BcSpec, u_mesh: &DVector<f64>) -> BTreeMap<usize, f64> {
    let ku = k_global * u_mesh;
    bcs.dirichlet.keys().map(|&d| (d, ku[d])).collect()
}

/// Recomputes `λ_max / λ_min` from the stored matrix.
pub fn condition_number(system: &SpdSystem) -> Result<f64> {
    let (lo, hi) = extreme_eigenvalues(&system.matrix);
    if !(lo > 0.0) {
        return Err(QgfaError::NotSpd { min_eigenvalue: lo });
    }
    Ok(hi / lo)
}

/// Extends the system with an identity block and zero vectors up to the
/// next power-of-two dimension.
pub fn pad_to_power_of_two(system: &SpdSystem) -> SpdSystem {
    let n = system.dim();
    let target = n.next_power_of_two();
    if target == n {
        return system.clone();
    }
    let mut matrix = DMatrix::identity(target, target);
    matrix.view_mut((0, 0), (n, n)).copy_from(&system.matrix);
    let mut load = DVector::zeros(target);
    load.rows_mut(0, n).copy_from(&system.load);
    let mut hot_start = DVector::zeros(target);
    hot_start.rows_mut(0, n).copy_from(&system.hot_start);

    let (lo, hi) = extreme_eigenvalues(&matrix);
    SpdSystem {
        matrix,
        load,
        hot_start,
        spectral_norm: hi,
        kappa: hi / lo,
        dof_map: system.dof_map.clone(),
        n_dirichlet: system.n_dirichlet,
        original_dim: system.original_dim,
    }
}

/// Mesh, material and boundary conditions as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FemInput {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub dirichlet: BTreeMap<usize, f64>,
    #[serde(default)]
    pub loads: BTreeMap<usize, f64>,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    #[serde(default = "unit_thickness")]
    pub thickness: f64,
}

impl FemInput {
    pub fn mesh(&self) -> Mesh {
        Mesh {
            nodes: self.nodes.clone(),
            elements: self.elements.clone(),
        }
    }

    pub fn material(&self) -> Result<Material> {
        Material::new(self.youngs_modulus, self.poisson_ratio, self.thickness)
    }

    pub fn bcs(&self) -> BcSpec {
        BcSpec {
            dirichlet: self.dirichlet.clone(),
            loads: self.loads.clone(),
        }
    }

    pub fn build(&self) -> Result<SpdSystem> {
        let k = assemble_global(&self.mesh(), &self.material()?)?;
        apply_bcs(&k, &self.bcs())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| QgfaError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn from_mesh(mesh: Mesh, dirichlet: BTreeMap<usize, f64>) -> Self {
        FemInput {
            nodes: mesh.nodes,
            elements: mesh.elements,
            dirichlet,
            loads: BTreeMap::new(),
            youngs_modulus: 0.2,
            poisson_ratio: 0.3,
            thickness: 1.0,
        }
    }
}

const ON_LINE: f64 = 1e-9;

/// Unit square, 3×3 elements, rollers on `x = 0` (u_x) and `y = 0` (u_y),
/// `u_x = 0.1` on `x = 1`.
pub fn tensile_input() -> FemInput {
    let mesh = build_mesh_rect(3, 3, 1.0, 1.0).expect("valid mesh");
    let mut dirichlet = BTreeMap::new();
    for (a, &[x, y]) in mesh.nodes.iter().enumerate() {
        if x.abs() < ON_LINE {
            dirichlet.insert(2 * a, 0.0);
        }
        if y.abs() < ON_LINE {
            dirichlet.insert(2 * a + 1, 0.0);
        }
        if (x - 1.0).abs() < ON_LINE {
            dirichlet.insert(2 * a, 0.1);
        }
    }
    FemInput::from_mesh(mesh, dirichlet)
}

/// `[0, 2] × [0, 1]` beam of 3 elements clamped at `x = 0`, with
/// `u_y = 0.1` prescribed at the tip corner `(2, 1)`.
pub fn cantilever_input() -> FemInput {
    let mesh = build_mesh_rect(3, 1, 2.0, 1.0).expect("valid mesh");
    let mut dirichlet = BTreeMap::new();
    for (a, &[x, y]) in mesh.nodes.iter().enumerate() {
        if x.abs() < ON_LINE {
            dirichlet.insert(2 * a, 0.0);
            dirichlet.insert(2 * a + 1, 0.0);
        }
        if (x - 2.0).abs() < ON_LINE && (y - 1.0).abs() < ON_LINE {
            dirichlet.insert(2 * a + 1, 0.1);
        }
    }
    FemInput::from_mesh(mesh, dirichlet)
}

pub fn make_tensile_problem() -> SpdSystem {
    tensile_input().build().expect("tensile problem assembles")
}

pub fn make_cantilever_problem() -> SpdSystem {
    cantilever_input().build().expect("cantilever problem assembles")
}
