//! Degraded anti-plane elastostatics.
//!
//! The discrete elastic energy of a displacement `u` under damage `v` is
//!
//! ```text
//! E(u; v) = Σ_cells (v_c² + k_ε) · μ · |∇u|²_c · h²
//! ```
//!
//! where `v_c` is the cell mean of the nodal damage and `|∇u|²_c` averages
//! the squared differences along the four cell edges. The edge form is exact
//! for affine fields, like a centre-point gradient, but has no checkerboard
//! null space; for `v ≡ 1` its Hessian is the five-point Laplacian with
//! natural boundary rows. The energy density is `μ|∇u|²` (no factor ½), so
//! the stress conjugate to `∇u` in the energy identity is `2μ∇u`.

use crate::error::{Error, Result};
use crate::grid::{BoundaryPartition, DamageField, Grid2, Label, ScalarField};
use crate::linalg::{pcg, CgOptions, SparseOperator};

pub const DEFAULT_K_EPS: f64 = 1e-6;
pub const DEFAULT_CAP_FACTOR: f64 = 100.0;

/// Material and regularization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Shear modulus μ.
    pub mu: f64,
    /// Young modulus, used only by the pointwise criteria.
    pub young: f64,
    /// Griffith constant G (energy per unit crack length).
    pub griffith: f64,
    /// Stress-power threshold Σ of the local appearance criterion.
    pub sigma: f64,
    /// Surcharge C > G charged to crack paths the criterion forbids.
    pub cap: f64,
    /// Phase-field length ε.
    pub eps: f64,
    /// Residual stiffness of fully damaged material.
    pub k_eps: f64,
}

impl Material {
    /// Material with the usual defaults: `E = 3μ`, no stress gating
    /// (`Σ = ∞`), `C = 100·G`, `k_ε = 1e-6`.
    pub fn new(mu: f64, griffith: f64, eps: f64) -> Result<Self> {
        Self {
            mu,
            young: 3.0 * mu,
            griffith,
            sigma: f64::INFINITY,
            cap: DEFAULT_CAP_FACTOR * griffith,
            eps,
            k_eps: DEFAULT_K_EPS,
        }
        .validated()
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        self.sigma = sigma;
        self.validated()
    }

    pub fn validated(self) -> Result<Self> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad("mu", self.mu);
        }
        if !(self.young > 0.0 && self.young.is_finite()) {
            return bad("E", self.young);
        }
        if !(self.griffith > 0.0 && self.griffith.is_finite()) {
            return bad("G", self.griffith);
        }
        if !(self.sigma > 0.0) {
            return bad("Sigma", self.sigma);
        }
        if !(self.cap > self.griffith && self.cap.is_finite()) {
            return bad("cap_C", self.cap);
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps", self.eps);
        }
        if !(self.k_eps > 0.0 && self.k_eps <= 1e-3) {
            return bad("k_eps", self.k_eps);
        }
        Ok(self)
    }
}

/// Imposed displacement on the `GammaU1 ∪ GammaU2` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletData {
    pub grid: Grid2,
    nodes: Vec<usize>,
    values: Vec<f64>,
}

impl DirichletData {
    /// Value per node from a closure over `(node, label, [x, y])`.
    pub fn from_fn(part: &BoundaryPartition, f: impl Fn(usize, Label, [f64; 2]) -> f64) -> Result<Self> {
        let g = part.grid;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for n in 0..g.n_nodes() {
            if let Some(l) = part.label(n).filter(|l| l.is_dirichlet()) {
                let v = f(n, l, g.node_xy(n));
                if !v.is_finite() {
                    return Err(Error::NonFinite(n));
                }
                nodes.push(n);
                values.push(v);
            }
        }
        Ok(Self { grid: g, nodes, values })
    }

    /// Constant value per label.
    pub fn uniform(part: &BoundaryPartition, on_u1: f64, on_u2: f64) -> Result<Self> {
        Self::from_fn(part, |_, l, _| if l == Label::GammaU1 { on_u1 } else { on_u2 })
    }

    /// Trace of a nodal field on the Dirichlet nodes.
    pub fn trace_of(part: &BoundaryPartition, u: &ScalarField) -> Result<Self> {
        if u.grid != part.grid {
            return Err(Error::GridMismatch);
        }
        Self::from_fn(part, |n, _, _| u.values()[n])
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid, nodes: self.nodes.clone(), values: self.values.iter().map(|v| a * v).collect() }
    }

    /// `a·self + b·other`; both must come from the same partition.
    pub fn combine(&self, a: f64, other: &DirichletData, b: f64) -> Result<Self> {
        if self.nodes != other.nodes {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            nodes: self.nodes.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        })
    }

    /// Zero extension into the interior.
    pub fn zero_extension(&self) -> ScalarField {
        let mut vals = vec![0.0; self.grid.n_nodes()];
        self.write_into(&mut vals);
        ScalarField::from_raw(self.grid, vals)
    }

    pub(crate) fn write_into(&self, x: &mut [f64]) {
        for (&n, &v) in self.nodes.iter().zip(&self.values) {
            x[n] = v;
        }
    }

    pub(crate) fn fixed_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.grid.n_nodes()];
        for &n in &self.nodes {
            m[n] = true;
        }
        m
    }
}

/// Per-cell stiffness multipliers `μ (v_c² + k_ε)`.
pub(crate) fn cell_stiffness(v: &DamageField, mat: &Material) -> Vec<f64> {
    (0..v.grid.n_cells())
        .map(|c| {
            let vc = v.cell_mean(c);
            mat.mu * (vc * vc + mat.k_eps)
        })
        .collect()
}

/// Edge conductances summed from the adjacent cell weights.
pub(crate) fn edge_weights_from_cells(grid: &Grid2, cell_w: &[f64]) -> Vec<f64> {
    grid.edge_cells()
        .iter()
        .map(|cs| cs.iter().flatten().map(|&c| cell_w[c]).sum())
        .collect()
}

/// Stiffness operator whose quadratic form `½ uᵀKu` is the elastic energy.
pub fn stiffness_operator(v: &DamageField, mat: &Material) -> SparseOperator {
    let w = cell_stiffness(v, mat);
    SparseOperator::from_edge_weights(v.grid, edge_weights_from_cells(&v.grid, &w)).with_damage_hash(v.values())
}

/// Squared gradient of `u` on cell `c`, averaged over the four cell edges.
#[inline]
pub(crate) fn cell_grad_sq(u: &[f64], grid: &Grid2, c: usize) -> f64 {
    let [a, b, d, e] = grid.cell_corners(c).map(|n| u[n]);
    let s = (b - a).powi(2) + (e - d).powi(2) + (d - a).powi(2) + (e - b).powi(2);
    s / (2.0 * grid.h * grid.h)
}

/// Options for the equilibrium solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn cg(&self) -> CgOptions {
        CgOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

/// Extra reaction term `Σ m_n (u_n − r_n)²` added to the energy.
pub(crate) struct Reaction<'a> {
    pub mass: &'a [f64],
    pub reference: &'a [f64],
}

pub(crate) fn solve_with(
    part: &BoundaryPartition,
    bc: &DirichletData,
    v: &DamageField,
    mat: &Material,
    opts: SolveOptions,
    guess: Option<&ScalarField>,
    reaction: Option<Reaction<'_>>,
) -> Result<ScalarField> {
    let g = part.grid;
    if v.grid != g || bc.grid != g || guess.is_some_and(|u| u.grid != g) {
        return Err(Error::GridMismatch);
    }
    if !part.has_dirichlet() || bc.is_empty() {
        return Err(Error::SingularSystem);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {}", opts.tol)));
    }
    let mut op = stiffness_operator(v, mat);
    let mut rhs = vec![0.0; g.n_nodes()];
    if let Some(r) = &reaction {
        // ½·(2m) u² − 2m r u
        let d: Vec<f64> = r.mass.iter().map(|m| 2.0 * m).collect();
        op.add_diagonal(&d);
        for (b, (m, x)) in rhs.iter_mut().zip(r.mass.iter().zip(r.reference)) {
            *b = 2.0 * m * x;
        }
    }
    let mut x = match guess {
        Some(u) => u.values().to_vec(),
        None => vec![0.0; g.n_nodes()],
    };
    bc.write_into(&mut x);
    let fixed = bc.fixed_mask();
    pcg(&op, &rhs, &mut x, &fixed, opts.cg())?;
    Ok(ScalarField::from_raw(g, x))
}

/// Minimize the degraded elastic energy subject to the Dirichlet data.
pub fn solve_equilibrium(
    grid: &Grid2,
    part: &BoundaryPartition,
    bc: &DirichletData,
    v: &DamageField,
    mat: &Material,
    tol: f64,
) -> Result<ScalarField> {
    if part.grid != *grid {
        return Err(Error::GridMismatch);
    }
    solve_with(part, bc, v, mat, SolveOptions::with_tol(tol), None, None)
}

/// `Σ_cells (v_c² + k_ε) μ |∇u|²_c h²`.
pub fn elastic_energy(u: &ScalarField, v: &DamageField, mat: &Material) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let g = u.grid;
    let h2 = g.h * g.h;
    let vals = u.values();
    Ok((0..g.n_cells())
        .map(|c| {
            let vc = v.cell_mean(c);
            (vc * vc + mat.k_eps) * mat.mu * cell_grad_sq(vals, &g, c) * h2
        })
        .sum())
}

/// Cell-wise vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVectorField {
    pub grid: Grid2,
    pub values: Vec<[f64; 2]>,
}

/// Anti-plane shear stress `μ∇u` at each cell centre.
pub fn stress_field(u: &ScalarField, mat: &Material) -> CellVectorField {
    let g = u.grid;
    CellVectorField {
        grid: g,
        values: (0..g.n_cells())
            .map(|c| {
                let [gx, gy] = u.cell_gradient(c);
                [mat.mu * gx, mat.mu * gy]
            })
            .collect(),
    }
}

/// Discrete Dirichlet-to-Neumann pairing `⟨T(v) a, b⟩ = ∫ σ(u_a)·∇b′ dx`,
/// where `u_a` is the equilibrium for data `a` and `b′` is the zero
/// extension of `b`.
pub fn dtn_pairing(
    grid: &Grid2,
    part: &BoundaryPartition,
    bc_a: &DirichletData,
    bc_b: &DirichletData,
    v: &DamageField,
    mat: &Material,
    tol: f64,
) -> Result<f64> {
    dtn_pairing_with_extension(grid, part, bc_a, &bc_b.zero_extension(), v, mat, tol)
}

/// Same as [`dtn_pairing`] with an explicit extension of the second datum.
pub fn dtn_pairing_with_extension(
    grid: &Grid2,
    part: &BoundaryPartition,
    bc_a: &DirichletData,
    extension: &ScalarField,
    v: &DamageField,
    mat: &Material,
    tol: f64,
) -> Result<f64> {
    if extension.grid != *grid {
        return Err(Error::GridMismatch);
    }
    let ua = solve_equilibrium(grid, part, bc_a, v, mat, tol)?;
    Ok(energy_pairing(&ua, extension, v, mat))
}

/// Bilinear form `uᵀ K(v) w`, i.e. the derivative of the elastic energy at
/// `u` in direction `w`.
pub fn energy_pairing(u: &ScalarField, w: &ScalarField, v: &DamageField, mat: &Material) -> f64 {
    stiffness_operator(v, mat).bilinear(u.values(), w.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, partition_boundary, BoundarySpec};

    fn strip(n: usize) -> (Grid2, BoundaryPartition) {
        let g = build_grid(n, n, 1.0, 1.0).unwrap();
        let p = partition_boundary(&g, &BoundarySpec::strip()).unwrap();
        (g, p)
    }

    fn mat() -> Material {
        Material::new(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn strip_solution_is_linear() {
        let (g, p) = strip(9);
        let d = 0.7;
        let bc = DirichletData::uniform(&p, 0.0, d).unwrap();
        let u = solve_equilibrium(&g, &p, &bc, &DamageField::intact(g), &mat(), 1e-12).unwrap();
        for n in 0..g.n_nodes() {
            let [_, y] = g.node_xy(n);
            assert!((u.values()[n] - d * y).abs() < 1e-10);
        }
        let s = stress_field(&u, &Material { mu: 2.0, ..mat() });
        for st in &s.values {
            assert!(st[0].abs() < 1e-9 && (st[1] - 2.0 * d).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let (g, p) = strip(7);
        let bc = DirichletData::uniform(&p, 0.0, 0.0).unwrap();
        let u = solve_equilibrium(&g, &p, &bc, &DamageField::intact(g), &mat(), 1e-10).unwrap();
        assert!(u.values().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn no_dirichlet_is_singular() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        let f = Label::GammaF;
        let p = partition_boundary(&g, &BoundarySpec::new(f, f, f, f)).unwrap();
        let bc = DirichletData::uniform(&p, 0.0, 1.0).unwrap();
        let r = solve_equilibrium(&g, &p, &bc, &DamageField::intact(g), &mat(), 1e-10);
        assert_eq!(r, Err(Error::SingularSystem));
    }

    #[test]
    fn iteration_cap_surfaces_as_divergence() {
        let (g, p) = strip(9);
        let bc = DirichletData::uniform(&p, 0.0, 1.0).unwrap();
        let opts = SolveOptions { tol: 1e-12, max_iter: Some(2) };
        let r = solve_with(&p, &bc, &DamageField::intact(g), &mat(), opts, None, None);
        assert!(matches!(r, Err(Error::SolverDiverged { .. })));
    }

    #[test]
    fn energy_of_linear_field() {
        let (g, _) = strip(9);
        let m = mat();
        let u = ScalarField::from_fn(g, |_, y| y).unwrap();
        let e = elastic_energy(&u, &DamageField::intact(g), &m).unwrap();
        assert!((e - (1.0 + m.k_eps)).abs() < 1e-12);
        let e2 = elastic_energy(&u, &DamageField::intact(g), &Material { mu: 2.0, ..m }).unwrap();
        assert_eq!(e2, 2.0 * e);
        let c = ScalarField::from_fn(g, |_, _| 3.0).unwrap();
        assert_eq!(elastic_energy(&c, &DamageField::intact(g), &m).unwrap(), 0.0);
    }

    #[test]
    fn stress_of_diagonal_ramp() {
        let (g, _) = strip(5);
        let u = ScalarField::from_fn(g, |x, y| x + y).unwrap();
        for s in stress_field(&u, &mat()).values {
            assert!((s[0] - 1.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        }
        let z = stress_field(&ScalarField::zeros(g), &mat());
        assert!(z.values.iter().all(|s| *s == [0.0, 0.0]));
    }

    #[test]
    fn grid_mismatch_is_detected() {
        let (g, _) = strip(5);
        let g2 = build_grid(7, 7, 1.0, 1.0).unwrap();
        let r = elastic_energy(&ScalarField::zeros(g), &DamageField::intact(g2), &mat());
        assert_eq!(r, Err(Error::GridMismatch));
    }

    #[test]
    fn material_invariants() {
        assert!(Material::new(0.0, 1.0, 0.1).is_err());
        assert!(Material::new(1.0, 1.0, -0.1).is_err());
        let m = Material::new(1.0, 1.0, 0.1).unwrap();
        assert!(Material { cap: 1.0, ..m }.validated().is_err());
        assert!(Material { k_eps: 1e-2, ..m }.validated().is_err());
        assert!(m.with_sigma(-1.0).is_err());
        assert_eq!(m.cap, 100.0);
    }

    #[test]
    fn pairing_ignores_interior_extension() {
        let (g, p) = strip(9);
        let m = mat();
        let v = DamageField::from_fn(g, |x, y| 0.5 + 0.5 * (3.0 * x * y).cos().abs()).unwrap();
        let a = DirichletData::from_fn(&p, |_, _, [x, y]| x + y * y).unwrap();
        let b = DirichletData::from_fn(&p, |_, _, [x, _]| (2.0 * x).sin()).unwrap();
        let e1 = dtn_pairing(&g, &p, &a, &b, &v, &m, 1e-12).unwrap();
        let mut other = b.zero_extension().into_values();
        for n in 0..g.n_nodes() {
            if !p.is_dirichlet(n) {
                other[n] = (n as f64).sqrt();
            }
        }
        let ext = ScalarField::new(g, other).unwrap();
        let e2 = dtn_pairing_with_extension(&g, &p, &a, &ext, &v, &m, 1e-12).unwrap();
        assert!((e1 - e2).abs() < 1e-8 * e1.abs().max(1.0));
        let zero = DirichletData::uniform(&p, 0.0, 0.0).unwrap();
        assert_eq!(dtn_pairing(&g, &p, &a, &zero, &v, &m, 1e-12).unwrap(), 0.0);
    }
}
