//! Local and curve-level crack appearance criteria.
//!
//! The local criterion asks whether some unit direction `ν ⊥ n` makes the
//! power density `σ_{li} n_i F_{lk} ν_k` reach the threshold `Σ`. Writing
//! `c = Fᵀ(σn)`, the supremum over `ν` is the length of the projection of
//! `c` onto the plane orthogonal to `n`.
//!
//! Anti-plane states are embedded in 3D as `σ = μ(g⊗e₃ + e₃⊗g)`,
//! `F = e₃⊗g` with in-plane gradient `g`. Then `c = μ(g·n) g` and the local
//! value is `μ |g·n| |g·n⊥|`, maximal (`μ|g|²/2`) for normals at 45° to `g`.

use std::f64::consts::FRAC_PI_4;

use crate::elastic::Material;
use crate::error::{Error, Result};
use crate::grid::{DamageField, ScalarField};
use crate::phase_field::SurfaceDensityField;

pub type Mat3 = [[f64; 3]; 3];

/// Normal angle that maximizes the uniaxial local criterion.
pub const CRITICAL_ANGLE: f64 = FRAC_PI_4;

const NORMAL_TOL: f64 = 1e-12;

/// Stress, displacement gradient and a unit normal, in 2D or 3D. 2D states
/// are stored in the upper-left block with zero padding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorState {
    pub sigma: Mat3,
    pub f: Mat3,
    pub n: [f64; 3],
    pub dim: usize,
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mat_vec(m: &Mat3, x: [f64; 3]) -> [f64; 3] {
    [dot3(m[0], x), dot3(m[1], x), dot3(m[2], x)]
}

fn mat_t_vec(m: &Mat3, x: [f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for (l, row) in m.iter().enumerate() {
        for k in 0..3 {
            y[k] += row[k] * x[l];
        }
    }
    y
}

impl TensorState {
    pub fn new3(sigma: Mat3, f: Mat3, n: [f64; 3]) -> Result<Self> {
        Self { sigma, f, n, dim: 3 }.validated()
    }

    pub fn new2(sigma: [[f64; 2]; 2], f: [[f64; 2]; 2], n: [f64; 2]) -> Result<Self> {
        let pad = |m: [[f64; 2]; 2]| [[m[0][0], m[0][1], 0.0], [m[1][0], m[1][1], 0.0], [0.0; 3]];
        Self { sigma: pad(sigma), f: pad(f), n: [n[0], n[1], 0.0], dim: 2 }.validated()
    }

    /// Like [`TensorState::new3`] but normalizes any non-zero normal first.
    pub fn with_normal_direction(sigma: Mat3, f: Mat3, n: [f64; 3]) -> Result<Self> {
        let l = norm3(n);
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::BadNormal(l));
        }
        Self::new3(sigma, f, [n[0] / l, n[1] / l, n[2] / l])
    }

    /// Anti-plane state with gradient `g`, shear modulus `mu` and in-plane
    /// normal `n`.
    pub fn antiplane(g: [f64; 2], mu: f64, n: [f64; 2]) -> Result<Self> {
        let (sigma, f) = antiplane_tensors(g, mu);
        Self::new3(sigma, f, [n[0], n[1], 0.0])
    }

    fn validated(self) -> Result<Self> {
        let l = norm3(self.n);
        if !((l - 1.0).abs() <= NORMAL_TOL) {
            return Err(Error::BadNormal(l));
        }
        let finite = self.sigma.iter().chain(self.f.iter()).flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("tensor state has non-finite entries".into()));
        }
        if self.dim == 2 && self.n[2] != 0.0 {
            return Err(Error::InvalidParameter("2D normal must be in-plane".into()));
        }
        Ok(self)
    }

    /// `c = Fᵀ(σn)`, so that the power density for direction `ν` is `c·ν`.
    pub fn power_covector(&self) -> [f64; 3] {
        mat_t_vec(&self.f, mat_vec(&self.sigma, self.n))
    }

    /// `σ_{li} n_i F_{lk} ν_k` for a given direction.
    pub fn power_density(&self, nu: [f64; 3]) -> f64 {
        dot3(self.power_covector(), nu)
    }
}

/// Embedding `σ = μ(g⊗e₃ + e₃⊗g)`, `F = e₃⊗g`.
pub fn antiplane_tensors(g: [f64; 2], mu: f64) -> (Mat3, Mat3) {
    let sigma = [[0.0, 0.0, mu * g[0]], [0.0, 0.0, mu * g[1]], [mu * g[0], mu * g[1], 0.0]];
    let f = [[0.0; 3], [0.0; 3], [g[0], g[1], 0.0]];
    (sigma, f)
}

/// Supremum of the local power density over unit directions orthogonal to
/// the normal.
pub fn la_sup(state: &TensorState) -> f64 {
    let c = state.power_covector();
    let n = state.n;
    if state.dim == 2 {
        let perp = [-n[1], n[0], 0.0];
        dot3(c, perp).abs()
    } else {
        let cn = dot3(c, n);
        norm3([c[0] - cn * n[0], c[1] - cn * n[1], c[2] - cn * n[2]])
    }
}

/// Unit direction attaining [`la_sup`] (any admissible one when it is zero).
pub fn la_argmax(state: &TensorState) -> [f64; 3] {
    let c = state.power_covector();
    let n = state.n;
    if state.dim == 2 {
        let perp = [-n[1], n[0], 0.0];
        let s = if dot3(c, perp) < 0.0 { -1.0 } else { 1.0 };
        return [s * perp[0], s * perp[1], 0.0];
    }
    let cn = dot3(c, n);
    let p = [c[0] - cn * n[0], c[1] - cn * n[1], c[2] - cn * n[2]];
    let l = norm3(p);
    if l > 0.0 {
        return [p[0] / l, p[1] / l, p[2] / l];
    }
    // any unit vector orthogonal to n
    let e = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let en = dot3(e, n);
    let q = [e[0] - en * n[0], e[1] - en * n[1], e[2] - en * n[2]];
    let lq = norm3(q);
    [q[0] / lq, q[1] / lq, q[2] / lq]
}

/// Maximum over in-plane normals of the anti-plane local value: `μ|g|²/2`.
pub fn antiplane_la_max(g: [f64; 2], mu: f64) -> f64 {
    0.5 * mu * (g[0] * g[0] + g[1] * g[1])
}

/// Gradient magnitude above which some in-plane normal admits a crack.
pub fn antiplane_la_threshold(mu: f64, sigma: f64) -> Result<f64> {
    if !(mu > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu}, Sigma = {sigma}")));
    }
    Ok((2.0 * sigma / mu).sqrt())
}

/// `G` when the local criterion is met, `+∞` otherwise.
pub fn f_infinity(state: &TensorState, sigma: f64, griffith: f64) -> f64 {
    if la_sup(state) >= sigma {
        griffith
    } else {
        f64::INFINITY
    }
}

/// Finite surcharge: `G` on the admissible set, rising linearly to `cap` as
/// the local value drops to zero.
pub fn f_c_from_la(la: f64, sigma: f64, griffith: f64, cap: f64) -> f64 {
    if la >= sigma {
        griffith
    } else {
        let r = (la / sigma).clamp(0.0, 1.0);
        (griffith + (cap - griffith) * (1.0 - r)).clamp(griffith, cap)
    }
}

pub fn f_c(state: &TensorState, sigma: f64, griffith: f64, cap: f64) -> Result<f64> {
    if !(cap > griffith) {
        return Err(Error::InvalidParameter(format!("cap_C = {cap} must exceed G = {griffith}")));
    }
    Ok(f_c_from_la(la_sup(state), sigma, griffith, cap))
}

/// `sqrt(2EΣ)`, attained for normals at [`CRITICAL_ANGLE`] to the traction.
pub fn critical_uniaxial_stress(young: f64, sigma: f64) -> Result<f64> {
    if !(young > 0.0) || !(sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!("E = {young}, Sigma = {sigma}")));
    }
    Ok((2.0 * young * sigma).sqrt())
}

/// Uniaxial traction state `σ = diag(0,0,Ea)`, `F = diag(0,0,a)` with the
/// normal at angle `alpha` to the traction axis.
pub fn uniaxial_state(young: f64, strain: f64, alpha: f64) -> Result<TensorState> {
    let mut sigma = [[0.0; 3]; 3];
    let mut f = [[0.0; 3]; 3];
    sigma[2][2] = young * strain;
    f[2][2] = strain;
    TensorState::new3(sigma, f, [alpha.sin(), 0.0, alpha.cos()])
}

/// Per-cell surface density of the improved model, from the anti-plane
/// local value `μ|∇u|²/2` of the given state. Cells with mean damage at or
/// below ½ are treated as already cracked and get `G`.
pub fn surface_density_field(u: &ScalarField, v: &DamageField, mat: &Material) -> Result<SurfaceDensityField> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid;
    let vals = (0..grid.n_cells())
        .map(|c| {
            if v.cell_mean(c) <= 0.5 {
                mat.griffith
            } else {
                let la = antiplane_la_max(u.cell_gradient(c), mat.mu);
                f_c_from_la(la, mat.sigma, mat.griffith, mat.cap)
            }
        })
        .collect();
    SurfaceDensityField::new(grid, vals, mat.griffith, mat.cap)
}

/// Polyline crack candidate with a tangential velocity jump per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackCandidate {
    vertices: Vec<[f64; 2]>,
    normals: Vec<[f64; 2]>,
    jumps: Vec<f64>,
}

impl CrackCandidate {
    /// Normals are the segment tangents rotated by +90°.
    pub fn new(vertices: Vec<[f64; 2]>, jumps: Vec<f64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::EmptyCandidate);
        }
        if jumps.len() != vertices.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} jumps for {} segments",
                jumps.len(),
                vertices.len() - 1
            )));
        }
        let mut normals = Vec::with_capacity(jumps.len());
        for w in vertices.windows(2) {
            let (dx, dy) = (w[1][0] - w[0][0], w[1][1] - w[0][1]);
            let l = dx.hypot(dy);
            if l == 0.0 {
                return Err(Error::InvalidParameter("repeated vertex in crack candidate".into()));
            }
            normals.push([-dy / l, dx / l]);
        }
        if jumps.iter().any(|j| !j.is_finite()) {
            return Err(Error::InvalidParameter("non-finite jump".into()));
        }
        Ok(Self { vertices, normals, jumps })
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn normals(&self) -> &[[f64; 2]] {
        &self.normals
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
    }
}

/// Source of `(σ, F)` at points of the plane.
pub trait TensorSampler {
    fn tensors_at(&self, p: [f64; 2]) -> Option<(Mat3, Mat3)>;
}

/// Spatially constant stress and gradient.
#[derive(Debug, Clone, Copy)]
pub struct UniformTensors {
    pub sigma: Mat3,
    pub f: Mat3,
}

impl TensorSampler for UniformTensors {
    fn tensors_at(&self, _: [f64; 2]) -> Option<(Mat3, Mat3)> {
        Some((self.sigma, self.f))
    }
}

/// Anti-plane displacement field sampled through its bilinear gradient.
#[derive(Debug, Clone, Copy)]
pub struct AntiplaneField<'a> {
    pub u: &'a ScalarField,
    pub mu: f64,
}

impl TensorSampler for AntiplaneField<'_> {
    fn tensors_at(&self, p: [f64; 2]) -> Option<(Mat3, Mat3)> {
        self.u.sample_gradient(p).map(|g| antiplane_tensors(g, self.mu))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub admissible: bool,
    /// Both sides vanish identically (zero jumps and zero bound).
    pub degenerate: bool,
}

/// Evaluate the integrated appearance criterion on a candidate, sampling the
/// fields at segment midpoints.
pub fn da_evaluate(
    cand: &CrackCandidate,
    field: &impl TensorSampler,
    sigma: f64,
    eta_sup: f64,
) -> Result<DaVerdict> {
    if cand.jumps.is_empty() {
        return Err(Error::EmptyCandidate);
    }
    let max_jump = cand.jumps.iter().fold(0.0_f64, |m, j| m.max(j.abs()));
    if !(eta_sup >= max_jump) {
        return Err(Error::InvalidParameter(format!("eta_sup = {eta_sup} below max jump {max_jump}")));
    }
    let mut lhs = 0.0;
    for (s, w) in cand.vertices.windows(2).enumerate() {
        let mid = [(w[0][0] + w[1][0]) / 2.0, (w[0][1] + w[1][1]) / 2.0];
        let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        let (sg, f) = field
            .tensors_at(mid)
            .ok_or_else(|| Error::InvalidParameter(format!("segment {s} midpoint outside the field")))?;
        let n = cand.normals[s];
        let tau = [n[1], -n[0], 0.0];
        let c = mat_t_vec(&f, mat_vec(&sg, [n[0], n[1], 0.0]));
        lhs += dot3(c, tau) * cand.jumps[s] * len;
    }
    let rhs = eta_sup * sigma * cand.length();
    Ok(DaVerdict { lhs, rhs, admissible: lhs >= rhs, degenerate: lhs == 0.0 && rhs == 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniaxial_closed_form() {
        let (e, a) = (3.0, 0.2);
        let sig = e * a;
        for k in 0..=8 {
            let alpha = k as f64 * std::f64::consts::PI / 16.0;
            let st = uniaxial_state(e, a, alpha).unwrap();
            let expect = sig * sig / (2.0 * e) * (2.0 * alpha).sin();
            assert!((la_sup(&st) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_stress_gives_zero() {
        let st = TensorState::new3([[0.0; 3]; 3], [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]], [0.0, 0.6, 0.8]).unwrap();
        assert_eq!(la_sup(&st), 0.0);
        assert_eq!(f_infinity(&st, 0.1, 1.0), f64::INFINITY);
        assert_eq!(f_c(&st, 0.1, 1.0, 50.0).unwrap(), 50.0);
    }

    #[test]
    fn bad_normal_rejected() {
        let z = [[0.0; 3]; 3];
        assert!(matches!(TensorState::new3(z, z, [1.0, 1.0, 0.0]), Err(Error::BadNormal(_))));
        let st = TensorState::with_normal_direction(z, z, [2.0, 0.0, 0.0]).unwrap();
        assert_eq!(st.n, [1.0, 0.0, 0.0]);
        assert!(TensorState::with_normal_direction(z, z, [0.0; 3]).is_err());
    }

    #[test]
    fn f_c_endpoints_and_midpoint() {
        assert_eq!(f_c_from_la(0.0, 2.0, 1.0, 11.0), 11.0);
        assert_eq!(f_c_from_la(2.0, 2.0, 1.0, 11.0), 1.0);
        assert!((f_c_from_la(1.0, 2.0, 1.0, 11.0) - 6.0).abs() < 1e-14);
        assert_eq!(f_c_from_la(5.0, 2.0, 1.0, 11.0), 1.0);
    }

    #[test]
    fn f_infinity_threshold_is_inclusive() {
        let st = uniaxial_state(1.0, 1.0, CRITICAL_ANGLE).unwrap();
        let la = la_sup(&st);
        assert_eq!(f_infinity(&st, la, 2.5), 2.5);
        assert_eq!(f_infinity(&st, la * (1.0 + 1e-12), 2.5), f64::INFINITY);
        // critical stress: σ²/(2E) = Σ at 45°
        let (e, sg) = (1.0, 0.5);
        let scr = critical_uniaxial_stress(e, sg).unwrap();
        assert_eq!(scr, 1.0);
        let st = uniaxial_state(e, scr / e, CRITICAL_ANGLE).unwrap();
        assert_eq!(f_infinity(&st, sg * (1.0 - 1e-12), 1.0), 1.0);
    }

    #[test]
    fn critical_stress_values() {
        assert!((critical_uniaxial_stress(200e9, 1e6).unwrap() - 6.324555320336759e8).abs() < 1.0);
        assert_eq!(critical_uniaxial_stress(1.0, 0.0).unwrap(), 0.0);
        assert!(critical_uniaxial_stress(-1.0, 1.0).is_err());
    }

    #[test]
    fn antiplane_reduction() {
        let g = [0.6, -0.8];
        let mu = 2.0;
        for k in 0..16 {
            let th = k as f64 * 0.3;
            let n = [th.cos(), th.sin()];
            let st = TensorState::antiplane(g, mu, n).unwrap();
            let gn = g[0] * n[0] + g[1] * n[1];
            let gp = -g[0] * n[1] + g[1] * n[0];
            assert!((la_sup(&st) - mu * gn.abs() * gp.abs()).abs() < 1e-12);
            assert!(la_sup(&st) <= antiplane_la_max(g, mu) + 1e-12);
        }
        assert_eq!(antiplane_la_threshold(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(antiplane_la_threshold(1.0, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn argmax_attains_sup() {
        let st = TensorState::new3(
            [[1.0, 0.3, -0.2], [0.3, 2.0, 0.5], [-0.2, 0.5, -1.0]],
            [[0.1, 0.2, 0.3], [-0.4, 0.5, 0.0], [0.7, 0.0, -0.1]],
            [0.0, 0.6, 0.8],
        )
        .unwrap();
        let nu = la_argmax(&st);
        assert!((st.power_density(nu) - la_sup(&st)).abs() < 1e-12);
        assert!(dot3(nu, st.n).abs() < 1e-12);
    }

    #[test]
    fn da_on_uniform_admissible_field() {
        let mu = 1.5;
        // gradient at 45° to the horizontal segment's normal (0, 1)
        let g = [0.8, 0.8];
        let (sigma, f) = antiplane_tensors(g, mu);
        let field = UniformTensors { sigma, f };
        let la = antiplane_la_max(g, mu);
        let cand = CrackCandidate::new(vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(cand.normals()[0], [0.0, 1.0]);
        let r = da_evaluate(&cand, &field, la, 1.0).unwrap();
        assert!(r.admissible, "{r:?}");
        assert!((r.lhs - la).abs() < 1e-12);
        assert!(!da_evaluate(&cand, &field, la * 1.01, 1.0).unwrap().admissible);
        // reversed jumps lower the left-hand side
        let rev = CrackCandidate::new(cand.vertices().to_vec(), vec![-1.0, -1.0]).unwrap();
        assert!(!da_evaluate(&rev, &field, la, 1.0).unwrap().admissible);
    }

    #[test]
    fn da_degenerate_and_errors() {
        let z = UniformTensors { sigma: [[0.0; 3]; 3], f: [[0.0; 3]; 3] };
        let cand = CrackCandidate::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![0.0]).unwrap();
        let r = da_evaluate(&cand, &z, 1.0, 0.0).unwrap();
        assert!(r.admissible && r.degenerate);
        assert!(da_evaluate(&cand, &z, 1.0, -1.0).is_err());
        assert_eq!(CrackCandidate::new(vec![[0.0, 0.0]], vec![]), Err(Error::EmptyCandidate));
        assert!(CrackCandidate::new(vec![[0.0, 0.0], [0.0, 0.0]], vec![1.0]).is_err());
    }
}
