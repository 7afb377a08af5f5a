//! Generalized J-integral for anti-plane fields, in volume (domain) form and
//! as a limit of circular contour integrals around a crack tip.
//!
//! Conventions: `w = μ|∇u|²`, `σ = 2μ∇u`. The volume integrand is
//! `−w div η + σ_k u_{,m} ∂_k η_m`; it equals `div(−wη + σ(∇u·η))` for
//! equilibrium fields, so for a plateau velocity (constant near the tip,
//! zero far away) the volume value equals the contour integral
//!
//! ```text
//! ∮ [ w (η·ν) − 2μ (∇u·ν)(∇u·η) ] ds
//! ```
//!
//! with `ν` the normal pointing away from the tip. With this orientation a
//! positive value is an energy release rate: for `u = A√r sin(θ/2)` and `η`
//! along the crack prolongation it equals `πμA²/2`.

use std::f64::consts::PI;

use crate::elastic::Material;
use crate::error::{Error, Result};
use crate::grid::{Grid2, ScalarField};

/// Nodal velocity field vanishing on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid2,
    values: Vec<[f64; 2]>,
}

impl VelocityField {
    pub fn new(grid: Grid2, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch);
        }
        for (n, v) in values.iter().enumerate() {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::NonFinite(n));
            }
            if grid.is_boundary(n) && (v[0] != 0.0 || v[1] != 0.0) {
                return Err(Error::NonZeroTrace(n));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self { grid, values: vec![[0.0; 2]; grid.n_nodes()] }
    }

    /// `dir · φ(|x − center|)` with `φ = 1` inside `r_in`, a cosine taper to
    /// zero at `r_out`, and zero beyond.
    pub fn plateau(grid: Grid2, center: [f64; 2], dir: [f64; 2], r_in: f64, r_out: f64) -> Result<Self> {
        if !(r_in > 0.0 && r_out > r_in) {
            return Err(Error::InvalidParameter(format!("plateau radii {r_in}, {r_out}")));
        }
        let values = (0..grid.n_nodes())
            .map(|n| {
                let [x, y] = grid.node_xy(n);
                let r = (x - center[0]).hypot(y - center[1]);
                let phi = if r <= r_in {
                    1.0
                } else if r >= r_out {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (r - r_in) / (r_out - r_in)).cos())
                };
                [dir[0] * phi, dir[1] * phi]
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| [a * v[0], a * v[1]]).collect() }
    }

    /// Centre gradient `∂_k η_m` of a cell, as `[[∂xηx, ∂yηx], [∂xηy, ∂yηy]]`.
    fn cell_jacobian(&self, c: usize) -> [[f64; 2]; 2] {
        let h = self.grid.h;
        let [a, b, d, e] = self.grid.cell_corners(c).map(|n| self.values[n]);
        let mut j = [[0.0; 2]; 2];
        for m in 0..2 {
            j[m][0] = ((b[m] - a[m]) + (e[m] - d[m])) / (2.0 * h);
            j[m][1] = ((d[m] - a[m]) + (e[m] - b[m])) / (2.0 * h);
        }
        j
    }
}

/// Cells crossed by a straight, axis-aligned crack running from a tip to
/// the boundary. Nodal values of a field with a jump across the crack are
/// meaningless as a gradient stencil inside those cells, so their gradient
/// is taken from the uncut neighbour on either side.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackCut {
    pub grid: Grid2,
    pub tip: [f64; 2],
    /// Unit normal of the crack line; the "plus" side is where it points.
    pub normal: [f64; 2],
    cut: Vec<bool>,
    plus: Vec<Option<usize>>,
    minus: Vec<Option<usize>>,
}

impl CrackCut {
    /// `angle` is the direction of the crack ray from the tip and must be a
    /// multiple of π/2. The crack line may not coincide with a grid line.
    pub fn from_ray(grid: Grid2, tip: [f64; 2], angle: f64) -> Result<Self> {
        if !grid.contains(tip) {
            return Err(Error::TipOutsideDomain(tip[0], tip[1]));
        }
        let q = angle / (PI / 2.0);
        if (q - q.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("crack angle {angle} is not axis-aligned")));
        }
        let quadrant = (q.round() as i64).rem_euclid(4);
        let h = grid.h;
        let horizontal = quadrant % 2 == 0;
        let across = if horizontal { tip[1] } else { tip[0] };
        let frac = across / h - (across / h).floor();
        if frac < 1e-9 || frac > 1.0 - 1e-9 {
            return Err(Error::InvalidParameter("crack line coincides with a grid line".into()));
        }
        let normal = if horizontal { [0.0, 1.0] } else { [1.0, 0.0] };
        let n_cells = grid.n_cells();
        let mut cut = vec![false; n_cells];
        let mut plus = vec![None; n_cells];
        let mut minus = vec![None; n_cells];
        let (cx, cy) = (grid.nx - 1, grid.ny - 1);
        for c in 0..n_cells {
            let (i, j) = grid.cell_ij(c);
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            let (x1, y1) = (x0 + h, y0 + h);
            let hit = match quadrant {
                0 => y0 < tip[1] && tip[1] < y1 && x1 > tip[0],
                1 => x0 < tip[0] && tip[0] < x1 && y1 > tip[1],
                2 => y0 < tip[1] && tip[1] < y1 && x0 < tip[0],
                _ => x0 < tip[0] && tip[0] < x1 && y0 < tip[1],
            };
            if !hit {
                continue;
            }
            cut[c] = true;
            if horizontal {
                plus[c] = (j + 1 < cy).then(|| grid.cell(i, j + 1));
                minus[c] = (j > 0).then(|| grid.cell(i, j - 1));
            } else {
                plus[c] = (i + 1 < cx).then(|| grid.cell(i + 1, j));
                minus[c] = (i > 0).then(|| grid.cell(i - 1, j));
            }
        }
        Ok(Self { grid, tip, normal, cut, plus, minus })
    }

    pub fn is_cut(&self, c: usize) -> bool {
        self.cut[c]
    }

    pub fn n_cut(&self) -> usize {
        self.cut.iter().filter(|c| **c).count()
    }

    /// Gradients on the two sides of a cut cell.
    fn side_gradients(&self, u: &ScalarField, c: usize) -> [[f64; 2]; 2] {
        let own = u.cell_gradient(c);
        let pick = |nb: Option<usize>| nb.map_or(own, |d| u.cell_gradient(d));
        [pick(self.plus[c]), pick(self.minus[c])]
    }

    /// Gradient at a point, looking across the crack as needed.
    fn gradient_at(&self, u: &ScalarField, p: [f64; 2]) -> Option<[f64; 2]> {
        let (c, sx, sy) = self.grid.locate(p)?;
        if !self.cut[c] {
            return Some(u.cell_gradient_at(c, sx, sy));
        }
        let side = (p[0] - self.tip[0]) * self.normal[0] + (p[1] - self.tip[1]) * self.normal[1];
        let [gp, gm] = self.side_gradients(u, c);
        Some(if side >= 0.0 { gp } else { gm })
    }
}

fn volume_density(g: [f64; 2], jac: [[f64; 2]; 2], mu: f64) -> f64 {
    let w = mu * (g[0] * g[0] + g[1] * g[1]);
    let div = jac[0][0] + jac[1][1];
    // σ_k u_{,m} ∂_k η_m with σ = 2μ∇u
    let mut s = 0.0;
    for k in 0..2 {
        for m in 0..2 {
            s += 2.0 * mu * g[k] * g[m] * jac[m][k];
        }
    }
    -w * div + s
}

/// Domain form of the generalized J-integral.
pub fn k2_volume(u: &ScalarField, eta: &VelocityField, mat: &Material, cut: Option<&CrackCut>) -> Result<f64> {
    if u.grid != eta.grid || cut.is_some_and(|c| c.grid != u.grid) {
        return Err(Error::GridMismatch);
    }
    let grid = u.grid;
    let h2 = grid.h * grid.h;
    let mut total = 0.0;
    for c in 0..grid.n_cells() {
        let jac = eta.cell_jacobian(c);
        if jac.iter().flatten().all(|x| *x == 0.0) {
            continue;
        }
        let val = match cut {
            Some(cc) if cc.is_cut(c) => {
                let [gp, gm] = cc.side_gradients(u, c);
                0.5 * (volume_density(gp, jac, mat.mu) + volume_density(gm, jac, mat.mu))
            }
            _ => volume_density(u.cell_gradient(c), jac, mat.mu),
        };
        total += val * h2;
    }
    Ok(total)
}

/// Circles around a tip, largest first.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSpec {
    pub tip: [f64; 2],
    pub radii: Vec<f64>,
    pub samples: usize,
}

impl ContourSpec {
    pub fn new(tip: [f64; 2], radii: Vec<f64>, samples: usize) -> Result<Self> {
        if radii.len() < 2 {
            return Err(Error::InvalidParameter("need at least two radii".into()));
        }
        if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("radii must be positive and decreasing".into()));
        }
        if samples < 8 {
            return Err(Error::InvalidParameter(format!("{samples} samples per circle")));
        }
        Ok(Self { tip, radii, samples })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourResult {
    /// `(r, value)` per circle, in the order of the requested radii.
    pub table: Vec<(f64, f64)>,
    /// Intercept at `r = 0` of the least-squares line through the table.
    pub extrapolated: f64,
}

impl ContourResult {
    /// `(max − min) / |mean|` over the per-radius values.
    pub fn relative_spread(&self) -> f64 {
        let vals: Vec<f64> = self.table.iter().map(|(_, v)| *v).collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (max - min) / mean.abs().max(1e-300)
    }
}

/// Contour form on each circle of `spec`, plus the linear extrapolation to
/// vanishing radius.
pub fn k2_contour(
    u: &ScalarField,
    eta_tip: [f64; 2],
    spec: &ContourSpec,
    mat: &Material,
    cut: Option<&CrackCut>,
) -> Result<ContourResult> {
    let grid = u.grid;
    if cut.is_some_and(|c| c.grid != grid) {
        return Err(Error::GridMismatch);
    }
    let [tx, ty] = spec.tip;
    if !grid.contains(spec.tip) {
        return Err(Error::TipOutsideDomain(tx, ty));
    }
    let mut table = Vec::with_capacity(spec.radii.len());
    for &r in &spec.radii {
        // strictly inside, so the circle never touches a boundary node
        if tx - r <= 0.0 || ty - r <= 0.0 || tx + r >= grid.lx || ty + r >= grid.ly {
            return Err(Error::ContourOutOfDomain(r));
        }
        let n = spec.samples;
        let dth = 2.0 * PI / n as f64;
        let mut sum = 0.0;
        for s in 0..n {
            let th = (s as f64 + 0.5) * dth;
            let nu = [th.cos(), th.sin()];
            let p = [tx + r * nu[0], ty + r * nu[1]];
            let g = match cut {
                Some(cc) => cc.gradient_at(u, p),
                None => u.sample_gradient(p),
            }
            .ok_or(Error::ContourOutOfDomain(r))?;
            let w = mat.mu * (g[0] * g[0] + g[1] * g[1]);
            let gnu = g[0] * nu[0] + g[1] * nu[1];
            let geta = g[0] * eta_tip[0] + g[1] * eta_tip[1];
            let enu = eta_tip[0] * nu[0] + eta_tip[1] * nu[1];
            sum += (w * enu - 2.0 * mat.mu * gnu * geta) * r * dth;
        }
        table.push((r, sum));
    }
    let extrapolated = linear_intercept(&table);
    Ok(ContourResult { table, extrapolated })
}

fn linear_intercept(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return my;
    }
    my - sxy / sxx * mx
}

/// Propagation is admissible when the release rate covers the surface cost:
/// `k2 ≥ G · area_rate − slack`.
pub fn generalized_griffith_check(k2_value: f64, area_rate: f64, griffith: f64, slack: f64) -> bool {
    k2_value >= griffith * area_rate - slack
}

/// `A √r sin(θ/2)` with `θ` measured from the crack prolongation; the crack
/// runs from `tip` in direction `crack_angle`.
pub fn mode_iii_tip_field(amplitude: f64, tip: [f64; 2], crack_angle: f64, grid: Grid2) -> Result<ScalarField> {
    if !grid.contains(tip) {
        return Err(Error::TipOutsideDomain(tip[0], tip[1]));
    }
    let ahead = crack_angle + PI;
    ScalarField::from_fn(grid, |x, y| {
        let (dx, dy) = (x - tip[0], y - tip[1]);
        let r = dx.hypot(dy);
        // rotate into crack-aligned coordinates: θ ∈ (−π, π]
        let (c, s) = (ahead.cos(), ahead.sin());
        let th = (-s * dx + c * dy).atan2(c * dx + s * dy);
        amplitude * r.sqrt() * (th / 2.0).sin()
    })
}

/// Exact release rate `πμA²/2` of the mode-III tip field.
pub fn mode_iii_release_rate(amplitude: f64, mu: f64) -> f64 {
    PI * mu * amplitude * amplitude / 2.0
}
