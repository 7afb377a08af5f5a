//! Structured square-cell grids, boundary labelling and nodal fields.
//!
//! Nodes are indexed row-major: node `(i, j)` sits at `(i·h, j·h)` and has
//! flat index `j·nx + i`. Cell `(i, j)` spans nodes `(i..=i+1, j..=j+1)`.

use crate::error::{Error, Result};

/// Uniform rectangular grid with square cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub h: f64,
}

/// Build a grid over `[0, lx] × [0, ly]` with `nx × ny` nodes.
pub fn build_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid2> {
    Grid2::new(nx, ny, lx, ly)
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::TooSmall { nx, ny });
        }
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid extents must be positive, got {lx} x {ly}"
            )));
        }
        let hx = lx / (nx - 1) as f64;
        let hy = ly / (ny - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx {
            return Err(Error::NonSquareCells { hx, hy });
        }
        Ok(Self { nx, ny, lx, ly, h: hx })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n % self.nx, n / self.nx)
    }

    #[inline]
    pub fn node_xy(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(n);
        [i as f64 * self.h, j as f64 * self.h]
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + 1 < self.nx && j + 1 < self.ny);
        j * (self.nx - 1) + i
    }

    #[inline]
    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % (self.nx - 1), c / (self.nx - 1))
    }

    /// Corner nodes of a cell in the order `[00, 10, 01, 11]`.
    #[inline]
    pub fn cell_corners(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        let n00 = self.node(i, j);
        [n00, n00 + 1, n00 + self.nx, n00 + self.nx + 1]
    }

    pub fn cell_center(&self, c: usize) -> [f64; 2] {
        let (i, j) = self.cell_ij(c);
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    pub fn is_boundary(&self, n: usize) -> bool {
        let (i, j) = self.node_ij(n);
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn n_boundary_nodes(&self) -> usize {
        2 * (self.nx + self.ny) - 4
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= self.lx && p[1] <= self.ly
    }

    /// Cell containing point `p` plus local coordinates in `[0, 1]²`.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, f64, f64)> {
        if !self.contains(p) {
            return None;
        }
        let fx = p[0] / self.h;
        let fy = p[1] / self.h;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        Some((self.cell(i, j), fx - i as f64, fy - j as f64))
    }

    /// Grid edges as node pairs: all horizontal edges first, then vertical.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut out = Vec::with_capacity(self.n_edges());
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                let n = self.node(i, j);
                out.push([n, n + 1]);
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                let n = self.node(i, j);
                out.push([n, n + self.nx]);
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        (self.nx - 1) * self.ny + self.nx * (self.ny - 1)
    }

    /// Cells sharing each edge (one for boundary edges, two otherwise),
    /// in the same order as [`Grid2::edges`].
    pub fn edge_cells(&self) -> Vec<[Option<usize>; 2]> {
        let mut out = Vec::with_capacity(self.n_edges());
        for j in 0..self.ny {
            for i in 0..self.nx - 1 {
                let below = (j > 0).then(|| self.cell(i, j - 1));
                let above = (j + 1 < self.ny).then(|| self.cell(i, j));
                out.push([below, above]);
            }
        }
        for j in 0..self.ny - 1 {
            for i in 0..self.nx {
                let left = (i > 0).then(|| self.cell(i - 1, j));
                let right = (i + 1 < self.nx).then(|| self.cell(i, j));
                out.push([left, right]);
            }
        }
        out
    }

    /// Lumped nodal area weights (sum equals `lx·ly`).
    pub fn nodal_areas(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        let quarter = 0.25 * self.h * self.h;
        for c in 0..self.n_cells() {
            for n in self.cell_corners(c) {
                m[n] += quarter;
            }
        }
        m
    }
}

/// Boundary label of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    GammaU1,
    GammaU2,
    GammaF,
}

impl Label {
    fn priority(self) -> u8 {
        match self {
            Label::GammaU1 => 2,
            Label::GammaU2 => 1,
            Label::GammaF => 0,
        }
    }

    pub fn is_dirichlet(self) -> bool {
        !matches!(self, Label::GammaF)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::GammaU1 => "u1",
            Label::GammaU2 => "u2",
            Label::GammaF => "f",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u1" | "gammau1" | "gamma_u1" => Some(Label::GammaU1),
            "u2" | "gammau2" | "gamma_u2" => Some(Label::GammaU2),
            "f" | "gammaf" | "gamma_f" | "free" => Some(Label::GammaF),
            _ => None,
        }
    }
}

/// Edge-to-label assignment for the four sides of the rectangle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundarySpec {
    pub bottom: Option<Label>,
    pub top: Option<Label>,
    pub left: Option<Label>,
    pub right: Option<Label>,
}

impl BoundarySpec {
    pub fn new(bottom: Label, top: Label, left: Label, right: Label) -> Self {
        Self {
            bottom: Some(bottom),
            top: Some(top),
            left: Some(left),
            right: Some(right),
        }
    }

    /// Bottom clamped, top loaded, sides traction free.
    pub fn strip() -> Self {
        Self::new(Label::GammaU1, Label::GammaU2, Label::GammaF, Label::GammaF)
    }
}

/// How the two Dirichlet sets face each other, when they do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparatorAxis {
    /// Dirichlet sets on bottom and top: horizontal cracks separate them.
    Horizontal,
    /// Dirichlet sets on left and right: vertical cracks separate them.
    Vertical,
}

/// Complete labelling of the boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    pub grid: Grid2,
    pub spec: BoundarySpec,
    labels: Vec<Option<Label>>,
}

/// Label every boundary node of `grid`. Corner nodes take the stronger of
/// their two edge labels (`GammaU1 > GammaU2 > GammaF`).
pub fn partition_boundary(grid: &Grid2, spec: &BoundarySpec) -> Result<BoundaryPartition> {
    let bottom = spec.bottom.ok_or(Error::UnlabeledEdge("bottom"))?;
    let top = spec.top.ok_or(Error::UnlabeledEdge("top"))?;
    let left = spec.left.ok_or(Error::UnlabeledEdge("left"))?;
    let right = spec.right.ok_or(Error::UnlabeledEdge("right"))?;

    let mut labels = vec![None; grid.n_nodes()];
    let mut assign = |n: usize, l: Label| {
        let slot: &mut Option<Label> = &mut labels[n];
        *slot = match *slot {
            Some(old) if old.priority() >= l.priority() => Some(old),
            _ => Some(l),
        };
    };
    for i in 0..grid.nx {
        assign(grid.node(i, 0), bottom);
        assign(grid.node(i, grid.ny - 1), top);
    }
    for j in 0..grid.ny {
        assign(grid.node(0, j), left);
        assign(grid.node(grid.nx - 1, j), right);
    }
    Ok(BoundaryPartition { grid: *grid, spec: *spec, labels })
}

impl BoundaryPartition {
    pub fn label(&self, n: usize) -> Option<Label> {
        self.labels[n]
    }

    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|x| **x == Some(l)).count()
    }

    pub fn n_labelled(&self) -> usize {
        self.labels.iter().filter(|x| x.is_some()).count()
    }

    pub fn nodes_with(&self, l: Label) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, x)| **x == Some(l))
            .map(|(n, _)| n)
    }

    pub fn is_dirichlet(&self, n: usize) -> bool {
        self.labels[n].is_some_and(Label::is_dirichlet)
    }

    pub fn has_dirichlet(&self) -> bool {
        self.labels.iter().any(|l| l.is_some_and(Label::is_dirichlet))
    }

    /// Orientation of the straight cuts separating `GammaU1` from `GammaU2`,
    /// if the labelling puts them on opposite sides with free flanks.
    pub fn separator_axis(&self) -> Option<SeparatorAxis> {
        use Label::*;
        let s = &self.spec;
        let opposite = |a: Option<Label>, b: Option<Label>| {
            matches!((a, b), (Some(GammaU1), Some(GammaU2)) | (Some(GammaU2), Some(GammaU1)))
        };
        let free = |a: Option<Label>| a == Some(GammaF);
        if opposite(s.bottom, s.top) && free(s.left) && free(s.right) {
            Some(SeparatorAxis::Horizontal)
        } else if opposite(s.left, s.right) && free(s.bottom) && free(s.top) {
            Some(SeparatorAxis::Vertical)
        } else {
            None
        }
    }
}

/// Nodal scalar field (the anti-plane displacement).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch);
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(n));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2) -> Self {
        Self { grid, values: vec![0.0; grid.n_nodes()] }
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_nodes())
            .map(|n| {
                let [x, y] = grid.node_xy(n);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    /// Crate-internal constructor for solver output that is finite by construction.
    pub(crate) fn from_raw(grid: Grid2, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes());
        Self { grid, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// Bilinear interpolation.
    pub fn sample(&self, p: [f64; 2]) -> Option<f64> {
        let (c, sx, sy) = self.grid.locate(p)?;
        let [a, b, d, e] = self.grid.cell_corners(c).map(|n| self.values[n]);
        Some(a * (1.0 - sx) * (1.0 - sy) + b * sx * (1.0 - sy) + d * (1.0 - sx) * sy + e * sx * sy)
    }

    /// Gradient of the bilinear interpolant at `p`.
    pub fn sample_gradient(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let (c, sx, sy) = self.grid.locate(p)?;
        Some(self.cell_gradient_at(c, sx, sy))
    }

    pub(crate) fn cell_gradient_at(&self, c: usize, sx: f64, sy: f64) -> [f64; 2] {
        let [a, b, d, e] = self.grid.cell_corners(c).map(|n| self.values[n]);
        let h = self.grid.h;
        [
            ((b - a) * (1.0 - sy) + (e - d) * sy) / h,
            ((d - a) * (1.0 - sx) + (e - b) * sx) / h,
        ]
    }

    /// Gradient of the bilinear interpolant at the centre of cell `c`.
    #[inline]
    pub fn cell_gradient(&self, c: usize) -> [f64; 2] {
        self.cell_gradient_at(c, 0.5, 0.5)
    }
}

/// Nodal phase field: `1` intact, `0` fully cracked.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageField {
    pub grid: Grid2,
    values: Vec<f64>,
}

/// What to do with damage values outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangePolicy {
    #[default]
    Reject,
    Clamp,
}

impl DamageField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        Self::with_policy(grid, values, RangePolicy::Reject)
    }

    pub fn with_policy(grid: Grid2, mut values: Vec<f64>, policy: RangePolicy) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch);
        }
        for (n, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite(n));
            }
            if !(0.0..=1.0).contains(v) {
                match policy {
                    RangePolicy::Reject => return Err(Error::DamageOutOfRange { node: n, value: *v }),
                    RangePolicy::Clamp => *v = v.clamp(0.0, 1.0),
                }
            }
        }
        Ok(Self { grid, values })
    }

    pub fn intact(grid: Grid2) -> Self {
        Self { grid, values: vec![1.0; grid.n_nodes()] }
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_nodes())
            .map(|n| {
                let [x, y] = grid.node_xy(n);
                f(x, y)
            })
            .collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: Grid2, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { grid, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cell average of the four corner values.
    #[inline]
    pub fn cell_mean(&self, c: usize) -> f64 {
        0.25 * self.grid.cell_corners(c).iter().map(|&n| self.values[n]).sum::<f64>()
    }

    /// Pointwise minimum with another field on the same grid.
    pub fn min_with(&self, other: &DamageField) -> Result<DamageField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| a.min(*b)).collect(),
        ))
    }

    /// `true` if `self ≤ other` at every node.
    pub fn is_below(&self, other: &DamageField) -> bool {
        self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        assert_eq!(g.n_nodes(), 25);
        assert_eq!(g.h, 0.25);
        assert_eq!(build_grid(3, 3, 2.0, 2.0).unwrap().h, 1.0);
        assert_eq!(g.node_xy(g.node(2, 3)), [0.5, 0.75]);
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(matches!(build_grid(5, 3, 1.0, 1.0), Err(Error::NonSquareCells { .. })));
        assert!(matches!(build_grid(2, 5, 1.0, 4.0), Err(Error::TooSmall { .. })));
        assert!(build_grid(5, 5, -1.0, -1.0).is_err());
    }

    #[test]
    fn strip_partition_counts() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        let p = partition_boundary(&g, &BoundarySpec::strip()).unwrap();
        assert_eq!(p.count(Label::GammaU1), 5);
        assert_eq!(p.count(Label::GammaU2), 5);
        assert_eq!(p.count(Label::GammaF), 6);
        assert_eq!(p.n_labelled(), g.n_boundary_nodes());
        assert_eq!(p.separator_axis(), Some(SeparatorAxis::Horizontal));
    }

    #[test]
    fn all_free_partition() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        let f = Label::GammaF;
        let p = partition_boundary(&g, &BoundarySpec::new(f, f, f, f)).unwrap();
        assert_eq!(p.count(Label::GammaF), 16);
        assert!(!p.has_dirichlet());
        assert_eq!(p.separator_axis(), None);
    }

    #[test]
    fn missing_edge_is_reported() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        let mut s = BoundarySpec::strip();
        s.right = None;
        assert_eq!(partition_boundary(&g, &s), Err(Error::UnlabeledEdge("right")));
    }

    #[test]
    fn corner_tie_break_prefers_u1() {
        let g = build_grid(4, 4, 1.0, 1.0).unwrap();
        use Label::*;
        let p = partition_boundary(&g, &BoundarySpec::new(GammaU2, GammaF, GammaU1, GammaF)).unwrap();
        assert_eq!(p.label(g.node(0, 0)), Some(GammaU1));
        assert_eq!(p.label(g.node(3, 0)), Some(GammaU2));
        assert_eq!(p.label(g.node(0, 3)), Some(GammaU1));
        assert_eq!(p.label(g.node(3, 3)), Some(GammaF));
        assert_eq!(p.label(g.node(1, 1)), None);
    }

    #[test]
    fn fields_reject_non_finite() {
        let g = build_grid(3, 3, 1.0, 1.0).unwrap();
        let mut vals = vec![0.0; 9];
        vals[4] = f64::NAN;
        assert_eq!(ScalarField::new(g, vals.clone()), Err(Error::NonFinite(4)));
        vals[4] = f64::INFINITY;
        assert_eq!(DamageField::new(g, vals), Err(Error::NonFinite(4)));
    }

    #[test]
    fn damage_range_policy() {
        let g = build_grid(3, 3, 1.0, 1.0).unwrap();
        let mut vals = vec![1.0; 9];
        vals[0] = 1.5;
        vals[1] = -0.2;
        assert!(matches!(DamageField::new(g, vals.clone()), Err(Error::DamageOutOfRange { node: 0, .. })));
        let d = DamageField::with_policy(g, vals, RangePolicy::Clamp).unwrap();
        assert_eq!(d.values()[0], 1.0);
        assert_eq!(d.values()[1], 0.0);
    }

    #[test]
    fn bilinear_sampling_is_exact_for_bilinear_fields() {
        let g = build_grid(5, 5, 1.0, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |x, y| 1.0 + 2.0 * x - y + 3.0 * x * y).unwrap();
        let p = [0.33, 0.71];
        let exact = 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
        assert!((u.sample(p).unwrap() - exact).abs() < 1e-12);
        let gr = u.sample_gradient(p).unwrap();
        assert!((gr[0] - (2.0 + 3.0 * p[1])).abs() < 1e-12);
        assert!((gr[1] - (-1.0 + 3.0 * p[0])).abs() < 1e-12);
        assert!(u.sample([1.2, 0.5]).is_none());
    }

    #[test]
    fn edge_cells_match_edges() {
        let g = build_grid(4, 3, 1.5, 1.0).unwrap();
        let edges = g.edges();
        let cells = g.edge_cells();
        assert_eq!(edges.len(), g.n_edges());
        for (e, cs) in edges.iter().zip(&cells) {
            for c in cs.iter().flatten() {
                let corners = g.cell_corners(*c);
                assert!(corners.contains(&e[0]) && corners.contains(&e[1]));
            }
            let boundary_edge = g.is_boundary(e[0]) && g.is_boundary(e[1]);
            assert_eq!(cs.iter().flatten().count(), if boundary_edge { 1 } else { 2 });
        }
        let total: f64 = g.nodal_areas().iter().sum();
        assert!((total - 1.5).abs() < 1e-12);
    }
}
