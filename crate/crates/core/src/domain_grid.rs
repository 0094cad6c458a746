use serde::{Deserialize, Serialize};

use crate::error::{AlapError, Result};

/// Named box face. `bottom`/`top` always refer to the last axis (the `x_n` direction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceName {
    Left,
    Right,
    Front,
    Back,
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
}

impl FaceName {
    pub fn resolve(self, n: usize) -> Result<Face> {
        let f = match self {
            FaceName::Left => Face { axis: 0, upper: false },
            FaceName::Right => Face { axis: 0, upper: true },
            FaceName::Front if n == 3 => Face { axis: 1, upper: false },
            FaceName::Back if n == 3 => Face { axis: 1, upper: true },
            FaceName::Bottom => Face { axis: n - 1, upper: false },
            FaceName::Top => Face { axis: n - 1, upper: true },
            _ => return Err(AlapError::InvalidParameter(format!("face {self:?} does not exist for n = {n}"))),
        };
        Ok(f)
    }
}

/// A sub-rectangle of a face on which `u = 0` is imposed. Missing bounds mean the whole face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TPatch {
    pub face: FaceName,
    #[serde(default)]
    pub lower: Option<Vec<f64>>,
    #[serde(default)]
    pub upper: Option<Vec<f64>>,
}

/// Dirichlet data on `∂Ω ∖ T`; values are clamped into `[0, M]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BoundaryData {
    /// `g ≡ value`
    Constant { value: f64 },
    /// `g = slope·(level − x_n)⁺`
    Dam { level: f64, slope: f64 },
    /// `g = offset + coeffs·x`
    Affine { coeffs: Vec<f64>, offset: f64 },
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BoundaryData::Constant { value } => *value,
            BoundaryData::Dam { level, slope } => slope * (level - x[x.len() - 1]).max(0.0),
            BoundaryData::Affine { coeffs, offset } => offset + coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
    t_patches: Vec<(Face, Vec<f64>, Vec<f64>)>,
    g: BoundaryData,
    m_ceiling: f64,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, t_patches: &[TPatch], g: BoundaryData, m_ceiling: f64) -> Result<Self> {
        let n = lower.len();
        if !(n == 2 || n == 3) || upper.len() != n {
            return Err(AlapError::InvalidParameter(format!("box corners must have dimension 2 or 3, got {n}")));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(AlapError::InvalidParameter("box needs lower < upper componentwise".into()));
        }
        if !(m_ceiling > 0.0) {
            return Err(AlapError::InvalidParameter(format!("ceiling M must be positive, got {m_ceiling}")));
        }
        if let BoundaryData::Affine { coeffs, .. } = &g {
            if coeffs.len() != n {
                return Err(AlapError::InvalidParameter("affine boundary data has wrong dimension".into()));
            }
        }
        let mut patches = Vec::with_capacity(t_patches.len());
        for p in t_patches {
            let face = p.face.resolve(n)?;
            let lo = p.lower.clone().unwrap_or_else(|| lower.clone());
            let hi = p.upper.clone().unwrap_or_else(|| upper.clone());
            if lo.len() != n || hi.len() != n {
                return Err(AlapError::InvalidParameter("T patch bounds have wrong dimension".into()));
            }
            patches.push((face, lo, hi));
        }
        Ok(Domain { lower, upper, t_patches: patches, g, m_ceiling })
    }

    /// Unit square or cube with the given T faces.
    pub fn unit_box(n: usize, t_faces: &[FaceName], g: BoundaryData, m_ceiling: f64) -> Result<Self> {
        let patches: Vec<TPatch> = t_faces.iter().map(|&face| TPatch { face, lower: None, upper: None }).collect();
        Domain::new(vec![0.0; n], vec![1.0; n], &patches, g, m_ceiling)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn m_ceiling(&self) -> f64 {
        self.m_ceiling
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.g
    }

    /// Diameter δ(Ω).
    pub fn delta(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l) * (u - l)).sum::<f64>().sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, v)| *v > self.lower[k] && *v < self.upper[k])
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(k, v)| *v >= self.lower[k] && *v <= self.upper[k])
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|q| (0..n).map(|k| if q >> k & 1 == 1 { self.upper[k] } else { self.lower[k] }).collect())
            .collect()
    }

    /// Whether the boundary point `x` lies in T (tolerance relative to the box size).
    pub fn in_t(&self, x: &[f64]) -> bool {
        let tol = 1e-12 * self.delta();
        self.t_patches.iter().any(|(face, lo, hi)| {
            let wall = if face.upper { self.upper[face.axis] } else { self.lower[face.axis] };
            (x[face.axis] - wall).abs() <= tol
                && (0..self.dim()).all(|k| k == face.axis || (x[k] >= lo[k] - tol && x[k] <= hi[k] + tol))
        })
    }

    /// Boundary value: 0 on T, clamped data elsewhere.
    pub fn g(&self, x: &[f64]) -> f64 {
        if self.in_t(x) {
            0.0
        } else {
            self.g.eval(x).clamp(0.0, self.m_ceiling)
        }
    }

    pub fn t_faces(&self) -> Vec<Face> {
        self.t_patches.iter().map(|(f, _, _)| *f).collect()
    }
}

/// Uniform node grid covering a box exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    counts: Vec<usize>,
    spacing: Vec<f64>,
    lower: Vec<f64>,
    strides: Vec<usize>,
    cell_strides: Vec<usize>,
}

pub fn build_grid(domain: &Domain, counts: &[usize]) -> Result<Grid> {
    let n = domain.dim();
    if counts.len() != n {
        return Err(AlapError::InvalidParameter(format!("need {n} node counts, got {}", counts.len())));
    }
    if counts.iter().any(|&c| c < 3) {
        return Err(AlapError::InvalidParameter("grid needs at least 3 nodes per axis".into()));
    }
    let spacing = (0..n).map(|k| (domain.upper()[k] - domain.lower()[k]) / (counts[k] - 1) as f64).collect();
    let mut strides = vec![1; n];
    let mut cell_strides = vec![1; n];
    for k in 1..n {
        strides[k] = strides[k - 1] * counts[k - 1];
        cell_strides[k] = cell_strides[k - 1] * (counts[k - 1] - 1);
    }
    Ok(Grid { n, counts: counts.to_vec(), spacing, lower: domain.lower().to_vec(), strides, cell_strides })
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn num_nodes(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.counts.iter().map(|c| c - 1).product()
    }

    pub fn corners_per_cell(&self) -> usize {
        1 << self.n
    }

    pub fn node_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_multi(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for k in 0..self.n {
            m[k] = idx % self.counts[k];
            idx /= self.counts[k];
        }
        m
    }

    pub fn node_coord(&self, idx: usize) -> [f64; 3] {
        let m = self.node_multi(idx);
        let mut x = [0.0; 3];
        for k in 0..self.n {
            x[k] = self.lower[k] + m[k] as f64 * self.spacing[k];
        }
        x
    }

    pub fn is_boundary_node(&self, idx: usize) -> bool {
        let m = self.node_multi(idx);
        (0..self.n).any(|k| m[k] == 0 || m[k] == self.counts[k] - 1)
    }

    pub fn cell_multi(&self, mut c: usize) -> [usize; 3] {
        let mut m = [0; 3];
        for k in 0..self.n {
            m[k] = c % (self.counts[k] - 1);
            c /= self.counts[k] - 1;
        }
        m
    }

    pub fn cell_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.cell_strides).map(|(i, s)| i * s).sum()
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let m = self.cell_multi(c);
        let mut x = [0.0; 3];
        for k in 0..self.n {
            x[k] = self.lower[k] + (m[k] as f64 + 0.5) * self.spacing[k];
        }
        x
    }

    /// Node indices of a cell's corners; corner `q` has bit `k` set when it sits on the upper side of axis `k`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 8] {
        let m = self.cell_multi(c);
        let base = self.node_index(&m[..self.n]);
        let mut out = [0; 8];
        for (q, o) in out.iter_mut().enumerate().take(1 << self.n) {
            *o = base + (0..self.n).filter(|k| q >> k & 1 == 1).map(|k| self.strides[k]).sum::<usize>();
        }
        out
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Cell containing `x` (clamped to the box).
    pub fn locate_cell(&self, x: &[f64]) -> ([usize; 3], [f64; 3]) {
        let mut m = [0; 3];
        let mut frac = [0.0; 3];
        for k in 0..self.n {
            let s = (x[k] - self.lower[k]) / self.spacing[k];
            let i = (s.floor().max(0.0) as usize).min(self.counts[k] - 2);
            m[k] = i;
            frac[k] = (s - i as f64).clamp(0.0, 1.0);
        }
        (m, frac)
    }

    /// Multilinear interpolation of a nodal field.
    pub fn interpolate(&self, u: &[f64], x: &[f64]) -> f64 {
        let (m, frac) = self.locate_cell(x);
        let c = self.cell_index(&m[..self.n]);
        let nodes = self.cell_nodes(c);
        let mut v = 0.0;
        for q in 0..self.corners_per_cell() {
            let mut w = 1.0;
            for k in 0..self.n {
                w *= if q >> k & 1 == 1 { frac[k] } else { 1.0 - frac[k] };
            }
            v += w * u[nodes[q]];
        }
        v
    }

    /// Value of a cell field at the cell nearest to `x`.
    pub fn nearest_cell(&self, x: &[f64]) -> usize {
        let (m, _) = self.locate_cell(x);
        self.cell_index(&m[..self.n])
    }

    /// Default positivity threshold `10·h²·M/δ²`.
    pub fn default_eps_u(&self, domain: &Domain) -> f64 {
        let h = self.max_spacing();
        10.0 * h * h * domain.m_ceiling() / (domain.delta() * domain.delta())
    }
}

/// Per-cell corner gradients: for corner `q`, component `k` is the difference quotient along
/// the cell edge in direction `k` through that corner. Exact for affine `u`, and exact at edge
/// midpoints for quadratics.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGradients {
    n: usize,
    corners: usize,
    data: Vec<f64>,
}

impl CellGradients {
    pub fn get(&self, cell: usize, corner: usize) -> &[f64] {
        let base = (cell * self.corners + corner) * self.n;
        &self.data[base..base + self.n]
    }

    pub fn num_cells(&self) -> usize {
        self.data.len() / (self.corners * self.n)
    }
}

pub fn gradient_at_faces(grid: &Grid, u: &[f64]) -> CellGradients {
    let n = grid.dim();
    let nc = grid.corners_per_cell();
    let mut data = Vec::with_capacity(grid.num_cells() * nc * n);
    for c in 0..grid.num_cells() {
        let nodes = grid.cell_nodes(c);
        for q in 0..nc {
            for k in 0..n {
                let hi = nodes[q | 1 << k];
                let lo = nodes[q & !(1 << k)];
                data.push((u[hi] - u[lo]) / grid.spacing()[k]);
            }
        }
    }
    CellGradients { n, corners: nc, data }
}

/// Discrete solution pair: nodal heads `u` and cellwise saturation `chi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPair {
    pub u: Vec<f64>,
    pub chi: Vec<f64>,
    pub eps_u: f64,
}

/// Constraint metrics of a discrete solution pair.
///
/// `u_cell` is the smallest corner value of a cell, the same value that drives the penalized
/// coupling. `max_corner_complementarity` uses the largest corner value instead and is
/// reported for diagnosis only: at cells cut by the free boundary it is of order spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMetrics {
    pub u_min: f64,
    pub u_max: f64,
    pub chi_min: f64,
    pub chi_max: f64,
    pub complementarity: f64,
    pub max_corner_complementarity: f64,
    pub wet_cell_violations: usize,
}

impl SolutionPair {
    pub fn new(u: Vec<f64>, chi: Vec<f64>, eps_u: f64) -> Self {
        SolutionPair { u, chi, eps_u }
    }

    pub fn cell_min_u(&self, grid: &Grid, c: usize) -> f64 {
        let nodes = grid.cell_nodes(c);
        (0..grid.corners_per_cell()).map(|q| self.u[nodes[q]]).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_max_u(&self, grid: &Grid, c: usize) -> f64 {
        let nodes = grid.cell_nodes(c);
        (0..grid.corners_per_cell()).map(|q| self.u[nodes[q]]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Metrics with wet cells defined as cells whose smallest corner value is at least `wet_threshold`.
    pub fn metrics(&self, grid: &Grid, wet_threshold: f64) -> ConstraintMetrics {
        let u_min = self.u.iter().cloned().fold(f64::INFINITY, f64::min);
        let u_max = self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let chi_min = self.chi.iter().cloned().fold(f64::INFINITY, f64::min);
        let chi_max = self.chi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut comp: f64 = 0.0;
        let mut comp_max: f64 = 0.0;
        let mut wet = 0;
        for c in 0..grid.num_cells() {
            let lo = self.cell_min_u(grid, c);
            let hi = self.cell_max_u(grid, c);
            comp = comp.max(lo * (1.0 - self.chi[c]));
            comp_max = comp_max.max(hi * (1.0 - self.chi[c]));
            if lo >= wet_threshold && self.chi[c] < 1.0 - 1e-6 {
                wet += 1;
            }
        }
        ConstraintMetrics {
            u_min,
            u_max,
            chi_min,
            chi_max,
            complementarity: comp,
            max_corner_complementarity: comp_max,
            wet_cell_violations: wet,
        }
    }

    pub fn u_csv(&self, grid: &Grid) -> String {
        let n = grid.dim();
        let mut s = header(n, "u");
        for i in 0..grid.num_nodes() {
            let x = grid.node_coord(i);
            push_row(&mut s, &x[..n], self.u[i]);
        }
        s
    }

    pub fn chi_csv(&self, grid: &Grid) -> String {
        let n = grid.dim();
        let mut s = header(n, "chi");
        for c in 0..grid.num_cells() {
            let x = grid.cell_center(c);
            push_row(&mut s, &x[..n], self.chi[c]);
        }
        s
    }
}

fn header(n: usize, last: &str) -> String {
    let mut s: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    s.push(last.to_string());
    s.join(",") + "\n"
}

fn push_row(s: &mut String, x: &[f64], v: f64) {
    for xi in x {
        s.push_str(&format!("{xi},"));
    }
    s.push_str(&format!("{v}\n"));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap()
    }

    #[test]
    fn grid_examples() {
        let d = unit();
        assert_eq!(build_grid(&d, &[3, 3]).unwrap().spacing(), &[0.5, 0.5]);
        assert_eq!(build_grid(&d, &[129, 129]).unwrap().spacing(), &[1.0 / 128.0, 1.0 / 128.0]);
        assert!(build_grid(&d, &[2, 3]).is_err());
        assert!((d.delta() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn index_maps_are_bijective() {
        let d = Domain::unit_box(3, &[], BoundaryData::Constant { value: 0.0 }, 1.0).unwrap();
        let g = build_grid(&d, &[4, 5, 3]).unwrap();
        for i in 0..g.num_nodes() {
            assert_eq!(g.node_index(&g.node_multi(i)[..3]), i);
        }
        for c in 0..g.num_cells() {
            assert_eq!(g.cell_index(&g.cell_multi(c)[..3]), c);
        }
    }

    #[test]
    fn refinement_nests_nodes() {
        let d = unit();
        let g1 = build_grid(&d, &[9, 9]).unwrap();
        let g2 = build_grid(&d, &[17, 17]).unwrap();
        for i in 0..g1.num_nodes() {
            let m = g1.node_multi(i);
            let j = g2.node_index(&[2 * m[0], 2 * m[1]]);
            assert_eq!(g1.node_coord(i), g2.node_coord(j));
        }
    }

    #[test]
    fn boundary_data_and_t() {
        let d = unit();
        assert_eq!(d.g(&[0.3, 1.0]), 0.0);
        assert!((d.g(&[0.0, 0.2]) - 0.4).abs() < 1e-15);
        assert_eq!(d.g(&[1.0, 0.8]), 0.0);
        assert!(d.in_t(&[0.5, 1.0]) && !d.in_t(&[0.5, 0.0]));
        let patch = TPatch { face: FaceName::Bottom, lower: Some(vec![0.25, 0.0]), upper: Some(vec![0.75, 0.0]) };
        let d = Domain::new(vec![0.0, 0.0], vec![1.0, 1.0], &[patch], BoundaryData::Constant { value: 2.0 }, 1.0).unwrap();
        assert!(d.in_t(&[0.5, 0.0]) && !d.in_t(&[0.1, 0.0]));
        assert_eq!(d.g(&[0.1, 0.0]), 1.0);
    }

    #[test]
    fn gradients_affine_constant_quadratic() {
        let d = unit();
        let g = build_grid(&d, &[9, 7]).unwrap();
        let ux: Vec<f64> = (0..g.num_nodes()).map(|i| g.node_coord(i)[0]).collect();
        let gr = gradient_at_faces(&g, &ux);
        for c in 0..g.num_cells() {
            for q in 0..4 {
                let v = gr.get(c, q);
                assert!((v[0] - 1.0).abs() < 1e-13 && v[1].abs() < 1e-13);
            }
        }
        let u5 = vec![5.0; g.num_nodes()];
        let gr = gradient_at_faces(&g, &u5);
        assert!((0..g.num_cells()).all(|c| (0..4).all(|q| gr.get(c, q).iter().all(|v| *v == 0.0))));
        // x²: difference along the bottom edge equals the derivative 2x at the edge midpoint
        let u2: Vec<f64> = (0..g.num_nodes()).map(|i| g.node_coord(i)[0].powi(2)).collect();
        let gr = gradient_at_faces(&g, &u2);
        for c in 0..g.num_cells() {
            let mid = g.cell_center(c)[0];
            for q in 0..4 {
                assert!((gr.get(c, q)[0] - 2.0 * mid).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn interpolation_exact_for_bilinear() {
        let d = unit();
        let g = build_grid(&d, &[5, 9]).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[1];
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| f(&g.node_coord(i)[..2])).collect();
        for &p in &[[0.13, 0.77], [0.5, 0.5], [0.0, 1.0], [0.99, 0.01]] {
            assert!((g.interpolate(&u, &p) - f(&p)).abs() < 1e-13);
        }
    }

    #[test]
    fn csv_layout() {
        let d = unit();
        let g = build_grid(&d, &[3, 3]).unwrap();
        let sp = SolutionPair::new(vec![0.0; 9], vec![1.0; 4], 1e-3);
        let s = sp.u_csv(&g);
        assert!(s.starts_with("x1,x2,u\n0,0,0\n0.5,0,0\n"));
        assert_eq!(sp.chi_csv(&g).lines().count(), 5);
    }
}
