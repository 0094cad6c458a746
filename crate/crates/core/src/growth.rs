//! Regularity measurements on computed solutions: linear growth away from the free boundary,
//! boundary growth near `T`, the Harnack ratio and the Lipschitz rescaling.

use crate::barriers::{lipschitz_constant_theta_nonpos, lipschitz_constant_theta_pos, BoundaryBarrier};
use crate::domain_grid::{build_grid, gradient_at_faces, BoundaryData, Domain, Face, Grid, SolutionPair};
use crate::error::{AlapError, Result};
use crate::profiles::Profile;
use crate::solver::residual;
use crate::vector_field::{make_affine_field, make_constant_field, FieldH};

/// Samples per axis used when choosing ball centers.
pub const BALL_SAMPLES_PER_AXIS: usize = 16;

/// Squared Euclidean distance transform of one line (lower envelope of parabolas).
fn edt_line(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let Some(q0) = f.iter().position(|v| v.is_finite()) else {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    };
    v[0] = q0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let pos = |q: usize| q as f64 * h;
    for q in q0 + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            // z[0] = −∞, so this never underflows
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut j = 0;
    for (p, o) in out.iter_mut().enumerate() {
        while z[j + 1] < pos(p) {
            j += 1;
        }
        let d = pos(p) - pos(v[j]);
        *o = d * d + f[v[j]];
    }
}

/// Euclidean distance from every node to the nearest node with `u ≤ eps_u` (infinite when
/// there is none).
pub fn dry_distance(solution: &SolutionPair, grid: &Grid) -> Vec<f64> {
    let n = grid.dim();
    let mut d: Vec<f64> = solution.u.iter().map(|&v| if v <= solution.eps_u { 0.0 } else { f64::INFINITY }).collect();
    let counts = grid.counts();
    let strides = grid.strides();
    for axis in 0..n {
        let len = counts[axis];
        let mut line = vec![0.0; len];
        let mut out = vec![0.0; len];
        for start in 0..grid.num_nodes() {
            if grid.node_multi(start)[axis] != 0 {
                continue;
            }
            for (k, l) in line.iter_mut().enumerate() {
                *l = d[start + k * strides[axis]];
            }
            edt_line(&line, grid.spacing()[axis], &mut out);
            for (k, o) in out.iter().enumerate() {
                d[start + k * strides[axis]] = *o;
            }
        }
    }
    d.iter().map(|v| v.sqrt()).collect()
}

/// A ball `B_r(x₀)` inside the positivity set whose boundary reaches the free boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchingBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub node: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallOrder {
    Largest,
    Smallest,
}

fn distance_to_box(domain: &Domain, x: &[f64]) -> f64 {
    (0..domain.dim()).map(|k| (x[k] - domain.lower()[k]).min(domain.upper()[k] - x[k])).fold(f64::INFINITY, f64::min)
}

/// Touching balls centered at sampled nodes of `{u > eps_u}`, `r` from the exact distance
/// transform, keeping those whose closure lies in `Ω`. Centers are taken every
/// `(counts − 1)/16` nodes so grids of size `2ᵏ·16 + 1` share their sample points.
pub fn find_touching_balls(solution: &SolutionPair, grid: &Grid, domain: &Domain, count: usize, order: BallOrder) -> Vec<TouchingBall> {
    let dist = dry_distance(solution, grid);
    let n = grid.dim();
    let strides: Vec<usize> = grid.counts().iter().map(|&c| ((c - 1) / BALL_SAMPLES_PER_AXIS).max(1)).collect();
    let mut balls = Vec::new();
    for i in 0..grid.num_nodes() {
        let m = grid.node_multi(i);
        if (0..n).any(|k| m[k] % strides[k] != 0) || solution.u[i] <= solution.eps_u || !dist[i].is_finite() {
            continue;
        }
        let x = grid.node_coord(i)[..n].to_vec();
        let r = dist[i];
        if distance_to_box(domain, &x) > r {
            balls.push(TouchingBall { center: x, radius: r, node: i });
        }
    }
    match order {
        BallOrder::Largest => balls.sort_by(|a, b| b.radius.total_cmp(&a.radius).then(a.node.cmp(&b.node))),
        BallOrder::Smallest => balls.sort_by(|a, b| a.radius.total_cmp(&b.radius).then(a.node.cmp(&b.node))),
    }
    balls.truncate(count);
    balls
}

/// Nodal values of `u` within the closed ball (the center is always included).
fn ball_values(solution: &SolutionPair, grid: &Grid, center: &[f64], r: f64) -> Vec<f64> {
    let n = grid.dim();
    let lo: Vec<usize> = (0..n)
        .map(|k| (((center[k] - r - grid.lower()[k]) / grid.spacing()[k]).floor().max(0.0)) as usize)
        .collect();
    let hi: Vec<usize> = (0..n)
        .map(|k| ((((center[k] + r - grid.lower()[k]) / grid.spacing()[k]).ceil()) as usize).min(grid.counts()[k] - 1))
        .collect();
    let mut out = vec![grid.interpolate(&solution.u, center)];
    let tol = 1e-12 * r.max(1e-300);
    let mut m = [0usize; 3];
    m[..n].copy_from_slice(&lo);
    loop {
        let i = grid.node_index(&m[..n]);
        let x = grid.node_coord(i);
        let d2: f64 = (0..n).map(|k| (x[k] - center[k]) * (x[k] - center[k])).sum();
        if d2.sqrt() <= r + tol {
            out.push(solution.u[i]);
        }
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            if m[k] < hi[k] {
                m[k] += 1;
                break;
            }
            m[k] = lo[k];
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub center: Vec<f64>,
    pub radius: f64,
    pub sup_half: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// Min-bound constants for the cases `θ(r) ≤ 0` and `θ(r) > 0`.
    pub c_theta_nonpos: f64,
    pub c_theta_pos: f64,
    /// Multiplicative slack applied to the larger constant (the measured Harnack constant).
    pub slack: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

impl GrowthReport {
    pub fn bound(&self) -> f64 {
        self.c_theta_nonpos.max(self.c_theta_pos) * self.slack
    }

    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(2, |r| r.center.len());
        let mut s: String = (0..n).map(|k| format!("x{},", k + 1)).collect();
        s.push_str("r,sup_half,ratio,c_theta_nonpos,c_theta_pos\n");
        for r in &self.rows {
            for v in &r.center {
                s.push_str(&format!("{v:e},"));
            }
            s.push_str(&format!("{:e},{:e},{:e},{:e},{:e}\n", r.radius, r.sup_half, r.ratio, self.c_theta_nonpos, self.c_theta_pos));
        }
        s
    }
}

/// `sup_{B_{r/2}(x₀)} u / r` per ball against `max(C_θ≤0, C_θ>0)·slack`.
pub fn growth_report(
    solution: &SolutionPair,
    grid: &Grid,
    balls: &[TouchingBall],
    profile: &Profile,
    field: &FieldH,
    domain: &Domain,
    slack: f64,
) -> GrowthReport {
    let n = grid.dim();
    let rows: Vec<GrowthRow> = balls
        .iter()
        .map(|b| {
            let sup = ball_values(solution, grid, &b.center, b.radius / 2.0).into_iter().fold(0.0, f64::max);
            GrowthRow { center: b.center.clone(), radius: b.radius, sup_half: sup, ratio: sup / b.radius }
        })
        .collect();
    let c_nonpos = lipschitz_constant_theta_nonpos(profile, n, field.h_upper(), domain.delta());
    let c_pos = lipschitz_constant_theta_pos(profile, n, field.h_upper());
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let mut rep = GrowthReport { rows, c_theta_nonpos: c_nonpos, c_theta_pos: c_pos, slack, max_ratio, pass: false };
    rep.pass = max_ratio <= rep.bound();
    rep
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackRow {
    pub center: Vec<f64>,
    pub radius: f64,
    pub sup_half: f64,
    pub inf_half: f64,
    /// `sup / (inf + r·a⁻¹(h̄δ))`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnackReport {
    pub rows: Vec<HarnackRow>,
    /// Balls rejected because `B_{r/2}` reaches `{u ≤ eps_u}`.
    pub rejected: usize,
    pub measured_constant: f64,
}

impl HarnackReport {
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(2, |r| r.center.len());
        let mut s: String = (0..n).map(|k| format!("x{},", k + 1)).collect();
        s.push_str("r,sup_half,inf_half,constant\n");
        for r in &self.rows {
            for v in &r.center {
                s.push_str(&format!("{v:e},"));
            }
            s.push_str(&format!("{:e},{:e},{:e},{:e}\n", r.radius, r.sup_half, r.inf_half, r.constant));
        }
        s
    }
}

/// Measures the Harnack constant `sup_{B_{r/2}} u ≤ C·(inf_{B_{r/2}} u + r·a⁻¹(h̄δ))` per ball.
pub fn harnack_check(solution: &SolutionPair, grid: &Grid, balls: &[TouchingBall], field: &FieldH, profile: &Profile, domain: &Domain) -> HarnackReport {
    let data = profile.a_inv(field.h_upper() * domain.delta());
    let mut rows = Vec::new();
    let mut rejected = 0;
    for b in balls {
        let vals = ball_values(solution, grid, &b.center, b.radius / 2.0);
        let inf = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let sup = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(inf > solution.eps_u) {
            rejected += 1;
            continue;
        }
        rows.push(HarnackRow { center: b.center.clone(), radius: b.radius, sup_half: sup, inf_half: inf, constant: sup / (inf + b.radius * data) });
    }
    let measured_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    HarnackReport { rows, rejected, measured_constant }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrowthRow {
    pub x0: Vec<f64>,
    pub x: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrowthReport {
    pub rows: Vec<BoundaryGrowthRow>,
    pub r0: f64,
    /// `ϑ′(0)` of the boundary barrier with the solution's `M`, `h̄`, `δ` and this `R₀`.
    pub theta_prime0: f64,
    pub slack: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

impl BoundaryGrowthReport {
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(2, |r| r.x.len());
        let mut s: String = (0..n).map(|k| format!("x0_{},", k + 1)).collect();
        s.extend((0..n).map(|k| format!("x{},", k + 1)));
        s.push_str("ratio,theta_prime0\n");
        for r in &self.rows {
            for v in r.x0.iter().chain(&r.x) {
                s.push_str(&format!("{v:e},"));
            }
            s.push_str(&format!("{:e},{:e}\n", r.ratio, self.theta_prime0));
        }
        s
    }
}

/// The part of a flat `T` face at distance more than `3R₀` from the other faces, as a box on
/// that face.
pub fn interior_face_subset(domain: &Domain, face: Face, r0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = domain.dim();
    let mut lo = domain.lower().to_vec();
    let mut hi = domain.upper().to_vec();
    for k in 0..n {
        if k == face.axis {
            let v = if face.upper { domain.upper()[k] } else { domain.lower()[k] };
            lo[k] = v;
            hi[k] = v;
        } else {
            lo[k] += 3.0 * r0;
            hi[k] -= 3.0 * r0;
            if !(lo[k] < hi[k]) {
                return Err(AlapError::InvalidParameter(format!("R₀ = {r0} leaves no S₀ on the face")));
            }
        }
    }
    Ok((lo, hi))
}

/// For nodes `x` within `width` of `S₀` (along the face normal, strictly off the face) with
/// projection `x₀ ∈ S₀`, the ratio `u(x)/|x − x₀|`; passes iff the maximum is at most
/// `ϑ′(0)·1.01 + slack`, where the slack `eps_u/h_normal` covers the positivity threshold at the
/// nearest sampled distance from the face.
pub fn boundary_growth_report(
    solution: &SolutionPair,
    grid: &Grid,
    domain: &Domain,
    face: Face,
    r0: f64,
    width: f64,
    profile: &Profile,
    field: &FieldH,
) -> Result<BoundaryGrowthReport> {
    let n = grid.dim();
    let (s_lo, s_hi) = interior_face_subset(domain, face, r0)?;
    let bb = BoundaryBarrier::new(&vec![0.0; n], r0, domain.m_ceiling(), field.h_upper(), domain.delta(), profile)?;
    let theta_prime0 = bb.lipschitz_constant(profile);
    let a = face.axis;
    let face_x = s_lo[a];
    let mut rows = Vec::new();
    for i in 0..grid.num_nodes() {
        let x = grid.node_coord(i)[..n].to_vec();
        let d = (x[a] - face_x).abs();
        if d <= 1e-12 || d > width + 1e-12 {
            continue;
        }
        if (0..n).any(|k| k != a && (x[k] < s_lo[k] - 1e-12 || x[k] > s_hi[k] + 1e-12)) {
            continue;
        }
        let mut x0 = x.clone();
        x0[a] = face_x;
        rows.push(BoundaryGrowthRow { x0, x, ratio: solution.u[i].max(0.0) / d });
    }
    let slack = solution.eps_u / grid.spacing()[a];
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let pass = max_ratio <= theta_prime0 * 1.01 + slack;
    Ok(BoundaryGrowthReport { rows, r0, theta_prime0, slack, max_ratio, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaleReport {
    pub x0: Vec<f64>,
    pub radius: f64,
    /// Source term `−R·div H(x₀)` of the rescaled equation.
    pub source: f64,
    /// Max residual density of `v` at interior nodes of the unit ball.
    pub residual: f64,
    /// Max deviation of the `v` residual from `R` times the `u` residual at the same nodes.
    pub scaling_defect: f64,
    /// `max |∇v|` over corner gradients of cells inside the half ball.
    pub grad_max_half: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Builds `v(y) = u(x₀ + Ry)/R` on the box `[−1, 1]ⁿ` with node spacing `h/R`, so that every
/// `y` node is a `u` node, and evaluates the discrete residual of
/// `div(a(|∇v|)∇v/|∇v| + χH̃) = 0` with `H̃(y) = H(x₀ + Ry)`, whose divergence is `R·div H`.
/// `x₀` must be a node and `R` a multiple of the spacing; `tol` is the `u` residual tolerance
/// and the rescaled residual must stay below `R·tol`.
pub fn rescale_check(
    solution: &SolutionPair,
    grid: &Grid,
    x0: &[f64],
    radius: f64,
    profile: &Profile,
    field: &FieldH,
    tol: f64,
) -> Result<RescaleReport> {
    let n = grid.dim();
    let h = grid.spacing();
    let mut base = [0usize; 3];
    let mut half = [0usize; 3];
    for k in 0..n {
        let steps = radius / h[k];
        let idx = (x0[k] - grid.lower()[k]) / h[k];
        if (steps - steps.round()).abs() > 1e-9 || (idx - idx.round()).abs() > 1e-9 {
            return Err(AlapError::InvalidParameter("rescale_check needs a node center and R a multiple of the spacing".into()));
        }
        let (steps, idx) = (steps.round() as usize, idx.round() as usize);
        if steps == 0 || idx < steps || idx + steps >= grid.counts()[k] {
            return Err(AlapError::OutOfRange("B_R(x₀) leaves the grid".into()));
        }
        base[k] = idx - steps;
        half[k] = steps;
    }
    let ydom = Domain::new(vec![-1.0; n], vec![1.0; n], &[], BoundaryData::Constant { value: 0.0 }, 1.0)?;
    let counts: Vec<usize> = (0..n).map(|k| 2 * half[k] + 1).collect();
    let ygrid = build_grid(&ydom, &counts)?;
    let map_node = |j: usize| {
        let m = ygrid.node_multi(j);
        let mut g = [0usize; 3];
        for k in 0..n {
            g[k] = base[k] + m[k];
        }
        grid.node_index(&g[..n])
    };
    let map_cell = |c: usize| {
        let m = ygrid.cell_multi(c);
        let mut g = [0usize; 3];
        for k in 0..n {
            g[k] = base[k] + m[k];
        }
        grid.cell_index(&g[..n])
    };
    for j in 0..ygrid.num_nodes() {
        let y = ygrid.node_coord(j);
        if (0..n).map(|k| y[k] * y[k]).sum::<f64>() <= 1.0 + 1e-12 && solution.u[map_node(j)] <= solution.eps_u {
            return Err(AlapError::InvalidParameter("B_R(x₀) is not inside {u > eps_u}".into()));
        }
    }
    let v: Vec<f64> = (0..ygrid.num_nodes()).map(|j| solution.u[map_node(j)] / radius).collect();
    let chi: Vec<f64> = (0..ygrid.num_cells()).map(|c| solution.chi[map_cell(c)]).collect();
    let field_y = rescaled_field(field, x0, radius, &ydom)?;
    let res_v = residual(&ygrid, profile, &field_y, &v, &chi);
    let res_u = residual(grid, profile, field, &solution.u, &solution.chi);
    let mut res_max: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for j in 0..ygrid.num_nodes() {
        if ygrid.is_boundary_node(j) {
            continue;
        }
        let y = ygrid.node_coord(j);
        if (0..n).map(|k| y[k] * y[k]).sum::<f64>() > 1.0 + 1e-12 {
            continue;
        }
        res_max = res_max.max(res_v[j].abs());
        defect = defect.max((res_v[j] - radius * res_u[map_node(j)]).abs());
    }
    let grads = gradient_at_faces(&ygrid, &v);
    let mut gmax: f64 = 0.0;
    for c in 0..ygrid.num_cells() {
        let nodes = ygrid.cell_nodes(c);
        let inside = (0..ygrid.corners_per_cell()).all(|q| {
            let y = ygrid.node_coord(nodes[q]);
            (0..n).map(|k| y[k] * y[k]).sum::<f64>() <= 0.25 + 1e-12
        });
        if inside {
            for q in 0..ygrid.corners_per_cell() {
                gmax = gmax.max(grads.get(c, q).iter().map(|g| g * g).sum::<f64>().sqrt());
            }
        }
    }
    let source = -radius * field.div(x0);
    let pass = res_max <= radius * tol;
    Ok(RescaleReport { x0: x0.to_vec(), radius, source, residual: res_max, scaling_defect: defect, grad_max_half: gmax, tol: radius * tol, pass })
}

/// `H̃(y) = H(x₀ + Ry)` on the rescaled box.
fn rescaled_field(field: &FieldH, x0: &[f64], radius: f64, ydom: &Domain) -> Result<FieldH> {
    let n = field.dim();
    let b = field.eval(x0);
    if field.is_constant() {
        return make_constant_field(&b);
    }
    // columns of the affine part from unit differences
    let mut a = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut x = x0.to_vec();
        x[j] += 1.0;
        let hx = field.eval(&x);
        for i in 0..n {
            a[i][j] = radius * (hx[i] - b[i]);
        }
    }
    make_affine_field(&a, &b, ydom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::FaceName;
    use crate::profiles::make_power;

    fn dam(n: usize) -> (Domain, Grid, SolutionPair) {
        let d = Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap();
        let g = build_grid(&d, &[n, n]).unwrap();
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| (0.6 - g.node_coord(i)[1]).max(0.0)).collect();
        let chi = (0..g.num_cells()).map(|c| if g.cell_center(c)[1] < 0.6 { 1.0 } else { 0.0 }).collect();
        let e = g.default_eps_u(&d);
        (d, g, SolutionPair::new(u, chi, e))
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let (_, g, mut s) = dam(21);
        // scatter a few extra dry nodes
        for &i in &[22usize, 137, 250, 301] {
            s.u[i] = 0.0;
        }
        let d = dry_distance(&s, &g);
        let dry: Vec<usize> = (0..g.num_nodes()).filter(|&i| s.u[i] <= s.eps_u).collect();
        for i in 0..g.num_nodes() {
            let x = g.node_coord(i);
            let bf = dry
                .iter()
                .map(|&j| {
                    let y = g.node_coord(j);
                    ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!((d[i] - bf).abs() < 1e-12, "node {i}: {} vs {bf}", d[i]);
        }
    }

    #[test]
    fn dam_touching_ball_and_growth() {
        let (d, g, s) = dam(65);
        let balls = find_touching_balls(&s, &g, &d, 1000, BallOrder::Largest);
        let b = balls.iter().find(|b| (b.center[0] - 0.5).abs() < 1e-12 && (b.center[1] - 0.3125).abs() < 1e-12).unwrap();
        assert!((b.radius - 0.2875).abs() <= 1.0 / 64.0 + 1e-12);
        for b in &balls {
            assert!(b.radius < distance_to_box(&d, &b.center));
        }
        let p = make_power(2.0).unwrap();
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let rep = growth_report(&s, &g, &balls, &p, &f, &d, 1.0);
        // sup over B_{r/2} of the linear profile is (0.6 − y + r/2), so the ratio is ≤ 1.5 + O(h/r)
        assert!(rep.max_ratio <= 1.5 + 1e-9, "{}", rep.max_ratio);
        assert!(rep.pass);
        let h = harnack_check(&s, &g, &balls, &f, &p, &d);
        assert!(h.measured_constant.is_finite() && h.measured_constant > 0.0);
    }

    #[test]
    fn no_free_boundary_gives_no_balls() {
        let (d, g, mut s) = dam(17);
        s.u.iter_mut().for_each(|v| *v = 1.0);
        assert!(find_touching_balls(&s, &g, &d, 10, BallOrder::Largest).is_empty());
    }

    #[test]
    fn linear_boundary_profile_ratio_is_one() {
        let d = Domain::unit_box(2, &[FaceName::Bottom], BoundaryData::Affine { coeffs: vec![0.0, 1.0], offset: 0.0 }, 1.0).unwrap();
        let g = build_grid(&d, &[33, 33]).unwrap();
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| g.node_coord(i)[1]).collect();
        let s = SolutionPair::new(u, vec![1.0; g.num_cells()], g.default_eps_u(&d));
        let p = make_power(2.0).unwrap();
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let face = FaceName::Bottom.resolve(2).unwrap();
        let rep = boundary_growth_report(&s, &g, &d, face, 0.1, 0.1, &p, &f).unwrap();
        assert!((rep.max_ratio - 1.0).abs() < 1e-12);
        assert!(rep.theta_prime0 >= 1.0 / 0.1 && rep.pass);
    }

    #[test]
    fn rescaling_the_exact_dam_profile() {
        let (_, g, s) = dam(65);
        let p = make_power(2.0).unwrap();
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let rep = rescale_check(&s, &g, &[0.5, 0.25], 0.125, &p, &f, 1e-9).unwrap();
        assert!(rep.residual < 1e-12 && rep.pass);
        assert!((rep.grad_max_half - 1.0).abs() < 1e-12);
        assert_eq!(rep.source, 0.0);
    }
}
