//! Discrete weak form of `div(a(|∇u|)∇u/|∇u| + χH) = 0` and its penalized solution.
//!
//! Each cell carries `2^n` corner gradients (component `k` is the difference quotient along the
//! cell edge in direction `k` through the corner). The discrete energy
//! `E(u; χ) = Σ_cells Σ_corners (|cell|/2^n)·[A(|g|) + χ_c H(x_c)·g]` has the weak residual
//! `W_i = ∂E/∂u_i`, the hat-function weak form of the equation at frozen `χ`.
//!
//! The coupled solve ties `χ_c = min(u(e_c)/ε, 1)⁺` to `u`, where `e_c` is the point at which
//! the ray from the cell center along `H` leaves the cell. Linearized around `u = 0` the
//! coupling is a transport term with velocity `−H/ε`, and sampling at the exit point makes it
//! upwind. The residual is driven to zero by pseudo-transient continuation (implicit Euler on
//! `u_t = −W/|cell|`, step control by switched evolution relaxation) with projection onto
//! `[0, M]`, warm-started along a halving sequence of `ε`.

use serde::{Deserialize, Serialize};

use crate::domain_grid::{ConstraintMetrics, Domain, Grid, SolutionPair};
use crate::error::{AlapError, Result};
use crate::linalg::{gmres, pcg, Csr, Ilu0};
use crate::profiles::{make_power, Profile};
use crate::vector_field::FieldH;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingMethod {
    /// Newton on the penalized system with `χ = χ(u)` substituted.
    Coupled,
    /// Relaxed fixed point on `χ` with inner frozen-`χ` solves.
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: CouplingMethod,
    /// Penalization `ε`; defaults to `4·eps_u`.
    pub eps: Option<f64>,
    /// Positivity threshold; defaults to the grid value `10·h²·M/δ²`.
    pub eps_u: Option<f64>,
    /// First continuation value of `ε`; defaults to `M`.
    pub eps_start: Option<f64>,
    pub continuation_factor: f64,
    /// Max-norm of the residual density at the final `ε`.
    pub inner_tol: f64,
    /// Max-norm of the residual density on intermediate continuation levels.
    pub continuation_tol: f64,
    /// L¹ change of `χ` stopping the Picard iteration.
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub relaxation: f64,
    pub dt0: f64,
    pub dt_max: f64,
    pub dt_growth_cap: f64,
    /// Steps whose residual grows by more than this factor are rejected.
    pub reject_factor: f64,
    pub dt_shrink: f64,
    /// Jacobian regularization `μ = mu_rel·M/δ(Ω)`.
    pub mu_rel: f64,
    pub linear_rtol: f64,
    pub gmres_restart: usize,
    pub linear_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: CouplingMethod::Coupled,
            eps: None,
            eps_u: None,
            eps_start: None,
            continuation_factor: 2.0,
            inner_tol: 1e-9,
            continuation_tol: 1e-4,
            outer_tol: 1e-10,
            max_inner: 4000,
            max_outer: 200,
            relaxation: 0.5,
            dt0: 1e-2,
            dt_max: 1e12,
            dt_growth_cap: 10.0,
            reject_factor: 2.0,
            dt_shrink: 0.25,
            mu_rel: 1e-8,
            linear_rtol: 1e-2,
            gmres_restart: 40,
            linear_max_iter: 600,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("inner_tol", self.inner_tol),
            ("continuation_tol", self.continuation_tol),
            ("outer_tol", self.outer_tol),
            ("dt0", self.dt0),
            ("dt_max", self.dt_max),
            ("mu_rel", self.mu_rel),
            ("linear_rtol", self.linear_rtol),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(AlapError::InvalidParameter(format!("solver.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("eps", self.eps), ("eps_u", self.eps_u), ("eps_start", self.eps_start)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(AlapError::InvalidParameter(format!("solver.{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.continuation_factor > 1.0) {
            return Err(AlapError::InvalidParameter("solver.continuation_factor must exceed 1".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(AlapError::InvalidParameter("solver.relaxation must lie in (0, 1]".into()));
        }
        if !(self.dt_shrink > 0.0 && self.dt_shrink < 1.0) || !(self.reject_factor > 1.0) || !(self.dt_growth_cap > 1.0) {
            return Err(AlapError::InvalidParameter("solver step-control factors out of range".into()));
        }
        if self.gmres_restart == 0 || self.max_inner == 0 || self.max_outer == 0 {
            return Err(AlapError::InvalidParameter("solver iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Record of one continuation level (coupled) or one outer iteration (Picard).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub eps: f64,
    pub steps: usize,
    pub rejections: usize,
    pub residual: f64,
    pub chi_change: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub rejections: usize,
    /// Max-norm of the projected residual density (zero at nodes held on a bound).
    pub final_residual: f64,
    /// Largest raw residual density at interior nodes held on `u = 0` or `u = M`.
    pub bound_residual: f64,
    pub bound_nodes: usize,
    pub final_chi_change: f64,
    pub eps: f64,
    pub eps_u: f64,
    pub levels: Vec<LevelRecord>,
    pub metrics: ConstraintMetrics,
}

impl SolveReport {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn summary(&self) -> String {
        let m = &self.metrics;
        let mut s = String::new();
        s.push_str(&format!("converged = {}\n", self.converged));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s.push_str(&format!("rejections = {}\n", self.rejections));
        s.push_str(&format!("final_residual = {:e}\n", self.final_residual));
        s.push_str(&format!("bound_residual = {:e}\n", self.bound_residual));
        s.push_str(&format!("bound_nodes = {}\n", self.bound_nodes));
        s.push_str(&format!("final_chi_change = {:e}\n", self.final_chi_change));
        s.push_str(&format!("eps = {:e}\n", self.eps));
        s.push_str(&format!("eps_u = {:e}\n", self.eps_u));
        s.push_str(&format!("u_range = [{:e}, {:e}]\n", m.u_min, m.u_max));
        s.push_str(&format!("chi_range = [{:e}, {:e}]\n", m.chi_min, m.chi_max));
        s.push_str(&format!("complementarity = {:e}\n", m.complementarity));
        s.push_str(&format!("max_corner_complementarity = {:e}\n", m.max_corner_complementarity));
        s.push_str(&format!("wet_cell_violations = {}\n", m.wet_cell_violations));
        s.push_str("level,eps,steps,rejections,residual,chi_change,energy\n");
        for (i, l) in self.levels.iter().enumerate() {
            s.push_str(&format!(
                "{},{:e},{},{},{:e},{:e},{:e}\n",
                i, l.eps, l.steps, l.rejections, l.residual, l.chi_change, l.energy
            ));
        }
        s
    }
}

#[derive(Clone, Copy)]
enum ChiMode<'a> {
    Frozen(&'a [f64]),
    Penalized(f64),
}

/// Precomputed geometry and sparsity for one grid/profile/field combination.
struct Assembler<'a> {
    profile: &'a Profile,
    n: usize,
    nc: usize,
    h: [f64; 3],
    vol: f64,
    weight: f64,
    h_cell: Vec<[f64; 3]>,
    chi_w: Vec<[f64; 8]>,
    nodes: Vec<[usize; 8]>,
    dirichlet: Vec<bool>,
    pattern: Csr,
    local_pos: Vec<usize>,
}

impl<'a> Assembler<'a> {
    fn new(grid: &'a Grid, profile: &'a Profile, field: &FieldH) -> Self {
        let n = grid.dim();
        let nc = grid.corners_per_cell();
        let mut h = [0.0; 3];
        h[..n].copy_from_slice(grid.spacing());
        let vol = grid.cell_volume();
        let ncells = grid.num_cells();
        let mut h_cell = Vec::with_capacity(ncells);
        let mut nodes = Vec::with_capacity(ncells);
        for c in 0..ncells {
            let x = grid.cell_center(c);
            let mut hv = [0.0; 3];
            field.eval_into(&x[..n], &mut hv);
            h_cell.push(hv);
            nodes.push(grid.cell_nodes(c));
        }
        let chi_w: Vec<[f64; 8]> = h_cell.iter().map(|hv| exit_weights(hv, grid.spacing())).collect();
        let nn = grid.num_nodes();
        let dirichlet: Vec<bool> = (0..nn).map(|i| grid.is_boundary_node(i)).collect();
        let mut rows: Vec<Vec<usize>> = (0..nn).map(|i| vec![i]).collect();
        for nd in &nodes {
            for a in 0..nc {
                if dirichlet[nd[a]] {
                    continue;
                }
                for b in 0..nc {
                    if !dirichlet[nd[b]] {
                        rows[nd[a]].push(nd[b]);
                    }
                }
            }
        }
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
        }
        let pattern = Csr::from_pattern(&rows);
        let mut local_pos = vec![usize::MAX; ncells * nc * nc];
        for (c, nd) in nodes.iter().enumerate() {
            for a in 0..nc {
                for b in 0..nc {
                    if !dirichlet[nd[a]] && !dirichlet[nd[b]] {
                        local_pos[(c * nc + a) * nc + b] = pattern.position(nd[a], nd[b]).unwrap();
                    }
                }
            }
        }
        Assembler {
            profile,
            n,
            nc,
            h,
            vol,
            weight: vol / nc as f64,
            h_cell,
            chi_w,
            nodes,
            dirichlet,
            pattern,
            local_pos,
        }
    }

    /// Cell value of `χ` and, for the penalized mode, `dχ/d(exit value)` when unclamped.
    fn cell_chi(&self, c: usize, u: &[f64], mode: ChiMode) -> (f64, Option<f64>) {
        match mode {
            ChiMode::Frozen(chi) => (chi[c], None),
            ChiMode::Penalized(eps) => {
                let nd = &self.nodes[c];
                let w = &self.chi_w[c];
                let ue: f64 = (0..self.nc).map(|q| w[q] * u[nd[q]]).sum();
                let s = ue / eps;
                if s <= 0.0 {
                    (0.0, None)
                } else if s >= 1.0 {
                    (1.0, None)
                } else {
                    (s, Some(1.0 / eps))
                }
            }
        }
    }

    fn chi_field(&self, u: &[f64], mode: ChiMode) -> Vec<f64> {
        (0..self.nodes.len()).map(|c| self.cell_chi(c, u, mode).0).collect()
    }

    fn corner_gradients(&self, c: usize, u: &[f64]) -> [[f64; 3]; 8] {
        let nd = &self.nodes[c];
        let mut g = [[0.0; 3]; 8];
        for q in 0..self.nc {
            for k in 0..self.n {
                g[q][k] = (u[nd[q | 1 << k]] - u[nd[q & !(1 << k)]]) / self.h[k];
            }
        }
        g
    }

    /// Weak residual `W`; Dirichlet rows are zero.
    fn weak_residual(&self, u: &[f64], mode: ChiMode, w: &mut [f64]) {
        w.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.nodes.len() {
            let nd = &self.nodes[c];
            let g = self.corner_gradients(c, u);
            let (chi, _) = self.cell_chi(c, u, mode);
            let hc = &self.h_cell[c];
            for (q, gq) in g.iter().enumerate().take(self.nc) {
                let t = norm3(gq, self.n);
                let s = if t > 0.0 { self.profile.a(t) / t } else { 0.0 };
                for k in 0..self.n {
                    let f = self.weight * (s * gq[k] + chi * hc[k]) / self.h[k];
                    w[nd[q | 1 << k]] += f;
                    w[nd[q & !(1 << k)]] -= f;
                }
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if *d {
                w[i] = 0.0;
            }
        }
    }

    /// Weak residual and its Jacobian (flux Hessian regularized by `mu`).
    fn assemble(&self, u: &[f64], mode: ChiMode, mu: f64, w: &mut [f64], jac: &mut Csr) {
        w.iter_mut().for_each(|v| *v = 0.0);
        jac.zero();
        let (n, nc) = (self.n, self.nc);
        let mut bvec = [0.0; 8];
        for c in 0..self.nodes.len() {
            let nd = &self.nodes[c];
            let g = self.corner_gradients(c, u);
            let (chi, dchi) = self.cell_chi(c, u, mode);
            let hc = &self.h_cell[c];
            let lp = &self.local_pos[c * nc * nc..(c + 1) * nc * nc];
            bvec[..nc].iter_mut().for_each(|v| *v = 0.0);
            for (q, gq) in g.iter().enumerate().take(nc) {
                let t = norm3(gq, n);
                let s = if t > 0.0 { self.profile.a(t) / t } else { 0.0 };
                let tr = (t * t + mu * mu).sqrt();
                let (c1, c2) = if tr > 0.0 {
                    let c1 = self.profile.a(tr) / tr;
                    (c1, (self.profile.da(tr) - c1) / (tr * tr))
                } else {
                    (self.profile.da(0.0), 0.0)
                };
                for k in 0..n {
                    let hi = q | 1 << k;
                    let lo = q & !(1 << k);
                    let f = self.weight * (s * gq[k] + chi * hc[k]) / self.h[k];
                    w[nd[hi]] += f;
                    w[nd[lo]] -= f;
                    let b = self.weight * hc[k] / self.h[k];
                    bvec[hi] += b;
                    bvec[lo] -= b;
                    for l in 0..n {
                        let hkl = if k == l { c1 } else { 0.0 } + c2 * gq[k] * gq[l];
                        let v = self.weight * hkl / (self.h[k] * self.h[l]);
                        let hl = q | 1 << l;
                        let ll = q & !(1 << l);
                        add(jac, lp[hi * nc + hl], v);
                        add(jac, lp[hi * nc + ll], -v);
                        add(jac, lp[lo * nc + hl], -v);
                        add(jac, lp[lo * nc + ll], v);
                    }
                }
            }
            if let Some(d) = dchi {
                let cw = &self.chi_w[c];
                for a in 0..nc {
                    for q in 0..nc {
                        if cw[q] != 0.0 {
                            add(jac, lp[a * nc + q], bvec[a] * cw[q] * d);
                        }
                    }
                }
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if *d {
                w[i] = 0.0;
                let p = jac.diag_position(i);
                jac.vals[p] = 1.0;
            }
        }
    }

    fn energy(&self, u: &[f64], chi: &[f64]) -> f64 {
        let mut e = 0.0;
        for c in 0..self.nodes.len() {
            let g = self.corner_gradients(c, u);
            let hc = &self.h_cell[c];
            for gq in g.iter().take(self.nc) {
                let t = norm3(gq, self.n);
                let hg: f64 = (0..self.n).map(|k| hc[k] * gq[k]).sum();
                e += self.weight * (self.profile.big_a(t) + chi[c] * hg);
            }
        }
        e
    }

    fn density(&self, w: &[f64], r: &mut [f64]) {
        for i in 0..w.len() {
            r[i] = -w[i] / self.vol;
        }
    }
}

#[inline]
fn add(a: &mut Csr, p: usize, v: f64) {
    if p != usize::MAX {
        a.vals[p] += v;
    }
}

#[inline]
fn norm3(g: &[f64; 3], n: usize) -> f64 {
    g[..n].iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Residual density `−W_i/|cell|`: per interior node the discrete divergence of
/// `flux(∇u) + χH`, zero on boundary nodes.
pub fn residual(grid: &Grid, profile: &Profile, field: &FieldH, u: &[f64], chi: &[f64]) -> Vec<f64> {
    let asm = Assembler::new(grid, profile, field);
    let mut w = vec![0.0; u.len()];
    asm.weak_residual(u, ChiMode::Frozen(chi), &mut w);
    let mut r = vec![0.0; u.len()];
    asm.density(&w, &mut r);
    r
}

/// `Σ_cells Σ_corners (|cell|/2^n)·[A(|g|) + χ H·g]`.
pub fn energy(grid: &Grid, profile: &Profile, field: &FieldH, u: &[f64], chi: &[f64]) -> f64 {
    Assembler::new(grid, profile, field).energy(u, chi)
}

/// Multilinear interpolation weights of the point where the ray `x_c + τH(x_c)`, `τ > 0`,
/// leaves the cell (the cell center itself when `H(x_c) = 0`).
pub fn exit_weights(hv: &[f64; 3], spacing: &[f64]) -> [f64; 8] {
    let n = spacing.len();
    let mut tau = f64::INFINITY;
    for k in 0..n {
        if hv[k] != 0.0 {
            tau = tau.min(0.5 * spacing[k] / hv[k].abs());
        }
    }
    let mut xi = [0.5; 3];
    if tau.is_finite() {
        for k in 0..n {
            xi[k] = (0.5 + tau * hv[k] / spacing[k]).clamp(0.0, 1.0);
        }
    }
    let mut w = [0.0; 8];
    for (q, wq) in w.iter_mut().enumerate().take(1 << n) {
        *wq = (0..n).map(|k| if q >> k & 1 == 1 { xi[k] } else { 1.0 - xi[k] }).product();
    }
    w
}

/// Penalized `χ_c = min(u(exit point)/ε, 1)⁺`, with the exit point of [`exit_weights`].
pub fn penalized_chi(grid: &Grid, field: &FieldH, u: &[f64], eps: f64) -> Vec<f64> {
    let n = grid.dim();
    (0..grid.num_cells())
        .map(|c| {
            let x = grid.cell_center(c);
            let mut hv = [0.0; 3];
            field.eval_into(&x[..n], &mut hv);
            let w = exit_weights(&hv, grid.spacing());
            let nd = grid.cell_nodes(c);
            let ue: f64 = (0..grid.corners_per_cell()).map(|q| w[q] * u[nd[q]]).sum();
            (ue / eps).clamp(0.0, 1.0)
        })
        .collect()
}

struct PtcOutcome {
    converged: bool,
    steps: usize,
    rejections: usize,
    residual: f64,
}

/// Pseudo-transient continuation with projection onto `[0, M]`.
/// Zeroes the residual at nodes held on a bound: `u = 0` with the flow pushing down or `u = M`
/// with the flow pushing up. Returns whether each node is active.
fn project_residual(u: &[f64], r: &mut [f64], m_ceiling: f64, active: &mut [bool]) {
    for i in 0..u.len() {
        let lo = u[i] <= 0.0 && r[i] < 0.0;
        let hi = u[i] >= m_ceiling && r[i] > 0.0;
        active[i] = lo || hi;
        if active[i] {
            r[i] = 0.0;
        }
    }
}

/// Projected pseudo-transient continuation. The Newton step is taken on the inactive nodes
/// only; nodes held on a bound keep their value, so convergence is measured by the projected
/// residual.
fn ptc(asm: &Assembler, u: &mut [f64], mode: ChiMode, tol: f64, m_ceiling: f64, mu: f64, cfg: &SolverConfig) -> Result<PtcOutcome> {
    let nn = u.len();
    let mut w = vec![0.0; nn];
    let mut r = vec![0.0; nn];
    let mut rhs = vec![0.0; nn];
    let mut du = vec![0.0; nn];
    let mut active = vec![false; nn];
    let mut trial_active = vec![false; nn];
    let mut trial = u.to_vec();
    let mut jac = asm.pattern.clone();
    asm.weak_residual(u, mode, &mut w);
    asm.density(&w, &mut r);
    project_residual(u, &mut r, m_ceiling, &mut active);
    let mut rmax = max_abs(&r);
    let mut rnorm = l2(&r);
    let mut dt = cfg.dt0;
    let mut steps = 0;
    let mut rejections = 0;
    let mut attempts = 0;
    while rmax > tol {
        if steps >= cfg.max_inner || attempts >= 4 * cfg.max_inner {
            return Ok(PtcOutcome { converged: false, steps, rejections, residual: rmax });
        }
        attempts += 1;
        asm.assemble(u, mode, mu, &mut w, &mut jac);
        let shift = asm.vol / dt;
        for i in 0..nn {
            let d = jac.diag_position(i);
            if active[i] {
                for p in jac.row_ptr[i]..jac.row_ptr[i + 1] {
                    jac.vals[p] = 0.0;
                }
                jac.vals[d] = 1.0;
                rhs[i] = 0.0;
            } else {
                if !asm.dirichlet[i] {
                    jac.vals[d] += shift;
                }
                rhs[i] = -w[i];
            }
            du[i] = 0.0;
        }
        let ilu = Ilu0::new(&jac)?;
        gmres(&jac, &ilu, &rhs, &mut du, cfg.linear_rtol, cfg.gmres_restart, cfg.linear_max_iter);
        for i in 0..nn {
            trial[i] = if asm.dirichlet[i] || active[i] { u[i] } else { (u[i] + du[i]).clamp(0.0, m_ceiling) };
        }
        asm.weak_residual(&trial, mode, &mut w);
        asm.density(&w, &mut r);
        project_residual(&trial, &mut r, m_ceiling, &mut trial_active);
        let tnorm = l2(&r);
        if !(tnorm <= cfg.reject_factor * rnorm) {
            rejections += 1;
            dt *= cfg.dt_shrink;
            if dt < 1e-300 {
                return Err(AlapError::NonConvergence { iterations: steps, residual: rmax });
            }
            continue;
        }
        u.copy_from_slice(&trial);
        active.copy_from_slice(&trial_active);
        steps += 1;
        let growth = if tnorm > 0.0 { (rnorm / tnorm).min(cfg.dt_growth_cap) } else { cfg.dt_growth_cap };
        dt = (dt * growth).min(cfg.dt_max);
        rnorm = tnorm;
        rmax = max_abs(&r);
    }
    Ok(PtcOutcome { converged: true, steps, rejections, residual: rmax })
}

fn mu_for(domain: &Domain, cfg: &SolverConfig) -> f64 {
    cfg.mu_rel * domain.m_ceiling() / domain.delta()
}

/// Boundary data on boundary nodes, zero inside.
pub fn boundary_vector(grid: &Grid, domain: &Domain) -> Vec<f64> {
    (0..grid.num_nodes())
        .map(|i| if grid.is_boundary_node(i) { domain.g(&grid.node_coord(i)[..grid.dim()]) } else { 0.0 })
        .collect()
}

/// Discrete harmonic extension of the boundary data, clamped into `[0, M]`.
pub fn harmonic_initial_guess(grid: &Grid, field: &FieldH, domain: &Domain) -> Result<Vec<f64>> {
    let lap = make_power(2.0)?;
    let asm = Assembler::new(grid, &lap, field);
    let mut u = boundary_vector(grid, domain);
    let zero = vec![0.0; grid.num_cells()];
    let mut w = vec![0.0; u.len()];
    let mut jac = asm.pattern.clone();
    asm.assemble(&u, ChiMode::Frozen(&zero), 0.0, &mut w, &mut jac);
    let rhs: Vec<f64> = w.iter().map(|v| -v).collect();
    let ilu = Ilu0::new(&jac)?;
    let mut du = vec![0.0; u.len()];
    let st = pcg(&jac, &ilu, &rhs, &mut du, 1e-12, 20 * u.len().max(100));
    if !st.converged {
        return Err(AlapError::NonConvergence { iterations: st.iterations, residual: st.rel_residual });
    }
    let m = domain.m_ceiling();
    for i in 0..u.len() {
        if !asm.dirichlet[i] {
            u[i] = (u[i] + du[i]).clamp(0.0, m);
        }
    }
    Ok(u)
}

/// Solves the equation at frozen `χ`; boundary values are taken from `u_init`.
pub fn solve_u_given_chi(
    grid: &Grid,
    profile: &Profile,
    field: &FieldH,
    domain: &Domain,
    chi: &[f64],
    config: &SolverConfig,
    u_init: &[f64],
) -> Result<Vec<f64>> {
    config.validate()?;
    if chi.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(AlapError::InvalidParameter("chi must lie in [0, 1]".into()));
    }
    let asm = Assembler::new(grid, profile, field);
    let mut u = u_init.to_vec();
    let out = ptc(&asm, &mut u, ChiMode::Frozen(chi), config.inner_tol, domain.m_ceiling(), mu_for(domain, config), config)?;
    if !out.converged {
        return Err(AlapError::NonConvergence { iterations: out.steps, residual: out.residual });
    }
    Ok(u)
}

fn l1_change(a: &[f64], b: &[f64], vol: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * vol
}

/// Solves the penalized problem; the report is returned even without convergence.
pub fn solve_problem_report(
    grid: &Grid,
    profile: &Profile,
    field: &FieldH,
    domain: &Domain,
    config: &SolverConfig,
) -> Result<(SolutionPair, SolveReport)> {
    config.validate()?;
    let eps_u = config.eps_u.unwrap_or_else(|| grid.default_eps_u(domain));
    let eps = config.eps.unwrap_or(4.0 * eps_u);
    let m = domain.m_ceiling();
    let mu = mu_for(domain, config);
    let asm = Assembler::new(grid, profile, field);
    let vol = asm.vol;
    let mut u = harmonic_initial_guess(grid, field, domain)?;
    let mut levels = Vec::new();
    let mut total = 0;
    let mut rejections = 0;
    let mut converged = false;
    let mut chi;
    let mut last_residual;
    match config.method {
        CouplingMethod::Coupled => {
            let mut e = config.eps_start.unwrap_or(m).max(eps);
            chi = asm.chi_field(&u, ChiMode::Penalized(e));
            loop {
                let last = e <= eps;
                let tol = if last { config.inner_tol } else { config.continuation_tol };
                let out = ptc(&asm, &mut u, ChiMode::Penalized(e), tol, m, mu, config)?;
                let new_chi = asm.chi_field(&u, ChiMode::Penalized(e));
                total += out.steps;
                rejections += out.rejections;
                levels.push(LevelRecord {
                    eps: e,
                    steps: out.steps,
                    rejections: out.rejections,
                    residual: out.residual,
                    chi_change: l1_change(&new_chi, &chi, vol),
                    energy: asm.energy(&u, &new_chi),
                });
                chi = new_chi;
                last_residual = out.residual;
                if !out.converged || levels.len() >= config.max_outer {
                    break;
                }
                if last {
                    converged = true;
                    break;
                }
                e = (e / config.continuation_factor).max(eps);
            }
        }
        CouplingMethod::Picard => {
            let rho = config.relaxation;
            chi = cell_center_chi(grid, &u, eps);
            loop {
                let out = ptc(&asm, &mut u, ChiMode::Frozen(&chi), config.inner_tol, m, mu, config)?;
                total += out.steps;
                rejections += out.rejections;
                let target = cell_center_chi(grid, &u, eps);
                let new_chi: Vec<f64> = chi.iter().zip(&target).map(|(c, t)| (1.0 - rho) * c + rho * t).collect();
                let change = l1_change(&new_chi, &chi, vol);
                chi = new_chi;
                last_residual = out.residual;
                levels.push(LevelRecord {
                    eps,
                    steps: out.steps,
                    rejections: out.rejections,
                    residual: out.residual,
                    chi_change: change,
                    energy: asm.energy(&u, &chi),
                });
                if !out.converged {
                    break;
                }
                if change <= config.outer_tol {
                    converged = true;
                    break;
                }
                if levels.len() >= config.max_outer {
                    break;
                }
            }
        }
    }
    let (bound_residual, bound_nodes) = {
        let mode = match config.method {
            CouplingMethod::Coupled => ChiMode::Penalized(levels.last().map_or(eps, |l| l.eps)),
            CouplingMethod::Picard => ChiMode::Frozen(&chi),
        };
        let mut w = vec![0.0; u.len()];
        let mut r = vec![0.0; u.len()];
        let mut active = vec![false; u.len()];
        asm.weak_residual(&u, mode, &mut w);
        asm.density(&w, &mut r);
        let raw = r.clone();
        project_residual(&u, &mut r, m, &mut active);
        let held: Vec<f64> = (0..u.len()).filter(|&i| active[i] && !asm.dirichlet[i]).map(|i| raw[i].abs()).collect();
        (held.iter().copied().fold(0.0, f64::max), held.len())
    };
    let pair = SolutionPair::new(u, chi, eps_u);
    let metrics = pair.metrics(grid, eps);
    let final_chi_change = levels.last().map_or(0.0, |l| l.chi_change);
    let report = SolveReport {
        converged,
        iterations: total,
        rejections,
        final_residual: last_residual,
        bound_residual,
        bound_nodes,
        final_chi_change,
        eps,
        eps_u,
        levels,
        metrics,
    };
    Ok((pair, report))
}

fn cell_center_chi(grid: &Grid, u: &[f64], eps: f64) -> Vec<f64> {
    let nc = grid.corners_per_cell();
    (0..grid.num_cells())
        .map(|c| {
            let nd = grid.cell_nodes(c);
            let avg = (0..nc).map(|q| u[nd[q]]).sum::<f64>() / nc as f64;
            (avg / eps).clamp(0.0, 1.0)
        })
        .collect()
}

/// Solves the penalized problem, failing with `NonConvergence` if the budget is exhausted.
pub fn solve_problem(
    grid: &Grid,
    profile: &Profile,
    field: &FieldH,
    domain: &Domain,
    config: &SolverConfig,
) -> Result<(SolutionPair, SolveReport)> {
    let (pair, report) = solve_problem_report(grid, profile, field, domain, config)?;
    if !report.converged {
        return Err(AlapError::NonConvergence { iterations: report.iterations, residual: report.final_residual });
    }
    Ok((pair, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{build_grid, BoundaryData, FaceName};
    use crate::vector_field::{make_affine_field, make_constant_field};

    fn dam(n: usize, p: f64) -> (Domain, Grid, Profile, FieldH) {
        let dom = Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap();
        let grid = build_grid(&dom, &[n, n]).unwrap();
        let prof = make_power(p).unwrap();
        let field = make_constant_field(&[0.0, prof.a(1.0)]).unwrap();
        (dom, grid, prof, field)
    }

    fn nodal(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.num_nodes()).map(|i| f(&grid.node_coord(i)[..grid.dim()])).collect()
    }

    #[test]
    fn residual_trivial_cases() {
        let (_, grid, prof, field) = dam(9, 3.0);
        let r = residual(&grid, &prof, &field, &vec![0.0; 81], &vec![0.0; 64]);
        assert!(r.iter().all(|v| *v == 0.0));
        let u = nodal(&grid, |x| 0.2 + 0.3 * x[0] - 0.5 * x[1]);
        let r = residual(&grid, &prof, &field, &u, &vec![1.0; 64]);
        assert!(max_abs(&r) < 1e-12);
    }

    #[test]
    fn residual_of_dam_profile_concentrates_at_interface() {
        let (_, grid, prof, field) = dam(41, 2.0);
        let u = nodal(&grid, |x| (0.6 - x[1]).max(0.0));
        let chi: Vec<f64> = (0..grid.num_cells()).map(|c| if grid.cell_center(c)[1] < 0.6 { 1.0 } else { 0.0 }).collect();
        let r = residual(&grid, &prof, &field, &u, &chi);
        let h = 1.0 / 40.0;
        for i in 0..grid.num_nodes() {
            let y = grid.node_coord(i)[1];
            if (y - 0.6).abs() > 1.5 * h {
                assert!(r[i].abs() < 1e-12, "y={y} r={}", r[i]);
            }
        }
        // the weak-form residual integrates to O(spacing) around the interface
        let total: f64 = r.iter().map(|v| v.abs()).sum::<f64>() * h * h;
        assert!(total < 2.0 * h);
    }

    #[test]
    fn energy_examples() {
        let (_, grid, _, field) = dam(9, 2.0);
        let p2 = make_power(2.0).unwrap();
        assert_eq!(energy(&grid, &p2, &field, &vec![0.0; 81], &vec![1.0; 64]), 0.0);
        let u = nodal(&grid, |x| x[0]);
        assert!((energy(&grid, &p2, &field, &u, &vec![0.0; 64]) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn residual_is_energy_gradient() {
        let (_, grid, prof, field) = dam(7, 3.0);
        let u = nodal(&grid, |x| (0.5 - x[1]).max(0.0) + 0.1 * x[0] * x[1]);
        let chi: Vec<f64> = (0..grid.num_cells()).map(|c| (c % 3) as f64 / 2.0).collect();
        let r = residual(&grid, &prof, &field, &u, &chi);
        let vol = grid.cell_volume();
        for i in 0..grid.num_nodes() {
            if grid.is_boundary_node(i) {
                continue;
            }
            let d = 1e-6;
            let mut up = u.clone();
            up[i] += d;
            let mut um = u.clone();
            um[i] -= d;
            let fd = (energy(&grid, &prof, &field, &up, &chi) - energy(&grid, &prof, &field, &um, &chi)) / (2.0 * d);
            assert!((fd + r[i] * vol).abs() < 1e-7, "node {i}: {fd} vs {}", -r[i] * vol);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for p in [2.0, 3.0, 1.5] {
            let (_, grid, prof, field) = dam(6, p);
            let u = nodal(&grid, |x| (0.55 - x[1]).max(0.0) + 0.05 * x[0] + 0.03 * x[0] * x[1]);
            let asm = Assembler::new(&grid, &prof, &field);
            let eps = 0.08;
            let mode = ChiMode::Penalized(eps);
            let mut w = vec![0.0; u.len()];
            let mut jac = asm.pattern.clone();
            asm.assemble(&u, mode, 0.0, &mut w, &mut jac);
            for j in 0..u.len() {
                if asm.dirichlet[j] {
                    continue;
                }
                let d = 1e-7;
                let mut up = u.clone();
                up[j] += d;
                let mut um = u.clone();
                um[j] -= d;
                let mut wp = vec![0.0; u.len()];
                let mut wm = vec![0.0; u.len()];
                asm.weak_residual(&up, mode, &mut wp);
                asm.weak_residual(&um, mode, &mut wm);
                for i in 0..u.len() {
                    if asm.dirichlet[i] {
                        continue;
                    }
                    let fd = (wp[i] - wm[i]) / (2.0 * d);
                    let an = asm.pattern.position(i, j).map_or(0.0, |q| jac.vals[q]);
                    assert!((fd - an).abs() < 1e-5 * (1.0 + fd.abs()), "p={p} ({i},{j}) fd={fd} an={an}");
                }
            }
        }
    }

    #[test]
    fn frozen_chi_trivial_solutions() {
        let dom = Domain::unit_box(2, &[FaceName::Bottom, FaceName::Top, FaceName::Left, FaceName::Right], BoundaryData::Constant { value: 0.0 }, 1.0).unwrap();
        let grid = build_grid(&dom, &[9, 9]).unwrap();
        let prof = make_power(3.0).unwrap();
        let field = make_constant_field(&[0.0, 1.0]).unwrap();
        let cfg = SolverConfig::default();
        let u = solve_u_given_chi(&grid, &prof, &field, &dom, &vec![0.0; 64], &cfg, &vec![0.0; 81]).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));

        let dom = Domain::unit_box(2, &[], BoundaryData::Constant { value: 1.0 }, 1.0).unwrap();
        let init = harmonic_initial_guess(&grid, &field, &dom).unwrap();
        let u = solve_u_given_chi(&grid, &prof, &field, &dom, &vec![1.0; 64], &cfg, &init).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-9));
        // p = 2 from a cold start
        let p2 = make_power(2.0).unwrap();
        let u = solve_u_given_chi(&grid, &p2, &field, &dom, &vec![1.0; 64], &cfg, &boundary_vector(&grid, &dom)).unwrap();
        assert!(u.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let dom = Domain::unit_box(2, &[FaceName::Top], BoundaryData::Constant { value: 0.0 }, 1.0).unwrap();
        let grid = build_grid(&dom, &[17, 17]).unwrap();
        let prof = make_power(2.0).unwrap();
        let field = make_constant_field(&[0.0, 1.0]).unwrap();
        let (pair, rep) = solve_problem(&grid, &prof, &field, &dom, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(pair.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn coupled_dam_small_grid() {
        for p in [2.0, 3.0] {
            let (dom, grid, prof, field) = dam(33, p);
            let (pair, rep) = solve_problem(&grid, &prof, &field, &dom, &SolverConfig::default()).unwrap();
            let err = (0..grid.num_nodes())
                .map(|i| (pair.u[i] - (0.6 - grid.node_coord(i)[1]).max(0.0)).abs())
                .fold(0.0, f64::max);
            assert!(err < 2.0 / 32.0, "p={p} err={err} {}", rep.summary());
            assert!(rep.metrics.u_min >= 0.0 && rep.metrics.u_max <= 1.0);
            assert!(rep.metrics.complementarity <= rep.eps);
            assert!(rep.final_residual <= 1e-9);
        }
    }

    #[test]
    fn affine_field_solve_converges() {
        let dom = Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap();
        let grid = build_grid(&dom, &[33, 33]).unwrap();
        let prof = make_power(2.0).unwrap();
        let field = make_affine_field(&[vec![0.1, 0.0], vec![0.0, 0.1]], &[0.0, 1.0], &dom).unwrap();
        let (_, rep) = solve_problem(&grid, &prof, &field, &dom, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
    }
}
