//! Free-boundary diagnostics along characteristic orbits: monotonicity of `χ`, positivity
//! propagation, the graph functions `φ_h` and their lower semi-continuity.

use std::collections::VecDeque;

use crate::domain_grid::{gradient_at_faces, Domain, Grid, SolutionPair};
use crate::error::{AlapError, Result};
use crate::orbits::{integrate_orbit, Orbit, DEFAULT_EXIT_TOL};
use crate::vector_field::FieldH;

/// Bisection resolution for `φ_h`, relative to δ(Ω).
pub const PHI_TOL: f64 = 1e-10;

fn grid_contains(grid: &Grid, x: &[f64]) -> bool {
    let slack = 1e-12;
    (0..grid.dim()).all(|k| {
        let lo = grid.lower()[k];
        let hi = lo + grid.spacing()[k] * (grid.counts()[k] - 1) as f64;
        x[k] >= lo - slack * (hi - lo) && x[k] <= hi + slack * (hi - lo)
    })
}

/// `u` (multilinear) and `χ` (nearest cell) at the stored orbit samples.
pub fn sample_along_orbit(solution: &SolutionPair, grid: &Grid, orbit: &Orbit) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut us = Vec::with_capacity(orbit.len());
    let mut chis = Vec::with_capacity(orbit.len());
    for x in &orbit.points {
        if !grid_contains(grid, x) {
            return Err(AlapError::OutOfRange(format!("orbit sample {x:?} outside the grid")));
        }
        us.push(grid.interpolate(&solution.u, x));
        chis.push(solution.chi[grid.nearest_cell(x)]);
    }
    Ok((us, chis))
}

fn cell_diameter(grid: &Grid) -> f64 {
    grid.spacing().iter().map(|h| h * h).sum::<f64>().sqrt()
}

/// Arc length along the stored samples.
fn arc_lengths(orbit: &Orbit) -> Vec<f64> {
    let mut s = Vec::with_capacity(orbit.len());
    let mut acc = 0.0;
    s.push(0.0);
    for w in orbit.points.windows(2) {
        acc += w[0].iter().zip(&w[1]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        s.push(acc);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiMonotoneRow {
    pub orbit: usize,
    pub omega: Vec<f64>,
    /// `max χ(t₂) − χ(t₁)` over sample pairs at least one cell diameter apart with `t₁ < t₂`.
    pub max_increase: f64,
    pub t_from: f64,
    pub t_to: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiMonotoneReport {
    pub rows: Vec<ChiMonotoneRow>,
    pub tol: f64,
    pub worst: f64,
    pub violations: usize,
    pub pass: bool,
}

impl ChiMonotoneReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("orbit,omega,max_increase,t_from,t_to,pass\n");
        for r in &self.rows {
            let om: Vec<String> = r.omega.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&format!(
                "{},{},{:e},{:e},{:e},{}\n",
                r.orbit,
                om.join(";"),
                r.max_increase,
                r.t_from,
                r.t_to,
                r.max_increase <= self.tol
            ));
        }
        s
    }
}

/// Default tolerance for the `χ` monotonicity check: `2·eps_u/ε`. A cell whose exit-point
/// value lies within `eps_u` of zero can carry `χ` up to `eps_u/ε` without any upstream
/// counterpart; two such cells bound the spurious increase.
pub fn default_chi_tol(solution: &SolutionPair, eps: f64) -> f64 {
    2.0 * solution.eps_u / eps
}

/// Largest increase of `χ` along each orbit. Pairs closer than one cell diameter are skipped,
/// because nearest-cell sampling of a tilted interface produces a staircase at that scale.
pub fn certify_chi_monotone(solution: &SolutionPair, grid: &Grid, orbits: &[Orbit], tol: f64) -> Result<ChiMonotoneReport> {
    let lag = cell_diameter(grid);
    let mut rows = Vec::with_capacity(orbits.len());
    for (k, o) in orbits.iter().enumerate() {
        let (_, chi) = sample_along_orbit(solution, grid, o)?;
        let s = arc_lengths(o);
        let mut best = (0.0f64, o.times[0], o.times[0]);
        // running minimum over samples at least `lag` behind
        let mut j1 = 0;
        let mut min_val = f64::INFINITY;
        let mut min_t = o.times[0];
        for j2 in 0..chi.len() {
            while j1 < j2 && s[j2] - s[j1] >= lag {
                if chi[j1] < min_val {
                    min_val = chi[j1];
                    min_t = o.times[j1];
                }
                j1 += 1;
            }
            if min_val.is_finite() && chi[j2] - min_val > best.0 {
                best = (chi[j2] - min_val, min_t, o.times[j2]);
            }
        }
        rows.push(ChiMonotoneRow { orbit: k, omega: o.omega.clone(), max_increase: best.0, t_from: best.1, t_to: best.2 });
    }
    let worst = rows.iter().map(|r| r.max_increase).fold(0.0, f64::max);
    let violations = rows.iter().filter(|r| r.max_increase > tol).count();
    Ok(ChiMonotoneReport { rows, tol, worst, violations, pass: violations == 0 })
}

/// `φ_h` on an already integrated orbit: the last time with `u∘T_h > eps_u`, refined by bisection
/// between the last positive and the first nonpositive sample after it. Returns `α₋` when no
/// sample is positive.
pub fn phi_on_orbit(solution: &SolutionPair, grid: &Grid, orbit: &Orbit, domain: &Domain) -> Result<f64> {
    let (us, _) = sample_along_orbit(solution, grid, orbit)?;
    let thr = solution.eps_u;
    let Some(j) = us.iter().rposition(|&v| v > thr) else {
        return Ok(orbit.alpha_minus);
    };
    if j == us.len() - 1 {
        return Ok(orbit.alpha_plus);
    }
    let (mut lo, mut hi) = (orbit.times[j], orbit.times[j + 1]);
    let res = PHI_TOL * domain.delta();
    while hi - lo > res {
        let mid = 0.5 * (lo + hi);
        if grid.interpolate(&solution.u, &orbit.position(mid)?) > thr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `φ_h(ω)` for the orbit through `(ω, h)`.
pub fn phi_h(solution: &SolutionPair, grid: &Grid, field: &FieldH, h: f64, omega: &[f64], domain: &Domain) -> Result<f64> {
    let orbit = integrate_orbit(field, omega, h, domain, DEFAULT_EXIT_TOL)?;
    phi_on_orbit(solution, grid, &orbit, domain)
}

/// `φ_h` sampled on an `ω` grid with per-point flags.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryGraph {
    pub h: f64,
    pub omegas: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub alpha_plus: Vec<f64>,
    /// No positive sample: `φ_h = α₋`.
    pub set_empty: Vec<bool>,
    /// `T_h(φ_h(ω), ω) ∈ ∂Ω`.
    pub boundary_touching: Vec<bool>,
    /// Samples contradicting `{u∘T_h > eps_u} = {t < φ_h}` away from one step of `φ_h`.
    pub identity_violations: Vec<usize>,
    /// Orbit time step.
    pub step: f64,
    /// Index shape of the `ω` grid (one entry per cross-section axis).
    pub shape: Vec<usize>,
}

impl FreeBoundaryGraph {
    pub fn total_identity_violations(&self) -> usize {
        self.identity_violations.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let k = self.omegas.first().map_or(1, |o| o.len());
        let mut s: String = (1..=k).map(|i| format!("omega{i},")).collect();
        s.push_str("phi,alpha_minus,alpha_plus,set_empty,boundary_touching,identity_violations\n");
        for i in 0..self.phi.len() {
            for v in &self.omegas[i] {
                s.push_str(&format!("{v:e},"));
            }
            s.push_str(&format!(
                "{:e},{:e},{:e},{},{},{}\n",
                self.phi[i],
                self.alpha_minus[i],
                self.alpha_plus[i],
                self.set_empty[i],
                self.boundary_touching[i],
                self.identity_violations[i]
            ));
        }
        s
    }
}

/// Uniform tensor grid of cross-section points strictly inside the box: `count` points per axis
/// at cell midpoints.
pub fn omega_grid(domain: &Domain, count: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = domain.dim();
    let axes: Vec<Vec<f64>> = (0..n - 1)
        .map(|k| {
            let (lo, hi) = (domain.lower()[k], domain.upper()[k]);
            (0..count).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / count as f64).collect()
        })
        .collect();
    let mut out = Vec::new();
    if n == 2 {
        for &a in &axes[0] {
            out.push(vec![a]);
        }
    } else {
        // first axis fastest
        for &b in &axes[1] {
            for &a in &axes[0] {
                out.push(vec![a, b]);
            }
        }
    }
    (out, vec![count; n - 1])
}

fn on_boundary(domain: &Domain, x: &[f64]) -> bool {
    let tol = 1e-9 * domain.delta();
    (0..x.len()).any(|k| (x[k] - domain.lower()[k]).abs() <= tol || (x[k] - domain.upper()[k]).abs() <= tol)
}

/// Extracts `φ_h` on the given `ω` grid and checks the level-set identity per `ω`.
pub fn extract_graph(
    solution: &SolutionPair,
    grid: &Grid,
    field: &FieldH,
    h: f64,
    omegas: &[Vec<f64>],
    shape: &[usize],
    domain: &Domain,
) -> Result<FreeBoundaryGraph> {
    let mut g = FreeBoundaryGraph {
        h,
        omegas: omegas.to_vec(),
        phi: Vec::with_capacity(omegas.len()),
        alpha_minus: Vec::new(),
        alpha_plus: Vec::new(),
        set_empty: Vec::new(),
        boundary_touching: Vec::new(),
        identity_violations: Vec::new(),
        step: 0.0,
        shape: shape.to_vec(),
    };
    for omega in omegas {
        let orbit = integrate_orbit(field, omega, h, domain, DEFAULT_EXIT_TOL)?;
        g.step = orbit.step;
        let phi = phi_on_orbit(solution, grid, &orbit, domain)?;
        let (us, _) = sample_along_orbit(solution, grid, &orbit)?;
        let empty = us.iter().all(|&v| v <= solution.eps_u);
        let touching = on_boundary(domain, &orbit.position(phi)?);
        let mut bad = 0;
        for (t, v) in orbit.times.iter().zip(&us) {
            if *t < phi - orbit.step && *v <= solution.eps_u {
                bad += 1;
            }
            if *t > phi + orbit.step && *v > solution.eps_u {
                bad += 1;
            }
        }
        g.phi.push(phi);
        g.alpha_minus.push(orbit.alpha_minus);
        g.alpha_plus.push(orbit.alpha_plus);
        g.set_empty.push(empty);
        g.boundary_touching.push(touching);
        g.identity_violations.push(bad);
    }
    Ok(g)
}

/// Default lsc tolerance: `2·(orbit step) + spacing·max|∇u|/h_`. The second term converts the
/// `u` interpolation error into an orbit-time error through the transversality `H_n ≥ h_`.
pub fn default_lsc_tol(solution: &SolutionPair, grid: &Grid, field: &FieldH, step: f64) -> f64 {
    let grads = gradient_at_faces(grid, &solution.u);
    let mut gmax: f64 = 0.0;
    for c in 0..grads.num_cells() {
        for q in 0..grid.corners_per_cell() {
            let g = grads.get(c, q);
            gmax = gmax.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    2.0 * step + grid.max_spacing() * gmax / field.h_lower()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LscRow {
    pub index: usize,
    pub omega: Vec<f64>,
    pub phi: f64,
    /// Extrapolated deficit `φ(ω) − liminf φ(ω′)`; positive values indicate an upward jump.
    pub deficit: f64,
    pub excluded: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LscReport {
    pub rows: Vec<LscRow>,
    pub tol: f64,
    pub checked: usize,
    pub excluded: usize,
    pub failures: usize,
    pub pass: bool,
}

impl LscReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,omega,phi,deficit,excluded,pass\n");
        for r in &self.rows {
            let om: Vec<String> = r.omega.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&format!("{},{},{:e},{:e},{},{}\n", r.index, om.join(";"), r.phi, r.deficit, r.excluded, r.pass));
        }
        s
    }
}

/// Discrete lower semi-continuity of `φ_h` at every interior grid point `ω` whose graph point lies
/// inside `Ω`. `phi_at` evaluates `φ_h` at arbitrary cross-section points; it is probed at
/// `ω ± Δ/2ᵏ` (k = 1, 2, 3) along every cross-section axis, where `Δ` is the `ω` spacing.
///
/// With `m_k` the smallest probe value at distance `Δ/2ᵏ`, the deficits `d_k = φ(ω) − m_k` shrink
/// geometrically for a continuous graph, while an upward jump keeps them constant. The liminf
/// deficit is extrapolated as `2·d₃ − d₂`, and the check is `max(d₃ − (d₂ − d₃), 0) ≤ tol`.
pub fn certify_lsc<F: Fn(&[f64]) -> Result<f64>>(graph: &FreeBoundaryGraph, tol: f64, phi_at: F) -> Result<LscReport> {
    let k = graph.shape.len();
    let spacing: Vec<f64> = (0..k)
        .map(|a| {
            let stride: usize = graph.shape[..a].iter().product();
            if graph.shape[a] > 1 {
                graph.omegas[stride][a] - graph.omegas[0][a]
            } else {
                0.0
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(graph.phi.len());
    for i in 0..graph.phi.len() {
        let mut idx = i;
        let mut interior = true;
        for a in 0..k {
            let c = idx % graph.shape[a];
            idx /= graph.shape[a];
            if c == 0 || c + 1 == graph.shape[a] {
                interior = false;
            }
        }
        let excluded = !interior || graph.boundary_touching[i] || graph.set_empty[i];
        let phi = graph.phi[i];
        let mut deficit = 0.0;
        if !excluded {
            let mut d = [0.0f64; 4];
            for (lvl, dk) in d.iter_mut().enumerate().skip(1) {
                let mut m = f64::INFINITY;
                for a in 0..k {
                    for sgn in [-1.0, 1.0] {
                        let mut w = graph.omegas[i].clone();
                        w[a] += sgn * spacing[a] / f64::powi(2.0, lvl as i32);
                        m = m.min(phi_at(&w)?);
                    }
                }
                *dk = phi - m;
            }
            deficit = (2.0 * d[3] - d[2]).max(0.0);
        }
        rows.push(LscRow { index: i, omega: graph.omegas[i].clone(), phi, deficit, excluded, pass: excluded || deficit <= tol });
    }
    let checked = rows.iter().filter(|r| !r.excluded).count();
    let excluded = rows.len() - checked;
    let failures = rows.iter().filter(|r| !r.pass).count();
    Ok(LscReport { rows, tol, checked, excluded, failures, pass: failures == 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationReport {
    pub orbits: usize,
    /// Orbits that reach `u ≤ eps_u` somewhere.
    pub reached_dry: usize,
    pub violations: usize,
    pub worst_excess: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Once `u∘T_h ≤ eps_u` at some sample `t₀`, every later sample must stay `≤ eps_u + tol`.
pub fn positivity_propagation(solution: &SolutionPair, grid: &Grid, orbits: &[Orbit], tol: f64) -> Result<PropagationReport> {
    let thr = solution.eps_u;
    let mut reached = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for o in orbits {
        let (us, _) = sample_along_orbit(solution, grid, o)?;
        if let Some(j0) = us.iter().position(|&v| v <= thr) {
            reached += 1;
            for &v in &us[j0..] {
                if v > thr + tol {
                    violations += 1;
                    worst = worst.max(v - thr);
                }
            }
        }
    }
    Ok(PropagationReport { orbits: orbits.len(), reached_dry: reached, violations, worst_excess: worst, tol, pass: violations == 0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport {
    pub wet_components: usize,
    /// Connected dry components (nodes with `u ≤ eps_u`) not touching `∂Ω`: interior zeros
    /// enclosed by positivity.
    pub interior_dry_components: usize,
    pub interior_dry_nodes: usize,
    pub pass: bool,
}

fn components(grid: &Grid, mask: &[bool]) -> Vec<Vec<usize>> {
    let n = grid.dim();
    let counts = grid.counts();
    let strides = grid.strides();
    let mut label = vec![usize::MAX; mask.len()];
    let mut comps = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let m = grid.node_multi(i);
            for k in 0..n {
                if m[k] > 0 {
                    let j = i - strides[k];
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
                if m[k] + 1 < counts[k] {
                    let j = i + strides[k];
                    if mask[j] && label[j] == usize::MAX {
                        label[j] = id;
                        queue.push_back(j);
                    }
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Strong maximum principle diagnostic: with `div H ≥ 0` the wet set has no enclosed dry holes.
pub fn strong_max_principle_check(solution: &SolutionPair, grid: &Grid) -> MaxPrincipleReport {
    let wet: Vec<bool> = solution.u.iter().map(|&v| v > solution.eps_u).collect();
    let dry: Vec<bool> = wet.iter().map(|w| !w).collect();
    let wet_components = components(grid, &wet).len();
    let holes: Vec<Vec<usize>> =
        components(grid, &dry).into_iter().filter(|c| c.iter().all(|&i| !grid.is_boundary_node(i))).collect();
    let interior_dry_nodes = holes.iter().map(|c| c.len()).sum();
    MaxPrincipleReport { wet_components, interior_dry_components: holes.len(), interior_dry_nodes, pass: holes.is_empty() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{build_grid, BoundaryData, FaceName};
    use crate::vector_field::make_constant_field;

    fn dam_pair(n: usize) -> (Domain, Grid, SolutionPair) {
        let d = Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap();
        let g = build_grid(&d, &[n, n]).unwrap();
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| (0.6 - g.node_coord(i)[1]).max(0.0)).collect();
        let chi: Vec<f64> = (0..g.num_cells()).map(|c| if g.cell_center(c)[1] < 0.6 { 1.0 } else { 0.0 }).collect();
        let eps_u = g.default_eps_u(&d);
        (d, g, SolutionPair::new(u, chi, eps_u))
    }

    #[test]
    fn samples_of_exact_dam_profile() {
        let (d, g, s) = dam_pair(51);
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let o = integrate_orbit(&f, &[0.5], 0.3, &d, DEFAULT_EXIT_TOL).unwrap();
        let (us, chis) = sample_along_orbit(&s, &g, &o).unwrap();
        for (x, v) in o.points.iter().zip(&us) {
            assert!((v - (0.6 - x[1]).max(0.0)).abs() < 1e-12);
        }
        assert!(chis.iter().all(|c| (0.0..=1.0).contains(c)));
        let rep = certify_chi_monotone(&s, &g, &[o.clone()], 1e-12).unwrap();
        assert!(rep.pass);
        let phi = phi_on_orbit(&s, &g, &o, &d).unwrap();
        assert!((phi - 0.3).abs() < 2.0 / 50.0);
        let prop = positivity_propagation(&s, &g, &[o], s.eps_u).unwrap();
        assert!(prop.pass && prop.reached_dry == 1);
    }

    #[test]
    fn adversarial_chi_step_is_detected() {
        let (d, g, mut s) = dam_pair(51);
        for c in 0..g.num_cells() {
            let y = g.cell_center(c)[1];
            s.chi[c] = if y < 0.3 { 0.0 } else { 1.0 };
        }
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let o = integrate_orbit(&f, &[0.5], 0.5, &d, DEFAULT_EXIT_TOL).unwrap();
        let rep = certify_chi_monotone(&s, &g, &[o], 0.1).unwrap();
        assert!(!rep.pass && rep.worst == 1.0);
    }

    #[test]
    fn trivial_phi_cases() {
        let (d, g, mut s) = dam_pair(21);
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let o = integrate_orbit(&f, &[0.5], 0.5, &d, DEFAULT_EXIT_TOL).unwrap();
        s.u.iter_mut().for_each(|v| *v = 1.0);
        assert_eq!(phi_on_orbit(&s, &g, &o, &d).unwrap(), o.alpha_plus);
        s.u.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(phi_on_orbit(&s, &g, &o, &d).unwrap(), o.alpha_minus);
    }

    #[test]
    fn rewetting_bump_violates_propagation() {
        let (d, g, mut s) = dam_pair(41);
        for i in 0..g.num_nodes() {
            let x = g.node_coord(i);
            if (x[1] - 0.85).abs() < 0.06 {
                s.u[i] = 0.2;
            }
        }
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let o = integrate_orbit(&f, &[0.5], 0.5, &d, DEFAULT_EXIT_TOL).unwrap();
        assert!(!positivity_propagation(&s, &g, &[o], s.eps_u).unwrap().pass);
        // the bump is not enclosed by wet nodes, so it is no max-principle hole
        assert!(strong_max_principle_check(&s, &g).pass);
    }

    fn jump_graph(value_at_jump: f64) -> (FreeBoundaryGraph, impl Fn(&[f64]) -> Result<f64>) {
        let count = 11;
        let omegas: Vec<Vec<f64>> = (0..count).map(|i| vec![i as f64 / 10.0]).collect();
        let f = move |w: &[f64]| -> Result<f64> {
            Ok(if (w[0] - 0.5).abs() < 1e-12 {
                value_at_jump
            } else if w[0] < 0.5 {
                0.2
            } else {
                0.4
            })
        };
        let phi: Vec<f64> = omegas.iter().map(|w| f(w).unwrap()).collect();
        let g = FreeBoundaryGraph {
            h: 0.0,
            omegas,
            phi,
            alpha_minus: vec![-1.0; count],
            alpha_plus: vec![1.0; count],
            set_empty: vec![false; count],
            boundary_touching: vec![false; count],
            identity_violations: vec![0; count],
            step: 1e-3,
            shape: vec![count],
        };
        (g, f)
    }

    #[test]
    fn lsc_detector_on_jumps() {
        let (g, f) = jump_graph(0.2);
        assert!(certify_lsc(&g, 1e-6, f).unwrap().pass);
        let (g, f) = jump_graph(0.4);
        let rep = certify_lsc(&g, 1e-6, f).unwrap();
        assert!(!rep.pass && rep.failures == 1);
        // a sloped continuous graph passes
        let (mut g, _) = jump_graph(0.0);
        let slope = |w: &[f64]| -> Result<f64> { Ok(0.3 + 0.7 * w[0]) };
        g.phi = g.omegas.iter().map(|w| slope(w).unwrap()).collect();
        assert!(certify_lsc(&g, 1e-9, slope).unwrap().pass);
    }

    #[test]
    fn enclosed_hole_is_reported() {
        let (_, g, mut s) = dam_pair(41);
        let centre = g.node_index(&[20, 10]);
        s.u[centre] = 0.0;
        let rep = strong_max_principle_check(&s, &g);
        assert!(!rep.pass && rep.interior_dry_nodes == 1);
    }
}
