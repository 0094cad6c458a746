//! Characteristic orbits `X′ = H(X)`, the flow map `T_h` and its Jacobian determinant `Y_h`.

use std::collections::BTreeMap;

use crate::domain_grid::{Domain, Face};
use crate::error::{AlapError, Result};
use crate::quadrature::cumulative_simpson;
use crate::vector_field::FieldH;

/// Number of fixed RK4 steps per domain diameter (in orbit time).
pub const STEPS_PER_DIAMETER: f64 = 2048.0;
/// Default exit-time bisection tolerance, relative to δ(Ω).
pub const DEFAULT_EXIT_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 10_000_000;

fn rk4_step(field: &FieldH, x: &[f64], dt: f64) -> Vec<f64> {
    let n = x.len();
    let k1 = field.eval(x);
    let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k1[i]).collect();
    let k2 = field.eval(&y);
    let y: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * dt * k2[i]).collect();
    let k3 = field.eval(&y);
    let y: Vec<f64> = (0..n).map(|i| x[i] + dt * k3[i]).collect();
    let k4 = field.eval(&y);
    (0..n).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

/// Flows `x0` for time `t` with RK4 steps no longer than `max_dt`, ignoring the domain.
pub fn flow(field: &FieldH, x0: &[f64], t: f64, max_dt: f64) -> Vec<f64> {
    if t == 0.0 {
        return x0.to_vec();
    }
    let steps = (t.abs() / max_dt).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut x = x0.to_vec();
    for _ in 0..steps {
        x = rk4_step(field, &x, dt);
    }
    x
}

/// Integration step for a domain: δ(Ω)/2048.
pub fn orbit_step(domain: &Domain) -> f64 {
    domain.delta() / STEPS_PER_DIAMETER
}

/// An integral curve through `(ω, h)` between its two boundary exits.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub omega: Vec<f64>,
    pub h: f64,
    /// Ascending sample times: `α₋`, the fixed-step nodes, `α₊`.
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub alpha_minus: f64,
    pub alpha_plus: f64,
    pub exit_minus: Vec<f64>,
    pub exit_plus: Vec<f64>,
    pub face_minus: Face,
    pub face_plus: Face,
    /// Index of `t = 0` in `times`.
    pub origin: usize,
    pub step: f64,
    field: FieldH,
}

impl Orbit {
    pub fn base_point(&self) -> Vec<f64> {
        let mut x = self.omega.clone();
        x.push(self.h);
        x
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.alpha_minus && t <= self.alpha_plus
    }

    /// Dense output: one partial RK4 step from the closest stored sample at or before `t`.
    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        if !self.contains_time(t) {
            return Err(AlapError::DomainExit(format!(
                "t = {t} outside [{}, {}]",
                self.alpha_minus, self.alpha_plus
            )));
        }
        let j = match self.times.binary_search_by(|s| s.partial_cmp(&t).unwrap()) {
            Ok(j) => return Ok(self.points[j].clone()),
            Err(j) => j - 1,
        };
        Ok(rk4_step(&self.field, &self.points[j], t - self.times[j]))
    }

    /// Evenly spaced times strictly inside `(α₋, α₊)`. Endpoints are excluded because the
    /// exits lie on `∂Ω`, where interior statements no longer apply.
    pub fn uniform_times(&self, count: usize) -> Vec<f64> {
        let span = self.alpha_plus - self.alpha_minus;
        (0..count).map(|k| self.alpha_minus + span * (k as f64 + 0.5) / count as f64).collect()
    }
}

fn outside(domain: &Domain, x: &[f64]) -> bool {
    !domain.contains_closed(x)
}

/// Face crossed by `x` (the axis with the largest violation).
fn exit_face(domain: &Domain, x: &[f64]) -> Face {
    let mut best = (f64::NEG_INFINITY, Face { axis: 0, upper: false });
    for k in 0..x.len() {
        let lo = domain.lower()[k] - x[k];
        let hi = x[k] - domain.upper()[k];
        if lo > best.0 {
            best = (lo, Face { axis: k, upper: false });
        }
        if hi > best.0 {
            best = (hi, Face { axis: k, upper: true });
        }
    }
    best.1
}

fn clamp_to_box(domain: &Domain, x: &[f64]) -> Vec<f64> {
    x.iter().enumerate().map(|(k, v)| v.clamp(domain.lower()[k], domain.upper()[k])).collect()
}

/// Marches from `x0` with step `dt` (sign gives the direction) until the orbit leaves `Ω̄`;
/// returns the nodes and the bisected exit `(time, point, face)`.
#[allow(clippy::type_complexity)]
fn march(field: &FieldH, domain: &Domain, x0: &[f64], dt: f64, tol: f64) -> Result<(Vec<Vec<f64>>, f64, Vec<f64>, Face)> {
    let mut nodes = vec![x0.to_vec()];
    let mut x = x0.to_vec();
    for steps in 0..MAX_STEPS {
        let next = rk4_step(field, &x, dt);
        if outside(domain, &next) {
            // bisection of the exit time inside the last step
            let (mut lo, mut hi) = (0.0, 1.0);
            let dt_abs = dt.abs();
            while (hi - lo) * dt_abs > tol {
                let mid = 0.5 * (lo + hi);
                if outside(domain, &rk4_step(field, &x, mid * dt)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let raw = rk4_step(field, &x, hi * dt);
            let face = exit_face(domain, &raw);
            let t_exit = (steps as f64 + hi) * dt;
            return Ok((nodes, t_exit, clamp_to_box(domain, &raw), face));
        }
        nodes.push(next.clone());
        x = next;
    }
    Err(AlapError::StepFailure(MAX_STEPS as f64 * dt))
}

/// Integrates the orbit through `(ω, h)` forward and backward to both boundary exits.
/// `tol` is the exit-time bisection tolerance relative to δ(Ω).
pub fn integrate_orbit(field: &FieldH, omega: &[f64], h: f64, domain: &Domain, tol: f64) -> Result<Orbit> {
    let n = domain.dim();
    if omega.len() + 1 != n || field.dim() != n {
        return Err(AlapError::InvalidParameter(format!("ω must have {} components", n - 1)));
    }
    let mut x0 = omega.to_vec();
    x0.push(h);
    if !domain.contains_closed(&x0) {
        return Err(AlapError::OutOfRange(format!("base point {x0:?} outside the domain")));
    }
    let dt = orbit_step(domain);
    let btol = tol * domain.delta();
    let (fwd, t_plus, x_plus, f_plus) = march(field, domain, &x0, dt, btol)?;
    let (bwd, t_minus, x_minus, f_minus) = march(field, domain, &x0, -dt, btol)?;

    let mut times = Vec::with_capacity(fwd.len() + bwd.len() + 1);
    let mut points = Vec::with_capacity(times.capacity());
    times.push(t_minus);
    points.push(x_minus.clone());
    for k in (1..bwd.len()).rev() {
        times.push(-(k as f64) * dt);
        points.push(bwd[k].clone());
    }
    for (k, p) in fwd.iter().enumerate() {
        times.push(k as f64 * dt);
        points.push(p.clone());
    }
    times.push(t_plus);
    points.push(x_plus.clone());
    // a start on the boundary produces a zero-length exit; keep the times strictly ordered
    if times[0] >= times[1] {
        times.remove(0);
        points.remove(0);
    }
    let last = times.len() - 1;
    if times[last] <= times[last - 1] {
        times.pop();
        points.pop();
    }
    let origin = times.iter().position(|&t| t == 0.0).expect("the base point is always stored");
    Ok(Orbit {
        omega: omega.to_vec(),
        h,
        alpha_minus: times[0].min(0.0),
        alpha_plus: times[times.len() - 1].max(0.0),
        times,
        points,
        exit_minus: x_minus,
        exit_plus: x_plus,
        face_minus: f_minus,
        face_plus: f_plus,
        origin,
        step: dt,
        field: field.clone(),
    })
}

/// `Y_h(t, ω) = −H_n(ω, h)·exp(∫₀ᵗ div H(X(s)) ds)`, with the divergence integral accumulated by
/// composite Simpson over the stored fixed-step samples and a Simpson tail to `t`.
pub fn jacobian_analytic(field: &FieldH, orbit: &Orbit, t: f64) -> Result<f64> {
    if !orbit.contains_time(t) {
        return Err(AlapError::OutOfRange(format!("t = {t} outside the orbit interval")));
    }
    let n = field.dim();
    let hn = field.eval(&orbit.base_point())[n - 1];
    Ok(-hn * divergence_integral(field, orbit, t)?.exp())
}

fn divergence_integral(field: &FieldH, orbit: &Orbit, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let dt = orbit.step;
    // fixed-step nodes between 0 and t, in the direction of t
    let k = (t.abs() / dt).floor() as usize;
    let mut vals = Vec::with_capacity(k + 1);
    let sign = t.signum();
    for j in 0..=k {
        let idx = orbit.origin as isize + sign as isize * j as isize;
        if idx < 0 || idx as usize >= orbit.len() || (orbit.times[idx as usize] - sign * j as f64 * dt).abs() > 1e-12 * dt.max(1.0) {
            break;
        }
        vals.push(field.div(&orbit.points[idx as usize]));
    }
    let k = vals.len() - 1;
    let main = if k > 0 { *cumulative_simpson(&vals, dt).last().unwrap() } else { 0.0 };
    let tk = sign * k as f64 * dt;
    let tail = if (t - tk).abs() > 0.0 {
        let a = field.div(&orbit.position(tk)?);
        let m = field.div(&orbit.position(0.5 * (tk + t))?);
        let b = field.div(&orbit.position(t)?);
        (t - tk).abs() / 6.0 * (a + 4.0 * m + b)
    } else {
        0.0
    };
    Ok(sign * (main + tail))
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("dimension is 2 or 3"),
    }
}

/// Finite-difference determinant of `(t, ω) ↦ X(t, ω)` with columns ordered `(t, ω₁, …)`,
/// multiplied by the orientation sign `(−1)ⁿ` that makes it comparable with `Y_h`.
pub fn jacobian_numeric(field: &FieldH, omega: &[f64], h: f64, t: f64, domain: &Domain, fd_step: f64) -> Result<f64> {
    let n = domain.dim();
    if omega.len() + 1 != n {
        return Err(AlapError::InvalidParameter(format!("ω must have {} components", n - 1)));
    }
    let dt = orbit_step(domain);
    let mut x0 = omega.to_vec();
    x0.push(h);
    let xt = flow(field, &x0, t, dt);
    // matrix stored row-major: m[row][col]
    let mut m = vec![vec![0.0; n]; n];
    let ht = field.eval(&xt);
    for r in 0..n {
        m[r][0] = ht[r];
    }
    for i in 0..n - 1 {
        let mut xp = x0.clone();
        let mut xm = x0.clone();
        xp[i] += fd_step;
        xm[i] -= fd_step;
        let fp = flow(field, &xp, t, dt);
        let fm = flow(field, &xm, t, dt);
        for r in 0..n {
            m[r][i + 1] = (fp[r] - fm[r]) / (2.0 * fd_step);
        }
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * det(&m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianRow {
    pub orbit: usize,
    pub t: f64,
    pub neg_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub rows: Vec<JacobianRow>,
    pub min_neg_y: f64,
    pub max_neg_y: f64,
    pub h_lower: f64,
    pub h_upper: f64,
    /// `max(−Y_h)/h̄`, the measured upper constant.
    pub measured_c: f64,
    /// Forward-time (`t ≥ 0`) samples with `−Y_h < h_ − 1e−9`.
    pub lower_violations: usize,
    /// Backward-time samples below `h_`; reported only, since for `t < 0` and `div H > 0`
    /// the factor `exp(∫div H)` is below one and the lower bound need not hold.
    pub backward_below: usize,
    /// Samples where `−Y_h` decreased along an orbit although `div H ≥ 0`.
    pub monotone_violations: usize,
    pub pass: bool,
}

impl JacobianReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("orbit,t,neg_y\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e}\n", r.orbit, r.t, r.neg_y));
        }
        s
    }
}

/// Lower bound `−Y_h ≥ h_` on the forward samples (`t ≥ 0`) and monotonicity of `−Y_h` over all
/// stored samples of each orbit.
pub fn certify_jacobian_bounds(field: &FieldH, orbits: &[Orbit]) -> Result<JacobianReport> {
    let mut rows = Vec::new();
    let mut monotone_violations = 0;
    for (k, o) in orbits.iter().enumerate() {
        let mut prev = f64::NEG_INFINITY;
        for &t in &o.times {
            let neg_y = -jacobian_analytic(field, o, t)?;
            if neg_y < prev * (1.0 - 1e-12) {
                monotone_violations += 1;
            }
            prev = neg_y;
            rows.push(JacobianRow { orbit: k, t, neg_y });
        }
    }
    let min_neg_y = rows.iter().map(|r| r.neg_y).fold(f64::INFINITY, f64::min);
    let max_neg_y = rows.iter().map(|r| r.neg_y).fold(f64::NEG_INFINITY, f64::max);
    let h_lower = field.h_lower();
    let below = |r: &&JacobianRow| r.neg_y < h_lower - 1e-9;
    let lower_violations = rows.iter().filter(|r| r.t >= 0.0).filter(below).count();
    let backward_below = rows.iter().filter(|r| r.t < 0.0).filter(below).count();
    Ok(JacobianReport {
        rows,
        min_neg_y,
        max_neg_y,
        h_lower,
        h_upper: field.h_upper(),
        measured_c: max_neg_y / field.h_upper(),
        lower_violations,
        backward_below,
        monotone_violations,
        pass: lower_violations == 0 && monotone_violations == 0,
    })
}

/// `T_h(t, ω) = X(t, ω)`.
pub fn map_t_h(field: &FieldH, h: f64, t: f64, omega: &[f64], domain: &Domain) -> Result<Vec<f64>> {
    integrate_orbit(field, omega, h, domain, DEFAULT_EXIT_TOL)?.position(t)
}

/// Lazily realized `D_h` for one level: orbits are integrated on demand and memoized by `ω`.
#[derive(Debug, Clone)]
pub struct LevelMap<'a> {
    field: &'a FieldH,
    domain: &'a Domain,
    pub h: f64,
    cache: BTreeMap<Vec<u64>, Orbit>,
}

impl<'a> LevelMap<'a> {
    pub fn new(field: &'a FieldH, domain: &'a Domain, h: f64) -> Self {
        LevelMap { field, domain, h, cache: BTreeMap::new() }
    }

    pub fn orbit(&mut self, omega: &[f64]) -> Result<&Orbit> {
        let key: Vec<u64> = omega.iter().map(|v| v.to_bits()).collect();
        if !self.cache.contains_key(&key) {
            let o = integrate_orbit(self.field, omega, self.h, self.domain, DEFAULT_EXIT_TOL)?;
            self.cache.insert(key.clone(), o);
        }
        Ok(&self.cache[&key])
    }

    /// `(α₋(ω), α₊(ω))`.
    pub fn interval(&mut self, omega: &[f64]) -> Result<(f64, f64)> {
        let o = self.orbit(omega)?;
        Ok((o.alpha_minus, o.alpha_plus))
    }

    pub fn map(&mut self, t: f64, omega: &[f64]) -> Result<Vec<f64>> {
        self.orbit(omega)?.position(t)
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}
