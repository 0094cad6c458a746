//! Explicit comparison functions and certification of their differential inequalities.
//!
//! Three barriers are provided:
//! - [`RadialBarrier`], the interior subsolution used for the growth bound near the free boundary;
//! - [`HopfBarrier`], the ring subsolution behind the boundary point lemma;
//! - [`BoundaryBarrier`], the supersolution built from the profile `ϑ` near the Dirichlet part `T`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AlapError, Result};
use crate::profiles::{norm, Profile};
use crate::quadrature::adaptive_simpson;
use crate::vector_field::FieldH;

/// Pass threshold for the sampled inequalities.
pub const MARGIN_TOL: f64 = 1e-10;

/// `c·(exp(−α|x−x₀|²) − exp(−α·ρ_out²))` with its exact derivatives.
#[derive(Debug, Clone)]
struct GaussBump {
    center: Vec<f64>,
    scale: f64,
    alpha: f64,
    outer: f64,
}

impl GaussBump {
    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| a - b).collect()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = norm(&self.offset(x));
        self.scale * ((-self.alpha * d * d).exp() - (-self.alpha * self.outer * self.outer).exp())
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let d = self.offset(x);
        let rho2: f64 = d.iter().map(|v| v * v).sum();
        let f = -2.0 * self.alpha * self.scale * (-self.alpha * rho2).exp();
        d.iter().map(|v| f * v).collect()
    }

    /// `(∇v, Δv, Σ v_i v_j v_ij)`.
    fn derivatives(&self, x: &[f64]) -> (Vec<f64>, f64, f64) {
        let d = self.offset(x);
        let n = d.len() as f64;
        let rho2: f64 = d.iter().map(|v| v * v).sum();
        let e = (-self.alpha * rho2).exp();
        let c = 2.0 * self.alpha * self.scale;
        let grad: Vec<f64> = d.iter().map(|v| -c * e * v).collect();
        let lap = -c * e * (n - 2.0 * self.alpha * rho2);
        let contraction = -(c * c * c) * rho2 * e * e * e * (1.0 - 2.0 * self.alpha * rho2);
        (grad, lap, contraction)
    }
}

/// `Δ_A v` from the gradient, Laplacian and Hessian contraction `Σ v_i v_j v_ij`:
/// `a(G)/G³ · {G² Δv + (G a′(G)/a(G) − 1) Σ}` with `G = |∇v|`.
pub fn delta_a_from_derivatives(profile: &Profile, grad: &[f64], lap: f64, contraction: f64) -> f64 {
    let g = norm(grad);
    if g == 0.0 {
        return 0.0;
    }
    let a = profile.a(g);
    a / g * lap + a * (profile.ratio(g) - 1.0) * contraction / (g * g * g)
}

/// Central-difference divergence of `flux(grad(x))` with step `h`.
pub fn delta_a_fd<G: Fn(&[f64]) -> Vec<f64>>(profile: &Profile, grad: G, x: &[f64], h: f64) -> f64 {
    let mut xp = x.to_vec();
    let mut total = 0.0;
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = profile.flux(&grad(&xp))[i];
        xp[i] = x[i] - h;
        let fm = profile.flux(&grad(&xp))[i];
        xp[i] = x[i];
        total += (fp - fm) / (2.0 * h);
    }
    total
}

/// Least-squares slope of `log err` against `log h`.
pub fn loglog_slope(hs: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// One sampled evaluation of a barrier inequality `lhs ≥ rhs` (margin `lhs − rhs`).
#[derive(Debug, Clone, PartialEq)]
pub struct CertRow {
    pub barrier: String,
    pub sample: usize,
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CertReport {
    pub rows: Vec<CertRow>,
    pub min_margin: f64,
    pub failures: usize,
    pub pass: bool,
}

impl CertReport {
    fn from_rows(rows: Vec<CertRow>) -> Self {
        let min_margin = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
        let failures = rows.iter().filter(|r| !r.pass).count();
        CertReport { rows, min_margin, failures, pass: failures == 0 }
    }

    pub fn merge(reports: Vec<CertReport>) -> Self {
        Self::from_rows(reports.into_iter().flat_map(|r| r.rows).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("barrier,sample,lhs,rhs,margin,pass\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:e},{:e},{:e},{}\n", r.barrier, r.sample, r.lhs, r.rhs, r.margin, r.pass));
        }
        s
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(AlapError::InvalidParameter(format!("barriers are defined for n ∈ {{2, 3}}, got {n}")))
    }
}

/// Interior barrier `v = k(e^{−αρ²} − e^{−α(r+ε)²})` on the ring `r/2 ≤ ρ ≤ r+ε`.
#[derive(Debug, Clone)]
pub struct RadialBarrier {
    pub center: Vec<f64>,
    pub r: f64,
    pub eps: f64,
    pub m: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub k: f64,
    bump: GaussBump,
}

impl RadialBarrier {
    /// Barrier with the canonical `κ = 2(1 + n/a₀)`.
    pub fn new(center: &[f64], r: f64, eps: f64, m: f64, profile: &Profile) -> Result<Self> {
        let n = center.len();
        Self::with_kappa(center, r, eps, m, canonical_kappa(profile, n))
    }

    /// Barrier with an arbitrary `κ > 0`; used to probe the sharpness of the canonical choice.
    pub fn with_kappa(center: &[f64], r: f64, eps: f64, m: f64, kappa: f64) -> Result<Self> {
        check_dim(center.len())?;
        if !(r > 0.0) || !(eps > 0.0 && eps < r) || !(m >= 0.0) || !(kappa > 0.0) {
            return Err(AlapError::InvalidParameter(format!(
                "radial barrier needs r > 0, 0 < ε < r, m ≥ 0, κ > 0 (r={r}, ε={eps}, m={m}, κ={kappa})"
            )));
        }
        let alpha = kappa / (r * r);
        let outer = r + eps;
        let k = m / ((-alpha * r * r / 4.0).exp() - (-alpha * outer * outer).exp());
        let bump = GaussBump { center: center.to_vec(), scale: k, alpha, outer };
        Ok(RadialBarrier { center: center.to_vec(), r, eps, m, kappa, alpha, k, bump })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn inner_radius(&self) -> f64 {
        self.r / 2.0
    }

    pub fn outer_radius(&self) -> f64 {
        self.r + self.eps
    }

    fn rho(&self, x: &[f64]) -> f64 {
        norm(&self.bump.offset(x))
    }

    fn check_ring(&self, x: &[f64]) -> Result<f64> {
        let rho = self.rho(x);
        let slack = 1e-12 * self.outer_radius();
        if rho < self.inner_radius() - slack || rho > self.outer_radius() + slack {
            return Err(AlapError::OutOfRange(format!(
                "ρ = {rho} outside [{}, {}]",
                self.inner_radius(),
                self.outer_radius()
            )));
        }
        Ok(rho)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_ring(x)?;
        Ok(self.bump.value(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.bump.gradient(x)
    }
}

/// `κ = 2(1 + n/a₀)`.
pub fn canonical_kappa(profile: &Profile, n: usize) -> f64 {
    2.0 * (1.0 + n as f64 / profile.a0())
}

/// `Δ_A v` for the radial barrier from its closed-form derivatives.
pub fn delta_a_radial_closed_form(b: &RadialBarrier, profile: &Profile, x: &[f64]) -> Result<f64> {
    b.check_ring(x)?;
    let (grad, lap, contraction) = b.bump.derivatives(x);
    Ok(delta_a_from_derivatives(profile, &grad, lap, contraction))
}

/// Central-difference oracle for [`delta_a_radial_closed_form`].
pub fn delta_a_radial_fd(b: &RadialBarrier, profile: &Profile, x: &[f64], h: f64) -> f64 {
    delta_a_fd(profile, |y| b.bump.gradient(y), x, h)
}

/// Checks `Δ_A v ≥ a(|∇v|)/ρ` at every sample.
pub fn certify_radial_inequality(b: &RadialBarrier, profile: &Profile, samples: &[Vec<f64>]) -> Result<CertReport> {
    let id = format!("radial[{},n={},kappa={:.4}]", profile.name(), b.dim(), b.kappa);
    let mut rows = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        let lhs = delta_a_radial_closed_form(b, profile, x)?;
        let rhs = profile.a(norm(&b.gradient(x))) / b.rho(x);
        let margin = lhs - rhs;
        rows.push(CertRow { barrier: id.clone(), sample: i, point: x.clone(), lhs, rhs, margin, pass: margin >= -MARGIN_TOL });
    }
    Ok(CertReport::from_rows(rows))
}

/// Lipschitz constant when `θ(r) ≤ 0`: `a⁻¹(h̄·δ)·(e^{3κ/4} − 1)/κ`.
pub fn lipschitz_constant_theta_nonpos(profile: &Profile, n: usize, h_bar: f64, delta: f64) -> f64 {
    let kappa = canonical_kappa(profile, n);
    profile.a_inv(h_bar * delta) * ((0.75 * kappa).exp() - 1.0) / kappa
}

/// Lipschitz constant when `θ(r) > 0`: `a⁻¹(h̄)·(e^{3κ/4} − 1)/(2κ)`.
pub fn lipschitz_constant_theta_pos(profile: &Profile, n: usize, h_bar: f64) -> f64 {
    let kappa = canonical_kappa(profile, n);
    profile.a_inv(h_bar) * ((0.75 * kappa).exp() - 1.0) / (2.0 * kappa)
}

/// `θ(r) = a(2κ/r² · m e^{−κ(r+ε)²/r²}/(e^{−κ/4} − e^{−κ(r+ε)²/r²}) · r/2)/(r+ε) − h̄`.
pub fn theta_r(b: &RadialBarrier, profile: &Profile, h_bar: f64) -> f64 {
    let (r, kappa) = (b.r, b.kappa);
    let outer = b.outer_radius();
    let e_out = (-kappa * outer * outer / (r * r)).exp();
    let arg = 2.0 * kappa / (r * r) * b.m * e_out / ((-kappa / 4.0).exp() - e_out) * r / 2.0;
    profile.a(arg) / outer - h_bar
}

/// Ring barrier `v = e^{−αr²} − e^{−αR²}`, `α = 4κ/R²`, on `R/2 < r < R`.
#[derive(Debug, Clone)]
pub struct HopfBarrier {
    pub center: Vec<f64>,
    pub radius: f64,
    pub kappa: f64,
    pub alpha: f64,
    bump: GaussBump,
}

/// The admissible open interval `(1/2, 2(1 + (n−2)/a₀))` for the ring exponent `κ`.
pub fn hopf_kappa_interval(profile: &Profile, n: usize) -> (f64, f64) {
    (0.5, 2.0 * (1.0 + (n as f64 - 2.0) / profile.a0()))
}

/// Smallest `κ` for which `n − 1 + a₀(1 − 2κ) ≤ −1`, i.e. the inequality holds at `r = R/2`
/// for every profile with ellipticity exponent `a₀`: `κ ≥ (1 + n/a₀)/2`.
pub fn hopf_kappa_sufficient(profile: &Profile, n: usize) -> f64 {
    0.5 * (1.0 + n as f64 / profile.a0())
}

impl HopfBarrier {
    pub fn new(center: &[f64], radius: f64, kappa: f64, profile: &Profile) -> Result<Self> {
        let n = center.len();
        check_dim(n)?;
        let (lo, hi) = hopf_kappa_interval(profile, n);
        if !(radius > 0.0) || !(kappa > lo && kappa < hi) {
            return Err(AlapError::InvalidParameter(format!(
                "Hopf barrier needs R > 0 and κ ∈ ({lo}, {hi}) (R={radius}, κ={kappa})"
            )));
        }
        let alpha = 4.0 * kappa / (radius * radius);
        let bump = GaussBump { center: center.to_vec(), scale: 1.0, alpha, outer: radius };
        Ok(HopfBarrier { center: center.to_vec(), radius, kappa, alpha, bump })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn r(&self, x: &[f64]) -> f64 {
        norm(&self.bump.offset(x))
    }

    fn check_ring(&self, x: &[f64]) -> Result<f64> {
        let r = self.r(x);
        if !(r > self.radius / 2.0 && r < self.radius) {
            return Err(AlapError::OutOfRange(format!("r = {r} outside ({}, {})", self.radius / 2.0, self.radius)));
        }
        Ok(r)
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_ring(x)?;
        Ok(self.bump.value(x))
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.bump.gradient(x)
    }

    /// `∂v/∂ν = −2αR e^{−αR²}` on the outer sphere.
    pub fn outer_normal_derivative(&self) -> f64 {
        let r = self.radius;
        -2.0 * self.alpha * r * (-self.alpha * r * r).exp()
    }
}

/// `Δ_A(εv)` for the ring barrier from its closed-form derivatives.
pub fn delta_a_hopf(b: &HopfBarrier, profile: &Profile, eps_ratio: f64, x: &[f64]) -> Result<f64> {
    b.check_ring(x)?;
    let (grad, lap, contraction) = b.bump.derivatives(x);
    let e3 = eps_ratio * eps_ratio * eps_ratio;
    let grad: Vec<f64> = grad.iter().map(|g| eps_ratio * g).collect();
    Ok(delta_a_from_derivatives(profile, &grad, eps_ratio * lap, e3 * contraction))
}

/// Central-difference oracle for [`delta_a_hopf`].
pub fn delta_a_hopf_fd(b: &HopfBarrier, profile: &Profile, eps_ratio: f64, x: &[f64], h: f64) -> f64 {
    delta_a_fd(profile, |y| b.bump.gradient(y).iter().map(|g| eps_ratio * g).collect(), x, h)
}

/// Checks `Δ_A(εv) ≥ a(ε|∇v|)/r` at every sample.
pub fn hopf_certify(b: &HopfBarrier, profile: &Profile, eps_ratio: f64, samples: &[Vec<f64>]) -> Result<CertReport> {
    if !(eps_ratio > 0.0) {
        return Err(AlapError::InvalidParameter(format!("ε must be positive, got {eps_ratio}")));
    }
    let id = format!("hopf[{},n={},kappa={:.4},eps={}]", profile.name(), b.dim(), b.kappa, eps_ratio);
    let mut rows = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        let lhs = delta_a_hopf(b, profile, eps_ratio, x)?;
        let rhs = profile.a(eps_ratio * norm(&b.gradient(x))) / b.r(x);
        let margin = lhs - rhs;
        rows.push(CertRow { barrier: id.clone(), sample: i, point: x.clone(), lhs, rhs, margin, pass: margin >= -MARGIN_TOL });
    }
    Ok(CertReport::from_rows(rows))
}

/// Supersolution `v = ϑ(|x − x₁| − R₀)` near the Dirichlet part of the boundary.
#[derive(Debug, Clone)]
pub struct BoundaryBarrier {
    pub center: Vec<f64>,
    pub r0: f64,
    pub m_ceiling: f64,
    pub h_bar: f64,
    pub diameter: f64,
    /// Panel nodes of the tabulated `ϑ`.
    pub table_t: Vec<f64>,
    pub table_theta: Vec<f64>,
    /// Absolute quadrature tolerance per panel.
    pub quad_tol: f64,
    c0: f64,
    shift: f64,
}

const THETA_PANELS: usize = 256;

impl BoundaryBarrier {
    pub fn new(center: &[f64], r0: f64, m_ceiling: f64, h_bar: f64, diameter: f64, profile: &Profile) -> Result<Self> {
        let n = center.len();
        check_dim(n)?;
        if !(r0 > 0.0 && r0 <= diameter) || !(m_ceiling > 0.0) || !(h_bar > 0.0) {
            return Err(AlapError::InvalidParameter(format!(
                "boundary barrier needs 0 < R₀ ≤ D, M > 0, h̄ > 0 (R₀={r0}, D={diameter}, M={m_ceiling}, h̄={h_bar})"
            )));
        }
        let shift = h_bar * r0 / (n as f64 - 1.0);
        let c0 = profile.a(m_ceiling / r0) + shift;
        let mut bb = BoundaryBarrier {
            center: center.to_vec(),
            r0,
            m_ceiling,
            h_bar,
            diameter,
            table_t: Vec::new(),
            table_theta: Vec::new(),
            quad_tol: 1e-10 * m_ceiling / THETA_PANELS as f64,
            c0,
            shift,
        };
        let mut t = Vec::with_capacity(THETA_PANELS + 1);
        let mut theta = Vec::with_capacity(THETA_PANELS + 1);
        t.push(0.0);
        theta.push(0.0);
        for k in 0..THETA_PANELS {
            let lo = diameter * k as f64 / THETA_PANELS as f64;
            let hi = diameter * (k + 1) as f64 / THETA_PANELS as f64;
            let piece = adaptive_simpson(|s| bb.dtheta(profile, s), lo, hi, bb.quad_tol)?;
            t.push(hi);
            theta.push(theta[k] + piece);
        }
        bb.table_t = t;
        bb.table_theta = theta;
        Ok(bb)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn decay(&self) -> f64 {
        (self.dim() as f64 - 1.0) / self.r0
    }

    /// Argument of `a⁻¹` in `ϑ′(t)`.
    fn flux_level(&self, t: f64) -> f64 {
        self.c0 * (self.decay() * (self.diameter - t)).exp() - self.shift
    }

    /// `ϑ′(t)` in closed form.
    pub fn dtheta(&self, profile: &Profile, t: f64) -> f64 {
        profile.a_inv(self.flux_level(t))
    }

    /// `ϑ″(t)` from differentiating the closed form of `ϑ′`.
    pub fn d2theta(&self, profile: &Profile, t: f64) -> f64 {
        let ds = -self.decay() * self.c0 * (self.decay() * (self.diameter - t)).exp();
        ds / profile.da(self.dtheta(profile, t))
    }

    /// `ϑ′(0)`, the boundary Lipschitz constant.
    pub fn lipschitz_constant(&self, profile: &Profile) -> f64 {
        self.dtheta(profile, 0.0)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(0.0..=self.diameter * (1.0 + 1e-12)).contains(&t) {
            return Err(AlapError::OutOfRange(format!("t = {t} outside [0, {}]", self.diameter)));
        }
        Ok(())
    }

    fn d_of(&self, x: &[f64]) -> (f64, f64) {
        let dist = norm(&x.iter().zip(&self.center).map(|(a, b)| a - b).collect::<Vec<_>>());
        (dist, dist - self.r0)
    }

    pub fn value(&self, profile: &Profile, x: &[f64]) -> Result<f64> {
        vartheta(self, profile, self.d_of(x).1)
    }
}

/// `ϑ(t) = ∫₀ᵗ ϑ′(s) ds` from the panel table plus one adaptive Simpson tail.
pub fn vartheta(bb: &BoundaryBarrier, profile: &Profile, t: f64) -> Result<f64> {
    bb.check_t(t)?;
    let t = t.min(bb.diameter);
    if t == 0.0 {
        return Ok(0.0);
    }
    let step = bb.diameter / THETA_PANELS as f64;
    let k = ((t / step).floor() as usize).min(THETA_PANELS);
    let base = bb.table_theta[k];
    let t_k = bb.table_t[k];
    if t == t_k {
        return Ok(base);
    }
    Ok(base + adaptive_simpson(|s| bb.dtheta(profile, s), t_k, t, bb.quad_tol)?)
}

/// `a′(ϑ′)ϑ″ + ((n−1)/R₀)a(ϑ′) + h̄`, which vanishes identically for the exact `ϑ`.
pub fn vartheta_ode_residual(bb: &BoundaryBarrier, profile: &Profile, t: f64) -> Result<f64> {
    bb.check_t(t)?;
    let d1 = bb.dtheta(profile, t);
    Ok(profile.da(d1) * bb.d2theta(profile, t) + bb.decay() * profile.a(d1) + bb.h_bar)
}

/// The printed variant `a(ϑ′)ϑ″ + ((n−1)/R₀)a(ϑ′) + h̄`; nonzero unless `a = a′` along `ϑ′`.
pub fn vartheta_ode_residual_printed(bb: &BoundaryBarrier, profile: &Profile, t: f64) -> Result<f64> {
    bb.check_t(t)?;
    let d1 = bb.dtheta(profile, t);
    Ok(profile.a(d1) * bb.d2theta(profile, t) + bb.decay() * profile.a(d1) + bb.h_bar)
}

/// `Δ_A v = a′(ϑ′(d))ϑ″(d) + (n−1)/|x−x₁| · a(ϑ′(d))`.
pub fn delta_a_boundary(bb: &BoundaryBarrier, profile: &Profile, x: &[f64]) -> Result<f64> {
    let (dist, d) = bb.d_of(x);
    bb.check_t(d)?;
    let d1 = bb.dtheta(profile, d);
    Ok(profile.da(d1) * bb.d2theta(profile, d) + (bb.dim() as f64 - 1.0) / dist * profile.a(d1))
}

/// Checks `Δ_A v + div H ≤ 0` at samples outside `B_{R₀}(x₁)`.
pub fn boundary_certify(bb: &BoundaryBarrier, profile: &Profile, field: &FieldH, samples: &[Vec<f64>]) -> Result<CertReport> {
    let id = format!("boundary[{},n={},R0={}]", profile.name(), bb.dim(), bb.r0);
    let mut rows = Vec::with_capacity(samples.len());
    for (i, x) in samples.iter().enumerate() {
        let (dist, _) = bb.d_of(x);
        if dist < bb.r0 {
            return Err(AlapError::OutOfRange(format!("sample {i} lies inside B_R0(x1)")));
        }
        // written as 0 ≥ Δ_A v + div H so that the margin keeps the "≥ 0 passes" convention
        let rhs = delta_a_boundary(bb, profile, x)? + field.div(x);
        let margin = -rhs;
        rows.push(CertRow { barrier: id.clone(), sample: i, point: x.clone(), lhs: 0.0, rhs, margin, pass: margin >= -MARGIN_TOL });
    }
    Ok(CertReport::from_rows(rows))
}

/// Deterministic ring sampling: a tensor plan of radii × directions plus uniform random points.
///
/// Radii are cell midpoints of `[lo, hi]`, so the plan stays inside the open ring. Directions are
/// `angles` equispaced angles for `n = 2` and an `angles × angles` (polar × azimuth) grid with
/// equal-area polar spacing for `n = 3`.
pub fn ring_samples(center: &[f64], lo: f64, hi: f64, radii: usize, angles: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = center.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if n == 2 {
        for j in 0..angles {
            let th = 2.0 * PI * (j as f64 + 0.5) / angles as f64;
            dirs.push(vec![th.cos(), th.sin()]);
        }
    } else {
        for i in 0..angles {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / angles as f64;
            let s = (1.0 - z * z).sqrt();
            for j in 0..angles {
                let ph = 2.0 * PI * (j as f64 + 0.5) / angles as f64;
                dirs.push(vec![s * ph.cos(), s * ph.sin(), z]);
            }
        }
    }
    let at = |rho: f64, d: &[f64]| -> Vec<f64> { center.iter().zip(d).map(|(c, e)| c + rho * e).collect() };
    let mut out = Vec::with_capacity(radii * dirs.len() + random);
    for i in 0..radii {
        let rho = lo + (hi - lo) * (i as f64 + 0.5) / radii as f64;
        for d in &dirs {
            out.push(at(rho, d));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    for _ in 0..random {
        // uniform in the annulus volume, open at both ends
        let u: f64 = rng.gen_range(0.0..1.0);
        let rho = (lo.powf(nf) + u * (hi.powf(nf) - lo.powf(nf))).powf(1.0 / nf).clamp(lo * (1.0 + 1e-12), hi * (1.0 - 1e-12));
        let d = if n == 2 {
            let th: f64 = rng.gen_range(0.0..2.0 * PI);
            vec![th.cos(), th.sin()]
        } else {
            let z: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            vec![s * ph.cos(), s * ph.sin(), z]
        };
        out.push(at(rho, &d));
    }
    out
}

/// The standard plan: 40 radii × 16 angles in 2D, 40 radii × 12×12 directions in 3D, plus 100 random points.
pub fn standard_ring_samples(center: &[f64], lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let angles = if center.len() == 2 { 16 } else { 12 };
    ring_samples(center, lo, hi, 40, angles, 100, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_logpower, make_power};
    use crate::vector_field::make_constant_field;

    #[test]
    fn radial_value_examples() {
        let p = make_power(2.0).unwrap();
        let b = RadialBarrier::new(&[0.0, 0.0], 1.0, 0.1, 1.0, &p).unwrap();
        assert!(b.value(&[1.1, 0.0]).unwrap().abs() < 1e-15);
        assert!((b.value(&[0.0, 0.5]).unwrap() - 1.0).abs() < 1e-14);
        // independent scalar evaluation: κ = 6, α = 6, k = 1/(e^{-1.5} − e^{-7.26})
        let k = 1.0 / ((-1.5f64).exp() - (-6.0 * 1.21f64).exp());
        let v = k * ((-6.0 * 0.5625f64).exp() - (-6.0 * 1.21f64).exp());
        assert!((b.value(&[0.75, 0.0]).unwrap() - v).abs() < 1e-14);
        assert!(b.value(&[0.3, 0.0]).is_err());
    }

    #[test]
    fn laplacian_case_reduces_to_delta_v() {
        let p = make_power(2.0).unwrap();
        let b = RadialBarrier::new(&[0.2, -0.1], 1.0, 0.1, 1.0, &p).unwrap();
        for rho in [0.55, 0.8, 1.05] {
            let x = [0.2 + rho, -0.1];
            let e = (-b.alpha * rho * rho).exp();
            let expect = -2.0 * b.alpha * b.k * e * (2.0 - 2.0 * b.alpha * rho * rho);
            let got = delta_a_radial_closed_form(&b, &p, &x).unwrap();
            assert!((got - expect).abs() < 1e-12 * expect.abs());
            assert!(got > 0.0);
        }
    }

    #[test]
    fn closed_form_matches_fd_second_order() {
        let p = make_power(3.0).unwrap();
        let b = RadialBarrier::new(&[0.0, 0.0, 0.0], 1.0, 0.2, 1.0, &p).unwrap();
        let x = [0.4, 0.5, 0.3];
        let exact = delta_a_radial_closed_form(&b, &p, &x).unwrap();
        let hs = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = hs.iter().map(|&h| (delta_a_radial_fd(&b, &p, &x, h) - exact).abs()).collect();
        assert!(loglog_slope(&hs, &errs) >= 1.8, "errs {errs:?}");
    }

    #[test]
    fn radial_inequality_and_sharpness() {
        for (prof, n) in [(make_power(2.0).unwrap(), 2), (make_logpower(1.0, 1.0, 1.0).unwrap(), 3)] {
            let c = vec![0.0; n];
            let b = RadialBarrier::new(&c, 1.0, 0.1, 1.0, &prof).unwrap();
            let s = standard_ring_samples(&c, 0.5, 1.1, 7);
            let rep = certify_radial_inequality(&b, &prof, &s).unwrap();
            assert!(rep.pass, "min margin {}", rep.min_margin);
            let weak = RadialBarrier::with_kappa(&c, 1.0, 0.1, 1.0, b.kappa / 4.0).unwrap();
            assert!(!certify_radial_inequality(&weak, &prof, &s).unwrap().pass);
        }
    }

    #[test]
    fn lipschitz_constants() {
        let p = make_power(2.0).unwrap();
        let c1 = lipschitz_constant_theta_nonpos(&p, 2, 1.0, 1.0);
        assert!((c1 - (4.5f64.exp() - 1.0) / 6.0).abs() < 1e-12);
        let c2 = lipschitz_constant_theta_pos(&p, 2, 1.0);
        assert!((c2 - (4.5f64.exp() - 1.0) / 12.0).abs() < 1e-12);
        assert!((c2 / c1 - 0.5).abs() < 1e-14);
        assert!(lipschitz_constant_theta_nonpos(&p, 2, 2.0, 1.0) > c1);
    }

    #[test]
    fn theta_r_cases() {
        let p = make_power(2.0).unwrap();
        let b0 = RadialBarrier::new(&[0.0, 0.0], 0.5, 0.05, 0.0, &p).unwrap();
        assert_eq!(theta_r(&b0, &p, 1.0), -1.0);
        let big = RadialBarrier::new(&[0.0, 0.0], 0.5, 0.05, 1e4, &p).unwrap();
        assert!(theta_r(&big, &p, 1.0) > 0.0);
    }

    #[test]
    fn hopf_example_and_normal_derivative() {
        let p = make_power(2.0).unwrap();
        let c = [0.0, 0.0, 0.0];
        let b = HopfBarrier::new(&c, 1.0, 2.0, &p).unwrap();
        let s = standard_ring_samples(&c, 0.5, 1.0, 3);
        assert!(hopf_certify(&b, &p, 0.37, &s).unwrap().pass);
        assert!(b.outer_normal_derivative() < 0.0);
        let x = [0.3, 0.4, 0.5];
        let exact = delta_a_hopf(&b, &p, 0.37, &x).unwrap();
        let hs = [1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = hs.iter().map(|&h| (delta_a_hopf_fd(&b, &p, 0.37, &x, h) - exact).abs()).collect();
        assert!(loglog_slope(&hs, &errs) >= 1.8);
        assert!(HopfBarrier::new(&c, 1.0, 0.4, &p).is_err());
    }

    #[test]
    fn boundary_barrier_examples() {
        let p = make_power(2.0).unwrap();
        let d = 2f64.sqrt();
        let bb = BoundaryBarrier::new(&[0.5, -0.2], 0.2, 1.0, 1.0, d, &p).unwrap();
        assert_eq!(vartheta(&bb, &p, 0.0).unwrap(), 0.0);
        assert!(vartheta(&bb, &p, 0.2).unwrap() >= 1.0);
        assert!((bb.dtheta(&p, d) - 5.0).abs() < 1e-8 * 5.0);
        for k in 1..100 {
            let t = d * k as f64 / 100.0;
            assert!(vartheta_ode_residual(&bb, &p, t).unwrap().abs() <= 1e-8);
        }
        let field = make_constant_field(&[0.0, 1.0]).unwrap();
        let samples: Vec<Vec<f64>> = (0..=10).flat_map(|i| (0..=10).map(move |j| vec![i as f64 / 10.0, j as f64 / 10.0])).collect();
        assert!(boundary_certify(&bb, &p, &field, &samples).unwrap().pass);
    }

    #[test]
    fn printed_ode_form_fails_for_p3() {
        let p = make_power(3.0).unwrap();
        let bb = BoundaryBarrier::new(&[0.5, -0.2], 0.2, 1.0, 1.0, 2f64.sqrt(), &p).unwrap();
        let derived = vartheta_ode_residual(&bb, &p, 0.5).unwrap();
        let printed = vartheta_ode_residual_printed(&bb, &p, 0.5).unwrap();
        assert!(derived.abs() < 1e-8);
        assert!(printed.abs() > 1e-3);
    }
}
