use serde::{Deserialize, Serialize};

use crate::error::{AlapError, Result};
use crate::quadrature::gauss_legendre8;

/// Configuration-level description of a profile family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Power { p: f64 },
    Piecewise { alpha: f64, beta: f64, t0: f64 },
    Logpower { alpha: f64, beta: f64, gamma: f64 },
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        match *self {
            ProfileSpec::Power { p } => make_power(p),
            ProfileSpec::Piecewise { alpha, beta, t0 } => make_piecewise(alpha, beta, t0),
            ProfileSpec::Logpower { alpha, beta, gamma } => make_logpower(alpha, beta, gamma),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Family {
    Power { p: f64 },
    Piecewise { alpha: f64, beta: f64, t0: f64, c2: f64, c3: f64, big_a_t0: f64 },
    LogPower { alpha: f64, beta: f64, gamma: f64 },
}

/// The nonlinearity `a(t)` of the operator together with its derived quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    family: Family,
    a0: f64,
    a1: f64,
}

pub fn make_power(p: f64) -> Result<Profile> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(AlapError::InvalidParameter(format!("power profile needs p > 1, got {p}")));
    }
    Ok(Profile { family: Family::Power { p }, a0: p - 1.0, a1: p - 1.0 })
}

/// `t^alpha` below `t0`, `c2 t^beta + c3` above, with the constants fixed by C¹ matching.
pub fn make_piecewise(alpha: f64, beta: f64, t0: f64) -> Result<Profile> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("t0", t0)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AlapError::InvalidParameter(format!("piecewise profile needs {name} > 0, got {v}")));
        }
    }
    if alpha == beta {
        return Err(AlapError::InvalidParameter(
            "piecewise profile with alpha = beta is a power profile".into(),
        ));
    }
    let c2 = alpha / beta * t0.powf(alpha - beta);
    let c3 = t0.powf(alpha) * (1.0 - alpha / beta);
    let big_a_t0 = t0.powf(alpha + 1.0) / (alpha + 1.0);
    Ok(Profile {
        family: Family::Piecewise { alpha, beta, t0, c2, c3, big_a_t0 },
        a0: alpha.min(beta),
        a1: alpha.max(beta),
    })
}

/// `t^alpha ln(beta t + gamma)`; `gamma >= 1` keeps the logarithm non-negative.
pub fn make_logpower(alpha: f64, beta: f64, gamma: f64) -> Result<Profile> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(AlapError::InvalidParameter(format!("logpower profile needs {name} > 0, got {v}")));
        }
    }
    if gamma < 1.0 {
        return Err(AlapError::InvalidParameter(format!(
            "logpower profile needs gamma >= 1 (a(t) < 0 near 0 otherwise), got {gamma}"
        )));
    }
    Ok(Profile { family: Family::LogPower { alpha, beta, gamma }, a0: alpha, a1: 1.0 + alpha })
}

impl Profile {
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Power { p } => format!("power(p={p})"),
            Family::Piecewise { alpha, beta, t0, .. } => format!("piecewise(alpha={alpha},beta={beta},t0={t0})"),
            Family::LogPower { alpha, beta, gamma } => format!("logpower(alpha={alpha},beta={beta},gamma={gamma})"),
        }
    }

    /// Piecewise matching constants `(c2, c3)`, if this is a piecewise profile.
    pub fn piecewise_constants(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Piecewise { c2, c3, .. } => Some((c2, c3)),
            _ => None,
        }
    }

    pub fn a(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Power { p } => t.powf(p - 1.0),
            Family::Piecewise { alpha, beta, t0, c2, c3, .. } => {
                if t < t0 {
                    t.powf(alpha)
                } else {
                    c2 * t.powf(beta) + c3
                }
            }
            Family::LogPower { alpha, beta, gamma } => t.powf(alpha) * log_term(beta, gamma, t),
        }
    }

    pub fn da(&self, t: f64) -> f64 {
        match self.family {
            Family::Power { p } => {
                if t <= 0.0 {
                    return if p == 2.0 { 1.0 } else if p > 2.0 { 0.0 } else { f64::INFINITY };
                }
                (p - 1.0) * t.powf(p - 2.0)
            }
            Family::Piecewise { alpha, beta, t0, c2, .. } => {
                if t <= 0.0 {
                    return if alpha == 1.0 { 1.0 } else if alpha > 1.0 { 0.0 } else { f64::INFINITY };
                }
                if t < t0 {
                    alpha * t.powf(alpha - 1.0)
                } else {
                    c2 * beta * t.powf(beta - 1.0)
                }
            }
            Family::LogPower { alpha, beta, gamma } => {
                if t <= 0.0 {
                    // near 0, a ~ t^alpha ln(gamma) + beta t^(alpha+1)/gamma
                    let lead = if gamma > 1.0 { alpha } else { alpha + 1.0 };
                    let c = if gamma > 1.0 { gamma.ln() } else { beta };
                    return if lead == 1.0 { c } else if lead > 1.0 { 0.0 } else { f64::INFINITY };
                }
                alpha * t.powf(alpha - 1.0) * log_term(beta, gamma, t) + t.powf(alpha) * beta / (beta * t + gamma)
            }
        }
    }

    /// `t a'(t) / a(t)`, evaluated in a cancellation-free closed form.
    pub fn ratio(&self, t: f64) -> f64 {
        match self.family {
            Family::Power { p } => p - 1.0,
            Family::Piecewise { alpha, beta, t0, c2, .. } => {
                if t < t0 {
                    alpha
                } else {
                    let tb = c2 * t.powf(beta);
                    beta * tb / self.a(t)
                }
            }
            Family::LogPower { alpha, beta, gamma } => {
                let bt = beta * t;
                alpha + bt / ((bt + gamma) * log_term(beta, gamma, t))
            }
        }
    }

    /// `A(t) = ∫₀ᵗ a(s) ds`.
    pub fn big_a(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Power { p } => t.powf(p) / p,
            Family::Piecewise { alpha, beta, t0, c2, c3, big_a_t0 } => {
                if t < t0 {
                    t.powf(alpha + 1.0) / (alpha + 1.0)
                } else {
                    big_a_t0 + c2 * (t.powf(beta + 1.0) - t0.powf(beta + 1.0)) / (beta + 1.0) + c3 * (t - t0)
                }
            }
            Family::LogPower { alpha, beta, gamma } => {
                // A(t) = t^(alpha+1) ∫₀¹ x^alpha ln(beta t x + gamma) dx, dyadic panels toward 0
                let panels = ((50.0 / (alpha + 1.0)).ceil() as i32).max(8);
                let g = |x: f64| x.powf(alpha) * log_term(beta, gamma, t * x);
                let mut s = 0.0;
                let mut hi = 1.0f64;
                for _ in 0..panels {
                    let lo = 0.5 * hi;
                    s += gauss_legendre8(g, lo, hi);
                    hi = lo;
                }
                s += gauss_legendre8(g, 0.0, hi);
                t.powf(alpha + 1.0) * s
            }
        }
    }

    /// Inverse of `a` on `[0, ∞)`.
    pub fn a_inv(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match self.family {
            Family::Power { p } => s.powf(1.0 / (p - 1.0)),
            Family::Piecewise { alpha, beta, t0, c2, c3, .. } => {
                if s < t0.powf(alpha) {
                    s.powf(1.0 / alpha)
                } else {
                    ((s - c3) / c2).powf(1.0 / beta)
                }
            }
            Family::LogPower { .. } => self.a_inv_numeric(s),
        }
    }

    /// Safeguarded Newton/bisection on `τ ↦ ln a(e^τ) − ln s`, whose slope is the
    /// ellipticity ratio and so lies in `[a0, a1]`.
    fn a_inv_numeric(&self, s: f64) -> f64 {
        let target = s.ln();
        let f = |tau: f64| self.a(tau.exp()).ln() - target;
        // bracket: f(τ) is increasing with slope >= a0
        let mut tau = target / self.a1.max(1e-300);
        let mut lo = tau;
        let mut hi = tau;
        let step = 1.0;
        while f(lo) > 0.0 {
            lo -= step * (1.0 + (lo - tau).abs());
        }
        while f(hi) < 0.0 {
            hi += step * (1.0 + (hi - tau).abs());
        }
        tau = 0.5 * (lo + hi);
        for _ in 0..200 {
            let ft = f(tau);
            if ft == 0.0 {
                break;
            }
            if ft > 0.0 {
                hi = tau;
            } else {
                lo = tau;
            }
            let slope = self.ratio(tau.exp());
            let mut next = tau - ft / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - tau).abs() <= 1e-15 * (1.0 + tau.abs()) {
                tau = next;
                break;
            }
            tau = next;
        }
        tau.exp()
    }

    /// `(a(|g|)/|g|) g`, extended by zero at `g = 0`.
    pub fn flux(&self, g: &[f64]) -> Vec<f64> {
        let t = norm(g);
        if t == 0.0 {
            return vec![0.0; g.len()];
        }
        let c = self.a(t) / t;
        g.iter().map(|x| c * x).collect()
    }

    /// `(flux(ξ) − flux(ζ))·(ξ − ζ)`.
    pub fn monotonicity_gap(&self, xi: &[f64], zeta: &[f64]) -> Result<f64> {
        if xi.len() != zeta.len() {
            return Err(AlapError::DegenerateInput("vectors of different dimension".into()));
        }
        if xi == zeta {
            return Err(AlapError::DegenerateInput("monotonicity gap needs xi != zeta".into()));
        }
        let fx = self.flux(xi);
        let fz = self.flux(zeta);
        Ok((0..xi.len()).map(|i| (fx[i] - fz[i]) * (xi[i] - zeta[i])).sum())
    }
}

fn log_term(beta: f64, gamma: f64, t: f64) -> f64 {
    gamma.ln() + (beta * t / gamma).ln_1p()
}

pub(crate) fn norm(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Per-sample result of the ellipticity certification.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSample {
    pub t: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticityReport {
    pub profile: String,
    pub a0: f64,
    pub a1: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: Vec<RatioSample>,
    pub pass: bool,
}

impl EllipticityReport {
    pub fn failures(&self) -> impl Iterator<Item = &RatioSample> {
        self.samples.iter().filter(|s| !s.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,ratio,pass\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{}\n", r.t, r.ratio, r.pass));
        }
        s
    }
}

pub const ELLIPTICITY_TOL: f64 = 1e-9;

pub fn certify_ellipticity(profile: &Profile, t_samples: &[f64]) -> EllipticityReport {
    let mut samples = Vec::with_capacity(t_samples.len());
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    for &t in t_samples {
        let ratio = profile.ratio(t);
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
        let pass = ratio.is_finite()
            && ratio >= profile.a0 - ELLIPTICITY_TOL
            && ratio <= profile.a1 + ELLIPTICITY_TOL;
        samples.push(RatioSample { t, ratio, pass });
    }
    let pass = samples.iter().all(|s| s.pass);
    EllipticityReport { profile: profile.name(), a0: profile.a0, a1: profile.a1, min_ratio, max_ratio, samples, pass }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub profile: String,
    pub pairs: usize,
    /// Smallest gap relative to `|flux(ξ) − flux(ζ)|·|ξ − ζ|`.
    pub min_relative_gap: f64,
    pub failures: usize,
    pub pass: bool,
}

/// Monotonicity gap on `pairs` seeded random pairs in `ℝⁿ`: isotropic directions with norms
/// log-uniform in `[1e−3, 1e3]`.
pub fn monotonicity_sweep(profile: &Profile, n: usize, pairs: usize, seed: u64) -> Result<MonotonicityReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        loop {
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = norm(&d);
            if len > 1e-3 && len <= 1.0 {
                let r = 10f64.powf(rng.gen_range(-3.0..3.0));
                return d.iter().map(|v| v * r / len).collect();
            }
        }
    };
    let mut min_rel = f64::INFINITY;
    let mut failures = 0;
    for _ in 0..pairs {
        let xi = draw(&mut rng);
        let zeta = draw(&mut rng);
        let gap = profile.monotonicity_gap(&xi, &zeta)?;
        let fx = profile.flux(&xi);
        let fz = profile.flux(&zeta);
        let df: Vec<f64> = fx.iter().zip(&fz).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = xi.iter().zip(&zeta).map(|(a, b)| a - b).collect();
        let scale = norm(&df) * norm(&dx);
        if !(gap > 0.0) {
            failures += 1;
        }
        if scale > 0.0 {
            min_rel = min_rel.min(gap / scale);
        }
    }
    Ok(MonotonicityReport { profile: profile.name(), pairs, min_relative_gap: min_rel, failures, pass: failures == 0 })
}

/// `count` log-spaced points in `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (l, h) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if count == 1 {
                lo
            } else {
                (l + (h - l) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;

    fn builtins() -> Vec<Profile> {
        vec![
            make_power(1.5).unwrap(),
            make_power(2.0).unwrap(),
            make_power(3.0).unwrap(),
            make_power(4.0).unwrap(),
            make_piecewise(1.0, 2.0, 1.0).unwrap(),
            make_piecewise(2.0, 1.0, 1.0).unwrap(),
            make_logpower(1.0, 1.0, 1.0).unwrap(),
            make_logpower(2.0, 1.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn power_examples() {
        let p2 = make_power(2.0).unwrap();
        assert_eq!(p2.a(3.7), 3.7);
        assert_eq!((p2.a0(), p2.a1()), (1.0, 1.0));
        let p3 = make_power(3.0).unwrap();
        assert_eq!(p3.a(2.0), 4.0);
        assert_eq!(p3.a_inv(4.0), 2.0);
        assert_eq!(make_power(1.5).unwrap().ratio(7.0), 0.5);
        assert!(make_power(1.0).is_err());
        assert!(make_power(0.5).is_err());
    }

    #[test]
    fn piecewise_matching_constants() {
        let pw = make_piecewise(1.0, 2.0, 1.0).unwrap();
        let (c2, c3) = pw.piecewise_constants().unwrap();
        assert!((c2 - 0.5).abs() < 1e-15 && (c3 - 0.5).abs() < 1e-15);
        // hand-derived ratio limit α at t0⁺
        assert!((pw.ratio(1.0) - 1.0).abs() < 1e-14);
        assert!((pw.ratio(1.0 + 1e-12) - 1.0).abs() < 1e-10);
        let pw2 = make_piecewise(2.0, 1.0, 1.0).unwrap();
        assert_eq!(pw2.a(1.0), 1.0);
        assert!((pw2.ratio(1.0) - 2.0).abs() < 1e-14);
        // C¹ at the breakpoint
        for pw in [pw, pw2] {
            let e = 1e-7;
            assert!((pw.a(1.0 - e) - pw.a(1.0)).abs() < 1e-6);
            assert!((pw.da(1.0 - e) - pw.da(1.0)).abs() < 1e-6);
        }
        assert!(make_piecewise(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn logpower_examples() {
        let lp = make_logpower(1.0, 1.0, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((lp.a(e - 1.0) - (e - 1.0)).abs() < 1e-14);
        assert!((lp.a_inv(lp.a(3.7)) - 3.7).abs() < 1e-10 * 3.7);
        let r = certify_ellipticity(&lp, &log_samples(1e-6, 1e6, 200));
        assert!(r.pass && r.min_ratio >= 1.0 - 1e-9 && r.max_ratio <= 2.0 + 1e-9);
        assert!(make_logpower(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn flux_examples() {
        let p2 = make_power(2.0).unwrap();
        assert_eq!(p2.flux(&[3.0, 4.0]), vec![3.0, 4.0]);
        let p3 = make_power(3.0).unwrap();
        let f = p3.flux(&[3.0, 4.0]);
        assert!((f[0] - 15.0).abs() < 1e-12 && (f[1] - 20.0).abs() < 1e-12);
        for p in builtins() {
            assert_eq!(p.flux(&[0.0, 0.0]), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn monotonicity_examples() {
        let p2 = make_power(2.0).unwrap();
        assert!((p2.monotonicity_gap(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 2.0).abs() < 1e-15);
        let p3 = make_power(3.0).unwrap();
        assert!((p3.monotonicity_gap(&[2.0, 0.0], &[1.0, 0.0]).unwrap() - 3.0).abs() < 1e-14);
        assert!(p3.monotonicity_gap(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn monotonicity_sweep_is_strict() {
        for p in builtins() {
            for n in [2, 3] {
                let rep = monotonicity_sweep(&p, n, 2000, 7).unwrap();
                assert!(rep.pass && rep.min_relative_gap > 0.0, "{} n={n}", p.name());
            }
        }
    }

    #[test]
    fn ellipticity_reports() {
        let ts = log_samples(1e-6, 1e6, 200);
        let r = certify_ellipticity(&make_power(4.0).unwrap(), &ts);
        assert!(r.pass && r.min_ratio == 3.0 && r.max_ratio == 3.0);
        // analytic limits: ratio → α as t → 0, → β as t → ∞
        let r = certify_ellipticity(&make_piecewise(1.0, 2.0, 1.0).unwrap(), &ts);
        assert!(r.pass);
        assert!((r.min_ratio - 1.0).abs() < 1e-9 && (r.max_ratio - 2.0).abs() < 1e-9);
        let r = certify_ellipticity(&make_logpower(2.0, 1.0, 1.0).unwrap(), &ts);
        assert!(r.pass && r.min_ratio >= 2.0 - 1e-9 && r.max_ratio <= 3.0 + 1e-9);
    }

    #[test]
    fn ratio_matches_finite_difference() {
        for p in builtins() {
            for &t in &[0.05, 0.3, 0.9, 1.7, 12.0] {
                let h = 1e-6 * t;
                let d = (p.a(t + h) - p.a(t - h)) / (2.0 * h);
                assert!((d - p.da(t)).abs() < 1e-6 * (1.0 + d.abs()), "{} t={t}", p.name());
                assert!((t * p.da(t) / p.a(t) - p.ratio(t)).abs() < 1e-12, "{}", p.name());
            }
        }
    }

    #[test]
    fn big_a_matches_adaptive_quadrature() {
        for p in builtins() {
            for &t in &[1e-3, 0.5, 1.0, 2.5, 40.0] {
                let q = adaptive_simpson(|s| p.a(s), 0.0, t, 1e-14 * (1.0 + p.a(t) * t)).unwrap();
                let v = p.big_a(t);
                assert!((v - q).abs() <= 1e-8 * q.abs(), "{} t={t} {v} {q}", p.name());
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        for p in builtins() {
            for t in log_samples(1e-6, 1e6, 120) {
                let back = p.a_inv(p.a(t));
                assert!((back - t).abs() <= 1e-10 * t, "{} t={t} back={back}", p.name());
            }
        }
    }
}
