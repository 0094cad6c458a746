use crate::error::{AlapError, Result};

const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let fa = f(lo);
    let fb = f(hi);
    let m = 0.5 * (lo + hi);
    let fm = f(m);
    let whole = simpson(lo, hi, fa, fm, fb);
    // roundoff floor: refinement below a few ulps of the total cannot improve the answer
    let floor = 64.0 * f64::EPSILON * whole.abs();
    recurse(&f, lo, hi, fa, fm, fb, whole, tol, floor, MAX_DEPTH)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    floor: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let diff = left + right - whole;
    if !diff.is_finite() {
        return Err(AlapError::QuadratureFailure { lo: a, hi: b });
    }
    if diff.abs() <= 15.0 * tol || diff.abs() <= floor {
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(AlapError::QuadratureFailure { lo: a, hi: b });
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, floor, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, floor, depth - 1)?;
    Ok(l + r)
}

/// Cumulative composite Simpson integral of samples `f` on a uniform grid of spacing `dt`.
///
/// Entry `j` approximates the integral from the first sample to sample `j`; odd-indexed
/// prefixes close with a Simpson 3/8 panel.
pub fn cumulative_simpson(f: &[f64], dt: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for j in 1..f.len() {
        out[j] = if j % 2 == 0 {
            out[j - 2] + dt / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j])
        } else if j >= 3 {
            out[j - 3] + 3.0 * dt / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j])
        } else {
            // first interval: quadratic through the first three samples when available
            if f.len() > 2 {
                dt / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
            } else {
                0.5 * dt * (f[0] + f[1])
            }
        };
    }
    out
}

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Eight-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    GL8_X.iter().zip(GL8_W.iter()).map(|(x, w)| w * f(c + r * x)).sum::<f64>() * r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_transcendental() {
        let v = adaptive_simpson(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = adaptive_simpson(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|x| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn simpson_rejects_nonfinite() {
        assert!(adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn cumulative_matches_exponential() {
        let dt = 0.01;
        let f: Vec<f64> = (0..101).map(|j| (j as f64 * dt).exp()).collect();
        let c = cumulative_simpson(&f, dt);
        for (j, v) in c.iter().enumerate() {
            let exact = (j as f64 * dt).exp() - 1.0;
            assert!((v - exact).abs() < 1e-9, "j={j} {v} {exact}");
        }
    }

    #[test]
    fn gauss_legendre_exact_degree_15() {
        let v = gauss_legendre8(|x| x.powi(15) + x.powi(4), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 0.2)).abs() < 1e-14);
    }
}
