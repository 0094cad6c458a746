//! Property-based invariants of the numerical kernels.

use alap::config::RunConfig;
use alap::domain_grid::{build_grid, BoundaryData, Domain, FaceName, SolutionPair};
use alap::free_boundary::{phi_on_orbit, sample_along_orbit};
use alap::growth::dry_distance;
use alap::orbits::{flow, integrate_orbit, DEFAULT_EXIT_TOL};
use alap::profiles::{make_logpower, make_piecewise, make_power, Profile, ELLIPTICITY_TOL};
use alap::vector_field::{make_affine_field, make_constant_field, FieldH};
use proptest::prelude::*;

fn profile_strategy() -> impl Strategy<Value = Profile> {
    prop_oneof![
        (1.2f64..5.0).prop_map(|p| make_power(p).unwrap()),
        (0.5f64..3.0, 0.5f64..3.0, 0.1f64..10.0).prop_map(|(a, b, t0)| make_piecewise(a, b, t0).unwrap()),
        (0.5f64..3.0, 0.1f64..5.0, 1.0f64..5.0).prop_map(|(a, b, g)| make_logpower(a, b, g).unwrap()),
    ]
}

fn unit_square() -> Domain {
    Domain::unit_box(2, &[FaceName::Top], BoundaryData::Dam { level: 0.6, slope: 1.0 }, 1.0).unwrap()
}

/// Affine fields with upward drift on the unit square: `tr A ≥ 0`, `H₂ ≥ 0.6`.
fn field_strategy() -> impl Strategy<Value = FieldH> {
    (0.0f64..0.3, -0.2f64..0.2, -0.2f64..0.2, 0.0f64..0.3, -0.3f64..0.3, 0.8f64..1.5).prop_map(|(a11, a12, a21, a22, b1, b2)| {
        make_affine_field(&[vec![a11, a12], vec![a21, a22]], &[b1, b2], &unit_square()).unwrap()
    })
}

fn log_t() -> impl Strategy<Value = f64> {
    (-6.0f64..6.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratio_lies_in_ellipticity_bounds(p in profile_strategy(), t in log_t()) {
        let r = p.ratio(t);
        prop_assert!(r >= p.a0() - ELLIPTICITY_TOL && r <= p.a1() + ELLIPTICITY_TOL, "{} ratio {r} at t={t}", p.name());
    }

    #[test]
    fn a_inv_inverts_a(p in profile_strategy(), t in log_t()) {
        let back = p.a_inv(p.a(t));
        prop_assert!((back - t).abs() <= 1e-9 * t, "{}: a_inv(a({t})) = {back}", p.name());
    }

    #[test]
    fn flux_magnitude_is_a_of_the_norm(p in profile_strategy(), g in prop::collection::vec(-10.0f64..10.0, 2..=3)) {
        let t = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = p.flux(&g);
        let m = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((m - p.a(t)).abs() <= 1e-12 * (1.0 + p.a(t)));
    }

    #[test]
    fn monotonicity_gap_is_positive(
        p in profile_strategy(),
        xi in prop::collection::vec(-5.0f64..5.0, 3),
        zeta in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        prop_assume!(xi != zeta);
        prop_assert!(p.monotonicity_gap(&xi, &zeta).unwrap() > 0.0);
    }

    #[test]
    fn orbit_starts_at_base_point_and_rises(field in field_strategy(), w in 0.05f64..0.95, h in 0.05f64..0.95) {
        let d = unit_square();
        let o = integrate_orbit(&field, &[w], h, &d, DEFAULT_EXIT_TOL).unwrap();
        let x0 = o.position(0.0).unwrap();
        prop_assert!((x0[0] - w).abs() < 1e-14 && (x0[1] - h).abs() < 1e-14);
        prop_assert!(o.alpha_minus < 0.0 && o.alpha_plus > 0.0);
        // H₂ > 0, so the vertical coordinate increases strictly with time
        prop_assert!(o.points.windows(2).all(|p| p[1][1] > p[0][1]));
    }

    #[test]
    fn orbit_positions_are_lipschitz_in_time(field in field_strategy(), w in 0.05f64..0.95, h in 0.05f64..0.95) {
        let d = unit_square();
        let o = integrate_orbit(&field, &[w], h, &d, DEFAULT_EXIT_TOL).unwrap();
        let bound = field.h_upper() * 2f64.sqrt() * (1.0 + 1e-9);
        for k in 1..o.len() {
            let (a, b) = (&o.points[k - 1], &o.points[k]);
            let dist = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            prop_assert!(dist <= bound * (o.times[k] - o.times[k - 1]) + 1e-14);
        }
    }

    #[test]
    fn flow_is_reversible(field in field_strategy(), x in 0.2f64..0.8, y in 0.2f64..0.8, t in -0.3f64..0.3) {
        let fwd = flow(&field, &[x, y], t, 1e-3);
        let back = flow(&field, &fwd, -t, 1e-3);
        prop_assert!((back[0] - x).abs() < 1e-10 && (back[1] - y).abs() < 1e-10);
    }

    #[test]
    fn phi_lies_between_the_exit_times(w in 0.05f64..0.95, h in 0.05f64..0.95, level in 0.0f64..1.0, n in 9usize..40) {
        let d = unit_square();
        let g = build_grid(&d, &[n, n]).unwrap();
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| (level - g.node_coord(i)[1]).max(0.0)).collect();
        let chi: Vec<f64> = (0..g.num_cells()).map(|c| if g.cell_center(c)[1] < level { 1.0 } else { 0.0 }).collect();
        let s = SolutionPair::new(u, chi, g.default_eps_u(&d));
        let f = make_constant_field(&[0.0, 1.0]).unwrap();
        let o = integrate_orbit(&f, &[w], h, &d, DEFAULT_EXIT_TOL).unwrap();
        let phi = phi_on_orbit(&s, &g, &o, &d).unwrap();
        prop_assert!(phi >= o.alpha_minus && phi <= o.alpha_plus);
        let (_, chis) = sample_along_orbit(&s, &g, &o).unwrap();
        prop_assert!(chis.iter().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn distance_transform_matches_brute_force(n in 5usize..14, mask in prop::collection::vec(prop::bool::weighted(0.15), 196)) {
        let d = unit_square();
        let g = build_grid(&d, &[n, n]).unwrap();
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| if mask[i] { 0.0 } else { 1.0 }).collect();
        let s = SolutionPair::new(u.clone(), vec![1.0; g.num_cells()], 1e-6);
        let dist = dry_distance(&s, &g);
        let dry: Vec<[f64; 3]> = (0..g.num_nodes()).filter(|&i| u[i] == 0.0).map(|i| g.node_coord(i)).collect();
        for i in 0..g.num_nodes() {
            let x = g.node_coord(i);
            let brute = dry.iter().map(|y| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min);
            prop_assert!(brute == dist[i] || (brute - dist[i]).abs() < 1e-12, "node {i}: {} vs {brute}", dist[i]);
        }
    }

    #[test]
    fn interpolation_reproduces_multilinear_functions(
        c in prop::collection::vec(-2.0f64..2.0, 4),
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
        n in 3usize..20,
    ) {
        let d = unit_square();
        let g = build_grid(&d, &[n, n]).unwrap();
        let f = |p: &[f64]| c[0] + c[1] * p[0] + c[2] * p[1] + c[3] * p[0] * p[1];
        let u: Vec<f64> = (0..g.num_nodes()).map(|i| f(&g.node_coord(i)[..2])).collect();
        prop_assert!((g.interpolate(&u, &[x, y]) - f(&[x, y])).abs() < 1e-12);
    }

    #[test]
    fn config_round_trips(p in 1.2f64..5.0, seed in any::<u64>(), n in 5usize..100) {
        let mut cfg = RunConfig::dam(p, &[n, 2 * n - 1]);
        cfg.seed = seed;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}
