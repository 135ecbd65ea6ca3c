use bachflow_core::indicial::{
    asymptotic_argument_check, eval_poly, indicial_polynomial, indicial_radius, indicial_roots, root_residual,
    scan_half_plane, thresholds, zero_lambda_table, Basis, IndicialResult, LambdaGrid, Subspace, CSV_HEADER,
};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sorted_re(roots: &[Complex64; 4]) -> Vec<f64> {
    let mut v: Vec<f64> = roots.iter().map(|z| z.re).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

#[test]
fn zero_lambda_roots_are_the_integer_table() {
    for n in 4..=10 {
        let res = IndicialResult::compute(n, c(0.0, 0.0), Basis::Dx).unwrap();
        let table = zero_lambda_table(n);
        for s in Subspace::ALL {
            let got = sorted_re(res.subspace_roots(s));
            let mut want: Vec<f64> = table[s.index()].iter().map(|v| *v as f64).collect();
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12, "n={n} {s:?}: {got:?} vs {want:?}");
            }
            assert!(res.subspace_roots(s).iter().all(|z| z.im == 0.0));
        }
        assert!((res.radius - (n as f64 - 3.0) / 2.0).abs() <= 1e-12);
    }
}

#[test]
fn v0_dx_over_rho_example() {
    let r = indicial_roots(Subspace::V0, 4, c(0.0, 0.0), Basis::DxOverRho).unwrap();
    let got = sorted_re(&r);
    for (g, w) in got.iter().zip([-1.0, 0.0, 3.0, 4.0]) {
        assert!((g - w).abs() < 1e-14);
    }
}

#[test]
fn v3_dx_example_n4() {
    let got = sorted_re(&indicial_roots(Subspace::V3, 4, c(0.0, 0.0), Basis::Dx).unwrap());
    for (g, w) in got.iter().zip([-2.0, -1.0, 0.0, 1.0]) {
        assert!((g - w).abs() < 1e-14);
    }
}

#[test]
fn radius_examples() {
    assert!((indicial_radius(4, c(0.0, 0.0)).unwrap() - 0.5).abs() < 1e-14);
    assert!((indicial_radius(6, c(0.0, 0.0)).unwrap() - 1.5).abs() < 1e-14);
}

#[test]
fn quartic_has_leading_minus_half_and_vanishes_at_table_roots() {
    for n in 4..=10 {
        for s in Subspace::ALL {
            let p = indicial_polynomial(s, n, c(0.0, 0.0)).unwrap();
            assert_eq!(p[4], c(-0.5, 0.0));
            for g in zero_lambda_table(n)[s.index()] {
                assert!(eval_poly(&p, c(g as f64, 0.0)).norm() < 1e-10);
            }
        }
    }
}

/// The quartics written through `P(γ) = −γ² + (n−5)γ`.
fn p_form(s: Subspace, n: f64, g: f64) -> f64 {
    let p = -g * g + (n - 5.0) * g;
    match s {
        Subspace::V0 => {
            let mu = g + 2.0;
            let t = mu * mu - (n - 1.0) * mu;
            -0.5 * t * t + 0.5 * n * t
        }
        Subspace::V1 => {
            let x = p + 4.0 * n - 6.0;
            -0.5 * x * x + 1.5 * n * x - n * n
        }
        Subspace::V2 => {
            let x = p + 3.0 * n - 4.0;
            -0.5 * x * x + (n + 1.0) * x - 2.0 * n
        }
        Subspace::V3 => {
            let x = p + 2.0 * n - 4.0;
            -0.5 * (x - 2.0) * (x - n)
        }
    }
}

#[test]
fn quartic_matches_operator_form() {
    for n in 4..=9 {
        for s in Subspace::ALL {
            let p = indicial_polynomial(s, n, c(0.0, 0.0)).unwrap();
            for g in [-3.3, -1.0, 0.25, 2.0, 4.7] {
                let want = p_form(s, n as f64, g);
                let got = eval_poly(&p, c(g, 0.0)).re;
                assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "n={n} {s:?} γ={g}");
            }
        }
    }
}

#[test]
fn v0_lambda_form() {
    // λ − p(μ) = λ + (μ/2)(μ+1)(μ−n)(μ−(n−1)) in the dx/ρ frame.
    let n = 7.0;
    let lam = c(0.4, -0.9);
    let p = indicial_polynomial(Subspace::V0, 7, lam).unwrap();
    for mu in [-1.5, 0.3, 2.0, 6.5] {
        let lhs = -eval_poly(&p, c(mu - 2.0, 0.0));
        let rhs = lam + (mu / 2.0) * (mu + 1.0) * (mu - n) * (mu - (n - 1.0));
        assert!((lhs - rhs).norm() < 1e-10);
    }
}

#[test]
fn threshold_values() {
    let t = thresholds(4);
    assert_eq!(t.eps_v1, 9.0 / 32.0);
    assert_eq!(t.eps_v1, 0.28125);
    assert_eq!(t.a, 14.0 / 128.0);
    assert_eq!(t.r, 0.375);
    assert_eq!(thresholds(5).a, 1.125);
    for n in 4..=12 {
        let t = thresholds(n);
        let nf = n as f64;
        assert_eq!(t.eps_v1, (((nf - 2.0).powi(2) - 1.0).powi(2)) / 32.0);
        assert_eq!(t.eps_v0, t.eps_v2);
        assert!(t.eps_v1 <= t.eps_v3 && t.eps_v3 < t.eps_v0, "n={n}");
    }
}

#[test]
fn inner_pair_collapses_at_threshold() {
    for n in 4..=8 {
        let t = thresholds(n);
        for s in Subspace::ALL {
            let eps = t.for_subspace(s);
            let res = IndicialResult::compute(n, c(-eps, 0.0), Basis::DxOverRho).unwrap();
            assert!(res.subspace_radius(s) < 1e-6, "n={n} {s:?} radius {}", res.subspace_radius(s));
            let before = IndicialResult::compute(n, c(-eps * 0.9, 0.0), Basis::DxOverRho).unwrap();
            assert!(before.subspace_radius(s) > 1e-3);
        }
    }
}

#[test]
fn half_plane_scan_respects_guaranteed_radius() {
    for n in [4, 5, 6] {
        let t = thresholds(n);
        let grid = LambdaGrid::standard(t.a, 50, 401, 100.0, 1e4, 1e-9);
        let rep = scan_half_plane(n, t.a, &grid).unwrap();
        assert!(rep.points >= 10_000);
        assert!(rep.min_radius >= t.r - 1e-9, "n={n}: {} at {}", rep.min_radius, rep.argmin_re);
        assert!(rep.max_root_residual < 1e-10);
    }
}

#[test]
fn doubled_bound_dips_below_radius_for_n4() {
    let t = thresholds(4);
    let grid = LambdaGrid::standard(2.0 * t.a, 40, 81, 10.0, 100.0, 1e-9);
    let rep = scan_half_plane(4, 2.0 * t.a, &grid).unwrap();
    assert!(rep.min_radius < t.r);
}

#[test]
fn empty_grid_is_an_error() {
    let grid = LambdaGrid { re: vec![], im: vec![0.0] };
    assert!(scan_half_plane(4, 0.1, &grid).is_err());
    let outside = LambdaGrid { re: vec![-1.0], im: vec![0.0] };
    assert!(scan_half_plane(4, 0.1, &outside).is_err());
}

#[test]
fn imaginary_axis_arguments_approach_diagonals() {
    for n in [4, 5, 6] {
        let samples = asymptotic_argument_check(n, &[1e2, 1e3, 1e4]).unwrap();
        for w in samples.windows(2) {
            assert!(w[1].max_arg_deviation < w[0].max_arg_deviation, "n={n} {samples:?}");
        }
        assert!(samples.iter().all(|s| s.min_radius > 0.0));
    }
    // Larger n needs larger |y| before the asymptotic regime sets in.
    let late = asymptotic_argument_check(10, &[1e4, 1e6]).unwrap();
    assert!(late[1].max_arg_deviation < 0.2 * late[0].max_arg_deviation);
}

#[test]
fn csv_has_sixteen_rows() {
    let res = IndicialResult::compute(4, c(0.0, 0.0), Basis::Dx).unwrap();
    let rows = res.csv_rows();
    assert_eq!(rows.len(), 16);
    let cols = CSV_HEADER.split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_roots_zero_the_quartic(n in 4usize..=12, re in -50.0f64..50.0, im in -50.0f64..50.0) {
        for s in Subspace::ALL {
            prop_assert!(root_residual(s, n, c(re, im)).unwrap() < 1e-10);
        }
    }

    #[test]
    fn basis_shift_is_exact(n in 4usize..=12, re in -20.0f64..20.0, im in -20.0f64..20.0) {
        for s in Subspace::ALL {
            let dx = indicial_roots(s, n, c(re, im), Basis::Dx).unwrap();
            let rho = indicial_roots(s, n, c(re, im), Basis::DxOverRho).unwrap();
            for (a, b) in dx.iter().zip(&rho) {
                prop_assert_eq!(*a, *b - 2.0);
            }
        }
    }

    #[test]
    fn pairs_are_symmetric(n in 4usize..=12, re in -20.0f64..20.0, im in -20.0f64..20.0) {
        let res = IndicialResult::compute(n, c(re, im), Basis::DxOverRho).unwrap();
        prop_assert!(res.pair_symmetry_defect() < 1e-12 * (1.0 + res.lambda.norm()));
    }
}
