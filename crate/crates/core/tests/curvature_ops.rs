use bachflow_core::curvature_ops::{
    bach_tensor, bianchi, curvature_from_metric, flow_rhs, gauge_vector, kulkarni_nomizu, metric_volume,
    modified_bach_forms, schouten, volume_rate, weyl, Background,
};
use bachflow_core::field::{Symmetry, TensorField};
use bachflow_core::grid::Scheme;
use bachflow_core::model_spaces::{make_model, toric_active_axes, Chart, ChartParams};
use bachflow_core::samples::{random_sym2, torus_tt_mode, Profile, Support};
use bachflow_core::tensor_fields::{covariant_derivative, divergence, trace};
use std::f64::consts::PI;

fn torus_bg(n: usize, points: Vec<usize>) -> Background {
    let sp = make_model(0, n, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points }).unwrap();
    Background::new(&sp, Scheme::spectral()).unwrap()
}

fn backgrounds() -> Vec<Background> {
    let cases = [
        (-1, Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }, vec![17, 17]),
        (0, Chart::FlatTorus { period: 1.0 }, vec![8, 8]),
        (1, Chart::SphereToric { inset: 0.2 }, vec![17; toric_active_axes(4)]),
    ];
    cases
        .into_iter()
        .map(|(c, chart, points)| {
            let sp = make_model(c, 4, &ChartParams { chart, points }).unwrap();
            Background::new(&sp, Scheme::fd(4).lenient()).unwrap()
        })
        .collect()
}

/// `φ = 0.3 cos(2πx₀) + 0.2 sin(2π(x₀ + x₁))` on the unit torus, with `∇φ` and `Δφ`.
fn phi(x: &[f64]) -> (f64, [f64; 2], f64) {
    let (a, b) = (2.0 * PI * x[0], 2.0 * PI * (x[0] + x[1]));
    let f = 0.3 * a.cos() + 0.2 * b.sin();
    let d0 = -0.3 * 2.0 * PI * a.sin() + 0.2 * 2.0 * PI * b.cos();
    let d1 = 0.2 * 2.0 * PI * b.cos();
    let lap = -0.3 * 4.0 * PI * PI * a.cos() - 0.2 * 8.0 * PI * PI * b.sin();
    (f, [d0, d1], lap)
}

#[test]
fn constant_curvature_backgrounds_are_exact() {
    for bg in backgrounds() {
        let c = bg.c;
        let h = bg.metric();
        let curv = curvature_from_metric(&bg, &h).unwrap();
        assert!(curv.scal.iter().all(|s| (s - 12.0 * c).abs() < 1e-10));
        let p = schouten(&curv);
        assert!(p.sub(&h.scaled(c / 2.0)).max_abs() < 1e-10);
        assert!(weyl(&curv).max_abs() < 1e-10);
        // Round-off only: the background is reproduced exactly up to cancellation.
        assert!(bach_tensor(&bg, &h).unwrap().max_abs() < 1e-10);
        assert!(flow_rhs(&bg, &h).unwrap().max_abs() < 1e-10);
        assert_eq!(bianchi(&bg, &h).unwrap().max_abs(), 0.0);
        assert_eq!(gauge_vector(&bg, &h).unwrap().max_abs(), 0.0);
        if c == 0.0 {
            assert_eq!(curv.riemann.max_abs(), 0.0);
            assert_eq!(curv.ricci.max_abs(), 0.0);
        }
    }
}

#[test]
fn conformal_scalar_curvature_matches_closed_form() {
    // g = e^{2φ}δ: S = −e^{−2φ}(2(n−1)Δφ + (n−2)(n−1)|∇φ|²).
    let n = 4;
    let bg = torus_bg(n, vec![48, 48]);
    let nn = bg.nnodes();
    let mut scale = vec![0.0; nn];
    let mut want = vec![0.0; nn];
    for p in 0..nn {
        let (f, d, lap) = phi(&bg.geo.grid.coords(p));
        scale[p] = (2.0 * f).exp();
        let nf = n as f64;
        want[p] = -(-2.0 * f).exp() * (2.0 * (nf - 1.0) * lap + (nf - 2.0) * (nf - 1.0) * (d[0] * d[0] + d[1] * d[1]));
    }
    let mut g = bg.metric().times_scalar(&scale);
    g.sym = Symmetry::Sym2;
    let curv = curvature_from_metric(&bg, &g).unwrap();
    let err = curv.scal.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale_s = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
    assert!(err < 1e-9 * scale_s, "{err} vs {scale_s}");
    // Schouten from its definition.
    let p = schouten(&curv);
    let mut direct = curv.ricci.clone();
    direct.axpy(-1.0, &curv.geo.metric_field().times_scalar(&curv.scal.iter().map(|s| s / 6.0).collect::<Vec<_>>()));
    assert!(p.sub(&direct.scaled(0.5)).max_abs() < 1e-10 * direct.max_abs());
}

#[test]
fn kulkarni_nomizu_is_symmetric_and_expands_for_the_metric() {
    let bg = torus_bg(4, vec![6, 6]);
    let sup = Support::centered(&bg.geo.grid, 0).unwrap();
    let a = random_sym2(&bg.geo.grid, &sup, 1);
    let b = random_sym2(&bg.geo.grid, &sup, 2);
    assert!(kulkarni_nomizu(&a, &b).sub(&kulkarni_nomizu(&b, &a)).max_abs() < 1e-15);
    let h = bg.metric();
    let hh = kulkarni_nomizu(&h, &h);
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let want = 2.0 * (d(i, l) * d(j, k) - d(i, k) * d(j, l));
                    assert_eq!(hh.value(&[i, j, k, l], 0), want);
                }
            }
        }
    }
}

#[test]
fn bach_tensor_is_traceless_divergence_free_and_conformally_covariant() {
    let n = 4;
    let bg = torus_bg(n, vec![24, 24]);
    let nn = bg.nnodes();
    let mut scale = vec![0.0; nn];
    for p in 0..nn {
        scale[p] = (2.0 * 0.05 * phi(&bg.geo.grid.coords(p)).0).exp();
    }
    let mut g = bg.metric().times_scalar(&scale);
    g.sym = Symmetry::Sym2;
    // Conformally flat metric: Bach vanishes.
    let b_conf = bach_tensor(&bg, &g).unwrap();
    // Generic perturbation: nonzero Bach.
    let v = torus_tt_mode(&bg.geo.grid, &[1, 1], 1e-2).unwrap();
    let w = {
        let mut w = v.clone();
        let u = torus_tt_mode(&bg.geo.grid, &[0, 1], 5e-3).unwrap();
        w.axpy(1.0, &u);
        w
    };
    let g2 = bg.perturbed(&w, 1.0);
    let b = bach_tensor(&bg, &g2).unwrap();
    let bn = b.max_abs();
    assert!(bn > 1e-2);
    assert!(b_conf.max_abs() < 1e-8 * bn, "{}", b_conf.max_abs());
    let conn = curvature_from_metric(&bg, &g2).unwrap();
    let tr = conn.geo.trace(&b, 0, 1);
    assert!(tr.max_abs() < 1e-10 * bn);
    // g-divergence of B vanishes in dimension 4.
    let div = divergence(&conn.geo, &b).unwrap();
    assert!(div.max_abs() < 1e-8 * bn, "{}", div.max_abs() / bn);
    // B(4g) = B(g)/4.
    let mut g4 = g2.scaled(4.0);
    g4.sym = Symmetry::Sym2;
    let b4 = bach_tensor(&bg, &g4).unwrap();
    assert!(b4.sub(&b.scaled(0.25)).max_abs() < 1e-10 * bn);
}

#[test]
fn modified_bach_forms_agree() {
    let bg = torus_bg(4, vec![24, 24]);
    let v = torus_tt_mode(&bg.geo.grid, &[1, 2], 1e-2).unwrap();
    let g = bg.perturbed(&v, 1.0);
    let f = modified_bach_forms(&bg, &g).unwrap();
    let s = f.direct.max_abs();
    for other in [&f.schouten_form, &f.weyl_form, &f.kulkarni_form] {
        assert!(other.sub(&f.direct).max_abs() < 1e-9 * s);
    }
}

#[test]
fn bianchi_operator_is_linear_in_the_perturbation() {
    // β_h(h + v) = δv + ½ d tr v.
    let sp = make_model(
        -1,
        4,
        &ChartParams { chart: Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }, points: vec![33, 33] },
    )
    .unwrap();
    let bg = Background::new(&sp, Scheme::fd(4)).unwrap();
    let sup = Support::centered(&bg.geo.grid, 6).unwrap().with_profile(Profile::Polynomial(12));
    let v = random_sym2(&bg.geo.grid, &sup, 3);
    let got = bianchi(&bg, &bg.perturbed(&v, 1.0)).unwrap();
    let mut want = divergence(&bg.geo, &v).unwrap();
    want.axpy(0.5, &covariant_derivative(&bg.geo, &trace(&bg.geo, &v)).unwrap());
    assert!(got.sub(&want).max_abs() < 1e-10 * want.max_abs());
    let twice = bianchi(&bg, &bg.perturbed(&v, 2.0)).unwrap();
    assert!(twice.sub(&got.scaled(2.0)).max_abs() < 1e-10 * want.max_abs());
}

#[test]
fn flow_preserves_volume_on_the_torus() {
    let bg = torus_bg(4, vec![16, 16]);
    let v = torus_tt_mode(&bg.geo.grid, &[1, 1], 5e-3).unwrap();
    let g = bg.perturbed(&v, 1.0);
    let f = flow_rhs(&bg, &g).unwrap();
    let rate = volume_rate(&bg, &g, &f).unwrap();
    let scale = bg.geo.l2_norm_sq(&f).sqrt() * metric_volume(&bg, &g).unwrap().sqrt();
    assert!(rate.abs() < 1e-10 * scale, "{rate} vs {scale}");
}

#[test]
fn degenerate_metric_is_rejected() {
    let bg = torus_bg(4, vec![6, 6]);
    let g = bg.metric().scaled(-1.0);
    assert!(curvature_from_metric(&bg, &g).is_err());
    let wrong = TensorField::zeros(2, 4, 3);
    assert!(curvature_from_metric(&bg, &wrong).is_err());
}
