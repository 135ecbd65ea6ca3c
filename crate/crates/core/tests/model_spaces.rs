use bachflow_core::curvature_ops::{curvature_from_metric, Background};
use bachflow_core::grid::Scheme;
use bachflow_core::model_spaces::{make_model, toric_active_axes, Chart, ChartParams, ModelSpace};

fn hyperbolic(points: Vec<usize>) -> ChartParams {
    ChartParams { chart: Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }, points }
}

/// Ricci from the closed-form Christoffel symbols and their derivatives:
/// `R_bc = ∂_l Γ^l_bc − ∂_c Γ^l_bl + Γ^l_lm Γ^m_bc − Γ^l_cm Γ^m_bl`.
fn ricci_from_christoffel(sp: &ModelSpace, node: usize) -> Vec<Vec<f64>> {
    let n = sp.n;
    let g = sp.christoffel_at(node).unwrap();
    let dg = sp.christoffel_derivative_at(node).unwrap();
    let mut r = vec![vec![0.0; n]; n];
    for b in 0..n {
        for c in 0..n {
            let mut s = 0.0;
            for l in 0..n {
                s += dg[l][b][c][l] - dg[l][b][l][c];
                for m in 0..n {
                    s += g[l][l][m] * g[m][b][c] - g[l][c][m] * g[m][b][l];
                }
            }
            r[b][c] = s;
        }
    }
    r
}

#[test]
fn flat_torus_has_no_christoffels_and_zero_curvature() {
    let sp = make_model(0, 4, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points: vec![16; 4] }).unwrap();
    assert_eq!(sp.scalar_curvature(), 0.0);
    for node in [0, 17, sp.nnodes() - 1] {
        assert!(sp.christoffel_at(node).unwrap().iter().flatten().flatten().all(|v| *v == 0.0));
        let cell = sp.grid.cell_measure();
        assert_eq!(sp.volume_weight_at(node).unwrap(), cell);
    }
    let geo = sp.geometry(Scheme::fd(4)).unwrap();
    assert!(geo.gamma.iter().all(|g| g.is_none()));
    assert!((geo.volume() - 1.0).abs() < 1e-12);
}

#[test]
fn hyperbolic_closed_forms() {
    let sp = make_model(-1, 4, &hyperbolic(vec![11, 11])).unwrap();
    assert_eq!(sp.scalar_curvature(), -12.0);
    // x = 0.5 is the first node of axis 0.
    let node = sp.grid.node(&[0, 5]);
    assert_eq!(sp.grid.coords(node)[0], 0.5);
    let h = sp.metric_at(node).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(h[i][j], if i == j { 4.0 } else { 0.0 });
        }
    }
    let w = sp.volume_weight_at(node).unwrap() / sp.grid.cell_measure();
    assert!((w - 16.0).abs() < 1e-12);
    // Γ^j_{i0} = Γ^j_{0i} = −δ^j_i/x, Γ^0_{αβ} = δ_{αβ}/x, others zero.
    let x = 0.5;
    let g = sp.christoffel_at(node).unwrap();
    for l in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let mut want = 0.0;
                if c == 0 && l == b {
                    want -= 1.0 / x;
                }
                if b == 0 && l == c {
                    want -= 1.0 / x;
                }
                if l == 0 && b == c && b != 0 {
                    want = 1.0 / x;
                }
                if l == 0 && b == 0 && c == 0 {
                    want = -1.0 / x;
                }
                assert!((g[l][b][c] - want).abs() < 1e-14, "Γ^{l}_{b}{c} = {} vs {want}", g[l][b][c]);
            }
        }
    }
    assert_eq!(sp.rho_at(node).unwrap(), 0.5);
}

#[test]
fn closed_form_ricci_is_einstein_for_every_chart() {
    let cases = [
        (1, Chart::SphereStereographic { half_width: 0.8 }, vec![5; 4]),
        (-1, Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 }, vec![5, 5]),
        (1, Chart::SphereToric { inset: 0.2 }, vec![5; toric_active_axes(4)]),
        (1, Chart::SphereToric { inset: 0.2 }, vec![5; toric_active_axes(6)]),
    ];
    for (c, chart, points) in cases {
        let n = if points.len() == toric_active_axes(6) && matches!(chart, Chart::SphereToric { .. }) { 6 } else { 4 };
        let sp = make_model(c, n, &ChartParams { chart: chart.clone(), points }).unwrap();
        for node in (0..sp.nnodes()).step_by(7) {
            let r = ricci_from_christoffel(&sp, node);
            let h = sp.metric_at(node).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let want = c as f64 * (n as f64 - 1.0) * h[i][j];
                    assert!((r[i][j] - want).abs() < 1e-12 * (1.0 + want.abs()), "{chart:?} node {node}");
                }
            }
        }
    }
}

#[test]
fn grid_curvature_matches_closed_form_to_truncation_order() {
    // With exact background derivatives the metric itself is reproduced to round-off.
    let sp = make_model(-1, 4, &hyperbolic(vec![17, 17])).unwrap();
    let bg = Background::new(&sp, Scheme::fd(4).lenient()).unwrap();
    let scal = curvature_from_metric(&bg, &bg.metric()).unwrap().scal;
    assert!(scal.iter().all(|s| (s + 12.0).abs() < 1e-12));
    let mut errs = Vec::new();
    for p in [17, 33] {
        let sp = make_model(-1, 4, &hyperbolic(vec![p, p])).unwrap();
        let bg = Background::fd_only(&sp, Scheme::fd(4)).unwrap();
        let curv = curvature_from_metric(&bg, &bg.metric()).unwrap();
        // Fixed physical window away from the one-sided edge stencils.
        let err = (0..sp.nnodes())
            .filter(|&p| {
                let x = sp.grid.coords(p);
                (x[0] - 1.0).abs() <= 0.25 && x[1].abs() <= 0.25
            })
            .map(|p| (curv.scal[p] + 12.0).abs())
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 2e-3, "{errs:?}");
    assert!((errs[0] / errs[1]).log2() > 3.5, "{errs:?}");
}

#[test]
fn invalid_models_are_rejected() {
    let torus = ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points: vec![8] };
    assert!(make_model(0, 2, &torus).is_err());
    assert!(make_model(1, 4, &torus).is_err());
    assert!(make_model(2, 4, &torus).is_err());
    let bad = ChartParams { chart: Chart::HyperbolicHalfSpace { x_min: 0.0, x_max: 1.0, y_half_width: 1.0 }, points: vec![8, 8] };
    assert!(make_model(-1, 4, &bad).is_err());
    let stereo = ChartParams { chart: Chart::SphereStereographic { half_width: 0.5 }, points: vec![8; 4] };
    assert!(make_model(-1, 4, &stereo).is_err());
    assert!(make_model(1, 5, &stereo).is_err());
    let sp = make_model(0, 4, &torus).unwrap();
    assert!(sp.metric_at(sp.nnodes()).is_err());
    assert!(sp.volume_weight_at(usize::MAX).is_err());
}

#[test]
fn toric_axis_counts() {
    assert_eq!(toric_active_axes(3), 1);
    assert_eq!(toric_active_axes(4), 2);
    assert_eq!(toric_active_axes(5), 2);
    assert_eq!(toric_active_axes(6), 3);
}

#[test]
fn chart_serde_uses_kind_tags() {
    let c = Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 };
    let s = serde_json::to_string(&c).unwrap();
    assert!(s.contains("\"kind\":\"hyperbolic_half_space\""));
    assert_eq!(serde_json::from_str::<Chart>(&s).unwrap(), c);
}

#[test]
fn slab_volume_converges_under_refinement() {
    // ∫_{0.5}^{1.5} ∫_{-0.5}^{0.5} x^{-4} dy dx = (1/3)(0.5^{-3} − 1.5^{-3}).
    let exact = (8.0 - 1.0 / 3.375) / 3.0;
    let errs: Vec<f64> = [17, 33, 65]
        .iter()
        .map(|&p| {
            let geo = make_model(-1, 4, &hyperbolic(vec![p, p])).unwrap().geometry(Scheme::fd(2).lenient()).unwrap();
            (geo.volume() - exact).abs()
        })
        .collect();
    // Node-sum quadrature over the closed box: first order at the box edges
    // (the sampled fields vanish there, where it is spectrally accurate).
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 1.0).abs() < 0.1, "{errs:?}");
    }
}
