use bachflow_core::decomposition::{coercivity_check_k, k_transpose, split, tt_project, SplitOptions};
use bachflow_core::field::TensorField;
use bachflow_core::geometry::Geometry;
use bachflow_core::grid::Scheme;
use bachflow_core::model_spaces::{make_model, Chart, ChartParams};
use bachflow_core::samples::{random_one_form, random_scalar_field, random_sym2, random_traceless, Profile, Support};
use bachflow_core::tensor_fields::{conformal_killing, pure_trace};

fn torus(points: Vec<usize>) -> Geometry {
    make_model(0, 4, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points }).unwrap().geometry(Scheme::spectral()).unwrap()
}

fn slab(points: usize) -> Geometry {
    make_model(
        -1,
        4,
        &ChartParams {
            chart: Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 },
            points: vec![points, points],
        },
    )
    .unwrap()
    .geometry(Scheme::fd(4))
    .unwrap()
}

fn rel(geo: &Geometry, a: &TensorField, b: &TensorField) -> f64 {
    geo.l2_norm_sq(&a.sub(b)).sqrt() / geo.l2_norm_sq(b).sqrt()
}

#[test]
fn pure_trace_input_has_no_k_or_tt_part() {
    let geo = torus(vec![12, 12]);
    let sup = Support::centered(&geo.grid, 0).unwrap();
    let f = random_scalar_field(&geo.grid, &sup, 3);
    let v = pure_trace(&geo, &f.data);
    let s = split(&geo, &v, &SplitOptions::default()).unwrap();
    assert!(s.alpha.max_abs() < 1e-12 && s.tt.max_abs() < 1e-12);
    assert!(s.f.sub(&f).max_abs() < 1e-12);
    assert!(tt_project(&geo, &v, &SplitOptions::default()).unwrap().max_abs() < 1e-12);
}

#[test]
fn torus_split_is_exact_and_orthogonal() {
    let geo = torus(vec![12, 12]);
    let sup = Support::centered(&geo.grid, 0).unwrap();
    let v = random_sym2(&geo.grid, &sup, 5);
    let s = split(&geo, &v, &SplitOptions::default()).unwrap();
    let r = &s.residuals;
    for x in [r.divergence, r.trace, r.orth_k_trace, r.orth_k_tt, r.orth_trace_tt, r.reconstruction] {
        assert!(x < 1e-10, "{r:?}");
    }
    assert!(s.min_ritz.is_none());
    // Idempotence of the TT projection.
    let again = tt_project(&geo, &s.tt, &SplitOptions::default()).unwrap();
    assert!(rel(&geo, &again, &s.tt) < 1e-10);
}

#[test]
fn constant_traceless_tensor_is_transverse_traceless_on_the_torus() {
    let geo = torus(vec![8, 8]);
    let mut v = TensorField::zeros(2, 4, geo.nnodes());
    v.at_mut(&[0, 0]).iter_mut().for_each(|x| *x = 1.0);
    v.at_mut(&[1, 1]).iter_mut().for_each(|x| *x = -1.0);
    v.at_mut(&[2, 3]).iter_mut().for_each(|x| *x = 0.5);
    v.at_mut(&[3, 2]).iter_mut().for_each(|x| *x = 0.5);
    let s = split(&geo, &v, &SplitOptions::default()).unwrap();
    assert!(rel(&geo, &s.tt, &v) < 1e-12);
    assert!(s.k_alpha.max_abs() < 1e-12);
}

#[test]
fn image_of_k_round_trips_on_the_slab() {
    let geo = slab(33);
    let opts = SplitOptions::default();
    let sup = Support::centered(&geo.grid, 2 * opts.margin).unwrap().with_profile(Profile::Polynomial(12));
    let alpha = random_one_form(&geo.grid, &sup, 7);
    let v = conformal_killing(&geo, &alpha).unwrap();
    let s = split(&geo, &v, &opts).unwrap();
    assert!(rel(&geo, &s.k_alpha, &v) < 1e-6, "{}", rel(&geo, &s.k_alpha, &v));
    assert!(geo.l2_norm_sq(&s.tt).sqrt() < 1e-6 * geo.l2_norm_sq(&v).sqrt());
    assert!(s.min_ritz.unwrap() > 0.0);
    assert!(s.iterations > 0);
}

#[test]
fn slab_split_residuals_are_small() {
    let geo = slab(33);
    let opts = SplitOptions::default();
    let sup = Support::centered(&geo.grid, 2 * opts.margin).unwrap().with_profile(Profile::Polynomial(12));
    let v = random_sym2(&geo.grid, &sup, 9);
    let s = split(&geo, &v, &opts).unwrap();
    let r = &s.residuals;
    assert!(r.trace < 1e-12 && r.reconstruction < 1e-12, "{r:?}");
    assert!(r.orth_k_tt < 1e-8 && r.orth_k_trace < 1e-12 && r.orth_trace_tt < 1e-12, "{r:?}");
    assert!(r.divergence < 1e-2, "{r:?}");
}

#[test]
fn k_transpose_is_the_discrete_adjoint() {
    for geo in [torus(vec![12, 12]), slab(33)] {
        let sup = Support::centered(&geo.grid, 4).unwrap().with_profile(Profile::Polynomial(12));
        let alpha = random_one_form(&geo.grid, &sup, 1);
        let w = random_traceless(&geo, &sup, 2);
        let lhs = geo.l2_inner(&conformal_killing(&geo, &alpha).unwrap(), &w);
        let rhs = geo.l2_inner(&alpha, &k_transpose(&geo, &w).unwrap());
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn k_is_coercive_on_hyperbolic_space() {
    // ‖Kα‖² ≥ (n−1)‖α‖² for compactly supported α with c = −1.
    let geo = slab(33);
    let sup = Support::centered(&geo.grid, 4).unwrap().with_profile(Profile::Polynomial(12));
    for seed in 0..4 {
        let alpha = random_one_form(&geo.grid, &sup, seed);
        let ratio = coercivity_check_k(&geo, &alpha).unwrap();
        assert!(ratio >= 3.0, "seed {seed}: {ratio}");
    }
    assert!(coercivity_check_k(&geo, &TensorField::zeros(1, 4, geo.nnodes())).is_err());
}

#[test]
fn split_rejects_non_tensors() {
    let geo = torus(vec![8, 8]);
    assert!(split(&geo, &TensorField::zeros(1, 4, geo.nnodes()), &SplitOptions::default()).is_err());
}
