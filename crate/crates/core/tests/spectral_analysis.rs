use bachflow_core::cli_reports::{identity_battery, identity_chart, sampling_setup};
use bachflow_core::geometry::Geometry;
use bachflow_core::grid::Scheme;
use bachflow_core::model_spaces::{make_model, Chart, ChartParams};
use bachflow_core::samples::{random_one_form, random_sym2, random_traceless, torus_tt_mode, tt_sample, Profile, Support};
use bachflow_core::spectral_analysis::{
    a_norm_identity_residual, bilaplacian_commutator_residual, claimed_bound, component_sample,
    delta_star_commutator_residual, gap_constants, imk_form_expansion, k_adjoint_k_residual, k_commutator_residual,
    koiso_identity_residual, one_form_bounds, traceless_commutator_residual, weitzenbock_residual, rayleigh_sample, sphere_trace_kernel,
    sphere_trace_spectrum, torus_mode_spectrum, tt_form_checks, Component,
};
use bachflow_core::tensor_fields::trace;
use std::f64::consts::PI;

fn torus(points: Vec<usize>) -> Geometry {
    make_model(0, 4, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points }).unwrap().geometry(Scheme::spectral()).unwrap()
}

fn slab(points: usize) -> Geometry {
    make_model(-1, 4, &ChartParams { chart: identity_chart(), points: vec![points, points] })
        .unwrap()
        .geometry(Scheme::fd(4).lenient())
        .unwrap()
}

fn setup(c: i32, n: usize) -> Geometry {
    let (chart, points, scheme) = sampling_setup(c, n);
    make_model(c, n, &ChartParams { chart, points }).unwrap().geometry(scheme).unwrap()
}

#[test]
fn torus_mode_eigenvalues() {
    assert_eq!(torus_mode_spectrum(&[0, 0], 4).eigenvalue, 0.0);
    let s = torus_mode_spectrum(&[1, 0], 4);
    assert!((s.eigenvalue + 8.0 * PI.powi(4)).abs() < 1e-9);
    assert!((s.eigenvalue + 779.2727).abs() < 1e-3);
    assert_eq!(s.multiplicity, 10);
    assert_eq!(torus_mode_spectrum(&[1, 2], 5).k_sq, 5);
}

#[test]
fn sphere_trace_eigenvalues() {
    let s = sphere_trace_spectrum(3, 4);
    assert_eq!(s[0].eigenvalue, 0.0);
    assert_eq!(s[1].eigenvalue, -30.0);
    assert_eq!(s[1].lambda, 10.0);
    assert!(s.iter().skip(1).all(|m| m.eigenvalue < 0.0));
}

#[test]
fn sphere_trace_kernel_is_the_first_harmonics() {
    for n in [3, 4, 5] {
        let r = sphere_trace_kernel(n, 4).unwrap();
        assert_eq!(r.kernel_dim, n + 1, "{r:?}");
        assert!(r.separation > 1e6);
    }
    assert!(sphere_trace_kernel(1, 4).is_err());
}

#[test]
fn gap_constants_and_claimed_bounds() {
    let g = gap_constants(4);
    assert_eq!((g.trace, g.im_k, g.tt, g.a), (4.5, 0.4, 0.25, 0.25));
    let g5 = gap_constants(5);
    assert_eq!(g5.a, 0.5);
    assert_eq!(claimed_bound(Component::Trace, -1, 4), -4.5);
    assert_eq!(claimed_bound(Component::Tt, 1, 4), -4.0);
    assert_eq!(claimed_bound(Component::Trace, 1, 4), 0.0);
    assert_eq!(claimed_bound(Component::ImK, 0, 6), 0.0);
}

#[test]
fn identities_hold_to_round_off_on_the_torus() {
    let geo = torus(vec![16, 16]);
    let sup = Support::centered(&geo.grid, 0).unwrap();
    let v = random_sym2(&geo.grid, &sup, 3);
    let vt = random_traceless(&geo, &sup, 3);
    let a = random_one_form(&geo.grid, &sup, 3);
    let checks = [
        koiso_identity_residual(&geo, &v).unwrap(),
        a_norm_identity_residual(&geo, &vt).unwrap(),
        weitzenbock_residual(&geo, &a).unwrap(),
        k_commutator_residual(&geo, &a).unwrap(),
        delta_star_commutator_residual(&geo, &a).unwrap(),
        bilaplacian_commutator_residual(&geo, &v).unwrap(),
        traceless_commutator_residual(&geo, &vt).unwrap(),
        k_adjoint_k_residual(&geo, &a).unwrap(),
    ];
    // The five-term expansion is specific to hyperbolic space.
    assert!(imk_form_expansion(&geo, &a).is_err());
    for check in checks {
        assert!(check.relative() < 1e-10, "{}: {}", check.name, check.relative());
    }
}

#[test]
fn identity_residuals_converge_on_the_slab() {
    let coarse = slab(33);
    let fine = slab(65);
    let sc = Support::centered(&coarse.grid, 2).unwrap().with_profile(Profile::Polynomial(12));
    let sf = Support::centered(&fine.grid, 4).unwrap().with_profile(Profile::Polynomial(12));
    let a = identity_battery(&coarse, &sc, 1).unwrap();
    let b = identity_battery(&fine, &sf, 1).unwrap();
    for (c, f) in a.iter().zip(&b) {
        assert!(f.relative() < 1e-3, "{}: {}", f.name, f.relative());
        let order = (c.relative() / f.relative()).log2();
        assert!(order > 3.0, "{}: {order}", c.name);
    }
}

#[test]
fn one_form_bounds_hold_on_the_slab() {
    let geo = slab(33);
    let sup = Support::centered(&geo.grid, 4).unwrap().with_profile(Profile::Polynomial(12));
    for seed in 0..4 {
        let b = one_form_bounds(&geo, &random_one_form(&geo.grid, &sup, seed)).unwrap();
        assert!(b.gap_margin(4) >= 0.0 && b.k_bound_margin(4) >= 0.0, "{b:?}");
    }
}

#[test]
fn tt_form_chain_on_a_slab_sample() {
    let geo = slab(33);
    let sup = Support::centered(&geo.grid, 2).unwrap().with_profile(Profile::Polynomial(12));
    let v = tt_sample(&geo, &sup, 3).unwrap();
    let r = tt_form_checks(&geo, &v).unwrap();
    assert!(r.form < 0.0);
    assert!(r.passes(1e-3), "{r:?}");
    assert!(tt_form_checks(&torus(vec![8, 8]), &torus_tt_mode(&torus(vec![8, 8]).grid, &[1, 0], 1.0).unwrap()).is_err());
}

#[test]
fn rayleigh_quotients_respect_the_bounds() {
    let seeds: Vec<u64> = (0..4).collect();
    for (c, comp) in [(-1, Component::Trace), (-1, Component::ImK), (0, Component::Tt), (1, Component::Trace)] {
        let geo = setup(c, 4);
        let sup = Support::centered(&geo.grid, 2).unwrap().with_profile(Profile::Polynomial(12));
        let r = rayleigh_sample(&geo, comp, &sup, &seeds, 1e-3).unwrap();
        assert!(r.all_pass(), "c={c} {}: {:?}", comp.name(), r.samples);
        assert_eq!(r.samples.len(), 4);
        assert!(r.max_quotient() <= r.claimed_bound + r.tolerance);
    }
}

#[test]
fn sphere_trace_samples_have_mean_zero() {
    let geo = setup(1, 4);
    let sup = Support::centered(&geo.grid, 2).unwrap().with_profile(Profile::Polynomial(12));
    let v = component_sample(&geo, Component::Trace, &sup, 5).unwrap();
    let t = trace(&geo, &v);
    let mean: f64 = t.data.iter().zip(&geo.weight).map(|(a, w)| a * w).sum();
    let scale: f64 = t.data.iter().zip(&geo.weight).map(|(a, w)| a.abs() * w).sum();
    assert!(mean.abs() < 1e-12 * scale);
}
