use bachflow_core::field::TensorField;
use bachflow_core::geometry::Geometry;
use bachflow_core::grid::Scheme;
use bachflow_core::model_spaces::{make_model, Chart, ChartParams};
use bachflow_core::samples::{random_field, random_one_form, random_scalar_field, random_sym2, Profile, Support};
use bachflow_core::tensor_fields::{
    conformal_killing, covariant_derivative, d_nabla, d_nabla_star, divergence, form_inner, hessian, hodge_d,
    pure_trace, rough_laplacian, t_tensor, trace,
};
use std::f64::consts::PI;

fn slab(points: usize, scheme: Scheme) -> Geometry {
    make_model(
        -1,
        4,
        &ChartParams {
            chart: Chart::HyperbolicHalfSpace { x_min: 0.5, x_max: 1.5, y_half_width: 0.5 },
            points: vec![points, points],
        },
    )
    .unwrap()
    .geometry(scheme)
    .unwrap()
}

fn torus(points: Vec<usize>, scheme: Scheme) -> Geometry {
    make_model(0, 4, &ChartParams { chart: Chart::FlatTorus { period: 1.0 }, points }).unwrap().geometry(scheme).unwrap()
}

fn rel(geo: &Geometry, a: &TensorField, b: &TensorField) -> f64 {
    geo.l2_norm_sq(&a.sub(b)).sqrt() / geo.l2_norm_sq(b).sqrt().max(f64::MIN_POSITIVE)
}

fn support(geo: &Geometry, margin: usize) -> Support {
    Support::centered(&geo.grid, margin).unwrap().with_profile(Profile::Polynomial(12))
}

#[test]
fn gradient_of_a_constant_vanishes() {
    let geo = torus(vec![8, 8], Scheme::fd(4));
    let f = TensorField::scalar(vec![3.5; geo.nnodes()], 4);
    assert_eq!(covariant_derivative(&geo, &f).unwrap().max_abs(), 0.0);
}

#[test]
fn hessian_of_the_height_function() {
    // f = x: f_{,ij} = −Γ^0_ij, so f_{,00} = 1/x and f_{,αα} = −1/x.
    let geo = slab(17, Scheme::fd(4).lenient());
    let x: Vec<f64> = (0..geo.nnodes()).map(|p| geo.grid.coords(p)[0]).collect();
    let h = hessian(&geo, &TensorField::scalar(x.clone(), 4)).unwrap();
    // Edge stencils treat the field as compactly supported; stay two radii in.
    for p in (0..geo.nnodes()).filter(|&p| geo.grid.boundary_distance(p) >= 4) {
        for i in 0..4 {
            for j in 0..4 {
                let want = match (i, j) {
                    (0, 0) => 1.0 / x[p],
                    (a, b) if a == b => -1.0 / x[p],
                    _ => 0.0,
                };
                assert!((h.value(&[i, j], p) - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn divergence_of_a_pure_trace_tensor() {
    // δ(fh)_i = −f_{,i}.
    let errs: Vec<f64> = [(33, 6), (65, 12)]
        .iter()
        .map(|&(p, m)| {
            let geo = slab(p, Scheme::fd(4));
            let f = random_scalar_field(&geo.grid, &support(&geo, m), 2);
            let lhs = divergence(&geo, &pure_trace(&geo, &f.data)).unwrap();
            let rhs = hodge_d(&geo, &f).unwrap().scaled(-1.0);
            rel(&geo, &lhs, &rhs)
        })
        .collect();
    assert!(errs[1] < 1e-3 && (errs[0] / errs[1]).log2() > 3.5, "{errs:?}");
    let geo = slab(17, Scheme::fd(4));
    let zero = TensorField::zeros(2, 4, geo.nnodes());
    assert_eq!(divergence(&geo, &zero).unwrap().max_abs(), 0.0);
}

#[test]
fn conformal_killing_is_traceless() {
    let geo = slab(33, Scheme::fd(4));
    let sup = support(&geo, 6);
    let alpha = random_one_form(&geo.grid, &sup, 4);
    let k = conformal_killing(&geo, &alpha).unwrap();
    assert!(trace(&geo, &k).max_abs() <= 1e-13 * k.max_abs().max(1.0));
    let zero = TensorField::zeros(1, 4, geo.nnodes());
    assert_eq!(conformal_killing(&geo, &zero).unwrap().max_abs(), 0.0);
}

#[test]
fn conformal_killing_matches_its_torus_symbol() {
    // α = cos(2πx₀) e₁: δ*α = ½ α_{1,0} (e₀e₁ + e₁e₀), divergence zero.
    let geo = torus(vec![16, 16], Scheme::spectral());
    let mut alpha = TensorField::zeros(1, 4, geo.nnodes());
    for p in 0..geo.nnodes() {
        alpha.at_mut(&[1])[p] = (2.0 * PI * geo.grid.coords(p)[0]).cos();
    }
    let k = conformal_killing(&geo, &alpha).unwrap();
    for p in 0..geo.nnodes() {
        let want = -PI * (2.0 * PI * geo.grid.coords(p)[0]).sin();
        assert!((k.value(&[0, 1], p) - want).abs() < 1e-12);
        assert!((k.value(&[1, 0], p) - want).abs() < 1e-12);
        assert!(k.value(&[0, 0], p).abs() < 1e-12 && k.value(&[2, 3], p).abs() < 1e-12);
    }
}

#[test]
fn laplacian_of_torus_modes() {
    let geo = torus(vec![16, 16], Scheme::spectral());
    for k in [[1i64, 0], [1, 2], [3, 1]] {
        let f: Vec<f64> = (0..geo.nnodes())
            .map(|p| {
                let x = geo.grid.coords(p);
                (2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).cos()
            })
            .collect();
        let f = TensorField::scalar(f, 4);
        let lap = rough_laplacian(&geo, &f).unwrap();
        let ksq = (k[0] * k[0] + k[1] * k[1]) as f64;
        assert!(rel(&geo, &lap, &f.scaled(-4.0 * PI * PI * ksq)) < 1e-12);
    }
    let c = TensorField::scalar(vec![1.0; geo.nnodes()], 4);
    assert!(rough_laplacian(&geo, &c).unwrap().max_abs() < 1e-12);
}

#[test]
fn first_sphere_harmonic_has_eigenvalue_minus_n() {
    // On the toric chart of S⁴ the ambient coordinate cos θ₀ is a degree-1 harmonic.
    let n = 4;
    let geo = make_model(1, n, &ChartParams { chart: Chart::SphereToric { inset: 0.2 }, points: vec![65, 65] })
        .unwrap()
        .geometry(Scheme::fd(6).lenient())
        .unwrap();
    let f: Vec<f64> = (0..geo.nnodes()).map(|p| geo.grid.coords(p)[0].cos()).collect();
    let f = TensorField::scalar(f, n);
    let lap = rough_laplacian(&geo, &f).unwrap();
    let mask = geo.interior_mask(8);
    let want = f.scaled(-(n as f64));
    let err = rel(&geo, &lap.masked(&mask), &want.masked(&mask));
    assert!(err < 1e-6, "{err}");
}

#[test]
fn metric_pairs_to_n_times_volume() {
    let geo = torus(vec![8, 8], Scheme::fd(4));
    let h = geo.metric_field();
    assert!((geo.l2_inner(&h, &h) - 4.0).abs() < 1e-12);
    let sup = support(&geo, 0);
    let v = random_sym2(&geo.grid, &sup, 1);
    assert!(geo.l2_norm_sq(&v) >= 0.0);
}

#[test]
fn t_tensor_of_a_pure_trace_tensor() {
    // v = fh: ½‖T‖² = (n−1)‖∇f‖².
    let errs: Vec<f64> = [(33, 6), (65, 12)]
        .iter()
        .map(|&(p, m)| {
            let geo = slab(p, Scheme::fd(4));
            let f = random_scalar_field(&geo.grid, &support(&geo, m), 9);
            let t = t_tensor(&geo, &pure_trace(&geo, &f.data)).unwrap();
            let df = hodge_d(&geo, &f).unwrap();
            let rhs = 3.0 * geo.l2_norm_sq(&df);
            (0.5 * geo.l2_norm_sq(&t) - rhs).abs() / rhs
        })
        .collect();
    assert!(errs[1] < 1e-3 && (errs[0] / errs[1]).log2() > 3.5, "{errs:?}");
    // A parallel tensor (constant on the flat torus) has T = 0.
    let geo = torus(vec![8, 8], Scheme::fd(4));
    let mut v = TensorField::zeros(2, 4, geo.nnodes());
    v.at_mut(&[0, 1]).iter_mut().for_each(|x| *x = 0.7);
    v.at_mut(&[1, 0]).iter_mut().for_each(|x| *x = 0.7);
    v.at_mut(&[2, 2]).iter_mut().for_each(|x| *x = -1.3);
    assert_eq!(t_tensor(&geo, &v).unwrap().max_abs(), 0.0);
}

#[test]
fn coupled_exterior_derivative_is_adjoint_to_its_star() {
    let errs: Vec<f64> = [(33, 4), (65, 8)]
        .iter()
        .map(|&(p, m)| {
            let geo = slab(p, Scheme::fd(4));
            let sup = support(&geo, m);
            let eta = random_field(&geo.grid, 2, &sup, 5);
            let omega = d_nabla(&geo, &random_field(&geo.grid, 2, &sup, 6)).unwrap();
            let lhs = form_inner(&geo, &d_nabla(&geo, &eta).unwrap(), &omega, 2);
            let rhs = form_inner(&geo, &eta, &d_nabla_star(&geo, &omega).unwrap(), 1);
            (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
        })
        .collect();
    assert!(errs[1] < 1e-4 && (errs[0] / errs[1]).log2() > 3.5, "{errs:?}");
}
