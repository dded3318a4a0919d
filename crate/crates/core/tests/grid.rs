use std::f64::consts::PI;

use proptest::prelude::*;
use randers_foliate_core::grid::{
    build_example, christoffel, conformal_phi, curvature_bar, derivative, extrinsic_bar, integrate, riemann,
    ExampleKind, ExampleSpec, PeriodicGrid, Scheme, TensorField, Volume, CATALOG,
};

const TAU: f64 = 2.0 * PI;

fn derivative_error(n: usize, scheme: Scheme) -> f64 {
    let g = PeriodicGrid::new(vec![n, 8], vec![1.0, 1.0]).unwrap();
    let f = TensorField::from_coords(&g, 0, 0, |x, o| o[0] = (TAU * x[0]).sin().exp());
    let df = derivative(&f, 0, scheme);
    (0..g.len())
        .map(|i| {
            let x = g.coords(i)[0];
            let exact = TAU * (TAU * x).cos() * (TAU * x).sin().exp();
            (df.at(i)[0] - exact).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn central4_converges_at_fourth_order() {
    let e: Vec<f64> = [32, 64, 128].iter().map(|&n| derivative_error(n, Scheme::Central4)).collect();
    for w in e.windows(2) {
        assert!(w[0] / w[1] >= 12.0, "{e:?}");
    }
}

#[test]
fn spectral_converges_geometrically() {
    let e: Vec<f64> = [8, 16, 32].iter().map(|&n| derivative_error(n, Scheme::Spectral)).collect();
    assert!(e[0] / e[1] >= 100.0, "{e:?}");
    assert!(e[2] < 1e-12, "{e:?}");
}

#[test]
fn derivatives_integrate_to_zero() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus).with("dim", 3.0);
    let m = build_example(&spec, 12).unwrap();
    for scheme in [Scheme::Spectral, Scheme::Central4] {
        for axis in 0..3 {
            let d = derivative(&m.a, axis, scheme);
            let comp = d.component(0);
            let total: f64 = comp.iter().sum::<f64>() / comp.len() as f64;
            assert!(total.abs() < 1e-13, "{scheme:?} axis {axis}: {total:e}");
        }
    }
}

fn conformal_grad(x: &[f64], amp: f64) -> [f64; 2] {
    [amp * TAU * (TAU * x[0]).cos(), -amp * 0.5 * TAU * (TAU * x[1] + 0.4).sin()]
}

#[test]
fn christoffel_of_conformal_metric() {
    // a = e^{2φ}δ: Γⁱ_jk = δⁱ_j ∂_kφ + δⁱ_k ∂_jφ − δ_jk ∂_iφ.
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus);
    let m = build_example(&spec, 48).unwrap();
    let amp = m.param("phi_amp");
    let gam = christoffel(&m.a, Scheme::Spectral, m.active()).unwrap();
    let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    for node in 0..m.grid.len() {
        let dphi = conformal_grad(&m.grid.coords(node), amp);
        let v = gam.at(node);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let want = delta(i, j) * dphi[k] + delta(i, k) * dphi[j] - delta(j, k) * dphi[i];
                    assert!((v[(i * 2 + j) * 2 + k] - want).abs() < 1e-11);
                }
            }
        }
    }
}

#[test]
fn gauss_curvature_of_conformal_torus() {
    // K = −e^{−2φ}Δφ and Δφ = −(2π)²φ for this profile; in 2D Ric̄(N,N) = K.
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus);
    let mut errs = Vec::new();
    for res in [16, 32, 64] {
        let m = build_example(&spec, res).unwrap();
        let amp = m.param("phi_amp");
        let bar = extrinsic_bar(&m, Scheme::Spectral).unwrap();
        let curv = curvature_bar(&m, &bar).unwrap();
        let err = (0..m.grid.len())
            .map(|node| {
                let phi = conformal_phi(&m.grid.coords(node), amp, false, 2);
                (curv.ricci_n[node] - TAU * TAU * phi * (-2.0 * phi).exp()).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[0] / errs[1] >= 100.0, "{errs:?}");
    assert!(errs[2] < 1e-9, "{errs:?}");
}

#[test]
fn riemann_symmetries_in_three_dimensions() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus).with("dim", 3.0);
    let m = build_example(&spec, 20).unwrap();
    let gam = christoffel(&m.a, Scheme::Spectral, m.active()).unwrap();
    let r = riemann(&gam, Scheme::Spectral);
    let d = 3;
    let at = |v: &[f64], i: usize, j: usize, k: usize, l: usize| v[((i * d + j) * d + k) * d + l];
    let mut scale = 0.0f64;
    let mut worst = 0.0f64;
    for node in 0..m.grid.len() {
        let v = r.at(node);
        let a = m.a.matrix_at(node);
        // Lowered R_ijkl = a_ip R^p_jkl.
        let low = |i: usize, j: usize, k: usize, l: usize| (0..d).map(|p| a[(i, p)] * at(v, p, j, k, l)).sum::<f64>();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        scale = scale.max(at(v, i, j, k, l).abs());
                        worst = worst.max((at(v, i, j, k, l) + at(v, i, j, l, k)).abs());
                        worst = worst.max((at(v, i, j, k, l) + at(v, i, k, l, j) + at(v, i, l, j, k)).abs());
                        worst = worst.max((low(i, j, k, l) + low(j, i, k, l)).abs());
                        worst = worst.max((low(i, j, k, l) - low(k, l, i, j)).abs());
                    }
                }
            }
        }
    }
    assert!(scale > 1.0);
    assert!(worst < 1e-8 * scale, "{worst:e} vs {scale:e}");
}

#[test]
fn flat_examples_have_vanishing_curvature() {
    let spec = ExampleSpec::new(ExampleKind::FlatGraph);
    let m = build_example(&spec, 16).unwrap();
    let bar = extrinsic_bar(&m, Scheme::Spectral).unwrap();
    let curv = curvature_bar(&m, &bar).unwrap();
    assert!(curv.riemann.values().iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn busemann_hausdorff_volume_of_flat_parallel() {
    let spec = ExampleSpec::new(ExampleKind::FlatParallel);
    let m = build_example(&spec, 8).unwrap();
    let one = vec![1.0; m.grid.len()];
    let b2: f64 = 0.3f64.powi(2) + 0.4f64.powi(2);
    let want = (1.0 - b2).powf(2.0);
    assert!((integrate(&one, &m, Volume::F).unwrap() - want).abs() < 1e-14);
    assert!((integrate(&one, &m, Volume::A).unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn sphere_area_outside_polar_caps() {
    // 4π cos r₀, to quadrature accuracy of the band edges.
    let spec = ExampleSpec::new(ExampleKind::SphereLatitudes).with("r0", 0.2);
    let m = build_example(&spec, 256).unwrap();
    assert!(m.is_excised());
    let one = vec![1.0; m.grid.len()];
    let area = integrate(&one, &m, Volume::A).unwrap();
    assert!((area - 4.0 * PI * 0.2f64.cos()).abs() < 0.05, "{area}");
    let bar = extrinsic_bar(&m, Scheme::Spectral).unwrap();
    assert!(curvature_bar(&m, &bar).is_err());
}

#[test]
fn catalog_examples_build_at_small_resolution() {
    for e in CATALOG {
        let m = build_example(&ExampleSpec::new(e.kind), 12).unwrap();
        assert_eq!(m.name, e.name);
        assert!(m.a.first_non_finite().is_none());
        for node in 0..m.grid.len() {
            let n = m.big_n.at(node);
            let len = m.a.matrix_at(node).bilinear(n, n);
            assert!((len - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn node_index_roundtrip(sizes in prop::collection::vec(8usize..13, 2..=3), pick in 0usize..1000) {
        let periods = vec![1.0; sizes.len()];
        let g = PeriodicGrid::new(sizes.clone(), periods).unwrap();
        let node = pick % g.len();
        let idx = g.multi_index(node);
        prop_assert_eq!(g.node(&idx[..sizes.len()]), node);
        let x = g.coords(node);
        for (a, xi) in x.iter().enumerate() {
            prop_assert!((xi - idx[a] as f64 * g.spacing(a)).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_is_linear(c1 in -2.0..2.0f64, c2 in -2.0..2.0f64, k in 1usize..4) {
        let g = PeriodicGrid::uniform(2, 16, 1.0).unwrap();
        let f = TensorField::from_coords(&g, 0, 0, |x, o| o[0] = (TAU * k as f64 * x[0]).sin());
        let h = TensorField::from_coords(&g, 0, 0, |x, o| o[0] = (TAU * x[1]).cos() * x[0].sin());
        let mix = TensorField::from_coords(&g, 0, 0, |x, o| {
            o[0] = c1 * (TAU * k as f64 * x[0]).sin() + c2 * (TAU * x[1]).cos() * x[0].sin()
        });
        for scheme in [Scheme::Spectral, Scheme::Central4] {
            let (df, dh, dm) = (derivative(&f, 0, scheme), derivative(&h, 0, scheme), derivative(&mix, 0, scheme));
            for i in 0..g.len() {
                prop_assert!((dm.at(i)[0] - c1 * df.at(i)[0] - c2 * dh.at(i)[0]).abs() < 1e-10);
            }
        }
    }
}
