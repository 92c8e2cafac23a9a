use num_complex::Complex64;
use proptest::prelude::*;
use qgauss_core::arakiwoods::*;

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn grid() -> Vec<f64> {
    (0..100).map(|i| (-3.0 + 6.0 * i as f64 / 99.0).exp()).collect()
}

#[test]
fn reciprocal_symmetry_is_exact_on_grid() {
    for n in 1..=8 {
        for t in grid() {
            let a = discretize_exact(t, n).unwrap();
            let b = discretize_exact(1.0 / t, n).unwrap();
            assert!(a.is_inverse_of(b), "t = {t}, n = {n}: {a:?} {b:?}");
        }
    }
}

#[test]
fn discretization_increases_to_identity() {
    for t in grid().into_iter().filter(|&t| t >= 1.0) {
        let mut prev = 0.0;
        for n in 1..=12 {
            let v = discretize_value(t, n).unwrap();
            assert!(prev <= v && v <= t, "t = {t}, n = {n}");
            prev = v;
        }
        if t < 12.0 {
            assert!(t - prev <= 1.0 / 4096.0 + 1e-15);
        }
    }
}

#[test]
fn fhat_satisfies_conditions() {
    let lambda = [1.0, 4.0, 16.0, 7.3];
    let spec = SpectralData::diagonal(vec![1.0; 8]).unwrap();
    let basis = fhat_basis(&lambda).unwrap();
    for (j, u) in &basis {
        for (l, v) in &basis {
            let got = deformed_inner(u, v, &spec).unwrap();
            let a = j.unsigned_abs() as usize;
            let expect = if j == l {
                cz(1.0, 0.0)
            } else if j.abs() != l.abs() {
                cz(0.0, 0.0)
            } else {
                let lam = lambda[a - 1];
                let x = (lam - 1.0) / (lam + 1.0);
                if *j > 0 {
                    cz(0.0, x)
                } else {
                    cz(0.0, -x)
                }
            };
            assert!((got - expect).norm() < 1e-12, "j = {j}, l = {l}: {got}");
        }
    }
}

#[test]
fn rotation_planes_reproduce_conditions() {
    let lambda = [4.0, 2.5];
    let spec = SpectralData::rotation_planes(&lambda).unwrap();
    let e = |i: usize| {
        let mut v = vec![cz(0.0, 0.0); 4];
        v[i] = cz(1.0, 0.0);
        v
    };
    for (j, &lam) in lambda.iter().enumerate() {
        let (f, g) = (e(2 * j), e(2 * j + 1));
        let x = deformed_inner(&f, &g, &spec).unwrap();
        assert!((x - cz(0.0, (lam - 1.0) / (lam + 1.0))).norm() < 1e-12);
        assert!((deformed_inner(&f, &f, &spec).unwrap() - 1.0).norm() < 1e-12);
        assert!((deformed_inner(&g, &g, &spec).unwrap() - 1.0).norm() < 1e-12);
    }
}

#[test]
fn inner_convergence_dyadic_bound() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let vectors = vec![
        vec![cz(1.0, 0.0), cz(0.0, 0.0), cz(0.0, 0.0)],
        vec![cz(0.0, 0.0), cz(s, 0.0), cz(0.0, s)],
        vec![cz(0.0, 0.0), cz(s, 0.0), cz(0.0, -s)],
    ];
    let spec = SpectralData::new(vec![0.3, 1.0, 2.5], vectors).unwrap();
    let xi = [cz(0.6, 0.0), cz(0.0, 0.48), cz(0.64, 0.0)];
    let eta = [cz(0.0, -0.8), cz(0.36, 0.0), cz(0.48, 0.0)];
    let rows = inner_convergence(&xi, &eta, &spec, &[3, 4, 5, 6]).unwrap();
    for r in rows {
        assert!(r.error <= 3.0 * 0.5f64.powi(r.n as i32), "{r:?}");
    }
}

#[test]
fn identity_generator_has_no_error() {
    let spec = SpectralData::diagonal(vec![1.0; 2]).unwrap();
    let xi = [cz(1.0, 2.0), cz(-0.5, 0.0)];
    for r in inner_convergence(&xi, &xi, &spec, &[1, 2, 3, 4]).unwrap() {
        assert_eq!(r.error, 0.0);
    }
}

#[test]
fn eigenvector_errors_decrease() {
    let spec = SpectralData::diagonal(vec![2.7]).unwrap();
    let e = [cz(1.0, 0.0)];
    let rows = inner_convergence(&e, &e, &spec, &[2, 3, 4, 5, 6]).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].error <= w[0].error);
    }
}

#[test]
fn sigma_bound_examples() {
    let spec = SpectralData::diagonal(vec![2.0, 1.0]).unwrap();
    let e = [cz(1.0, 0.0), cz(0.0, 0.0)];
    let mut prev = 0.0;
    for n in 2..=6 {
        let v = sigma_bound_norm(&spec, &e, 0.5, n, 4.0).unwrap();
        assert!(v >= prev);
        prev = v;
    }
    assert!((prev - 8.0 / 3.0).abs() < 1e-12);
    let one = [cz(0.0, 0.0), cz(1.0, 0.0)];
    for n in 1..5 {
        assert!((sigma_bound_norm(&spec, &one, 1.3, n, 4.0).unwrap() - 1.0).abs() < 1e-14);
    }
    assert!(sigma_bound_norm(&spec, &e, 0.5, 3, 1.5).is_err());
}

#[test]
fn spectral_data_json() {
    let spec = SpectralData::rotation_planes(&[4.0]).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    assert!(text.contains("\"pairing\":[1,0]"));
    let back: SpectralData = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}

proptest! {
    #[test]
    fn real_vectors_keep_their_norm(
        lam in proptest::collection::vec(1.0f64..20.0, 1..4),
        coords in proptest::collection::vec(-3.0f64..3.0, 8),
    ) {
        let spec = SpectralData::rotation_planes(&lam).unwrap();
        let xi: Vec<Complex64> = coords[..spec.dim()].iter().map(|&x| cz(x, 0.0)).collect();
        let norm2: f64 = xi.iter().map(|z| z.norm_sqr()).sum();
        let v = deformed_inner(&xi, &xi, &spec).unwrap();
        prop_assert!((v.re - norm2).abs() < 1e-12 * (1.0 + norm2));
    }

    #[test]
    fn deformed_product_is_positive(
        lam in proptest::collection::vec(0.05f64..20.0, 3),
        re in proptest::collection::vec(-2.0f64..2.0, 3),
        im in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let spec = SpectralData::diagonal(lam).unwrap();
        let xi: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| cz(a, b)).collect();
        let v = deformed_inner(&xi, &xi, &spec).unwrap();
        prop_assert!(v.re >= 0.0 && v.im.abs() < 1e-14);
    }

    #[test]
    fn reciprocal_symmetry(t in 1e-3f64..1e3, n in 1u32..12) {
        let a = discretize_exact(t, n).unwrap();
        let b = discretize_exact(1.0 / t, n).unwrap();
        prop_assert!(a.is_inverse_of(b));
    }

    #[test]
    fn finitely_many_values(t in 1.0f64..50.0, n in 1u32..10) {
        let d = discretize_exact(t, n).unwrap();
        prop_assert!(d.den <= 1 << n && d.den.is_power_of_two());
        prop_assert!(d.value() <= f64::from(n).max(1.0));
    }
}
