use num_complex::Complex64;
use proptest::prelude::*;
use qgauss_core::qmoments::{
    circular_covariance, circular_star_moment, level_gram, moment_row, ou_apply, pairing_moment,
    qfock_apply, CircularParams, FockLetter, FockVector, StarWord,
};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Letters 0,1 create e_0,e_1; letters 2,3 annihilate.
fn fock_letters(code: &[usize]) -> Vec<FockLetter> {
    code.iter()
        .map(|&x| FockLetter::basis(x < 2, x % 2, 2))
        .collect()
}

#[test]
fn fock_oracle_matches_pairing_sums() {
    for q in [-0.5, 0.0, 0.5] {
        for len in 1..=6usize {
            for mut code_num in 0..4usize.pow(len as u32) {
                let mut code = Vec::with_capacity(len);
                for _ in 0..len {
                    code.push(code_num % 4);
                    code_num /= 4;
                }
                let word = fock_letters(&code);
                let v = qfock_apply(&word, &FockVector::vacuum(), q, len).unwrap();
                let fock = v.vacuum_component();
                let pair = pairing_moment(
                    len,
                    |s, t| {
                        if code[s] >= 2 && code[t] < 2 && code[s] % 2 == code[t] % 2 {
                            c(1.0)
                        } else {
                            c(0.0)
                        }
                    },
                    q,
                )
                .unwrap();
                assert!((fock - pair).norm() <= 1e-10, "{code:?} q={q}: {fock} vs {pair}");
            }
        }
    }
}

#[test]
fn gaussian_fourth_and_sixth_moments() {
    for q in [-0.5, 0.0, 0.5] {
        let g = vec![
            FockLetter::Create(vec![c(1.0)]),
            FockLetter::Annihilate(vec![c(1.0)]),
        ];
        let mut v = FockVector::vacuum();
        let mut values = Vec::new();
        for p in 1..=6 {
            let mut next = FockVector::default();
            for l in &g {
                let part = qfock_apply(std::slice::from_ref(l), &v, q, 6).unwrap();
                for (w, x) in part.terms {
                    *next.terms.entry(w).or_default() += x;
                }
            }
            v = next;
            values.push((p, v.vacuum_component()));
        }
        assert!((values[3].1 - c(2.0 + q)).norm() < 1e-12);
        let six = 5.0 + 6.0 * q + 3.0 * q * q + q.powi(3);
        assert!((values[5].1 - c(six)).norm() < 1e-12);
    }
}

#[test]
fn annihilation_is_the_adjoint() {
    let q = 0.3;
    let h = vec![Complex64::new(0.4, -0.2), Complex64::new(-1.1, 0.7)];
    let mut u = FockVector::default();
    u.terms.insert(vec![0, 1], Complex64::new(0.5, 0.1));
    u.terms.insert(vec![1, 1], Complex64::new(-0.3, 0.9));
    let mut v = FockVector::default();
    v.terms.insert(vec![1, 0, 1], Complex64::new(1.0, -0.4));
    v.terms.insert(vec![0, 0, 1], Complex64::new(0.2, 0.2));
    let av = qfock_apply(&[FockLetter::Annihilate(h.clone())], &v, q, 3).unwrap();
    let cu = qfock_apply(&[FockLetter::Create(h)], &u, q, 3).unwrap();
    assert!((u.inner(&av, q) - cu.inner(&v, q)).norm() < 1e-14);
}

#[test]
fn gram_matrices_are_positive() {
    for q in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        for n in 1..=4 {
            let g = level_gram(2, n, q);
            assert!((&g - g.transpose()).amax() < 1e-14);
            let ev = g.symmetric_eigen().eigenvalues;
            assert!(ev.min() >= -1e-10, "q={q} n={n} min={}", ev.min());
        }
    }
}

#[test]
fn ou_semigroup_law() {
    let mut v = FockVector::vacuum();
    v.terms.insert(vec![0], c(2.0));
    v.terms.insert(vec![1, 0, 1], Complex64::new(-1.0, 3.0));
    let (s, t) = (0.25, 1.1);
    let a = ou_apply(s, &ou_apply(t, &v).unwrap()).unwrap();
    let b = ou_apply(s + t, &v).unwrap();
    for (w, x) in &a.terms {
        assert!((x - b.terms[w]).norm() <= 1e-15 * x.norm().max(1.0));
    }
}

#[test]
fn ou_is_contractive_in_the_q_norm() {
    // one-sided check only; the constant of the ultracontractive estimate is not reproduced
    let q = 0.6;
    let mut v = FockVector::default();
    v.terms.insert(vec![0, 0], c(1.0));
    v.terms.insert(vec![0, 1], c(-2.0));
    v.terms.insert(vec![], c(0.5));
    for t in [0.0, 0.1, 1.0, 5.0] {
        let w = ou_apply(t, &v).unwrap();
        assert!(w.inner(&w, q).re <= v.inner(&v, q).re + 1e-14);
    }
}

#[test]
fn moment_row_fields() {
    let p = CircularParams::from_lambda(0.5, &[16.0]).unwrap();
    let w = StarWord::new(vec![(1, 1), (1, -1)]).unwrap();
    let row = moment_row(&w, &p).unwrap();
    assert_eq!(row.word, "c1 c1*");
    assert!((row.value_re - 4.0).abs() < 1e-14);
    let json = serde_json::to_value(&row).unwrap();
    for key in ["word", "q", "mu", "value_re", "value_im"] {
        assert!(json.get(key).is_some());
    }
}

proptest! {
    #[test]
    fn single_pair_is_the_covariance(re in -3.0f64..3.0, im in -3.0f64..3.0, q in -0.99f64..0.99) {
        let z = Complex64::new(re, im);
        prop_assert_eq!(pairing_moment(2, |_, _| z, q).unwrap(), z);
    }

    #[test]
    fn tracial_specialization(code in proptest::collection::vec((1usize..=2, any::<bool>()), 1..=8), q in -0.9f64..0.9) {
        let letters: Vec<(usize, i8)> = code.iter().map(|&(j, s)| (j, if s { 1 } else { -1 })).collect();
        let w = StarWord::new(letters.clone()).unwrap();
        let p = CircularParams::new(q, vec![1.0, 1.0]).unwrap();
        let a = circular_star_moment(&w, &p).unwrap();
        let b = pairing_moment(letters.len(), |s, t| {
            let (j1, k1) = letters[s];
            let (j2, k2) = letters[t];
            if j1 == j2 && k1 == -k2 { c(1.0) } else { c(0.0) }
        }, q).unwrap();
        prop_assert!((a - b).norm() < 1e-12);
        prop_assert_eq!(circular_covariance(1, 1, 1, -1, &p), c(1.0));
    }
}
