use concavity_lab::body::{dilate, make_fourier, minkowski_mix, Body2D, Harmonic};
use concavity_lab::measure::{make_gaussian, make_quadratic, MeasureModel};
use concavity_lab::operator::concavity_power;
use concavity_lab::quad::QuadratureSpec;
use concavity_lab::scan::{scan_b, scan_log_concavity};
use concavity_lab::verify::{check_chain, check_local_b, check_strong_dimbm, DEFAULT_TOLERANCE};
use nalgebra::Matrix2;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::new(64, 32).unwrap()
}

/// Symmetric bodies `1 + Σ a_k cos kθ + b_k sin kθ` with `k ∈ {2, 4}`, kept
/// well inside the `C²₊` class.
fn symmetric_body() -> impl Strategy<Value = Body2D> {
    (0.3f64..2.0, -0.1f64..0.1, -0.1f64..0.1, -0.02f64..0.02, -0.02f64..0.02).prop_map(|(a0, a2, b2, a4, b4)| {
        let hs = [
            Harmonic {
                k: 2,
                a: a0 * a2,
                b: a0 * b2,
            },
            Harmonic {
                k: 4,
                a: a0 * a4,
                b: a0 * b4,
            },
        ];
        make_fourier(a0, &hs, true).unwrap()
    })
}

fn any_body() -> impl Strategy<Value = Body2D> {
    (symmetric_body(), -0.1f64..0.1, -0.1f64..0.1, -0.03f64..0.03).prop_map(|(k, a1, b1, a3)| {
        let mut hs = k.harmonics().to_vec();
        hs.push(Harmonic { k: 1, a: a1, b: b1 });
        hs.push(Harmonic { k: 3, a: a3, b: 0.0 });
        make_fourier(k.a0(), &hs, false).unwrap()
    })
}

fn measure() -> impl Strategy<Value = MeasureModel> {
    prop_oneof![
        (0.5f64..2.0).prop_map(|s| make_gaussian(s).unwrap()),
        (0.5f64..3.0, -0.3f64..0.3, 0.5f64..3.0)
            .prop_map(|(a, b, c)| make_quadratic(Matrix2::new(a, b, b, c)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn support_is_additive_under_mixing(k in any_body(), l in any_body(), t in 0.0f64..=1.0, theta in 0.0f64..6.3) {
        let mix = minkowski_mix(&k, &l, t).unwrap();
        let expect = (1.0 - t) * k.support(theta) + t * l.support(theta);
        prop_assert!((mix.support(theta) - expect).abs() < 1e-12);
        let s = dilate(&k, 1.7).unwrap();
        prop_assert!((s.support(theta) - 1.7 * k.support(theta)).abs() < 1e-12);
    }

    #[test]
    fn galerkin_form_is_psd_and_rho_bar_even(m in measure(), k in symmetric_body()) {
        let cp = concavity_power(&m, &k, 8, &spec()).unwrap();
        prop_assert!(cp.solution.min_eigenvalue >= -1e-9 * cp.solution.b_norm);
        prop_assert!(cp.solution.odd_fraction() <= 1e-8);
        prop_assert!(cp.p_value >= 0.5 - 1e-6);
    }

    #[test]
    fn spectrum_is_symmetric_matrix(m in measure(), k in any_body()) {
        let cp = concavity_power(&m, &k, 6, &spec()).unwrap();
        let b = &cp.system.b;
        prop_assert!((b - b.transpose()).norm() == 0.0);
        prop_assert!(cp.solution.weak_residual < 1e-10);
    }

    #[test]
    fn inequalities_hold_for_symmetric_data(m in measure(), k in symmetric_body()) {
        let s = spec();
        let sol = concavity_power(&m, &k, 8, &s).unwrap().solution;
        prop_assert!(check_strong_dimbm(&m, &k, &sol, &s, DEFAULT_TOLERANCE).unwrap().holds());
        prop_assert!(check_chain(&m, &k, &sol, &s, DEFAULT_TOLERANCE).unwrap().holds());
        prop_assert!(check_local_b(&m, &k, &s, DEFAULT_TOLERANCE).unwrap().holds());
    }

    #[test]
    fn mix_scan_reverses_with_the_bodies(k in any_body(), l in any_body()) {
        let g = make_gaussian(1.0).unwrap();
        let a = scan_log_concavity(&g, &k, &l, 9, &spec()).unwrap();
        let b = scan_log_concavity(&g, &l, &k, 9, &spec()).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter().rev()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.second_diff.iter().zip(b.second_diff.iter().rev()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!(a.is_concave());
    }

    #[test]
    fn b_scan_shifts_under_dilation(k in symmetric_body(), c in -0.5f64..0.5) {
        let g = make_gaussian(1.0).unwrap();
        let a = scan_b(&g, &k, -0.5 + c, 0.5 + c, 9, &spec()).unwrap();
        let b = scan_b(&g, &dilate(&k, c.exp()).unwrap(), -0.5, 0.5, 9, &spec()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
        prop_assert!(a.is_concave());
    }
}
