//! Characteristic flow: group property, sensitivities against central
//! differences, fourth-order convergence, and the `h`-regularity of `∂ₕX`.

mod common;

use common::system;
use proptest::prelude::*;
use transdiff::fields::VectorKind;
use transdiff::flow::integrate_bundle;
use transdiff::stats::{halving_orders, loglog_slope_above_floor, ROUNDOFF_FLOOR};
use transdiff::{ScalarField, TransportSystem, VectorField};

fn system_and_points() -> impl Strategy<Value = (TransportSystem, Vec<f64>)> {
    (1usize..=2).prop_flat_map(|d| (system(d), prop::collection::vec(-1.5f64..1.5, d..=3 * d).prop_map(move |mut v| {
        v.truncate(v.len() / d * d);
        v
    })))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_property_on_mismatched_grids((sys, y) in system_and_points(), h in -0.5f64..0.5, s in 0.2f64..1.0, t in 0.2f64..1.0) {
        // Step sizes near 1/256 but different on each leg.
        let (ns, nt, n) = ((256.0 * s).ceil() as usize, (256.0 * t).ceil() as usize + 1, (256.0 * (s + t)).ceil() as usize);
        let dt = [s / ns as f64, t / nt as f64, (s + t) / n as f64].into_iter().fold(0.0, f64::max);
        let direct = integrate_bundle(&sys, h, &y, s + t, n).unwrap();
        let first = integrate_bundle(&sys, h, &y, s, ns).unwrap();
        let mid: Vec<f64> = (0..first.particles()).flat_map(|i| first.terminal(i).x.to_vec()).collect();
        let second = integrate_bundle(&sys, h, &mid, t, nt).unwrap();
        for i in 0..direct.particles() {
            for (a, b) in direct.terminal(i).x.iter().zip(second.terminal(i).x) {
                prop_assert!((a - b).abs() <= 10.0 * dt.powi(4), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn sensitivities_match_central_differences((sys, y) in system_and_points(), h in -0.45f64..0.45) {
        let lam = 1e-4;
        let b = integrate_bundle(&sys, h, &y, 1.0, 256).unwrap();
        let p = integrate_bundle(&sys, h + lam, &y, 1.0, 256).unwrap();
        let m = integrate_bundle(&sys, h - lam, &y, 1.0, 256).unwrap();
        for i in 0..b.particles() {
            for node in [64, 256] {
                let (s, sp, sm) = (b.state(i, node), p.state(i, node), m.state(i, node));
                for k in 0..s.x.len() {
                    let fd = (sp.x[k] - sm.x[k]) / (2.0 * lam);
                    prop_assert!((s.dxdh[k] - fd).abs() <= 1e-6, "dX/dh {} vs {fd}", s.dxdh[k]);
                }
                let fd = (sp.w - sm.w) / (2.0 * lam);
                prop_assert!((s.dwdh - fd).abs() <= 1e-6, "dW/dh {} vs {fd}", s.dwdh);
            }
        }
    }

    #[test]
    fn fourth_order_against_affine_closed_form(a in prop_oneof![-1.5f64..-0.2, 0.2f64..1.5], c in -1.0f64..1.0, e in -1.0f64..1.0, y in -1.0f64..1.0, h in -0.5f64..0.5) {
        // ẋ = a·x + c + h·e: X = (y + k)e^{at} − k with k = (c + he)/a.
        let sys = TransportSystem::new(VectorField::affine(vec![vec![a]], vec![c]), VectorField::constant(vec![e]), ScalarField::constant(0.0)).unwrap();
        let t = 1.5;
        let k = (c + h * e) / a;
        let x = (y + k) * (a * t).exp() - k;
        let dxdh = e / a * ((a * t).exp() - 1.0);
        let errors: Vec<f64> = [8usize, 16, 32, 64]
            .iter()
            .map(|&n| {
                let s = integrate_bundle(&sys, h, &[y], t, n).unwrap();
                let st = s.terminal(0);
                (st.x[0] - x).abs() + (st.dxdh[0] - dxdh).abs()
            })
            .collect();
        // Only halvings whose finer error is still above roundoff say anything.
        for (o, w) in halving_orders(&errors).iter().zip(errors.windows(2)) {
            if w[1] > 1e-12 * (1.0 + x.abs()) {
                prop_assert!(2f64.powf(*o) >= 14.0, "errors {errors:?}");
            }
        }
    }

    #[test]
    fn sensitivity_is_holder_in_h((sys, y) in system_and_points(), h in -0.4f64..0.4) {
        let base = integrate_bundle(&sys, h, &y, 1.0, 256).unwrap();
        // Fine steps only: coarse ones can sit before the asymptotic regime.
        let steps: Vec<f64> = (8..14).map(|k| 2f64.powi(-k)).collect();
        let diffs: Vec<f64> = steps
            .iter()
            .map(|&d| {
                let other = integrate_bundle(&sys, h + d, &y, 1.0, 256).unwrap();
                (0..base.particles())
                    .flat_map(|i| {
                        let (a, b) = (base.terminal(i), other.terminal(i));
                        a.dxdh.iter().zip(b.dxdh).map(|(u, v)| (u - v).abs()).collect::<Vec<_>>()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        // Smooth fields make ∂ₕX Lipschitz in h, so every α ≤ 1 is attained.
        if let Some(slope) = loglog_slope_above_floor(&steps, &diffs, ROUNDOFF_FLOOR).unwrap() {
            prop_assert!(slope >= 0.9, "slope {slope}, diffs {diffs:?}");
        }
    }
}

#[test]
fn bundles_are_identical_across_thread_counts() {
    let sys = TransportSystem::new(
        VectorField::new(VectorKind::GaussianBump { amplitude: vec![1.2], center: vec![0.3], width: 0.9 }),
        VectorField::new(VectorKind::Sinusoidal { amplitude: vec![0.8], frequency: vec![1.7], phase: 0.2 }),
        ScalarField::sinusoidal(0.5, vec![1.1], 0.0),
    )
    .unwrap();
    let y: Vec<f64> = (0..200).map(|i| -2.0 + 0.02 * i as f64).collect();
    let many = integrate_bundle(&sys, 0.2, &y, 1.0, 256).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let one = pool.install(|| integrate_bundle(&sys, 0.2, &y, 1.0, 256).unwrap());
    assert_eq!(many, one);
}

#[test]
fn trajectory_csv_matches_state() {
    let b = integrate_bundle(&TransportSystem::linear_contraction(), 0.1, &[0.5, -0.5], 1.0, 4).unwrap();
    let mut out = Vec::new();
    b.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "particle,t,X0,dXdh0,W,dWdh");
    assert_eq!(lines.len(), 1 + 2 * 5);
    let last: Vec<f64> = lines[10].split(',').map(|v| v.parse().unwrap()).collect();
    let s = b.terminal(1);
    assert_eq!(last[2], s.x[0]);
    assert_eq!(last[3], s.dxdh[0]);
}
