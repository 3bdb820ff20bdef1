//! Measure solutions via the representation formula
//! `μₜ = X(t,·)#(e^{∫₀ᵗ w(s,X(s,·))ds} μ₀)`, and the weak-formulation residual
//! used to check them.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, TransportSystem};
use crate::flow::{integrate_bundle, TrajectoryBundle};
use crate::measures::{self, DiscreteMeasure};

/// The solution curve `t ↦ μₜ^h` on the integrator grid.
#[derive(Debug, Clone)]
pub struct SolutionCurve {
    system: TransportSystem,
    initial: DiscreteMeasure,
    bundle: TrajectoryBundle,
}

/// Integrates the characteristics of every atom of `μ₀` (canonicalized).
pub fn solve_measure(
    mu0: &DiscreteMeasure,
    sys: &TransportSystem,
    h: f64,
    t_end: f64,
    steps: usize,
) -> Result<SolutionCurve> {
    let initial = mu0.canonicalize();
    if initial.is_empty() {
        return Err(Error::invalid("initial measure is empty"));
    }
    if initial.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: initial.dim() });
    }
    let bundle = integrate_bundle(sys, h, initial.coords(), t_end, steps)?;
    Ok(SolutionCurve { system: sys.clone(), initial, bundle })
}

impl SolutionCurve {
    pub fn bundle(&self) -> &TrajectoryBundle {
        &self.bundle
    }

    pub fn initial(&self) -> &DiscreteMeasure {
        &self.initial
    }

    pub fn system(&self) -> &TransportSystem {
        &self.system
    }

    pub fn h(&self) -> f64 {
        self.bundle.h()
    }

    pub fn times(&self) -> &[f64] {
        self.bundle.times()
    }

    pub fn steps(&self) -> usize {
        self.bundle.steps()
    }

    /// Weight `w⁰ᵢ e^{Wᵢ(t_k)}` of particle `i` at node `k`.
    pub fn weight(&self, particle: usize, node: usize) -> f64 {
        self.initial.weights()[particle] * self.bundle.state(particle, node).w.exp()
    }

    /// `μ` at grid node `k`, canonicalized.
    pub fn measure_at(&self, node: usize) -> DiscreteMeasure {
        if node == 0 {
            return self.initial.clone();
        }
        let n = self.initial.len();
        let mut coords = Vec::with_capacity(n * self.initial.dim());
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            coords.extend_from_slice(self.bundle.state(i, node).x);
            weights.push(self.weight(i, node));
        }
        DiscreteMeasure::from_flat(self.initial.dim(), coords, weights)
            .expect("bundle states are finite")
            .canonicalize()
    }

    pub fn terminal(&self) -> DiscreteMeasure {
        self.measure_at(self.steps())
    }

    /// Grid node whose time equals `t` up to `1e-12`.
    pub fn node_for_time(&self, t: f64) -> Option<usize> {
        self.times().iter().position(|&s| (s - t).abs() <= 1e-12)
    }

    /// Writes the measure at time `t` in the measure CSV format.
    pub fn write_snapshot<W: Write>(&self, t: f64, out: W) -> Result<()> {
        let node = self
            .node_for_time(t)
            .ok_or_else(|| Error::invalid(format!("t = {t} is not a grid time")))?;
        measures::write_csv(&self.measure_at(node), out)
    }
}

/// Compactly supported `C¹` time windows with `χ` and `χ'` in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "window", rename_all = "snake_case")]
pub enum TimeWindow {
    /// `cos²(πt/(2T))` on `[0, T]`, zero after; equals one at `t = 0`.
    CosSquared { horizon: f64 },
    /// `sin²(π(t−s)/(e−s))` on `[s, e]`, zero elsewhere.
    SinSquared { start: f64, end: f64 },
}

impl TimeWindow {
    /// `(χ(t), χ'(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            TimeWindow::CosSquared { horizon } => {
                if t >= horizon {
                    return (0.0, 0.0);
                }
                let a = PI * t / (2.0 * horizon);
                (a.cos().powi(2), -PI / (2.0 * horizon) * (2.0 * a).sin())
            }
            TimeWindow::SinSquared { start, end } => {
                if t <= start || t >= end {
                    return (0.0, 0.0);
                }
                let len = end - start;
                let a = PI * (t - start) / len;
                (a.sin().powi(2), PI / len * (2.0 * a).sin())
            }
        }
    }

    pub fn support_end(&self) -> f64 {
        match *self {
            TimeWindow::CosSquared { horizon } => horizon,
            TimeWindow::SinSquared { end, .. } => end,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            TimeWindow::CosSquared { horizon } => horizon > 0.0 && horizon.is_finite(),
            TimeWindow::SinSquared { start, end } => start >= 0.0 && end > start && end.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("malformed time window {self:?}")))
        }
    }
}

/// Separable test function `φ(t,x) = χ(t)·η(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeTest {
    pub window: TimeWindow,
    pub spatial: ScalarField,
}

impl SpaceTimeTest {
    pub fn new(window: TimeWindow, spatial: ScalarField) -> Self {
        SpaceTimeTest { window, spatial }
    }
}

/// The finite witness panel: every normalized panel function under a full
/// window and an interior window on `[0, horizon]`.
pub fn phi_panel(horizon: f64, alpha: f64) -> Result<Vec<(String, SpaceTimeTest)>> {
    let windows = [
        ("full", TimeWindow::CosSquared { horizon }),
        ("inner", TimeWindow::SinSquared { start: 0.2 * horizon, end: 0.8 * horizon }),
    ];
    let mut out = Vec::new();
    for (id, psi) in crate::fields::psi_panel(alpha)? {
        for (wid, w) in windows {
            out.push((format!("{id}/{wid}"), SpaceTimeTest::new(w, psi.clone())));
        }
    }
    Ok(out)
}

/// `|∫₀^∞∫(∂ₜφ + b^h·∇φ + wφ) dμₜ dt + ∫φ(0,·) dμ₀|` with trapezoidal time
/// quadrature on the curve's grid.
///
/// The `wφ` term sits on the left with a plus sign: that is the identity the
/// representation formula satisfies, since `d/dt ∫φ dμₜ = ∫(∂ₜφ + b·∇φ + wφ) dμₜ`.
pub fn weak_residual(curve: &SolutionCurve, phi: &SpaceTimeTest, sys: &TransportSystem) -> Result<f64> {
    residual_with_scale(curve, phi, sys, 1.0)
}

/// Same as [`weak_residual`] but with every weight at `t > 0` multiplied by
/// `factor`; the initial term keeps `μ₀`. A negative control.
pub fn corrupted_residual(curve: &SolutionCurve, phi: &SpaceTimeTest, sys: &TransportSystem, factor: f64) -> Result<f64> {
    residual_with_scale(curve, phi, sys, factor)
}

fn residual_with_scale(curve: &SolutionCurve, phi: &SpaceTimeTest, sys: &TransportSystem, factor: f64) -> Result<f64> {
    phi.window.validate()?;
    phi.spatial.validate()?;
    let times = curve.times();
    let t_end = *times.last().expect("grid has nodes");
    if phi.window.support_end() > t_end + 1e-12 {
        return Err(Error::invalid(format!(
            "test function support ends at {} beyond the integrated horizon {t_end}",
            phi.window.support_end()
        )));
    }
    if sys.dim() != curve.initial.dim() {
        return Err(Error::DimensionMismatch { expected: curve.initial.dim(), found: sys.dim() });
    }
    let h = curve.h();
    let bundle = &curve.bundle;
    let n = times.len();
    // Per-particle quadrature, summed in a fixed order afterwards.
    let per_particle: Vec<f64> = (0..curve.initial.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..n {
                let t = times[k];
                let (chi, dchi) = phi.window.eval(t);
                if chi == 0.0 && dchi == 0.0 {
                    continue;
                }
                let s = bundle.state(i, k);
                let (eta, grad) = phi.spatial.eval(0.0, s.x);
                let vel = sys.perturbed_velocity(h, t, s.x).value;
                let adv: f64 = vel.iter().zip(&grad).map(|(v, g)| v * g).sum();
                let growth = sys.w.value(t, s.x);
                let mut weight = curve.weight(i, k);
                if k > 0 {
                    weight *= factor;
                }
                let integrand = weight * (dchi * eta + chi * (adv + growth * eta));
                let dt = if k == 0 {
                    0.5 * (times[1] - times[0])
                } else if k == n - 1 {
                    0.5 * (times[k] - times[k - 1])
                } else {
                    0.5 * (times[k + 1] - times[k - 1])
                };
                acc += dt * integrand;
            }
            let (chi0, _) = phi.window.eval(0.0);
            acc + chi0 * curve.initial.weights()[i] * phi.spatial.value(0.0, curve.initial.point(i))
        })
        .collect();
    Ok(per_particle.iter().sum::<f64>().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ScalarField, VectorField, VectorKind};

    #[test]
    fn counterexample_curve_is_a_moving_dirac() {
        let sys = TransportSystem::counterexample();
        for h in [-0.5, 0.1, 0.3] {
            let curve = solve_measure(&DiscreteMeasure::dirac(&[0.0]).unwrap(), &sys, h, 1.0, 256).unwrap();
            let mu = curve.terminal();
            assert_eq!(mu.len(), 1);
            assert!((mu.point(0)[0] - (1.0 + h)).abs() < 1e-13);
            assert_eq!(mu.weights(), &[1.0]);
        }
    }

    #[test]
    fn frozen_dynamics_and_constant_growth() {
        let mu0 = DiscreteMeasure::from_1d(&[-1.0, 0.5], &[0.25, 0.75]).unwrap();
        let frozen = solve_measure(&mu0, &TransportSystem::frozen_growth(0.0), 0.2, 2.0, 32).unwrap();
        for k in [0, 7, 32] {
            assert_eq!(frozen.measure_at(k), mu0.canonicalize());
        }
        let grow = solve_measure(&mu0, &TransportSystem::frozen_growth(0.4), 0.0, 2.0, 64).unwrap();
        assert!((grow.terminal().total_mass() - (0.8f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn initial_node_returns_initial_measure() {
        let mu0 = DiscreteMeasure::from_1d(&[0.3, -0.1, 0.3], &[1.0, -2.0, 0.5]).unwrap();
        let curve = solve_measure(&mu0, &TransportSystem::linear_contraction(), 0.1, 1.0, 16).unwrap();
        assert_eq!(curve.measure_at(0), mu0.canonicalize());
    }

    #[test]
    fn rejects_empty_and_mismatched_initial_data() {
        let sys = TransportSystem::counterexample();
        assert!(solve_measure(&DiscreteMeasure::zero(1), &sys, 0.0, 1.0, 8).is_err());
        let two_d = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        assert!(solve_measure(&two_d, &sys, 0.0, 1.0, 8).is_err());
    }

    #[test]
    fn window_derivatives_match_finite_differences() {
        for w in [TimeWindow::CosSquared { horizon: 1.3 }, TimeWindow::SinSquared { start: 0.2, end: 0.9 }] {
            for i in 1..100 {
                let t = 0.015 * i as f64 + 0.0031;
                let e = 1e-6;
                let fd = (w.eval(t + e).0 - w.eval(t - e).0) / (2.0 * e);
                assert!((fd - w.eval(t).1).abs() < 1e-6, "{w:?} t={t} fd={fd} an={}", w.eval(t).1);
            }
        }
    }

    #[test]
    fn residual_vanishes_far_from_trajectories() {
        let sys = TransportSystem::counterexample();
        let curve = solve_measure(&DiscreteMeasure::dirac(&[0.0]).unwrap(), &sys, 0.2, 1.0, 64).unwrap();
        let phi = SpaceTimeTest::new(
            TimeWindow::CosSquared { horizon: 1.0 },
            ScalarField::compact_bump(1.0, vec![5.0], 1.0),
        );
        assert_eq!(weak_residual(&curve, &phi, &sys).unwrap(), 0.0);
    }

    #[test]
    fn residual_rejects_long_support() {
        let sys = TransportSystem::counterexample();
        let curve = solve_measure(&DiscreteMeasure::dirac(&[0.0]).unwrap(), &sys, 0.0, 1.0, 64).unwrap();
        let phi = SpaceTimeTest::new(TimeWindow::CosSquared { horizon: 2.0 }, ScalarField::constant(1.0));
        assert!(weak_residual(&curve, &phi, &sys).is_err());
    }

    #[test]
    fn residual_with_growth_is_small() {
        let sys = TransportSystem {
            b: VectorField::new(VectorKind::Sinusoidal { amplitude: vec![0.6], frequency: vec![1.0], phase: 0.0 }),
            b1: VectorField::constant(vec![1.0]),
            w: ScalarField::gaussian(0.8, vec![0.5], 1.0),
        };
        let mu0 = DiscreteMeasure::from_1d(&[-0.5, 0.0, 0.7], &[0.2, 0.5, 0.3]).unwrap();
        let curve = solve_measure(&mu0, &sys, 0.1, 1.0, 256).unwrap();
        for (id, phi) in phi_panel(1.0, 0.5).unwrap() {
            let r = weak_residual(&curve, &phi, &sys).unwrap();
            assert!(r <= 1e-4, "{id}: {r}");
        }
    }
}
