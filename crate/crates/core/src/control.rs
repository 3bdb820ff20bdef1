//! Scalar control of `γ̂(⟨K, μₜ^h⟩)` over `h ∈ [−1/2, 1/2]` with gradients
//! taken from the derivative functional.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, TestFunction, TransportSystem};
use crate::measures::{fmt17, DiscreteMeasure};
use crate::pushforward::solve_measure;
use crate::sensitivity::DerivativeFunctional;

pub const H_BOUNDS: (f64, f64) = (-0.5, 0.5);
pub const ARMIJO: f64 = 1e-4;
pub const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

/// Outer scalar function, each with a closed-form derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaHat {
    /// `(s − target)²`
    Quadratic { target: f64 },
    /// `1 / (1 + e^{−steepness·(s − midpoint)})`
    Logistic { steepness: f64, midpoint: f64 },
    Identity,
}

impl GammaHat {
    pub fn eval(&self, s: f64) -> (f64, f64) {
        match *self {
            GammaHat::Quadratic { target } => ((s - target).powi(2), 2.0 * (s - target)),
            GammaHat::Logistic { steepness, midpoint } => {
                let z = steepness * (s - midpoint);
                // Evaluated on the side that cannot overflow.
                let sig = if z >= 0.0 { 1.0 / (1.0 + (-z).exp()) } else { z.exp() / (1.0 + z.exp()) };
                (sig, steepness * sig * (1.0 - sig))
            }
            GammaHat::Identity => (s, 1.0),
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, GammaHat::Logistic { .. })
    }
}

/// `γ̄(h) = γ̂(⟨K, μₜ^h⟩)` together with the system that produces `μₜ^h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    k: ScalarField,
    gamma: GammaHat,
    mu0: DiscreteMeasure,
    system: TransportSystem,
    t_end: f64,
    steps: usize,
}

impl ObjectiveSpec {
    /// Rejects a non-smooth `K`: the pairing with the derivative needs `C^{1+α}`.
    pub fn new(
        k: &TestFunction,
        gamma: GammaHat,
        mu0: DiscreteMeasure,
        system: TransportSystem,
        t_end: f64,
        steps: usize,
    ) -> Result<Self> {
        let k = k.smooth()?.clone();
        k.validate()?;
        system.validate()?;
        if mu0.dim() != system.dim() {
            return Err(Error::DimensionMismatch { expected: system.dim(), found: mu0.dim() });
        }
        if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
            return Err(Error::invalid("t_end must be positive and steps at least one"));
        }
        if let GammaHat::Logistic { steepness, midpoint } = gamma {
            if !(steepness.is_finite() && midpoint.is_finite()) {
                return Err(Error::NonFinite("logistic parameter".into()));
            }
        }
        Ok(ObjectiveSpec { k, gamma, mu0, system, t_end, steps })
    }

    pub fn k(&self) -> &ScalarField {
        &self.k
    }

    pub fn gamma(&self) -> &GammaHat {
        &self.gamma
    }

    fn check_h(&self, h: f64) -> Result<()> {
        if h.is_finite() && (H_BOUNDS.0..=H_BOUNDS.1).contains(&h) {
            Ok(())
        } else {
            Err(Error::invalid(format!("control h = {h} outside [{}, {}]", H_BOUNDS.0, H_BOUNDS.1)))
        }
    }

    /// `⟨K, μₜ^h⟩`.
    pub fn observation(&self, h: f64) -> Result<f64> {
        self.check_h(h)?;
        let mu = solve_measure(&self.mu0, &self.system, h, self.t_end, self.steps)?.terminal();
        Ok(mu.integrate(|x| self.k.value(0.0, x)))
    }
}

pub fn evaluate_objective(spec: &ObjectiveSpec, h: f64) -> Result<f64> {
    Ok(spec.gamma.eval(spec.observation(h)?).0)
}

/// `(γ̄(h), γ̂′(⟨K, μ^h⟩)·⟨K, ∂ₕμ^h⟩)` from a single flow solve.
pub fn objective_and_gradient(spec: &ObjectiveSpec, h: f64) -> Result<(f64, f64)> {
    spec.check_h(h)?;
    let curve = solve_measure(&spec.mu0, &spec.system, h, spec.t_end, spec.steps)?;
    let s = curve.terminal().integrate(|x| spec.k.value(0.0, x));
    let d = DerivativeFunctional::from_curve(&curve);
    let (f, df) = spec.gamma.eval(s);
    Ok((f, df * d.pair_smooth(&spec.k)))
}

pub fn objective_gradient(spec: &ObjectiveSpec, h: f64) -> Result<f64> {
    objective_and_gradient(spec, h).map(|(_, g)| g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub h: f64,
    pub objective: f64,
    pub gradient: f64,
    /// Accepted step length; zero on the row where the loop stops.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimization {
    pub h_star: f64,
    pub objective: f64,
    pub grad_at_star: f64,
    /// Gradient with the components that push against an active bound
    /// removed; the stopping test uses this.
    pub projected_gradient: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl Minimization {
    /// CSV `iter,h,objective,gradient,step`.
    pub fn write_trace<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["iter", "h", "objective", "gradient", "step"])?;
        for r in &self.trace {
            wtr.write_record([r.iter.to_string(), fmt17(r.h), fmt17(r.objective), fmt17(r.gradient), fmt17(r.step)])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn project(h: f64) -> f64 {
    h.clamp(H_BOUNDS.0, H_BOUNDS.1)
}

fn projected_gradient(h: f64, g: f64) -> f64 {
    if (h <= H_BOUNDS.0 && g > 0.0) || (h >= H_BOUNDS.1 && g < 0.0) {
        0.0
    } else {
        g
    }
}

/// Projected steepest descent with Armijo backtracking.
///
/// The trial step starts from the Barzilai–Borwein estimate `Δh/Δg` of the
/// previous iteration when it is positive (one otherwise), so quadratic-like
/// objectives are usually accepted without backtracking.
pub fn minimize(spec: &ObjectiveSpec, h0: f64, tol: f64, max_iter: usize) -> Result<Minimization> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    spec.check_h(h0)?;
    let mut h = h0;
    let (mut f, mut g) = objective_and_gradient(spec, h)?;
    let mut trace = Vec::new();
    let mut trial = 1.0;
    let mut iter = 0;
    let mut stalled = false;
    while iter < max_iter && projected_gradient(h, g).abs() > tol {
        let mut step = trial;
        let accepted = loop {
            let cand = project(h - step * g);
            if cand != h {
                let fc = evaluate_objective(spec, cand)?;
                if fc <= f + ARMIJO * g * (cand - h) {
                    break Some((cand, fc));
                }
            }
            step *= SHRINK;
            if step < trial * SHRINK.powi(MAX_BACKTRACKS as i32) {
                break None;
            }
        };
        let Some((hn, fnew)) = accepted else {
            stalled = true;
            break;
        };
        trace.push(TraceRow { iter, h, objective: f, gradient: g, step });
        let gn = objective_gradient(spec, hn)?;
        let (dh, dg) = (hn - h, gn - g);
        trial = if dg != 0.0 && (dh / dg) > 0.0 { dh / dg } else { 1.0 };
        h = hn;
        f = fnew;
        g = gn;
        iter += 1;
    }
    trace.push(TraceRow { iter, h, objective: f, gradient: g, step: 0.0 });
    let pg = projected_gradient(h, g);
    Ok(Minimization {
        h_star: h,
        objective: f,
        grad_at_star: g,
        projected_gradient: pg,
        iterations: iter,
        converged: !stalled && pg.abs() <= tol,
        trace,
    })
}

/// Minimum of the objective on the grid `lo + k·resolution`; ties go to the
/// smaller `h`.
pub fn grid_search(spec: &ObjectiveSpec, lo: f64, hi: f64, resolution: f64) -> Result<(f64, f64)> {
    if !(resolution > 0.0) || !(lo <= hi) {
        return Err(Error::invalid("grid needs lo ≤ hi and a positive resolution"));
    }
    let (lo, hi) = (lo.max(H_BOUNDS.0), hi.min(H_BOUNDS.1));
    let n = ((hi - lo) / resolution + 1e-9).floor() as usize;
    let values: Vec<(f64, f64)> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let h = (lo + k as f64 * resolution).min(hi);
            Ok((h, evaluate_objective(spec, h)?))
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold((f64::NAN, f64::INFINITY), |best, (h, v)| if v < best.1 { (h, v) } else { best }))
}

/// Coarse grid at `1e-3` over the bounds, then `1e-5` around the coarse winner.
pub fn grid_oracle(spec: &ObjectiveSpec) -> Result<(f64, f64)> {
    let (h, _) = grid_search(spec, H_BOUNDS.0, H_BOUNDS.1, 1e-3)?;
    grid_search(spec, h - 1e-3, h + 1e-3, 1e-5)
}

/// Local variant of [`grid_oracle`] restricted to `[lo, hi]`.
pub fn grid_oracle_in(spec: &ObjectiveSpec, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let (h, _) = grid_search(spec, lo, hi, 1e-3)?;
    grid_search(spec, (h - 1e-3).max(lo), (h + 1e-3).min(hi), 1e-5)
}

/// The quadratic benchmark: unit transport of `δ₀` to `t = 1`, `K` a unit
/// Gaussian centered at 0.5, target `K(1.2)`; the minimizer is `h = 0.2`.
pub fn quadratic_benchmark() -> ObjectiveSpec {
    let k = ScalarField::gaussian(1.0, vec![0.5], 1.0);
    let target = k.value(0.0, &[1.2]);
    ObjectiveSpec::new(
        &TestFunction::Smooth(k),
        GammaHat::Quadratic { target },
        DiscreteMeasure::dirac(&[0.0]).expect("finite point"),
        TransportSystem::counterexample(),
        1.0,
        256,
    )
    .expect("benchmark is valid")
}

/// A non-convex benchmark: logistic of `⟨sin(10x), μ^h⟩` under unit
/// transport; it has an interior minimum near `h ≈ 0.0996` and descent
/// reaches the bound `h = −1/2` from starts left of `h ≈ −0.215`.
pub fn logistic_benchmark() -> ObjectiveSpec {
    ObjectiveSpec::new(
        &TestFunction::Smooth(ScalarField::sinusoidal(1.0, vec![10.0], 0.0)),
        GammaHat::Logistic { steepness: 2.0, midpoint: 0.0 },
        DiscreteMeasure::dirac(&[0.0]).expect("finite point"),
        TransportSystem::counterexample(),
        1.0,
        256,
    )
    .expect("benchmark is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;

    fn identity_spec(k: ScalarField) -> ObjectiveSpec {
        ObjectiveSpec::new(
            &TestFunction::Smooth(k),
            GammaHat::Identity,
            DiscreteMeasure::dirac(&[0.0]).unwrap(),
            TransportSystem::counterexample(),
            1.0,
            256,
        )
        .unwrap()
    }

    #[test]
    fn conserved_mass_objective_is_flat() {
        let sys = TransportSystem {
            b: VectorField::affine(vec![vec![-0.4]], vec![0.1]),
            b1: VectorField::constant(vec![0.7]),
            w: ScalarField::constant(0.0),
        };
        let mu0 = DiscreteMeasure::from_1d(&[-0.3, 0.4, 1.0], &[0.2, 0.5, 0.3]).unwrap();
        let spec = ObjectiveSpec::new(
            &TestFunction::Smooth(ScalarField::constant(1.0)),
            GammaHat::Identity,
            mu0,
            sys,
            1.0,
            128,
        )
        .unwrap();
        for h in [-0.5, 0.0, 0.3] {
            assert!((evaluate_objective(&spec, h).unwrap() - 1.0).abs() < 1e-14);
            assert_eq!(objective_gradient(&spec, h).unwrap(), 0.0);
        }
    }

    #[test]
    fn counterexample_gradient_closed_form() {
        let spec = identity_spec(ScalarField::sinusoidal(1.0, vec![1.0], 0.0));
        assert!((objective_gradient(&spec, 0.0).unwrap() - 1f64.cos()).abs() < 1e-12);
        // K((1+h)t) peaks where (1+h)t hits the bump center.
        let spec = identity_spec(ScalarField::gaussian(1.0, vec![1.2], 1.0));
        assert!(objective_gradient(&spec, 0.2).unwrap().abs() < 1e-12);
        let vals: Vec<f64> = [0.15, 0.2, 0.25].iter().map(|&h| evaluate_objective(&spec, h).unwrap()).collect();
        assert!(vals[1] > vals[0] && vals[1] > vals[2]);
    }

    #[test]
    fn peak_target_vanishes_at_two_tenths() {
        let k = ScalarField::gaussian(1.0, vec![1.2], 1.0);
        let target = k.value(0.0, &[1.2]);
        let spec = ObjectiveSpec::new(
            &TestFunction::Smooth(k),
            GammaHat::Quadratic { target },
            DiscreteMeasure::dirac(&[0.0]).unwrap(),
            TransportSystem::counterexample(),
            1.0,
            256,
        )
        .unwrap();
        assert!(evaluate_objective(&spec, 0.2).unwrap() < 1e-28);
    }

    #[test]
    fn hat_rejected_and_bounds_enforced() {
        let r = ObjectiveSpec::new(
            &TestFunction::Hat { hat_center: 1.0 },
            GammaHat::Identity,
            DiscreteMeasure::dirac(&[0.0]).unwrap(),
            TransportSystem::counterexample(),
            1.0,
            8,
        );
        assert!(r.is_err());
        let spec = quadratic_benchmark();
        assert!(evaluate_objective(&spec, 0.6).is_err());
        assert!(minimize(&spec, 0.0, 0.0, 10).is_err());
    }

    #[test]
    fn quadratic_benchmark_recovers_minimizer() {
        let spec = quadratic_benchmark();
        let res = minimize(&spec, -0.3, 1e-10, 200).unwrap();
        assert!(res.converged, "{res:?}");
        assert!((res.h_star - 0.2).abs() < 1e-6);
        assert!(res.grad_at_star.abs() <= 1e-8);
        assert!(res.trace.windows(2).all(|w| w[1].objective <= w[0].objective));
    }

    #[test]
    fn start_at_minimizer_returns_immediately() {
        let spec = quadratic_benchmark();
        let res = minimize(&spec, 0.2, 1e-10, 50).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.h_star, 0.2);
    }

    #[test]
    fn logistic_basins() {
        let spec = logistic_benchmark();
        let inner = minimize(&spec, 0.0, 1e-9, 500).unwrap();
        assert!(inner.converged);
        let (oracle, _) = grid_oracle_in(&spec, -0.2, 0.4).unwrap();
        assert!((inner.h_star - oracle).abs() < 1e-4, "{} vs {oracle}", inner.h_star);
        let edge = minimize(&spec, -0.4, 1e-9, 500).unwrap();
        assert!(edge.converged);
        assert_eq!(edge.h_star, -0.5);
    }

    #[test]
    fn logistic_is_stable_for_large_arguments() {
        let g = GammaHat::Logistic { steepness: 1.0, midpoint: 0.0 };
        assert_eq!(g.eval(-1e4), (0.0, 0.0));
        assert_eq!(g.eval(1e4).0, 1.0);
    }

    #[test]
    fn trace_csv_header() {
        let spec = quadratic_benchmark();
        let res = minimize(&spec, 0.1, 1e-10, 100).unwrap();
        let mut buf = Vec::new();
        res.write_trace(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,h,objective,gradient,step\n"));
        assert_eq!(text.lines().count(), res.trace.len() + 1);
    }
}
