//! Characteristic flow `Ẋ = (b + h·b₁)(t, X)` with its `h`-sensitivity, the
//! accumulated growth `W = ∫₀ᵗ w(s, X(s)) ds` and `∂ₕW`, integrated together
//! by the classical fourth-order Runge–Kutta scheme on a fixed grid.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{in_standard_range, TransportSystem};
use crate::measures::fmt17;

/// Default number of steps per unit of time.
pub const DEFAULT_STEPS_PER_UNIT: usize = 256;

/// Number of steps for horizon `t_end` at `per_unit` steps per unit time.
pub fn steps_for(t_end: f64, per_unit: usize) -> usize {
    ((t_end * per_unit as f64).ceil() as usize).max(1)
}

/// Time series of one particle. Vectors are stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrack {
    pub x: Vec<f64>,
    pub dxdh: Vec<f64>,
    pub w: Vec<f64>,
    pub dwdh: Vec<f64>,
}

/// State of one particle at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState<'a> {
    pub x: &'a [f64],
    pub dxdh: &'a [f64],
    pub w: f64,
    pub dwdh: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBundle {
    dim: usize,
    h: f64,
    times: Vec<f64>,
    tracks: Vec<ParticleTrack>,
}

impl TrajectoryBundle {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn particles(&self) -> usize {
        self.tracks.len()
    }

    pub fn track(&self, particle: usize) -> &ParticleTrack {
        &self.tracks[particle]
    }

    pub fn state(&self, particle: usize, node: usize) -> ParticleState<'_> {
        let tr = &self.tracks[particle];
        let d = self.dim;
        ParticleState {
            x: &tr.x[node * d..(node + 1) * d],
            dxdh: &tr.dxdh[node * d..(node + 1) * d],
            w: tr.w[node],
            dwdh: tr.dwdh[node],
        }
    }

    pub fn terminal(&self, particle: usize) -> ParticleState<'_> {
        self.state(particle, self.steps())
    }

    /// CSV `particle,t,X...,dXdh...,W,dWdh`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["particle".to_string(), "t".to_string()];
        header.extend((0..self.dim).map(|i| format!("X{i}")));
        header.extend((0..self.dim).map(|i| format!("dXdh{i}")));
        header.push("W".into());
        header.push("dWdh".into());
        wtr.write_record(&header)?;
        for p in 0..self.particles() {
            for (k, &t) in self.times.iter().enumerate() {
                let s = self.state(p, k);
                let mut row = vec![p.to_string(), fmt17(t)];
                row.extend(s.x.iter().map(|&v| fmt17(v)));
                row.extend(s.dxdh.iter().map(|&v| fmt17(v)));
                row.push(fmt17(s.w));
                row.push(fmt17(s.dwdh));
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Right-hand side of the augmented system for state `[X, ∂ₕX, W, ∂ₕW]`.
fn augmented_rhs(sys: &TransportSystem, h: f64, t: f64, s: &[f64], out: &mut [f64]) {
    let d = sys.dim();
    let (x, rest) = s.split_at(d);
    let p = &rest[..d];
    let eb = sys.b.eval(t, x);
    let eb1 = sys.b1.eval(t, x);
    let (wv, wg) = sys.w.eval(t, x);
    for i in 0..d {
        out[i] = eb.value[i] + h * eb1.value[i];
        let jp: f64 = (0..d).map(|j| (eb.jacobian[i * d + j] + h * eb1.jacobian[i * d + j]) * p[j]).sum();
        out[d + i] = jp + eb1.value[i];
    }
    out[2 * d] = wv;
    out[2 * d + 1] = wg.iter().zip(p).map(|(g, q)| g * q).sum();
}

fn rk4_step(sys: &TransportSystem, h: f64, t: f64, dt: f64, s: &mut [f64], scratch: &mut [Vec<f64>; 5]) {
    let n = s.len();
    let [k1, k2, k3, k4, tmp] = scratch;
    augmented_rhs(sys, h, t, s, k1);
    for i in 0..n {
        tmp[i] = s[i] + 0.5 * dt * k1[i];
    }
    augmented_rhs(sys, h, t + 0.5 * dt, tmp, k2);
    for i in 0..n {
        tmp[i] = s[i] + 0.5 * dt * k2[i];
    }
    augmented_rhs(sys, h, t + 0.5 * dt, tmp, k3);
    for i in 0..n {
        tmp[i] = s[i] + dt * k3[i];
    }
    augmented_rhs(sys, h, t + dt, tmp, k4);
    for i in 0..n {
        s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn integrate_particle(
    sys: &TransportSystem,
    h: f64,
    y: &[f64],
    times: &[f64],
    particle: usize,
) -> Result<ParticleTrack> {
    let d = y.len();
    let nodes = times.len();
    let mut state = vec![0.0; 2 * d + 2];
    state[..d].copy_from_slice(y);
    let mut track = ParticleTrack {
        x: Vec::with_capacity(nodes * d),
        dxdh: Vec::with_capacity(nodes * d),
        w: Vec::with_capacity(nodes),
        dwdh: Vec::with_capacity(nodes),
    };
    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; 2 * d + 2]);
    let push = |s: &[f64], tr: &mut ParticleTrack| {
        tr.x.extend_from_slice(&s[..d]);
        tr.dxdh.extend_from_slice(&s[d..2 * d]);
        tr.w.push(s[2 * d]);
        tr.dwdh.push(s[2 * d + 1]);
    };
    push(&state, &mut track);
    for k in 1..nodes {
        let t0 = times[k - 1];
        rk4_step(sys, h, t0, times[k] - t0, &mut state, &mut scratch);
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { particle, time: times[k] });
        }
        push(&state, &mut track);
    }
    Ok(track)
}

/// Integrates the augmented characteristic system for every initial point
/// (`dim` coordinates each, row-major) on `steps` uniform steps up to `t_end`.
pub fn integrate_bundle(
    sys: &TransportSystem,
    h: f64,
    initial_points: &[f64],
    t_end: f64,
    steps: usize,
) -> Result<TrajectoryBundle> {
    sys.validate()?;
    let dim = sys.dim();
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("perturbation parameter".into()));
    }
    if !initial_points.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: initial_points.len() % dim });
    }
    if !in_standard_range(h) {
        log::warn!("perturbation parameter h = {h} lies outside [-1/2, 1/2]");
    }
    let dt = t_end / steps as f64;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    times[steps] = t_end;
    let tracks = initial_points
        .par_chunks(dim)
        .enumerate()
        .map(|(i, y)| integrate_particle(sys, h, y, &times, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrajectoryBundle { dim, h, times, tracks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{ScalarField, VectorField, VectorKind};

    fn gaussian_system() -> TransportSystem {
        TransportSystem {
            b: VectorField::new(VectorKind::GaussianBump { amplitude: vec![1.2], center: vec![0.3], width: 0.9 }),
            b1: VectorField::new(VectorKind::Sinusoidal { amplitude: vec![0.8], frequency: vec![1.7], phase: 0.2 }),
            w: ScalarField::sinusoidal(0.5, vec![1.1], 0.0),
        }
    }

    fn catalog_systems() -> Vec<TransportSystem> {
        vec![
            TransportSystem::counterexample(),
            TransportSystem::linear_contraction(),
            TransportSystem::drift_with_linear_growth(0.5),
            gaussian_system(),
            TransportSystem {
                b: VectorField::new(VectorKind::CompactBump { amplitude: vec![-0.7], center: vec![0.5], radius: 2.0 }),
                b1: VectorField::new(VectorKind::GaussianBump { amplitude: vec![1.0], center: vec![0.0], width: 1.5 }),
                w: ScalarField::gaussian(0.3, vec![1.0], 0.7),
            },
        ]
    }

    #[test]
    fn unit_drift_closed_form() {
        let bundle = integrate_bundle(&TransportSystem::counterexample(), 0.2, &[0.0], 1.0, 256).unwrap();
        let s = bundle.terminal(0);
        assert!((s.x[0] - 1.2).abs() < 1e-13);
        assert!((s.dxdh[0] - 1.0).abs() < 1e-13);
        assert_eq!((s.w, s.dwdh), (0.0, 0.0));
        let s0 = bundle.state(0, 0);
        assert_eq!((s0.x[0], s0.dxdh[0], s0.w, s0.dwdh), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn frozen_flow_with_constant_growth() {
        for h in [-0.4, 0.0, 0.3] {
            let bundle = integrate_bundle(&TransportSystem::frozen_growth(0.7), h, &[1.5], 2.0, 64).unwrap();
            let s = bundle.terminal(0);
            assert_eq!((s.x[0], s.dxdh[0], s.dwdh), (1.5, 0.0, 0.0));
            assert!((s.w - 1.4).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_contraction_closed_form() {
        let sys = TransportSystem::linear_contraction();
        for (h, y0) in [(0.0, 1.0), (0.3, -0.5), (-0.2, 2.0)] {
            let bundle = integrate_bundle(&sys, h, &[y0], 1.5, 384).unwrap();
            for k in [0, 100, 384] {
                let t = bundle.times()[k];
                let s = bundle.state(0, k);
                assert!((s.x[0] - (h + (y0 - h) * (-t).exp())).abs() < 1e-10);
                assert!((s.dxdh[0] - (1.0 - (-t).exp())).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let sys = TransportSystem::linear_contraction();
        let (h, y0, t): (f64, f64, f64) = (0.3, 1.7, 2.0);
        let exact = h + (y0 - h) * (-t).exp();
        let err = |n: usize| (integrate_bundle(&sys, h, &[y0], t, n).unwrap().terminal(0).x[0] - exact).abs();
        let mut prev = err(4);
        for n in [8, 16, 32] {
            let e = err(n);
            assert!(prev / e >= 14.0, "halving to {n} steps reduced error only by {}", prev / e);
            prev = e;
        }
    }

    #[test]
    fn group_property_for_autonomous_fields() {
        let sys = gaussian_system();
        let (s, t, per_unit) = (0.75, 1.25, 64);
        let dt = 1.0 / per_unit as f64;
        let y = [-0.4, 0.1, 0.9];
        let first = integrate_bundle(&sys, 0.1, &y, s, steps_for(s, per_unit)).unwrap();
        let mid: Vec<f64> = (0..3).map(|i| first.terminal(i).x[0]).collect();
        let second = integrate_bundle(&sys, 0.1, &mid, t, steps_for(t, per_unit)).unwrap();
        let direct = integrate_bundle(&sys, 0.1, &y, s + t, steps_for(s + t, per_unit)).unwrap();
        for i in 0..3 {
            let gap = (second.terminal(i).x[0] - direct.terminal(i).x[0]).abs();
            assert!(gap <= 10.0 * dt.powi(4), "gap {gap}");
            let w_gap = (first.terminal(i).w + second.terminal(i).w - direct.terminal(i).w).abs();
            assert!(w_gap <= 10.0 * dt.powi(4));
        }
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        let lambda = 1e-4;
        let y = [-1.0, 0.0, 0.4, 1.3];
        for sys in catalog_systems() {
            for h in [-0.3, 0.0, 0.25] {
                let mid = integrate_bundle(&sys, h, &y, 1.0, 256).unwrap();
                let up = integrate_bundle(&sys, h + lambda, &y, 1.0, 256).unwrap();
                let dn = integrate_bundle(&sys, h - lambda, &y, 1.0, 256).unwrap();
                for i in 0..y.len() {
                    let fd_x = (up.terminal(i).x[0] - dn.terminal(i).x[0]) / (2.0 * lambda);
                    let fd_w = (up.terminal(i).w - dn.terminal(i).w) / (2.0 * lambda);
                    assert!((fd_x - mid.terminal(i).dxdh[0]).abs() <= 1e-6, "{sys:?}");
                    assert!((fd_w - mid.terminal(i).dwdh).abs() <= 1e-6, "{sys:?}");
                }
            }
        }
    }

    #[test]
    fn sensitivity_is_holder_in_h() {
        // The constant is not known a priori; fit it on wide pairs and check
        // narrow pairs stay within it.
        let sys = gaussian_system();
        let hs: Vec<f64> = (0..=20).map(|i| -0.5 + 0.05 * i as f64).collect();
        let dxdh: Vec<f64> = hs
            .iter()
            .map(|&h| integrate_bundle(&sys, h, &[0.2], 1.0, 256).unwrap().terminal(0).dxdh[0])
            .collect();
        for alpha in [0.25, 0.5, 1.0] {
            let mut fitted: f64 = 0.0;
            for i in 0..hs.len() {
                for j in i + 1..hs.len() {
                    let q = (dxdh[i] - dxdh[j]).abs() / (hs[j] - hs[i]).powf(alpha);
                    fitted = fitted.max(q);
                }
            }
            assert!(fitted.is_finite() && fitted < 10.0);
            let narrow: f64 = 1e-3;
            let a = integrate_bundle(&sys, 0.1, &[0.2], 1.0, 256).unwrap().terminal(0).dxdh[0];
            let b = integrate_bundle(&sys, 0.1 + narrow, &[0.2], 1.0, 256).unwrap().terminal(0).dxdh[0];
            assert!((a - b).abs() <= fitted * narrow.powf(alpha) * 1.5);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = TransportSystem {
            b: VectorField::affine(vec![vec![1e4]], vec![0.0]),
            b1: VectorField::zero(1),
            w: ScalarField::constant(0.0),
        };
        let err = integrate_bundle(&sys, 0.0, &[0.0, 1.0], 60.0, 60).unwrap_err();
        assert!(matches!(err, Error::BlowUp { particle: 1, .. }), "{err}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = TransportSystem::counterexample();
        assert!(integrate_bundle(&sys, 0.0, &[0.0], 1.0, 0).is_err());
        assert!(integrate_bundle(&sys, 0.0, &[0.0], 0.0, 4).is_err());
    }

    #[test]
    fn trajectory_csv_has_expected_shape() {
        let bundle = integrate_bundle(&TransportSystem::counterexample(), 0.0, &[0.0, 1.0], 1.0, 4).unwrap();
        let mut buf = Vec::new();
        bundle.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "particle,t,X0,dXdh0,W,dWdh");
        assert_eq!(lines.len(), 1 + 2 * 5);
    }
}
