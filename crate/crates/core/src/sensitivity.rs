//! The `h`-derivative of `μₜ^h` as a first-order functional, difference
//! quotients converging to it, and regularity of `x ↦ δₓ`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dualnorms::{holder_dual_upper, NormOptions};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, TestFunction, TransportSystem};
use crate::functional::PointFunctional;
use crate::measures::{fmt17, linear_combine, DiscreteMeasure};
use crate::pushforward::{solve_measure, SolutionCurve};

/// `⟨ψ, ∂ₕμₜ⟩ = Σᵢ vᵢ·∇ψ(Xᵢ) + sᵢ ψ(Xᵢ)` with dipole coefficients
/// `vᵢ = w⁰ᵢ e^{Wᵢ} ∂ₕXᵢ` and density coefficients `sᵢ = w⁰ᵢ e^{Wᵢ} ∂ₕWᵢ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeFunctional {
    dim: usize,
    positions: Vec<f64>,
    dipoles: Vec<f64>,
    densities: Vec<f64>,
}

impl DerivativeFunctional {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dipole(&self, i: usize) -> &[f64] {
        &self.dipoles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn density(&self, i: usize) -> f64 {
        self.densities[i]
    }

    pub fn is_zero(&self) -> bool {
        self.dipoles.iter().chain(&self.densities).all(|&v| v == 0.0)
    }

    /// `Σᵢ |vᵢ| + |sᵢ|`.
    pub fn coefficient_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.dipole(i).iter().map(|v| v * v).sum::<f64>().sqrt() + self.densities[i].abs())
            .sum()
    }

    pub fn to_point_functional(&self) -> PointFunctional {
        PointFunctional::new(self.dim, self.positions.clone(), self.densities.clone(), self.dipoles.clone())
            .expect("coefficients are finite")
    }

    pub fn pair_smooth(&self, psi: &ScalarField) -> f64 {
        (0..self.len())
            .map(|i| {
                let (v, g) = psi.eval(0.0, self.position(i));
                self.densities[i] * v + g.iter().zip(self.dipole(i)).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }
}

/// Reads the derivative functional at time `t` off the augmented flow.
pub fn derivative_functional(
    mu0: &DiscreteMeasure,
    sys: &TransportSystem,
    h: f64,
    t: f64,
    steps: usize,
) -> Result<DerivativeFunctional> {
    Ok(DerivativeFunctional::from_curve(&solve_measure(mu0, sys, h, t, steps)?))
}

impl DerivativeFunctional {
    /// Coefficients at the terminal node of an already solved curve.
    pub fn from_curve(curve: &SolutionCurve) -> Self {
        let bundle = curve.bundle();
        let d = bundle.dim();
        let mut out = DerivativeFunctional { dim: d, positions: Vec::new(), dipoles: Vec::new(), densities: Vec::new() };
        for i in 0..bundle.particles() {
            let s = bundle.terminal(i);
            let weight = curve.weight(i, bundle.steps());
            out.positions.extend_from_slice(s.x);
            out.dipoles.extend(s.dxdh.iter().map(|v| weight * v));
            out.densities.push(weight * s.dwdh);
        }
        out
    }
}

/// `⟨ψ, D⟩`; the hat function is rejected since it is not `C^{1+α}`.
pub fn pair(d: &DerivativeFunctional, psi: &TestFunction) -> Result<f64> {
    Ok(d.pair_smooth(psi.smooth()?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientRow {
    pub lambda: f64,
    pub psi_id: String,
    pub quotient_pairing: f64,
    pub derivative_pairing: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessiveGap {
    pub lambda_a: f64,
    pub lambda_b: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientTable {
    pub rows: Vec<QuotientRow>,
    pub cauchy: Vec<SuccessiveGap>,
}

impl QuotientTable {
    /// Largest pairing gap over the panel at each λ, in ladder order.
    pub fn max_gaps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some((l, g)) if *l == r.lambda => *g = g.max(r.gap),
                _ => out.push((r.lambda, r.gap)),
            }
        }
        out
    }

    /// CSV `lambda,psi_id,quotient_pairing,derivative_pairing,gap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["lambda", "psi_id", "quotient_pairing", "derivative_pairing", "gap"])?;
        for r in &self.rows {
            wtr.write_record([
                fmt17(r.lambda),
                r.psi_id.clone(),
                fmt17(r.quotient_pairing),
                fmt17(r.derivative_pairing),
                fmt17(r.gap),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Pairs the quotients `(μₜ^{h+λ} − μₜ^h)/λ` with the panel and compares
/// with `⟨ψ, ∂ₕμₜ^h⟩`; successive quotients are also compared in the dual
/// Hölder norm (the derivative itself is not a measure, so it never enters
/// a norm computation).
#[allow(clippy::too_many_arguments)]
pub fn quotient_convergence(
    mu0: &DiscreteMeasure,
    sys: &TransportSystem,
    h: f64,
    t: f64,
    lambdas: &[f64],
    panel: &[(String, ScalarField)],
    steps: usize,
    opts: &NormOptions,
) -> Result<QuotientTable> {
    if lambdas.iter().any(|&l| l == 0.0 || !l.is_finite()) {
        return Err(Error::invalid("every lambda must be nonzero and finite"));
    }
    let base = solve_measure(mu0, sys, h, t, steps)?.terminal();
    let deriv = derivative_functional(mu0, sys, h, t, steps)?;
    let quotients: Vec<DiscreteMeasure> = lambdas
        .par_iter()
        .map(|&l| {
            let m = solve_measure(mu0, sys, h + l, t, steps)?.terminal();
            linear_combine(1.0 / l, &m, -1.0 / l, &base)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (&l, q) in lambdas.iter().zip(&quotients) {
        for (id, psi) in panel {
            let qp = q.integrate(|x| psi.value(0.0, x));
            let dp = deriv.pair_smooth(psi);
            rows.push(QuotientRow {
                lambda: l,
                psi_id: id.clone(),
                quotient_pairing: qp,
                derivative_pairing: dp,
                gap: (qp - dp).abs(),
            });
        }
    }
    let cauchy = if mu0.dim() == 1 {
        quotients
            .windows(2)
            .zip(lambdas.windows(2))
            .map(|(q, l)| {
                let diff = linear_combine(1.0, &q[0], -1.0, &q[1])?;
                Ok(SuccessiveGap {
                    lambda_a: l[0],
                    lambda_b: l[1],
                    upper: holder_dual_upper(&PointFunctional::from_measure(&diff), opts)?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(QuotientTable { rows, cauchy })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemainderRow {
    pub lambda: f64,
    /// Node-LP upper bound of `‖δ_{x+λ} − δₓ − λ·Dδ̄(x)‖ / |λ|`.
    pub ratio_upper: f64,
    /// Largest panel pairing of the same functional, divided by `|λ|`.
    pub ratio_panel: f64,
    /// `|λ|^α/(1+α)`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorRow {
    pub x: f64,
    pub y: f64,
    /// Node-LP upper bound of `‖Dδ̄(x) − Dδ̄(y)‖`.
    pub upper: f64,
    pub panel: f64,
    /// `|x − y|^α`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiracCurveReport {
    pub remainders: Vec<RemainderRow>,
    pub operators: Vec<OperatorRow>,
}

/// Regularity of `x ↦ δₓ` in one dimension: the first-order Taylor remainder
/// along `λ` and the Hölder continuity of the derivative `λ ↦ λ·∂ₓ` (a dipole).
pub fn dirac_curve_check(
    x: f64,
    lambdas: &[f64],
    pairs: &[(f64, f64)],
    opts: &NormOptions,
) -> Result<DiracCurveReport> {
    let alpha = opts.alpha;
    let panel = crate::fields::psi_panel(alpha)?;
    let panel_sup = |f: &PointFunctional| panel.iter().map(|(_, p)| f.pair(p).abs()).fold(0.0, f64::max);
    let remainders = lambdas
        .par_iter()
        .map(|&l| {
            if l == 0.0 {
                return Err(Error::invalid("lambda must be nonzero"));
            }
            let f = PointFunctional::new(1, vec![x + l, x, x], vec![1.0, -1.0, 0.0], vec![0.0, 0.0, -l])?.canonicalize();
            Ok(RemainderRow {
                lambda: l,
                ratio_upper: holder_dual_upper(&f, opts)? / l.abs(),
                ratio_panel: panel_sup(&f) / l.abs(),
                bound: l.abs().powf(alpha) / (1.0 + alpha),
            })
        })
        .collect::<Result<_>>()?;
    let operators = pairs
        .par_iter()
        .map(|&(a, b)| {
            let f = PointFunctional::new(1, vec![a, b], vec![0.0, 0.0], vec![1.0, -1.0])?.canonicalize();
            Ok(OperatorRow {
                x: a,
                y: b,
                upper: holder_dual_upper(&f, opts)?,
                panel: panel_sup(&f),
                bound: (a - b).abs().powf(alpha),
            })
        })
        .collect::<Result<_>>()?;
    Ok(DiracCurveReport { remainders, operators })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::VectorField;

    #[test]
    fn counterexample_derivative_is_unit_dipole() {
        let mu0 = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let d = derivative_functional(&mu0, &TransportSystem::counterexample(), 0.0, 1.0, 256).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d.position(0)[0] - 1.0).abs() < 1e-13);
        assert!((d.dipole(0)[0] - 1.0).abs() < 1e-13);
        assert_eq!(d.density(0), 0.0);
        let sin = TestFunction::Smooth(ScalarField::sinusoidal(1.0, vec![1.0], 0.0));
        assert!((pair(&d, &sin).unwrap() - 1f64.cos()).abs() < 1e-12);
        assert!(pair(&d, &TestFunction::Hat { hat_center: 1.0 }).is_err());
    }

    #[test]
    fn inert_perturbation_gives_zero() {
        let sys = TransportSystem {
            b: VectorField::affine(vec![vec![-0.5]], vec![0.2]),
            b1: VectorField::zero(1),
            w: ScalarField::gaussian(0.4, vec![0.0], 1.0),
        };
        let mu0 = DiscreteMeasure::from_1d(&[-1.0, 0.3], &[0.5, 0.5]).unwrap();
        let d = derivative_functional(&mu0, &sys, 0.1, 1.0, 64).unwrap();
        assert!(d.is_zero());
        let panel = crate::fields::psi_panel(0.5).unwrap();
        let table = quotient_convergence(&mu0, &sys, 0.0, 1.0, &[0.1, 0.05], &panel, 64, &NormOptions::default()).unwrap();
        assert!(table.rows.iter().all(|r| r.gap == 0.0));
    }

    #[test]
    fn linear_field_dipole_closed_form() {
        let mu0 = DiscreteMeasure::dirac(&[0.7]).unwrap();
        for t in [0.5f64, 1.0, 2.0] {
            let d = derivative_functional(&mu0, &TransportSystem::linear_contraction(), 0.0, t, 512).unwrap();
            assert!((d.dipole(0)[0] - (1.0 - (-t).exp())).abs() < 1e-10);
            assert_eq!(d.density(0), 0.0);
        }
    }

    #[test]
    fn density_coefficient_from_growth() {
        // b = 1, b₁ = 1, w = κx: ∂ₕW = κt²/2 and W = κ(yt + (1+h)t²/2).
        let kappa = 0.6;
        let mu0 = DiscreteMeasure::dirac(&[0.0]).unwrap();
        let d = derivative_functional(&mu0, &TransportSystem::drift_with_linear_growth(kappa), 0.0, 1.0, 256).unwrap();
        let weight = (kappa * 0.5f64).exp();
        assert!((d.density(0) - weight * kappa * 0.5).abs() < 1e-12);
        assert!((d.dipole(0)[0] - weight).abs() < 1e-12);
    }

    #[test]
    fn remainder_and_operator_bounds() {
        let opts = NormOptions::new(0.5);
        let rep = dirac_curve_check(0.3, &[0.1, -0.1, 0.01, -0.01, 0.001], &[(0.0, 0.5), (0.2, 0.3)], &opts).unwrap();
        for r in &rep.remainders {
            assert!(r.ratio_upper <= r.bound + 1e-6, "{r:?}");
            assert!(r.ratio_panel <= r.ratio_upper + 1e-9, "{r:?}");
        }
        for o in &rep.operators {
            assert!(o.upper <= o.bound + 1e-6, "{o:?}");
            assert!(o.panel <= o.upper + 1e-9);
        }
    }

    #[test]
    fn table_csv_header() {
        let t = QuotientTable { rows: vec![], cauchy: vec![] };
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), "lambda,psi_id,quotient_pairing,derivative_pairing,gap");
    }
}
