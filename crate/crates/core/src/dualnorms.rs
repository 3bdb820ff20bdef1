//! The flat metric and the `(C^{1+α})*` norm of first-order point functionals.
//!
//! In one dimension the flat norm is computed exactly by a node LP. The dual
//! Hölder norm is bracketed: a node LP relaxation gives an upper bound, a
//! finite family of smooth test functions with certified budgets gives a
//! lower bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{ScalarField, TransportSystem};
use crate::functional::PointFunctional;
use crate::lp::LinearProgram;
use crate::measures::{dirac_approximate, linear_combine, snapping_cost, DiscreteMeasure};
use crate::pushforward::solve_measure;

/// Which `W^{1,∞}` unit ball the flat norm uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `max(sup|f|, Lip f) ≤ 1`
    Max,
    /// `sup|f| + Lip f ≤ 1`
    Sum,
}

/// The norm a [`NormResult`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Flat(Convention),
    /// `sup|f| + sup|f'| + [f']_α ≤ 1`
    HolderSum,
}

/// Default cap on LP nodes for the Hölder relaxation.
pub const DEFAULT_NODE_CAP: usize = 64;
/// Default number of auxiliary LP nodes outside the support hull.
pub const DEFAULT_AUX_NODES: usize = 8;
/// Distance from the support hull covered by auxiliary nodes.
pub const AUX_REACH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormOptions {
    pub alpha: f64,
    #[serde(default = "default_aux")]
    pub aux_nodes: usize,
    #[serde(default = "default_cap")]
    pub node_cap: usize,
}

fn default_aux() -> usize {
    DEFAULT_AUX_NODES
}

fn default_cap() -> usize {
    DEFAULT_NODE_CAP
}

impl NormOptions {
    pub fn new(alpha: f64) -> Self {
        NormOptions { alpha, aux_nodes: DEFAULT_AUX_NODES, node_cap: DEFAULT_NODE_CAP }
    }

    pub fn with_aux_nodes(mut self, aux: usize) -> Self {
        self.aux_nodes = aux;
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions::new(0.5)
    }
}

/// A one-dimensional node LP: sorted distinct nodes carrying the functional's
/// mass and dipole coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NormProblem {
    pub nodes: Vec<f64>,
    pub masses: Vec<f64>,
    pub dipoles: Vec<f64>,
    pub kind: NormKind,
    pub alpha: Option<f64>,
}

impl NormProblem {
    /// Builds the node set from the support of `f` plus `aux` auxiliary nodes
    /// spread evenly over `[lo − R, lo)` and `(hi, hi + R]`, `R =` [`AUX_REACH`].
    /// Interior nodes would not tighten anything: a linear witness satisfies
    /// every constraint inside the hull, and the bending that bounds a test
    /// function happens outside it.
    pub fn new(f: &PointFunctional, kind: NormKind, alpha: Option<f64>, aux: usize) -> Result<Self> {
        if f.dim() != 1 {
            return Err(Error::Unsupported(format!(
                "node LPs are one-dimensional; got dimension {} (use the sampled lower bound)",
                f.dim()
            )));
        }
        let f = f.canonicalize();
        let mut nodes: Vec<(f64, f64, f64)> = (0..f.len()).map(|i| (f.point(i)[0], f.masses()[i], f.dipole_at(i)[0])).collect();
        if !nodes.is_empty() && aux > 0 {
            let (lo, hi) = (nodes[0].0, nodes[nodes.len() - 1].0);
            let left = aux / 2;
            let right = aux - left;
            for j in 1..=left {
                nodes.push((lo - AUX_REACH * j as f64 / left as f64, 0.0, 0.0));
            }
            for j in 1..=right {
                nodes.push((hi + AUX_REACH * j as f64 / right as f64, 0.0, 0.0));
            }
            nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Ok(NormProblem {
            nodes: nodes.iter().map(|n| n.0).collect(),
            masses: nodes.iter().map(|n| n.1).collect(),
            dipoles: nodes.iter().map(|n| n.2).collect(),
            kind,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradients: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormResult {
    pub upper: f64,
    pub lower: f64,
    pub witness: Witness,
    pub convention: NormKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl NormResult {
    fn zero(kind: NormKind, alpha: Option<f64>) -> Self {
        NormResult {
            upper: 0.0,
            lower: 0.0,
            witness: Witness { nodes: Vec::new(), values: Vec::new(), gradients: None },
            convention: kind,
            alpha,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Which node pairs receive Lipschitz constraints in the flat LP. In one
/// dimension adjacent pairs imply all others by the triangle inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSet {
    Adjacent,
    All,
}

/// Exact flat norm of a one-dimensional measure.
pub fn flat_norm(nu: &DiscreteMeasure, convention: Convention) -> Result<NormResult> {
    flat_norm_with_pairs(nu, convention, PairSet::Adjacent)
}

pub fn flat_norm_with_pairs(nu: &DiscreteMeasure, convention: Convention, pairs: PairSet) -> Result<NormResult> {
    let kind = NormKind::Flat(convention);
    let p = NormProblem::new(&PointFunctional::from_measure(nu), kind, None, 0)?;
    if p.is_empty() {
        return Ok(NormResult::zero(kind, None));
    }
    let n = p.len();
    let pair_list: Vec<(usize, usize)> = match pairs {
        PairSet::Adjacent => (0..n - 1).map(|k| (k, k + 1)).collect(),
        PairSet::All => (0..n).flat_map(|k| (k + 1..n).map(move |l| (k, l))).collect(),
    };
    // Variables: f_0..f_{n−1} free; under the sum convention also a, L ≥ 0.
    let extra = if convention == Convention::Sum { 2 } else { 0 };
    let mut lp = LinearProgram::new(n + extra);
    for k in 0..n {
        lp.set_free(k);
        lp.set_objective(k, p.masses[k]);
    }
    match convention {
        Convention::Max => {
            for k in 0..n {
                lp.add_le(&[(k, 1.0)], 1.0);
                lp.add_le(&[(k, -1.0)], 1.0);
            }
            for &(k, l) in &pair_list {
                let d = p.nodes[l] - p.nodes[k];
                lp.add_le(&[(k, 1.0), (l, -1.0)], d);
                lp.add_le(&[(k, -1.0), (l, 1.0)], d);
            }
        }
        Convention::Sum => {
            let (a, lip) = (n, n + 1);
            for k in 0..n {
                lp.add_le(&[(k, 1.0), (a, -1.0)], 0.0);
                lp.add_le(&[(k, -1.0), (a, -1.0)], 0.0);
            }
            for &(k, l) in &pair_list {
                let d = p.nodes[l] - p.nodes[k];
                lp.add_le(&[(k, 1.0), (l, -1.0), (lip, -d)], 0.0);
                lp.add_le(&[(k, -1.0), (l, 1.0), (lip, -d)], 0.0);
            }
            lp.add_le(&[(a, 1.0), (lip, 1.0)], 1.0);
        }
    }
    let sol = lp.solve()?;
    let value = sol.value.max(0.0);
    Ok(NormResult {
        upper: value,
        lower: value,
        witness: Witness { nodes: p.nodes.clone(), values: sol.x[..n].to_vec(), gradients: None },
        convention: kind,
        alpha: None,
    })
}

/// `ρ_F(μ, ν)` under the max convention.
pub fn flat_metric(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(flat_norm(&linear_combine(1.0, mu, -1.0, nu)?, Convention::Max)?.upper)
}

/// Lower bound of the flat norm in any dimension from a finite family of
/// clamped cones and clamped ridge functions (`samples` random directions).
pub fn flat_lower_sampled(nu: &DiscreteMeasure, convention: Convention, samples: usize, seed: u64) -> f64 {
    let nu = nu.canonicalize();
    if nu.is_empty() {
        return 0.0;
    }
    let scale = if convention == Convention::Sum { 0.5 } else { 1.0 };
    let d = nu.dim();
    let mut best = nu.total_mass().abs();
    let clamp = |v: f64| v.clamp(-1.0, 1.0);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    for i in 0..nu.len() {
        let c = nu.point(i);
        for r in [0.25, 0.5, 1.0, 2.0] {
            let v = nu.integrate(|x| clamp(r - dist(x, c)));
            best = best.max(scale * v.abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        u.iter_mut().for_each(|v| *v /= norm);
        let proj: Vec<f64> = nu.points().map(|p| p.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
        for &theta in &proj {
            let v: f64 = proj.iter().zip(nu.weights()).map(|(s, w)| w * clamp(s - theta)).sum();
            best = best.max(scale * v.abs());
        }
    }
    best.max(0.0)
}

/// Upper bound of `‖F‖_{(C^{1+α})*}` from the node LP relaxation.
pub fn holder_dual_upper(f: &PointFunctional, opts: &NormOptions) -> Result<f64> {
    Ok(holder_upper_report(f, opts)?.upper)
}

/// The node LP relaxation with its witness.
///
/// Variables: node values `fₖ`, node gradients `gₖ` and budget slacks
/// `a, b, c ≥ 0` with `a + b + c ≤ 1`; constraints `|fₖ| ≤ a`, `|gₖ| ≤ b`,
/// `|gₖ − gₗ| ≤ c|xₖ−xₗ|^α` and the Taylor bound
/// `|fₗ − fₖ − gₖ(xₗ−xₖ)| ≤ c|xₗ−xₖ|^{1+α}/(1+α)` for every ordered pair.
/// The restriction of any admissible test function is feasible.
fn holder_upper_report(f: &PointFunctional, opts: &NormOptions) -> Result<NormResult> {
    opts.check()?;
    let kind = NormKind::HolderSum;
    let p = NormProblem::new(f, kind, Some(opts.alpha), opts.aux_nodes)?;
    if p.is_empty() {
        return Ok(NormResult::zero(kind, Some(opts.alpha)));
    }
    let n = p.len();
    if n > opts.node_cap {
        return Err(Error::NodeCap { nodes: n, cap: opts.node_cap });
    }
    let alpha = opts.alpha;
    // Shifted variables Fₖ = fₖ + a ≥ 0 and Gₖ = gₖ + b ≥ 0 turn |fₖ| ≤ a into
    // Fₖ ≤ 2a and keep every right-hand side zero except the budget row.
    let (fv, gv) = (|k: usize| k, |k: usize| n + k);
    let (a, b, c) = (2 * n, 2 * n + 1, 2 * n + 2);
    let mut lp = LinearProgram::new(2 * n + 3);
    for k in 0..n {
        lp.set_objective(fv(k), p.masses[k]);
        lp.set_objective(gv(k), p.dipoles[k]);
        lp.add_le(&[(fv(k), 1.0), (a, -2.0)], 0.0);
        lp.add_le(&[(gv(k), 1.0), (b, -2.0)], 0.0);
    }
    lp.set_objective(a, -p.masses.iter().sum::<f64>());
    lp.set_objective(b, -p.dipoles.iter().sum::<f64>());
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let dx = p.nodes[l] - p.nodes[k];
            let d = dx.abs();
            if k < l {
                let hol = d.powf(alpha);
                lp.add_le(&[(gv(k), 1.0), (gv(l), -1.0), (c, -hol)], 0.0);
                lp.add_le(&[(gv(k), -1.0), (gv(l), 1.0), (c, -hol)], 0.0);
            }
            // fₗ − fₖ − gₖ·dx = Fₗ − Fₖ − Gₖ·dx + b·dx
            let kappa = d.powf(1.0 + alpha) / (1.0 + alpha);
            lp.add_le(&[(fv(l), 1.0), (fv(k), -1.0), (gv(k), -dx), (b, dx), (c, -kappa)], 0.0);
            lp.add_le(&[(fv(l), -1.0), (fv(k), 1.0), (gv(k), dx), (b, -dx), (c, -kappa)], 0.0);
        }
    }
    lp.add_le(&[(a, 1.0), (b, 1.0), (c, 1.0)], 1.0);
    let sol = lp.solve()?;
    // Every feasible point has a, b, c ≤ 1 and 0 ≤ Fₖ, Gₖ ≤ 2, so the duals
    // certify the upper bound independently of the primal's roundoff.
    let mut bounds = vec![2.0; 2 * n + 3];
    bounds[2 * n..].fill(1.0);
    let certified = lp.dual_bound(&sol.duals, &bounds);
    let (sa, sb) = (sol.x[a], sol.x[b]);
    Ok(NormResult {
        upper: certified.max(0.0),
        lower: 0.0,
        witness: Witness {
            nodes: p.nodes.clone(),
            values: sol.x[..n].iter().map(|v| v - sa).collect(),
            gradients: Some(sol.x[n..2 * n].iter().map(|v| v - sb).collect()),
        },
        convention: kind,
        alpha: Some(alpha),
    })
}

/// `max over u² ∈ {3 ± √6}` of `|u³ − 3u| e^{−u²/2}`: the sup of the second
/// derivative of the unit odd bump `u e^{−u²/2}`.
fn odd_bump_curvature() -> f64 {
    let g = |u2: f64| {
        let u = u2.sqrt();
        (u * u2 - 3.0 * u).abs() * (-u2 / 2.0).exp()
    };
    g(3.0 - 6f64.sqrt()).max(g(3.0 + 6f64.sqrt()))
}

fn interpolated_holder(sup_grad: f64, lip_grad: f64, alpha: f64) -> f64 {
    (2.0 * sup_grad).powf(1.0 - alpha) * lip_grad.powf(alpha)
}

/// Lower bound of `‖F‖_{(C^{1+α})*}` over a parametric family: constants,
/// even and odd Gaussian bumps on a width ladder, phase-optimal sinusoids on
/// a frequency ladder, and a signed superposition of disjoint compact bumps.
/// Each member is divided by a closed-form upper bound of its norm, so every
/// candidate value is a valid lower bound.
pub fn holder_dual_lower(f: &PointFunctional, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let f = f.canonicalize();
    if f.is_empty() {
        return Ok(0.0);
    }
    let d = f.dim();
    let mut best = f.masses().iter().sum::<f64>().abs();

    let mut centers: Vec<Vec<f64>> = (0..f.len()).map(|i| f.point(i).to_vec()).collect();
    let mut scales: Vec<f64> = Vec::new();
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let dist = f.point(i).iter().zip(f.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            scales.push(dist);
            if j == i + 1 {
                centers.push(f.point(i).iter().zip(f.point(j)).map(|(a, b)| 0.5 * (a + b)).collect());
            }
        }
    }
    let widths: Vec<f64> = (-12..=8).map(|j| 2f64.powf(j as f64 / 2.0)).collect();

    // Even Gaussian bumps from the catalog.
    for c in &centers {
        for &s in &widths {
            let g = ScalarField::gaussian(1.0, c.clone(), s);
            let budget = g.bounds(alpha)?.budget();
            best = best.max(f.pair(&g).abs() / budget);
        }
    }

    // Odd bumps σ·u·e^{−u²/2}, u = (x − c)/σ, in one dimension.
    if d == 1 {
        let curv = odd_bump_curvature();
        for c in &centers {
            for &s in &widths {
                let budget = s * (-0.5f64).exp() + 1.0 + interpolated_holder(1.0, curv / s, alpha);
                let mut v = 0.0;
                for i in 0..f.len() {
                    let u = (f.point(i)[0] - c[0]) / s;
                    let e = (-u * u / 2.0).exp();
                    v += f.masses()[i] * s * u * e + f.dipole_at(i)[0] * (1.0 - u * u) * e;
                }
                best = best.max(v.abs() / budget);
            }
        }
    }

    // Phase-optimal sinusoids sin(ω u·x + φ) along each axis.
    let mut freqs: Vec<f64> = (-8..=16).map(|j| 2f64.powf(j as f64 / 2.0)).collect();
    freqs.extend(scales.iter().filter(|&&s| s > 0.0).map(|s| std::f64::consts::PI / s));
    for &w in &freqs {
        let budget = 1.0 + w + 2f64.powf(1.0 - alpha) * w.powf(1.0 + alpha);
        for axis in 0..d {
            let (mut s_part, mut c_part) = (0.0, 0.0);
            for i in 0..f.len() {
                let arg = w * f.point(i)[axis];
                let (sn, cs) = arg.sin_cos();
                let (m, p) = (f.masses()[i], f.dipole_at(i)[axis]);
                s_part += m * sn + p * w * cs;
                c_part += m * cs - p * w * sn;
            }
            best = best.max(s_part.hypot(c_part) / budget);
        }
    }

    // Disjoint compact bumps signed by the local mass; valid because the
    // gradient vanishes between supports, so the Hölder constant of the sum is
    // at most 2^{1−α} times that of one bump.
    if f.len() > 1 {
        let min_gap = scales.iter().copied().fold(f64::INFINITY, f64::min);
        if min_gap > 0.0 {
            for shrink in [1.0, 0.5, 0.25] {
                let rho = 0.5 * min_gap * shrink;
                let one = ScalarField::compact_bump(1.0, f.point(0).to_vec(), rho).bounds(alpha)?;
                let budget = one.sup + one.sup_grad + 2f64.powf(1.0 - alpha) * one.grad_holder;
                let v: f64 = f.masses().iter().map(|m| m.abs()).sum();
                best = best.max(v / budget);
            }
        }
    }
    Ok(best.max(0.0))
}

/// Both bounds with the upper-bound witness.
pub fn holder_dual(f: &PointFunctional, opts: &NormOptions) -> Result<NormResult> {
    let mut r = holder_upper_report(f, opts)?;
    r.lower = holder_dual_lower(f, opts.alpha)?.min(r.upper.max(0.0));
    Ok(r)
}

/// Measures of the gap `(μₜ^{h₁}−μₜ)/h₁ − (μₜ^{h₂}−μₜ)/h₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchyGap {
    pub h1: f64,
    pub h2: f64,
    pub gap_upper: f64,
    pub gap_lower: f64,
    pub flat_gap: f64,
    pub flat_gap_sum: f64,
}

/// The signed measure `(μₜ^{h₁}−μₜ)/h₁ − (μₜ^{h₂}−μₜ)/h₂`.
pub fn cauchy_difference(
    mu0: &DiscreteMeasure,
    sys: &TransportSystem,
    t: f64,
    h1: f64,
    h2: f64,
    steps: usize,
) -> Result<DiscreteMeasure> {
    if h1 == 0.0 || h2 == 0.0 || h1 == h2 {
        return Err(Error::invalid(format!("need nonzero distinct h1, h2; got {h1}, {h2}")));
    }
    let base = solve_measure(mu0, sys, 0.0, t, steps)?.terminal();
    let m1 = solve_measure(mu0, sys, h1, t, steps)?.terminal();
    let m2 = solve_measure(mu0, sys, h2, t, steps)?.terminal();
    let q1 = linear_combine(1.0 / h1, &m1, -1.0 / h1, &base)?;
    let q2 = linear_combine(1.0 / h2, &m2, -1.0 / h2, &base)?;
    linear_combine(1.0, &q1, -1.0, &q2)
}

/// `I_{h₁,h₂}` bracketed in the dual Hölder norm, plus the flat norm of the
/// same measure under both conventions.
pub fn cauchy_gap(
    mu0: &DiscreteMeasure,
    sys: &TransportSystem,
    t: f64,
    h1: f64,
    h2: f64,
    steps: usize,
    opts: &NormOptions,
) -> Result<CauchyGap> {
    let diff = cauchy_difference(mu0, sys, t, h1, h2, steps)?;
    let r = holder_dual(&PointFunctional::from_measure(&diff), opts)?;
    Ok(CauchyGap {
        h1,
        h2,
        gap_upper: r.upper,
        gap_lower: r.lower,
        flat_gap: flat_norm(&diff, Convention::Max)?.upper,
        flat_gap_sum: flat_norm(&diff, Convention::Sum)?.upper,
    })
}

/// Runs [`dirac_approximate`] and certifies `‖μ − ν‖_{(C^{1+α})*}`: by the
/// node LP in one dimension, by the snapping transport cost
/// `Σ|wᵢ||xᵢ − qᵢ| ≥ sup_ψ ∫ψ d(μ−ν)` otherwise.
pub fn certified_dirac_approximation(
    mu: &DiscreteMeasure,
    eps: f64,
    opts: &NormOptions,
) -> Result<(DiscreteMeasure, f64)> {
    let nu = dirac_approximate(mu, eps, opts.alpha)?;
    let bound = if mu.dim() == 1 {
        let diff = linear_combine(1.0, mu, -1.0, &nu)?;
        holder_dual_upper(&PointFunctional::from_measure(&diff), opts)?
    } else {
        snapping_cost(mu, eps)?
    };
    Ok((nu, bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(p: &[f64], w: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(p, w).unwrap()
    }

    #[test]
    fn flat_examples() {
        let d0 = m1(&[0.0], &[1.0]);
        assert_eq!(flat_metric(&d0, &d0).unwrap(), 0.0);
        let v = flat_metric(&m1(&[1.2], &[1.0]), &m1(&[1.1], &[1.0])).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
        let nu = m1(&[0.5, 1.0, 1.5], &[2.0, -4.0, 2.0]);
        assert!((flat_norm(&nu, Convention::Max).unwrap().upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn two_dirac_flat_closed_form() {
        for d in [0.05, 0.7, 1.9, 2.0, 3.5] {
            let v = flat_metric(&m1(&[0.0], &[1.0]), &m1(&[d], &[1.0])).unwrap();
            assert!((v - d.min(2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn holder_upper_examples() {
        let opts = NormOptions::new(0.5).with_aux_nodes(0);
        let d0 = PointFunctional::from_measure(&m1(&[0.0], &[1.0]));
        assert!((holder_dual_upper(&d0, &opts).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(holder_dual_upper(&PointFunctional::zero(1), &opts).unwrap(), 0.0);

        // max_{a+b+c≤1} min(2a, b·d + c·d^{1+α}/(1+α)) with d = 0.1
        let (d, alpha): (f64, f64) = (0.1, 0.5);
        let kappa = d.powf(1.0 + alpha) / (1.0 + alpha);
        let slope = d.max(kappa);
        let oracle = 2.0 * slope / (2.0 + slope);
        let two = PointFunctional::from_measure(&m1(&[0.0, d], &[1.0, -1.0]));
        let up = holder_dual_upper(&two, &opts).unwrap();
        assert!((up - oracle).abs() < 1e-10, "{up} vs {oracle}");
        assert!((0.09..=0.1).contains(&up));
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(holder_dual_lower(&PointFunctional::zero(1), 0.5).unwrap(), 0.0);
        let d0 = PointFunctional::from_measure(&m1(&[0.0], &[1.0]));
        assert!(holder_dual_lower(&d0, 0.5).unwrap() >= 0.99);
        let two = PointFunctional::from_measure(&m1(&[0.0, 0.1], &[1.0, -1.0]));
        let r = holder_dual(&two, &NormOptions::new(0.5)).unwrap();
        assert!(r.lower <= r.upper);
        assert!(2.0 * r.lower >= r.upper, "lower {} upper {}", r.lower, r.upper);
    }

    #[test]
    fn aux_nodes_tighten_the_relaxation() {
        let two = PointFunctional::from_measure(&m1(&[0.0, 0.1], &[1.0, -1.0]));
        let mut prev = f64::INFINITY;
        for aux in [0, 4, 8] {
            let v = holder_dual_upper(&two, &NormOptions::new(0.5).with_aux_nodes(aux)).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(prev < 0.06);
    }

    #[test]
    fn node_cap_and_dimension_errors() {
        let pts: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let mu = PointFunctional::from_measure(&m1(&pts, &[1.0; 10]));
        let opts = NormOptions { alpha: 0.5, aux_nodes: 0, node_cap: 5 };
        assert!(matches!(holder_dual_upper(&mu, &opts), Err(Error::NodeCap { nodes: 10, cap: 5 })));
        let planar = DiscreteMeasure::dirac(&[0.0, 1.0]).unwrap();
        assert!(matches!(flat_norm(&planar, Convention::Max), Err(Error::Unsupported(_))));
        assert!(holder_dual_upper(&PointFunctional::from_measure(&planar), &NormOptions::default()).is_err());
        assert!(holder_dual_upper(&mu, &NormOptions::new(1.5)).is_err());
    }

    #[test]
    fn sampled_flat_lower_bound_in_two_dimensions() {
        let a = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let b = DiscreteMeasure::dirac(&[0.3, 0.4]).unwrap();
        let nu = linear_combine(1.0, &a, -1.0, &b).unwrap();
        let lower = flat_lower_sampled(&nu, Convention::Max, 64, 1);
        assert!((0.45..=0.5 + 1e-12).contains(&lower), "{lower}");
    }

    #[test]
    fn report_serializes() {
        let r = holder_dual(&PointFunctional::from_measure(&m1(&[0.0], &[1.0])), &NormOptions::default()).unwrap();
        let json = r.to_json().unwrap();
        assert!(json.contains("\"upper\"") && json.contains("\"alpha\"") && json.contains("holder_sum"));
    }

    #[test]
    fn cauchy_gap_rejects_degenerate_pairs() {
        let mu0 = m1(&[0.0], &[1.0]);
        let sys = TransportSystem::counterexample();
        assert!(cauchy_gap(&mu0, &sys, 1.0, 0.1, 0.1, 64, &NormOptions::default()).is_err());
        assert!(cauchy_gap(&mu0, &sys, 1.0, 0.0, 0.1, 64, &NormOptions::default()).is_err());
    }
}
