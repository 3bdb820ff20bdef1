//! Closed catalog of analytic velocity fields, growth rates and test functions.
//!
//! Every catalog member carries closed-form upper bounds for `sup|f|`,
//! `sup|∇f|` and the α-Hölder seminorm of `∇f`; the dual-norm code relies on
//! these bounds being certified, which is why fields are not free-form
//! expressions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar time modulation multiplying a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    #[default]
    One,
    /// `e^{−t}`
    ExpDecay,
    /// `cos t`
    Cos,
}

impl TimeProfile {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            TimeProfile::One => 1.0,
            TimeProfile::ExpDecay => (-t).exp(),
            TimeProfile::Cos => t.cos(),
        }
    }

    pub fn is_one(&self) -> bool {
        *self == TimeProfile::One
    }
}

/// Upper bounds for the three terms of the `C^{1+α}` norm.
///
/// For vector fields `sup_grad` and `grad_holder` bound the Frobenius norm of
/// the Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderBounds {
    pub sup: f64,
    pub sup_grad: f64,
    pub grad_holder: f64,
}

impl HolderBounds {
    /// `sup|f| + sup|∇f| + [∇f]_α`, the certified norm budget.
    pub fn budget(&self) -> f64 {
        self.sup + self.sup_grad + self.grad_holder
    }

    fn scaled(self, c: f64) -> Self {
        HolderBounds { sup: c * self.sup, sup_grad: c * self.sup_grad, grad_holder: c * self.grad_holder }
    }
}

/// `|∇s(x) − ∇s(y)| ≤ min(2G₁, G₂|x−y|) ≤ (2G₁)^{1−α} G₂^α |x−y|^α`.
fn interpolated_holder(sup_grad: f64, lip_grad: f64, alpha: f64) -> f64 {
    if lip_grad == 0.0 {
        return 0.0;
    }
    (2.0 * sup_grad).powf(1.0 - alpha) * lip_grad.powf(alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("Hölder exponent must lie in (0, 1], got {alpha}")))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unit-amplitude scalar profiles shared by the scalar and vector catalogs.
#[derive(Debug, Clone, PartialEq)]
enum Shape<'a> {
    /// `exp(−|x−c|²/(2σ²))`
    Gaussian { center: &'a [f64], width: f64 },
    /// `sin(k·x + φ)`
    Sinusoid { frequency: &'a [f64], phase: f64 },
    /// `(1 − |x−c|²/ρ²)²` inside the ball, zero outside
    CompactBump { center: &'a [f64], radius: f64 },
}

impl Shape<'_> {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match *self {
            Shape::Gaussian { center, width } => {
                let diff: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let r2 = dot(&diff, &diff);
                let s2 = width * width;
                let v = (-r2 / (2.0 * s2)).exp();
                (v, diff.iter().map(|d| -v * d / s2).collect())
            }
            Shape::Sinusoid { frequency, phase } => {
                let arg = dot(frequency, x) + phase;
                let c = arg.cos();
                (arg.sin(), frequency.iter().map(|k| k * c).collect())
            }
            Shape::CompactBump { center, radius } => {
                let diff: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let u = dot(&diff, &diff) / (radius * radius);
                if u >= 1.0 {
                    return (0.0, vec![0.0; x.len()]);
                }
                let one_minus = 1.0 - u;
                let g = -4.0 * one_minus / (radius * radius);
                (one_minus * one_minus, diff.iter().map(|d| g * d).collect())
            }
        }
    }

    fn bounds(&self, alpha: f64) -> HolderBounds {
        let (sup_grad, lip_grad) = match *self {
            Shape::Gaussian { width, .. } => ((-0.5f64).exp() / width, 1.0 / (width * width)),
            Shape::Sinusoid { frequency, .. } => {
                let k = norm(frequency);
                (k, k * k)
            }
            Shape::CompactBump { radius, .. } => {
                (8.0 / (3.0 * 3f64.sqrt() * radius), 8.0 / (radius * radius))
            }
        };
        HolderBounds { sup: 1.0, sup_grad, grad_holder: interpolated_holder(sup_grad, lip_grad, alpha) }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let (vec, scale, what) = match *self {
            Shape::Gaussian { center, width } => (center, width, "width"),
            Shape::Sinusoid { frequency, .. } => (frequency, 1.0, ""),
            Shape::CompactBump { center, radius } => (center, radius, "radius"),
        };
        if vec.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: vec.len() });
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("{what} must be positive and finite")));
        }
        Ok(())
    }
}

/// Vector-valued catalog entries (velocity `b` and direction `b₁`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorKind {
    Constant { value: Vec<f64> },
    /// `A x + shift`
    Affine { matrix: Vec<Vec<f64>>, shift: Vec<f64> },
    GaussianBump { amplitude: Vec<f64>, center: Vec<f64>, width: f64 },
    Sinusoidal { amplitude: Vec<f64>, frequency: Vec<f64>, phase: f64 },
    CompactBump { amplitude: Vec<f64>, center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    #[serde(flatten)]
    pub kind: VectorKind,
    #[serde(default, skip_serializing_if = "TimeProfile::is_one")]
    pub time: TimeProfile,
}

/// Value and row-major Jacobian `J[i][j] = ∂bᵢ/∂xⱼ` of a vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEval {
    pub value: Vec<f64>,
    pub jacobian: Vec<f64>,
}

impl VectorField {
    pub fn new(kind: VectorKind) -> Self {
        VectorField { kind, time: TimeProfile::One }
    }

    pub fn with_time(mut self, time: TimeProfile) -> Self {
        self.time = time;
        self
    }

    pub fn constant(value: Vec<f64>) -> Self {
        Self::new(VectorKind::Constant { value })
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(vec![0.0; dim])
    }

    pub fn affine(matrix: Vec<Vec<f64>>, shift: Vec<f64>) -> Self {
        Self::new(VectorKind::Affine { matrix, shift })
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            VectorKind::Constant { value } => value.len(),
            VectorKind::Affine { shift, .. } => shift.len(),
            VectorKind::GaussianBump { amplitude, .. }
            | VectorKind::Sinusoidal { amplitude, .. }
            | VectorKind::CompactBump { amplitude, .. } => amplitude.len(),
        }
    }

    fn shape(&self) -> Option<(&[f64], Shape<'_>)> {
        match &self.kind {
            VectorKind::GaussianBump { amplitude, center, width } => {
                Some((amplitude, Shape::Gaussian { center, width: *width }))
            }
            VectorKind::Sinusoidal { amplitude, frequency, phase } => {
                Some((amplitude, Shape::Sinusoid { frequency, phase: *phase }))
            }
            VectorKind::CompactBump { amplitude, center, radius } => {
                Some((amplitude, Shape::CompactBump { center, radius: *radius }))
            }
            _ => None,
        }
    }

    /// Checks parameter shapes and finiteness.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::invalid("vector field has dimension 0"));
        }
        let mut all: Vec<f64> = Vec::new();
        match &self.kind {
            VectorKind::Constant { value } => all.extend(value),
            VectorKind::Affine { matrix, shift } => {
                if matrix.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, found: matrix.len() });
                }
                for row in matrix {
                    if row.len() != d {
                        return Err(Error::DimensionMismatch { expected: d, found: row.len() });
                    }
                    all.extend(row);
                }
                all.extend(shift);
            }
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                shape.validate(d)?;
                all.extend(amp);
            }
        }
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field parameter".into()));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> VectorEval {
        let d = x.len();
        let m = self.time.eval(t);
        match &self.kind {
            VectorKind::Constant { value } => VectorEval {
                value: value.iter().map(|v| m * v).collect(),
                jacobian: vec![0.0; d * d],
            },
            VectorKind::Affine { matrix, shift } => VectorEval {
                value: matrix.iter().zip(shift).map(|(row, s)| m * (dot(row, x) + s)).collect(),
                jacobian: matrix.iter().flat_map(|row| row.iter().map(move |a| m * a)).collect(),
            },
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                let (s, grad) = shape.eval(x);
                VectorEval {
                    value: amp.iter().map(|a| m * a * s).collect(),
                    jacobian: amp.iter().flat_map(|a| grad.iter().map(move |g| m * a * g)).collect(),
                }
            }
        }
    }

    pub fn bounds(&self, alpha: f64) -> Result<HolderBounds> {
        check_alpha(alpha)?;
        Ok(match &self.kind {
            VectorKind::Constant { value } => HolderBounds { sup: norm(value), sup_grad: 0.0, grad_holder: 0.0 },
            VectorKind::Affine { matrix, shift } => {
                let frob = matrix.iter().map(|r| dot(r, r)).sum::<f64>().sqrt();
                let sup = if frob == 0.0 { norm(shift) } else { f64::INFINITY };
                HolderBounds { sup, sup_grad: frob, grad_holder: 0.0 }
            }
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                shape.bounds(alpha).scaled(norm(amp))
            }
        })
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            VectorKind::Constant { value } => value.iter().all(|v| *v == 0.0),
            VectorKind::Affine { matrix, shift } => {
                shift.iter().all(|v| *v == 0.0) && matrix.iter().flatten().all(|v| *v == 0.0)
            }
            VectorKind::GaussianBump { amplitude, .. }
            | VectorKind::Sinusoidal { amplitude, .. }
            | VectorKind::CompactBump { amplitude, .. } => amplitude.iter().all(|v| *v == 0.0),
        }
    }
}

/// Scalar-valued catalog entries (growth rate `w`, test functions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarKind {
    Constant { value: f64 },
    /// `gradient·x + shift`
    Affine { gradient: Vec<f64>, shift: f64 },
    GaussianBump { amplitude: f64, center: Vec<f64>, width: f64 },
    Sinusoidal { amplitude: f64, frequency: Vec<f64>, phase: f64 },
    CompactBump { amplitude: f64, center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    #[serde(flatten)]
    pub kind: ScalarKind,
    #[serde(default, skip_serializing_if = "TimeProfile::is_one")]
    pub time: TimeProfile,
}

impl ScalarField {
    pub fn new(kind: ScalarKind) -> Self {
        ScalarField { kind, time: TimeProfile::One }
    }

    pub fn with_time(mut self, time: TimeProfile) -> Self {
        self.time = time;
        self
    }

    pub fn constant(value: f64) -> Self {
        Self::new(ScalarKind::Constant { value })
    }

    pub fn gaussian(amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        Self::new(ScalarKind::GaussianBump { amplitude, center, width })
    }

    pub fn sinusoidal(amplitude: f64, frequency: Vec<f64>, phase: f64) -> Self {
        Self::new(ScalarKind::Sinusoidal { amplitude, frequency, phase })
    }

    pub fn compact_bump(amplitude: f64, center: Vec<f64>, radius: f64) -> Self {
        Self::new(ScalarKind::CompactBump { amplitude, center, radius })
    }

    /// The spatial dimension fixed by the parameters, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            ScalarKind::Constant { .. } => None,
            ScalarKind::Affine { gradient, .. } => Some(gradient.len()),
            ScalarKind::GaussianBump { center, .. } | ScalarKind::CompactBump { center, .. } => Some(center.len()),
            ScalarKind::Sinusoidal { frequency, .. } => Some(frequency.len()),
        }
    }

    fn shape(&self) -> Option<(f64, Shape<'_>)> {
        match &self.kind {
            ScalarKind::GaussianBump { amplitude, center, width } => {
                Some((*amplitude, Shape::Gaussian { center, width: *width }))
            }
            ScalarKind::Sinusoidal { amplitude, frequency, phase } => {
                Some((*amplitude, Shape::Sinusoid { frequency, phase: *phase }))
            }
            ScalarKind::CompactBump { amplitude, center, radius } => {
                Some((*amplitude, Shape::CompactBump { center, radius: *radius }))
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match &self.kind {
            ScalarKind::Constant { value } => value.is_finite(),
            ScalarKind::Affine { gradient, shift } => {
                if gradient.is_empty() {
                    return Err(Error::invalid("affine gradient is empty"));
                }
                shift.is_finite() && gradient.iter().all(|g| g.is_finite())
            }
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                shape.validate(self.dim().unwrap_or(0))?;
                if self.dim() == Some(0) {
                    return Err(Error::invalid("scalar field has dimension 0"));
                }
                amp.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::NonFinite("scalar field parameter".into()))
        }
    }

    /// Value and spatial gradient at `(t, x)`.
    pub fn eval(&self, t: f64, x: &[f64]) -> (f64, Vec<f64>) {
        let m = self.time.eval(t);
        match &self.kind {
            ScalarKind::Constant { value } => (m * value, vec![0.0; x.len()]),
            ScalarKind::Affine { gradient, shift } => {
                (m * (dot(gradient, x) + shift), gradient.iter().map(|g| m * g).collect())
            }
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                let (s, grad) = shape.eval(x);
                (m * amp * s, grad.iter().map(|g| m * amp * g).collect())
            }
        }
    }

    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        self.eval(t, x).0
    }

    pub fn bounds(&self, alpha: f64) -> Result<HolderBounds> {
        check_alpha(alpha)?;
        Ok(match &self.kind {
            ScalarKind::Constant { value } => HolderBounds { sup: value.abs(), sup_grad: 0.0, grad_holder: 0.0 },
            ScalarKind::Affine { gradient, shift } => {
                let g = norm(gradient);
                HolderBounds { sup: if g == 0.0 { shift.abs() } else { f64::INFINITY }, sup_grad: g, grad_holder: 0.0 }
            }
            _ => {
                let (amp, shape) = self.shape().expect("shaped kind");
                shape.bounds(alpha).scaled(amp.abs())
            }
        })
    }

    /// Rescales the amplitude so the certified `C^{1+α}` budget equals one.
    pub fn normalized(&self, alpha: f64) -> Result<ScalarField> {
        let budget = self.bounds(alpha)?.budget();
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::invalid(format!("cannot normalize a field with budget {budget}")));
        }
        let mut out = self.clone();
        let c = 1.0 / budget;
        match &mut out.kind {
            ScalarKind::Constant { value } => *value *= c,
            ScalarKind::Affine { .. } => unreachable!("affine budget is infinite"),
            ScalarKind::GaussianBump { amplitude, .. }
            | ScalarKind::Sinusoidal { amplitude, .. }
            | ScalarKind::CompactBump { amplitude, .. } => *amplitude *= c,
        }
        Ok(out)
    }
}

/// Spatial test functions: the smooth scalar catalog, plus the Lipschitz hat
/// `|x − c| − 1` on `[c−1, c+1]` (zero outside) that only the flat-metric
/// evaluator accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestFunction {
    Smooth(ScalarField),
    Hat { hat_center: f64 },
}

impl TestFunction {
    pub fn smooth(&self) -> Result<&ScalarField> {
        match self {
            TestFunction::Smooth(f) => Ok(f),
            TestFunction::Hat { .. } => {
                Err(Error::Unsupported("the hat function is not C^{1+α}; it is only admitted by the flat metric".into()))
            }
        }
    }

    /// Value at `x` (time-independent evaluation at t = 0).
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Smooth(f) => f.value(0.0, x),
            TestFunction::Hat { hat_center } => {
                let r = (x[0] - hat_center).abs();
                if r <= 1.0 {
                    r - 1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `(sup|f|, Lip f)` for the flat metric's `W^{1,∞}` ball.
    pub fn lipschitz_bounds(&self) -> (f64, f64) {
        match self {
            TestFunction::Smooth(f) => {
                let b = f.bounds(1.0).expect("alpha = 1 is valid");
                (b.sup, b.sup_grad)
            }
            TestFunction::Hat { .. } => (1.0, 1.0),
        }
    }
}

/// Velocity `b`, perturbation direction `b₁` and growth rate `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSystem {
    pub b: VectorField,
    pub b1: VectorField,
    pub w: ScalarField,
}

impl TransportSystem {
    pub fn new(b: VectorField, b1: VectorField, w: ScalarField) -> Result<Self> {
        let sys = TransportSystem { b, b1, w };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        self.b.validate()?;
        self.b1.validate()?;
        self.w.validate()?;
        let d = self.b.dim();
        if self.b1.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.b1.dim() });
        }
        if let Some(wd) = self.w.dim() {
            if wd != d {
                return Err(Error::DimensionMismatch { expected: d, found: wd });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.b.dim()
    }

    /// `∂ₜμ + ∂ₓ((1+h)μ) = 0`: unit speed perturbed by unit speed, no growth.
    pub fn counterexample() -> Self {
        TransportSystem {
            b: VectorField::constant(vec![1.0]),
            b1: VectorField::constant(vec![1.0]),
            w: ScalarField::constant(0.0),
        }
    }

    /// `b(x) = −x`, `b₁ = 1`, no growth; `X = h + (y − h)e^{−t}`.
    pub fn linear_contraction() -> Self {
        TransportSystem {
            b: VectorField::affine(vec![vec![-1.0]], vec![0.0]),
            b1: VectorField::constant(vec![1.0]),
            w: ScalarField::constant(0.0),
        }
    }

    /// Unit transport with affine growth `w(x) = slope·x`; `∂ₕW = slope·t²/2`.
    pub fn drift_with_linear_growth(slope: f64) -> Self {
        TransportSystem {
            b: VectorField::constant(vec![1.0]),
            b1: VectorField::constant(vec![1.0]),
            w: ScalarField::new(ScalarKind::Affine { gradient: vec![slope], shift: 0.0 }),
        }
    }

    /// Frozen particles with constant growth `c`.
    pub fn frozen_growth(c: f64) -> Self {
        TransportSystem { b: VectorField::zero(1), b1: VectorField::zero(1), w: ScalarField::constant(c) }
    }

    /// The same system re-centered at `h`: `b̄ = b + h·b₁` expressed in the
    /// catalog, when the sum stays inside it.
    pub fn recentered(&self, h: f64) -> Option<TransportSystem> {
        let b = match (&self.b.kind, &self.b1.kind) {
            _ if self.b.time != self.b1.time => return None,
            (VectorKind::Constant { value: c0 }, VectorKind::Constant { value: c1 }) => {
                VectorField::constant(c0.iter().zip(c1).map(|(a, b)| a + h * b).collect())
            }
            (VectorKind::Affine { matrix, shift }, VectorKind::Constant { value }) => VectorField::affine(
                matrix.clone(),
                shift.iter().zip(value).map(|(a, b)| a + h * b).collect(),
            ),
            (VectorKind::Affine { matrix: m0, shift: s0 }, VectorKind::Affine { matrix: m1, shift: s1 }) => {
                VectorField::affine(
                    m0.iter()
                        .zip(m1)
                        .map(|(r0, r1)| r0.iter().zip(r1).map(|(a, b)| a + h * b).collect())
                        .collect(),
                    s0.iter().zip(s1).map(|(a, b)| a + h * b).collect(),
                )
            }
            _ => return None,
        }
        .with_time(self.b.time);
        Some(TransportSystem { b, b1: self.b1.clone(), w: self.w.clone() })
    }

    /// `b^h = b + h·b₁` and its Jacobian at `(t, x)`.
    pub fn perturbed_velocity(&self, h: f64, t: f64, x: &[f64]) -> VectorEval {
        perturbed_velocity(&self.b, &self.b1, h, t, x)
    }
}

/// `b + h·b₁` and `∇b + h∇b₁`.
///
/// The analysis behind this crate assumes `h ∈ [−1/2, 1/2]`; values outside
/// are evaluated anyway.
pub fn perturbed_velocity(b: &VectorField, b1: &VectorField, h: f64, t: f64, x: &[f64]) -> VectorEval {
    let mut e = b.eval(t, x);
    if h != 0.0 {
        let e1 = b1.eval(t, x);
        e.value.iter_mut().zip(&e1.value).for_each(|(v, v1)| *v += h * v1);
        e.jacobian.iter_mut().zip(&e1.jacobian).for_each(|(j, j1)| *j += h * j1);
    }
    e
}

/// Returns `true` when `h` lies in the standing range `[−1/2, 1/2]`.
pub fn in_standard_range(h: f64) -> bool {
    (-0.5..=0.5).contains(&h)
}

/// The fixed panel of twelve one-dimensional smooth test functions, each
/// rescaled to certified `C^{1+α}` budget one.
pub fn psi_panel(alpha: f64) -> Result<Vec<(String, ScalarField)>> {
    use std::f64::consts::FRAC_PI_2;
    let raw: Vec<(&str, ScalarField)> = vec![
        ("const", ScalarField::constant(1.0)),
        ("sin", ScalarField::sinusoidal(1.0, vec![1.0], 0.0)),
        ("cos", ScalarField::sinusoidal(1.0, vec![1.0], FRAC_PI_2)),
        ("sin2", ScalarField::sinusoidal(1.0, vec![2.0], 0.3)),
        ("sin3", ScalarField::sinusoidal(1.0, vec![3.0], 1.0)),
        ("cos_half", ScalarField::sinusoidal(1.0, vec![0.5], FRAC_PI_2)),
        ("gauss0", ScalarField::gaussian(1.0, vec![0.0], 1.0)),
        ("gauss1", ScalarField::gaussian(1.0, vec![1.0], 0.5)),
        ("gauss_wide", ScalarField::gaussian(1.0, vec![-0.5], 2.0)),
        ("gauss_narrow", ScalarField::gaussian(1.0, vec![1.2], 0.3)),
        ("bump1", ScalarField::compact_bump(1.0, vec![1.0], 1.0)),
        ("bump_half", ScalarField::compact_bump(1.0, vec![0.5], 0.75)),
    ];
    raw.into_iter()
        .map(|(id, f)| Ok((id.to_string(), f.normalized(alpha)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vector_catalog() -> Vec<VectorField> {
        vec![
            VectorField::constant(vec![0.7, -0.2]),
            VectorField::affine(vec![vec![-1.0, 0.5], vec![0.2, 0.3]], vec![0.1, -0.4]),
            VectorField::new(VectorKind::GaussianBump { amplitude: vec![1.0, -2.0], center: vec![0.3, 0.1], width: 0.8 }),
            VectorField::new(VectorKind::Sinusoidal { amplitude: vec![0.5, 1.5], frequency: vec![1.3, -0.7], phase: 0.4 })
                .with_time(TimeProfile::Cos),
            VectorField::new(VectorKind::CompactBump { amplitude: vec![2.0, 1.0], center: vec![0.0, 0.5], radius: 1.5 })
                .with_time(TimeProfile::ExpDecay),
        ]
    }

    fn scalar_catalog(dim: usize) -> Vec<ScalarField> {
        let c = vec![0.2; dim];
        let k: Vec<f64> = (0..dim).map(|i| 1.1 + 0.4 * i as f64).collect();
        vec![
            ScalarField::constant(-0.3),
            ScalarField::new(ScalarKind::Affine { gradient: k.clone(), shift: 0.5 }),
            ScalarField::gaussian(1.5, c.clone(), 0.6),
            ScalarField::sinusoidal(0.8, k, 0.9).with_time(TimeProfile::Cos),
            ScalarField::compact_bump(1.2, c, 0.9),
        ]
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn perturbed_velocity_examples() {
        let sys = TransportSystem::counterexample();
        let e = sys.perturbed_velocity(0.3, 0.7, &[4.0]);
        assert_eq!(e.value, vec![1.3]);
        assert_eq!(e.jacobian, vec![0.0]);

        let b = VectorField::affine(vec![vec![-1.0]], vec![0.0]);
        let b1 = VectorField::constant(vec![1.0]);
        let e = perturbed_velocity(&b, &b1, 0.25, 0.0, &[2.0]);
        assert_eq!(e.value, vec![-1.75]);
        assert_eq!(e.jacobian, vec![-1.0]);

        let e0 = perturbed_velocity(&b, &b1, 0.0, 0.0, &[2.0]);
        assert_eq!(e0, b.eval(0.0, &[2.0]));
    }

    #[test]
    fn eval_examples() {
        let g = ScalarField::gaussian(1.0, vec![0.0], 1.0);
        assert_eq!(g.eval(0.0, &[0.0]), (1.0, vec![0.0]));

        let a = VectorField::affine(vec![vec![2.0]], vec![0.0]);
        let e = a.eval(0.0, &[3.0]);
        assert_eq!((e.value[0], e.jacobian[0]), (6.0, 2.0));

        let s = ScalarField::sinusoidal(1.0, vec![1.0], 0.0);
        let (v, grad) = s.eval(0.0, &[std::f64::consts::FRAC_PI_2]);
        assert!((v - 1.0).abs() < 1e-15);
        assert!(grad[0].abs() < 1e-15);
    }

    #[test]
    fn perturbation_is_affine_in_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cat = vector_catalog();
        for b in &cat {
            for b1 in &cat {
                let x = random_point(&mut rng, 2);
                let (h1, h2) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                let v = |h: f64| perturbed_velocity(b, b1, h, 0.4, &x).value;
                let (a, c, m) = (v(h1), v(h2), v(0.5 * (h1 + h2)));
                for i in 0..2 {
                    let scale = 1.0 + a[i].abs() + c[i].abs();
                    assert!((a[i] + c[i] - 2.0 * m[i]).abs() <= 4.0 * f64::EPSILON * scale);
                }
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let step = 1e-6;
        for f in vector_catalog() {
            for _ in 0..1000 {
                let x = random_point(&mut rng, 2);
                let t = rng.random_range(0.0..2.0);
                let e = f.eval(t, &x);
                for j in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += step;
                    xm[j] -= step;
                    let (vp, vm) = (f.eval(t, &xp).value, f.eval(t, &xm).value);
                    for i in 0..2 {
                        let fd = (vp[i] - vm[i]) / (2.0 * step);
                        let an = e.jacobian[i * 2 + j];
                        assert!((fd - an).abs() <= 1e-6 * (1.0 + an.abs()), "{f:?} at {x:?}: {fd} vs {an}");
                    }
                }
            }
        }
        for f in scalar_catalog(2) {
            for _ in 0..1000 {
                let x = random_point(&mut rng, 2);
                let (_, g) = f.eval(0.3, &x);
                for j in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += step;
                    xm[j] -= step;
                    let fd = (f.value(0.3, &xp) - f.value(0.3, &xm)) / (2.0 * step);
                    assert!((fd - g[j]).abs() <= 1e-6 * (1.0 + g[j].abs()), "{f:?}");
                }
            }
        }
    }

    fn frob(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn stored_bounds_dominate_sampled_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for alpha in [0.25, 0.5, 1.0] {
            for f in vector_catalog() {
                let bd = f.bounds(alpha).unwrap();
                for _ in 0..10_000 {
                    let t = rng.random_range(0.0..3.0);
                    let x = random_point(&mut rng, 2);
                    // mix far and near pairs
                    let r = 10f64.powf(rng.random_range(-4.0..0.5));
                    let y: Vec<f64> = x.iter().map(|c| c + r * rng.random_range(-1.0..1.0)).collect();
                    let (ex, ey) = (f.eval(t, &x), f.eval(t, &y));
                    assert!(norm(&ex.value) <= bd.sup * (1.0 + 1e-12));
                    assert!(norm(&ex.jacobian) <= bd.sup_grad * (1.0 + 1e-12) + 1e-15);
                    let dist = frob(&x, &y);
                    if dist > 0.0 {
                        let q = frob(&ex.jacobian, &ey.jacobian) / dist.powf(alpha);
                        assert!(q <= bd.grad_holder * (1.0 + 1e-9) + 1e-12, "{f:?} alpha {alpha}: {q} > {}", bd.grad_holder);
                    }
                }
            }
            for f in scalar_catalog(1) {
                let bd = f.bounds(alpha).unwrap();
                for _ in 0..10_000 {
                    let x = random_point(&mut rng, 1);
                    let r = 10f64.powf(rng.random_range(-4.0..0.5));
                    let y = vec![x[0] + r];
                    let ((vx, gx), (_, gy)) = (f.eval(0.2, &x), f.eval(0.2, &y));
                    assert!(vx.abs() <= bd.sup * (1.0 + 1e-12));
                    assert!(gx[0].abs() <= bd.sup_grad * (1.0 + 1e-12) + 1e-15);
                    let q = (gx[0] - gy[0]).abs() / r.powf(alpha);
                    assert!(q <= bd.grad_holder * (1.0 + 1e-9) + 1e-12, "{f:?}");
                }
            }
        }
    }

    #[test]
    fn panel_is_normalized() {
        for alpha in [0.25, 0.5, 1.0] {
            let panel = psi_panel(alpha).unwrap();
            assert_eq!(panel.len(), 12);
            for (id, f) in &panel {
                let b = f.bounds(alpha).unwrap().budget();
                assert!((b - 1.0).abs() < 1e-12, "{id}: budget {b}");
            }
        }
    }

    #[test]
    fn hat_is_rejected_for_smooth_use() {
        let hat = TestFunction::Hat { hat_center: 1.0 };
        assert!(hat.smooth().is_err());
        assert_eq!(hat.value(&[1.0]), -1.0);
        assert_eq!(hat.value(&[1.5]), -0.5);
        assert_eq!(hat.value(&[3.0]), 0.0);
    }

    #[test]
    fn dimension_errors() {
        let bad = TransportSystem {
            b: VectorField::constant(vec![1.0]),
            b1: VectorField::constant(vec![1.0, 0.0]),
            w: ScalarField::constant(0.0),
        };
        assert!(bad.validate().is_err());
        let bad_width = VectorField::new(VectorKind::GaussianBump { amplitude: vec![1.0], center: vec![0.0], width: 0.0 });
        assert!(bad_width.validate().is_err());
        assert!(ScalarField::constant(1.0).bounds(0.0).is_err());
    }

    #[test]
    fn recentering_constant_and_affine() {
        let s = TransportSystem::counterexample().recentered(0.25).unwrap();
        assert_eq!(s.b, VectorField::constant(vec![1.25]));
        let l = TransportSystem::linear_contraction().recentered(0.25).unwrap();
        assert_eq!(l.b, VectorField::affine(vec![vec![-1.0]], vec![0.25]));
    }
}
