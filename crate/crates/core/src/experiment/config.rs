//! TOML experiment documents. Validation walks the whole document and reports
//! every problem it finds, each prefixed with the dotted key it concerns.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::control::GammaHat;
use crate::dualnorms::{DEFAULT_AUX_NODES, DEFAULT_NODE_CAP};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, TransportSystem, VectorField};
use crate::flow::{steps_for, DEFAULT_STEPS_PER_UNIT};
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Counterexample,
    CauchyRate,
    QuotientConvergence,
    DiracCurve,
    DiracApprox,
    WeakResidual,
    Control,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Counterexample,
        ExperimentKind::CauchyRate,
        ExperimentKind::QuotientConvergence,
        ExperimentKind::DiracCurve,
        ExperimentKind::DiracApprox,
        ExperimentKind::WeakResidual,
        ExperimentKind::Control,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::CauchyRate => "cauchy_rate",
            ExperimentKind::QuotientConvergence => "quotient_convergence",
            ExperimentKind::DiracCurve => "dirac_curve",
            ExperimentKind::DiracApprox => "dirac_approx",
            ExperimentKind::WeakResidual => "weak_residual",
            ExperimentKind::Control => "control",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Whether `[system]` and `[measure]` are required (otherwise rejected).
    fn needs_system(self) -> bool {
        matches!(
            self,
            ExperimentKind::CauchyRate
                | ExperimentKind::QuotientConvergence
                | ExperimentKind::WeakResidual
                | ExperimentKind::Control
        )
    }
}

/// Initial measure as listed in the document; 1-d points may be bare numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl MeasureSpec {
    pub fn build(&self) -> Result<DiscreteMeasure> {
        let dim = self.points.first().map_or(1, Vec::len);
        DiscreteMeasure::new(dim, self.points.clone(), self.weights.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexamplePlan {
    /// Quotient pairs `(2^{−k}, −2^{−k})` for `k = 1..=k_max`.
    pub k_max: u32,
    pub lipschitz_samples: usize,
    /// Range of the random times in the Lipschitz check.
    pub t_range: [f64; 2],
    pub tolerance: f64,
    pub slope_margin: f64,
}

impl Default for CounterexamplePlan {
    fn default() -> Self {
        CounterexamplePlan { k_max: 7, lipschitz_samples: 50, t_range: [0.1, 3.0], tolerance: 1e-9, slope_margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchyRatePlan {
    /// Exponents swept; empty means the top-level `alpha` only.
    pub alphas: Vec<f64>,
    pub k_min: u32,
    pub k_max: u32,
    pub slope_margin: f64,
}

impl Default for CauchyRatePlan {
    fn default() -> Self {
        CauchyRatePlan { alphas: vec![0.25, 0.5, 1.0], k_min: 2, k_max: 7, slope_margin: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuotientPlan {
    /// Base parameter of the quotients.
    pub h: f64,
    /// Increments `±2^{−k}` for `k = k_min..=k_max`.
    pub k_min: u32,
    pub k_max: u32,
    pub slope_margin: f64,
    pub max_reversals: usize,
}

impl Default for QuotientPlan {
    fn default() -> Self {
        QuotientPlan { h: 0.0, k_min: 2, k_max: 7, slope_margin: 0.1, max_reversals: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiracCurvePlan {
    pub x: f64,
    pub lambdas: Vec<f64>,
    /// Fixed pair offsets `|x − y|` measured from `x`.
    pub pair_offsets: Vec<f64>,
    /// Extra uniformly random pairs in `pair_range`.
    pub random_pairs: usize,
    pub pair_range: [f64; 2],
    pub tolerance: f64,
}

impl Default for DiracCurvePlan {
    fn default() -> Self {
        DiracCurvePlan {
            x: 0.3,
            lambdas: vec![1e-1, 1e-2, 1e-3, -1e-1, -1e-2, -1e-3],
            pair_offsets: vec![0.5, 0.1],
            random_pairs: 20,
            pair_range: [-1.0, 1.0],
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiracApproxPlan {
    pub measures: usize,
    pub epsilons: Vec<f64>,
    pub max_atoms: usize,
    pub dim: usize,
    /// Atom coordinates are drawn uniformly from this interval.
    pub support: [f64; 2],
}

impl Default for DiracApproxPlan {
    fn default() -> Self {
        DiracApproxPlan { measures: 1000, epsilons: vec![0.1, 0.01], max_atoms: 8, dim: 1, support: [-2.0, 2.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeakResidualPlan {
    pub h: f64,
    /// Step counts of the refinement study; the finest one is held to `tolerance`.
    pub steps_ladder: Vec<usize>,
    pub tolerance: f64,
    pub min_order: f64,
    /// Relative corruption of the weights in the negative control.
    pub corruption: f64,
    pub control_ratio: f64,
}

impl Default for WeakResidualPlan {
    fn default() -> Self {
        WeakResidualPlan {
            h: 0.0,
            steps_ladder: vec![32, 64, 128, 256],
            tolerance: 1e-4,
            min_order: 1.9,
            corruption: 0.1,
            control_ratio: 10.0,
        }
    }
}

/// `γ̂` as written in a document: the quadratic target may be given directly
/// or as the point where `K` is evaluated to obtain it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSpec {
    Quadratic {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_point: Option<Vec<f64>>,
    },
    Logistic {
        steepness: f64,
        midpoint: f64,
    },
    Identity,
}

impl GammaSpec {
    pub fn resolve(&self, k: &ScalarField) -> GammaHat {
        match self {
            GammaSpec::Quadratic { target: Some(t), .. } => GammaHat::Quadratic { target: *t },
            GammaSpec::Quadratic { target_point: Some(p), .. } => GammaHat::Quadratic { target: k.value(0.0, p) },
            GammaSpec::Quadratic { .. } => unreachable!("validated"),
            GammaSpec::Logistic { steepness, midpoint } => GammaHat::Logistic { steepness: *steepness, midpoint: *midpoint },
            GammaSpec::Identity => GammaHat::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub k: ScalarField,
    pub gamma: GammaSpec,
    pub starts: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub fd_points: Vec<f64>,
    pub fd_tolerance: f64,
    pub oracle_tolerance: f64,
    pub gradient_tolerance: f64,
    /// Half-width of the local grid search around a non-convex result.
    pub basin_radius: f64,
}

impl ControlPlan {
    const DEFAULTS: ControlDefaults = ControlDefaults {
        tol: 1e-10,
        max_iter: 200,
        fd_step: 1e-5,
        fd_tolerance: 1e-5,
        oracle_tolerance: 1e-4,
        gradient_tolerance: 1e-8,
        basin_radius: 0.05,
    };
}

struct ControlDefaults {
    tol: f64,
    max_iter: usize,
    fd_step: f64,
    fd_tolerance: f64,
    oracle_tolerance: f64,
    gradient_tolerance: f64,
    basin_radius: f64,
}

/// The experiment-specific section, keyed by the kind name.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Plan {
    Counterexample(CounterexamplePlan),
    CauchyRate(CauchyRatePlan),
    QuotientConvergence(QuotientPlan),
    DiracCurve(DiracCurvePlan),
    DiracApprox(DiracApproxPlan),
    WeakResidual(WeakResidualPlan),
    Control(ControlPlan),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub alpha: f64,
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub aux_nodes: usize,
    pub node_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<TransportSystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(flatten)]
    pub plan: Plan,
}

impl ExperimentConfig {
    /// The resolved document: every default spelled out. Parsing it again
    /// yields an equal configuration.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("cannot serialize configuration: {e}")))
    }

    pub fn initial_measure(&self) -> Result<DiscreteMeasure> {
        match &self.measure {
            Some(m) => m.build(),
            None => DiscreteMeasure::dirac(&[0.0]),
        }
    }

    pub fn transport_system(&self) -> TransportSystem {
        self.system.clone().unwrap_or_else(TransportSystem::counterexample)
    }

    /// Steps for a horizon `t` at the configured resolution.
    pub fn steps_for(&self, t: f64) -> usize {
        steps_for(t, (self.steps as f64 / self.t_end).ceil().max(1.0) as usize)
    }
}

const TOP_KEYS: &[&str] = &["kind", "alpha", "t_end", "steps", "seed", "aux_nodes", "node_cap", "output", "system", "measure"];
const VECTOR_KINDS: &[(&str, &[&str])] = &[
    ("constant", &["value"]),
    ("affine", &["matrix", "shift"]),
    ("gaussian_bump", &["amplitude", "center", "width"]),
    ("sinusoidal", &["amplitude", "frequency", "phase"]),
    ("compact_bump", &["amplitude", "center", "radius"]),
];
const SCALAR_KINDS: &[(&str, &[&str])] = &[
    ("constant", &["value"]),
    ("affine", &["gradient", "shift"]),
    ("gaussian_bump", &["amplitude", "center", "width"]),
    ("sinusoidal", &["amplitude", "frequency", "phase"]),
    ("compact_bump", &["amplitude", "center", "radius"]),
];
const TIME_PROFILES: &[&str] = &["one", "exp_decay", "cos"];

#[derive(Default)]
struct Errors(Vec<String>);

impl Errors {
    fn push(&mut self, path: &str, msg: impl std::fmt::Display) {
        self.0.push(format!("{path}: {msg}"));
    }

    fn check_keys(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.push(&join(path, key), format!("unknown key (expected one of: {})", allowed.join(", ")));
            }
        }
    }

    fn require(&mut self, cond: bool, path: &str, msg: &str) {
        if !cond {
            self.push(path, msg);
        }
    }

    /// Deserializes `value`, recording a failure under `path`.
    fn decode<T: DeserializeOwned>(&mut self, value: &Value, path: &str) -> Option<T> {
        match value.clone().try_into::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(path, e.message());
                None
            }
        }
    }

    fn get<T: DeserializeOwned>(&mut self, table: &Table, key: &str, prefix: &str) -> Option<T> {
        table.get(key).and_then(|v| self.decode(v, &join(prefix, key)))
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Validates a catalog entry's `kind` and keys before handing it to serde, so
/// an unknown kind produces one error naming the offending key.
fn check_field_table(value: &Value, path: &str, kinds: &[(&str, &[&str])], errors: &mut Errors) -> bool {
    let Some(table) = value.as_table() else {
        errors.push(path, "expected a table with a `kind` key");
        return false;
    };
    let kind_path = join(path, "kind");
    let Some(kind) = table.get("kind") else {
        errors.push(&kind_path, "missing required key");
        return false;
    };
    let Some(kind) = kind.as_str() else {
        errors.push(&kind_path, "expected a string");
        return false;
    };
    let Some((_, keys)) = kinds.iter().find(|(k, _)| *k == kind) else {
        let names: Vec<&str> = kinds.iter().map(|(k, _)| *k).collect();
        errors.push(&kind_path, format!("unknown field kind `{kind}` (expected one of: {})", names.join(", ")));
        return false;
    };
    let mut allowed = vec!["kind", "time"];
    allowed.extend_from_slice(keys);
    let before = errors.0.len();
    errors.check_keys(table, path, &allowed);
    for key in *keys {
        if !table.contains_key(*key) {
            errors.push(&join(path, key), format!("missing required key for kind `{kind}`"));
        }
    }
    if let Some(t) = table.get("time") {
        if !t.as_str().is_some_and(|s| TIME_PROFILES.contains(&s)) {
            errors.push(&join(path, "time"), format!("expected one of: {}", TIME_PROFILES.join(", ")));
        }
    }
    errors.0.len() == before
}

fn parse_vector(value: &Value, path: &str, errors: &mut Errors) -> Option<VectorField> {
    if !check_field_table(value, path, VECTOR_KINDS, errors) {
        return None;
    }
    let f: VectorField = errors.decode(value, path)?;
    if let Err(e) = f.validate() {
        errors.push(path, e);
        return None;
    }
    Some(f)
}

fn parse_scalar(value: &Value, path: &str, errors: &mut Errors) -> Option<ScalarField> {
    if value.as_table().is_some_and(|t| t.contains_key("hat_center") || t.get("kind").and_then(Value::as_str) == Some("hat")) {
        errors.push(path, "the hat function is not C^{1+α} and is only admitted by the flat metric");
        return None;
    }
    if !check_field_table(value, path, SCALAR_KINDS, errors) {
        return None;
    }
    let f: ScalarField = errors.decode(value, path)?;
    if let Err(e) = f.validate() {
        errors.push(path, e);
        return None;
    }
    Some(f)
}

fn parse_system(value: &Value, errors: &mut Errors) -> Option<TransportSystem> {
    let Some(table) = value.as_table() else {
        errors.push("system", "expected a table");
        return None;
    };
    errors.check_keys(table, "system", &["b", "b1", "w"]);
    let get = |key: &str, errors: &mut Errors| {
        let path = join("system", key);
        if table.get(key).is_none() {
            errors.push(&path, "missing required key");
        }
        table.get(key).map(|v| (v, path))
    };
    let b = get("b", errors).and_then(|(v, p)| parse_vector(v, &p, errors));
    let b1 = get("b1", errors).and_then(|(v, p)| parse_vector(v, &p, errors));
    let w = get("w", errors).and_then(|(v, p)| parse_scalar(v, &p, errors));
    let sys = TransportSystem { b: b?, b1: b1?, w: w? };
    match sys.validate() {
        Ok(()) => Some(sys),
        Err(e) => {
            errors.push("system", e);
            None
        }
    }
}

fn parse_measure(value: &Value, errors: &mut Errors) -> Option<MeasureSpec> {
    let Some(table) = value.as_table() else {
        errors.push("measure", "expected a table");
        return None;
    };
    errors.check_keys(table, "measure", &["points", "weights"]);
    errors.require(table.contains_key("points"), "measure.points", "missing required key");
    errors.require(table.contains_key("weights"), "measure.weights", "missing required key");
    let points = table.get("points").and_then(|v| {
        let arr = v.as_array()?;
        if arr.iter().all(|p| p.is_float() || p.is_integer()) {
            errors.decode::<Vec<f64>>(v, "measure.points").map(|p| p.into_iter().map(|x| vec![x]).collect())
        } else {
            errors.decode::<Vec<Vec<f64>>>(v, "measure.points")
        }
    });
    let weights: Option<Vec<f64>> = errors.get(table, "weights", "measure");
    let spec = MeasureSpec { points: points?, weights: weights? };
    match spec.build() {
        Ok(m) if !m.is_empty() => Some(spec),
        Ok(_) => {
            errors.push("measure", "the initial measure has no atoms");
            None
        }
        Err(e) => {
            errors.push("measure", e);
            None
        }
    }
}

fn plan_keys(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Counterexample => &["k_max", "lipschitz_samples", "t_range", "tolerance", "slope_margin"],
        ExperimentKind::CauchyRate => &["alphas", "k_min", "k_max", "slope_margin"],
        ExperimentKind::QuotientConvergence => &["h", "k_min", "k_max", "slope_margin", "max_reversals"],
        ExperimentKind::DiracCurve => &["x", "lambdas", "pair_offsets", "random_pairs", "pair_range", "tolerance"],
        ExperimentKind::DiracApprox => &["measures", "epsilons", "max_atoms", "dim", "support"],
        ExperimentKind::WeakResidual => &["h", "steps_ladder", "tolerance", "min_order", "corruption", "control_ratio"],
        ExperimentKind::Control => &[
            "k",
            "gamma",
            "starts",
            "tol",
            "max_iter",
            "fd_step",
            "fd_points",
            "fd_tolerance",
            "oracle_tolerance",
            "gradient_tolerance",
            "basin_radius",
        ],
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn in_h_range(h: f64) -> bool {
    (-0.5..=0.5).contains(&h)
}

fn check_ladder(k_min: u32, k_max: u32, path: &str, errors: &mut Errors) {
    errors.require(k_min >= 1 && k_min < k_max && k_max <= 40, path, "need 1 ≤ k_min < k_max ≤ 40");
}

fn parse_control(table: &Table, errors: &mut Errors) -> Option<ControlPlan> {
    let p = "control";
    let d = ControlPlan::DEFAULTS;
    let k = match table.get("k") {
        Some(v) => parse_scalar(v, "control.k", errors),
        None => {
            errors.push("control.k", "missing required key");
            None
        }
    };
    let gamma = match table.get("gamma") {
        Some(v) => {
            let gamma: Option<GammaSpec> = errors.decode(v, "control.gamma");
            if let Some(GammaSpec::Quadratic { target, target_point }) = &gamma {
                if target.is_some() == target_point.is_some() {
                    errors.push("control.gamma", "quadratic needs exactly one of `target` and `target_point`");
                }
            }
            gamma
        }
        None => {
            errors.push("control.gamma", "missing required key");
            None
        }
    };
    let plan = ControlPlan {
        k: k?,
        gamma: gamma?,
        starts: errors.get(table, "starts", p).unwrap_or_else(|| vec![-0.3, -0.1, 0.0, 0.35, 0.45]),
        tol: errors.get(table, "tol", p).unwrap_or(d.tol),
        max_iter: errors.get(table, "max_iter", p).unwrap_or(d.max_iter),
        fd_step: errors.get(table, "fd_step", p).unwrap_or(d.fd_step),
        fd_points: errors.get(table, "fd_points", p).unwrap_or_else(|| vec![-0.4, -0.2, 0.0, 0.2, 0.4]),
        fd_tolerance: errors.get(table, "fd_tolerance", p).unwrap_or(d.fd_tolerance),
        oracle_tolerance: errors.get(table, "oracle_tolerance", p).unwrap_or(d.oracle_tolerance),
        gradient_tolerance: errors.get(table, "gradient_tolerance", p).unwrap_or(d.gradient_tolerance),
        basin_radius: errors.get(table, "basin_radius", p).unwrap_or(d.basin_radius),
    };
    Some(plan)
}

fn validate_plan(plan: &Plan, cfg_dim: Option<usize>, errors: &mut Errors) {
    match plan {
        Plan::Counterexample(c) => {
            errors.require(c.k_max >= 2 && c.k_max <= 40, "counterexample.k_max", "need 2 ≤ k_max ≤ 40");
            errors.require(
                positive(c.t_range[0]) && c.t_range[0] < c.t_range[1] && c.t_range[1].is_finite(),
                "counterexample.t_range",
                "need 0 < lo < hi",
            );
            errors.require(positive(c.tolerance), "counterexample.tolerance", "must be positive");
            errors.require(c.slope_margin >= 0.0, "counterexample.slope_margin", "must be nonnegative");
        }
        Plan::CauchyRate(c) => {
            check_ladder(c.k_min, c.k_max, "cauchy_rate", errors);
            for a in &c.alphas {
                errors.require(*a > 0.0 && *a <= 1.0, "cauchy_rate.alphas", "every exponent must lie in (0, 1]");
            }
            errors.require(c.slope_margin >= 0.0, "cauchy_rate.slope_margin", "must be nonnegative");
        }
        Plan::QuotientConvergence(q) => {
            errors.require(in_h_range(q.h), "quotient_convergence.h", "must lie in [-0.5, 0.5]");
            check_ladder(q.k_min, q.k_max, "quotient_convergence", errors);
            errors.require(q.slope_margin >= 0.0, "quotient_convergence.slope_margin", "must be nonnegative");
        }
        Plan::DiracCurve(d) => {
            errors.require(d.x.is_finite(), "dirac_curve.x", "must be finite");
            errors.require(!d.lambdas.is_empty(), "dirac_curve.lambdas", "must not be empty");
            errors.require(
                d.lambdas.iter().all(|l| *l != 0.0 && l.is_finite()),
                "dirac_curve.lambdas",
                "entries must be nonzero and finite",
            );
            errors.require(d.pair_offsets.iter().all(|o| positive(*o)), "dirac_curve.pair_offsets", "must be positive");
            errors.require(d.pair_range[0] < d.pair_range[1], "dirac_curve.pair_range", "need lo < hi");
            errors.require(positive(d.tolerance), "dirac_curve.tolerance", "must be positive");
        }
        Plan::DiracApprox(d) => {
            errors.require(d.measures >= 1, "dirac_approx.measures", "must be at least 1");
            errors.require(!d.epsilons.is_empty(), "dirac_approx.epsilons", "must not be empty");
            errors.require(
                d.epsilons.iter().all(|e| positive(*e) && *e <= 1.0),
                "dirac_approx.epsilons",
                "entries must lie in (0, 1]",
            );
            errors.require(d.max_atoms >= 1 && d.max_atoms <= 24, "dirac_approx.max_atoms", "need 1 ≤ max_atoms ≤ 24");
            errors.require((1..=3).contains(&d.dim), "dirac_approx.dim", "need 1 ≤ dim ≤ 3");
            errors.require(d.support[0] < d.support[1], "dirac_approx.support", "need lo < hi");
        }
        Plan::WeakResidual(w) => {
            errors.require(in_h_range(w.h), "weak_residual.h", "must lie in [-0.5, 0.5]");
            errors.require(
                w.steps_ladder.len() >= 2 && w.steps_ladder.windows(2).all(|s| s[0] < s[1]) && w.steps_ladder[0] >= 1,
                "weak_residual.steps_ladder",
                "need at least two increasing positive step counts",
            );
            errors.require(positive(w.tolerance), "weak_residual.tolerance", "must be positive");
            errors.require(positive(w.corruption), "weak_residual.corruption", "must be positive");
            errors.require(positive(w.control_ratio), "weak_residual.control_ratio", "must be positive");
            errors.require(cfg_dim.is_none_or(|d| d == 1), "measure", "the weak-residual panel is one-dimensional");
        }
        Plan::Control(c) => {
            errors.require(!c.starts.is_empty(), "control.starts", "must not be empty");
            errors.require(c.starts.iter().all(|h| in_h_range(*h)), "control.starts", "entries must lie in [-0.5, 0.5]");
            errors.require(
                c.fd_points.iter().all(|h| in_h_range(*h - c.fd_step) && in_h_range(*h + c.fd_step)),
                "control.fd_points",
                "h ± fd_step must stay inside [-0.5, 0.5]",
            );
            for (name, v) in [
                ("tol", c.tol),
                ("fd_step", c.fd_step),
                ("fd_tolerance", c.fd_tolerance),
                ("oracle_tolerance", c.oracle_tolerance),
                ("gradient_tolerance", c.gradient_tolerance),
                ("basin_radius", c.basin_radius),
            ] {
                errors.require(positive(v), &join("control", name), "must be positive");
            }
            errors.require(c.max_iter >= 1, "control.max_iter", "must be at least 1");
            if let (Some(d), Some(kd)) = (cfg_dim, c.k.dim()) {
                errors.require(d == kd, "control.k", "dimension differs from the system");
            }
            if let GammaSpec::Quadratic { target_point: Some(p), .. } = &c.gamma {
                errors.require(cfg_dim.is_none_or(|d| d == p.len()), "control.gamma.target_point", "wrong dimension");
            }
        }
    }
}

/// Parses and validates a TOML experiment document.
///
/// On failure the error lists every problem found, not just the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(vec![e.message().to_string()]))?;
    let mut errors = Errors::default();

    let kind = match doc.get("kind").map(|v| v.as_str()) {
        None => {
            errors.push("kind", "missing required key");
            None
        }
        Some(None) => {
            errors.push("kind", "expected a string");
            None
        }
        Some(Some(name)) => {
            let k = ExperimentKind::from_name(name);
            if k.is_none() {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                errors.push("kind", format!("unknown experiment kind `{name}` (expected one of: {})", names.join(", ")));
            }
            k
        }
    };

    let mut allowed: Vec<&str> = TOP_KEYS.to_vec();
    if let Some(k) = kind {
        allowed.push(k.name());
    }
    errors.check_keys(&doc, "", &allowed);

    let alpha: f64 = errors.get(&doc, "alpha", "").unwrap_or(0.5);
    errors.require(alpha > 0.0 && alpha <= 1.0, "alpha", "must lie in (0, 1]");
    let t_end: f64 = errors.get(&doc, "t_end", "").unwrap_or(1.0);
    errors.require(positive(t_end), "t_end", "must be positive");
    let steps: usize = errors
        .get(&doc, "steps", "")
        .unwrap_or_else(|| if positive(t_end) { steps_for(t_end, DEFAULT_STEPS_PER_UNIT) } else { 1 });
    errors.require(steps >= 1, "steps", "must be at least 1");
    let seed: u64 = errors.get(&doc, "seed", "").unwrap_or(0);
    let aux_nodes: usize = errors.get(&doc, "aux_nodes", "").unwrap_or(DEFAULT_AUX_NODES);
    errors.require(aux_nodes <= 64, "aux_nodes", "must be at most 64");
    let node_cap: usize = errors.get(&doc, "node_cap", "").unwrap_or(DEFAULT_NODE_CAP);
    errors.require((2..=400).contains(&node_cap), "node_cap", "must lie in [2, 400]");
    let output: Option<String> = errors.get(&doc, "output", "");

    let needs_system = kind.is_some_and(ExperimentKind::needs_system);
    let (mut system, mut measure) = (None, None);
    for key in ["system", "measure"] {
        match (doc.get(key), kind) {
            (Some(_), Some(k)) if !needs_system => errors.push(key, format!("not used by `{}` experiments", k.name())),
            (None, Some(_)) if needs_system => errors.push(key, "missing required section"),
            (Some(v), _) if key == "system" => system = parse_system(v, &mut errors),
            (Some(v), _) => measure = parse_measure(v, &mut errors),
            _ => {}
        }
    }
    let dim = match (&system, &measure) {
        (Some(s), Some(m)) => {
            let md = m.points.first().map_or(1, Vec::len);
            errors.require(s.dim() == md, "measure.points", "dimension differs from the system");
            Some(s.dim())
        }
        (Some(s), None) => Some(s.dim()),
        _ => None,
    };
    if matches!(kind, Some(ExperimentKind::CauchyRate | ExperimentKind::QuotientConvergence)) {
        errors.require(dim.is_none_or(|d| d == 1), "system", "norm computations need a one-dimensional system");
    }

    let plan = kind.and_then(|k| {
        let empty = Value::Table(Table::new());
        let section = doc.get(k.name()).unwrap_or(&empty);
        let Some(table) = section.as_table() else {
            errors.push(k.name(), "expected a table");
            return None;
        };
        errors.check_keys(table, k.name(), plan_keys(k));
        if !errors.0.is_empty() && table.keys().any(|key| !plan_keys(k).contains(&key.as_str())) {
            return None;
        }
        let plan = match k {
            ExperimentKind::Counterexample => errors.decode(section, k.name()).map(Plan::Counterexample),
            ExperimentKind::CauchyRate => errors.decode(section, k.name()).map(Plan::CauchyRate),
            ExperimentKind::QuotientConvergence => errors.decode(section, k.name()).map(Plan::QuotientConvergence),
            ExperimentKind::DiracCurve => errors.decode(section, k.name()).map(Plan::DiracCurve),
            ExperimentKind::DiracApprox => errors.decode(section, k.name()).map(Plan::DiracApprox),
            ExperimentKind::WeakResidual => errors.decode(section, k.name()).map(Plan::WeakResidual),
            ExperimentKind::Control => parse_control(table, &mut errors).map(Plan::Control),
        }?;
        validate_plan(&plan, dim, &mut errors);
        Some(plan)
    });

    if !errors.0.is_empty() {
        return Err(Error::Config(errors.0));
    }
    Ok(ExperimentConfig {
        kind: kind.expect("validated"),
        alpha,
        t_end,
        steps,
        seed,
        aux_nodes,
        node_cap,
        output,
        system,
        measure,
        plan: plan.expect("validated"),
    })
}
