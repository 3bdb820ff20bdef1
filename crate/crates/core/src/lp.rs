//! Dense primal simplex for `max cᵀx` subject to `Ax ≤ b`, `b ≥ 0`.
//!
//! Every problem built by this crate has a nonnegative right-hand side, so
//! the origin is a basic feasible solution and no phase one is needed.
//! Variables are nonnegative unless marked free; a free variable is split as
//! `x⁺ − x⁻`. Rows are equilibrated to unit max-norm. Pricing is Dantzig's
//! largest reduced cost, with ratio ties broken towards the largest pivot;
//! after a run of degenerate pivots the solver switches to Bland's rule.
//!
//! Highly degenerate problems (every right-hand side zero but one) stall in
//! floating point even under Bland's rule, so the simplex runs on a
//! right-hand side lifted by small distinct amounts. Its optimal multipliers
//! are dual feasible for the original problem too, and the reported value is
//! their dual objective `bᵀy` at the original right-hand side. The primal
//! point is recomputed at the original right-hand side when the final basis
//! stays feasible there; otherwise it is the lifted optimum and may violate
//! an original row by at most `2·LIFT` in equilibrated units. When the
//! simplex stops, the tableau is rebuilt from the data at the final basis and
//! pivoting resumes if roundoff had hidden an improving column. Every choice is a deterministic
//! function of the tableau, so repeated solves are bit-identical.

use thiserror::Error;

/// Pivot and feasibility tolerance.
pub const TOLERANCE: f64 = 1e-10;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 64;
/// Scale of the right-hand-side lift in equilibrated rows.
const LIFT: f64 = 1e-8;
/// Rounds of tableau reinversion after the simplex first stops.
const REINVERSIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex stopped after {0} pivots")]
    IterationLimit(usize),
    #[error("row {row} has negative right-hand side {rhs}; the origin must be feasible")]
    NegativeRhs { row: usize, rhs: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("variable index {index} out of range for {vars} variables")]
    BadIndex { index: usize, vars: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    /// Primal optimum, one entry per original variable.
    pub x: Vec<f64>,
    /// Optimal multipliers, one per constraint row.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// A linear program in inequality form, assembled row by row.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    vars: usize,
    objective: Vec<f64>,
    free: Vec<bool>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            vars,
            objective: vec![0.0; vars],
            free: vec![false; vars],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, j: usize, c: f64) {
        self.objective[j] = c;
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    /// Adds `Σ aⱼ xⱼ ≤ rhs`. Repeated indices are summed.
    pub fn add_le(&mut self, terms: &[(usize, f64)], rhs: f64) {
        self.rows.push(terms.to_vec());
        self.rhs.push(rhs);
    }

    fn check(&self) -> Result<(), LpError> {
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        for (row, (terms, &rhs)) in self.rows.iter().zip(&self.rhs).enumerate() {
            if !rhs.is_finite() {
                return Err(LpError::NonFinite("right-hand side"));
            }
            if rhs < 0.0 {
                return Err(LpError::NegativeRhs { row, rhs });
            }
            for &(j, a) in terms {
                if j >= self.vars {
                    return Err(LpError::BadIndex { index: j, vars: self.vars });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite("constraint matrix"));
                }
            }
        }
        Ok(())
    }

    /// Weak-duality bound on the optimum from any multipliers, given a box
    /// `|xⱼ| ≤ boxⱼ` (`0 ≤ xⱼ ≤ boxⱼ` for nonnegative variables) that every
    /// feasible point satisfies. Negative multipliers are replaced by zero, so
    /// the bound holds however inexact `duals` is.
    pub fn dual_bound(&self, duals: &[f64], bounds: &[f64]) -> f64 {
        let mut reduced = self.objective.clone();
        let mut value = 0.0;
        for ((terms, &rhs), &y) in self.rows.iter().zip(&self.rhs).zip(duals) {
            let y = y.max(0.0);
            value += y * rhs;
            for &(j, a) in terms {
                reduced[j] -= y * a;
            }
        }
        for (j, r) in reduced.into_iter().enumerate() {
            let slack = if self.free[j] { r.abs() } else { r.max(0.0) };
            value += slack * bounds[j];
        }
        value
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.check()?;
        // Column layout: one column per variable, plus a mirrored column for
        // every free variable.
        let mut column_of = Vec::with_capacity(self.vars);
        let mut mirror = vec![None; self.vars];
        let mut n = self.vars;
        for (j, &free) in self.free.iter().enumerate() {
            column_of.push(j);
            if free {
                mirror[j] = Some(n);
                n += 1;
            }
        }
        let m = self.rows.len();
        let mut tab = vec![0.0; m * n];
        let mut rhs = self.rhs.clone();
        let mut row_scale = vec![1.0; m];
        for (i, terms) in self.rows.iter().enumerate() {
            let row = &mut tab[i * n..(i + 1) * n];
            for &(j, a) in terms {
                row[column_of[j]] += a;
                if let Some(k) = mirror[j] {
                    row[k] -= a;
                }
            }
            let big = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if big > 0.0 {
                row_scale[i] = 1.0 / big;
                row.iter_mut().for_each(|v| *v *= row_scale[i]);
                rhs[i] *= row_scale[i];
            }
        }
        let mut obj = vec![0.0; n];
        for j in 0..self.vars {
            obj[column_of[j]] = self.objective[j];
            if let Some(k) = mirror[j] {
                obj[k] = -self.objective[j];
            }
        }
        let lift: Vec<f64> = (0..m).map(|i| LIFT * (1.0 + ((i + 1) as f64 * 0.618_033_988_749_894_9).fract())).collect();
        rhs.iter_mut().zip(&lift).for_each(|(r, l)| *r += l);
        let original = Original { a: tab.clone(), b: rhs.clone(), c: obj.clone() };
        let mut tableau = Tableau {
            m,
            n,
            tab,
            rhs,
            obj,
            z: 0.0,
            nonbasic: (0..n).collect(),
            basic: (n..n + m).collect(),
        };
        let limit = 50 * (m + n) + 1000;
        let mut pivots = tableau.run(limit)?;
        // Roundoff accumulated over many pivots can make a basis look optimal
        // when it is not; rebuilding the tableau from the data exposes that.
        for _ in 0..REINVERSIONS {
            if pivots == 0 || !tableau.reinvert(&original) {
                break;
            }
            let more = tableau.run(limit.saturating_sub(pivots))?;
            pivots += more;
            if more == 0 {
                break;
            }
        }
        tableau.drop_lift(&lift);

        let mut split = vec![0.0; n];
        for (i, &label) in tableau.basic.iter().enumerate() {
            if label < n {
                split[label] = tableau.rhs[i];
            }
        }
        let x = (0..self.vars)
            .map(|j| split[column_of[j]] - mirror[j].map_or(0.0, |k| split[k]))
            .collect();
        let mut duals = vec![0.0; m];
        for (col, &label) in tableau.nonbasic.iter().enumerate() {
            if label >= n {
                duals[label - n] = -tableau.obj[col] * row_scale[label - n];
            }
        }
        Ok(LpSolution { value: tableau.z, x, duals, pivots })
    }
}

/// The equilibrated, lifted problem the tableau started from.
struct Original {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Condensed tableau: `basicᵢ = rhsᵢ − Σⱼ tab[i][j]·nonbasicⱼ` and
/// `z = z₀ + Σⱼ obj[j]·nonbasicⱼ`. Labels `< n` are structural columns,
/// labels `≥ n` slacks.
struct Tableau {
    m: usize,
    n: usize,
    tab: Vec<f64>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    z: f64,
    nonbasic: Vec<usize>,
    basic: Vec<usize>,
}

impl Tableau {
    fn run(&mut self, limit: usize) -> Result<usize, LpError> {
        let mut pivots = 0;
        let mut degenerate = 0;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let candidates = (0..self.n).filter(|&j| self.obj[j] > TOLERANCE);
            let entering = if bland {
                candidates.min_by_key(|&j| self.nonbasic[j])
            } else {
                candidates.max_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]).then(self.nonbasic[b].cmp(&self.nonbasic[a])))
            };
            let Some(j) = entering else {
                return Ok(pivots);
            };
            let Some(i) = self.ratio_test(j, bland) else {
                return Err(LpError::Unbounded);
            };
            if pivots == limit {
                return Err(LpError::IterationLimit(pivots));
            }
            if self.rhs[i] <= TOLERANCE {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(i, j);
            pivots += 1;
        }
    }

    /// Recomputes the tableau of the current basis from `orig`. Only the
    /// block of structural basic columns against rows with a nonbasic slack
    /// needs factoring; basic slacks follow by substitution. Returns false,
    /// leaving the tableau untouched, when that block is singular.
    fn reinvert(&mut self, orig: &Original) -> bool {
        let (m, n) = (self.m, self.n);
        let a = |i: usize, j: usize| orig.a[i * n + j];
        let structural: Vec<(usize, usize)> =
            self.basic.iter().enumerate().filter(|&(_, &l)| l < n).map(|(i, &l)| (i, l)).collect();
        let tight: Vec<usize> = self.nonbasic.iter().filter(|&&l| l >= n).map(|&l| l - n).collect();
        let k = structural.len();
        if tight.len() != k {
            return false;
        }
        // LU of K = A[tight, structural] with partial pivoting.
        let mut lu: Vec<f64> = tight.iter().flat_map(|&r| structural.iter().map(move |&(_, j)| a(r, j))).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        for col in 0..k {
            let Some(p) = (col..k).max_by(|&x, &y| lu[x * k + col].abs().total_cmp(&lu[y * k + col].abs()).then(y.cmp(&x)))
            else {
                return false;
            };
            if lu[p * k + col].abs() <= f64::MIN_POSITIVE {
                return false;
            }
            if p != col {
                for c in 0..k {
                    lu.swap(p * k + c, col * k + c);
                }
                perm.swap(p, col);
            }
            let d = lu[col * k + col];
            for r in col + 1..k {
                let f = lu[r * k + col] / d;
                lu[r * k + col] = f;
                if f != 0.0 {
                    for c in col + 1..k {
                        lu[r * k + c] -= f * lu[col * k + c];
                    }
                }
            }
        }
        // Solves K u = v, with v indexed like `tight`.
        let solve = |v: &[f64]| -> Vec<f64> {
            let mut u: Vec<f64> = perm.iter().map(|&p| v[p]).collect();
            for r in 0..k {
                let s: f64 = (0..r).map(|c| lu[r * k + c] * u[c]).sum();
                u[r] -= s;
            }
            for r in (0..k).rev() {
                let s: f64 = (r + 1..k).map(|c| lu[r * k + c] * u[c]).sum();
                u[r] = (u[r] - s) / lu[r * k + r];
            }
            u
        };
        let is_tight = {
            let mut t = vec![None; m];
            for (q, &r) in tight.iter().enumerate() {
                t[r] = Some(q);
            }
            t
        };
        // Columns of B⁻¹N, one nonbasic column at a time.
        let mut tab = vec![0.0; m * n];
        for (col, &label) in self.nonbasic.iter().enumerate() {
            let v: Vec<f64> = if label < n {
                tight.iter().map(|&r| a(r, label)).collect()
            } else {
                let mut e = vec![0.0; k];
                e[is_tight[label - n].expect("nonbasic slack row is tight")] = 1.0;
                e
            };
            let u = solve(&v);
            for (q, &(i, _)) in structural.iter().enumerate() {
                tab[i * n + col] = u[q];
            }
            for (i, &bl) in self.basic.iter().enumerate() {
                if bl >= n {
                    let r = bl - n;
                    let direct = if label < n { a(r, label) } else { 0.0 };
                    let through: f64 = structural.iter().zip(&u).map(|(&(_, j), uq)| a(r, j) * uq).sum();
                    tab[i * n + col] = direct - through;
                }
            }
        }
        let xs = solve(&tight.iter().map(|&r| orig.b[r]).collect::<Vec<_>>());
        let mut rhs = vec![0.0; m];
        for (q, &(i, _)) in structural.iter().enumerate() {
            rhs[i] = xs[q];
        }
        for (i, &bl) in self.basic.iter().enumerate() {
            if bl >= n {
                let r = bl - n;
                rhs[i] = orig.b[r] - structural.iter().zip(&xs).map(|(&(_, j), x)| a(r, j) * x).sum::<f64>();
            }
        }
        if rhs.iter().any(|v| !v.is_finite()) || tab.iter().any(|v| !v.is_finite()) {
            return false;
        }
        let cost = |label: usize| if label < n { orig.c[label] } else { 0.0 };
        let obj: Vec<f64> = self
            .nonbasic
            .iter()
            .enumerate()
            .map(|(col, &label)| cost(label) - structural.iter().map(|&(i, j)| orig.c[j] * tab[i * n + col]).sum::<f64>())
            .collect();
        self.z = structural.iter().map(|&(i, j)| orig.c[j] * rhs[i]).sum();
        // Clamp roundoff so the origin-feasible invariant rhs ≥ 0 holds.
        self.rhs = rhs.into_iter().map(|r| r.max(0.0)).collect();
        self.tab = tab;
        self.obj = obj;
        true
    }

    /// Removes the lift. The objective becomes `z − Σ δᵣ yᵣ = bᵀy`, the dual
    /// objective of the current multipliers at the original right-hand side.
    /// The basic values become `B⁻¹b` when that point is feasible up to
    /// roundoff; otherwise the lifted optimum is kept. `∂(basic)/∂bᵣ` is the
    /// tableau column of slack `r` when it is nonbasic and the unit vector of
    /// its row when it is basic.
    fn drop_lift(&mut self, lift: &[f64]) {
        let n = self.n;
        let mut rhs = self.rhs.clone();
        for (col, &label) in self.nonbasic.iter().enumerate() {
            if label < n {
                continue;
            }
            let d = lift[label - n];
            self.z += self.obj[col] * d;
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= d * self.tab[i * n + col];
            }
        }
        for (i, &label) in self.basic.iter().enumerate() {
            if label >= n {
                rhs[i] -= lift[label - n];
            }
        }
        if rhs.iter().all(|&r| r >= -TOLERANCE) {
            self.rhs = rhs.into_iter().map(|r| r.max(0.0)).collect();
        }
    }

    fn ratio_test(&self, j: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let a = self.tab[i * self.n + j];
            if a <= TOLERANCE {
                continue;
            }
            let ratio = self.rhs[i] / a;
            best = match best {
                None => Some((i, ratio, a)),
                Some((r, br, ba)) => {
                    let better = if ratio < br - TOLERANCE {
                        true
                    } else if ratio <= br + TOLERANCE {
                        if bland {
                            self.basic[i] < self.basic[r]
                        } else {
                            a > ba
                        }
                    } else {
                        false
                    };
                    if better {
                        Some((i, ratio, a))
                    } else {
                        Some((r, br, ba))
                    }
                }
            };
        }
        best.map(|(i, _, _)| i)
    }

    fn pivot(&mut self, i: usize, j: usize) {
        let n = self.n;
        let p = self.tab[i * n + j];
        let inv = 1.0 / p;
        {
            let row = &mut self.tab[i * n..(i + 1) * n];
            row.iter_mut().for_each(|v| *v *= inv);
            row[j] = inv;
        }
        self.rhs[i] *= inv;
        let pivot_row: Vec<f64> = self.tab[i * n..(i + 1) * n].to_vec();
        let pivot_rhs = self.rhs[i];
        for r in 0..self.m {
            if r == i {
                continue;
            }
            let f = self.tab[r * n + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[r * n..(r + 1) * n];
            for (v, &q) in row.iter_mut().zip(&pivot_row) {
                *v -= f * q;
            }
            row[j] = -f * inv;
            // Clamp roundoff so the origin-feasible invariant rhs ≥ 0 holds.
            self.rhs[r] = (self.rhs[r] - f * pivot_rhs).max(0.0);
        }
        let o = self.obj[j];
        for (v, &q) in self.obj.iter_mut().zip(&pivot_row) {
            *v -= o * q;
        }
        self.obj[j] = -o * inv;
        self.z += o * pivot_rhs;
        std::mem::swap(&mut self.nonbasic[j], &mut self.basic[i]);
    }
}
