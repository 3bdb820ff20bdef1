//! Signed discrete Radon measures `Σ wᵢ δ_{xᵢ}` on `ℝ^d`.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::Deserialize;

use crate::error::{Error, Result};

/// Particles closer than this (Euclidean) are merged by canonicalization.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// A finite signed combination of Dirac masses.
///
/// Points are stored flat (`dim` coordinates per particle). A measure built
/// with [`DiscreteMeasure::new`] keeps its particles as given; every operation
/// that produces a new measure returns it in canonical form: coincident points
/// merged, zero weights dropped, points sorted lexicographically.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Builds a measure from row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::invalid(format!(
                "{} coordinates do not describe {} points of dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("particle coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("particle weight".into()));
        }
        Ok(DiscreteMeasure { dim, coords, weights })
    }

    /// One-dimensional convenience constructor.
    pub fn from_1d(points: &[f64], weights: &[f64]) -> Result<Self> {
        Self::from_flat(1, points.to_vec(), weights.to_vec())
    }

    pub fn zero(dim: usize) -> Self {
        DiscreteMeasure { dim, coords: Vec::new(), weights: Vec::new() }
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_zero(&self) -> bool {
        self.canonicalize().is_empty()
    }

    /// Merges points within [`MERGE_TOLERANCE`] by summing their weights,
    /// drops zero-weight particles and sorts the support lexicographically.
    pub fn canonicalize(&self) -> DiscreteMeasure {
        let d = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| lex_cmp(self.point(i), self.point(j)));

        let mut reps: Vec<usize> = Vec::new();
        let mut merged: Vec<f64> = Vec::new();
        for &i in &order {
            let p = self.point(i);
            let mut target = None;
            for (slot, &r) in reps.iter().enumerate().rev() {
                let q = self.point(r);
                if q[0] < p[0] - MERGE_TOLERANCE {
                    break;
                }
                if euclid(p, q) <= MERGE_TOLERANCE {
                    target = Some(slot);
                    break;
                }
            }
            match target {
                Some(slot) => merged[slot] += self.weights[i],
                None => {
                    reps.push(i);
                    merged.push(self.weights[i]);
                }
            }
        }

        let mut coords = Vec::with_capacity(reps.len() * d);
        let mut weights = Vec::with_capacity(reps.len());
        for (&r, &w) in reps.iter().zip(&merged) {
            if w != 0.0 {
                coords.extend_from_slice(self.point(r));
                weights.push(w);
            }
        }
        DiscreteMeasure { dim: d, coords, weights }
    }

    /// `Σ wᵢ` (signed).
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ |wᵢ|` after canonicalization.
    pub fn total_variation(&self) -> f64 {
        self.canonicalize().weights.iter().map(|w| w.abs()).sum()
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.points().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn scale(&self, c: f64) -> DiscreteMeasure {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= c);
        out.canonicalize()
    }

    pub fn min_max_1d(&self) -> Option<(f64, f64)> {
        if self.dim != 1 || self.is_empty() {
            return None;
        }
        let lo = self.coords.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `aμ + bν`, canonicalized.
pub fn linear_combine(a: f64, mu: &DiscreteMeasure, b: f64, nu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch { expected: mu.dim, found: nu.dim });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("linear combination coefficient".into()));
    }
    let mut coords = mu.coords.clone();
    coords.extend_from_slice(&nu.coords);
    let weights = mu
        .weights
        .iter()
        .map(|w| a * w)
        .chain(nu.weights.iter().map(|w| b * w))
        .collect();
    Ok(DiscreteMeasure { dim: mu.dim, coords, weights }.canonicalize())
}

/// `r#μ`: relocates every atom through `r`, keeping its weight.
pub fn push_forward<F>(mu: &DiscreteMeasure, r: F) -> Result<DiscreteMeasure>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut coords = Vec::with_capacity(mu.coords.len());
    let mut out_dim = None;
    for (i, p) in mu.points().enumerate() {
        let q = r(p);
        if q.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("point map output at particle {i}")));
        }
        match out_dim {
            None => out_dim = Some(q.len()),
            Some(d) if d != q.len() => return Err(Error::DimensionMismatch { expected: d, found: q.len() }),
            _ => {}
        }
        coords.extend(q);
    }
    let dim = out_dim.unwrap_or(mu.dim);
    DiscreteMeasure::from_flat(dim, coords, mu.weights.clone()).map(|m| m.canonicalize())
}

/// Total variation of `μ − ν`.
pub fn tv_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    Ok(linear_combine(1.0, mu, -1.0, nu)?.total_variation())
}

/// Lattice spacing used by [`dirac_approximate`]: `ε / (2‖μ‖_TV)`.
pub fn lattice_spacing(mu: &DiscreteMeasure, eps: f64) -> f64 {
    eps / (2.0 * mu.total_variation())
}

/// Snaps every atom to the nearest node of the lattice `(ε / 2‖μ‖_TV)·ℤ^d`.
///
/// Each atom moves by at most half a lattice diagonal per coordinate, so the
/// transport cost `Σ|wᵢ||xᵢ − qᵢ|`, which dominates the `(C^{1+α})*` distance,
/// stays below `ε/4·√d`.
pub fn dirac_approximate(mu: &DiscreteMeasure, eps: f64, alpha: f64) -> Result<DiscreteMeasure> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let canon = mu.canonicalize();
    if canon.is_empty() {
        return Err(Error::invalid("cannot approximate the zero measure"));
    }
    let spacing = lattice_spacing(&canon, eps);
    let coords = canon.coords.iter().map(|&x| snap(x, spacing)).collect();
    Ok(DiscreteMeasure { dim: canon.dim, coords, weights: canon.weights }.canonicalize())
}

fn snap(x: f64, spacing: f64) -> f64 {
    (x / spacing).round() * spacing
}

/// `Σ|wᵢ||xᵢ − qᵢ|` for the snapping performed by [`dirac_approximate`]; an
/// upper bound of every `C^{1+α}` dual norm of the approximation error since
/// test functions in the unit ball are 1-Lipschitz.
pub fn snapping_cost(mu: &DiscreteMeasure, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {eps}")));
    }
    let canon = mu.canonicalize();
    if canon.is_empty() {
        return Err(Error::invalid("cannot approximate the zero measure"));
    }
    let spacing = lattice_spacing(&canon, eps);
    Ok(canon
        .points()
        .zip(&canon.weights)
        .map(|(p, w)| w.abs() * p.iter().map(|&x| (x - snap(x, spacing)).powi(2)).sum::<f64>().sqrt())
        .sum())
}

/// Formats a float with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes one `x_1,...,x_d,weight` row per particle.
pub fn write_csv<W: Write>(mu: &DiscreteMeasure, out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (p, w) in mu.points().zip(&mu.weights) {
        let mut row: Vec<String> = p.iter().map(|&c| fmt17(c)).collect();
        row.push(fmt17(*w));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut dim = None;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("row {line}: {e}")))?;
        if vals.len() < 2 {
            return Err(Error::invalid(format!("row {line}: need at least one coordinate and a weight")));
        }
        let d = vals.len() - 1;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => return Err(Error::DimensionMismatch { expected, found: d }),
            _ => {}
        }
        coords.extend_from_slice(&vals[..d]);
        weights.push(vals[d]);
    }
    DiscreteMeasure::from_flat(dim.unwrap_or(1), coords, weights)
}

/// JSON array of `{"point": [...], "weight": w}` objects, 17 significant digits.
pub fn to_json(mu: &DiscreteMeasure) -> String {
    let items: Vec<String> = mu
        .points()
        .zip(&mu.weights)
        .map(|(p, w)| {
            let pts: Vec<String> = p.iter().map(|&c| fmt17(c)).collect();
            format!("{{\"point\":[{}],\"weight\":{}}}", pts.join(","), fmt17(*w))
        })
        .collect();
    format!("[{}]", items.join(","))
}

#[derive(Deserialize)]
struct JsonAtom {
    point: Vec<f64>,
    weight: f64,
}

pub fn from_json(text: &str) -> Result<DiscreteMeasure> {
    let atoms: Vec<JsonAtom> = serde_json::from_str(text)?;
    let dim = atoms.first().map_or(1, |a| a.point.len());
    let (points, weights) = atoms.into_iter().map(|a| (a.point, a.weight)).unzip();
    DiscreteMeasure::new(dim, points, weights)
}
