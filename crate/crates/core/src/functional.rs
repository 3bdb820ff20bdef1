//! First-order point functionals `ψ ↦ Σᵢ mᵢ ψ(xᵢ) + pᵢ·∇ψ(xᵢ)` on `C^{1+α}`.
//!
//! Discrete measures are the special case with every dipole `pᵢ = 0`; the
//! `h`-derivative of a transported measure and the derivative of `x ↦ δₓ`
//! need the dipole part.

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::measures::{DiscreteMeasure, MERGE_TOLERANCE};

#[derive(Debug, Clone, PartialEq)]
pub struct PointFunctional {
    dim: usize,
    coords: Vec<f64>,
    masses: Vec<f64>,
    dipoles: Vec<f64>,
}

impl PointFunctional {
    /// `coords` and `dipoles` hold `dim` entries per atom.
    pub fn new(dim: usize, coords: Vec<f64>, masses: Vec<f64>, dipoles: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("functional dimension must be positive"));
        }
        let n = masses.len();
        if coords.len() != n * dim {
            return Err(Error::DimensionMismatch { expected: n * dim, found: coords.len() });
        }
        if dipoles.len() != n * dim {
            return Err(Error::DimensionMismatch { expected: n * dim, found: dipoles.len() });
        }
        if coords.iter().chain(&masses).chain(&dipoles).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point functional".into()));
        }
        Ok(PointFunctional { dim, coords, masses, dipoles })
    }

    pub fn zero(dim: usize) -> Self {
        PointFunctional { dim, coords: Vec::new(), masses: Vec::new(), dipoles: Vec::new() }
    }

    pub fn from_measure(mu: &DiscreteMeasure) -> Self {
        PointFunctional {
            dim: mu.dim(),
            coords: mu.coords().to_vec(),
            masses: mu.weights().to_vec(),
            dipoles: vec![0.0; mu.coords().len()],
        }
    }

    /// A single dipole `ψ ↦ p·∇ψ(x)`.
    pub fn dipole(x: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(x.len(), x.to_vec(), vec![0.0], p.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn dipole_at(&self, i: usize) -> &[f64] {
        &self.dipoles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn has_dipoles(&self) -> bool {
        self.dipoles.iter().any(|&p| p != 0.0)
    }

    /// `aF + bG`, canonicalized.
    pub fn combine(a: f64, f: &PointFunctional, b: f64, g: &PointFunctional) -> Result<PointFunctional> {
        if f.dim != g.dim {
            return Err(Error::DimensionMismatch { expected: f.dim, found: g.dim });
        }
        let mut coords = f.coords.clone();
        coords.extend_from_slice(&g.coords);
        let masses = f.masses.iter().map(|m| a * m).chain(g.masses.iter().map(|m| b * m)).collect();
        let dipoles = f.dipoles.iter().map(|p| a * p).chain(g.dipoles.iter().map(|p| b * p)).collect();
        Ok(PointFunctional::new(f.dim, coords, masses, dipoles)?.canonicalize())
    }

    /// Merges atoms within [`MERGE_TOLERANCE`], drops atoms whose mass and
    /// dipole both vanish, and sorts the support lexicographically.
    pub fn canonicalize(&self) -> PointFunctional {
        let d = self.dim;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&i, &j| {
            self.point(i)
                .iter()
                .zip(self.point(j))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut out = PointFunctional::zero(d);
        for i in order {
            let p = self.point(i);
            let last = out.len().checked_sub(1);
            let merge = last.filter(|&k| {
                out.point(k).iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= MERGE_TOLERANCE
            });
            match merge {
                Some(k) => {
                    out.masses[k] += self.masses[i];
                    for (q, r) in out.dipoles[k * d..(k + 1) * d].iter_mut().zip(self.dipole_at(i)) {
                        *q += r;
                    }
                }
                None => {
                    out.coords.extend_from_slice(p);
                    out.masses.push(self.masses[i]);
                    out.dipoles.extend_from_slice(self.dipole_at(i));
                }
            }
        }
        let keep: Vec<usize> =
            (0..out.len()).filter(|&k| out.masses[k] != 0.0 || out.dipole_at(k).iter().any(|&v| v != 0.0)).collect();
        PointFunctional {
            dim: d,
            coords: keep.iter().flat_map(|&k| out.point(k).to_vec()).collect(),
            masses: keep.iter().map(|&k| out.masses[k]).collect(),
            dipoles: keep.iter().flat_map(|&k| out.dipole_at(k).to_vec()).collect(),
        }
    }

    /// `⟨ψ, F⟩` for a smooth field evaluated at time zero.
    pub fn pair(&self, psi: &ScalarField) -> f64 {
        (0..self.len())
            .map(|i| {
                let (v, g) = psi.eval(0.0, self.point(i));
                self.masses[i] * v + g.iter().zip(self.dipole_at(i)).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    /// `Σ|mᵢ| + |pᵢ|`, which bounds the `(C^{1+α})*` norm from above.
    pub fn coefficient_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| self.masses[i].abs() + self.dipole_at(i).iter().map(|p| p * p).sum::<f64>().sqrt())
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.canonicalize().is_empty()
    }
}
