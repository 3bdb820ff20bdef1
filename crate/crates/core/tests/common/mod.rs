//! Strategies shared by the integration suites.

#![allow(dead_code)]

use proptest::prelude::*;
use transdiff::fields::{ScalarKind, VectorKind};
use transdiff::{DiscreteMeasure, ScalarField, TransportSystem, VectorField};

/// Autonomous catalog velocities with moderate derivatives.
pub fn velocity(dim: usize) -> impl Strategy<Value = VectorField> {
    let v = move |lo: f64, hi: f64| prop::collection::vec(lo..hi, dim);
    prop_oneof![
        v(-1.5, 1.5).prop_map(VectorField::constant),
        (prop::collection::vec(v(-1.0, 1.0), dim), v(-0.5, 0.5)).prop_map(|(m, s)| VectorField::affine(m, s)),
        (v(-1.5, 1.5), v(-1.0, 1.0), 0.5f64..1.5).prop_map(|(amplitude, center, width)| VectorField::new(
            VectorKind::GaussianBump { amplitude, center, width }
        )),
        (v(-1.0, 1.0), v(-2.0, 2.0), -3.0f64..3.0).prop_map(|(amplitude, frequency, phase)| VectorField::new(
            VectorKind::Sinusoidal { amplitude, frequency, phase }
        )),
    ]
}

/// Autonomous catalog growth rates.
pub fn growth(dim: usize) -> impl Strategy<Value = ScalarField> {
    prop_oneof![
        (-1.0f64..1.0).prop_map(ScalarField::constant),
        (prop::collection::vec(-0.5f64..0.5, dim), -0.5f64..0.5)
            .prop_map(|(gradient, shift)| ScalarField::new(ScalarKind::Affine { gradient, shift })),
        (-1.0f64..1.0, prop::collection::vec(-1.0f64..1.0, dim), 0.5f64..1.5)
            .prop_map(|(a, c, w)| ScalarField::gaussian(a, c, w)),
        (-1.0f64..1.0, prop::collection::vec(-2.0f64..2.0, dim), -3.0f64..3.0)
            .prop_map(|(a, k, p)| ScalarField::sinusoidal(a, k, p)),
    ]
}

pub fn system(dim: usize) -> impl Strategy<Value = TransportSystem> {
    (velocity(dim), velocity(dim), growth(dim)).prop_map(|(b, b1, w)| TransportSystem::new(b, b1, w).unwrap())
}

/// A signed one-dimensional measure with up to `max_atoms` atoms in `[lo, hi]`.
pub fn measure_1d(lo: f64, hi: f64, max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((lo..hi, -1.0f64..1.0), 1..=max_atoms).prop_map(|atoms| {
        let (x, w): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        DiscreteMeasure::from_1d(&x, &w).unwrap()
    })
}
