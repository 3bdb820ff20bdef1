//! Rate fits for convergence studies.

use crate::error::{Error, Result};

/// Values at or below this are treated as the roundoff floor and left out of
/// rate fits.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::invalid("a slope fit needs at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("abscissae must not all coincide"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Slope fit after dropping points at the roundoff floor.
///
/// A ladder whose values all sit at the floor has converged to machine
/// precision and yields `None`; so does a ladder with only one point above it.
pub fn loglog_slope_above_floor(xs: &[f64], ys: &[f64], floor: f64) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    let (fx, fy): (Vec<f64>, Vec<f64>) = xs.iter().zip(ys).filter(|(_, y)| **y > floor).map(|(x, y)| (*x, *y)).unzip();
    if fx.len() < 2 {
        return Ok(None);
    }
    loglog_slope(&fx, &fy).map(Some)
}

/// Start of the asymptotic tail of a signed error sequence ordered from the
/// largest step to the smallest: the index just after its last sign change.
///
/// Once the leading error term dominates, the sign is fixed, so a crossing
/// marks the pre-asymptotic range where two terms cancel. Falls back to `0`
/// when fewer than `min_len` values would remain.
pub fn asymptotic_tail(signed: &[f64], min_len: usize) -> usize {
    let start = (1..signed.len()).rev().find(|&i| signed[i].signum() != signed[i - 1].signum()).unwrap_or(0);
    if signed.len() - start < min_len {
        0
    } else {
        start
    }
}

/// Number of increases along a sequence that should be decreasing.
pub fn reversals(ys: &[f64]) -> usize {
    ys.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Observed order `log₂(e_k / e_{k+1})` for successive halvings.
pub fn halving_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
