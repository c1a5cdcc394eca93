//! Blind phase search carrier recovery.
//!
//! Each received symbol is rotated by `N_s` test phases `θ_j = 2πj/N_s`, the
//! squared distance to the nearest reference point is summed over a window of
//! `2W + 1` symbols, and the test phase with the smallest sum is taken as the
//! phase estimate. Only interior symbols `W ≤ k < n − W` have a full window;
//! the `W` symbols at each end are dropped.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::constellation::{Constellation, Slicer};
use crate::{Error, Result};

/// Test-phase count `N_s` and half window `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BpsConfig {
    pub num_test_phases: usize,
    pub half_window: usize,
}

impl Default for BpsConfig {
    fn default() -> Self {
        BpsConfig {
            num_test_phases: 60,
            half_window: 64,
        }
    }
}

impl BpsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_test_phases < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "need at least 2 test phases, got {}",
                self.num_test_phases
            )));
        }
        Ok(())
    }

    pub fn test_phase(&self, j: usize) -> f64 {
        j as f64 / self.num_test_phases as f64 * 2.0 * PI
    }
}

/// Output of [`run_bps`]: interior symbols after derotation and their phase
/// estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct BpsOutput {
    pub compensated: Vec<Complex64>,
    pub phase_estimates: Vec<f64>,
    /// Winning test-phase index per interior symbol.
    pub phase_indices: Vec<usize>,
}

// Window sums are recomputed from scratch this often so the running sum
// cannot drift away from the direct sum.
const RESUM_INTERVAL: usize = 1024;

pub fn run_bps(received: &[Complex64], reference: &Constellation, cfg: &BpsConfig) -> Result<BpsOutput> {
    run_bps_with_slicer(received, &Slicer::new(reference.points()), cfg)
}

/// [`run_bps`] with a prebuilt slicer, for callers that process many blocks
/// against the same reference.
pub fn run_bps_with_slicer(received: &[Complex64], slicer: &Slicer, cfg: &BpsConfig) -> Result<BpsOutput> {
    cfg.validate()?;
    if slicer.points().is_empty() {
        return Err(Error::EmptyReference);
    }
    let n = received.len();
    let w = cfg.half_window;
    if n <= 2 * w {
        return Err(Error::SequenceTooShort { len: n, half_window: w });
    }
    let ns = cfg.num_test_phases;
    let rotors: Vec<Complex64> = (0..ns).map(|j| Complex64::from_polar(1.0, -cfg.test_phase(j))).collect();

    // d2[k * ns + j] = |z_k e^{-iθ_j} - nearest|^2
    let mut d2 = vec![0.0f64; n * ns];
    for (k, &z) in received.iter().enumerate() {
        let row = &mut d2[k * ns..(k + 1) * ns];
        for (slot, rot) in row.iter_mut().zip(&rotors) {
            *slot = slicer.nearest(z * rot).1;
        }
    }

    let interior = n - 2 * w;
    let mut sums = vec![0.0f64; ns];
    let mut out = BpsOutput {
        compensated: Vec::with_capacity(interior),
        phase_estimates: Vec::with_capacity(interior),
        phase_indices: Vec::with_capacity(interior),
    };
    for (step, k) in (w..n - w).enumerate() {
        if step % RESUM_INTERVAL == 0 {
            sums.iter_mut().for_each(|s| *s = 0.0);
            for i in k - w..=k + w {
                for (s, d) in sums.iter_mut().zip(&d2[i * ns..(i + 1) * ns]) {
                    *s += d;
                }
            }
        } else {
            let (add, sub) = (k + w, k - w - 1);
            for j in 0..ns {
                sums[j] += d2[add * ns + j] - d2[sub * ns + j];
            }
        }
        let best = argmin_first(&sums);
        out.phase_indices.push(best);
        out.phase_estimates.push(cfg.test_phase(best));
        out.compensated.push(received[k] * rotors[best]);
    }
    Ok(out)
}

/// Smallest index among the minima.
fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = j;
        }
    }
    best
}

fn wrap_to_pi(x: f64) -> f64 {
    // (−π, π]
    let y = x - 2.0 * PI * ((x + PI) / (2.0 * PI)).floor();
    if y <= -PI {
        y + 2.0 * PI
    } else if y > PI {
        y - 2.0 * PI
    } else if y == -PI {
        PI
    } else {
        y
    }
}

/// Elementwise `φ̂_k − φ_k` wrapped to `(−π, π]`.
pub fn residual_phase_error(phase_estimates: &[f64], true_phases: &[f64]) -> Result<Vec<f64>> {
    if phase_estimates.len() != true_phases.len() {
        return Err(Error::LengthMismatch {
            left: phase_estimates.len(),
            right: true_phases.len(),
        });
    }
    Ok(phase_estimates
        .iter()
        .zip(true_phases)
        .map(|(e, t)| wrap_to_pi(e - t))
        .collect())
}

/// Removes jumps of the estimate by multiples of the constellation's
/// symmetry angle `2π/order`: each estimate is shifted by the multiple that
/// brings it closest to its predecessor.
pub fn unwrap_estimates(phase_estimates: &[f64], symmetry_order: usize) -> Vec<f64> {
    let step = 2.0 * PI / symmetry_order.max(1) as f64;
    let mut out = Vec::with_capacity(phase_estimates.len());
    let mut prev: Option<f64> = None;
    for &e in phase_estimates {
        let v = match prev {
            None => e,
            Some(p) => e + ((p - e) / step).round() * step,
        };
        out.push(v);
        prev = Some(v);
    }
    out
}

/// `z_k·e^{−iφ̂_k}` for matched sequences.
pub fn derotate(symbols: &[Complex64], phases: &[f64]) -> Result<Vec<Complex64>> {
    if symbols.len() != phases.len() {
        return Err(Error::LengthMismatch {
            left: symbols.len(),
            right: phases.len(),
        });
    }
    Ok(symbols
        .iter()
        .zip(phases)
        .map(|(z, &p)| z * Complex64::from_polar(1.0, -p))
        .collect())
}
