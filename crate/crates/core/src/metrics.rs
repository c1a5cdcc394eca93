//! Mutual-information estimates.
//!
//! The mismatched Gaussian receiver scores `q(x|y) ∝ exp(−|y − x|²/(2σ_G²))`
//! with uniform priors and `σ_G² = E|y − x|²` estimated from the data. The
//! Monte-Carlo average of `−log2 q(x_sent|y)` upper-bounds the conditional
//! entropy, so `m − Ĥ_q` lower-bounds the MI.

use alloc::vec::Vec;
use core::f64::consts::LN_2;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;

use crate::constellation::Constellation;
use crate::{Error, Result};

/// Lower clamp on `σ_G²` so a noiseless channel stays well defined.
pub const SIGMA_G2_FLOOR: f64 = 1e-12;
/// Lower clamp on posteriors before taking logarithms.
pub const POSTERIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiEstimate {
    pub bits_per_symbol: f64,
    pub num_symbols: usize,
    pub sigma_g2: f64,
}

/// `log2 M` for a uniform source.
pub fn entropy_uniform(m: usize) -> f64 {
    (m as f64).log2()
}

/// `E|y − x|²`.
pub fn estimate_sigma_g(sent: &[Complex64], received: &[Complex64]) -> Result<f64> {
    if sent.len() != received.len() {
        return Err(Error::LengthMismatch {
            left: sent.len(),
            right: received.len(),
        });
    }
    if sent.is_empty() {
        return Err(Error::InvalidParameter("empty sequence".into()));
    }
    Ok(sent.iter().zip(received).map(|(x, y)| (y - x).norm_sqr()).sum::<f64>() / sent.len() as f64)
}

/// Log-domain Gaussian metric `−|y − x_i|²/(2σ²)` for every point, plus its
/// log-sum-exp. Max-shifted so high SNR does not underflow.
fn log_metrics(y: Complex64, points: &[Complex64], sigma_g2: f64, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    let scale = -0.5 / sigma_g2;
    let mut max = f64::NEG_INFINITY;
    for p in points {
        let l = (y - p).norm_sqr() * scale;
        max = max.max(l);
        buf.push(l);
    }
    let s: f64 = buf.iter().map(|l| (l - max).exp()).sum();
    max + s.ln()
}

/// Posteriors `q(x_i|y)` of the auxiliary Gaussian channel.
pub fn gaussian_posteriors(y: Complex64, c: &Constellation, sigma_g2: f64) -> Result<Vec<f64>> {
    if !(sigma_g2 > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!("sigma_g2 must be positive, got {sigma_g2}")));
    }
    let mut buf = Vec::with_capacity(c.cardinality());
    let lse = log_metrics(y, c.points(), sigma_g2, &mut buf);
    Ok(buf.iter().map(|l| (l - lse).exp()).collect())
}

/// Mismatched-receiver MI estimate in bits per symbol, clamped to `[0, m]`.
pub fn mi_gaussian_receiver(sent_indices: &[usize], received: &[Complex64], c: &Constellation) -> Result<MiEstimate> {
    if sent_indices.len() != received.len() {
        return Err(Error::LengthMismatch {
            left: sent_indices.len(),
            right: received.len(),
        });
    }
    let m = c.cardinality();
    let points = c.points();
    let mut sent = Vec::with_capacity(sent_indices.len());
    for &i in sent_indices {
        sent.push(*points.get(i).ok_or(Error::IndexOutOfRange { index: i, m })?);
    }
    let sigma_g2 = estimate_sigma_g(&sent, received)?.max(SIGMA_G2_FLOOR);

    let mut buf = Vec::with_capacity(m);
    let mut h = 0.0;
    for (&i, &y) in sent_indices.iter().zip(received) {
        let lse = log_metrics(y, points, sigma_g2, &mut buf);
        h -= buf[i] - lse;
    }
    let h_bits = h / (received.len() as f64 * LN_2);
    Ok(MiEstimate {
        bits_per_symbol: (entropy_uniform(m) - h_bits).clamp(0.0, entropy_uniform(m)),
        num_symbols: received.len(),
        sigma_g2,
    })
}

/// Mean cross-entropy in nats of one-hot targets (given as class indices)
/// against posterior rows, posteriors clamped at [`POSTERIOR_FLOOR`].
pub fn cross_entropy(targets: &[usize], posteriors: &[Vec<f64>]) -> Result<f64> {
    if targets.len() != posteriors.len() {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: posteriors.len(),
        });
    }
    let mut total = 0.0;
    for (&t, row) in targets.iter().zip(posteriors) {
        let p = *row.get(t).ok_or(Error::IndexOutOfRange { index: t, m: row.len() })?;
        total -= p.max(POSTERIOR_FLOOR).ln();
    }
    Ok(total / targets.len() as f64)
}

/// Decoder-based achievable rate `m − CE/ln 2` in bits per symbol.
pub fn air_decoder(targets: &[usize], posteriors: &[Vec<f64>]) -> Result<f64> {
    let m = posteriors.first().map_or(1, |r| r.len());
    Ok(entropy_uniform(m) - cross_entropy(targets, posteriors)? / LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{awgn_variance, AwgnSpec};
    use crate::constellation::make_square_qam;
    use crate::rng::{complex_gaussian, seeded};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bpsk() -> Constellation {
        Constellation::new("bpsk", vec![c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_uniform(64), 6.0);
        assert_eq!(entropy_uniform(1), 0.0);
        assert_eq!(entropy_uniform(4), 2.0);
    }

    #[test]
    fn sigma_g_examples() {
        let x = vec![c(1.0, 0.0), c(0.0, -1.0), c(0.3, 0.3)];
        assert_eq!(estimate_sigma_g(&x, &x).unwrap(), 0.0);
        let shift = c(0.1, -0.2);
        let y: Vec<Complex64> = x.iter().map(|v| v + shift).collect();
        assert!((estimate_sigma_g(&x, &y).unwrap() - shift.norm_sqr()).abs() < 1e-15);
        assert!(estimate_sigma_g(&x, &y[..2]).is_err());

        let mut rng = seeded(21);
        let n = 1_000_000;
        let x: Vec<Complex64> = (0..n).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let y: Vec<Complex64> = x.iter().map(|v| v + complex_gaussian(&mut rng, 0.02)).collect();
        assert!((estimate_sigma_g(&x, &y).unwrap() - 0.02).abs() < 0.01 * 0.02);
    }

    #[test]
    fn posterior_examples() {
        let p = gaussian_posteriors(c(0.0, 0.0), &bpsk(), 0.3).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);

        let p = gaussian_posteriors(c(0.5, 0.0), &bpsk(), 0.5).unwrap();
        let ratio = (2.0f64).exp();
        assert!((p[0] / p[1] - ratio).abs() < 1e-12);
        assert!((p[0] - ratio / (1.0 + ratio)).abs() < 1e-15);

        let q = make_square_qam(16).unwrap();
        let p = gaussian_posteriors(q.points()[5], &q, 1e-9).unwrap();
        assert!((p[5] - 1.0).abs() < 1e-12);
        assert!(gaussian_posteriors(c(0.0, 0.0), &q, 0.0).is_err());
    }

    #[test]
    fn noiseless_mi_is_full_rate() {
        let q = make_square_qam(64).unwrap();
        let idx: Vec<usize> = (0..640).map(|i| (i * 13) % 64).collect();
        let rx: Vec<Complex64> = idx.iter().map(|&i| q.points()[i]).collect();
        let est = mi_gaussian_receiver(&idx, &rx, &q).unwrap();
        assert!((est.bits_per_symbol - 6.0).abs() < 1e-9);
        assert_eq!(est.sigma_g2, SIGMA_G2_FLOOR);
    }

    #[test]
    fn mi_vanishes_at_very_low_snr() {
        let q = make_square_qam(16).unwrap();
        let mut rng = seeded(22);
        let idx: Vec<usize> = (0..20_000).map(|_| rng.random_range(0..16)).collect();
        let rx: Vec<Complex64> = idx
            .iter()
            .map(|&i| q.points()[i] + complex_gaussian(&mut rng, awgn_variance(AwgnSpec { snr_db: -40.0 })))
            .collect();
        let est = mi_gaussian_receiver(&idx, &rx, &q).unwrap();
        assert!(est.bits_per_symbol < 0.01);
    }

    #[test]
    fn mi_rejects_bad_input() {
        let q = make_square_qam(4).unwrap();
        assert!(mi_gaussian_receiver(&[0, 1], &[c(0.0, 0.0)], &q).is_err());
        assert!(matches!(
            mi_gaussian_receiver(&[7], &[c(0.0, 0.0)], &q),
            Err(Error::IndexOutOfRange { index: 7, m: 4 })
        ));
    }

    #[test]
    fn air_examples() {
        let perfect = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]];
        assert!((air_decoder(&[0, 2], &perfect).unwrap() - 2.0).abs() < 1e-15);
        let uniform = vec![vec![0.25; 4]; 2];
        assert!(air_decoder(&[0, 2], &uniform).unwrap().abs() < 1e-15);
        let mut half = vec![0.5 / 63.0; 64];
        half[3] = 0.5;
        assert!((air_decoder(&[3], &[half]).unwrap() - 5.0).abs() < 1e-12);
        let uniform64 = vec![vec![1.0 / 64.0; 64]];
        assert!((cross_entropy(&[0], &uniform64).unwrap() - 64f64.ln()).abs() < 1e-12);
    }

    fn awgn_mi(q: &Constellation, snr_db: f64, n: usize, seed: u64) -> f64 {
        let mut rng = seeded(seed);
        let s2 = awgn_variance(AwgnSpec { snr_db });
        let m = q.cardinality();
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
        let rx: Vec<Complex64> = idx.iter().map(|&i| q.points()[i] + complex_gaussian(&mut rng, s2)).collect();
        mi_gaussian_receiver(&idx, &rx, q).unwrap().bits_per_symbol
    }

    #[test]
    fn mi_non_increasing_in_noise() {
        let q = make_square_qam(16).unwrap();
        let grid: Vec<f64> = [20.0, 16.0, 12.0, 8.0, 4.0].iter().map(|&s| awgn_mi(&q, s, 50_000, 5)).collect();
        assert!(grid.windows(2).all(|w| w[1] <= w[0] + 0.02), "{grid:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn rotation_invariance(alpha in 0.0f64..6.3, seed in any::<u64>()) {
            let q = make_square_qam(16).unwrap();
            let mut rng = seeded(seed);
            let idx: Vec<usize> = (0..500).map(|_| rng.random_range(0..16)).collect();
            let rx: Vec<Complex64> = idx.iter().map(|&i| q.points()[i] + complex_gaussian(&mut rng, 0.05)).collect();
            let r = Complex64::from_polar(1.0, alpha);
            let rx_rot: Vec<Complex64> = rx.iter().map(|y| y * r).collect();
            let a = mi_gaussian_receiver(&idx, &rx, &q).unwrap();
            let b = mi_gaussian_receiver(&idx, &rx_rot, &q.rotated(alpha)).unwrap();
            prop_assert!((a.bits_per_symbol - b.bits_per_symbol).abs() < 1e-9);
        }

        #[test]
        fn mi_within_bounds(snr in -10.0f64..40.0, seed in any::<u64>()) {
            let q = make_square_qam(64).unwrap();
            let mi = awgn_mi(&q, snr, 400, seed);
            prop_assert!((0.0..=6.0).contains(&mi));
        }

        #[test]
        fn posteriors_sum_to_one(re in -3.0f64..3.0, im in -3.0f64..3.0, s2 in 1e-4f64..10.0) {
            let q = make_square_qam(64).unwrap();
            let p = gaussian_posteriors(c(re, im), &q, s2).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
