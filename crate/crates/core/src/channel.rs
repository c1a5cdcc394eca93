//! Noise-variance models and the two channels: the differentiable training
//! surrogate `y = (x + n)·e^{iφ}` and the test channel `z = x·e^{iφ_k} + n`
//! with a Wiener phase walk.
//!
//! Variances are total complex variances (`E|n|^2`); each real component
//! carries half of it.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::constellation::ConstellationMoments;
use crate::rng::{complex_gaussian, gaussian};
use crate::{Error, Result};

/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    pub snr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpnSpec {
    pub sigma2_rpn: f64,
}

/// Laser phase noise: combined TX+RX linewidth and the symbol rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WienerSpec {
    pub linewidth_hz: f64,
    pub symbol_rate_hz: f64,
}

impl WienerSpec {
    /// Per-symbol increment variance `2π·Δν/R_s` in rad².
    pub fn increment_variance(&self) -> f64 {
        2.0 * PI * self.linewidth_hz / self.symbol_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth_hz >= 0.0) || !(self.symbol_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "linewidth {} Hz / symbol rate {} Hz",
                self.linewidth_hz, self.symbol_rate_hz
            )));
        }
        Ok(())
    }
}

/// Fiber link constants plus the two uncertain parameters, noise figure and
/// launch power. SI units except where the field name says otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub symbol_rate_hz: f64,
    pub carrier_freq_hz: f64,
    pub num_channels: u32,
    pub channel_spacing_hz: f64,
    pub num_polarizations: u32,
    pub num_spans: u32,
    pub span_length_km: f64,
    pub attenuation_db_per_km: f64,
    pub amp_gain_db: f64,
    pub nonlinear_coeff_per_w_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub noise_figure_db: f64,
    pub launch_power_dbm: f64,
}

impl LinkParams {
    /// The 10 × 100 km, 5-channel, 32 GBd dual-polarization reference link.
    pub fn reference(noise_figure_db: f64, launch_power_dbm: f64) -> Self {
        LinkParams {
            symbol_rate_hz: 32e9,
            carrier_freq_hz: 193.41e12,
            num_channels: 5,
            channel_spacing_hz: 50e9,
            num_polarizations: 2,
            num_spans: 10,
            span_length_km: 100.0,
            attenuation_db_per_km: 0.2,
            amp_gain_db: 20.0,
            nonlinear_coeff_per_w_km: 1.3,
            dispersion_ps_per_nm_km: 16.464,
            noise_figure_db,
            launch_power_dbm,
        }
    }

    pub fn with_operating_point(mut self, noise_figure_db: f64, launch_power_dbm: f64) -> Self {
        self.noise_figure_db = noise_figure_db;
        self.launch_power_dbm = launch_power_dbm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("symbol_rate_hz", self.symbol_rate_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("channel_spacing_hz", self.channel_spacing_hz),
            ("span_length_km", self.span_length_km),
            ("attenuation_db_per_km", self.attenuation_db_per_km),
            ("amp_gain_db", self.amp_gain_db),
            ("nonlinear_coeff_per_w_km", self.nonlinear_coeff_per_w_km),
            ("dispersion_ps_per_nm_km", self.dispersion_ps_per_nm_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.num_channels == 0 || self.num_polarizations == 0 || self.num_spans == 0 {
            return Err(Error::InvalidParameter("channel, polarization and span counts must be positive".into()));
        }
        let span_loss = self.span_length_km * self.attenuation_db_per_km;
        if (self.amp_gain_db - span_loss).abs() > 1e-9 * span_loss.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "amp_gain_db {} must equal span loss {}",
                self.amp_gain_db, span_loss
            )));
        }
        if !self.noise_figure_db.is_finite() || !self.launch_power_dbm.is_finite() {
            return Err(Error::InvalidParameter("noise figure and launch power must be finite".into()));
        }
        Ok(())
    }

    pub fn launch_power_w(&self) -> f64 {
        dbm_to_watt(self.launch_power_dbm)
    }

    /// Average signal power carried by one polarization.
    pub fn signal_power_per_polarization_w(&self) -> f64 {
        self.launch_power_w() / self.num_polarizations as f64
    }
}

/// NLIN variance coefficients in W⁻²: `σ²_NLIN = P³·(κ0 + κ1·μ4 + κ2·μ6)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlinCoefficients {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl NlinCoefficients {
    pub const ZERO: NlinCoefficients = NlinCoefficients {
        kappa0: 0.0,
        kappa1: 0.0,
        kappa2: 0.0,
    };

    /// `κ0 > 0` and a nonnegative bracket over `μ4 ∈ [1, 4]`, `μ6 ∈ [μ4², 4·μ4²]`.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa0 must be positive, got {}", self.kappa0)));
        }
        for mu4 in [1.0, 4.0] {
            for mu6 in [mu4 * mu4, 4.0 * mu4 * mu4] {
                let b = self.bracket(mu4, mu6);
                if b < 0.0 {
                    return Err(Error::InvalidCoefficients(b));
                }
            }
        }
        Ok(())
    }

    fn bracket(&self, mu4: f64, mu6: f64) -> f64 {
        self.kappa0 + self.kappa1 * mu4 + self.kappa2 * mu6
    }
}

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise variance of a unit-power signal at the given SNR.
pub fn awgn_variance(spec: AwgnSpec) -> f64 {
    10f64.powf(-spec.snr_db / 10.0)
}

/// Per-polarization ASE power of the amplifier chain in W,
/// `N_sp·(F/2)·(G − 1)·h·ν·R_s`.
pub fn ase_variance(link: &LinkParams) -> f64 {
    let f = db_to_linear(link.noise_figure_db);
    let g = db_to_linear(link.amp_gain_db);
    link.num_spans as f64 * (f / 2.0) * (g - 1.0) * PLANCK * link.carrier_freq_hz * link.symbol_rate_hz
}

pub fn nlin_variance(coeffs: &NlinCoefficients, launch_power_w: f64, moments: ConstellationMoments) -> Result<f64> {
    if !(launch_power_w >= 0.0) {
        return Err(Error::InvalidParameter(format!("launch power {launch_power_w} W")));
    }
    let v = launch_power_w.powi(3) * coeffs.bracket(moments.mu4, moments.mu6);
    if v < 0.0 {
        return Err(Error::InvalidCoefficients(v));
    }
    Ok(v)
}

/// `σ²_ASE(F_n) + σ²_NLIN(P_in, μ4, μ6)` in W.
pub fn total_noise_variance(link: &LinkParams, coeffs: &NlinCoefficients, moments: ConstellationMoments) -> Result<f64> {
    Ok(ase_variance(link) + nlin_variance(coeffs, link.launch_power_w(), moments)?)
}

/// Noise variance relative to the per-polarization signal power, i.e. the
/// variance seen by a unit-power constellation.
pub fn nlin_normalized_variance(link: &LinkParams, coeffs: &NlinCoefficients, moments: ConstellationMoments) -> Result<f64> {
    Ok(total_noise_variance(link, coeffs, moments)? / link.signal_power_per_polarization_w())
}

/// Moment-affine decomposition of a noise variance, in units of a
/// unit-power constellation: `σ² = base + per_mu4·μ4 + per_mu6·μ6`.
///
/// The training loop needs this form to differentiate the NLIN variance with
/// respect to the constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVarianceModel {
    pub base: f64,
    pub per_mu4: f64,
    pub per_mu6: f64,
}

impl NoiseVarianceModel {
    pub fn constant(variance: f64) -> Self {
        NoiseVarianceModel {
            base: variance,
            per_mu4: 0.0,
            per_mu6: 0.0,
        }
    }

    pub fn nlin(link: &LinkParams, coeffs: &NlinCoefficients) -> Self {
        let s = link.signal_power_per_polarization_w();
        let p3 = link.launch_power_w().powi(3);
        NoiseVarianceModel {
            base: (ase_variance(link) + p3 * coeffs.kappa0) / s,
            per_mu4: p3 * coeffs.kappa1 / s,
            per_mu6: p3 * coeffs.kappa2 / s,
        }
    }

    pub fn depends_on_moments(&self) -> bool {
        self.per_mu4 != 0.0 || self.per_mu6 != 0.0
    }

    pub fn variance(&self, moments: ConstellationMoments) -> f64 {
        self.base + self.per_mu4 * moments.mu4 + self.per_mu6 * moments.mu6
    }
}

/// One use of the training surrogate: `(x + n)·e^{iφ}` with
/// `n ~ CN(0, sigma_n2)` and `φ ~ N(0, sigma2_rpn)`.
pub fn training_channel_apply<R: Rng + ?Sized>(x: Complex64, sigma_n2: f64, sigma2_rpn: f64, rng: &mut R) -> Complex64 {
    let n = complex_gaussian(rng, sigma_n2);
    let phi = gaussian(rng, sigma2_rpn.sqrt());
    (x + n) * Complex64::from_polar(1.0, phi)
}

/// Wiener phase walk: `φ_0 ~ U[0, 2π)`, then `φ_k = φ_{k−1} + N(0, 2πΔν/R_s)`.
pub fn wiener_phase_walk<R: Rng + ?Sized>(n: usize, spec: &WienerSpec, rng: &mut R) -> Vec<f64> {
    let std = spec.increment_variance().sqrt();
    let mut phase = 2.0 * PI * rng.random::<f64>();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(phase);
    for _ in 1..n {
        phase += gaussian(rng, std);
        out.push(phase);
    }
    out
}

/// Test channel `z_k = x_k·e^{iφ_k} + n_k`.
pub fn test_channel_apply<R: Rng + ?Sized>(x: &[Complex64], phases: &[f64], sigma_n2: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    if x.len() != phases.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: phases.len(),
        });
    }
    Ok(x.iter()
        .zip(phases)
        .map(|(&s, &phi)| s * Complex64::from_polar(1.0, phi) + complex_gaussian(rng, sigma_n2))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::make_square_qam;
    use crate::rng::seeded;
    use alloc::vec;

    const QPSK: ConstellationMoments = ConstellationMoments { mu4: 1.0, mu6: 1.0 };

    #[test]
    fn awgn_examples() {
        assert_eq!(awgn_variance(AwgnSpec { snr_db: 0.0 }), 1.0);
        assert!((awgn_variance(AwgnSpec { snr_db: 17.0 }) - 0.019_952_623).abs() < 1e-9);
        assert!((awgn_variance(AwgnSpec { snr_db: 20.0 }) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn ase_examples() {
        let mut link = LinkParams::reference(6.0, 0.0);
        link.validate().unwrap();
        // hand evaluation: 10 * (10^0.6 / 2) * 99 * h * 193.41e12 * 32e9
        let hand = 10.0 * (3.981_071_705_534_972 / 2.0) * 99.0 * 6.626_070_15e-34 * 193.41e12 * 32e9;
        assert!((ase_variance(&link) - hand).abs() < 1e-12 * hand);
        assert!((ase_variance(&link) - 8.0815e-6).abs() < 1e-9);
        let mut doubled = link;
        doubled.num_spans = 20;
        assert!((ase_variance(&doubled) - 2.0 * ase_variance(&link)).abs() < 1e-18);
        link.amp_gain_db = 0.0;
        assert_eq!(ase_variance(&link), 0.0);
    }

    #[test]
    fn link_validation() {
        let mut link = LinkParams::reference(5.0, 0.0);
        link.amp_gain_db = 19.0;
        assert!(link.validate().is_err());
        let mut link = LinkParams::reference(5.0, 0.0);
        link.symbol_rate_hz = 0.0;
        assert!(link.validate().is_err());
    }

    #[test]
    fn nlin_examples() {
        let k = NlinCoefficients {
            kappa0: 1e-3,
            kappa1: 1e-3,
            kappa2: 1e-3,
        };
        assert_eq!(nlin_variance(&k, 0.0, QPSK).unwrap(), 0.0);
        assert!((nlin_variance(&k, 1e-3, QPSK).unwrap() - 3e-12).abs() < 1e-24);
        let only0 = NlinCoefficients {
            kappa0: 2.0,
            kappa1: 0.0,
            kappa2: 0.0,
        };
        let m = make_square_qam(64).unwrap().moments().unwrap();
        assert!((nlin_variance(&only0, 1e-3, m).unwrap() - 2e-9).abs() < 1e-21);
        let negative = NlinCoefficients {
            kappa0: 1.0,
            kappa1: -5.0,
            kappa2: 0.0,
        };
        assert!(matches!(nlin_variance(&negative, 1e-3, QPSK), Err(Error::InvalidCoefficients(_))));
        assert!(negative.validate().is_err());
        assert!(nlin_variance(&k, -1.0, QPSK).is_err());
    }

    #[test]
    fn nlin_monotone_in_power_and_moments() {
        let k = NlinCoefficients {
            kappa0: 3000.0,
            kappa1: 200.0,
            kappa2: 100.0,
        };
        let m = |mu4, mu6| ConstellationMoments { mu4, mu6 };
        let base = nlin_variance(&k, 1e-3, m(1.3, 2.0)).unwrap();
        assert!(nlin_variance(&k, 1.1e-3, m(1.3, 2.0)).unwrap() > base);
        assert!(nlin_variance(&k, 1e-3, m(1.4, 2.0)).unwrap() > base);
        assert!(nlin_variance(&k, 1e-3, m(1.3, 2.1)).unwrap() > base);
    }

    #[test]
    fn total_variance_examples() {
        let link = LinkParams::reference(6.0, 0.0);
        assert_eq!(link.launch_power_w(), 1e-3);
        let v = total_noise_variance(&link, &NlinCoefficients::ZERO, QPSK).unwrap();
        assert_eq!(v, ase_variance(&link));
    }

    #[test]
    fn effective_snr_has_interior_optimum() {
        let k = NlinCoefficients {
            kappa0: 3370.0,
            kappa1: 270.0,
            kappa2: 90.0,
        };
        let m = make_square_qam(64).unwrap().moments().unwrap();
        let snr: Vec<f64> = (0..=40)
            .map(|i| {
                let link = LinkParams::reference(6.0, -2.0 + 0.1 * i as f64);
                link.launch_power_w() / total_noise_variance(&link, &k, m).unwrap()
            })
            .collect();
        let best = (0..snr.len()).max_by(|&a, &b| snr[a].total_cmp(&snr[b])).unwrap();
        assert!(best > 0 && best < snr.len() - 1);
        assert!(snr[..best].windows(2).all(|w| w[1] > w[0]));
        assert!(snr[best..].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn noise_model_matches_direct_formula() {
        let k = NlinCoefficients {
            kappa0: 3370.0,
            kappa1: 270.0,
            kappa2: 90.0,
        };
        let link = LinkParams::reference(7.0, 1.5);
        let m = make_square_qam(64).unwrap().moments().unwrap();
        let direct = nlin_normalized_variance(&link, &k, m).unwrap();
        let model = NoiseVarianceModel::nlin(&link, &k).variance(m);
        assert!((direct - model).abs() < 1e-12 * direct);
    }

    #[test]
    fn training_channel_degenerate_cases() {
        let mut rng = seeded(1);
        let x = Complex64::new(0.3, -0.7);
        assert_eq!(training_channel_apply(x, 0.0, 0.0, &mut rng), x);
        for _ in 0..100 {
            let y = training_channel_apply(x, 0.0, 0.1, &mut rng);
            assert!((y.norm() - x.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn training_channel_noise_variance() {
        let mut rng = seeded(2);
        let n = 1_000_000;
        let s: f64 = (0..n)
            .map(|_| training_channel_apply(Complex64::new(0.0, 0.0), 0.05, 0.02, &mut rng).norm_sqr())
            .sum();
        assert!((s / n as f64 - 0.05).abs() < 0.01 * 0.05);
    }

    #[test]
    fn wiener_examples() {
        let mut rng = seeded(3);
        let flat = wiener_phase_walk(50, &WienerSpec { linewidth_hz: 0.0, symbol_rate_hz: 32e9 }, &mut rng);
        assert!(flat.iter().all(|&p| p == flat[0]));
        assert!((0.0..2.0 * PI).contains(&flat[0]));
        let spec = WienerSpec {
            linewidth_hz: 200e3,
            symbol_rate_hz: 32e9,
        };
        assert!((spec.increment_variance() - 3.927e-5).abs() < 1e-8);
        assert!(wiener_phase_walk(0, &spec, &mut rng).is_empty());
    }

    #[test]
    fn wiener_variance_scales_linearly() {
        let mut rng = seeded(4);
        let spec = WienerSpec {
            linewidth_hz: 200e3,
            symbol_rate_hz: 32e9,
        };
        let n = 200;
        let walks = 10_000;
        let mut acc = 0.0;
        for _ in 0..walks {
            let w = wiener_phase_walk(n + 1, &spec, &mut rng);
            let d = w[n] - w[0];
            acc += d * d;
        }
        let expected = n as f64 * spec.increment_variance();
        assert!((acc / walks as f64 - expected).abs() < 0.05 * expected);
    }

    #[test]
    fn test_channel_examples() {
        let mut rng = seeded(5);
        let x = vec![Complex64::new(1.0, 0.5), Complex64::new(-0.2, 0.1)];
        assert_eq!(test_channel_apply(&x, &[0.0, 0.0], 0.0, &mut rng).unwrap(), x);
        let z = test_channel_apply(&x, &[0.4, -2.0], 0.0, &mut rng).unwrap();
        for (a, b) in x.iter().zip(&z) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        assert!(matches!(test_channel_apply(&x, &[0.0], 0.1, &mut rng), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn test_channel_noise_variance() {
        let mut rng = seeded(6);
        let q = make_square_qam(16).unwrap();
        let n = 1_000_000;
        let x: Vec<Complex64> = (0..n).map(|i| q.points()[i % 16]).collect();
        let phases = wiener_phase_walk(n, &WienerSpec { linewidth_hz: 1e6, symbol_rate_hz: 32e9 }, &mut rng);
        let z = test_channel_apply(&x, &phases, 0.02, &mut rng).unwrap();
        let mse: f64 = x
            .iter()
            .zip(&phases)
            .zip(&z)
            .map(|((s, &p), r)| (r - s * Complex64::from_polar(1.0, p)).norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mse - 0.02).abs() < 0.01 * 0.02);
    }

    #[test]
    fn phase_noise_placement_is_equivalent() {
        // (x e^{iφ} + n) and (x + n) e^{iφ} agree in their first moments
        let mut rng = seeded(7);
        let x = Complex64::new(0.8, 0.3);
        let (sn2, sp2) = (0.05, 0.02);
        let n = 1_000_000;
        let mut a = [0.0f64; 4];
        let mut b = [0.0f64; 4];
        for _ in 0..n {
            let phi = gaussian(&mut rng, sp2.sqrt());
            let r = Complex64::from_polar(1.0, phi);
            let za = x * r + complex_gaussian(&mut rng, sn2);
            let phi = gaussian(&mut rng, sp2.sqrt());
            let zb = (x + complex_gaussian(&mut rng, sn2)) * Complex64::from_polar(1.0, phi);
            for (acc, z) in [(&mut a, za), (&mut b, zb)] {
                acc[0] += z.re;
                acc[1] += z.im;
                acc[2] += z.norm_sqr();
                acc[3] += z.re * z.im;
            }
        }
        for i in 0..4 {
            let (ma, mb) = (a[i] / n as f64, b[i] / n as f64);
            assert!((ma - mb).abs() < 2e-3, "moment {i}: {ma} vs {mb}");
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let spec = WienerSpec {
            linewidth_hz: 1e5,
            symbol_rate_hz: 32e9,
        };
        let a = wiener_phase_walk(100, &spec, &mut seeded(9));
        let b = wiener_phase_walk(100, &spec, &mut seeded(9));
        assert_eq!(a, b);
    }
}
