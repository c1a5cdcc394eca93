//! The test pipeline for one constellation at one operating point:
//! symbols → Wiener phase walk and additive noise → blind phase search →
//! one global derotation against the transmitted sequence → Gaussian-receiver
//! MI over the interior symbols.
//!
//! Everything is computed for a unit-power constellation. Under the NLIN
//! model the noise variance is divided by the per-polarization signal power
//! instead of scaling the symbols up, which gives the same MI.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::bps::{derotate, run_bps_with_slicer, unwrap_estimates, BpsConfig};
use crate::channel::{awgn_variance, nlin_normalized_variance, test_channel_apply, wiener_phase_walk, AwgnSpec, LinkParams, NlinCoefficients, WienerSpec};
use crate::constellation::{Constellation, Slicer};
use crate::metrics::{mi_gaussian_receiver, MiEstimate};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Additive noise at test time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestNoise {
    Awgn { snr_db: f64 },
    /// ASE plus NLIN at the link's noise figure and launch power; the NLIN
    /// part uses the moments of the constellation under test.
    Nlin { link: LinkParams, coeffs: NlinCoefficients },
}

impl TestNoise {
    /// Noise variance relative to unit signal power.
    pub fn variance(&self, c: &Constellation) -> Result<f64> {
        match self {
            TestNoise::Awgn { snr_db } => Ok(awgn_variance(AwgnSpec { snr_db: *snr_db })),
            TestNoise::Nlin { link, coeffs } => {
                link.validate()?;
                nlin_normalized_variance(link, coeffs, c.moments()?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseRecovery {
    /// Blind phase search plus genie global derotation.
    Bps,
    /// Score the raw channel output.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub symbols_per_run: usize,
    pub num_polarizations: usize,
    pub symbol_rate_hz: f64,
    pub bps: BpsConfig,
    pub recovery: PhaseRecovery,
    /// Tolerance, relative to the minimum distance, for detecting the
    /// rotational symmetry that BPS estimates are unwrapped by.
    pub symmetry_rel_tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            symbols_per_run: 10_000,
            num_polarizations: 2,
            symbol_rate_hz: 32e9,
            bps: BpsConfig::default(),
            recovery: PhaseRecovery::Bps,
            symmetry_rel_tol: 0.3,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.bps.validate()?;
        if self.num_polarizations == 0 || !(self.symbol_rate_hz > 0.0) || !(self.symmetry_rel_tol >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("{self:?}")));
        }
        if self.recovery == PhaseRecovery::Bps && self.symbols_per_run <= 2 * self.bps.half_window {
            return Err(Error::SequenceTooShort {
                len: self.symbols_per_run,
                half_window: self.bps.half_window,
            });
        }
        if self.symbols_per_run == 0 {
            return Err(Error::InvalidParameter("zero symbols per run".into()));
        }
        Ok(())
    }
}

/// Per-constellation state shared by all runs at one operating point.
#[derive(Debug, Clone)]
pub struct PreparedTest {
    constellation: Constellation,
    slicer: Slicer,
    symmetry_order: usize,
    noise_variance: f64,
}

impl PreparedTest {
    pub fn new(c: &Constellation, noise: &TestNoise, cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let constellation = c.normalized()?;
        let noise_variance = noise.variance(&constellation)?;
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("noise variance {noise_variance}")));
        }
        Ok(PreparedTest {
            slicer: Slicer::new(constellation.points()),
            symmetry_order: constellation.rotational_symmetry_order(cfg.symmetry_rel_tol),
            constellation,
            noise_variance,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn symmetry_order(&self) -> usize {
        self.symmetry_order
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
}

/// Index `j` of the test phase `θ_j` minimizing `Σ|c_k·e^{−iθ_j} − x_k|²`;
/// the smallest index wins ties.
pub fn genie_rotation(compensated: &[Complex64], sent: &[Complex64], cfg: &BpsConfig) -> Result<usize> {
    if compensated.len() != sent.len() {
        return Err(Error::LengthMismatch {
            left: compensated.len(),
            right: sent.len(),
        });
    }
    let corr: Complex64 = compensated.iter().zip(sent).map(|(c, x)| c * x.conj()).sum();
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for j in 0..cfg.num_test_phases {
        let score = (corr * Complex64::from_polar(1.0, -cfg.test_phase(j))).re;
        if score > best_score {
            best = j;
            best_score = score;
        }
    }
    Ok(best)
}

/// Outcome of one polarization of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationOutcome {
    pub mi: MiEstimate,
    /// Genie test-phase index, `None` without phase recovery.
    pub genie_index: Option<usize>,
}

/// Simulates one polarization with its own RNG stream.
pub fn simulate_polarization(
    prepared: &PreparedTest,
    cfg: &PipelineConfig,
    linewidth_hz: f64,
    seed: u64,
) -> Result<PolarizationOutcome> {
    let wiener = WienerSpec {
        linewidth_hz,
        symbol_rate_hz: cfg.symbol_rate_hz,
    };
    wiener.validate()?;
    let n = cfg.symbols_per_run;
    let c = &prepared.constellation;
    let m = c.cardinality();
    let mut rng = seeded(seed);
    let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..m)).collect();
    let sent: Vec<Complex64> = indices.iter().map(|&i| c.points()[i]).collect();
    let phases = wiener_phase_walk(n, &wiener, &mut rng);
    let received = test_channel_apply(&sent, &phases, prepared.noise_variance, &mut rng)?;

    match cfg.recovery {
        PhaseRecovery::None => Ok(PolarizationOutcome {
            mi: mi_gaussian_receiver(&indices, &received, c)?,
            genie_index: None,
        }),
        PhaseRecovery::Bps => {
            let w = cfg.bps.half_window;
            let out = run_bps_with_slicer(&received, &prepared.slicer, &cfg.bps)?;
            let estimates = unwrap_estimates(&out.phase_estimates, prepared.symmetry_order);
            let interior = &received[w..n - w];
            let compensated = derotate(interior, &estimates)?;
            let sent_interior = &sent[w..n - w];
            let j = genie_rotation(&compensated, sent_interior, &cfg.bps)?;
            let rot = Complex64::from_polar(1.0, -cfg.bps.test_phase(j));
            let aligned: Vec<Complex64> = compensated.iter().map(|z| z * rot).collect();
            Ok(PolarizationOutcome {
                mi: mi_gaussian_receiver(&indices[w..n - w], &aligned, c)?,
                genie_index: Some(j),
            })
        }
    }
}

/// Mean per-polarization MI (bits per symbol per polarization) of run
/// `run_index`. Polarization `p` uses the stream `derive_seed(seed, [run_index, p])`.
pub fn simulate_run(
    prepared: &PreparedTest,
    cfg: &PipelineConfig,
    linewidth_hz: f64,
    seed: u64,
    run_index: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for p in 0..cfg.num_polarizations {
        let s = derive_seed(seed, &[run_index, p as u64]);
        total += simulate_polarization(prepared, cfg, linewidth_hz, s)?.mi.bits_per_symbol;
    }
    Ok(total / cfg.num_polarizations as f64)
}
