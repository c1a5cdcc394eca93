use alloc::format;

// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::channel::{awgn_variance, AwgnSpec, LinkParams, NlinCoefficients, NoiseVarianceModel};
use crate::{Error, Result};

/// How one channel parameter is drawn for each training batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingRule {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
    /// `exp(U[ln lo, ln hi])`; needs `0 < lo`.
    LogUniform { lo: f64, hi: f64 },
}

impl SamplingRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SamplingRule::Fixed(v) => v.is_finite(),
            SamplingRule::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            SamplingRule::LogUniform { lo, hi } => lo > 0.0 && hi.is_finite() && lo <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("sampling rule {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SamplingRule::Fixed(v) => v,
            SamplingRule::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            SamplingRule::LogUniform { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                (a + (b - a) * rng.random::<f64>()).exp()
            }
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, SamplingRule::Fixed(_))
    }
}

/// Additive-noise part of a training scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseScenario {
    Awgn {
        snr_db: SamplingRule,
    },
    Nlin {
        noise_figure_db: SamplingRule,
        launch_power_dbm: SamplingRule,
        link: LinkParams,
        coeffs: NlinCoefficients,
    },
}

/// Training-time channel: additive noise rule plus the residual phase-noise
/// variance rule (rad²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub noise: NoiseScenario,
    pub sigma2_rpn: SamplingRule,
}

/// One draw of the scenario's random parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseDraw {
    Awgn { snr_db: f64 },
    Nlin { noise_figure_db: f64, launch_power_dbm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    pub noise: NoiseDraw,
    pub sigma2_rpn: f64,
}

impl ScenarioSpec {
    pub fn awgn(snr_db: SamplingRule, sigma2_rpn: SamplingRule) -> Self {
        ScenarioSpec {
            noise: NoiseScenario::Awgn { snr_db },
            sigma2_rpn,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sigma2_rpn.validate()?;
        if let SamplingRule::Fixed(v) | SamplingRule::Uniform { lo: v, .. } = self.sigma2_rpn {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("negative RPN variance {v}")));
            }
        }
        match &self.noise {
            NoiseScenario::Awgn { snr_db } => snr_db.validate(),
            NoiseScenario::Nlin {
                noise_figure_db,
                launch_power_dbm,
                link,
                coeffs,
            } => {
                noise_figure_db.validate()?;
                launch_power_dbm.validate()?;
                link.validate()?;
                coeffs.validate()
            }
        }
    }

    /// Draws the noise parameters first, then the RPN variance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelDraw {
        let noise = match &self.noise {
            NoiseScenario::Awgn { snr_db } => NoiseDraw::Awgn {
                snr_db: snr_db.sample(rng),
            },
            NoiseScenario::Nlin {
                noise_figure_db,
                launch_power_dbm,
                ..
            } => NoiseDraw::Nlin {
                noise_figure_db: noise_figure_db.sample(rng),
                launch_power_dbm: launch_power_dbm.sample(rng),
            },
        };
        ChannelDraw {
            noise,
            sigma2_rpn: self.sigma2_rpn.sample(rng),
        }
    }

    /// Noise variance, as seen by a unit-power constellation, for one draw.
    pub fn noise_model(&self, draw: &ChannelDraw) -> NoiseVarianceModel {
        match (&self.noise, draw.noise) {
            (NoiseScenario::Nlin { link, coeffs, .. }, NoiseDraw::Nlin { noise_figure_db, launch_power_dbm }) => {
                NoiseVarianceModel::nlin(&link.with_operating_point(noise_figure_db, launch_power_dbm), coeffs)
            }
            (_, NoiseDraw::Awgn { snr_db }) => NoiseVarianceModel::constant(awgn_variance(AwgnSpec { snr_db })),
            (NoiseScenario::Awgn { .. }, NoiseDraw::Nlin { .. }) => {
                // a draw from another scenario; treat it as noiseless
                NoiseVarianceModel::constant(0.0)
            }
        }
    }
}

/// Free-function form of [`ScenarioSpec::sample`].
pub fn sample_scenario<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> ChannelDraw {
    spec.sample(rng)
}
