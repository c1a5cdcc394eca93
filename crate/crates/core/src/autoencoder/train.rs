use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;
// unused only when another crate in the build links std
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use super::adam::{AdamConfig, AdamState};
use super::network::{backward, Batch, Decoder, Encoder};
use super::scenario::ScenarioSpec;
use crate::constellation::{grid_points, Constellation};
use crate::rng::{complex_gaussian, gaussian, seeded, SimRng};
use crate::{Error, Result};

/// Window and relative threshold of the optional plateau stop.
pub const PLATEAU_WINDOW: usize = 50;
pub const PLATEAU_REL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub m: usize,
    pub epochs: usize,
    pub samples_per_epoch: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Std-dev of the per-component jitter added to the grid initialization.
    pub init_jitter: f64,
    /// Stop early once the mean loss of the last [`PLATEAU_WINDOW`] epochs
    /// improves on the window before it by less than [`PLATEAU_REL_TOL`]
    /// (relative).
    pub plateau_stop: bool,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: `N = 256·M` samples per epoch, batches of `32·M`,
    /// 1000 epochs.
    pub fn new(m: usize) -> Self {
        TrainConfig {
            m,
            epochs: 1000,
            samples_per_epoch: 256 * m,
            batch_size: 32 * m,
            adam: AdamConfig::default(),
            init_jitter: 0.05,
            plateau_stop: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || !self.m.is_power_of_two() {
            return Err(Error::InvalidCardinality(self.m));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.samples_per_epoch < self.batch_size {
            return Err(Error::InvalidParameter(format!(
                "epochs {} / samples {} / batch {}",
                self.epochs, self.samples_per_epoch, self.batch_size
            )));
        }
        if !(self.init_jitter >= 0.0) {
            return Err(Error::InvalidParameter(format!("init jitter {}", self.init_jitter)));
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub constellation: Constellation,
    pub encoder: Encoder,
    pub decoder: Decoder,
    /// Mean batch loss (nats) of each completed epoch.
    pub loss_history: Vec<f64>,
}

/// Rectangular-grid start (square QAM when `M` is a square) plus Gaussian
/// jitter, so symmetric ties are broken from the first step.
pub fn initial_encoder<R: Rng + ?Sized>(m: usize, jitter: f64, rng: &mut R) -> Result<Encoder> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::InvalidCardinality(m));
    }
    let log2 = m.trailing_zeros();
    let rows = 1usize << log2.div_ceil(2);
    let cols = m / rows;
    let grid = grid_points(rows, cols);
    let scale = 1.0 / crate::constellation::mean_power(&grid).sqrt();
    let points: Vec<Complex64> = grid
        .iter()
        .map(|p| p * scale + Complex64::new(gaussian(rng, jitter), gaussian(rng, jitter)))
        .collect();
    Encoder::from_points(&points)
}

fn plateaued(history: &[f64]) -> bool {
    let n = history.len();
    if n < 2 * PLATEAU_WINDOW {
        return false;
    }
    let mean = |w: &[f64]| w.iter().sum::<f64>() / w.len() as f64;
    let last = mean(&history[n - PLATEAU_WINDOW..]);
    let before = mean(&history[n - 2 * PLATEAU_WINDOW..n - PLATEAU_WINDOW]);
    before - last < PLATEAU_REL_TOL * before.abs()
}

pub fn train(cfg: &TrainConfig, scenario: &ScenarioSpec) -> Result<TrainOutput> {
    train_with_progress(cfg, scenario, |_, _| {})
}

/// Trains encoder and decoder jointly; `progress(epoch, loss)` is called
/// after every epoch. The run is a pure function of `cfg` and `scenario`.
pub fn train_with_progress<F: FnMut(usize, f64)>(
    cfg: &TrainConfig,
    scenario: &ScenarioSpec,
    mut progress: F,
) -> Result<TrainOutput> {
    cfg.validate()?;
    scenario.validate()?;
    let m = cfg.m;
    let mut rng: SimRng = seeded(cfg.seed);
    let mut encoder = initial_encoder(m, cfg.init_jitter, &mut rng)?;
    let mut decoder = Decoder::glorot(m, &mut rng);
    let mut adam = AdamState::new(
        cfg.adam,
        &[
            encoder.weights().len(),
            decoder.w1.len(),
            decoder.b1.len(),
            decoder.w2.len(),
            decoder.b2.len(),
        ],
    );

    let batches = cfg.samples_per_epoch / cfg.batch_size;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch = Batch {
        indices: Vec::with_capacity(cfg.batch_size),
        noise: Vec::with_capacity(cfg.batch_size),
        phases: Vec::with_capacity(cfg.batch_size),
        noise_model: crate::channel::NoiseVarianceModel::constant(0.0),
    };

    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        for _ in 0..batches {
            let draw = scenario.sample(&mut rng);
            let rpn_std = draw.sigma2_rpn.max(0.0).sqrt();
            batch.noise_model = scenario.noise_model(&draw);
            batch.indices.clear();
            batch.noise.clear();
            batch.phases.clear();
            for _ in 0..cfg.batch_size {
                batch.indices.push(rng.random_range(0..m));
                batch.noise.push(complex_gaussian(&mut rng, 1.0));
                batch.phases.push(gaussian(&mut rng, rpn_std));
            }
            let (loss, grads) = backward(&encoder, &decoder, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss });
            }
            total += loss;
            let Decoder { w1, b1, w2, b2, .. } = &mut decoder;
            adam.step(
                &mut [encoder.weights_mut(), w1, b1, w2, b2],
                &grads.tensors(),
            )?;
        }
        let loss = total / batches as f64;
        if !loss.is_finite() || encoder.weights().iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        history.push(loss);
        progress(epoch, loss);
        if cfg.plateau_stop && plateaued(&history) {
            break;
        }
    }

    Ok(TrainOutput {
        constellation: encoder.constellation()?,
        encoder,
        decoder,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoencoder::scenario::SamplingRule;
    use crate::metrics::entropy_uniform;

    fn small_cfg(m: usize, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs,
            seed,
            ..TrainConfig::new(m)
        }
    }

    #[test]
    fn initial_grid_shapes() {
        let mut rng = seeded(0);
        for m in [2usize, 4, 8, 16, 32, 64] {
            let e = initial_encoder(m, 0.0, &mut rng).unwrap();
            let c = e.constellation().unwrap();
            assert_eq!(c.cardinality(), m);
            assert!((c.mean_power() - 1.0).abs() < 1e-12);
            assert!(c.min_distance() > 0.1);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let s = ScenarioSpec::awgn(SamplingRule::Fixed(15.0), SamplingRule::Fixed(0.01));
        let a = train(&small_cfg(16, 3, 5), &s).unwrap();
        let b = train(&small_cfg(16, 3, 5), &s).unwrap();
        assert_eq!(a, b);
        let c = train(&small_cfg(16, 3, 6), &s).unwrap();
        assert_ne!(a.constellation, c.constellation);
    }

    #[test]
    fn loss_falls_below_entropy() {
        let s = ScenarioSpec::awgn(SamplingRule::Fixed(15.0), SamplingRule::Fixed(0.001));
        let cfg = TrainConfig {
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            ..small_cfg(16, 30, 1)
        };
        let out = train(&cfg, &s).unwrap();
        assert_eq!(out.loss_history.len(), 30);
        let h = entropy_uniform(16) * core::f64::consts::LN_2;
        assert!(out.loss_history[29] < 0.5 * h, "{:?}", out.loss_history);
        assert!(out.loss_history[29] < out.loss_history[0]);
        assert!((out.constellation.mean_power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_stop_can_end_early() {
        // at 0 dB a 4-point constellation saturates quickly
        let s = ScenarioSpec::awgn(SamplingRule::Fixed(0.0), SamplingRule::Fixed(0.0));
        let cfg = TrainConfig {
            plateau_stop: true,
            samples_per_epoch: 256,
            batch_size: 256,
            ..small_cfg(4, 5000, 2)
        };
        let out = train(&cfg, &s).unwrap();
        assert!(out.loss_history.len() < 5000);
    }

    #[test]
    fn rejects_bad_config() {
        let s = ScenarioSpec::awgn(SamplingRule::Fixed(15.0), SamplingRule::Fixed(0.01));
        assert!(train(&small_cfg(12, 1, 0), &s).is_err());
        let cfg = TrainConfig {
            batch_size: 0,
            ..small_cfg(16, 1, 0)
        };
        assert!(train(&cfg, &s).is_err());
    }
}
