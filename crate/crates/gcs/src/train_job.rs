//! Training jobs from configuration files.
//!
//! ```text
//! name = awgn1
//! noise = awgn
//! snr_db = 15,16,17,18,19,20
//! sigma2_rpn = 0.001,0.005,0.01,0.02,0.05
//! ```
//!
//! List-valued channel parameters expand into one job per combination; the
//! combination is encoded in the output file name (`awgn1_snr15_rpn0.001`).
//! Range-valued parameters are sampled per batch inside a single job.

use std::path::{Path, PathBuf};

use gcs_core::autoencoder::{train, AdamConfig, NoiseScenario, SamplingRule, ScenarioSpec, TrainConfig};
use gcs_core::constellation::Constellation;
use gcs_core::rng::derive_seed;
use rayon::prelude::*;

use crate::config::{ConfigFile, Param};
use crate::io::{write_constellation, write_loss_csv, LinkModel, CONSTELLATION_EXT};
use crate::{Error, Result};

pub const TRAIN_KEYS: &[&str] = &[
    "name",
    "noise",
    "m",
    "epochs",
    "learning_rate",
    "seed",
    "plateau_stop",
    "init_jitter",
    "samples_per_epoch",
    "batch_size",
    "snr_db",
    "noise_figure_db",
    "launch_power_dbm",
    "sigma2_rpn",
    "link",
    "output_dir",
];

/// Short file-name codes of the channel parameters.
const TAGS: &[(&str, &str)] = &[
    ("snr_db", "snr"),
    ("noise_figure_db", "nf"),
    ("launch_power_dbm", "p"),
    ("sigma2_rpn", "rpn"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    /// Output stem, tuple-encoded for family jobs.
    pub name: String,
    /// Fixed list entries of this job, `(config key, value)`.
    pub coordinates: Vec<(String, f64)>,
    pub config: TrainConfig,
    pub scenario: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPlan {
    pub name: String,
    pub output_dir: PathBuf,
    pub jobs: Vec<TrainJob>,
}

#[derive(Debug, Clone)]
pub struct TrainedConstellation {
    pub job: TrainJob,
    pub constellation: Constellation,
    pub loss_history: Vec<f64>,
    pub constellation_path: PathBuf,
    pub loss_path: PathBuf,
}

fn tag(key: &str) -> &str {
    TAGS.iter().find(|(k, _)| *k == key).map_or(key, |(_, t)| t)
}

fn default_name(c: &ConfigFile) -> String {
    Path::new(c.label())
        .file_stem()
        .map_or_else(|| "constellation".to_string(), |s| s.to_string_lossy().into_owned())
}

impl TrainingPlan {
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        c.check_keys(TRAIN_KEYS)?;
        let name = c.string("name").map_or_else(|| default_name(c), str::to_string);
        if name.is_empty() || name.contains(['/', '\\']) {
            return Err(c.error("name", "must be a plain file stem"));
        }
        let m: usize = c.value_or("m", 64)?;
        let mut base = TrainConfig::new(m);
        base.epochs = c.value_or("epochs", base.epochs)?;
        base.samples_per_epoch = c.value_or("samples_per_epoch", base.samples_per_epoch)?;
        base.batch_size = c.value_or("batch_size", base.batch_size)?;
        base.init_jitter = c.value_or("init_jitter", base.init_jitter)?;
        base.plateau_stop = c.value_or("plateau_stop", false)?;
        base.adam = AdamConfig {
            learning_rate: c.value_or("learning_rate", AdamConfig::default().learning_rate)?,
            ..AdamConfig::default()
        };
        let seed: u64 = c.value_or("seed", 0)?;
        if base.batch_size > 0 && base.samples_per_epoch % base.batch_size != 0 {
            return Err(c.error("batch_size", "must divide samples_per_epoch"));
        }
        base.validate().map_err(|e| c.error("m", e.to_string()))?;

        let rpn = c.param("sigma2_rpn")?.unwrap_or(Param::Fixed(0.0));
        let noise = c.string("noise").unwrap_or("awgn");
        let axes: Vec<(&str, Param)> = match noise {
            "awgn" => {
                for k in ["noise_figure_db", "launch_power_dbm", "link"] {
                    if c.contains(k) {
                        return Err(c.error(k, "not used with noise = awgn"));
                    }
                }
                vec![("snr_db", c.require_param("snr_db")?), ("sigma2_rpn", rpn)]
            }
            "nlin" => {
                if c.contains("snr_db") {
                    return Err(c.error("snr_db", "not used with noise = nlin"));
                }
                vec![
                    ("noise_figure_db", c.require_param("noise_figure_db")?),
                    ("launch_power_dbm", c.require_param("launch_power_dbm")?),
                    ("sigma2_rpn", rpn),
                ]
            }
            other => return Err(c.error("noise", format!("expected awgn or nlin, got {other:?}"))),
        };
        let link = match c.path("link") {
            Some(p) => LinkModel::load(&p)?,
            None => LinkModel::reference(),
        };

        // cartesian product, first axis outermost
        let mut combos: Vec<Vec<Option<f64>>> = vec![Vec::new()];
        for (_, p) in &axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    p.job_values().into_iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }

        let family = combos.len() > 1;
        let mut jobs = Vec::with_capacity(combos.len());
        for (idx, combo) in combos.iter().enumerate() {
            let rules: Vec<SamplingRule> = axes.iter().zip(combo).map(|((_, p), v)| p.rule(*v)).collect();
            let scenario = match noise {
                "awgn" => ScenarioSpec::awgn(rules[0], rules[1]),
                _ => ScenarioSpec {
                    noise: NoiseScenario::Nlin {
                        noise_figure_db: rules[0],
                        launch_power_dbm: rules[1],
                        link: link.link(0.0, 0.0),
                        coeffs: link.coefficients(),
                    },
                    sigma2_rpn: *rules.last().expect("rpn axis"),
                },
            };
            scenario.validate().map_err(|e| c.error(axes[0].0, e.to_string()))?;
            let coordinates: Vec<(String, f64)> = axes
                .iter()
                .zip(combo)
                .filter(|((_, p), _)| matches!(p, Param::List(_)))
                .filter_map(|((k, _), v)| v.map(|v| (k.to_string(), v)))
                .collect();
            let mut job_name = name.clone();
            if family {
                for (k, v) in &coordinates {
                    job_name.push_str(&format!("_{}{}", tag(k), v));
                }
            }
            jobs.push(TrainJob {
                name: job_name,
                coordinates,
                config: TrainConfig {
                    seed: derive_seed(seed, &[idx as u64]),
                    ..base.clone()
                },
                scenario,
            });
        }

        let output_dir = c.path("output_dir").unwrap_or_else(|| c.resolve("."));
        Ok(TrainingPlan { name, output_dir, jobs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(&ConfigFile::load(path)?)
    }

    pub fn constellation_path(&self, job: &TrainJob) -> PathBuf {
        self.output_dir.join(format!("{}.{CONSTELLATION_EXT}", job.name))
    }

    pub fn loss_path(&self, job: &TrainJob) -> PathBuf {
        self.output_dir.join(format!("{}.loss.csv", job.name))
    }
}

/// Trains every job of the plan (in parallel) and writes the constellation
/// and loss files. Results come back in job order.
pub fn run_training(plan: &TrainingPlan) -> Result<Vec<TrainedConstellation>> {
    let trained: Vec<(TrainJob, Constellation, Vec<f64>)> = plan
        .jobs
        .par_iter()
        .map(|job| {
            let out = train(&job.config, &job.scenario).map_err(|e| match e {
                gcs_core::Error::Diverged { epoch, loss } => Error::Usage(format!(
                    "job {}: training diverged at epoch {epoch} (loss {loss})",
                    job.name
                )),
                other => Error::Core(other),
            })?;
            Ok((job.clone(), out.constellation.with_name(job.name.clone()), out.loss_history))
        })
        .collect::<Result<_>>()?;

    trained
        .into_iter()
        .map(|(job, constellation, loss_history)| {
            let constellation_path = plan.constellation_path(&job);
            let loss_path = plan.loss_path(&job);
            write_constellation(&constellation_path, &constellation)?;
            write_loss_csv(&loss_path, &loss_history)?;
            Ok(TrainedConstellation {
                job,
                constellation,
                loss_history,
                constellation_path,
                loss_path,
            })
        })
        .collect()
}
