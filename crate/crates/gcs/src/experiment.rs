//! The `train`, `test` and `sweep` commands as library calls.

use std::path::{Path, PathBuf};

use crate::config::ConfigFile;
use crate::io::resolve_constellation;
use crate::sweep::{EnvelopeSpec, SweepGrid, SweepOutput, TestPlan, TEST_KEYS};
use crate::train_job::{run_training, TrainedConstellation, TrainingPlan};
use crate::{Error, Result};

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub paper_scale: bool,
    pub bps_phases: Option<usize>,
    pub bps_window: Option<usize>,
    /// Extra constellations (`qam:<M>` or file paths) for test sweeps.
    pub constellations: Vec<String>,
}

impl Overrides {
    fn apply_grid(&self, grid: &mut SweepGrid) -> Result<()> {
        if self.paper_scale {
            grid.use_paper_scale();
        }
        if let Some(n) = self.bps_phases {
            grid.bps_phases = n;
        }
        if let Some(w) = self.bps_window {
            grid.bps_window = w;
        }
        grid.validate()
    }

    fn apply_plan(&self, plan: &mut TestPlan) -> Result<()> {
        self.apply_grid(&mut plan.grid)?;
        if let Some(d) = &self.output_dir {
            plan.output_dir = d.clone();
        }
        Ok(())
    }
}

pub fn train(config: &Path, o: &Overrides) -> Result<Vec<TrainedConstellation>> {
    let mut plan = TrainingPlan::load(config)?;
    if let Some(d) = &o.output_dir {
        plan.output_dir = d.clone();
    }
    run_training(&plan)
}

fn is_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

/// Runs a test sweep from a configuration file or from a manifest written
/// by an earlier sweep.
pub fn test(input: &Path, o: &Overrides) -> Result<SweepOutput> {
    let mut plan = if is_manifest(input) {
        let mut plan = TestPlan::load_manifest(input)?;
        for t in &o.constellations {
            plan.constellations.push(resolve_constellation(t)?);
        }
        plan
    } else {
        TestPlan::from_config(&ConfigFile::load(input)?, &o.constellations)?
    };
    o.apply_plan(&mut plan)?;
    plan.execute()
}

/// Trains the constellations of a configuration, then tests them with the
/// keys under `test.` next to the baselines (`test.baselines`, default the
/// square QAM of the same order). Families get a best-per-point envelope.
pub fn sweep(config: &Path, o: &Overrides) -> Result<(Vec<TrainedConstellation>, SweepOutput)> {
    let mut file = ConfigFile::load(config)?;
    let test_cfg = file.take_section("test.");
    let mut training = TrainingPlan::from_config(&file)?;
    if let Some(d) = &o.output_dir {
        training.output_dir = d.clone();
    }
    let mut allowed: Vec<&str> = TEST_KEYS
        .iter()
        .copied()
        .filter(|k| !matches!(*k, "name" | "output_dir" | "envelope"))
        .collect();
    allowed.push("baselines");
    test_cfg.check_keys(&allowed).map_err(|e| match e {
        Error::Config { path, line, msg } => Error::Config {
            path,
            line,
            msg: format!("test.{msg}"),
        },
        other => other,
    })?;
    let mut grid = SweepGrid::from_config(&test_cfg)?;
    o.apply_grid(&mut grid)?;

    let m = training.jobs[0].config.m;
    let baselines = test_cfg.list("baselines").unwrap_or_else(|| vec![format!("qam:{m}")]);
    let mut constellations = Vec::new();
    for b in baselines.iter().chain(&o.constellations) {
        let token = if b.starts_with("qam:") {
            b.clone()
        } else {
            test_cfg.resolve(b).display().to_string()
        };
        constellations.push(resolve_constellation(&token)?);
    }

    let trained = run_training(&training)?;
    constellations.extend(trained.iter().map(|t| t.constellation.clone()));
    let envelopes = if trained.len() > 1 {
        vec![EnvelopeSpec::for_family(&training.name)]
    } else {
        Vec::new()
    };
    let plan = TestPlan {
        name: format!("{}_test", training.name),
        grid,
        constellations,
        envelopes,
        output_dir: training.output_dir.clone(),
    };
    let out = plan.execute()?;
    Ok((trained, out))
}
