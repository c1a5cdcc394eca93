//! Test sweeps: constellations × operating points × Monte-Carlo runs.
//!
//! ```text
//! name = snr17_linewidth
//! constellations = qam:64, out/awgn2.const
//! noise = awgn
//! snr_db = 17
//! linewidth_khz = 50,100,150,200,250,300
//! ```
//!
//! Every grid point gets its own seed, shared by all constellations, so
//! constellations are compared on the same symbol, noise and phase draws.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use gcs_core::bps::BpsConfig;
use gcs_core::constellation::Constellation;
use gcs_core::pipeline::{simulate_run, PhaseRecovery, PipelineConfig, PreparedTest, TestNoise};
use gcs_core::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ConfigFile;
use crate::io::{resolve_constellation, write_file, LinkModel};
use crate::{Error, Result};

pub const TEST_KEYS: &[&str] = &[
    "name",
    "constellations",
    "noise",
    "snr_db",
    "noise_figure_db",
    "launch_power_dbm",
    "linewidth_khz",
    "runs",
    "symbols",
    "seed",
    "polarizations",
    "symbol_rate_gbd",
    "link",
    "bps_phases",
    "bps_window",
    "phase_recovery",
    "envelope",
    "output_dir",
];

pub const DEFAULT_LINEWIDTHS_KHZ: &[f64] = &[50.0, 100.0, 150.0, 200.0, 250.0];
pub const DESK_RUNS: usize = 10;
pub const DESK_SYMBOLS: usize = 10_000;
pub const PAPER_RUNS: usize = 100;
pub const PAPER_SYMBOLS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum NoiseAxis {
    Awgn {
        snr_db: Vec<f64>,
        symbol_rate_gbd: f64,
    },
    Nlin {
        noise_figure_db: Vec<f64>,
        launch_power_dbm: Vec<f64>,
        link: LinkModel,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recovery {
    Bps,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub noise: NoiseAxis,
    pub linewidth_khz: Vec<f64>,
    pub runs_per_point: usize,
    pub symbols_per_run: usize,
    pub seed: u64,
    pub polarizations: usize,
    pub bps_phases: usize,
    pub bps_window: usize,
    pub phase_recovery: Recovery,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub snr_db: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub launch_power_dbm: Option<f64>,
    pub linewidth_khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub constellation: String,
    /// Envelope rows: the member that was best at this point.
    pub source: Option<String>,
    pub point_index: usize,
    pub point: GridPoint,
    pub runs: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Best-per-point envelope over the constellations whose names start with
/// `prefix` (a family `awgn1` is matched by the prefix `awgn1_`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub label: String,
    pub prefix: String,
}

impl EnvelopeSpec {
    pub fn for_family(family: &str) -> Self {
        EnvelopeSpec {
            label: format!("{family}_envelope"),
            prefix: format!("{family}_"),
        }
    }

    fn matches(&self, name: &str) -> bool {
        name.starts_with(&self.prefix) && name != self.label
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Usage(format!("sweep grid: {m}")));
        let empty = match &self.noise {
            NoiseAxis::Awgn { snr_db, .. } => snr_db.is_empty(),
            NoiseAxis::Nlin {
                noise_figure_db,
                launch_power_dbm,
                ..
            } => noise_figure_db.is_empty() || launch_power_dbm.is_empty(),
        };
        if empty || self.linewidth_khz.is_empty() {
            return bad("empty axis");
        }
        if self.linewidth_khz.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return bad("linewidths must be finite and nonnegative");
        }
        if self.runs_per_point == 0 || self.polarizations == 0 {
            return bad("runs and polarizations must be positive");
        }
        self.pipeline_config().validate().map_err(|e| Error::Usage(format!("sweep grid: {e}")))
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let symbol_rate_gbd = match &self.noise {
            NoiseAxis::Awgn { symbol_rate_gbd, .. } => *symbol_rate_gbd,
            NoiseAxis::Nlin { link, .. } => link.symbol_rate_gbd,
        };
        PipelineConfig {
            symbols_per_run: self.symbols_per_run,
            num_polarizations: self.polarizations,
            symbol_rate_hz: symbol_rate_gbd * 1e9,
            bps: BpsConfig {
                num_test_phases: self.bps_phases,
                half_window: self.bps_window,
            },
            recovery: match self.phase_recovery {
                Recovery::Bps => PhaseRecovery::Bps,
                Recovery::None => PhaseRecovery::None,
            },
            ..PipelineConfig::default()
        }
    }

    /// Grid points, noise axes outermost and linewidth innermost.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        match &self.noise {
            NoiseAxis::Awgn { snr_db, .. } => {
                for &s in snr_db {
                    for &lw in &self.linewidth_khz {
                        out.push(GridPoint {
                            snr_db: Some(s),
                            noise_figure_db: None,
                            launch_power_dbm: None,
                            linewidth_khz: lw,
                        });
                    }
                }
            }
            NoiseAxis::Nlin {
                noise_figure_db,
                launch_power_dbm,
                ..
            } => {
                for &f in noise_figure_db {
                    for &p in launch_power_dbm {
                        for &lw in &self.linewidth_khz {
                            out.push(GridPoint {
                                snr_db: None,
                                noise_figure_db: Some(f),
                                launch_power_dbm: Some(p),
                                linewidth_khz: lw,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn test_noise(&self, p: &GridPoint) -> TestNoise {
        match &self.noise {
            NoiseAxis::Awgn { .. } => TestNoise::Awgn {
                snr_db: p.snr_db.unwrap_or(f64::NAN),
            },
            NoiseAxis::Nlin { link, .. } => TestNoise::Nlin {
                link: link.link(p.noise_figure_db.unwrap_or(f64::NAN), p.launch_power_dbm.unwrap_or(f64::NAN)),
                coeffs: link.coefficients(),
            },
        }
    }

    pub fn use_paper_scale(&mut self) {
        self.runs_per_point = PAPER_RUNS;
        self.symbols_per_run = PAPER_SYMBOLS;
    }

    /// Parses the grid keys of a test configuration.
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        let noise = match c.string("noise").unwrap_or("awgn") {
            "awgn" => {
                for k in ["noise_figure_db", "launch_power_dbm", "link"] {
                    if c.contains(k) {
                        return Err(c.error(k, "not used with noise = awgn"));
                    }
                }
                NoiseAxis::Awgn {
                    snr_db: c.axis("snr_db")?.ok_or_else(|| c.error("snr_db", "missing"))?,
                    symbol_rate_gbd: c.value_or("symbol_rate_gbd", 32.0)?,
                }
            }
            "nlin" => {
                for k in ["snr_db", "symbol_rate_gbd"] {
                    if c.contains(k) {
                        return Err(c.error(k, "not used with noise = nlin"));
                    }
                }
                NoiseAxis::Nlin {
                    noise_figure_db: c.axis("noise_figure_db")?.unwrap_or_else(|| vec![5.0, 6.0, 7.0]),
                    launch_power_dbm: c
                        .axis("launch_power_dbm")?
                        .unwrap_or_else(|| (0..9).map(|i| -2.0 + 0.5 * i as f64).collect()),
                    link: match c.path("link") {
                        Some(p) => LinkModel::load(&p)?,
                        None => LinkModel::reference(),
                    },
                }
            }
            other => return Err(c.error("noise", format!("expected awgn or nlin, got {other:?}"))),
        };
        let default_pols = match &noise {
            NoiseAxis::Awgn { .. } => 1,
            NoiseAxis::Nlin { link, .. } => link.polarizations as usize,
        };
        let phase_recovery = match c.string("phase_recovery").unwrap_or("bps") {
            "bps" => Recovery::Bps,
            "none" => Recovery::None,
            other => return Err(c.error("phase_recovery", format!("expected bps or none, got {other:?}"))),
        };
        let bps = BpsConfig::default();
        let grid = SweepGrid {
            noise,
            linewidth_khz: c.axis("linewidth_khz")?.unwrap_or_else(|| DEFAULT_LINEWIDTHS_KHZ.to_vec()),
            runs_per_point: c.value_or("runs", DESK_RUNS)?,
            symbols_per_run: c.value_or("symbols", DESK_SYMBOLS)?,
            seed: c.value_or("seed", 0)?,
            polarizations: c.value_or("polarizations", default_pols)?,
            bps_phases: c.value_or("bps_phases", bps.num_test_phases)?,
            bps_window: c.value_or("bps_window", bps.half_window)?,
            phase_recovery,
        };
        grid.validate().map_err(|e| c.error("runs", e.to_string()))?;
        Ok(grid)
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulates every constellation at every grid point. Rows come back
/// constellation-major, in grid order.
pub fn run_test_sweep(constellations: &[Constellation], grid: &SweepGrid) -> Result<Vec<SimResult>> {
    grid.validate()?;
    let mut names = BTreeSet::new();
    for c in constellations {
        if !names.insert(c.name()) {
            return Err(Error::Usage(format!("duplicate constellation name {:?}", c.name())));
        }
    }
    let cfg = grid.pipeline_config();
    let points = grid.points();
    let items: Vec<(usize, usize)> = (0..constellations.len())
        .flat_map(|ci| (0..points.len()).map(move |pi| (ci, pi)))
        .collect();
    items
        .par_iter()
        .map(|&(ci, pi)| {
            let c = &constellations[ci];
            let point = points[pi];
            let prepared = PreparedTest::new(c, &grid.test_noise(&point), &cfg)?;
            let seed = derive_seed(grid.seed, &[pi as u64]);
            let lw_hz = point.linewidth_khz * 1e3;
            let runs = (0..grid.runs_per_point)
                .map(|r| simulate_run(&prepared, &cfg, lw_hz, seed, r as u64))
                .collect::<gcs_core::Result<Vec<f64>>>()?;
            let (mean, stderr) = mean_and_stderr(&runs);
            Ok(SimResult {
                constellation: c.name().to_string(),
                source: None,
                point_index: pi,
                point,
                runs,
                mean,
                stderr,
                seed,
            })
        })
        .collect()
}

/// Best member per grid point. The first member wins ties.
pub fn envelope(results: &[SimResult], spec: &EnvelopeSpec) -> Result<Vec<SimResult>> {
    let members: Vec<&SimResult> = results.iter().filter(|r| spec.matches(&r.constellation)).collect();
    if members.is_empty() {
        return Err(Error::Usage(format!("envelope {:?}: no constellation matches", spec.label)));
    }
    let indices: BTreeSet<usize> = members.iter().map(|r| r.point_index).collect();
    let mut out = Vec::with_capacity(indices.len());
    for pi in indices {
        let at: Vec<&&SimResult> = members.iter().filter(|r| r.point_index == pi).collect();
        let best = at
            .iter()
            .fold(at[0], |b, r| if r.mean > b.mean { r } else { b });
        assert!(at.iter().all(|r| best.mean >= r.mean), "envelope must dominate its members");
        out.push(SimResult {
            constellation: spec.label.clone(),
            source: Some(best.constellation.clone()),
            ..(**best).clone()
        });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn results_csv(results: &[SimResult], grid: &SweepGrid) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "constellation",
        "source",
        "snr_db",
        "noise_figure_db",
        "launch_power_dbm",
        "linewidth_khz",
        "mean_mi",
        "stderr",
        "runs",
        "symbols_per_run",
        "seed",
    ])?;
    for r in results {
        w.write_record([
            r.constellation.clone(),
            r.source.clone().unwrap_or_default(),
            fmt_opt(r.point.snr_db),
            fmt_opt(r.point.noise_figure_db),
            fmt_opt(r.point.launch_power_dbm),
            r.point.linewidth_khz.to_string(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.runs.len().to_string(),
            grid.symbols_per_run.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestConstellation {
    pub name: String,
    /// Constellation file contents.
    pub points: String,
}

/// Everything needed to re-execute a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: u32,
    pub name: String,
    pub grid: SweepGrid,
    pub constellations: Vec<ManifestConstellation>,
    pub envelopes: Vec<EnvelopeSpec>,
}

#[derive(Debug, Clone)]
pub struct TestPlan {
    pub name: String,
    pub grid: SweepGrid,
    pub constellations: Vec<Constellation>,
    pub envelopes: Vec<EnvelopeSpec>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    /// Per-constellation rows followed by envelope rows.
    pub results: Vec<SimResult>,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Expands a single `*` in the file-name part of `token`; matches are sorted.
fn expand_token(c: &ConfigFile, token: &str) -> Result<Vec<String>> {
    if token.starts_with("qam:") {
        return Ok(vec![token.to_string()]);
    }
    let path = c.resolve(token);
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let Some((pre, post)) = file.split_once('*') else {
        return Ok(vec![path.display().to_string()]);
    };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut found: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.len() >= pre.len() + post.len() && n.starts_with(pre) && n.ends_with(post))
        .map(|n| dir.join(n).display().to_string())
        .collect();
    found.sort();
    if found.is_empty() {
        return Err(Error::Usage(format!("{token}: no constellation file matches")));
    }
    Ok(found)
}

impl TestPlan {
    /// `extra` are additional constellation tokens, e.g. from the command line.
    pub fn from_config(c: &ConfigFile, extra: &[String]) -> Result<Self> {
        c.check_keys(TEST_KEYS)?;
        let grid = SweepGrid::from_config(c)?;
        let mut tokens = Vec::new();
        for t in c.list("constellations").unwrap_or_default() {
            tokens.extend(expand_token(c, &t)?);
        }
        tokens.extend(extra.iter().cloned());
        if tokens.is_empty() {
            return Err(c.error("constellations", "no constellations to test"));
        }
        let constellations = tokens
            .iter()
            .map(|t| resolve_constellation(t))
            .collect::<Result<Vec<_>>>()?;
        let envelopes = c
            .list("envelope")
            .unwrap_or_default()
            .iter()
            .map(|p| EnvelopeSpec::for_family(p))
            .collect();
        let name = c.string("name").map_or_else(
            || {
                Path::new(c.label())
                    .file_stem()
                    .map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned())
            },
            str::to_string,
        );
        Ok(TestPlan {
            name,
            grid,
            constellations,
            envelopes,
            output_dir: c.path("output_dir").unwrap_or_else(|| c.resolve(".")),
        })
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            format: 1,
            name: self.name.clone(),
            grid: self.grid.clone(),
            constellations: self
                .constellations
                .iter()
                .map(|c| ManifestConstellation {
                    name: c.name().to_string(),
                    points: c.to_text(),
                })
                .collect(),
            envelopes: self.envelopes.clone(),
        }
    }

    pub fn from_manifest(m: &Manifest, output_dir: PathBuf) -> Result<Self> {
        if m.format != 1 {
            return Err(Error::Usage(format!("unsupported manifest format {}", m.format)));
        }
        let constellations = m
            .constellations
            .iter()
            .map(|mc| Constellation::from_text(mc.name.clone(), &mc.points).map_err(Error::Core))
            .collect::<Result<Vec<_>>>()?;
        Ok(TestPlan {
            name: m.name.clone(),
            grid: m.grid.clone(),
            constellations,
            envelopes: m.envelopes.clone(),
            output_dir,
        })
    }

    pub fn load_manifest(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)?;
        let dir = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Self::from_manifest(&m, dir)
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.csv", self.name))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.output_dir.join(format!("{}.manifest.json", self.name))
    }

    /// Runs the sweep and writes `<name>.csv` and `<name>.manifest.json`.
    pub fn execute(&self) -> Result<SweepOutput> {
        let mut results = run_test_sweep(&self.constellations, &self.grid)?;
        let mut env_rows = Vec::new();
        for e in &self.envelopes {
            env_rows.extend(envelope(&results, e)?);
        }
        results.extend(env_rows);
        let csv_path = self.csv_path();
        let manifest_path = self.manifest_path();
        write_file(&csv_path, &results_csv(&results, &self.grid)?)?;
        let mut json = serde_json::to_string_pretty(&self.manifest())?;
        json.push('\n');
        write_file(&manifest_path, json.as_bytes())?;
        Ok(SweepOutput {
            results,
            csv_path,
            manifest_path,
        })
    }
}
