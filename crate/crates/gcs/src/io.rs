//! Files: link description, constellations, loss histories.

use std::fs;
use std::path::Path;

use gcs_core::channel::{LinkParams, NlinCoefficients};
use gcs_core::constellation::{make_square_qam, Constellation};

use crate::config::ConfigFile;
use crate::{Error, Result};

/// Extension of constellation files.
pub const CONSTELLATION_EXT: &str = "const";

const DEFAULT_LINK: &str = include_str!("../data/link.conf");

const LINK_KEYS: &[&str] = &[
    "symbol_rate_gbd",
    "carrier_thz",
    "channels",
    "spacing_ghz",
    "polarizations",
    "spans",
    "span_km",
    "attenuation_db_per_km",
    "amp_gain_db",
    "gamma_per_w_km",
    "dispersion_ps_per_nm_km",
    "kappa0",
    "kappa1",
    "kappa2",
];

/// Fixed link constants plus NLIN coefficients. The operating point (noise
/// figure, launch power) is set per job.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LinkModel {
    pub symbol_rate_gbd: f64,
    pub carrier_thz: f64,
    pub channels: u32,
    pub spacing_ghz: f64,
    pub polarizations: u32,
    pub spans: u32,
    pub span_km: f64,
    pub attenuation_db_per_km: f64,
    pub amp_gain_db: f64,
    pub gamma_per_w_km: f64,
    pub dispersion_ps_per_nm_km: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl LinkModel {
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        c.check_keys(LINK_KEYS)?;
        let f = |k: &str| -> Result<f64> {
            c.value::<f64>(k)?.ok_or_else(|| c.error(k, "missing"))
        };
        let u = |k: &str| -> Result<u32> {
            c.value::<u32>(k)?.ok_or_else(|| c.error(k, "missing"))
        };
        let model = LinkModel {
            symbol_rate_gbd: f("symbol_rate_gbd")?,
            carrier_thz: f("carrier_thz")?,
            channels: u("channels")?,
            spacing_ghz: f("spacing_ghz")?,
            polarizations: u("polarizations")?,
            spans: u("spans")?,
            span_km: f("span_km")?,
            attenuation_db_per_km: f("attenuation_db_per_km")?,
            amp_gain_db: f("amp_gain_db")?,
            gamma_per_w_km: f("gamma_per_w_km")?,
            dispersion_ps_per_nm_km: f("dispersion_ps_per_nm_km")?,
            kappa0: f("kappa0")?,
            kappa1: f("kappa1")?,
            kappa2: f("kappa2")?,
        };
        model.link(6.0, 0.0).validate().map_err(|e| c.error("link", e.to_string()))?;
        model.coefficients().validate().map_err(|e| c.error("kappa0", e.to_string()))?;
        Ok(model)
    }

    /// The checked-in reference link.
    pub fn reference() -> Self {
        let c = ConfigFile::parse("data/link.conf", DEFAULT_LINK).expect("bundled link file parses");
        LinkModel::from_config(&c).expect("bundled link file is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        LinkModel::from_config(&ConfigFile::load(path)?)
    }

    pub fn link(&self, noise_figure_db: f64, launch_power_dbm: f64) -> LinkParams {
        LinkParams {
            symbol_rate_hz: self.symbol_rate_gbd * 1e9,
            carrier_freq_hz: self.carrier_thz * 1e12,
            num_channels: self.channels,
            channel_spacing_hz: self.spacing_ghz * 1e9,
            num_polarizations: self.polarizations,
            num_spans: self.spans,
            span_length_km: self.span_km,
            attenuation_db_per_km: self.attenuation_db_per_km,
            amp_gain_db: self.amp_gain_db,
            nonlinear_coeff_per_w_km: self.gamma_per_w_km,
            dispersion_ps_per_nm_km: self.dispersion_ps_per_nm_km,
            noise_figure_db,
            launch_power_dbm,
        }
    }

    pub fn coefficients(&self) -> NlinCoefficients {
        NlinCoefficients {
            kappa0: self.kappa0,
            kappa1: self.kappa1,
            kappa2: self.kappa2,
        }
    }
}

pub fn read_constellation(path: &Path) -> Result<Constellation> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    Constellation::from_text(name, &text).map_err(|source| Error::Constellation {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_constellation(path: &Path, c: &Constellation) -> Result<()> {
    write_file(path, c.to_text().as_bytes())
}

/// `qam:<M>` names a square QAM; anything else is a constellation file.
pub fn resolve_constellation(token: &str) -> Result<Constellation> {
    if let Some(m) = token.strip_prefix("qam:") {
        let m: usize = m
            .parse()
            .map_err(|_| Error::Usage(format!("bad QAM order in {token:?}")))?;
        return make_square_qam(m).map_err(|e| Error::Usage(format!("{token}: {e}")));
    }
    read_constellation(Path::new(token))
}

pub fn write_loss_csv(path: &Path, losses: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_file(path, &bytes)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
