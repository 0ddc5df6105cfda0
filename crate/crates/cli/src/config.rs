//! Effective run configuration: defaults, overlaid by an optional JSON
//! config file, overlaid by command-line flags. The result is frozen into
//! the output directory so any run can be reproduced from its artifacts.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gridres_core::network::{ExprSpec, LclParams, LclVariant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Output directory for all artifacts.
    pub out: PathBuf,
    /// Sweep-set manifest; defaults to `<out>/synth/manifest.json`.
    pub manifest: Option<PathBuf>,
    /// Directory of fitted model JSON files; defaults to `<out>/models`.
    pub models: Option<PathBuf>,

    pub fmin: f64,
    pub fmax: f64,
    pub step: f64,
    pub prominence: f64,

    /// "auto" or a fixed model order.
    pub fit_order: FitOrder,
    pub fit_tol: f64,
    pub fit_max_iter: usize,
    pub include_e: bool,

    pub f1_hz: f64,
    pub orders: Vec<u32>,

    pub seed: u64,
    pub snapshots: usize,
    pub spread: f64,
    pub spread_center_hz: f64,

    pub outlier_threshold: f64,
    pub allow_extended: bool,
    pub jobs: usize,

    pub lcl: LclParams,
    /// Inverter impedance beyond the inverter-side inductor.
    pub inv_z: ExprSpec,

    pub branch_counts: Vec<usize>,
    pub grid_r_ohm: f64,
    pub grid_l_henry: f64,

    /// Limit table path; the built-in third-harmonic table when absent.
    pub limits: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", untagged)]
pub enum FitOrder {
    Auto(AutoTag),
    Fixed(usize),
}

/// Serde helper so `"auto"` round-trips as a plain string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl FitOrder {
    pub fn auto() -> Self {
        FitOrder::Auto(AutoTag::Auto)
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.eq_ignore_ascii_case("auto") {
            return Ok(Self::auto());
        }
        let order: usize = text
            .parse()
            .with_context(|| format!("fit order must be `auto` or a number, got `{text}`"))?;
        Ok(FitOrder::Fixed(order))
    }
}

impl Default for Config {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            manifest: None,
            models: None,
            fmin: 1.0,
            fmax: 1000.0,
            step: 1.0,
            prominence: 1.5,
            fit_order: FitOrder::auto(),
            // measured sweeps carry percent-level noise; precision fits of
            // clean data should pass --tol explicitly
            fit_tol: 5e-3,
            fit_max_iter: 30,
            include_e: true,
            f1_hz: 50.0,
            orders: (1..=13).collect(),
            seed: 0,
            snapshots: 24,
            spread: 20.0,
            spread_center_hz: 600.0,
            outlier_threshold: 0.5,
            allow_extended: false,
            jobs: 1,
            lcl: LclParams {
                l1: 1e-3,
                l2: 1e-3,
                c: 10e-6,
                rd: 0.0,
                variant: LclVariant::Plain,
            },
            inv_z: ExprSpec::Short,
            branch_counts: vec![1, 2, 4, 9],
            grid_r_ohm: 0.05,
            grid_l_henry: 4e-3,
            limits: None,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("bad config JSON in {}", p.display()))
            }
        }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.manifest
            .clone()
            .unwrap_or_else(|| self.out.join("synth").join("manifest.json"))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.models.clone().unwrap_or_else(|| self.out.join("models"))
    }

    /// Writes the effective config into the output directory.
    pub fn freeze(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output dir {}", self.out.display()))?;
        let path = self.out.join("config.json");
        let text = serde_json::to_string_pretty(self).context("serialize config")?;
        std::fs::write(&path, text.as_bytes())
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_json() {
        let cfg = Config::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: Config = serde_json::from_str(&text).unwrap();
        assert_eq!(back.fmax, cfg.fmax);
        assert_eq!(back.fit_order, FitOrder::auto());
        assert_eq!(back.branch_counts, cfg.branch_counts);
    }

    #[test]
    fn fit_order_parses_auto_and_numbers() {
        assert_eq!(FitOrder::parse("auto").unwrap(), FitOrder::auto());
        assert_eq!(FitOrder::parse("6").unwrap(), FitOrder::Fixed(6));
        assert!(FitOrder::parse("six").is_err());
    }

    #[test]
    fn partial_config_file_fills_defaults() {
        let cfg: Config = serde_json::from_str(r#"{"fmax": 800.0, "fit_order": 4}"#).unwrap();
        assert_eq!(cfg.fmax, 800.0);
        assert_eq!(cfg.fit_order, FitOrder::Fixed(4));
        assert_eq!(cfg.fmin, 1.0);
    }
}
