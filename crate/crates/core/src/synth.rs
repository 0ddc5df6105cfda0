//! Deterministic synthetic sweep sets.
//!
//! Stands in for unpublished field measurements. Each snapshot is sampled
//! from a randomized RLC ladder sharing one qualitative shape: an inductive
//! base, a series-resonant dip branch (sharp plunge, negative-reactance
//! range), a low-frequency tank, and a main tank centered on the spread
//! frequency whose peak height varies across snapshots by the configured
//! ratio. The last snapshot is a deliberate outlier: globally scaled and
//! with its features shifted, the way one inconsistent field measurement
//! disagrees with an otherwise correlated campaign.
//!
//! Everything is drawn from a ChaCha8 stream seeded by the config, so the
//! same seed regenerates byte-identical data.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{ImpedanceSweep, IngestError};
use crate::network::{eval_expr, ImpedanceExpr, NetworkError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Total snapshot count, outlier included.
    pub snapshots: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub step: f64,
    /// Target magnitude spread ratio across snapshots at `spread_center_hz`.
    pub spread: f64,
    pub spread_center_hz: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            snapshots: 24,
            f_min: 5.0,
            f_max: 1000.0,
            step: 5.0,
            spread: 20.0,
            spread_center_hz: 600.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.snapshots < 3 {
            return Err(SynthError::InvalidConfig(
                "need at least 3 snapshots (outlier scoring needs 3)".into(),
            ));
        }
        if !(self.f_min > 0.0 && self.f_max > self.f_min && self.step > 0.0) {
            return Err(SynthError::InvalidConfig(format!(
                "bad grid {}..{} step {}",
                self.f_min, self.f_max, self.step
            )));
        }
        if !(self.spread >= 1.0 && self.spread.is_finite()) {
            return Err(SynthError::InvalidConfig(format!(
                "spread ratio must be >= 1, got {}",
                self.spread
            )));
        }
        if !(self.spread_center_hz > self.f_min && self.spread_center_hz < self.f_max) {
            return Err(SynthError::InvalidConfig(
                "spread center must lie inside the grid".into(),
            ));
        }
        Ok(())
    }

    /// Zero-padded snapshot id, stable across runs.
    pub fn snapshot_id(&self, index: usize) -> String {
        let width = (self.snapshots.saturating_sub(1)).to_string().len().max(2);
        format!("snap_{index:0width$}")
    }

    /// The deliberate outlier is always the last snapshot.
    pub fn outlier_index(&self) -> usize {
        self.snapshots - 1
    }
}

/// Fixed ladder element values; per-snapshot variation comes from the level
/// factor, the main-tank height, and mild jitter on the reactive elements.
const BASE_R: f64 = 0.5;
const BASE_L: f64 = 1.2e-3;
const DIP_HZ: f64 = 450.0;
const DIP_L: f64 = 10e-3;
const LOW_TANK_HZ: f64 = 100.0;
const LOW_TANK_L: f64 = 5e-3;
const MAIN_TANK_L: f64 = 3e-3;
const MAIN_TANK_BASE_R: f64 = 30.0;
/// Headroom so the realized envelope ratio clears the configured spread.
const SPREAD_MARGIN: f64 = 1.6;
const OUTLIER_LEVEL: f64 = 6.0;

struct SnapshotShape {
    level: f64,
    main_tank_r: f64,
    main_tank_hz: f64,
    dip_hz: f64,
    low_tank_hz: f64,
}

fn shape_expr(shape: &SnapshotShape, rng: &mut ChaCha8Rng) -> ImpedanceExpr {
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(0.9..1.1);
    let tank = |center_hz: f64, l: f64, r: f64| {
        let w0 = 2.0 * PI * center_hz;
        ImpedanceExpr::parallel(vec![
            ImpedanceExpr::Resistor(r),
            ImpedanceExpr::Inductor(l),
            ImpedanceExpr::Capacitor(1.0 / (w0 * w0 * l)),
        ])
    };

    let main_path = ImpedanceExpr::series(vec![
        ImpedanceExpr::Resistor(BASE_R * jitter(rng)),
        ImpedanceExpr::Inductor(BASE_L * jitter(rng)),
    ]);
    let dip_l = DIP_L * jitter(rng);
    let w_dip = 2.0 * PI * shape.dip_hz;
    let dip_branch = ImpedanceExpr::series(vec![
        ImpedanceExpr::Inductor(dip_l),
        ImpedanceExpr::Capacitor(1.0 / (w_dip * w_dip * dip_l)),
        ImpedanceExpr::Resistor(rng.gen_range(0.25..0.45)),
    ]);
    let core = ImpedanceExpr::parallel(vec![main_path, dip_branch]);
    let low_tank = tank(
        shape.low_tank_hz,
        LOW_TANK_L * jitter(rng),
        rng.gen_range(1.0..3.0),
    );
    // the main tank carries the spread: its height target is absolute, so
    // compensate the level factor applied to the whole ladder
    let main_tank = tank(
        shape.main_tank_hz,
        MAIN_TANK_L * jitter(rng),
        shape.main_tank_r / shape.level,
    );
    ImpedanceExpr::Scaled(
        Box::new(ImpedanceExpr::series(vec![core, low_tank, main_tank])),
        shape.level,
    )
}

/// Generates the snapshot set. The same config (seed included) regenerates
/// identical sweeps; serializing them therefore yields byte-identical files.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<ImpedanceSweep>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let regulars = cfg.snapshots - 1;

    // log-spaced level factors and main-tank heights, dealt out in a
    // shuffled order so neither grows monotonically with the snapshot index
    let logspace = |a: f64, b: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![(a * b).sqrt()];
        }
        (0..n)
            .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    };
    let mut levels = logspace(0.7, 2.1, regulars);
    let mut heights = logspace(
        MAIN_TANK_BASE_R,
        MAIN_TANK_BASE_R * SPREAD_MARGIN * cfg.spread,
        regulars,
    );
    levels.shuffle(&mut rng);
    heights.shuffle(&mut rng);

    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let f = cfg.f_min + k as f64 * cfg.step;
        if f > cfg.f_max * (1.0 + 1e-12) {
            break;
        }
        grid.push(f);
        k += 1;
    }

    let mut sweeps = Vec::with_capacity(cfg.snapshots);
    for idx in 0..cfg.snapshots {
        let outlier = idx == cfg.outlier_index();
        let shape = if outlier {
            SnapshotShape {
                level: OUTLIER_LEVEL,
                main_tank_r: MAIN_TANK_BASE_R * OUTLIER_LEVEL,
                main_tank_hz: cfg.spread_center_hz * 0.92,
                dip_hz: DIP_HZ * 0.95,
                low_tank_hz: LOW_TANK_HZ * 1.1,
            }
        } else {
            SnapshotShape {
                level: levels[idx],
                main_tank_r: heights[idx],
                main_tank_hz: cfg.spread_center_hz,
                dip_hz: DIP_HZ,
                low_tank_hz: LOW_TANK_HZ,
            }
        };
        let expr = shape_expr(&shape, &mut rng);

        let mut samples = Vec::with_capacity(grid.len());
        for &f in &grid {
            let z = eval_expr(&expr, f)?;
            // mild multiplicative measurement noise
            let nr = 1.0 + rng.gen_range(-0.005..0.005);
            let nx = 1.0 + rng.gen_range(-0.005..0.005);
            samples.push(Complex64::new(z.re * nr, z.im * nx));
        }

        let metadata = BTreeMap::from([
            ("synthetic".to_string(), "true".to_string()),
            (
                "role".to_string(),
                if outlier { "outlier" } else { "regular" }.to_string(),
            ),
        ]);
        sweeps.push(ImpedanceSweep::new(
            cfg.snapshot_id(idx),
            grid.clone(),
            samples,
            metadata,
        )?);
    }
    Ok(sweeps)
}
