//! Series/parallel resonance detection and magnification mapping.
//!
//! A dense |Z| scan finds local extrema above a prominence threshold, each
//! refined by golden-section search inside its bracketing grid cell. Minima
//! are series resonances (current sinks), maxima parallel resonances
//! (current-to-voltage amplifiers). Magnitude extrema rule classification;
//! the reactance zero-crossing slope is cross-checked and disagreements
//! surface as a conflict flag instead of being resolved silently.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::fitting::RationalModel;
use crate::network::{
    branch_scaled, lcl_expr, pcc_background_voltage, Evaluable, HarmonicNetwork, ImpedanceExpr,
    LclParams, LclSide, NetworkError,
};

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("invalid scan range: {0}")]
    InvalidRange(String),
    #[error("impedance not evaluable over the scan range ({failures} of {points} grid points failed)")]
    NotEvaluable { failures: usize, points: usize },
    #[error("need at least one snapshot")]
    NoSnapshots,
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceKind {
    /// Local minimum of |Z|: reactances cancel in a branch.
    Series,
    /// Local maximum of |Z|: admittances cancel in a tank.
    Parallel,
}

impl ResonanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResonanceKind::Series => "series",
            ResonanceKind::Parallel => "parallel",
        }
    }
}

/// One detected resonance.
#[derive(Debug, Clone)]
pub struct ResonancePoint {
    pub frequency: f64,
    pub kind: ResonanceKind,
    /// |Z| at the refined extremum; +inf for an exact singularity.
    pub magnitude: f64,
    /// Contrast against the nearest opposing extremum (or range edge)
    /// baseline; >= 1 for genuine extrema, +inf for singularities.
    pub prominence: f64,
    /// Center frequency over -3 dB bandwidth; None when a band edge
    /// leaves the scan range.
    pub q_estimate: Option<f64>,
    /// Set when the reactance zero-crossing slope disagrees with the
    /// magnitude-extremum classification.
    pub classification_conflict: bool,
}

/// Scan parameters; defaults cover 1-1000 Hz at 1 Hz with prominence 1.5.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub f_min: f64,
    pub f_max: f64,
    pub step: f64,
    pub prominence_min: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            f_min: 1.0,
            f_max: 1000.0,
            step: 1.0,
            prominence_min: 1.5,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<(), ResonanceError> {
        if !(self.f_min.is_finite() && self.f_max.is_finite() && self.f_min < self.f_max) {
            return Err(ResonanceError::InvalidRange(format!(
                "f_min {} must be below f_max {}",
                self.f_min, self.f_max
            )));
        }
        if !(self.step > 0.0 && self.step <= self.f_max - self.f_min) {
            return Err(ResonanceError::InvalidRange(format!(
                "step {} must be positive and at most the span",
                self.step
            )));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut k = 0u64;
        loop {
            let f = self.f_min + k as f64 * self.step;
            if f > self.f_max * (1.0 + 1e-12) {
                break;
            }
            grid.push(f);
            k += 1;
        }
        let span = self.f_max - self.f_min;
        if *grid.last().unwrap() < self.f_max - 1e-9 * span {
            grid.push(self.f_max);
        }
        grid
    }
}

/// Scans |Z| over the configured grid and returns refined, classified
/// resonances sorted by frequency. Exact singularities (unbounded |Z| at a
/// grid point) are recorded as parallel resonances with infinite magnitude
/// and prominence.
pub fn scan_resonances<Z: Evaluable + ?Sized>(
    z: &Z,
    cfg: &ScanConfig,
) -> Result<Vec<ResonancePoint>, ResonanceError> {
    cfg.validate()?;
    let freqs = cfg.grid();
    let n = freqs.len();

    let mut mags = vec![f64::INFINITY; n];
    let mut singular = vec![false; n];
    let mut failures = 0usize;
    for i in 0..n {
        match z.impedance(freqs[i]) {
            Ok(val) => mags[i] = val.norm(),
            Err(_) => {
                singular[i] = true;
                failures += 1;
            }
        }
    }
    // isolated singular points are resonances; widespread failure means the
    // expression simply is not evaluable here
    if failures > 3.max(n / 100) {
        return Err(ResonanceError::NotEvaluable {
            failures,
            points: n,
        });
    }

    let is_max = |i: usize| -> bool {
        i > 0
            && i + 1 < n
            && mags[i] >= mags[i - 1]
            && mags[i] >= mags[i + 1]
            && (mags[i] > mags[i - 1] || mags[i] > mags[i + 1])
    };
    let is_min = |i: usize| -> bool {
        i > 0
            && i + 1 < n
            && mags[i] <= mags[i - 1]
            && mags[i] <= mags[i + 1]
            && (mags[i] < mags[i - 1] || mags[i] < mags[i + 1])
    };

    let mut points = Vec::new();
    for i in 0..n {
        if singular[i] {
            points.push(ResonancePoint {
                frequency: freqs[i],
                kind: ResonanceKind::Parallel,
                magnitude: f64::INFINITY,
                prominence: f64::INFINITY,
                q_estimate: None,
                classification_conflict: false,
            });
            continue;
        }
        let kind = if is_max(i) {
            ResonanceKind::Parallel
        } else if is_min(i) {
            ResonanceKind::Series
        } else {
            continue;
        };

        // baseline: nearest opposing extremum per side, else the range edge;
        // the weaker-contrast side governs
        let maximum = kind == ResonanceKind::Parallel;
        let opposing = |j: usize| if maximum { is_min(j) } else { is_max(j) };
        let mut left = 0;
        for j in (1..i).rev() {
            if opposing(j) {
                left = j;
                break;
            }
        }
        let mut right = n - 1;
        for j in (i + 1)..(n - 1) {
            if opposing(j) {
                right = j;
                break;
            }
        }
        let prominence = if maximum {
            mags[i] / mags[left].max(mags[right])
        } else {
            mags[left].min(mags[right]) / mags[i]
        };
        if !(prominence >= cfg.prominence_min) {
            continue;
        }

        // golden-section refinement inside the bracketing cell
        let eval_mag = |f: f64| z.impedance(f).ok().map(|v| v.norm());
        let refined = golden_refine(freqs[i - 1], freqs[i + 1], maximum, cfg.step / 50.0, &eval_mag);
        let (frequency, magnitude) = match refined {
            Some((f_r, m_r)) => {
                let better = if maximum { m_r >= mags[i] } else { m_r <= mags[i] };
                if better {
                    (f_r, m_r)
                } else {
                    (freqs[i], mags[i])
                }
            }
            None => (freqs[i], mags[i]),
        };

        let classification_conflict =
            reactance_conflict(z, frequency, cfg, kind).unwrap_or(false);
        let q_estimate = q_from_bandwidth(&freqs, &mags, i, frequency, magnitude, maximum);

        points.push(ResonancePoint {
            frequency,
            kind,
            magnitude,
            prominence,
            q_estimate,
            classification_conflict,
        });
    }

    points.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    Ok(points)
}

/// Golden-section search for the extremum of |Z| in [a, b]; the final
/// interval is below `tol`, putting the midpoint within tol/2 of the
/// bracketed optimum.
fn golden_refine(
    a: f64,
    b: f64,
    maximize: bool,
    tol: f64,
    eval: &dyn Fn(f64) -> Option<f64>,
) -> Option<(f64, f64)> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > tol {
        let keep_left = if maximize { fc > fd } else { fc < fd };
        if keep_left {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = eval(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    eval(mid).map(|m| (mid, m))
}

/// Sign of the reactance slope through zero near the refined point: a
/// rising crossing implies series, a falling one parallel. None when the
/// probes leave the scan range, fail, or there is no crossing.
fn reactance_conflict<Z: Evaluable + ?Sized>(
    z: &Z,
    f: f64,
    cfg: &ScanConfig,
    kind: ResonanceKind,
) -> Option<bool> {
    let (fl, fr) = (f - cfg.step, f + cfg.step);
    if fl < cfg.f_min || fr > cfg.f_max {
        return None;
    }
    let xl = z.impedance(fl).ok()?.im;
    let xr = z.impedance(fr).ok()?.im;
    if xl == 0.0 || xr == 0.0 || xl.signum() == xr.signum() {
        return None;
    }
    let implied = if xr > xl {
        ResonanceKind::Series
    } else {
        ResonanceKind::Parallel
    };
    Some(implied != kind)
}

/// -3 dB bandwidth on the scan grid with linear crossing interpolation;
/// None when either band edge exits the scanned range.
fn q_from_bandwidth(
    freqs: &[f64],
    mags: &[f64],
    i: usize,
    f_center: f64,
    magnitude: f64,
    maximum: bool,
) -> Option<f64> {
    let level = if maximum {
        magnitude / std::f64::consts::SQRT_2
    } else {
        magnitude * std::f64::consts::SQRT_2
    };
    if !level.is_finite() {
        return None;
    }
    let crossed = |v: f64| if maximum { v < level } else { v > level };

    // walk outwards to the first grid sample beyond the level
    let mut lo = None;
    for j in (0..i).rev() {
        if crossed(mags[j]) {
            let t = (level - mags[j + 1]) / (mags[j] - mags[j + 1]);
            lo = Some(freqs[j + 1] + t * (freqs[j] - freqs[j + 1]));
            break;
        }
    }
    let mut hi = None;
    for j in (i + 1)..freqs.len() {
        if crossed(mags[j]) {
            let t = (level - mags[j - 1]) / (mags[j] - mags[j - 1]);
            hi = Some(freqs[j - 1] + t * (freqs[j] - freqs[j - 1]));
            break;
        }
    }
    match (lo, hi) {
        (Some(lo), Some(hi)) if hi > lo => Some(f_center / (hi - lo)),
        _ => None,
    }
}

/// Highest-prominence parallel resonance, ties broken by lower frequency.
pub fn dominant_parallel(points: &[ResonancePoint]) -> Option<&ResonancePoint> {
    points
        .iter()
        .filter(|p| p.kind == ResonanceKind::Parallel)
        .max_by(|a, b| {
            a.prominence
                .total_cmp(&b.prominence)
                .then(b.frequency.total_cmp(&a.frequency))
        })
}

/// Per-snapshot resonances of the composed PCC node.
#[derive(Debug, Clone)]
pub struct DriftRow {
    pub snapshot_id: String,
    pub resonances: Vec<ResonancePoint>,
    /// Dominant parallel resonance frequency, if any.
    pub dominant_freq_hz: Option<f64>,
}

/// Extremes of the dominant parallel resonance across snapshots.
#[derive(Debug, Clone, Default)]
pub struct DriftSummary {
    pub min: Option<(String, f64)>,
    pub max: Option<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct DriftTable {
    pub rows: Vec<DriftRow>,
    pub summary: DriftSummary,
}

/// Standard per-snapshot node: grid branch = the fitted model as measured,
/// inverter branch = the inverter-side inductor in series with `inv_z`,
/// shunt branch from the LCL parameters.
pub fn compose_network(
    model: &RationalModel,
    lcl: &LclParams,
    inv_z: &ImpedanceExpr,
) -> Result<HarmonicNetwork, ResonanceError> {
    let fragments = lcl_expr(lcl, LclSide::InverterFacing)?;
    Ok(HarmonicNetwork {
        z_grid: ImpedanceExpr::Model(model.clone()),
        z_inv: ImpedanceExpr::series(vec![fragments.z_series, inv_z.clone()]),
        z_shunt: fragments.z_shunt,
    })
}

/// Builds the PCC node per snapshot (see [`compose_network`]) and scans its
/// parallel impedance, summarizing how far the dominant parallel resonance
/// drifts across snapshots.
pub fn resonance_drift(
    snapshots: &[(String, RationalModel)],
    lcl: &LclParams,
    inv_z: &ImpedanceExpr,
    cfg: &ScanConfig,
) -> Result<DriftTable, ResonanceError> {
    if snapshots.is_empty() {
        return Err(ResonanceError::NoSnapshots);
    }
    let mut rows = Vec::with_capacity(snapshots.len());
    for (id, model) in snapshots {
        let net = compose_network(model, lcl, inv_z)?;
        let node = ImpedanceExpr::parallel(vec![net.z_grid, net.z_inv, net.z_shunt]);
        let resonances = scan_resonances(&node, cfg)?;
        let dominant_freq_hz = dominant_parallel(&resonances).map(|p| p.frequency);
        rows.push(DriftRow {
            snapshot_id: id.clone(),
            resonances,
            dominant_freq_hz,
        });
    }

    let mut summary = DriftSummary::default();
    for row in &rows {
        if let Some(f) = row.dominant_freq_hz {
            if summary.min.as_ref().map(|(_, m)| f < *m).unwrap_or(true) {
                summary.min = Some((row.snapshot_id.clone(), f));
            }
            if summary.max.as_ref().map(|(_, m)| f > *m).unwrap_or(true) {
                summary.max = Some((row.snapshot_id.clone(), f));
            }
        }
    }
    Ok(DriftTable { rows, summary })
}

/// Dominant parallel resonance of grid || n-scaled downstream branch per
/// branch count; rows without a detected resonance carry None.
#[derive(Debug, Clone)]
pub struct BranchCountRow {
    pub n: usize,
    pub dominant_freq_hz: Option<f64>,
}

pub fn branch_count_sweep(
    base_branch: &ImpedanceExpr,
    z_grid: &ImpedanceExpr,
    n_values: &[usize],
    cfg: &ScanConfig,
) -> Result<Vec<BranchCountRow>, ResonanceError> {
    if n_values.is_empty() {
        return Err(ResonanceError::InvalidRange("n_values is empty".into()));
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let downstream = branch_scaled(base_branch, n)?;
        let node = ImpedanceExpr::parallel(vec![z_grid.clone(), downstream]);
        let resonances = scan_resonances(&node, cfg)?;
        rows.push(BranchCountRow {
            n,
            dominant_freq_hz: dominant_parallel(&resonances).map(|p| p.frequency),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Harmonic current injected at the node; gain is |Z(h f1)| / |Z(f1)|.
    Injection,
    /// Background voltage behind the grid branch; gain is |v_pcc / v_h|.
    Background,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Injection => "injection",
            SourceKind::Background => "background",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapCell {
    pub row_key: String,
    pub order: u32,
    /// None marks a cell whose evaluation degenerated.
    pub gain: Option<f64>,
}

/// Per-(row, harmonic order) gain table.
#[derive(Debug, Clone)]
pub struct MagnificationMap {
    pub source: SourceKind,
    pub f1_hz: f64,
    pub cells: Vec<MapCell>,
}

impl MagnificationMap {
    /// `row_key,order,gain,status` rows; failed cells keep an empty gain.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_key,order,gain,status\n");
        for cell in &self.cells {
            match cell.gain {
                Some(g) => {
                    let _ = writeln!(out, "{},{},{},ok", cell.row_key, cell.order, g);
                }
                None => {
                    let _ = writeln!(out, "{},{},,failed", cell.row_key, cell.order);
                }
            }
        }
        out
    }
}

/// Evaluates harmonic gains for every network at every order. Rows are
/// ordered by key (lexical), then ascending order; failed cells are kept in
/// place so the map shape stays predictable.
pub fn magnification_map(
    networks: &[(String, HarmonicNetwork)],
    f1_hz: f64,
    orders: &[u32],
    source: SourceKind,
) -> Result<MagnificationMap, ResonanceError> {
    if orders.is_empty() || orders.iter().any(|&h| h == 0) {
        return Err(ResonanceError::InvalidRange(
            "orders must be nonempty, each >= 1".into(),
        ));
    }
    if !(f1_hz > 0.0 && f1_hz.is_finite()) {
        return Err(ResonanceError::InvalidRange(format!(
            "fundamental must be positive, got {f1_hz}"
        )));
    }
    let mut orders: Vec<u32> = orders.to_vec();
    orders.sort_unstable();
    orders.dedup();

    let mut keys: Vec<usize> = (0..networks.len()).collect();
    keys.sort_by(|&a, &b| networks[a].0.cmp(&networks[b].0));

    let mut cells = Vec::with_capacity(networks.len() * orders.len());
    for &idx in &keys {
        let (key, net) = &networks[idx];
        let z_fund = net.node_impedance(f1_hz).map(|z| z.norm());
        for &h in &orders {
            let f = f1_hz * h as f64;
            let gain = match source {
                SourceKind::Injection => match (&z_fund, net.node_impedance(f)) {
                    (Ok(z1), Ok(zh)) if *z1 > 0.0 => Some(zh.norm() / z1),
                    _ => None,
                },
                SourceKind::Background => {
                    pcc_background_voltage(net, Complex64::new(1.0, 0.0), f)
                        .ok()
                        .map(|r| r.v_pcc.norm())
                }
            };
            cells.push(MapCell {
                row_key: key.clone(),
                order: h,
                gain,
            });
        }
    }
    Ok(MagnificationMap {
        source,
        f1_hz,
        cells,
    })
}

/// `snapshot_id,kind,freq_hz,magnitude_ohm,prominence,q` rows; q stays
/// empty when the bandwidth estimate is unavailable.
pub fn resonance_report_csv<'a>(
    rows: impl IntoIterator<Item = (&'a str, &'a [ResonancePoint])>,
) -> String {
    let mut out = String::from("snapshot_id,kind,freq_hz,magnitude_ohm,prominence,q\n");
    for (id, points) in rows {
        for p in points {
            let q = p.q_estimate.map(|q| q.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                id,
                p.kind.as_str(),
                p.frequency,
                p.magnitude,
                p.prominence,
                q
            );
        }
    }
    out
}
