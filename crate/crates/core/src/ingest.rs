//! Measured impedance sweep ingestion and characterization.
//!
//! Sweeps arrive as CSV in Cartesian form, one `freq_hz,r_ohm,x_ohm` row per
//! frequency. This module parses and validates them, derives polar views,
//! locates negative-reactance ranges, and compares snapshot sets through
//! min/max magnitude envelopes and robust log-magnitude outlier scores.
//!
//! Interpolation onto common grids is always linear in resistance and
//! reactance separately, never in magnitude/phase, so the Cartesian
//! measurement semantics are preserved and no phase unwrapping is needed.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declared sweep range a parsed file must stay within unless extended
/// ranges are explicitly allowed.
pub const DEFAULT_SWEEP_RANGE: (f64, f64) = (0.0, 1000.0);

/// Default outlier score above which a snapshot is flagged
/// (0.5 in log10 magnitude, roughly a factor-3 deviation).
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 0.5;

const SWEEP_HEADER: &str = "freq_hz,r_ohm,x_ohm";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: frequency {freq} Hz is below previous row's {prev} Hz")]
    NonMonotonicFrequency { line: usize, prev: f64, freq: f64 },
    #[error("line {line}: duplicate frequency {freq} Hz")]
    DuplicateFrequency { line: usize, freq: f64 },
    #[error("sweep `{id}` needs at least 2 data rows")]
    EmptySweep { id: String },
    #[error("line {line}: non-finite sample")]
    NonFiniteSample { line: usize },
    #[error(
        "line {line}: frequency {freq} Hz outside declared sweep range \
         {lo}..{hi} Hz (use --allow-extended to accept)"
    )]
    FrequencyOutOfRange {
        line: usize,
        freq: f64,
        lo: f64,
        hi: f64,
    },
    #[error("bad or missing header, expected `{SWEEP_HEADER}`")]
    BadHeader,
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },
    #[error("snapshot frequency ranges do not overlap: grid [{lo}, {hi}] Hz is empty")]
    GridOutsideSweepRange { lo: f64, hi: f64 },
    #[error("grid step must be positive and finite, got {0}")]
    InvalidGridStep(f64),
    #[error("bad sweep-set manifest: {0}")]
    BadManifest(String),
}

/// One measured frequency-sweep snapshot of a driving-point impedance.
///
/// Frequencies are strictly increasing, non-negative hertz; samples hold
/// resistance in the real part and reactance in the imaginary part, in ohms.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSweep {
    snapshot_id: String,
    frequencies: Vec<f64>,
    samples: Vec<Complex64>,
    metadata: BTreeMap<String, String>,
}

impl ImpedanceSweep {
    /// Builds a sweep, validating the ordering/finiteness invariants.
    /// The declared-range check is a parse-time concern, not enforced here.
    pub fn new(
        snapshot_id: impl Into<String>,
        frequencies: Vec<f64>,
        samples: Vec<Complex64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, IngestError> {
        let snapshot_id = snapshot_id.into();
        if frequencies.len() < 2 || frequencies.len() != samples.len() {
            return Err(IngestError::EmptySweep { id: snapshot_id });
        }
        for (i, (&f, z)) in frequencies.iter().zip(&samples).enumerate() {
            let line = i + 2; // header is line 1
            if !f.is_finite() || !z.re.is_finite() || !z.im.is_finite() {
                return Err(IngestError::NonFiniteSample { line });
            }
            if f < 0.0 {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("negative frequency {f}"),
                });
            }
            if i > 0 {
                let prev = frequencies[i - 1];
                if f == prev {
                    return Err(IngestError::DuplicateFrequency { line, freq: f });
                }
                if f < prev {
                    return Err(IngestError::NonMonotonicFrequency { line, prev, freq: f });
                }
            }
        }
        if frequencies[0] == 0.0 && samples[0].im != 0.0 {
            log::warn!(
                "sweep `{snapshot_id}`: zero-frequency sample has nonzero reactance \
                 {}; keeping it (measurement artifact)",
                samples[0].im
            );
        }
        Ok(Self {
            snapshot_id,
            frequencies,
            samples,
            metadata,
        })
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// First/last frequency of the sweep in Hz.
    pub fn range(&self) -> (f64, f64) {
        (self.frequencies[0], *self.frequencies.last().unwrap())
    }

    /// Impedance at `f`, linear interpolation of R and X between the two
    /// bracketing samples. `f` must lie within the sweep range.
    pub fn interpolate(&self, f: f64) -> Complex64 {
        interp_complex(&self.frequencies, &self.samples, f)
    }
}

/// Parse-time options for [`parse_sweep_with`].
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Declared sweep range in Hz; rows outside are rejected.
    pub sweep_range: (f64, f64),
    /// Accept rows outside the declared range.
    pub allow_extended: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            sweep_range: DEFAULT_SWEEP_RANGE,
            allow_extended: false,
        }
    }
}

/// Parses `freq_hz,r_ohm,x_ohm` CSV with default options.
pub fn parse_sweep(text: &str, snapshot_id: &str) -> Result<ImpedanceSweep, IngestError> {
    parse_sweep_with(text, snapshot_id, &ParseOptions::default())
}

/// Parses `freq_hz,r_ohm,x_ohm` CSV. Rows must be sorted; ordering
/// violations are reported, never silently re-sorted. LF and CRLF both
/// accepted; blank lines ignored.
pub fn parse_sweep_with(
    text: &str,
    snapshot_id: &str,
    opts: &ParseOptions,
) -> Result<ImpedanceSweep, IngestError> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(IngestError::BadHeader),
        }
    };
    if header.trim() != SWEEP_HEADER {
        return Err(IngestError::BadHeader);
    }

    let mut frequencies = Vec::new();
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based for diagnostics
        let row = raw.trim();
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let mut next_field = |name: &str| -> Result<f64, IngestError> {
            let field = fields.next().ok_or_else(|| IngestError::MalformedRow {
                line,
                reason: format!("missing {name}"),
            })?;
            field.trim().parse::<f64>().map_err(|_| IngestError::MalformedRow {
                line,
                reason: format!("bad numeric {name}: `{}`", field.trim()),
            })
        };
        let freq = next_field("freq_hz")?;
        let r = next_field("r_ohm")?;
        let x = next_field("x_ohm")?;
        if fields.next().is_some() {
            return Err(IngestError::MalformedRow {
                line,
                reason: "too many fields".into(),
            });
        }

        if !freq.is_finite() || !r.is_finite() || !x.is_finite() {
            return Err(IngestError::NonFiniteSample { line });
        }
        if freq < 0.0 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("negative frequency {freq}"),
            });
        }
        let (lo, hi) = opts.sweep_range;
        if !opts.allow_extended && (freq < lo || freq > hi) {
            return Err(IngestError::FrequencyOutOfRange { line, freq, lo, hi });
        }
        if let Some(&prev) = frequencies.last() {
            if freq == prev {
                return Err(IngestError::DuplicateFrequency { line, freq });
            }
            if freq < prev {
                return Err(IngestError::NonMonotonicFrequency { line, prev, freq });
            }
        }
        frequencies.push(freq);
        samples.push(Complex64::new(r, x));
    }

    ImpedanceSweep::new(snapshot_id, frequencies, samples, BTreeMap::new())
}

/// Serializes a sweep back to its CSV form. Floats use Rust's shortest
/// round-trip formatting, so `parse_sweep(serialize_sweep(s))` is bit-exact.
pub fn serialize_sweep(sweep: &ImpedanceSweep) -> String {
    let mut out = String::with_capacity(24 * sweep.len() + SWEEP_HEADER.len() + 1);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (f, z) in sweep.frequencies().iter().zip(sweep.samples()) {
        let _ = writeln!(out, "{f},{},{}", z.re, z.im);
    }
    out
}

/// Polar view of one sample: magnitude in ohms, angle in radians in (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarSample {
    pub frequency: f64,
    pub magnitude: f64,
    pub angle: f64,
}

/// Elementwise polar conversion, order preserved. Zero impedance gets
/// angle 0 by convention; atan2's -pi branch is mapped to +pi.
pub fn to_polar(sweep: &ImpedanceSweep) -> Vec<PolarSample> {
    sweep
        .frequencies()
        .iter()
        .zip(sweep.samples())
        .map(|(&frequency, z)| {
            let magnitude = z.norm();
            let angle = if magnitude == 0.0 {
                0.0
            } else {
                let a = z.im.atan2(z.re);
                if a == -PI {
                    PI
                } else {
                    a
                }
            };
            PolarSample {
                frequency,
                magnitude,
                angle,
            }
        })
        .collect()
}

/// Maximal closed intervals `[f_lo, f_hi]` where the reactance is negative.
/// Boundary crossings are refined by linear interpolation between the two
/// bracketing samples; intervals touching the sweep edges use the edge
/// frequency directly.
pub fn negative_reactance_ranges(sweep: &ImpedanceSweep) -> Vec<(f64, f64)> {
    let freqs = sweep.frequencies();
    let xs: Vec<f64> = sweep.samples().iter().map(|z| z.im).collect();
    let cross = |i: usize| -> f64 {
        // zero of the segment between samples i-1 and i
        let (f0, f1) = (freqs[i - 1], freqs[i]);
        let (x0, x1) = (xs[i - 1], xs[i]);
        f0 + x0 * (f1 - f0) / (x0 - x1)
    };

    let mut ranges = Vec::new();
    let mut start: Option<f64> = if xs[0] < 0.0 { Some(freqs[0]) } else { None };
    for i in 1..xs.len() {
        match (start, xs[i] < 0.0) {
            (None, true) => start = Some(cross(i)),
            (Some(lo), false) => {
                ranges.push((lo, cross(i)));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(lo) = start {
        ranges.push((lo, *freqs.last().unwrap()));
    }
    ranges
}

/// Per-frequency min/max |Z| across a snapshot set on a common grid.
#[derive(Debug, Clone)]
pub struct EnvelopeStats {
    pub frequencies: Vec<f64>,
    pub z_min: Vec<f64>,
    pub z_max: Vec<f64>,
    /// z_max / z_min; +inf marker wherever z_min == 0.
    pub spread_ratio: Vec<f64>,
    /// Maximum finite spread ratio and its frequency; None when every
    /// grid point has z_min == 0.
    pub worst_ratio: Option<(f64, f64)>,
}

impl EnvelopeStats {
    /// `freq_hz,zmin_ohm,zmax_ohm,ratio` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,zmin_ohm,zmax_ohm,ratio\n");
        for i in 0..self.frequencies.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.frequencies[i], self.z_min[i], self.z_max[i], self.spread_ratio[i]
            );
        }
        out
    }
}

/// Envelope of |Z| across snapshots on the intersection grid stepped at
/// `grid_step`, interpolating R and X separately per snapshot.
pub fn envelope(sweeps: &[ImpedanceSweep], grid_step: f64) -> Result<EnvelopeStats, IngestError> {
    if sweeps.len() < 2 {
        return Err(IngestError::InsufficientSnapshots {
            needed: 2,
            got: sweeps.len(),
        });
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(IngestError::InvalidGridStep(grid_step));
    }
    let (lo, hi) = intersection_range(sweeps)?;

    let mut frequencies = Vec::new();
    let mut k = 0u64;
    loop {
        let f = lo + k as f64 * grid_step;
        if f > hi * (1.0 + 1e-12) {
            break;
        }
        frequencies.push(f.min(hi));
        k += 1;
    }

    let n = frequencies.len();
    let mut z_min = vec![f64::INFINITY; n];
    let mut z_max = vec![0.0f64; n];
    for sweep in sweeps {
        for (i, &f) in frequencies.iter().enumerate() {
            let mag = sweep.interpolate(f).norm();
            z_min[i] = z_min[i].min(mag);
            z_max[i] = z_max[i].max(mag);
        }
    }

    let spread_ratio: Vec<f64> = z_min
        .iter()
        .zip(&z_max)
        .map(|(&lo, &hi)| if lo > 0.0 { hi / lo } else { f64::INFINITY })
        .collect();
    let worst_ratio = frequencies
        .iter()
        .zip(&spread_ratio)
        .filter(|(_, r)| r.is_finite())
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(&f, &r)| (f, r));

    Ok(EnvelopeStats {
        frequencies,
        z_min,
        z_max,
        spread_ratio,
        worst_ratio,
    })
}

/// Robust per-snapshot deviation score and flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierScore {
    pub snapshot_id: String,
    /// Median over frequency of |log10|Z_s| - per-frequency median log10|Z||.
    pub score: f64,
    pub flagged: bool,
}

/// Scores every snapshot against the per-frequency median log-magnitude of
/// the set and flags those whose median deviation exceeds `threshold`.
/// The comparison grid is the union of all sample frequencies inside the
/// snapshots' intersection range.
pub fn flag_outliers(
    sweeps: &[ImpedanceSweep],
    threshold: f64,
) -> Result<Vec<OutlierScore>, IngestError> {
    if sweeps.len() < 3 {
        return Err(IngestError::InsufficientSnapshots {
            needed: 3,
            got: sweeps.len(),
        });
    }
    let (lo, hi) = intersection_range(sweeps)?;

    let mut grid: Vec<f64> = sweeps
        .iter()
        .flat_map(|s| s.frequencies().iter().copied())
        .filter(|&f| f >= lo && f <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    // log-magnitude per snapshot per grid point
    let logs: Vec<Vec<f64>> = sweeps
        .iter()
        .map(|s| {
            grid.iter()
                .map(|&f| s.interpolate(f).norm().max(f64::MIN_POSITIVE).log10())
                .collect()
        })
        .collect();

    let medians: Vec<f64> = (0..grid.len())
        .map(|i| median(logs.iter().map(|row| row[i])))
        .collect();

    Ok(sweeps
        .iter()
        .zip(&logs)
        .map(|(sweep, row)| {
            let score = median(row.iter().zip(&medians).map(|(v, m)| (v - m).abs()));
            OutlierScore {
                snapshot_id: sweep.snapshot_id().to_string(),
                score,
                flagged: score > threshold,
            }
        })
        .collect())
}

/// One entry of a sweep-set manifest: snapshot id, CSV path, free-form meta.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: String,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

/// Parses a manifest: a JSON array of `{ "id", "path", "meta" }` objects.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::BadManifest(e.to_string()))
}

fn intersection_range(sweeps: &[ImpedanceSweep]) -> Result<(f64, f64), IngestError> {
    let lo = sweeps
        .iter()
        .map(|s| s.range().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = sweeps.iter().map(|s| s.range().1).fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(IngestError::GridOutsideSweepRange { lo, hi });
    }
    Ok((lo, hi))
}

/// Linear interpolation of a complex-valued table, separately in re and im.
pub(crate) fn interp_complex(freqs: &[f64], samples: &[Complex64], f: f64) -> Complex64 {
    debug_assert!(f >= freqs[0] && f <= *freqs.last().unwrap());
    let idx = freqs.partition_point(|&g| g < f);
    if idx == 0 {
        return samples[0];
    }
    if idx >= freqs.len() {
        return *samples.last().unwrap();
    }
    if freqs[idx] == f {
        return samples[idx];
    }
    let (f0, f1) = (freqs[idx - 1], freqs[idx]);
    let t = (f - f0) / (f1 - f0);
    samples[idx - 1] + (samples[idx] - samples[idx - 1]) * t
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sweep_from(freqs: &[f64], zs: &[(f64, f64)]) -> ImpedanceSweep {
        ImpedanceSweep::new(
            "t",
            freqs.to_vec(),
            zs.iter().map(|&(r, x)| Complex64::new(r, x)).collect(),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn parse_two_point_sweep() {
        let sweep = parse_sweep("freq_hz,r_ohm,x_ohm\n50,1.0,3.0\n100,1.2,6.1", "s1").unwrap();
        assert_eq!(sweep.len(), 2);
        assert_eq!(sweep.samples()[0], Complex64::new(1.0, 3.0));
        assert_eq!(sweep.frequencies(), &[50.0, 100.0]);
    }

    #[test]
    fn parse_rejects_unsorted_rows() {
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n100,1,0\n50,1,0", "s").unwrap_err();
        match err {
            IngestError::NonMonotonicFrequency { line, prev, freq } => {
                assert_eq!(line, 3);
                assert_eq!(prev, 100.0);
                assert_eq!(freq, 50.0);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_nan_sample() {
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n50,1.0,NaN\n100,1,0", "s").unwrap_err();
        assert!(matches!(err, IngestError::NonFiniteSample { line: 2 }));
    }

    #[test]
    fn parse_rejects_duplicate_frequency() {
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n50,1,0\n50,2,0", "s").unwrap_err();
        assert!(matches!(err, IngestError::DuplicateFrequency { .. }));
    }

    #[test]
    fn parse_rejects_bad_numeric_and_short_rows() {
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n50,abc,0", "s").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { line: 2, .. }));
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n50,1", "s").unwrap_err();
        assert!(matches!(err, IngestError::MalformedRow { .. }));
    }

    #[test]
    fn parse_rejects_single_row() {
        let err = parse_sweep("freq_hz,r_ohm,x_ohm\n50,1,0", "s").unwrap_err();
        assert!(matches!(err, IngestError::EmptySweep { .. }));
    }

    #[test]
    fn parse_range_check_and_extension() {
        let text = "freq_hz,r_ohm,x_ohm\n50,1,0\n1500,1,0";
        let err = parse_sweep(text, "s").unwrap_err();
        assert!(matches!(err, IngestError::FrequencyOutOfRange { freq, .. } if freq == 1500.0));
        let opts = ParseOptions {
            allow_extended: true,
            ..Default::default()
        };
        assert!(parse_sweep_with(text, "s", &opts).is_ok());
    }

    #[test]
    fn parse_accepts_crlf() {
        let sweep = parse_sweep("freq_hz,r_ohm,x_ohm\r\n50,1,0\r\n100,2,1\r\n", "s").unwrap();
        assert_eq!(sweep.len(), 2);
    }

    #[test]
    fn polar_345_triangle() {
        let polar = to_polar(&sweep_from(&[50.0, 100.0], &[(3.0, 4.0), (1.0, 0.0)]));
        assert_relative_eq!(polar[0].magnitude, 5.0);
        assert_relative_eq!(polar[0].angle, (4.0f64).atan2(3.0));
    }

    #[test]
    fn polar_branch_cut_and_zero() {
        let polar = to_polar(&sweep_from(&[1.0, 2.0], &[(-1.0, 0.0), (0.0, 0.0)]));
        assert_relative_eq!(polar[0].magnitude, 1.0);
        assert_relative_eq!(polar[0].angle, PI);
        assert_eq!(polar[1].magnitude, 0.0);
        assert_eq!(polar[1].angle, 0.0);
        // the -0.0 branch must also land on +pi
        let polar = to_polar(&sweep_from(&[1.0, 2.0], &[(-1.0, -0.0), (1.0, 0.0)]));
        assert_relative_eq!(polar[0].angle, PI);
    }

    #[test]
    fn negative_reactance_interior_interval() {
        let sweep = sweep_from(
            &[100.0, 200.0, 300.0, 400.0],
            &[(1.0, 1.0), (1.0, -1.0), (1.0, -2.0), (1.0, 1.0)],
        );
        let ranges = negative_reactance_ranges(&sweep);
        assert_eq!(ranges.len(), 1);
        // crossings by hand: +1 -> -1 over 100 Hz gives 150 Hz;
        // -2 -> +1 over 100 Hz gives 300 + 100 * 2/3 Hz.
        assert_relative_eq!(ranges[0].0, 150.0, max_relative = 1e-12);
        assert_relative_eq!(ranges[0].1, 1100.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn negative_reactance_all_positive_and_all_negative() {
        let sweep = sweep_from(&[1.0, 2.0], &[(1.0, 1.0), (1.0, 2.0)]);
        assert!(negative_reactance_ranges(&sweep).is_empty());
        let sweep = sweep_from(&[1.0, 2.0], &[(1.0, -1.0), (1.0, -2.0)]);
        assert_eq!(negative_reactance_ranges(&sweep), vec![(1.0, 2.0)]);
    }

    #[test]
    fn envelope_flat_ratio_20() {
        let a = sweep_from(&[0.0, 1000.0], &[(1.0, 0.0), (1.0, 0.0)]);
        let b = sweep_from(&[0.0, 1000.0], &[(20.0, 0.0), (20.0, 0.0)]);
        let env = envelope(&[a, b], 100.0).unwrap();
        for &r in &env.spread_ratio {
            assert_relative_eq!(r, 20.0);
        }
        assert_relative_eq!(env.worst_ratio.unwrap().1, 20.0);
    }

    #[test]
    fn envelope_identical_sweeps_ratio_one() {
        let a = sweep_from(&[0.0, 500.0, 1000.0], &[(1.0, 2.0), (3.0, -1.0), (0.5, 4.0)]);
        let env = envelope(&[a.clone(), a], 50.0).unwrap();
        for &r in &env.spread_ratio {
            assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn envelope_needs_two_snapshots_and_overlap() {
        let a = sweep_from(&[0.0, 10.0], &[(1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            envelope(&[a.clone()], 1.0),
            Err(IngestError::InsufficientSnapshots { needed: 2, .. })
        ));
        let b = sweep_from(&[20.0, 30.0], &[(1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            envelope(&[a, b], 1.0),
            Err(IngestError::GridOutsideSweepRange { .. })
        ));
    }

    #[test]
    fn outlier_identical_sweeps_score_zero() {
        let a = sweep_from(&[1.0, 2.0, 3.0], &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let scores = flag_outliers(&[a.clone(), a.clone(), a.clone(), a.clone(), a], 0.5).unwrap();
        assert!(scores.iter().all(|s| s.score == 0.0 && !s.flagged));
    }

    #[test]
    fn outlier_ten_times_scaled_scores_one() {
        let base = sweep_from(&[1.0, 2.0, 3.0], &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]);
        let scaled = sweep_from(&[1.0, 2.0, 3.0], &[(10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        let mut set = vec![base.clone(), base.clone(), base.clone(), base];
        set.push(scaled);
        let scores = flag_outliers(&set, DEFAULT_OUTLIER_THRESHOLD).unwrap();
        assert_relative_eq!(scores[4].score, 1.0, max_relative = 1e-12);
        assert!(scores[4].flagged);
        assert!(scores[..4].iter().all(|s| !s.flagged));
    }

    #[test]
    fn outlier_needs_three_snapshots() {
        let a = sweep_from(&[1.0, 2.0], &[(1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            flag_outliers(&[a.clone(), a], 0.5),
            Err(IngestError::InsufficientSnapshots { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn serialize_parse_round_trip_is_bit_exact() {
        let sweep = sweep_from(
            &[0.1234567890123456, 500.0, 999.9999999],
            &[(1.0e-7, -3.25), (0.1 + 0.2, 6.1), (19.99999999999999, -0.0)],
        );
        let back = parse_sweep(&serialize_sweep(&sweep), "t").unwrap();
        assert_eq!(back.frequencies(), sweep.frequencies());
        for (a, b) in back.samples().iter().zip(sweep.samples()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn manifest_parses() {
        let entries =
            parse_manifest(r#"[{"id":"a","path":"a.csv","meta":{"bus":"PCC"}},{"id":"b","path":"b.csv"}]"#)
                .unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].id, "a");
        assert!(entries[1].meta.is_empty());
        assert!(parse_manifest("{not a list}").is_err());
    }
}
