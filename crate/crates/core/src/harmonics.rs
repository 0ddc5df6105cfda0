//! Harmonic spectra, PCC propagation, and limit-table compliance.
//!
//! Spectra carry a unit tag (voltage or current) because the two
//! magnification mechanisms differ: current sources inject into the node
//! (parallel resonance converts current to voltage), voltage sources sit
//! behind a branch and divide (series resonance sinks them). Compliance is
//! magnitude-only and sparse: orders without a configured limit are
//! reported as unbounded rather than silently constrained.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{
    pcc_background_voltage, pcc_current_injection, HarmonicNetwork, NetworkError,
};

#[derive(Debug, Error)]
pub enum HarmonicsError {
    #[error("spectrum has no fundamental (order 1) entry")]
    MissingFundamental,
    #[error("fundamental amplitude is zero")]
    ZeroFundamental,
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),
    #[error("bad spectrum file: {0}")]
    BadSpectrum(String),
    #[error("bad limit table: {0}")]
    BadLimits(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumUnit {
    Voltage,
    Current,
}

/// Per-order complex amplitudes over a fundamental frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    f1_hz: f64,
    unit: SpectrumUnit,
    entries: BTreeMap<u32, Complex64>,
}

impl HarmonicSpectrum {
    pub fn new(
        f1_hz: f64,
        unit: SpectrumUnit,
        entries: BTreeMap<u32, Complex64>,
    ) -> Result<Self, HarmonicsError> {
        if !(f1_hz.is_finite() && f1_hz > 0.0) {
            return Err(HarmonicsError::BadSpectrum(format!(
                "fundamental frequency must be positive, got {f1_hz}"
            )));
        }
        for (&order, amp) in &entries {
            if order == 0 {
                return Err(HarmonicsError::BadSpectrum("order 0 entry".into()));
            }
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(HarmonicsError::BadSpectrum(format!(
                    "non-finite amplitude at order {order}"
                )));
            }
        }
        Ok(Self {
            f1_hz,
            unit,
            entries,
        })
    }

    pub fn f1_hz(&self) -> f64 {
        self.f1_hz
    }

    pub fn unit(&self) -> SpectrumUnit {
        self.unit
    }

    pub fn entries(&self) -> &BTreeMap<u32, Complex64> {
        &self.entries
    }

    pub fn fundamental(&self) -> Option<Complex64> {
        self.entries.get(&1).copied()
    }

    /// `order,amp_real,amp_imag` CSV body.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,amp_real,amp_imag\n");
        for (order, amp) in &self.entries {
            let _ = writeln!(out, "{order},{},{}", amp.re, amp.im);
        }
        out
    }

    /// JSON sidecar carrying the fundamental frequency and unit tag.
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumSidecar {
            f1_hz: self.f1_hz,
            unit: self.unit,
        })
        .expect("sidecar serializes")
    }

    /// Parses the CSV + sidecar pair written by [`Self::to_csv`] and
    /// [`Self::sidecar_json`].
    pub fn parse(csv: &str, sidecar: &str) -> Result<Self, HarmonicsError> {
        let meta: SpectrumSidecar = serde_json::from_str(sidecar)
            .map_err(|e| HarmonicsError::BadSpectrum(format!("sidecar: {e}")))?;
        let mut lines = csv.lines();
        match lines.next().map(str::trim) {
            Some("order,amp_real,amp_imag") => {}
            _ => {
                return Err(HarmonicsError::BadSpectrum(
                    "missing `order,amp_real,amp_imag` header".into(),
                ))
            }
        }
        let mut entries = BTreeMap::new();
        for (idx, raw) in lines.enumerate() {
            let line = idx + 2;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            let fields: Vec<&str> = row.split(',').collect();
            if fields.len() != 3 {
                return Err(HarmonicsError::BadSpectrum(format!(
                    "line {line}: expected 3 fields"
                )));
            }
            let order: u32 = fields[0].trim().parse().map_err(|_| {
                HarmonicsError::BadSpectrum(format!("line {line}: bad order `{}`", fields[0]))
            })?;
            let re: f64 = fields[1]
                .trim()
                .parse()
                .map_err(|_| HarmonicsError::BadSpectrum(format!("line {line}: bad amplitude")))?;
            let im: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| HarmonicsError::BadSpectrum(format!("line {line}: bad amplitude")))?;
            if entries.insert(order, Complex64::new(re, im)).is_some() {
                return Err(HarmonicsError::BadSpectrum(format!(
                    "line {line}: duplicate order {order}"
                )));
            }
        }
        Self::new(meta.f1_hz, meta.unit, entries)
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumSidecar {
    f1_hz: f64,
    unit: SpectrumUnit,
}

/// Per-order percentage limits; sparse, with a label naming the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTable {
    pub source_label: String,
    pub limits: BTreeMap<u32, f64>,
}

impl LimitTable {
    /// Built-in table: the single third-harmonic 3 % limit. Every other
    /// order is unconstrained unless a user table supplies it.
    pub fn builtin() -> Self {
        Self {
            source_label: "builtin third-harmonic 3 %".into(),
            limits: BTreeMap::from([(3, 3.0)]),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarmonicsError> {
        let table: Self =
            serde_json::from_str(text).map_err(|e| HarmonicsError::BadLimits(e.to_string()))?;
        for (&order, &limit) in &table.limits {
            if order == 0 || !(limit.is_finite() && limit > 0.0) {
                return Err(HarmonicsError::BadLimits(format!(
                    "order {order}: limit must be a positive percentage, got {limit}"
                )));
            }
        }
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("limit table serializes")
    }
}

/// Where a source sits relative to the PCC node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceLocation {
    GridSide,
    InverterSide,
}

/// Propagation mechanism through the node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    /// Current injected at the node (current sources, either side).
    Injection,
    /// Voltage divider with the grid branch as source branch.
    BackgroundGridSide,
    /// Voltage divider mirrored: the inverter branch is the source branch.
    BackgroundInverterSide,
}

/// Result of propagating a spectrum: a PCC voltage spectrum for the orders
/// that evaluated, plus per-order failure markers for the rest.
#[derive(Debug, Clone)]
pub struct Propagated {
    pub spectrum: HarmonicSpectrum,
    pub failed_orders: BTreeMap<u32, String>,
}

/// Propagates with the mechanism inferred from the unit tag and location:
/// current sources inject; grid-side voltage divides through the grid
/// branch; inverter-side voltage mirrors the divider.
pub fn propagate(
    source: &HarmonicSpectrum,
    net: &HarmonicNetwork,
    location: SourceLocation,
) -> Result<Propagated, HarmonicsError> {
    let mechanism = match (source.unit(), location) {
        (SpectrumUnit::Current, _) => Mechanism::Injection,
        (SpectrumUnit::Voltage, SourceLocation::GridSide) => Mechanism::BackgroundGridSide,
        (SpectrumUnit::Voltage, SourceLocation::InverterSide) => Mechanism::BackgroundInverterSide,
    };
    propagate_mechanism(source, net, mechanism)
}

/// Propagates with an explicit mechanism; combinations that make no
/// physical sense (current through a voltage divider and vice versa) are
/// rejected.
pub fn propagate_mechanism(
    source: &HarmonicSpectrum,
    net: &HarmonicNetwork,
    mechanism: Mechanism,
) -> Result<Propagated, HarmonicsError> {
    match (source.unit(), mechanism) {
        (SpectrumUnit::Current, Mechanism::Injection) => {}
        (SpectrumUnit::Voltage, Mechanism::BackgroundGridSide)
        | (SpectrumUnit::Voltage, Mechanism::BackgroundInverterSide) => {}
        (SpectrumUnit::Current, _) => {
            return Err(HarmonicsError::UnsupportedCombination(
                "current source with background-divider semantics".into(),
            ))
        }
        (SpectrumUnit::Voltage, Mechanism::Injection) => {
            return Err(HarmonicsError::UnsupportedCombination(
                "voltage source with injection semantics".into(),
            ))
        }
    }

    let mirrored = HarmonicNetwork {
        z_grid: net.z_inv.clone(),
        z_inv: net.z_grid.clone(),
        z_shunt: net.z_shunt.clone(),
    };

    let mut entries = BTreeMap::new();
    let mut failed_orders = BTreeMap::new();
    for (&order, &amp) in source.entries() {
        let f = source.f1_hz() * order as f64;
        let v_pcc = match mechanism {
            Mechanism::Injection => pcc_current_injection(net, amp, f).map(|r| r.v_pcc),
            Mechanism::BackgroundGridSide => pcc_background_voltage(net, amp, f).map(|r| r.v_pcc),
            Mechanism::BackgroundInverterSide => {
                pcc_background_voltage(&mirrored, amp, f).map(|r| r.v_pcc)
            }
        };
        match v_pcc {
            Ok(v) => {
                entries.insert(order, v);
            }
            Err(e) => {
                failed_orders.insert(order, e.to_string());
            }
        }
    }
    Ok(Propagated {
        spectrum: HarmonicSpectrum::new(source.f1_hz(), SpectrumUnit::Voltage, entries)?,
        failed_orders,
    })
}

/// 100 |A_h| / |A_1| for every order h >= 2.
pub fn percent_of_fundamental(
    spec: &HarmonicSpectrum,
) -> Result<BTreeMap<u32, f64>, HarmonicsError> {
    let fund = spec
        .fundamental()
        .ok_or(HarmonicsError::MissingFundamental)?;
    let fund_mag = fund.norm();
    if fund_mag == 0.0 {
        return Err(HarmonicsError::ZeroFundamental);
    }
    Ok(spec
        .entries()
        .iter()
        .filter(|(&order, _)| order >= 2)
        .map(|(&order, amp)| (order, 100.0 * amp.norm() / fund_mag))
        .collect())
}

/// Total harmonic distortion up to `max_order`, percent of fundamental.
pub fn thd(spec: &HarmonicSpectrum, max_order: u32) -> Result<f64, HarmonicsError> {
    let fund = spec
        .fundamental()
        .ok_or(HarmonicsError::MissingFundamental)?;
    let fund_mag = fund.norm();
    if fund_mag == 0.0 {
        return Err(HarmonicsError::ZeroFundamental);
    }
    let sum_sq: f64 = spec
        .entries()
        .iter()
        .filter(|(&h, _)| h >= 2 && h <= max_order)
        .map(|(_, amp)| amp.norm_sqr())
        .sum();
    Ok(100.0 * sum_sq.sqrt() / fund_mag)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowVerdict {
    Pass,
    Fail,
    /// No limit configured for this order.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceRow {
    pub order: u32,
    pub percent: f64,
    pub limit: Option<f64>,
    /// limit - percent; present iff a limit is.
    pub margin: Option<f64>,
    pub verdict: RowVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub source_label: String,
    pub rows: Vec<ComplianceRow>,
    pub overall_pass: bool,
    /// Largest positive excess over a limit, if any row fails.
    pub worst_violation: Option<(u32, f64)>,
}

impl ComplianceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "limits: {}", self.source_label);
        let _ = writeln!(
            out,
            "{:>5}  {:>10}  {:>10}  {:>10}  verdict",
            "order", "percent", "limit", "margin"
        );
        for row in &self.rows {
            let limit = row
                .limit
                .map(|l| format!("{l:.3}"))
                .unwrap_or_else(|| "-".into());
            let margin = row
                .margin
                .map(|m| format!("{m:+.3}"))
                .unwrap_or_else(|| "-".into());
            let verdict = match row.verdict {
                RowVerdict::Pass => "pass",
                RowVerdict::Fail => "FAIL",
                RowVerdict::Unbounded => "no limit",
            };
            let _ = writeln!(
                out,
                "{:>5}  {:>10.4}  {:>10}  {:>10}  {}",
                row.order, row.percent, limit, margin, verdict
            );
        }
        match (self.overall_pass, self.worst_violation) {
            (true, _) => {
                let _ = writeln!(out, "overall: pass");
            }
            (false, Some((order, excess))) => {
                let _ = writeln!(
                    out,
                    "overall: FAIL (worst: order {order} exceeds limit by {excess:.3} points)"
                );
            }
            (false, None) => {
                let _ = writeln!(out, "overall: FAIL");
            }
        }
        out
    }
}

/// Checks per-order percentages against a limit table. A row fails only on
/// a strict exceedance (equality passes); orders absent from the table are
/// unbounded and cannot fail.
pub fn check_compliance(percents: &BTreeMap<u32, f64>, limits: &LimitTable) -> ComplianceReport {
    let mut rows = Vec::with_capacity(percents.len());
    let mut worst: Option<(u32, f64)> = None;
    for (&order, &percent) in percents {
        let limit = limits.limits.get(&order).copied();
        let (margin, verdict) = match limit {
            Some(l) => {
                let verdict = if percent > l {
                    RowVerdict::Fail
                } else {
                    RowVerdict::Pass
                };
                (Some(l - percent), verdict)
            }
            None => (None, RowVerdict::Unbounded),
        };
        if verdict == RowVerdict::Fail {
            let excess = percent - limit.unwrap();
            if worst.map(|(_, w)| excess > w).unwrap_or(true) {
                worst = Some((order, excess));
            }
        }
        rows.push(ComplianceRow {
            order,
            percent,
            limit,
            margin,
            verdict,
        });
    }
    ComplianceReport {
        source_label: limits.source_label.clone(),
        overall_pass: rows.iter().all(|r| r.verdict != RowVerdict::Fail),
        worst_violation: worst,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ImpedanceExpr;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn spectrum(unit: SpectrumUnit, entries: &[(u32, f64, f64)]) -> HarmonicSpectrum {
        HarmonicSpectrum::new(
            50.0,
            unit,
            entries
                .iter()
                .map(|&(h, re, im)| (h, Complex64::new(re, im)))
                .collect(),
        )
        .unwrap()
    }

    fn resistive_net(r: f64) -> HarmonicNetwork {
        // two 2r branches in parallel give r at the node
        HarmonicNetwork {
            z_grid: ImpedanceExpr::Resistor(2.0 * r),
            z_inv: ImpedanceExpr::Resistor(2.0 * r),
            z_shunt: ImpedanceExpr::Open,
        }
    }

    #[test]
    fn propagate_flat_network_preserves_percentages() {
        let src = spectrum(SpectrumUnit::Current, &[(1, 1.0, 0.0), (3, 0.01, 0.0)]);
        let out = propagate(&src, &resistive_net(5.0), SourceLocation::GridSide).unwrap();
        assert!(out.failed_orders.is_empty());
        let v1 = out.spectrum.entries()[&1];
        let v3 = out.spectrum.entries()[&3];
        assert_relative_eq!(v1.norm(), 5.0, max_relative = 1e-12);
        assert_relative_eq!(v3.norm(), 0.05, max_relative = 1e-12);
        let pct = percent_of_fundamental(&out.spectrum).unwrap();
        assert_relative_eq!(pct[&3], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn propagate_tank_magnifies_third_harmonic() {
        // tank resonant at 150 Hz; expected gain computed by direct
        // evaluation of the node impedance at both frequencies
        let c = 20e-6;
        let l = 1.0 / ((2.0 * PI * 150.0).powi(2) * c);
        let r = 35.0 * (l / c).sqrt();
        let net = HarmonicNetwork {
            z_grid: ImpedanceExpr::parallel(vec![
                ImpedanceExpr::Resistor(r),
                ImpedanceExpr::Inductor(l),
                ImpedanceExpr::Capacitor(c),
            ]),
            z_inv: ImpedanceExpr::Open,
            z_shunt: ImpedanceExpr::Open,
        };
        let z_at = |f: f64| net.node_impedance(f).unwrap().norm();
        let ratio = z_at(150.0) / z_at(50.0);
        assert!(ratio > 30.0, "tank ratio {ratio}");

        let src = spectrum(SpectrumUnit::Current, &[(1, 1.0, 0.0), (3, 0.01, 0.0)]);
        let out = propagate(&src, &net, SourceLocation::GridSide).unwrap();
        let pct = percent_of_fundamental(&out.spectrum).unwrap();
        assert_relative_eq!(pct[&3], 1.0 * ratio, max_relative = 1e-9);
    }

    #[test]
    fn propagate_fundamental_only_stays_fundamental_only() {
        let src = spectrum(SpectrumUnit::Current, &[(1, 2.0, 0.0)]);
        let out = propagate(&src, &resistive_net(1.0), SourceLocation::GridSide).unwrap();
        assert_eq!(out.spectrum.entries().len(), 1);
    }

    #[test]
    fn propagate_is_linear_in_the_source() {
        let net = HarmonicNetwork {
            z_grid: ImpedanceExpr::series(vec![
                ImpedanceExpr::Resistor(0.4),
                ImpedanceExpr::Inductor(1e-4),
            ]),
            z_inv: ImpedanceExpr::Inductor(2e-3),
            z_shunt: ImpedanceExpr::Capacitor(50e-6),
        };
        let k = Complex64::new(-1.7, 0.4);
        let base = spectrum(SpectrumUnit::Current, &[(1, 1.0, 0.0), (5, 0.2, -0.1)]);
        let scaled = HarmonicSpectrum::new(
            50.0,
            SpectrumUnit::Current,
            base.entries().iter().map(|(&h, &a)| (h, a * k)).collect(),
        )
        .unwrap();
        let out_base = propagate(&base, &net, SourceLocation::GridSide).unwrap();
        let out_scaled = propagate(&scaled, &net, SourceLocation::GridSide).unwrap();
        for (&h, &v) in out_base.spectrum.entries() {
            let vs = out_scaled.spectrum.entries()[&h];
            assert!((vs - v * k).norm() <= 1e-12 * vs.norm().max(1e-12));
        }
    }

    #[test]
    fn voltage_source_uses_divider_and_mirrors() {
        let net = HarmonicNetwork {
            z_grid: ImpedanceExpr::Resistor(1.0),
            z_inv: ImpedanceExpr::Resistor(3.0),
            z_shunt: ImpedanceExpr::Open,
        };
        let src = spectrum(SpectrumUnit::Voltage, &[(1, 1.0, 0.0)]);
        let grid_side = propagate(&src, &net, SourceLocation::GridSide).unwrap();
        assert_relative_eq!(
            grid_side.spectrum.entries()[&1].re,
            0.75,
            max_relative = 1e-12
        );
        let inv_side = propagate(&src, &net, SourceLocation::InverterSide).unwrap();
        assert_relative_eq!(
            inv_side.spectrum.entries()[&1].re,
            0.25,
            max_relative = 1e-12
        );
    }

    #[test]
    fn unsupported_combinations_rejected() {
        let src = spectrum(SpectrumUnit::Current, &[(1, 1.0, 0.0)]);
        let err = propagate_mechanism(&src, &resistive_net(1.0), Mechanism::BackgroundGridSide)
            .unwrap_err();
        assert!(matches!(err, HarmonicsError::UnsupportedCombination(_)));
        let v = spectrum(SpectrumUnit::Voltage, &[(1, 1.0, 0.0)]);
        assert!(matches!(
            propagate_mechanism(&v, &resistive_net(1.0), Mechanism::Injection),
            Err(HarmonicsError::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn propagate_marks_degenerate_orders() {
        let net = HarmonicNetwork {
            z_grid: ImpedanceExpr::Open,
            z_inv: ImpedanceExpr::Open,
            z_shunt: ImpedanceExpr::Open,
        };
        let src = spectrum(SpectrumUnit::Current, &[(1, 1.0, 0.0)]);
        let out = propagate(&src, &net, SourceLocation::GridSide).unwrap();
        assert!(out.spectrum.entries().is_empty());
        assert!(out.failed_orders.contains_key(&1));
    }

    #[test]
    fn percent_of_fundamental_seven_percent_case() {
        let spec = spectrum(SpectrumUnit::Voltage, &[(1, 100.0, 0.0), (3, 7.0, 0.0)]);
        let pct = percent_of_fundamental(&spec).unwrap();
        assert_relative_eq!(pct[&3], 7.0, max_relative = 1e-12);
    }

    #[test]
    fn percent_zero_amplitude_and_scaling_invariance() {
        let spec = spectrum(SpectrumUnit::Voltage, &[(1, 3.0, 4.0), (5, 0.0, 0.0)]);
        let pct = percent_of_fundamental(&spec).unwrap();
        assert_eq!(pct[&5], 0.0);

        let scaled = spectrum(SpectrumUnit::Voltage, &[(1, 30.0, 40.0), (5, 0.0, 0.0)]);
        assert_eq!(
            percent_of_fundamental(&scaled).unwrap(),
            percent_of_fundamental(&spec).unwrap()
        );
    }

    #[test]
    fn percent_errors() {
        let no_fund = spectrum(SpectrumUnit::Voltage, &[(3, 1.0, 0.0)]);
        assert!(matches!(
            percent_of_fundamental(&no_fund),
            Err(HarmonicsError::MissingFundamental)
        ));
        let zero = spectrum(SpectrumUnit::Voltage, &[(1, 0.0, 0.0), (3, 1.0, 0.0)]);
        assert!(matches!(
            percent_of_fundamental(&zero),
            Err(HarmonicsError::ZeroFundamental)
        ));
    }

    #[test]
    fn compliance_seven_vs_three_fails_by_four_points() {
        let report = check_compliance(&BTreeMap::from([(3, 7.0)]), &LimitTable::builtin());
        assert!(!report.overall_pass);
        assert_eq!(report.worst_violation, Some((3, 4.0)));
        assert_eq!(report.rows[0].margin, Some(-4.0));
        assert_eq!(report.rows[0].verdict, RowVerdict::Fail);
        assert!(report.to_text().contains("FAIL"));
    }

    #[test]
    fn compliance_equality_passes() {
        let report = check_compliance(&BTreeMap::from([(3, 3.0)]), &LimitTable::builtin());
        assert!(report.overall_pass);
        assert_eq!(report.rows[0].verdict, RowVerdict::Pass);
    }

    #[test]
    fn compliance_sparse_table_leaves_orders_unbounded() {
        let report = check_compliance(&BTreeMap::from([(5, 4.0)]), &LimitTable::builtin());
        assert!(report.overall_pass);
        assert_eq!(report.rows[0].verdict, RowVerdict::Unbounded);
        assert!(report.rows[0].limit.is_none());
        assert!(report.to_text().contains("no limit"));
    }

    #[test]
    fn thd_three_four_five() {
        let spec = spectrum(
            SpectrumUnit::Voltage,
            &[(1, 100.0, 0.0), (3, 3.0, 0.0), (4, 4.0, 0.0)],
        );
        assert_relative_eq!(thd(&spec, 40).unwrap(), 5.0, max_relative = 1e-12);
        let fund_only = spectrum(SpectrumUnit::Voltage, &[(1, 10.0, 0.0)]);
        assert_eq!(thd(&fund_only, 40).unwrap(), 0.0);
    }

    #[test]
    fn thd_squares_sum_to_percent_squares() {
        let spec = spectrum(
            SpectrumUnit::Voltage,
            &[(1, 10.0, -3.0), (2, 0.5, 0.2), (7, -0.4, 0.9), (13, 0.05, 0.0)],
        );
        let total = thd(&spec, 40).unwrap();
        let pct = percent_of_fundamental(&spec).unwrap();
        let sum_sq: f64 = pct.values().map(|p| p * p).sum();
        assert_relative_eq!(total * total, sum_sq, max_relative = 1e-9);
    }

    #[test]
    fn spectrum_files_round_trip() {
        let spec = spectrum(
            SpectrumUnit::Current,
            &[(1, 1.0, 0.0), (3, 0.01, -0.002), (5, 1e-4, 0.0)],
        );
        let back = HarmonicSpectrum::parse(&spec.to_csv(), &spec.sidecar_json()).unwrap();
        assert_eq!(back, spec);
        assert!(HarmonicSpectrum::parse("nope", "{}").is_err());
    }

    #[test]
    fn limit_table_json_round_trip_and_validation() {
        let t = LimitTable::builtin();
        let back = LimitTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let bad = r#"{"source_label": "x", "limits": {"3": -1.0}}"#;
        assert!(matches!(
            LimitTable::from_json(bad),
            Err(HarmonicsError::BadLimits(_))
        ));
    }
}
